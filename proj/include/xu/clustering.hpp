#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <functional>
#include <limits>
#include <random>
#include <span>
#include <string>
#include <vector>

#include "xu/errors.hpp"
#include "xu/vector_model.hpp"

namespace xu {

/// A non-empty set of word vectors treated as one OR-group candidate.
struct Cluster {
    std::vector<WordVector> members;
};

/// A partition of the input vectors into clusters, with its cached score.
struct Grouping {
    std::vector<Cluster> clusters;
    double score = 0.0;
};

/// Score of one cluster: magnitude of the member sum divided by the sum of
/// member magnitudes. 1 for same-direction members, 0 for perfectly
/// cancelling ones; always within [0, 1] (triangle inequality). The ratio is
/// clamped at 1 because rounding can land an ulp above on near-colinear sets.
inline double cluster_score(const Cluster& c) {
    if (c.members.empty()) {
        throw Error(ExitCode::expansion_error, "cluster_score: empty cluster");
    }
    const std::size_t dim = c.members.front().components.size();
    std::vector<double> sum(dim, 0.0);
    double magnitude_sum = 0.0;
    for (const auto& member : c.members) {
        if (member.components.size() != dim) {
            throw Error(ExitCode::expansion_error,
                        "cluster_score: dimension mismatch inside cluster");
        }
        double mag = vec_norm(member.components);
        if (mag == 0.0) {
            throw Error(ExitCode::expansion_error,
                        "cluster_score: zero-norm member \"" + member.token + "\"");
        }
        for (std::size_t j = 0; j < dim; ++j) sum[j] += member.components[j];
        magnitude_sum += mag;
    }
    return std::min(1.0, vec_norm(sum) / magnitude_sum);
}

/// Sum of cluster scores; the optimization objective. Bounded by the number
/// of clusters.
inline double group_score(const Grouping& g) {
    double total = 0.0;
    for (const auto& c : g.clusters) total += cluster_score(c);
    return total;
}

/// Number of set partitions of n elements into exactly m non-empty parts
/// (Stirling numbers of the second kind), saturating well below overflow.
inline unsigned long long partition_count(std::size_t n, std::size_t m) {
    if (n == 0 && m == 0) return 1;  // the empty partition
    if (m == 0 || m > n) return 0;
    constexpr unsigned long long kSat = std::numeric_limits<unsigned long long>::max() / 4;
    std::vector<unsigned long long> row(m + 1, 0);
    row[0] = 1;  // S(0,0)
    for (std::size_t i = 1; i <= n; ++i) {
        for (std::size_t k = std::min(i, m); k >= 1; --k) {
            if (row[k] >= kSat / (k + 1)) {
                row[k] = kSat;
            } else {
                row[k] = std::min(kSat, k * row[k] + row[k - 1]);
            }
        }
        row[0] = 0;
    }
    return row[m];
}

namespace detail {

// Canonical form: members sorted by input index inside each cluster, clusters
// ordered by their first member. Scores of identical partitions are then
// bit-identical regardless of which search produced them.
inline Grouping make_grouping(std::span<const WordVector> vectors,
                              std::vector<std::vector<std::size_t>> member_lists) {
    for (auto& list : member_lists) std::sort(list.begin(), list.end());
    std::sort(member_lists.begin(), member_lists.end(),
              [](const auto& a, const auto& b) { return a.front() < b.front(); });
    Grouping g;
    g.clusters.reserve(member_lists.size());
    for (const auto& list : member_lists) {
        Cluster c;
        c.members.reserve(list.size());
        for (std::size_t idx : list) c.members.push_back(vectors[idx]);
        g.clusters.push_back(std::move(c));
    }
    g.score = group_score(g);
    return g;
}

// Cluster score over an index list, optionally skipping one member or adding
// a tentative one. skip_index == vectors.size() means "skip nothing".
inline double score_indices(std::span<const WordVector> vectors,
                            const std::vector<std::size_t>& member_indices,
                            std::size_t skip_index, const WordVector* extra) {
    const std::size_t dim = vectors.front().components.size();
    std::vector<double> sum(dim, 0.0);
    double magnitude_sum = 0.0;
    std::size_t count = 0;
    auto add = [&](const WordVector& v) {
        for (std::size_t j = 0; j < dim; ++j) sum[j] += v.components[j];
        magnitude_sum += vec_norm(v.components);
        ++count;
    };
    for (std::size_t idx : member_indices) {
        if (idx == skip_index) continue;
        add(vectors[idx]);
    }
    if (extra != nullptr) add(*extra);
    if (count == 0) return 0.0;
    return std::min(1.0, vec_norm(sum) / magnitude_sum);
}

// Deterministic across standard libraries, unlike std::shuffle.
inline void fisher_yates(std::vector<std::size_t>& items, std::mt19937_64& rng) {
    for (std::size_t i = items.size(); i > 1; --i) {
        std::size_t j = static_cast<std::size_t>(rng() % i);
        std::swap(items[i - 1], items[j]);
    }
}

}  // namespace detail

struct OptimizeStats {
    double initial_score = 0.0;
    std::size_t accepted_moves = 0;
    std::size_t restarts = 0;
    // Accepted-move scores per climb (one entry per deal); strictly
    // increasing inside each climb.
    std::vector<std::vector<double>> climbs;
    std::vector<double> best_trace;  // monotone non-decreasing
};

/// Searches for the partition of `vectors` into m non-empty clusters with the
/// highest group score. Strict-improvement hill climbing over single-vector
/// moves, with stall-triggered restarts: once every proposal has been
/// rejected for long enough, one iteration re-deals a fresh seeded assignment
/// and the climb starts over. The best partition seen is kept and returned in
/// canonical order with a from-scratch score. Deterministic for a fixed
/// (vectors, m, iterations, seed).
inline Grouping optimize_grouping(std::span<const WordVector> vectors, std::size_t m,
                                  std::size_t iterations, std::uint64_t seed,
                                  OptimizeStats* stats = nullptr) {
    const std::size_t n = vectors.size();
    if (n == 0) throw Error(ExitCode::expansion_error, "optimize_grouping: no vectors");
    if (m < 1) throw Error(ExitCode::expansion_error, "optimize_grouping: m must be >= 1");
    if (m > n) {
        throw Error(ExitCode::expansion_error,
                    "optimize_grouping: m=" + std::to_string(m) + " exceeds vector count " +
                        std::to_string(n));
    }
    const std::size_t dim = vectors.front().components.size();
    for (const auto& v : vectors) {
        if (v.components.size() != dim) {
            throw Error(ExitCode::expansion_error, "optimize_grouping: mixed dimensions");
        }
    }

    std::mt19937_64 rng(seed);
    std::vector<std::size_t> assign(n, 0);
    std::vector<std::vector<std::size_t>> members(m);
    std::vector<double> cluster_scores(m, 0.0);
    double current = 0.0;

    // Round-robin over a seeded shuffle; every cluster non-empty when m <= n.
    auto deal = [&] {
        std::vector<std::size_t> order(n);
        for (std::size_t i = 0; i < n; ++i) order[i] = i;
        detail::fisher_yates(order, rng);
        for (auto& list : members) list.clear();
        for (std::size_t k = 0; k < n; ++k) {
            std::size_t cluster = k % m;
            members[cluster].push_back(order[k]);
            assign[order[k]] = cluster;
        }
        current = 0.0;
        for (std::size_t c = 0; c < m; ++c) {
            cluster_scores[c] = detail::score_indices(vectors, members[c], n, nullptr);
            current += cluster_scores[c];
        }
        if (stats != nullptr) stats->climbs.emplace_back();
    };

    deal();
    double best_score = current;
    std::vector<std::size_t> best_assign = assign;
    if (stats != nullptr) {
        stats->initial_score = current;
        stats->best_trace.push_back(best_score);
    }

    const std::size_t stall_limit = std::max<std::size_t>(64, 8 * n * (m > 1 ? m - 1 : 1));
    std::size_t stagnation = 0;

    if (m > 1) {
        for (std::size_t iter = 0; iter < iterations; ++iter) {
            if (stagnation >= stall_limit) {
                deal();
                stagnation = 0;
                if (stats != nullptr) ++stats->restarts;
                if (current > best_score) {
                    best_score = current;
                    best_assign = assign;
                    if (stats != nullptr) stats->best_trace.push_back(best_score);
                }
                continue;
            }
            std::size_t v = static_cast<std::size_t>(rng() % n);
            std::size_t src = assign[v];
            std::size_t pick = static_cast<std::size_t>(rng() % (m - 1));
            std::size_t dst = pick + (pick >= src ? 1 : 0);
            if (members[src].size() == 1) {
                ++stagnation;  // move would empty a cluster
                continue;
            }
            double new_src = detail::score_indices(vectors, members[src], v, nullptr);
            double new_dst = detail::score_indices(vectors, members[dst], n, &vectors[v]);
            if (new_src + new_dst > cluster_scores[src] + cluster_scores[dst]) {
                members[src].erase(std::find(members[src].begin(), members[src].end(), v));
                members[dst].push_back(v);
                assign[v] = dst;
                current += (new_src + new_dst) - (cluster_scores[src] + cluster_scores[dst]);
                cluster_scores[src] = new_src;
                cluster_scores[dst] = new_dst;
                stagnation = 0;
                if (stats != nullptr) {
                    ++stats->accepted_moves;
                    stats->climbs.back().push_back(current);
                }
                if (current > best_score) {
                    best_score = current;
                    best_assign = assign;
                    if (stats != nullptr) stats->best_trace.push_back(best_score);
                }
            } else {
                ++stagnation;
            }
        }
    }

    std::vector<std::vector<std::size_t>> best_members(m);
    for (std::size_t i = 0; i < n; ++i) best_members[best_assign[i]].push_back(i);
    return detail::make_grouping(vectors, std::move(best_members));
}

/// Exact global optimum by enumerating every set partition into m non-empty
/// clusters. Test oracle; refuses instances above the enumeration cap.
inline Grouping brute_force_grouping(std::span<const WordVector> vectors, std::size_t m,
                                     unsigned long long enumeration_cap = 1'000'000ULL) {
    const std::size_t n = vectors.size();
    if (n == 0) throw Error(ExitCode::expansion_error, "brute_force_grouping: no vectors");
    if (m < 1 || m > n) {
        throw Error(ExitCode::expansion_error,
                    "brute_force_grouping: invalid m=" + std::to_string(m) + " for " +
                        std::to_string(n) + " vectors");
    }
    unsigned long long count = partition_count(n, m);
    if (count > enumeration_cap) {
        throw Error(ExitCode::config_error,
                    "brute_force_grouping: " + std::to_string(count) + " partitions exceed cap " +
                        std::to_string(enumeration_cap));
    }

    // Restricted growth strings: a[0] = 0, a[i] <= max(a[0..i-1]) + 1, capped
    // at m-1. Keep assignments that use exactly m cluster ids; ids appear in
    // first-member order, which is already the canonical cluster order.
    std::vector<std::size_t> a(n, 0);
    double best = -1.0;
    std::vector<std::size_t> best_a(n, 0);
    std::function<void(std::size_t, std::size_t)> walk = [&](std::size_t i, std::size_t used) {
        if (used + (n - i) < m) return;  // cannot reach m non-empty clusters
        if (i == n) {
            if (used != m) return;
            std::vector<std::vector<std::size_t>> lists(m);
            for (std::size_t k = 0; k < n; ++k) lists[a[k]].push_back(k);
            double score = 0.0;
            for (const auto& list : lists) {
                score += detail::score_indices(vectors, list, n, nullptr);
            }
            if (score > best) {
                best = score;
                best_a = a;
            }
            return;
        }
        std::size_t limit = std::min(used, m - 1);
        for (std::size_t c = 0; c <= limit; ++c) {
            a[i] = c;
            walk(i + 1, std::max(used, c + 1));
        }
    };
    walk(1, 1);

    std::vector<std::vector<std::size_t>> lists(m);
    for (std::size_t i = 0; i < n; ++i) lists[best_a[i]].push_back(i);
    return detail::make_grouping(vectors, std::move(lists));
}

}  // namespace xu
