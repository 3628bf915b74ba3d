#pragma once

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "xu/boolean_query.hpp"
#include "xu/csv.hpp"
#include "xu/errors.hpp"
#include "xu/parallel.hpp"
#include "xu/pipeline.hpp"
#include "xu/text.hpp"

namespace xu {

/// Per-document selection bits for one query technique, in corpus order.
/// Bytes rather than packed bits so parallel writers never share a word.
struct ScoringVector {
    std::vector<std::uint8_t> bits;

    std::size_t size() const { return bits.size(); }
    std::size_t count() const {
        std::size_t n = 0;
        for (std::uint8_t b : bits) n += (b != 0);
        return n;
    }
};

/// Thrown when a rate's denominator is empty (base all-zero or all-one).
/// Callers record the metric as undefined instead of exiting.
class UndefinedRateError : public Error {
public:
    explicit UndefinedRateError(const std::string& what) : Error(ExitCode::config_error, what) {}
};

struct EvalMetrics {
    std::optional<double> tp_rate;  // percent; empty when base selects nothing
    std::optional<double> fp_rate;  // percent; empty when base selects everything
    std::size_t tp = 0;
    std::size_t tn = 0;
    std::size_t fp = 0;
    std::size_t fn = 0;
    double accuracy = 0.0;
    double elapsed_seconds = 0.0;
};

struct QueryRecord {
    std::string raw_query;
    std::optional<std::string> baseline_expansion;
};

// ---------------------------------------------------------------------------
// Input loading.
// ---------------------------------------------------------------------------

struct LoadedQueries {
    std::vector<QueryRecord> records;
    std::vector<CsvWarning> warnings;
};

/// CSV with header `query,expansion`; the expansion column may be absent and
/// its cells may be empty. Rows with an empty query are skipped with a
/// warning.
inline LoadedQueries load_queries(const std::string& path) {
    CsvTable table = read_csv_file(path);
    LoadedQueries out;
    out.warnings = table.warnings;
    std::size_t query_col = table.column_index("query");
    std::optional<std::size_t> expansion_col;
    for (std::size_t i = 0; i < table.header.size(); ++i) {
        if (table.header[i] == "expansion") expansion_col = i;
    }
    for (std::size_t r = 0; r < table.rows.size(); ++r) {
        const auto& row = table.rows[r];
        if (normalize_phrase(row[query_col]).empty()) {
            out.warnings.push_back(
                {r + 2, "queries row " + std::to_string(r + 2) + ": empty query; row skipped"});
            continue;
        }
        QueryRecord rec;
        rec.raw_query = row[query_col];
        if (expansion_col && !normalize_phrase(row[*expansion_col]).empty()) {
            rec.baseline_expansion = row[*expansion_col];
        }
        out.records.push_back(std::move(rec));
    }
    return out;
}

struct LoadedCorpus {
    std::vector<Document> documents;
    std::vector<CsvWarning> warnings;
};

/// Documents come out in file order. Rows with the wrong field count are
/// skipped (warning carries the line number). Missing id column: ids are the
/// 0-based position in the loaded corpus.
inline LoadedCorpus load_corpus(const std::string& path, const std::string& text_column,
                                const std::optional<std::string>& id_column = std::nullopt,
                                const std::optional<std::string>& title_column = std::nullopt) {
    CsvTable table = read_csv_file(path);
    LoadedCorpus out;
    out.warnings = table.warnings;
    std::size_t text_col = table.column_index(text_column);
    std::optional<std::size_t> id_col;
    if (id_column) id_col = table.column_index(*id_column);
    std::optional<std::size_t> title_col;
    if (title_column) title_col = table.column_index(*title_column);

    out.documents.reserve(table.rows.size());
    for (std::size_t r = 0; r < table.rows.size(); ++r) {
        const auto& row = table.rows[r];
        Document doc;
        doc.id = id_col ? row[*id_col] : std::to_string(r);
        if (title_col) doc.title = row[*title_col];
        doc.text = row[text_col];
        out.documents.push_back(std::move(doc));
    }
    return out;
}

// ---------------------------------------------------------------------------
// Scoring and metrics.
// ---------------------------------------------------------------------------

inline ScoringVector score_corpus(const QueryAst& ast, std::span<const Document> corpus,
                                  std::size_t threads = 1) {
    CompiledQuery cq = compile(ast);
    ScoringVector sv;
    sv.bits.assign(corpus.size(), 0);
    parallel_for(corpus.size(), threads, [&](std::size_t i) {
        sv.bits[i] = matches(cq, document_tokens(corpus[i])) ? 1 : 0;
    });
    return sv;
}

namespace detail {

inline void require_same_length(const ScoringVector& other, const ScoringVector& base) {
    if (other.size() != base.size()) {
        throw Error(ExitCode::config_error,
                    "scoring vector length mismatch: " + std::to_string(other.size()) + " vs " +
                        std::to_string(base.size()));
    }
}

}  // namespace detail

/// Percent of base-selected documents the other technique also selected.
inline double true_positive_rate(const ScoringVector& other, const ScoringVector& base) {
    detail::require_same_length(other, base);
    std::size_t both = 0;
    std::size_t base_ones = 0;
    for (std::size_t i = 0; i < base.size(); ++i) {
        if (base.bits[i]) {
            ++base_ones;
            if (other.bits[i]) ++both;
        }
    }
    if (base_ones == 0) {
        throw UndefinedRateError("true positive rate undefined: base selects no documents");
    }
    return 100.0 * static_cast<double>(both) / static_cast<double>(base_ones);
}

/// Percent of base-rejected documents the other technique selected anyway.
inline double false_positive_rate(const ScoringVector& other, const ScoringVector& base) {
    detail::require_same_length(other, base);
    std::size_t extra = 0;
    std::size_t base_zeros = 0;
    for (std::size_t i = 0; i < base.size(); ++i) {
        if (!base.bits[i]) {
            ++base_zeros;
            if (other.bits[i]) ++extra;
        }
    }
    if (base_zeros == 0) {
        throw UndefinedRateError("false positive rate undefined: base selects every document");
    }
    return 100.0 * static_cast<double>(extra) / static_cast<double>(base_zeros);
}

inline EvalMetrics confusion_and_accuracy(const ScoringVector& other, const ScoringVector& base) {
    detail::require_same_length(other, base);
    if (base.size() == 0) {
        throw Error(ExitCode::config_error, "accuracy undefined for an empty corpus");
    }
    EvalMetrics m;
    for (std::size_t i = 0; i < base.size(); ++i) {
        bool o = other.bits[i] != 0;
        bool b = base.bits[i] != 0;
        if (o && b) ++m.tp;
        else if (o && !b) ++m.fp;
        else if (!o && b) ++m.fn;
        else ++m.tn;
    }
    m.accuracy = static_cast<double>(m.tp + m.tn) / static_cast<double>(base.size());
    if (m.tp + m.fn > 0) {
        m.tp_rate = 100.0 * static_cast<double>(m.tp) / static_cast<double>(m.tp + m.fn);
    }
    if (m.fp + m.tn > 0) {
        m.fp_rate = 100.0 * static_cast<double>(m.fp) / static_cast<double>(m.fp + m.tn);
    }
    return m;
}

// ---------------------------------------------------------------------------
// Distribution summaries.
// ---------------------------------------------------------------------------

struct FiveNumberSummary {
    double min = 0.0;
    double q1 = 0.0;
    double median = 0.0;
    double q3 = 0.0;
    double max = 0.0;
};

namespace detail {

// Linear-interpolation quantile on a sorted sample: h = (n-1)p.
inline double quantile_sorted(const std::vector<double>& xs, double p) {
    double h = static_cast<double>(xs.size() - 1) * p;
    std::size_t lo = static_cast<std::size_t>(h);
    if (lo + 1 >= xs.size()) return xs.back();
    double frac = h - static_cast<double>(lo);
    return xs[lo] + frac * (xs[lo + 1] - xs[lo]);
}

}  // namespace detail

inline FiveNumberSummary five_number_summary(std::vector<double> xs) {
    if (xs.empty()) {
        throw Error(ExitCode::config_error, "five_number_summary: empty sample");
    }
    std::sort(xs.begin(), xs.end());
    FiveNumberSummary s;
    s.min = xs.front();
    s.q1 = detail::quantile_sorted(xs, 0.25);
    s.median = detail::quantile_sorted(xs, 0.5);
    s.q3 = detail::quantile_sorted(xs, 0.75);
    s.max = xs.back();
    return s;
}

// ---------------------------------------------------------------------------
// Batch evaluation.
// ---------------------------------------------------------------------------

struct EvalConfig {
    PipelineParams pipeline;
    std::size_t threads = 1;
    bool include_timing = true;
};

struct TechniqueOutcome {
    bool ok = false;
    std::string error;
    std::string expansion;
    std::size_t matched = 0;
    EvalMetrics metrics;
};

struct QueryEvaluation {
    std::string query;
    bool has_baseline = false;
    bool baseline_ok = false;
    std::string baseline_error;
    std::string baseline;
    std::size_t baseline_matched = 0;
    TechniqueOutcome flat_or;
    TechniqueOutcome xu;
};

struct TechniqueSummary {
    std::size_t evaluated = 0;
    std::size_t failed = 0;
    std::optional<double> mean_accuracy;
    std::optional<double> mean_elapsed_seconds;
    std::size_t tp_defined = 0;
    std::size_t fp_defined = 0;
    std::optional<FiveNumberSummary> tp_rates;
    std::optional<FiveNumberSummary> fp_rates;
};

struct EvalReport {
    std::size_t corpus_size = 0;
    std::size_t queries_total = 0;
    std::size_t with_baseline = 0;
    std::size_t baseline_parsed = 0;
    std::size_t baseline_parse_failures = 0;
    PipelineParams params;
    bool include_timing = true;
    TechniqueSummary flat_or;
    TechniqueSummary xu;
    std::vector<QueryEvaluation> rows;
};

namespace detail {

inline TechniqueSummary summarize_technique(const std::vector<QueryEvaluation>& rows,
                                            const TechniqueOutcome QueryEvaluation::* member) {
    TechniqueSummary s;
    double acc_sum = 0.0;
    double elapsed_sum = 0.0;
    std::vector<double> tp_samples;
    std::vector<double> fp_samples;
    for (const auto& row : rows) {
        if (!row.baseline_ok) continue;
        const TechniqueOutcome& outcome = row.*member;
        if (!outcome.ok) {
            ++s.failed;
            continue;
        }
        ++s.evaluated;
        acc_sum += outcome.metrics.accuracy;
        elapsed_sum += outcome.metrics.elapsed_seconds;
        if (outcome.metrics.tp_rate) tp_samples.push_back(*outcome.metrics.tp_rate);
        if (outcome.metrics.fp_rate) fp_samples.push_back(*outcome.metrics.fp_rate);
    }
    if (s.evaluated > 0) {
        s.mean_accuracy = acc_sum / static_cast<double>(s.evaluated);
        s.mean_elapsed_seconds = elapsed_sum / static_cast<double>(s.evaluated);
    }
    s.tp_defined = tp_samples.size();
    s.fp_defined = fp_samples.size();
    if (!tp_samples.empty()) s.tp_rates = five_number_summary(std::move(tp_samples));
    if (!fp_samples.empty()) s.fp_rates = five_number_summary(std::move(fp_samples));
    return s;
}

}  // namespace detail

/// Runs both techniques against every record that carries a baseline and
/// compares each to the baseline's scoring vector. Per-record failures are
/// recorded in the row, never thrown. Deterministic for fixed inputs, seed,
/// and config, independent of thread count (per-record seed = seed XOR
/// record index).
inline EvalReport evaluate_batch(std::span<const QueryRecord> records,
                                 std::span<const Document> corpus, const VectorModel& model,
                                 const SuggestionProvider& provider, const EvalConfig& config) {
    config.pipeline.validate();
    if (corpus.empty()) {
        throw Error(ExitCode::config_error, "corpus is empty");
    }
    bool any_baseline = false;
    for (const auto& rec : records) {
        if (rec.baseline_expansion) any_baseline = true;
    }
    if (!any_baseline) {
        throw Error(ExitCode::config_error, "no query record carries a baseline expansion");
    }

    EvalReport report;
    report.corpus_size = corpus.size();
    report.queries_total = records.size();
    report.params = config.pipeline;
    report.include_timing = config.include_timing;
    report.rows.resize(records.size());

    parallel_for(records.size(), config.threads, [&](std::size_t i) {
        const QueryRecord& rec = records[i];
        QueryEvaluation& row = report.rows[i];
        row.query = rec.raw_query;
        if (!rec.baseline_expansion) return;
        row.has_baseline = true;

        ScoringVector base;
        try {
            QueryAst base_ast = parse(*rec.baseline_expansion);
            row.baseline = render(base_ast);
            base = score_corpus(base_ast, corpus);
            row.baseline_matched = base.count();
            row.baseline_ok = true;
        } catch (const std::exception& e) {
            row.baseline_error = e.what();
            return;
        }

        PipelineParams params = config.pipeline;
        params.seed = config.pipeline.seed ^ static_cast<std::uint64_t>(i);

        std::vector<Suggestion> suggestions;
        double fetch_seconds = 0.0;
        std::string fetch_error;
        try {
            const auto t0 = std::chrono::steady_clock::now();
            suggestions = provider.suggest(normalize_phrase(rec.raw_query),
                                           params.max_suggestions);
            fetch_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0)
                                .count();
        } catch (const std::exception& e) {
            fetch_error = e.what();
        }

        auto run_technique = [&](TechniqueOutcome& out, auto&& build_ast) {
            if (!fetch_error.empty()) {
                out.error = fetch_error;
                return;
            }
            try {
                const auto t0 = std::chrono::steady_clock::now();
                QueryAst ast = build_ast();
                ScoringVector sv = score_corpus(ast, corpus);
                double elapsed =
                    fetch_seconds +
                    std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
                out.expansion = render(ast);
                out.matched = sv.count();
                out.metrics = confusion_and_accuracy(sv, base);
                out.metrics.elapsed_seconds = elapsed;
                out.ok = true;
            } catch (const std::exception& e) {
                out.error = e.what();
            }
        };

        run_technique(row.flat_or, [&] { return flat_or_expansion(suggestions); });
        run_technique(row.xu, [&] {
            return expand_from_suggestions(model, rec.raw_query, suggestions, params).ast;
        });

        if (!config.include_timing) {
            row.flat_or.metrics.elapsed_seconds = 0.0;
            row.xu.metrics.elapsed_seconds = 0.0;
        }
    });

    for (const auto& row : report.rows) {
        if (!row.has_baseline) continue;
        ++report.with_baseline;
        if (row.baseline_ok) {
            ++report.baseline_parsed;
        } else {
            ++report.baseline_parse_failures;
        }
    }
    report.flat_or = detail::summarize_technique(report.rows, &QueryEvaluation::flat_or);
    report.xu = detail::summarize_technique(report.rows, &QueryEvaluation::xu);
    return report;
}

// ---------------------------------------------------------------------------
// Report serialization.
// ---------------------------------------------------------------------------

namespace detail {

inline nlohmann::json summary_to_json(const FiveNumberSummary& s, std::size_t count) {
    return nlohmann::json{{"count", count}, {"max", s.max},    {"median", s.median},
                          {"min", s.min},   {"q1", s.q1},      {"q3", s.q3}};
}

inline nlohmann::json technique_to_json(const TechniqueSummary& s) {
    nlohmann::json j;
    j["evaluated"] = s.evaluated;
    j["failed"] = s.failed;
    j["mean_accuracy"] = s.mean_accuracy ? nlohmann::json(*s.mean_accuracy) : nlohmann::json();
    j["mean_elapsed_seconds"] =
        s.mean_elapsed_seconds ? nlohmann::json(*s.mean_elapsed_seconds) : nlohmann::json();
    j["tp_rate"] = s.tp_rates ? summary_to_json(*s.tp_rates, s.tp_defined) : nlohmann::json();
    j["fp_rate"] = s.fp_rates ? summary_to_json(*s.fp_rates, s.fp_defined) : nlohmann::json();
    return j;
}

inline nlohmann::json outcome_to_json(const TechniqueOutcome& o) {
    nlohmann::json j;
    j["ok"] = o.ok;
    if (!o.ok) {
        j["error"] = o.error;
        return j;
    }
    j["expansion"] = o.expansion;
    j["matched"] = o.matched;
    j["tp"] = o.metrics.tp;
    j["tn"] = o.metrics.tn;
    j["fp"] = o.metrics.fp;
    j["fn"] = o.metrics.fn;
    j["accuracy"] = o.metrics.accuracy;
    j["tp_rate"] = o.metrics.tp_rate ? nlohmann::json(*o.metrics.tp_rate) : nlohmann::json();
    j["fp_rate"] = o.metrics.fp_rate ? nlohmann::json(*o.metrics.fp_rate) : nlohmann::json();
    j["elapsed_seconds"] = o.metrics.elapsed_seconds;
    return j;
}

}  // namespace detail

inline nlohmann::json report_to_json(const EvalReport& report) {
    nlohmann::json j;
    j["corpus_size"] = report.corpus_size;
    j["parameters"] = {{"clusters", report.params.clusters},
                       {"iterations", report.params.iterations},
                       {"max_suggestions", report.params.max_suggestions},
                       {"seed", report.params.seed},
                       {"timing", report.include_timing},
                       {"top_n", report.params.top_n}};
    j["queries"] = {{"baseline_parse_failures", report.baseline_parse_failures},
                    {"baseline_parsed", report.baseline_parsed},
                    {"total", report.queries_total},
                    {"with_baseline", report.with_baseline}};
    j["techniques"] = {{"flat_or", detail::technique_to_json(report.flat_or)},
                       {"xu", detail::technique_to_json(report.xu)}};
    nlohmann::json rows = nlohmann::json::array();
    for (const auto& row : report.rows) {
        nlohmann::json r;
        r["query"] = row.query;
        if (!row.has_baseline) {
            r["baseline"] = nullptr;
        } else if (!row.baseline_ok) {
            r["baseline"] = {{"ok", false}, {"error", row.baseline_error}};
        } else {
            r["baseline"] = {{"ok", true},
                             {"expansion", row.baseline},
                             {"matched", row.baseline_matched}};
            r["flat_or"] = detail::outcome_to_json(row.flat_or);
            r["xu"] = detail::outcome_to_json(row.xu);
        }
        rows.push_back(std::move(r));
    }
    j["rows"] = std::move(rows);
    return j;
}

}  // namespace xu
