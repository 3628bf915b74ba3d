#pragma once

#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <memory>
#include <optional>
#include <ostream>
#include <random>
#include <string>
#include <vector>

#include "xu/clustering.hpp"
#include "xu/errors.hpp"
#include "xu/evaluation.hpp"
#include "xu/parallel.hpp"
#include "xu/pipeline.hpp"
#include "xu/suggestions.hpp"
#include "xu/vector_model.hpp"

namespace xu {

struct CliConfig {
    std::string model_path;
    std::string provider = "datamuse";
    std::string lexicon_path;
    std::string datamuse_url;  // overrides XU_DATAMUSE_URL, which overrides the default
    std::size_t max_suggestions = 50;
    std::size_t top_n = 25;
    std::size_t clusters = 3;
    std::size_t iterations = 10000;
    std::uint64_t seed = 0;
    std::size_t threads = 0;  // 0 = all available
    std::string text_col = "content";
    std::optional<std::string> id_col;
    std::optional<std::string> title_col;
    std::string output_path;  // batch/bench CSV; empty = stdout
    std::string report_path;  // evaluate JSON; empty = stdout
    bool verbose = false;
    bool no_timing = false;
    std::vector<std::size_t> bench_iteration_sweep = {5000, 10000, 20000};
    std::vector<std::size_t> bench_wordcount_sweep = {10, 25, 50};
    std::size_t bench_trials = 5;
    std::size_t bench_wordcount = 25;
    std::size_t bench_iterations = 10000;
};

inline PipelineParams pipeline_params(const CliConfig& c) {
    PipelineParams p;
    p.max_suggestions = c.max_suggestions;
    p.top_n = c.top_n;
    p.clusters = c.clusters;
    p.iterations = c.iterations;
    p.seed = c.seed;
    return p;
}

inline std::size_t effective_threads(const CliConfig& c) {
    return c.threads == 0 ? default_thread_count() : c.threads;
}

inline std::unique_ptr<SuggestionProvider> make_provider(const CliConfig& c) {
    if (c.provider == "local") {
        if (c.lexicon_path.empty()) {
            throw Error(ExitCode::config_error, "--provider local requires --lexicon");
        }
        return std::make_unique<LocalProvider>(load_lexicon(c.lexicon_path));
    }
    if (c.provider == "datamuse") {
        DatamuseConfig dc;
        if (!c.datamuse_url.empty()) {
            dc.base_url = c.datamuse_url;
        } else if (const char* env = std::getenv("XU_DATAMUSE_URL")) {
            dc.base_url = env;
        }
        return std::make_unique<DatamuseClient>(dc);
    }
    throw Error(ExitCode::config_error,
                "unknown provider \"" + c.provider + "\" (expected datamuse or local)");
}

namespace detail {

inline VectorModel load_model_for_cli(const CliConfig& c, std::ostream& err) {
    if (c.model_path.empty()) {
        throw Error(ExitCode::config_error, "--model is required");
    }
    const auto t0 = std::chrono::steady_clock::now();
    VectorModel model = load_model(c.model_path);
    for (const auto& w : model.load_stats().warnings) err << "warning: " << w << '\n';
    if (c.verbose) {
        double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
        err << "model: " << model.vocab_size() << " tokens, " << model.dimension() << " dims";
        if (!c.no_timing) err << ", loaded in " << secs << "s";
        err << '\n';
    }
    return model;
}

inline void print_csv_warnings(const std::vector<CsvWarning>& warnings, std::ostream& err) {
    for (const auto& w : warnings) err << "warning: " << w.message << '\n';
}

// Runs fn, mapping thrown errors to their exit codes.
template <typename Fn>
inline int run_cli(std::ostream& err, Fn&& fn) {
    try {
        return fn();
    } catch (const Error& e) {
        err << "error: " << e.what() << '\n';
        return static_cast<int>(e.code());
    } catch (const std::exception& e) {
        err << "error: " << e.what() << '\n';
        return 1;
    }
}

// Opens output_path for writing, or falls back to `out` when the path is
// empty. Keeps the stream alive via the returned ofstream.
struct OutputTarget {
    std::ofstream file;
    std::ostream* stream = nullptr;
};

inline OutputTarget open_output(const std::string& path, std::ostream& fallback) {
    OutputTarget t;
    if (path.empty()) {
        t.stream = &fallback;
        return t;
    }
    t.file.open(path, std::ios::binary);
    if (!t.file) {
        throw Error(ExitCode::io_error, "cannot open output file for writing: " + path);
    }
    t.stream = &t.file;
    return t;
}

inline std::string format_ms(double ms) {
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%.6f", ms);
    return buf;
}

}  // namespace detail

// ---------------------------------------------------------------------------
// expand
// ---------------------------------------------------------------------------

inline int cmd_expand(const CliConfig& config, const std::string& query, std::ostream& out,
                      std::ostream& err) {
    return detail::run_cli(err, [&]() -> int {
        PipelineParams params = pipeline_params(config);
        params.validate();
        VectorModel model = detail::load_model_for_cli(config, err);
        auto provider = make_provider(config);
        OptimizeStats stats;
        ExpansionResult result = expand_query(model, *provider, query, params,
                                              config.verbose ? &stats : nullptr);
        if (config.verbose) {
            err << "suggestions: " << result.suggestions.size() << " (" << result.oov_suggestions
                << " not in vocabulary)";
            if (!config.no_timing) err << ", fetched in " << result.provider_seconds << "s";
            err << '\n';
            err << "selected " << result.selected.size() << " words:\n";
            for (const auto& rw : result.selected) {
                err << "  " << rw.word.token << "  " << rw.distance << '\n';
            }
            err << "grouping score: " << result.grouping.score << " ("
                << result.grouping.clusters.size() << " clusters, " << stats.accepted_moves
                << " accepted moves, " << stats.restarts << " restarts)\n";
            if (!config.no_timing) err << "elapsed: " << result.total_seconds << "s\n";
        }
        out << result.rendered << '\n';
        return 0;
    });
}

// ---------------------------------------------------------------------------
// batch
// ---------------------------------------------------------------------------

inline int cmd_batch(const CliConfig& config, const std::string& queries_csv, std::ostream& out,
                     std::ostream& err) {
    return detail::run_cli(err, [&]() -> int {
        PipelineParams base_params = pipeline_params(config);
        base_params.validate();
        VectorModel model = detail::load_model_for_cli(config, err);
        auto provider = make_provider(config);
        LoadedQueries queries = load_queries(queries_csv);
        detail::print_csv_warnings(queries.warnings, err);

        struct RowResult {
            std::string expansion;
            std::string error;
        };
        std::vector<RowResult> results(queries.records.size());
        parallel_for(queries.records.size(), effective_threads(config), [&](std::size_t i) {
            PipelineParams params = base_params;
            params.seed = base_params.seed ^ static_cast<std::uint64_t>(i);
            try {
                results[i].expansion =
                    expand_query(model, *provider, queries.records[i].raw_query, params).rendered;
            } catch (const std::exception& e) {
                results[i].error = e.what();
            }
        });

        auto target = detail::open_output(config.output_path, out);
        write_csv_row(*target.stream, {"query", "expansion", "error"});
        std::size_t failures = 0;
        for (std::size_t i = 0; i < results.size(); ++i) {
            if (!results[i].error.empty()) ++failures;
            write_csv_row(*target.stream,
                          {queries.records[i].raw_query, results[i].expansion, results[i].error});
        }
        if (config.verbose) {
            err << "expanded " << (results.size() - failures) << " of " << results.size()
                << " queries (" << failures << " failed)\n";
        }
        return 0;
    });
}

// ---------------------------------------------------------------------------
// evaluate
// ---------------------------------------------------------------------------

inline int cmd_evaluate(const CliConfig& config, const std::string& queries_csv,
                        const std::string& corpus_csv, std::ostream& out, std::ostream& err) {
    return detail::run_cli(err, [&]() -> int {
        VectorModel model = detail::load_model_for_cli(config, err);
        auto provider = make_provider(config);
        LoadedQueries queries = load_queries(queries_csv);
        detail::print_csv_warnings(queries.warnings, err);
        LoadedCorpus corpus = load_corpus(corpus_csv, config.text_col, config.id_col,
                                          config.title_col);
        detail::print_csv_warnings(corpus.warnings, err);

        EvalConfig eval_config;
        eval_config.pipeline = pipeline_params(config);
        eval_config.threads = effective_threads(config);
        eval_config.include_timing = !config.no_timing;
        EvalReport report = evaluate_batch(queries.records, corpus.documents, model, *provider,
                                           eval_config);

        auto target = detail::open_output(config.report_path, out);
        *target.stream << report_to_json(report).dump(2) << '\n';
        if (config.verbose) {
            err << "evaluated " << report.baseline_parsed << " of " << report.queries_total
                << " queries (" << report.with_baseline << " with baseline, "
                << report.baseline_parse_failures << " baseline parse failures)\n";
            auto show = [&](const char* name, const TechniqueSummary& s) {
                err << name << ": " << s.evaluated << " ok, " << s.failed << " failed";
                if (s.mean_accuracy) err << ", mean accuracy " << *s.mean_accuracy;
                err << '\n';
            };
            show("flat_or", report.flat_or);
            show("xu", report.xu);
        }
        return 0;
    });
}

// ---------------------------------------------------------------------------
// bench
// ---------------------------------------------------------------------------

struct BenchRow {
    std::string mode;
    std::size_t word_count = 0;
    std::size_t iterations = 0;
    std::size_t trials = 0;
    std::size_t reps = 0;
    double mean_ms = 0.0;
    double stddev_ms = 0.0;
};

namespace detail {

// Times optimize_grouping on the first `word_count` pool vectors. Repetitions
// are auto-scaled until one trial takes at least 25 ms, so tiny instances
// don't drown in timer noise.
inline BenchRow bench_point(std::span<const WordVector> pool, std::size_t word_count,
                            std::size_t iterations, std::size_t clusters, std::uint64_t seed,
                            std::size_t trials, const std::string& mode) {
    std::span<const WordVector> sample = pool.subspan(0, word_count);
    auto run_once = [&] { optimize_grouping(sample, clusters, iterations, seed); };
    auto time_reps = [&](std::size_t reps) {
        const auto t0 = std::chrono::steady_clock::now();
        for (std::size_t r = 0; r < reps; ++r) run_once();
        return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    };

    run_once();  // warm caches before measuring
    double single = time_reps(1);
    std::size_t reps = 1;
    if (single < 0.025) {
        reps = static_cast<std::size_t>(std::ceil(0.025 / std::max(single, 1e-7)));
        if (reps > 100000) reps = 100000;
    }

    std::vector<double> per_run_ms;
    per_run_ms.reserve(trials);
    for (std::size_t t = 0; t < trials; ++t) {
        per_run_ms.push_back(time_reps(reps) * 1000.0 / static_cast<double>(reps));
    }
    double mean = 0.0;
    for (double x : per_run_ms) mean += x;
    mean /= static_cast<double>(per_run_ms.size());
    double var = 0.0;
    for (double x : per_run_ms) var += (x - mean) * (x - mean);
    double stddev = per_run_ms.size() > 1
                        ? std::sqrt(var / static_cast<double>(per_run_ms.size() - 1))
                        : 0.0;
    return BenchRow{mode, word_count, iterations, trials, reps, mean, stddev};
}

}  // namespace detail

inline std::vector<BenchRow> run_bench(const CliConfig& config, const std::string& mode,
                                       const VectorModel& model) {
    if (mode != "iterations" && mode != "wordcount") {
        throw Error(ExitCode::config_error,
                    "unknown bench mode \"" + mode + "\" (expected iterations or wordcount)");
    }
    if (config.bench_trials < 3) {
        throw Error(ExitCode::config_error, "bench needs at least 3 trials");
    }

    std::vector<WordVector> pool = model.all_vectors();
    std::vector<std::size_t> order(pool.size());
    for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
    std::mt19937_64 rng(config.seed);
    detail::fisher_yates(order, rng);
    std::vector<WordVector> shuffled;
    shuffled.reserve(pool.size());
    for (std::size_t idx : order) shuffled.push_back(std::move(pool[idx]));

    auto check_word_count = [&](std::size_t wc) {
        if (wc < config.clusters) {
            throw Error(ExitCode::config_error,
                        "bench word count " + std::to_string(wc) + " is below cluster count " +
                            std::to_string(config.clusters));
        }
        if (wc > shuffled.size()) {
            throw Error(ExitCode::config_error,
                        "bench word count " + std::to_string(wc) + " exceeds model vocabulary " +
                            std::to_string(shuffled.size()));
        }
    };

    std::vector<BenchRow> rows;
    if (mode == "iterations") {
        check_word_count(config.bench_wordcount);
        if (config.bench_iteration_sweep.empty()) {
            throw Error(ExitCode::config_error, "empty iteration sweep");
        }
        for (std::size_t iters : config.bench_iteration_sweep) {
            if (iters < 1) throw Error(ExitCode::config_error, "iteration sweep values must be >= 1");
            rows.push_back(detail::bench_point(shuffled, config.bench_wordcount, iters,
                                               config.clusters, config.seed, config.bench_trials,
                                               mode));
        }
    } else {
        if (config.bench_iterations < 1) {
            throw Error(ExitCode::config_error, "bench iterations must be >= 1");
        }
        if (config.bench_wordcount_sweep.empty()) {
            throw Error(ExitCode::config_error, "empty word count sweep");
        }
        for (std::size_t wc : config.bench_wordcount_sweep) {
            check_word_count(wc);
            rows.push_back(detail::bench_point(shuffled, wc, config.bench_iterations,
                                               config.clusters, config.seed, config.bench_trials,
                                               mode));
        }
    }
    return rows;
}

inline int cmd_bench(const CliConfig& config, const std::string& mode, std::ostream& out,
                     std::ostream& err) {
    return detail::run_cli(err, [&]() -> int {
        VectorModel model = detail::load_model_for_cli(config, err);
        std::vector<BenchRow> rows = run_bench(config, mode, model);
        auto target = detail::open_output(config.output_path, out);
        write_csv_row(*target.stream,
                      {"mode", "word_count", "iterations", "trials", "reps", "mean_ms",
                       "stddev_ms"});
        for (const auto& r : rows) {
            write_csv_row(*target.stream,
                          {r.mode, std::to_string(r.word_count), std::to_string(r.iterations),
                           std::to_string(r.trials), std::to_string(r.reps),
                           detail::format_ms(r.mean_ms), detail::format_ms(r.stddev_ms)});
        }
        return 0;
    });
}

// ---------------------------------------------------------------------------
// model-info
// ---------------------------------------------------------------------------

inline int cmd_model_info(const CliConfig& config, std::ostream& out, std::ostream& err) {
    return detail::run_cli(err, [&]() -> int {
        VectorModel model = detail::load_model_for_cli(config, err);
        out << "vocab_size: " << model.vocab_size() << '\n';
        out << "dimension: " << model.dimension() << '\n';
        out << "duplicate_tokens_skipped: " << model.load_stats().duplicate_tokens << '\n';
        out << "zero_norm_skipped: " << model.load_stats().zero_norm_skipped << '\n';
        return 0;
    });
}

}  // namespace xu
