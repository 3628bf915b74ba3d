#include <charconv>
#include <cstdint>
#include <iostream>
#include <random>
#include <string>
#include <vector>

#include "CLI11.hpp"

#include "xu/cli.hpp"
#include "xu/errors.hpp"

namespace {

bool parse_seed_text(const std::string& text, std::uint64_t& out) {
    if (text == "random") {
        std::random_device rd;
        out = (static_cast<std::uint64_t>(rd()) << 32) ^ static_cast<std::uint64_t>(rd());
        return true;
    }
    const char* first = text.data();
    const char* last = text.data() + text.size();
    auto [ptr, ec] = std::from_chars(first, last, out);
    return ec == std::errc() && ptr == last && !text.empty();
}

std::string join_words(const std::vector<std::string>& words) {
    std::string out;
    for (const auto& w : words) {
        if (!out.empty()) out += ' ';
        out += w;
    }
    return out;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Boolean query expansion over word embeddings"};
    app.require_subcommand(1);

    xu::CliConfig config;
    std::string seed_text = "0";

    auto add_pipeline_flags = [&](CLI::App* cmd) {
        cmd->add_option("--model", config.model_path, "word2vec text model file")->required();
        cmd->add_option("--provider", config.provider, "suggestion source: datamuse or local");
        cmd->add_option("--lexicon", config.lexicon_path, "lexicon JSON for --provider local");
        cmd->add_option("--datamuse-url", config.datamuse_url,
                        "Datamuse base URL (or env XU_DATAMUSE_URL)");
        cmd->add_option("--max-suggestions", config.max_suggestions,
                        "suggestions fetched per query (N)");
        cmd->add_option("--top-n", config.top_n, "words kept after distance ranking (n)");
        cmd->add_option("--clusters", config.clusters, "number of OR groups (m)");
        cmd->add_option("--iterations", config.iterations, "grouping optimizer iterations");
        cmd->add_option("--seed", seed_text, "RNG seed (integer, or 'random')");
        cmd->add_option("--threads", config.threads, "worker threads (0 = all available)");
        cmd->add_flag("--verbose", config.verbose, "stage diagnostics on stderr");
        cmd->add_flag("--no-timing", config.no_timing, "zero out elapsed fields in outputs");
    };

    auto* expand = app.add_subcommand("expand", "expand one query to a Boolean query");
    std::vector<std::string> query_words;
    add_pipeline_flags(expand);
    expand->add_option("query", query_words, "query text")->required()->expected(-1);

    auto* batch = app.add_subcommand("batch", "expand every query in a CSV");
    std::string batch_queries_path;
    add_pipeline_flags(batch);
    batch->add_option("queries", batch_queries_path, "CSV with a 'query' column")->required();
    batch->add_option("--output", config.output_path, "output CSV path (default stdout)");

    auto* evaluate = app.add_subcommand("evaluate",
                                        "compare expansions against baselines over a corpus");
    std::string eval_queries_path;
    std::string eval_corpus_path;
    std::string id_col;
    std::string title_col;
    add_pipeline_flags(evaluate);
    evaluate->add_option("queries", eval_queries_path, "CSV with query,expansion columns")
        ->required();
    evaluate->add_option("corpus", eval_corpus_path, "corpus CSV")->required();
    evaluate->add_option("--text-col", config.text_col, "corpus text column");
    evaluate->add_option("--id-col", id_col, "corpus id column");
    evaluate->add_option("--title-col", title_col, "corpus title column");
    evaluate->add_option("--report", config.report_path, "report JSON path (default stdout)");

    auto* bench = app.add_subcommand("bench", "time the grouping optimizer");
    std::string bench_mode;
    std::vector<std::size_t> sweep_values;
    add_pipeline_flags(bench);
    bench->add_option("mode", bench_mode, "iterations or wordcount")->required();
    bench->add_option("--sweep", sweep_values, "swept values for the chosen mode")
        ->delimiter(',');
    bench->add_option("--trials", config.bench_trials, "timed trials per sweep point (>= 3)");
    bench->add_option("--bench-wordcount", config.bench_wordcount,
                      "fixed word count for mode=iterations");
    bench->add_option("--bench-iterations", config.bench_iterations,
                      "fixed iterations for mode=wordcount");
    bench->add_option("--output", config.output_path, "output CSV path (default stdout)");

    auto* model_info = app.add_subcommand("model-info", "print model stats");
    add_pipeline_flags(model_info);

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        int rc = app.exit(e);
        return rc == 0 ? 0 : static_cast<int>(xu::ExitCode::config_error);
    }

    if (!parse_seed_text(seed_text, config.seed)) {
        std::cerr << "error: --seed must be a non-negative integer or 'random'\n";
        return static_cast<int>(xu::ExitCode::config_error);
    }
    if (!id_col.empty()) config.id_col = id_col;
    if (!title_col.empty()) config.title_col = title_col;
    if (!sweep_values.empty()) {
        if (bench_mode == "wordcount") {
            config.bench_wordcount_sweep = sweep_values;
        } else {
            config.bench_iteration_sweep = sweep_values;
        }
    }

    if (app.got_subcommand(expand)) {
        return xu::cmd_expand(config, join_words(query_words), std::cout, std::cerr);
    }
    if (app.got_subcommand(batch)) {
        return xu::cmd_batch(config, batch_queries_path, std::cout, std::cerr);
    }
    if (app.got_subcommand(evaluate)) {
        return xu::cmd_evaluate(config, eval_queries_path, eval_corpus_path, std::cout, std::cerr);
    }
    if (app.got_subcommand(bench)) {
        return xu::cmd_bench(config, bench_mode, std::cout, std::cerr);
    }
    return xu::cmd_model_info(config, std::cout, std::cerr);
}
