#include "regionqa/commands.hpp"

#include <fstream>
#include <optional>
#include <vector>

#include <CLI11.hpp>

#include "regionqa/errors.hpp"

namespace fs = std::filesystem;

namespace regionqa {

namespace {

void write_json(std::ostream& os, const nlohmann::ordered_json& j) { os << j.dump(2) << '\n'; }

}  // namespace

int cmd_ask(const RunConfiguration& config, std::string_view question, std::ostream& out, std::ostream& err) {
    Runtime rt;
    try {
        rt = build_runtime(config);
    } catch (const Error& e) {
        err << "error: " << e.what() << '\n';
        return kExitUsage;
    }
    try {
        auto result = rt.engine->run(question);
        auto j = result.to_json(config.timings);
        j["config"] = config.to_json();
        write_json(out, j);
        return kExitOk;
    } catch (const PipelineFailure& e) {
        err << "pipeline error: " << e.what() << '\n';
        write_json(out, {{"error", e.what()}, {"trace", e.partial_trace()}, {"config", config.to_json()}});
    } catch (const Error& e) {
        err << "pipeline error: " << e.what() << '\n';
    }
    return kExitFailure;
}

int cmd_eval(const RunConfiguration& config, const fs::path& dataset, std::ostream& out, std::ostream& err) {
    Runtime rt;
    std::vector<DatasetItem> items;
    try {
        rt = build_runtime(config);
    } catch (const Error& e) {
        err << "error: " << e.what() << '\n';
        return kExitUsage;
    }
    try {
        items = load_dataset(dataset, config.protocol);
    } catch (const Error& e) {
        err << "dataset error: " << e.what() << '\n';
        return kExitFailure;
    }

    EvalOptions options;
    options.protocol = config.protocol;
    options.workers = config.workers;
    auto report = run_eval(items, *rt.engine, options);
    auto j = report.to_json();
    j["config"] = config.to_json();

    const fs::path path = config.out.value_or("eval_report.json");
    std::ofstream file(path);
    if (!file) {
        err << "error: cannot write report to " << path.string() << '\n';
        return kExitFailure;
    }
    write_json(file, j);
    out << report.summary_table() << "report: " << path.string() << '\n';
    return kExitOk;
}

int cmd_region(const RunConfiguration& config, std::string_view question, std::ostream& out, std::ostream& err) {
    Runtime rt;
    try {
        rt = build_runtime(config);
    } catch (const Error& e) {
        err << "error: " << e.what() << '\n';
        return kExitUsage;
    }
    try {
        auto plan = rt.engine->plan_regions(question);
        auto j = plan.to_json();
        j["config"] = config.to_json();
        write_json(out, j);
        return kExitOk;
    } catch (const Error& e) {
        err << "region error: " << e.what() << '\n';
        return kExitFailure;
    }
}

int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
    CLI::App app{"Region-constrained multi-hop question answering over a biomedical knowledge graph"};
    app.require_subcommand(1);

    struct Overrides {
        std::optional<std::string> config, graph, schema, aliases, weights, templates, provider, transcript;
        std::optional<std::string> embedding, reviewer_backend, protocol, out;
        std::optional<double> lambda, fuzzy, reviewer_threshold;
        std::optional<std::size_t> k, hops, workers, dimension;
        std::optional<int> max_rounds;
        std::vector<std::string> ablate;
        bool no_multihop = false, timings = false, strict = false;
    } o;

    auto add_common = [&](CLI::App* cmd) {
        cmd->add_option("--config", o.config, "JSON configuration file (flags override it)");
        cmd->add_option("--graph", o.graph, "Triplet TSV file");
        cmd->add_option("--schema", o.schema, "Relation schema file (one relation per line)");
        cmd->add_option("--aliases", o.aliases, "Alias map JSON");
        cmd->add_option("--weights", o.weights, "Relation weight matrix JSON");
        cmd->add_option("--templates", o.templates, "Directory of prompt template overrides");
        cmd->add_option("--provider", o.provider, "Completion provider")->check(CLI::IsMember({"mock", "remote"}));
        cmd->add_option("--transcript", o.transcript, "Mock transcript JSON");
        cmd->add_flag("--strict-transcript", o.strict, "Key mock responses on the full prompt digest");
        cmd->add_option("--embedding", o.embedding, "Embedding backend")->check(CLI::IsMember({"hashing", "remote"}));
        cmd->add_option("--embedding-dim", o.dimension, "Embedding dimension");
        cmd->add_option("--lambda", o.lambda, "MMR relevance/diversity trade-off");
        cmd->add_option("--k", o.k, "Region size K");
        cmd->add_option("--hops,--hop-depth", o.hops, "Maximum number of hops H");
        cmd->add_option("--fuzzy-threshold", o.fuzzy, "Fuzzy entity-match threshold (0-100)");
        cmd->add_option("--reviewer-threshold", o.reviewer_threshold, "Reviewer acceptance threshold");
        cmd->add_option("--max-rounds", o.max_rounds, "Maximum revise rounds");
        cmd->add_option("--reviewer-backend", o.reviewer_backend, "rule-based or remote-llm");
        cmd->add_option("--ablate", o.ablate, "no_domain_prior, no_multihop, no_mmr, no_reviewer")
            ->check(CLI::IsMember({"no_domain_prior", "no_multihop", "no_mmr", "no_reviewer"}));
        cmd->add_flag("--no-multihop", o.no_multihop, "Answer the query as a single hop");
        cmd->add_option("--out", o.out, "Output file");
        cmd->add_flag("--timings", o.timings, "Include wall-clock timings in traces");
    };

    std::string question;
    std::string dataset;
    auto* ask = app.add_subcommand("ask", "Answer one question and print the pipeline result");
    add_common(ask);
    ask->add_option("question", question, "Question text")->required();

    auto* eval = app.add_subcommand("eval", "Evaluate a JSONL dataset and write a report");
    add_common(eval);
    eval->add_option("dataset", dataset, "Dataset JSONL")->required();
    eval->add_option("--protocol", o.protocol, "mcq or saq")->check(CLI::IsMember({"mcq", "saq"}));
    eval->add_option("--workers", o.workers, "Concurrent items");

    auto* region = app.add_subcommand("region", "Print per-hop regions without answering");
    add_common(region);
    region->add_option("question", question, "Question text")->required();

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        return app.exit(e, out, err) == 0 ? kExitOk : kExitUsage;
    }

    RunConfiguration config;
    try {
        if (o.config) config = load_config_file(*o.config);
        if (o.graph) config.graph = *o.graph;
        if (o.schema) config.schema = *o.schema;
        if (o.aliases) config.aliases = *o.aliases;
        if (o.weights) config.weights = *o.weights;
        if (o.templates) config.templates = *o.templates;
        if (o.provider) config.provider.kind = *o.provider;
        if (o.transcript) config.provider.transcript = *o.transcript;
        if (o.strict) config.provider.strict = true;
        if (o.embedding) config.embedding.kind = *o.embedding;
        if (o.dimension) config.embedding.dimension = *o.dimension;
        if (o.lambda) config.pipeline.region.lambda = *o.lambda;
        if (o.k) config.pipeline.region.k = *o.k;
        if (o.hops) config.pipeline.max_hops = *o.hops;
        if (o.fuzzy) config.pipeline.linker.fuzzy_threshold = *o.fuzzy;
        if (o.reviewer_threshold) config.pipeline.reviewer.threshold = *o.reviewer_threshold;
        if (o.max_rounds) config.pipeline.reviewer.max_rounds = *o.max_rounds;
        if (o.reviewer_backend) {
            auto b = parse_reviewer_backend(*o.reviewer_backend);
            if (!b) throw ValidationError("unknown reviewer backend " + *o.reviewer_backend);
            config.pipeline.reviewer.backend = *b;
        }
        for (const auto& flag : o.ablate) config.pipeline.ablations.set(flag);
        if (o.no_multihop) config.pipeline.ablations.no_multihop = true;
        if (o.protocol) config.protocol = *parse_protocol(*o.protocol);
        if (o.workers) config.workers = *o.workers;
        if (o.out) config.out = *o.out;
        if (o.timings) config.timings = true;
        apply_environment(config);
    } catch (const Error& e) {
        err << "error: " << e.what() << '\n';
        return kExitUsage;
    }

    if (*ask) return cmd_ask(config, question, out, err);
    if (*eval) return cmd_eval(config, dataset, out, err);
    return cmd_region(config, question, out, err);
}

}  // namespace regionqa
