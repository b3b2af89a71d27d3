#include "regionqa/config.hpp"

#include <cstdlib>
#include <fstream>

#include "regionqa/errors.hpp"
#include "regionqa/region.hpp"
#include "regionqa/reviewer.hpp"

namespace fs = std::filesystem;

namespace regionqa {

namespace {

void require_file(const fs::path& p, const char* what) {
    std::error_code ec;
    if (!fs::is_regular_file(p, ec)) throw ValidationError(std::string(what) + " not found: " + p.string());
    std::ifstream probe(p);
    if (!probe) throw ValidationError(std::string(what) + " is not readable: " + p.string());
}

template <class T>
nlohmann::ordered_json opt_path(const std::optional<T>& p) {
    return p ? nlohmann::ordered_json(p->string()) : nlohmann::ordered_json(nullptr);
}

fs::path resolve(const fs::path& base, const std::string& value) {
    fs::path p(value);
    return p.is_absolute() || base.empty() ? p : base / p;
}

void apply_endpoint(RemoteEndpoint& ep, const nlohmann::json& j) {
    if (j.contains("url")) ep.url = j["url"].get<std::string>();
    if (j.contains("model")) ep.model = j["model"].get<std::string>();
    if (j.contains("timeout_seconds")) ep.timeout_seconds = j["timeout_seconds"].get<double>();
}

const char* env(const char* name) {
    const char* v = std::getenv(name);
    return v && *v ? v : nullptr;
}

}  // namespace

void RunConfiguration::validate() const {
    const auto& p = pipeline;
    if (graph.empty()) throw ValidationError("a graph file is required (--graph)");
    require_file(graph, "graph file");
    if (schema) require_file(*schema, "schema file");
    if (aliases) require_file(*aliases, "alias map");
    if (weights) require_file(*weights, "weight matrix");
    if (templates) {
        std::error_code ec;
        if (!fs::is_directory(*templates, ec)) throw ValidationError("template directory not found: " + templates->string());
    }
    if (provider.kind == "mock") {
        if (provider.transcript) require_file(*provider.transcript, "mock transcript");
    } else if (provider.kind == "remote") {
        if (provider.endpoint.url.empty()) throw ValidationError("remote provider needs an endpoint URL");
    } else {
        throw ValidationError("unknown provider \"" + provider.kind + "\" (expected mock or remote)");
    }
    if (embedding.kind == "remote") {
        if (embedding.endpoint.url.empty()) throw ValidationError("remote embedding needs an endpoint URL");
    } else if (embedding.kind != "hashing") {
        throw ValidationError("unknown embedding backend \"" + embedding.kind + "\" (expected hashing or remote)");
    }
    if (embedding.dimension < 1) throw ValidationError("embedding dimension must be positive");
    if (!(p.region.lambda >= 0.0 && p.region.lambda <= 1.0)) throw ValidationError("lambda must lie in [0, 1]");
    if (p.region.k < 1) throw ValidationError("K must be at least 1");
    if (p.max_hops < 1) throw ValidationError("hop budget must be at least 1");
    if (!(p.linker.fuzzy_threshold >= 0.0 && p.linker.fuzzy_threshold <= 100.0))
        throw ValidationError("fuzzy threshold must lie in [0, 100]");
    if (!(p.reviewer.threshold >= 0.0 && p.reviewer.threshold <= 1.0))
        throw ValidationError("reviewer threshold must lie in [0, 1]");
    if (p.reviewer.max_rounds < 0) throw ValidationError("max revise rounds must be >= 0");
    if (workers < 1) throw ValidationError("workers must be at least 1");
}

nlohmann::ordered_json RunConfiguration::to_json() const {
    nlohmann::ordered_json j;
    j["graph"] = graph.string();
    j["schema"] = opt_path(schema);
    j["aliases"] = opt_path(aliases);
    j["weights"] = opt_path(weights);
    j["templates"] = opt_path(templates);
    j["provider"] = {{"kind", provider.kind},
                     {"transcript", opt_path(provider.transcript)},
                     {"strict", provider.strict},
                     {"url", provider.endpoint.url},
                     {"model", provider.endpoint.model}};
    j["embedding"] = {{"kind", embedding.kind}, {"dimension", embedding.dimension}, {"url", embedding.endpoint.url}};
    j["lambda"] = pipeline.region.lambda;
    j["k"] = pipeline.region.k;
    j["hops"] = pipeline.max_hops;
    j["fuzzy_threshold"] = pipeline.linker.fuzzy_threshold;
    j["max_ngram"] = pipeline.linker.max_ngram;
    j["reviewer"] = {{"threshold", pipeline.reviewer.threshold},
                     {"max_rounds", pipeline.reviewer.max_rounds},
                     {"backend", to_string(pipeline.reviewer.backend)}};
    j["ablations"] = pipeline.ablations.active();
    j["protocol"] = to_string(protocol);
    j["workers"] = workers;
    return j;
}

void apply_config_json(RunConfiguration& c, const nlohmann::json& doc, const fs::path& base) {
    if (!doc.is_object()) throw ValidationError("configuration must be a JSON object");
    try {
        if (doc.contains("graph")) c.graph = resolve(base, doc["graph"].get<std::string>());
        if (doc.contains("schema")) c.schema = resolve(base, doc["schema"].get<std::string>());
        if (doc.contains("aliases")) c.aliases = resolve(base, doc["aliases"].get<std::string>());
        if (doc.contains("weights")) c.weights = resolve(base, doc["weights"].get<std::string>());
        if (doc.contains("templates")) c.templates = resolve(base, doc["templates"].get<std::string>());
        if (doc.contains("provider")) {
            const auto& p = doc["provider"];
            if (p.contains("kind")) c.provider.kind = p["kind"].get<std::string>();
            if (p.contains("transcript")) c.provider.transcript = resolve(base, p["transcript"].get<std::string>());
            if (p.contains("strict")) c.provider.strict = p["strict"].get<bool>();
            apply_endpoint(c.provider.endpoint, p);
        }
        if (doc.contains("embedding")) {
            const auto& e = doc["embedding"];
            if (e.contains("kind")) c.embedding.kind = e["kind"].get<std::string>();
            if (e.contains("dimension")) c.embedding.dimension = e["dimension"].get<std::size_t>();
            apply_endpoint(c.embedding.endpoint, e);
        }
        if (doc.contains("lambda")) c.pipeline.region.lambda = doc["lambda"].get<double>();
        if (doc.contains("k")) c.pipeline.region.k = doc["k"].get<std::size_t>();
        if (doc.contains("hops")) c.pipeline.max_hops = doc["hops"].get<std::size_t>();
        if (doc.contains("fuzzy_threshold")) c.pipeline.linker.fuzzy_threshold = doc["fuzzy_threshold"].get<double>();
        if (doc.contains("max_ngram")) c.pipeline.linker.max_ngram = doc["max_ngram"].get<std::size_t>();
        if (doc.contains("reviewer")) {
            const auto& r = doc["reviewer"];
            if (r.contains("threshold")) c.pipeline.reviewer.threshold = r["threshold"].get<double>();
            if (r.contains("max_rounds")) c.pipeline.reviewer.max_rounds = r["max_rounds"].get<int>();
            if (r.contains("backend")) {
                auto b = parse_reviewer_backend(r["backend"].get<std::string>());
                if (!b) throw ValidationError("unknown reviewer backend " + r["backend"].dump());
                c.pipeline.reviewer.backend = *b;
            }
        }
        if (doc.contains("ablations")) {
            for (const auto& flag : doc["ablations"]) {
                if (!c.pipeline.ablations.set(flag.get<std::string>()))
                    throw ValidationError("unknown ablation " + flag.dump());
            }
        }
        if (doc.contains("protocol")) {
            auto p = parse_protocol(doc["protocol"].get<std::string>());
            if (!p) throw ValidationError("unknown protocol " + doc["protocol"].dump());
            c.protocol = *p;
        }
        if (doc.contains("workers")) c.workers = doc["workers"].get<std::size_t>();
        if (doc.contains("out")) c.out = resolve(base, doc["out"].get<std::string>());
    } catch (const nlohmann::json::exception& e) {
        throw ValidationError(std::string("bad configuration value: ") + e.what());
    }
}

RunConfiguration load_config_file(const fs::path& path) {
    std::ifstream in(path);
    if (!in) throw ValidationError("cannot open configuration " + path.string());
    nlohmann::json doc;
    try {
        doc = nlohmann::json::parse(in);
    } catch (const nlohmann::json::parse_error& e) {
        throw ValidationError("configuration " + path.string() + " is not valid JSON: " + e.what());
    }
    RunConfiguration c;
    apply_config_json(c, doc, path.parent_path());
    return c;
}

void apply_environment(RunConfiguration& c) {
    if (auto v = env("REGIONQA_LLM_TOKEN")) c.provider.endpoint.token = v;
    if (auto v = env("REGIONQA_EMBED_TOKEN")) c.embedding.endpoint.token = v;
    if (c.provider.endpoint.url.empty()) {
        if (auto v = env("REGIONQA_LLM_URL")) c.provider.endpoint.url = v;
    }
    if (c.provider.endpoint.model.empty()) {
        if (auto v = env("REGIONQA_LLM_MODEL")) c.provider.endpoint.model = v;
    }
    if (c.embedding.endpoint.url.empty()) {
        if (auto v = env("REGIONQA_EMBED_URL")) c.embedding.endpoint.url = v;
    }
    if (c.embedding.endpoint.model.empty()) {
        if (auto v = env("REGIONQA_EMBED_MODEL")) c.embedding.endpoint.model = v;
    }
}

Runtime build_runtime(const RunConfiguration& c) {
    c.validate();
    Runtime rt;
    rt.graph = std::make_shared<const KnowledgeGraph>(load_graph(c.graph, c.schema));
    auto aliases = std::make_shared<const AliasMap>(c.aliases ? load_alias_map(*c.aliases) : AliasMap{});
    auto weights = std::make_shared<const RelationWeightMatrix>(c.weights ? load_weight_matrix(*c.weights)
                                                                          : RelationWeightMatrix::bundled());
    auto library = std::make_shared<const PromptLibrary>(c.templates ? PromptLibrary::from_directory(*c.templates)
                                                                     : PromptLibrary::bundled());
    if (c.provider.kind == "remote") {
        rt.provider = std::make_shared<const RemoteChatProvider>(c.provider.endpoint);
    } else if (c.provider.transcript) {
        rt.provider = std::make_shared<const MockProvider>(MockProvider::from_file(*c.provider.transcript, c.provider.strict));
    } else {
        rt.provider = std::make_shared<const MockProvider>(std::vector<MockProvider::Entry>{}, c.provider.strict);
    }
    rt.gateway = std::make_shared<const Gateway>(library, rt.provider);

    std::shared_ptr<const EmbeddingProvider> embedder;
    if (c.embedding.kind == "remote") {
        embedder = std::make_shared<const RemoteEmbedder>(c.embedding.endpoint, c.embedding.dimension);
    } else {
        embedder = std::make_shared<const HashingEmbedder>(c.embedding.dimension);
    }
    std::shared_ptr<const TripletScorer> scorer;
    if (c.pipeline.reviewer.backend == ReviewerBackend::RemoteLlm) scorer = std::make_shared<const LlmScorer>(rt.gateway);

    rt.engine = std::make_shared<const Engine>(rt.graph, aliases, weights, embedder, rt.gateway, c.pipeline, scorer);
    return rt;
}

}  // namespace regionqa
