#pragma once

#include <cstddef>
#include <filesystem>
#include <memory>
#include <optional>
#include <string>

#include <nlohmann/json.hpp>

#include "regionqa/embedding.hpp"
#include "regionqa/eval.hpp"
#include "regionqa/llm_gateway.hpp"
#include "regionqa/reasoner.hpp"

namespace regionqa {

struct ProviderSettings {
    std::string kind = "mock";  // mock | remote
    std::optional<std::filesystem::path> transcript;
    bool strict = false;
    RemoteEndpoint endpoint;
};

struct EmbeddingSettings {
    std::string kind = "hashing";  // hashing | remote
    std::size_t dimension = 384;
    RemoteEndpoint endpoint;
};

/// Everything a command needs. Defaults follow the reference settings
/// (lambda 0.7, K 15, H 3, fuzzy 90, reviewer 0.5, two revise rounds).
struct RunConfiguration {
    std::filesystem::path graph;
    std::optional<std::filesystem::path> schema;
    std::optional<std::filesystem::path> aliases;
    std::optional<std::filesystem::path> weights;
    std::optional<std::filesystem::path> templates;
    ProviderSettings provider;
    EmbeddingSettings embedding;
    PipelineConfig pipeline;
    Protocol protocol = Protocol::Mcq;
    std::size_t workers = 1;
    std::optional<std::filesystem::path> out;
    bool timings = false;

    /// Throws ValidationError on the first bad value or unreadable path.
    void validate() const;
    /// Effective configuration, secrets omitted.
    nlohmann::ordered_json to_json() const;
};

/// Applies a JSON config document. Relative paths resolve against `base_dir`.
void apply_config_json(RunConfiguration& config, const nlohmann::json& doc,
                       const std::filesystem::path& base_dir = {});
RunConfiguration load_config_file(const std::filesystem::path& path);

/// Tokens (and endpoint URLs not set elsewhere) from REGIONQA_LLM_* / REGIONQA_EMBED_*.
void apply_environment(RunConfiguration& config);

/// Loaded graph, providers, and engine for one configuration.
struct Runtime {
    std::shared_ptr<const KnowledgeGraph> graph;
    std::shared_ptr<const CompletionProvider> provider;
    std::shared_ptr<const Gateway> gateway;
    std::shared_ptr<const Engine> engine;
};

Runtime build_runtime(const RunConfiguration& config);

}  // namespace regionqa
