#pragma once

#include <chrono>
#include <cstddef>
#include <memory>
#include <optional>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include <nlohmann/json.hpp>

#include "regionqa/domain.hpp"
#include "regionqa/embedding.hpp"
#include "regionqa/entity_linker.hpp"
#include "regionqa/errors.hpp"
#include "regionqa/kg_store.hpp"
#include "regionqa/llm_gateway.hpp"
#include "regionqa/region.hpp"
#include "regionqa/reviewer.hpp"

namespace regionqa {

using ordered_json = nlohmann::ordered_json;

enum class ReasoningMode { KgStrict, Hybrid, LlmGuess };

std::string_view to_string(ReasoningMode mode);

/// >= 10 facts: KG_STRICT; 1..9: HYBRID; 0: LLM_GUESS.
ReasoningMode dispatch_mode(std::size_t n_facts);

inline constexpr std::size_t kStrictMinFacts = 10;
inline constexpr std::string_view kGuessPreamble = "Based on general knowledge,";

/// Ordered stage log. Every provider round trip is recorded with its response,
/// so a trace can be turned back into a mock transcript.
class Trace {
public:
    struct Event {
        std::string stage;
        ordered_json data;
        double elapsed_ms = 0.0;
    };

    void add(std::string stage, ordered_json data, double elapsed_ms = 0.0);
    /// Attaches provider calls to `data["llm_calls"]`.
    static void attach_calls(ordered_json& data, const CallLog& calls);

    const std::vector<Event>& events() const noexcept { return events_; }
    std::size_t count(std::string_view stage) const;
    ordered_json to_json(bool include_timings = false) const;

private:
    std::vector<Event> events_;
};

/// Mock transcript entries ({template, slot_digest, response}) for every call in the trace.
nlohmann::json transcript_from_trace(const ordered_json& trace_json);

class Stopwatch {
public:
    Stopwatch() : start_(std::chrono::steady_clock::now()) {}
    double elapsed_ms() const {
        return std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - start_).count();
    }

private:
    std::chrono::steady_clock::time_point start_;
};

struct QueryPlan {
    std::string original;
    DomainCategory domain = DomainCategory::Integrated;
    std::vector<std::string> hops;
    bool domain_fallback = false;
    bool decompose_fallback = false;
};

/// Accumulated (sub-question, sub-answer) pairs. Appending yields a new context.
class HopContext {
public:
    HopContext with(std::string question, std::string answer) const;

    const std::vector<std::pair<std::string, std::string>>& entries() const noexcept { return entries_; }
    bool empty() const noexcept { return entries_.empty(); }
    /// "Previously answered:" block injected into hop prompts.
    std::string render() const;

private:
    std::vector<std::pair<std::string, std::string>> entries_;
};

struct HopResult {
    std::string subquestion;
    std::string answer;
    std::vector<Triplet> triplets;  // T_i
    ReasoningMode mode = ReasoningMode::LlmGuess;
    Region region;
    ExpandedEntitySet entities;
    std::vector<Triplet> hypothesized;
    std::optional<ReviewOutcome> review;
    std::vector<Triplet> dropped;  // approved by the scorer but outside V_q / schema
};

struct EvidenceMap {
    std::vector<HopResult> hops;

    /// Union of per-hop T_i, hop order, without duplicates.
    std::vector<Triplet> flattened() const;
    /// Text form used in the synthesis prompt; hops listed 1..k.
    std::string serialize() const;
};

struct PipelineResult {
    std::string answer;
    QueryPlan plan;
    EvidenceMap evidence;
    Trace trace;

    /// Keys in order: answer, plan, evidence, trace.
    ordered_json to_json(bool include_timings = false) const;
};

/// Hard failure inside the pipeline; carries the trace collected so far.
class PipelineFailure : public PipelineError {
public:
    PipelineFailure(const std::string& what, ordered_json partial_trace)
        : PipelineError(what), partial_trace_(std::move(partial_trace)) {}

    const ordered_json& partial_trace() const noexcept { return partial_trace_; }

private:
    ordered_json partial_trace_;
};

struct Ablations {
    bool no_domain_prior = false;
    bool no_multihop = false;
    bool no_mmr = false;
    bool no_reviewer = false;

    /// Accepts "no_domain_prior", "no_multihop", "no_mmr", "no_reviewer".
    bool set(std::string_view flag);
    std::vector<std::string> active() const;
};

struct PipelineConfig {
    RegionConfig region;
    LinkerConfig linker;
    ReviewerConfig reviewer;
    std::size_t max_hops = 3;
    Ablations ablations;

    /// Region config with the MMR and domain-prior ablations applied.
    RegionConfig effective_region() const;
};

struct DomainDecision {
    DomainCategory domain = DomainCategory::Integrated;
    bool fallback = false;
};

DomainDecision classify_domain(std::string_view query, const Gateway& gateway, Trace& trace);

struct Decomposition {
    std::vector<std::string> hops;
    bool fallback = false;
};

/// Removes a leading "Hop n:" label.
std::string strip_hop_prefix(std::string_view hop);

Decomposition decompose_query(std::string_view query, std::size_t max_hops, const Gateway& gateway, Trace& trace);

struct HopDependencies {
    const Gateway& gateway;
    const Reviewer& reviewer;
    const RelationSchema& schema;
    bool no_reviewer = false;
};

/// Answers one hop strictly inside `region`. Throws PipelineFailure on a hard
/// completion failure in the answering step.
HopResult answer_hop(std::string_view subquestion, const Region& region, const HopContext& context,
                     ReasoningMode mode, const HopDependencies& deps, Trace& trace);

std::string synthesize_final(std::string_view query, const HopContext& context, const EvidenceMap& evidence,
                             const Gateway& gateway, Trace& trace);

/// Per-hop regions without answering (region inspection).
struct RegionPlan {
    QueryPlan plan;
    std::vector<std::pair<ExpandedEntitySet, Region>> hops;
    Trace trace;

    ordered_json to_json() const;
};

/// Everything a run needs. Shared pieces are immutable; one engine can serve
/// concurrent runs.
class Engine {
public:
    Engine(std::shared_ptr<const KnowledgeGraph> kg, std::shared_ptr<const AliasMap> aliases,
           std::shared_ptr<const RelationWeightMatrix> weights, std::shared_ptr<const EmbeddingProvider> embedder,
           std::shared_ptr<const Gateway> gateway, PipelineConfig config,
           std::shared_ptr<const TripletScorer> scorer = nullptr);

    PipelineResult run(std::string_view query) const;
    RegionPlan plan_regions(std::string_view query) const;

    const PipelineConfig& config() const noexcept { return config_; }
    const KnowledgeGraph& graph() const noexcept { return *kg_; }
    const Gateway& gateway() const noexcept { return *gateway_; }
    /// Same engine with other settings (used for ablation sweeps).
    Engine with_config(PipelineConfig config) const;

private:
    QueryPlan plan(std::string_view query, Trace& trace) const;
    std::pair<ExpandedEntitySet, Region> build_region(const std::string& hop, std::size_t index,
                                                      DomainCategory domain, const EmbeddingProvider& embedder,
                                                      Trace& trace) const;

    std::shared_ptr<const KnowledgeGraph> kg_;
    std::shared_ptr<const AliasMap> aliases_;
    std::shared_ptr<const RelationWeightMatrix> weights_;
    std::shared_ptr<const EmbeddingProvider> embedder_;
    std::shared_ptr<const Gateway> gateway_;
    std::shared_ptr<const TripletScorer> scorer_;
    PipelineConfig config_;
    std::shared_ptr<const EntityLinker> linker_;
};

PipelineResult run_pipeline(std::string_view query, const Engine& engine);

ordered_json to_json(const Triplet& t);
ordered_json to_json(const Region& region);
ordered_json to_json(const ReviewVerdict& v);

}  // namespace regionqa
