#include "regionqa/reasoner.hpp"

#include <algorithm>
#include <regex>
#include <set>

#include "regionqa/text.hpp"

namespace regionqa {

std::string_view to_string(ReasoningMode mode) {
    switch (mode) {
        case ReasoningMode::KgStrict: return "KG_STRICT";
        case ReasoningMode::Hybrid: return "HYBRID";
        case ReasoningMode::LlmGuess: return "LLM_GUESS";
    }
    return "LLM_GUESS";
}

ReasoningMode dispatch_mode(std::size_t n_facts) {
    if (n_facts >= kStrictMinFacts) return ReasoningMode::KgStrict;
    if (n_facts >= 1) return ReasoningMode::Hybrid;
    return ReasoningMode::LlmGuess;
}

// ---------------------------------------------------------------------------
// Trace

void Trace::add(std::string stage, ordered_json data, double elapsed_ms) {
    events_.push_back({std::move(stage), std::move(data), elapsed_ms});
}

void Trace::attach_calls(ordered_json& data, const CallLog& calls) {
    auto arr = ordered_json::array();
    for (const auto& c : calls) {
        arr.push_back({{"template", to_string(c.id)},
                       {"slot_digest", c.slot_digest},
                       {"attempt", c.attempt},
                       {"parsed", c.parsed},
                       {"response", c.response}});
    }
    data["llm_calls"] = std::move(arr);
}

std::size_t Trace::count(std::string_view stage) const {
    return static_cast<std::size_t>(
        std::count_if(events_.begin(), events_.end(), [&](const Event& e) { return e.stage == stage; }));
}

ordered_json Trace::to_json(bool include_timings) const {
    auto arr = ordered_json::array();
    for (const auto& e : events_) {
        ordered_json row;
        row["stage"] = e.stage;
        row["data"] = e.data;
        if (include_timings) row["elapsed_ms"] = e.elapsed_ms;
        arr.push_back(std::move(row));
    }
    return arr;
}

nlohmann::json transcript_from_trace(const ordered_json& trace_json) {
    // Keep the last attempt per (template, slot digest): a retried prompt is
    // replayed by the mock with the same key, so only one response can win.
    std::vector<std::pair<std::string, std::string>> order;
    std::map<std::pair<std::string, std::string>, std::string> latest;
    for (const auto& event : trace_json) {
        const auto& data = event.at("data");
        if (!data.contains("llm_calls")) continue;
        for (const auto& call : data["llm_calls"]) {
            std::pair key{call.at("template").get<std::string>(), call.at("slot_digest").get<std::string>()};
            if (!latest.count(key)) order.push_back(key);
            latest[key] = call.at("response").get<std::string>();
        }
    }
    auto out = nlohmann::json::array();
    for (const auto& key : order) {
        out.push_back({{"template", key.first}, {"slot_digest", key.second}, {"response", latest[key]}});
    }
    return out;
}

// ---------------------------------------------------------------------------
// Context and evidence

HopContext HopContext::with(std::string question, std::string answer) const {
    HopContext next = *this;
    next.entries_.emplace_back(std::move(question), std::move(answer));
    return next;
}

std::string HopContext::render() const {
    if (entries_.empty()) return "Previously answered: (none)";
    std::string out = "Previously answered:";
    for (std::size_t i = 0; i < entries_.size(); ++i) {
        out += "\n" + std::to_string(i + 1) + ". Q: " + entries_[i].first;
        out += "\n   A: " + entries_[i].second;
    }
    return out;
}

std::vector<Triplet> EvidenceMap::flattened() const {
    std::vector<Triplet> out;
    std::set<Triplet> seen;
    for (const auto& hop : hops) {
        for (const auto& t : hop.triplets) {
            if (seen.insert(t).second) out.push_back(t);
        }
    }
    return out;
}

std::string EvidenceMap::serialize() const {
    std::string out;
    for (std::size_t i = 0; i < hops.size(); ++i) {
        const auto& hop = hops[i];
        if (i) out += "\n\n";
        out += "Hop " + std::to_string(i + 1) + " [" + std::string(to_string(hop.mode)) + "]\n";
        out += "Sub-question: " + hop.subquestion + "\n";
        out += "Sub-answer: " + hop.answer + "\n";
        out += hop.triplets.empty() ? "Triplets: (none)" : "Triplets:\n" + textify(hop.triplets);
    }
    return out;
}

// ---------------------------------------------------------------------------
// JSON helpers

ordered_json to_json(const Triplet& t) { return ordered_json::array({t.head, t.relation, t.tail}); }

namespace {

ordered_json triplets_json(const std::vector<Triplet>& ts) {
    auto arr = ordered_json::array();
    for (const auto& t : ts) arr.push_back(regionqa::to_json(t));
    return arr;
}

ordered_json entities_json(const ExpandedEntitySet& e) {
    ordered_json out;
    out["entities"] = e.entities;
    ordered_json prov = ordered_json::object();
    for (const auto& [entity, mentions] : e.provenance) {
        auto arr = ordered_json::array();
        for (const auto& m : mentions) {
            arr.push_back({{"surface", m.surface}, {"source", to_string(m.source)}});
        }
        prov[entity] = std::move(arr);
    }
    out["provenance"] = std::move(prov);
    return out;
}

ordered_json review_json(const ReviewOutcome& r) {
    ordered_json out;
    auto verdicts = [](const std::vector<ReviewVerdict>& vs) {
        auto arr = ordered_json::array();
        for (const auto& v : vs) arr.push_back(regionqa::to_json(v));
        return arr;
    };
    out["approved"] = verdicts(r.approved);
    out["rejected"] = verdicts(r.rejected);
    out["revise_calls"] = r.revise_calls;
    out["rounds_run"] = r.rounds_run;
    return out;
}

ordered_json plan_json(const QueryPlan& plan) {
    ordered_json out;
    out["original"] = plan.original;
    out["domain"] = to_string(plan.domain);
    out["domain_fallback"] = plan.domain_fallback;
    out["hops"] = plan.hops;
    out["decompose_fallback"] = plan.decompose_fallback;
    return out;
}

}  // namespace

ordered_json to_json(const Region& region) {
    ordered_json out;
    out["subquestion"] = region.subquestion;
    out["candidate_count"] = region.candidate_count;
    auto picks = ordered_json::array();
    for (std::size_t i = 0; i < region.selected.size(); ++i) {
        picks.push_back({{"triplet", to_json(region.selected[i])},
                         {"score", region.scores[i]},
                         {"relevance", region.relevance[i]}});
    }
    out["selected"] = std::move(picks);
    out["vertices"] = region.vertices;
    return out;
}

ordered_json to_json(const ReviewVerdict& v) {
    ordered_json out;
    out["triplet"] = to_json(v.triplet);
    out["score"] = v.score.value();
    out["accepted"] = v.accepted;
    out["round"] = v.round;
    out["lineage"] = v.lineage ? to_json(*v.lineage) : ordered_json(nullptr);
    out["root"] = v.root;
    out["merged_roots"] = v.merged_roots;
    if (!v.note.empty()) out["note"] = v.note;
    return out;
}

ordered_json PipelineResult::to_json(bool include_timings) const {
    ordered_json out;
    out["answer"] = answer;
    out["plan"] = plan_json(plan);

    ordered_json ev;
    auto hops = ordered_json::array();
    for (std::size_t i = 0; i < evidence.hops.size(); ++i) {
        const auto& h = evidence.hops[i];
        ordered_json row;
        row["index"] = i + 1;
        row["subquestion"] = h.subquestion;
        row["mode"] = regionqa::to_string(h.mode);
        row["answer"] = h.answer;
        row["entities"] = entities_json(h.entities);
        row["region"] = regionqa::to_json(h.region);
        row["triplets"] = triplets_json(h.triplets);
        row["hypothesized"] = triplets_json(h.hypothesized);
        row["review"] = h.review ? review_json(*h.review) : ordered_json(nullptr);
        if (!h.dropped.empty()) row["dropped"] = triplets_json(h.dropped);
        hops.push_back(std::move(row));
    }
    ev["hops"] = std::move(hops);
    ev["triplets"] = triplets_json(evidence.flattened());
    out["evidence"] = std::move(ev);
    out["trace"] = trace.to_json(include_timings);
    return out;
}

// ---------------------------------------------------------------------------
// Configuration

bool Ablations::set(std::string_view flag) {
    if (flag == "no_domain_prior") return no_domain_prior = true;
    if (flag == "no_multihop") return no_multihop = true;
    if (flag == "no_mmr") return no_mmr = true;
    if (flag == "no_reviewer") return no_reviewer = true;
    return false;
}

std::vector<std::string> Ablations::active() const {
    std::vector<std::string> out;
    if (no_domain_prior) out.emplace_back("no_domain_prior");
    if (no_multihop) out.emplace_back("no_multihop");
    if (no_mmr) out.emplace_back("no_mmr");
    if (no_reviewer) out.emplace_back("no_reviewer");
    return out;
}

RegionConfig PipelineConfig::effective_region() const {
    RegionConfig r = region;
    if (ablations.no_mmr) r.mmr_enabled = false;
    if (ablations.no_domain_prior) r.domain_prior_enabled = false;
    return r;
}

// ---------------------------------------------------------------------------
// Stages

DomainDecision classify_domain(std::string_view query, const Gateway& gateway, Trace& trace) {
    Stopwatch clock;
    CallLog log;
    DomainDecision decision;
    ordered_json data;
    try {
        auto prompt = gateway.render(TemplateId::DomainClassify, {{"user_question", std::string(query)}});
        auto payload = gateway.complete_json(prompt, CompletionParams::classification(), &log);
        const auto& parsed = payload.parsed;
        std::optional<DomainCategory> domain;
        if (parsed.is_object() && parsed.contains("category") && parsed["category"].is_string()) {
            domain = parse_domain(parsed["category"].get<std::string>());
        }
        if (domain) {
            decision.domain = *domain;
        } else {
            decision.fallback = true;
            data["reason"] = "category missing or outside the enumeration";
        }
    } catch (const Error& e) {
        decision.fallback = true;
        data["reason"] = e.what();
    }
    data["domain"] = to_string(decision.domain);
    data["fallback"] = decision.fallback;
    Trace::attach_calls(data, log);
    trace.add("classify_domain", std::move(data), clock.elapsed_ms());
    return decision;
}

std::string strip_hop_prefix(std::string_view hop) {
    static const std::regex prefix(R"(^\s*hop\s*\d+\s*[:.)\-]\s*)", std::regex::icase);
    return trim(std::regex_replace(std::string(hop), prefix, "", std::regex_constants::format_first_only));
}

Decomposition decompose_query(std::string_view query, std::size_t max_hops, const Gateway& gateway, Trace& trace) {
    if (max_hops < 1) throw ValidationError("hop budget must be at least 1");
    Stopwatch clock;
    CallLog log;
    Decomposition out;
    ordered_json data;
    try {
        auto prompt = gateway.render(TemplateId::Decompose, {{"user_question", std::string(query)}});
        auto payload = gateway.complete_json(prompt, CompletionParams::reasoning(), &log);
        const auto& parsed = payload.parsed;
        const auto& list = parsed.is_object() && parsed.contains("hops") ? parsed["hops"] : parsed;
        if (list.is_array()) {
            for (const auto& h : list) {
                if (!h.is_string()) continue;
                auto text = strip_hop_prefix(h.get<std::string>());
                if (!text.empty()) out.hops.push_back(std::move(text));
            }
        }
        if (out.hops.empty()) data["reason"] = "no usable hops in completion";
    } catch (const Error& e) {
        data["reason"] = e.what();
    }
    if (out.hops.empty()) {
        out.fallback = true;
        out.hops = {std::string(query)};
    }
    if (out.hops.size() > max_hops) {
        data["truncated_from"] = out.hops.size();
        out.hops.resize(max_hops);
    }
    data["hops"] = out.hops;
    data["fallback"] = out.fallback;
    Trace::attach_calls(data, log);
    trace.add("decompose", std::move(data), clock.elapsed_ms());
    return out;
}

namespace {

bool closed_world(const Triplet& t, const Region& region, const RelationSchema& schema) {
    return schema.contains(t.relation) && region.has_vertex(t.head) && region.has_vertex(t.tail);
}

std::string ensure_guess_preamble(std::string answer) {
    if (answer.rfind(kGuessPreamble, 0) == 0) return answer;
    return std::string(kGuessPreamble) + " " + answer;
}

[[noreturn]] void fail(Trace& trace, std::string stage, ordered_json data, const std::string& what) {
    data["error"] = what;
    trace.add(std::move(stage), std::move(data));
    throw PipelineFailure(what, trace.to_json());
}

}  // namespace

HopResult answer_hop(std::string_view subquestion, const Region& region, const HopContext& context,
                     ReasoningMode mode, const HopDependencies& deps, Trace& trace) {
    Stopwatch clock;
    CallLog log;
    HopResult hop;
    hop.subquestion = std::string(subquestion);
    hop.mode = mode;
    hop.region = region;

    ordered_json data;
    data["subquestion"] = hop.subquestion;
    data["mode"] = to_string(mode);
    data["n_facts"] = region.n_facts();

    const std::string ctx = context.render();
    TemplateId answer_template = TemplateId::HopGuess;
    Slots slots{{"context", ctx}, {"hop_question", hop.subquestion}};

    try {
        if (mode == ReasoningMode::KgStrict) {
            hop.triplets = region.selected;
            answer_template = TemplateId::HopStrict;
        } else if (mode == ReasoningMode::Hybrid) {
            std::vector<std::string> vertices(region.vertices.begin(), region.vertices.end());
            auto prompt = deps.gateway.render(TemplateId::Hypothesize,
                                              {{"hop_question", hop.subquestion},
                                               {"known_facts", textify(region.selected)},
                                               {"allowed_entities", join(vertices, ", ")},
                                               {"allowed_relations", deps.schema.joined()},
                                               {"context", ctx}});
            try {
                auto payload = deps.gateway.complete_json(prompt, CompletionParams::reasoning(), &log);
                const auto& parsed = payload.parsed;
                hop.hypothesized =
                    parse_triplet_list(parsed.is_object() && parsed.contains("Triplets") ? parsed["Triplets"] : parsed);
            } catch (const ExtractionError& e) {
                data["hypothesize_failed"] = e.what();
            }

            std::vector<Triplet> approved;
            if (deps.no_reviewer) {
                // Verification removed: schema membership is the only gate.
                for (const auto& t : hop.hypothesized) {
                    if (deps.schema.contains(t.relation)) approved.push_back(t);
                }
            } else {
                hop.review = deps.reviewer.verify_revise(hop.hypothesized, hop.subquestion, region, deps.schema,
                                                         deps.gateway, &log);
                for (const auto& v : hop.review->approved) {
                    if (closed_world(v.triplet, region, deps.schema)) {
                        approved.push_back(v.triplet);
                    } else {
                        hop.dropped.push_back(v.triplet);
                    }
                }
                data["review"] = {{"approved", hop.review->approved.size()},
                                  {"rejected", hop.review->rejected.size()},
                                  {"revise_calls", hop.review->revise_calls},
                                  {"rounds_run", hop.review->rounds_run}};
            }
            data["hypothesized"] = hop.hypothesized.size();

            hop.triplets = region.selected;
            std::set<Triplet> seen(hop.triplets.begin(), hop.triplets.end());
            for (auto& t : approved) {
                if (seen.insert(t).second) hop.triplets.push_back(std::move(t));
            }
            answer_template = TemplateId::HopHybrid;
        }

        if (answer_template != TemplateId::HopGuess) slots["verified_triplets"] = textify(hop.triplets);
        auto prompt = deps.gateway.render(answer_template, slots);
        hop.answer = trim(deps.gateway.complete_text(prompt, CompletionParams::reasoning(), &log));
    } catch (const PipelineFailure&) {
        throw;
    } catch (const Error& e) {
        Trace::attach_calls(data, log);
        fail(trace, "hop_error", std::move(data), std::string("hop answering failed: ") + e.what());
    }

    if (mode == ReasoningMode::LlmGuess) hop.answer = ensure_guess_preamble(std::move(hop.answer));
    data["triplets"] = hop.triplets.size();
    Trace::attach_calls(data, log);
    trace.add("hop_answer", std::move(data), clock.elapsed_ms());
    return hop;
}

std::string synthesize_final(std::string_view query, const HopContext&, const EvidenceMap& evidence,
                             const Gateway& gateway, Trace& trace) {
    Stopwatch clock;
    CallLog log;
    ordered_json data;
    if (evidence.hops.empty()) fail(trace, "synthesis_error", std::move(data), "synthesis needs at least one hop");
    std::string answer;
    try {
        auto prompt = gateway.render(TemplateId::Synthesize,
                                     {{"original_query", std::string(query)}, {"evidence_map", evidence.serialize()}});
        answer = gateway.complete_text(prompt, CompletionParams::synthesis(), &log);
    } catch (const Error& e) {
        Trace::attach_calls(data, log);
        fail(trace, "synthesis_error", std::move(data), std::string("synthesis failed: ") + e.what());
    }
    Trace::attach_calls(data, log);
    trace.add("synthesize", std::move(data), clock.elapsed_ms());
    return answer;
}

// ---------------------------------------------------------------------------
// Engine

Engine::Engine(std::shared_ptr<const KnowledgeGraph> kg, std::shared_ptr<const AliasMap> aliases,
               std::shared_ptr<const RelationWeightMatrix> weights, std::shared_ptr<const EmbeddingProvider> embedder,
               std::shared_ptr<const Gateway> gateway, PipelineConfig config,
               std::shared_ptr<const TripletScorer> scorer)
    : kg_(std::move(kg)),
      aliases_(aliases ? std::move(aliases) : std::make_shared<const AliasMap>()),
      weights_(weights ? std::move(weights) : std::make_shared<const RelationWeightMatrix>(RelationWeightMatrix::bundled())),
      embedder_(std::move(embedder)),
      gateway_(std::move(gateway)),
      scorer_(std::move(scorer)),
      config_(std::move(config)) {
    if (!kg_) throw ValidationError("engine needs a knowledge graph");
    if (!embedder_) throw ValidationError("engine needs an embedding provider");
    if (!gateway_) throw ValidationError("engine needs a completion gateway");
    if (config_.max_hops < 1) throw ValidationError("hop budget must be at least 1");
    if (config_.region.k < 1) throw ValidationError("region size K must be at least 1");
    if (!(config_.region.lambda >= 0.0 && config_.region.lambda <= 1.0))
        throw ValidationError("lambda must lie in [0, 1]");
    linker_ = std::make_shared<const EntityLinker>(*kg_, *aliases_, config_.linker);
}

Engine Engine::with_config(PipelineConfig config) const {
    return Engine(kg_, aliases_, weights_, embedder_, gateway_, std::move(config), scorer_);
}

QueryPlan Engine::plan(std::string_view query, Trace& trace) const {
    QueryPlan plan;
    plan.original = std::string(query);
    // Classification runs even under the domain-prior ablation; only the weights change.
    auto decision = classify_domain(query, *gateway_, trace);
    plan.domain = decision.domain;
    plan.domain_fallback = decision.fallback;
    if (config_.ablations.no_multihop) {
        plan.hops = {plan.original};
        trace.add("decompose", {{"skipped", "no_multihop"}, {"hops", plan.hops}});
    } else {
        auto d = decompose_query(query, config_.max_hops, *gateway_, trace);
        plan.hops = std::move(d.hops);
        plan.decompose_fallback = d.fallback;
    }
    return plan;
}

std::pair<ExpandedEntitySet, Region> Engine::build_region(const std::string& hop, std::size_t index,
                                                          DomainCategory domain, const EmbeddingProvider& embedder,
                                                          Trace& trace) const {
    Stopwatch clock;
    auto entities = linker_->link(hop);
    auto region = select_region(hop, entities, *kg_, domain, *weights_, config_.effective_region(), embedder);
    ordered_json data;
    data["hop"] = index;
    data["entities"] = entities.entities;
    data["candidates"] = region.candidate_count;
    data["n_facts"] = region.n_facts();
    trace.add("region_select", std::move(data), clock.elapsed_ms());
    return {std::move(entities), std::move(region)};
}

PipelineResult Engine::run(std::string_view query) const {
    PipelineResult result;
    Trace& trace = result.trace;
    CachingEmbedder embedder(embedder_);  // memoized per run
    Reviewer reviewer(config_.reviewer, scorer_);
    HopDependencies deps{*gateway_, reviewer, kg_->schema(), config_.ablations.no_reviewer};

    try {
        result.plan = plan(query, trace);
        HopContext context;
        for (std::size_t i = 0; i < result.plan.hops.size(); ++i) {
            const auto& q = result.plan.hops[i];
            auto [entities, region] = build_region(q, i + 1, result.plan.domain, embedder, trace);
            auto hop = answer_hop(q, region, context, dispatch_mode(region.n_facts()), deps, trace);
            hop.entities = std::move(entities);
            context = context.with(hop.subquestion, hop.answer);
            result.evidence.hops.push_back(std::move(hop));
        }
        result.answer = synthesize_final(query, context, result.evidence, *gateway_, trace);
    } catch (const PipelineFailure&) {
        throw;
    } catch (const Error& e) {
        throw PipelineFailure(e.what(), trace.to_json());
    }
    return result;
}

RegionPlan Engine::plan_regions(std::string_view query) const {
    RegionPlan out;
    CachingEmbedder embedder(embedder_);
    out.plan = plan(query, out.trace);
    for (std::size_t i = 0; i < out.plan.hops.size(); ++i) {
        out.hops.push_back(build_region(out.plan.hops[i], i + 1, out.plan.domain, embedder, out.trace));
    }
    return out;
}

ordered_json RegionPlan::to_json() const {
    ordered_json out;
    out["plan"] = plan_json(plan);
    auto arr = ordered_json::array();
    for (std::size_t i = 0; i < hops.size(); ++i) {
        ordered_json row;
        row["index"] = i + 1;
        row["entities"] = entities_json(hops[i].first);
        row["region"] = regionqa::to_json(hops[i].second);
        row["mode"] = regionqa::to_string(dispatch_mode(hops[i].second.n_facts()));
        arr.push_back(std::move(row));
    }
    out["hops"] = std::move(arr);
    out["trace"] = trace.to_json();
    return out;
}

PipelineResult run_pipeline(std::string_view query, const Engine& engine) { return engine.run(query); }

}  // namespace regionqa
