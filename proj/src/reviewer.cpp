#include "regionqa/reviewer.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "regionqa/errors.hpp"

namespace regionqa {

std::string_view to_string(ReviewerBackend backend) {
    return backend == ReviewerBackend::RuleBased ? "rule-based" : "remote-llm";
}

std::optional<ReviewerBackend> parse_reviewer_backend(std::string_view name) {
    if (name == "rule-based" || name == "rule") return ReviewerBackend::RuleBased;
    if (name == "remote-llm" || name == "llm" || name == "remote") return ReviewerBackend::RemoteLlm;
    return std::nullopt;
}

ReviewScore::ReviewScore(double value) : value_(std::isfinite(value) ? std::clamp(value, 0.0, 1.0) : 0.0) {}

ReviewScore RuleBasedScorer::score(const Triplet& t, std::string_view, const Region& region,
                                   const RelationSchema& schema) const {
    const bool ok = schema.contains(t.relation) && region.has_vertex(t.head) && region.has_vertex(t.tail);
    return ReviewScore(ok ? 1.0 : 0.0);
}

std::string textify(const std::vector<Triplet>& triplets, bool numbered) {
    if (triplets.empty()) return "(none)";
    std::string out;
    for (std::size_t i = 0; i < triplets.size(); ++i) {
        if (i) out.push_back('\n');
        if (numbered) out += std::to_string(i + 1) + ". ";
        out += to_string(triplets[i]);
    }
    return out;
}

LlmScorer::LlmScorer(std::shared_ptr<const Gateway> gateway) : gateway_(std::move(gateway)) {}

ReviewScore LlmScorer::score(const Triplet& t, std::string_view question, const Region& region,
                             const RelationSchema& schema) const {
    auto prompt = gateway_->render(TemplateId::ReviewTriplet, {{"q", std::string(question)},
                                                               {"t", to_string(t)},
                                                               {"region_facts", textify(region.selected, true)},
                                                               {"allowed_relations", schema.joined()}});
    try {
        auto payload = gateway_->complete_json(prompt, CompletionParams::judging());
        const auto& v = payload.parsed.contains("score") ? payload.parsed["score"] : payload.parsed;
        if (v.is_number()) return ReviewScore(v.get<double>());
        if (v.is_string()) return ReviewScore(std::stod(v.get<std::string>()));
    } catch (const ExtractionError&) {
    } catch (const std::logic_error&) {  // stod: invalid_argument / out_of_range
    }
    throw ReviewerError("reviewer response carries no probability for " + to_string(t));
}

ReviewScore score_triplet(const Triplet& t, std::string_view question, const Region& region,
                          const RelationSchema& schema, const ReviewerConfig& config,
                          const TripletScorer* llm_scorer) {
    if (config.backend == ReviewerBackend::RemoteLlm) {
        if (!llm_scorer) throw ReviewerError("remote-llm reviewer backend has no scorer configured");
        return llm_scorer->score(t, question, region, schema);
    }
    return RuleBasedScorer{}.score(t, question, region, schema);
}

std::vector<Triplet> parse_triplet_list(const nlohmann::json& rows) {
    std::vector<Triplet> out;
    if (!rows.is_array()) return out;
    for (const auto& row : rows) {
        if (!row.is_array() || row.size() != 3) continue;
        if (!row[0].is_string() || !row[1].is_string() || !row[2].is_string()) continue;
        if (auto t = make_triplet(row[0].get<std::string>(), row[1].get<std::string>(), row[2].get<std::string>())) {
            out.push_back(std::move(*t));
        }
    }
    return out;
}

Reviewer::Reviewer(ReviewerConfig config, std::shared_ptr<const TripletScorer> scorer)
    : config_(config), scorer_(std::move(scorer)) {
    if (!scorer_) {
        if (config_.backend == ReviewerBackend::RemoteLlm)
            throw ValidationError("remote-llm reviewer backend needs a scorer");
        scorer_ = std::make_shared<RuleBasedScorer>();
    }
    if (config_.max_rounds < 0) throw ValidationError("reviewer max_rounds must be >= 0");
}

ReviewVerdict Reviewer::judge(const Triplet& t, std::string_view question, const Region& region,
                              const RelationSchema& schema) const {
    ReviewVerdict v;
    v.triplet = t;
    try {
        v.score = scorer_->score(t, question, region, schema);
    } catch (const ReviewerError& e) {
        v.score = ReviewScore(0.0);
        v.note = e.what();
    }
    v.accepted = v.score.value() >= config_.threshold;
    return v;
}

ReviewOutcome Reviewer::verify_revise(const std::vector<Triplet>& triplets, std::string_view question,
                                      const Region& region, const RelationSchema& schema, const Gateway& gateway,
                                      CallLog* log) const {
    ReviewOutcome out;

    auto approve = [&](ReviewVerdict v) {
        auto dup = std::find_if(out.approved.begin(), out.approved.end(),
                                [&](const ReviewVerdict& a) { return a.triplet == v.triplet; });
        if (dup == out.approved.end()) {
            out.approved.push_back(std::move(v));
        } else if (dup->root != v.root) {
            dup->merged_roots.push_back(v.root);
        }
    };

    std::vector<ReviewVerdict> pending;
    for (std::size_t i = 0; i < triplets.size(); ++i) {
        auto v = judge(triplets[i], question, region, schema);
        v.round = 0;
        v.root = i;
        if (v.accepted) {
            approve(std::move(v));
        } else {
            pending.push_back(std::move(v));
        }
    }

    const std::string allowed = schema.joined();
    for (int round = 1; round <= config_.max_rounds && !pending.empty(); ++round) {
        ++out.rounds_run;
        std::vector<ReviewVerdict> next;
        for (auto& prev : pending) {
            auto prompt = gateway.render(TemplateId::Revise,
                                         {{"allowed_relations", allowed}, {"t", to_string(prev.triplet)},
                                          {"q", std::string(question)}});
            ++out.revise_calls;
            std::vector<Triplet> revised;
            try {
                auto payload = gateway.complete_json(prompt, CompletionParams::reasoning(), log);
                const auto& parsed = payload.parsed;
                revised = parse_triplet_list(parsed.contains("Revised_Triplets") ? parsed["Revised_Triplets"] : parsed);
            } catch (const ExtractionError&) {
                prev.note = "revise output could not be parsed in round " + std::to_string(round);
                prev.round = round;
                out.rejected.push_back(std::move(prev));
                continue;
            }
            if (revised.empty()) {
                prev.note = "revise produced no triplets in round " + std::to_string(round);
                prev.round = round;
                out.rejected.push_back(std::move(prev));
                continue;
            }
            for (const auto& t : revised) {
                auto v = judge(t, question, region, schema);
                v.round = round;
                v.lineage = prev.triplet;
                v.root = prev.root;
                if (v.accepted) {
                    approve(std::move(v));
                } else if (round == config_.max_rounds) {
                    out.rejected.push_back(std::move(v));
                } else {
                    next.push_back(std::move(v));
                }
            }
        }
        pending = std::move(next);
    }
    // max_rounds == 0: round-0 rejections are final.
    for (auto& v : pending) out.rejected.push_back(std::move(v));
    return out;
}

ReviewOutcome verify_revise(const std::vector<Triplet>& triplets, std::string_view question, const Region& region,
                            const RelationSchema& schema, const ReviewerConfig& config, const Gateway& gateway,
                            CallLog* log) {
    return Reviewer(config, nullptr).verify_revise(triplets, question, region, schema, gateway, log);
}

}  // namespace regionqa
