#pragma once

#include <cstddef>
#include <memory>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "regionqa/kg_store.hpp"
#include "regionqa/llm_gateway.hpp"
#include "regionqa/region.hpp"

namespace regionqa {

enum class ReviewerBackend { RuleBased, RemoteLlm };

std::string_view to_string(ReviewerBackend backend);
std::optional<ReviewerBackend> parse_reviewer_backend(std::string_view name);

struct ReviewerConfig {
    double threshold = 0.5;
    int max_rounds = 2;
    ReviewerBackend backend = ReviewerBackend::RuleBased;
};

/// s_theta in [0, 1].
class ReviewScore {
public:
    ReviewScore() = default;
    /// Clamps into [0, 1]; non-finite input becomes 0.
    explicit ReviewScore(double value);

    double value() const noexcept { return value_; }

private:
    double value_ = 0.0;
};

struct ReviewVerdict {
    Triplet triplet;
    ReviewScore score;
    bool accepted = false;
    int round = 0;                      // 0 = original hypothesis
    std::optional<Triplet> lineage;     // predecessor this one revises
    std::size_t root = 0;               // index of the input triplet this lineage started from
    std::vector<std::size_t> merged_roots;  // other lineages that converged on the same approved triplet
    std::string note;                   // e.g. scorer or revise failure
};

struct ReviewOutcome {
    std::vector<ReviewVerdict> approved;
    std::vector<ReviewVerdict> rejected;
    std::size_t revise_calls = 0;
    std::size_t rounds_run = 0;  // revision rounds actually executed
};

/// Scores one triplet against the region and schema.
class TripletScorer {
public:
    virtual ~TripletScorer() = default;
    /// Throws ReviewerError when no score can be produced.
    virtual ReviewScore score(const Triplet& t, std::string_view question, const Region& region,
                              const RelationSchema& schema) const = 0;
};

/// 1.0 iff relation is in the schema and both entities are region vertices.
class RuleBasedScorer final : public TripletScorer {
public:
    ReviewScore score(const Triplet& t, std::string_view question, const Region& region,
                      const RelationSchema& schema) const override;
};

/// Asks a completion provider for {"score": p} via the review_triplet template.
class LlmScorer final : public TripletScorer {
public:
    explicit LlmScorer(std::shared_ptr<const Gateway> gateway);

    ReviewScore score(const Triplet& t, std::string_view question, const Region& region,
                      const RelationSchema& schema) const override;

private:
    std::shared_ptr<const Gateway> gateway_;
};

/// Scores with the configured backend: rule-based, or `llm_scorer` for remote-llm.
ReviewScore score_triplet(const Triplet& t, std::string_view question, const Region& region,
                          const RelationSchema& schema, const ReviewerConfig& config,
                          const TripletScorer* llm_scorer = nullptr);

/// Textified triplet list: one "(h, r, t)" per line, or "(none)".
std::string textify(const std::vector<Triplet>& triplets, bool numbered = false);

/// Parses [[h, r, t], ...] into normalized triplets; malformed rows are skipped.
std::vector<Triplet> parse_triplet_list(const nlohmann::json& rows);

class Reviewer {
public:
    Reviewer(ReviewerConfig config, std::shared_ptr<const TripletScorer> scorer);

    /// Scores every input; rejected triplets go through at most max_rounds
    /// revise passes. Only accepted verdicts are returned as approved.
    ReviewOutcome verify_revise(const std::vector<Triplet>& triplets, std::string_view question,
                                const Region& region, const RelationSchema& schema, const Gateway& gateway,
                                CallLog* log = nullptr) const;

    const ReviewerConfig& config() const noexcept { return config_; }

private:
    ReviewVerdict judge(const Triplet& t, std::string_view question, const Region& region,
                        const RelationSchema& schema) const;

    ReviewerConfig config_;
    std::shared_ptr<const TripletScorer> scorer_;
};

ReviewOutcome verify_revise(const std::vector<Triplet>& triplets, std::string_view question, const Region& region,
                            const RelationSchema& schema, const ReviewerConfig& config, const Gateway& gateway,
                            CallLog* log = nullptr);

}  // namespace regionqa
