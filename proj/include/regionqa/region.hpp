#pragma once

#include <cstddef>
#include <filesystem>
#include <map>
#include <set>
#include <string>
#include <string_view>
#include <vector>

#include "regionqa/domain.hpp"
#include "regionqa/embedding.hpp"
#include "regionqa/entity_linker.hpp"
#include "regionqa/kg_store.hpp"

namespace regionqa {

/// Domain-specific relation weights w_r. Lookup is total: missing cells fall
/// back to default_weight. Relation keys are canonicalized (lowercase, spaces
/// as underscores) so "Interacts_with" and "interacts with" are the same key.
class RelationWeightMatrix {
public:
    RelationWeightMatrix() = default;

    void set(std::string_view relation, DomainCategory domain, double weight);
    /// Stored weight, or default_weight() when the cell is absent.
    double get(std::string_view relation, DomainCategory domain) const;
    bool contains(std::string_view relation, DomainCategory domain) const;

    double default_weight() const noexcept { return default_weight_; }
    void set_default_weight(double w) { default_weight_ = w; }

    /// Canonical relation keys present in the matrix.
    std::vector<std::string> relations() const;

    /// The relation-weighting table bundled with the library (8 relations x 5 domains).
    static RelationWeightMatrix bundled();

    static std::string canonical_key(std::string_view relation);

private:
    std::map<std::string, std::map<DomainCategory, double>, std::less<>> weights_;
    double default_weight_ = 1.0;
};

/// JSON {relation: {domain: weight}}.
RelationWeightMatrix load_weight_matrix(const std::filesystem::path& path);
RelationWeightMatrix parse_weight_matrix(std::string_view json_text);

struct RegionConfig {
    double lambda = 0.7;
    std::size_t k = 15;
    bool domain_prior_enabled = true;
    bool mmr_enabled = true;
};

double relation_weight(const RelationWeightMatrix& matrix, std::string_view relation, DomainCategory domain,
                       bool domain_prior_enabled = true);

/// lambda * relevance * w_r - (1 - lambda) * max_redundancy, or relevance * w_r
/// when MMR is disabled. `max_redundancy` is the max similarity to the already
/// selected set (0 for an empty set).
double mmr_score(double relevance, double weight, double max_redundancy, const RegionConfig& config);

/// Same criterion computed from embeddings.
double mmr_score(const Triplet& t, const Vector& query_embedding, const std::vector<Triplet>& selected,
                 const RegionConfig& config, double weight, const EmbeddingProvider& embedder);

/// G_q: the selected triplets (greedy order) and their entity closure.
struct Region {
    std::string subquestion;
    std::vector<Triplet> selected;
    std::vector<double> scores;     // MMR score of each pick at selection time
    std::vector<double> relevance;  // Sim(q_i, t) of each pick
    std::set<std::string> vertices;
    std::size_t candidate_count = 0;

    std::size_t n_facts() const noexcept { return selected.size(); }
    bool has_vertex(std::string_view v) const { return vertices.find(std::string(v)) != vertices.end(); }
    bool contains(const Triplet& t) const;
};

/// Greedy weighted-MMR selection over the triplets incident to `entities`.
/// Ties: higher raw relevance, then smaller triplet_text, then triplet order.
Region select_region(std::string_view subquestion, const ExpandedEntitySet& entities, const KnowledgeGraph& kg,
                     DomainCategory domain, const RelationWeightMatrix& matrix, const RegionConfig& config,
                     const EmbeddingProvider& embedder);

/// Same selection over an explicit candidate list.
Region select_from_candidates(std::string_view subquestion, std::vector<Triplet> candidates,
                              DomainCategory domain, const RelationWeightMatrix& matrix,
                              const RegionConfig& config, const EmbeddingProvider& embedder);

}  // namespace regionqa
