#include "regionqa/region.hpp"

#include <algorithm>
#include <cctype>
#include <fstream>
#include <limits>
#include <sstream>

#include <nlohmann/json.hpp>

#include "regionqa/assets.hpp"
#include "regionqa/errors.hpp"

namespace regionqa {

std::string RelationWeightMatrix::canonical_key(std::string_view relation) {
    std::string key;
    bool pending = false;
    for (char c : relation) {
        if (std::isspace(static_cast<unsigned char>(c)) || c == '_') {
            pending = !key.empty();
            continue;
        }
        if (pending) {
            key.push_back('_');
            pending = false;
        }
        key.push_back(static_cast<char>(std::tolower(static_cast<unsigned char>(c))));
    }
    return key;
}

void RelationWeightMatrix::set(std::string_view relation, DomainCategory domain, double weight) {
    weights_[canonical_key(relation)][domain] = weight;
}

double RelationWeightMatrix::get(std::string_view relation, DomainCategory domain) const {
    auto it = weights_.find(canonical_key(relation));
    if (it == weights_.end()) return default_weight_;
    auto cell = it->second.find(domain);
    return cell == it->second.end() ? default_weight_ : cell->second;
}

bool RelationWeightMatrix::contains(std::string_view relation, DomainCategory domain) const {
    auto it = weights_.find(canonical_key(relation));
    return it != weights_.end() && it->second.count(domain) > 0;
}

std::vector<std::string> RelationWeightMatrix::relations() const {
    std::vector<std::string> out;
    for (const auto& [r, _] : weights_) out.push_back(r);
    return out;
}

RelationWeightMatrix RelationWeightMatrix::bundled() {
    return parse_weight_matrix(assets::relation_weights_json());
}

RelationWeightMatrix parse_weight_matrix(std::string_view json_text) {
    nlohmann::json doc;
    try {
        doc = nlohmann::json::parse(json_text);
    } catch (const nlohmann::json::parse_error& e) {
        throw ValidationError(std::string("weight matrix is not valid JSON: ") + e.what());
    }
    if (!doc.is_object()) throw ValidationError("weight matrix must be a JSON object");
    RelationWeightMatrix m;
    for (const auto& [relation, row] : doc.items()) {
        if (!row.is_object()) throw ValidationError("weight row for '" + relation + "' must be an object");
        for (const auto& [domain_name, w] : row.items()) {
            auto domain = parse_domain(domain_name);
            if (!domain) throw ValidationError("unknown domain '" + domain_name + "' in weight matrix");
            if (!w.is_number() || w.get<double>() <= 0.0) {
                throw ValidationError("weight for (" + relation + ", " + domain_name + ") must be a positive number");
            }
            m.set(relation, *domain, w.get<double>());
        }
    }
    return m;
}

RelationWeightMatrix load_weight_matrix(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw LoadError("cannot open weight matrix: " + path.string());
    std::stringstream buf;
    buf << in.rdbuf();
    return parse_weight_matrix(buf.str());
}

double relation_weight(const RelationWeightMatrix& matrix, std::string_view relation, DomainCategory domain,
                       bool domain_prior_enabled) {
    if (!domain_prior_enabled) return 1.0;
    return matrix.get(relation, domain);
}

double mmr_score(double relevance, double weight, double max_redundancy, const RegionConfig& config) {
    if (!config.mmr_enabled) return relevance * weight;
    return config.lambda * relevance * weight - (1.0 - config.lambda) * max_redundancy;
}

double mmr_score(const Triplet& t, const Vector& query_embedding, const std::vector<Triplet>& selected,
                 const RegionConfig& config, double weight, const EmbeddingProvider& embedder) {
    const auto te = embedder.embed(triplet_text(t));
    double max_redundancy = 0.0;
    if (!selected.empty()) {
        max_redundancy = -std::numeric_limits<double>::infinity();
        for (const auto& s : selected) max_redundancy = std::max(max_redundancy, cosine(te, embedder.embed(triplet_text(s))));
    }
    return mmr_score(cosine(query_embedding, te), weight, max_redundancy, config);
}

bool Region::contains(const Triplet& t) const {
    return std::find(selected.begin(), selected.end(), t) != selected.end();
}

Region select_from_candidates(std::string_view subquestion, std::vector<Triplet> candidates,
                              DomainCategory domain, const RelationWeightMatrix& matrix,
                              const RegionConfig& config, const EmbeddingProvider& embedder) {
    Region region;
    region.subquestion = std::string(subquestion);
    region.candidate_count = candidates.size();
    if (candidates.empty() || config.k == 0) return region;

    const std::size_t n = candidates.size();
    std::vector<std::string> texts(n);
    for (std::size_t i = 0; i < n; ++i) texts[i] = triplet_text(candidates[i]);
    const auto embeddings = embedder.embed_batch(texts);
    const auto query = embedder.embed(subquestion);

    std::vector<double> relevance(n), weight(n);
    for (std::size_t i = 0; i < n; ++i) {
        relevance[i] = cosine(query, embeddings[i]);
        weight[i] = relation_weight(matrix, candidates[i].relation, domain, config.domain_prior_enabled);
    }

    // Running max similarity of each candidate to the selected set.
    std::vector<double> redundancy(n, 0.0);
    std::vector<bool> taken(n, false);
    const std::size_t rounds = std::min(config.k, n);
    for (std::size_t round = 0; round < rounds; ++round) {
        std::size_t best = n;
        double best_score = 0.0;
        for (std::size_t i = 0; i < n; ++i) {
            if (taken[i]) continue;
            const double score = mmr_score(relevance[i], weight[i], redundancy[i], config);
            if (best == n) {
                best = i;
                best_score = score;
                continue;
            }
            bool better = score > best_score;
            if (score == best_score) {
                if (relevance[i] != relevance[best]) {
                    better = relevance[i] > relevance[best];
                } else if (texts[i] != texts[best]) {
                    better = texts[i] < texts[best];
                } else {
                    better = candidates[i] < candidates[best];
                }
            }
            if (better) {
                best = i;
                best_score = score;
            }
        }
        taken[best] = true;
        region.selected.push_back(candidates[best]);
        region.scores.push_back(best_score);
        region.relevance.push_back(relevance[best]);
        region.vertices.insert(candidates[best].head);
        region.vertices.insert(candidates[best].tail);

        for (std::size_t i = 0; i < n; ++i) {
            if (taken[i]) continue;
            const double sim = cosine(embeddings[i], embeddings[best]);
            redundancy[i] = round == 0 ? sim : std::max(redundancy[i], sim);
        }
    }
    return region;
}

Region select_region(std::string_view subquestion, const ExpandedEntitySet& entities, const KnowledgeGraph& kg,
                     DomainCategory domain, const RelationWeightMatrix& matrix, const RegionConfig& config,
                     const EmbeddingProvider& embedder) {
    return select_from_candidates(subquestion, triplets_for_entities(kg, entities.entities), domain, matrix,
                                  config, embedder);
}

}  // namespace regionqa
