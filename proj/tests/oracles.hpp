#pragma once

// Straightforward reference implementations used to cross-check the library.
// They trade speed for obviousness and share no code with the implementations
// they check beyond cosine() and the embedder.

#include <algorithm>
#include <cstddef>
#include <string>
#include <string_view>
#include <vector>

#include "regionqa/embedding.hpp"
#include "regionqa/entity_linker.hpp"
#include "regionqa/region.hpp"

namespace oracle {

/// Full LCS table; indel distance = |a| + |b| - 2 * LCS.
inline std::size_t indel(std::string_view a, std::string_view b) {
    std::vector<std::vector<std::size_t>> lcs(a.size() + 1, std::vector<std::size_t>(b.size() + 1, 0));
    for (std::size_t i = 1; i <= a.size(); ++i) {
        for (std::size_t j = 1; j <= b.size(); ++j) {
            lcs[i][j] = a[i - 1] == b[j - 1] ? lcs[i - 1][j - 1] + 1 : std::max(lcs[i - 1][j], lcs[i][j - 1]);
        }
    }
    return a.size() + b.size() - 2 * lcs[a.size()][b.size()];
}

inline double ratio(std::string_view a, std::string_view b) {
    if (a.empty() && b.empty()) return 100.0;
    return 100.0 * (1.0 - static_cast<double>(indel(a, b)) / static_cast<double>(a.size() + b.size()));
}

/// Every entity name and alias key, no pruning.
inline std::vector<std::pair<std::string, std::string>> fuzzy_scan(std::string_view mention,
                                                                   const regionqa::KnowledgeGraph& kg,
                                                                   const regionqa::AliasMap& aliases,
                                                                   double threshold) {
    std::vector<std::pair<std::string, std::string>> hits;  // (matched, canonical)
    for (const auto& e : kg.entities()) {
        if (ratio(mention, e) >= threshold) hits.emplace_back(e, e);
    }
    for (const auto& [alias, canonical] : aliases.entries()) {
        if (kg.has_entity(canonical) && ratio(mention, alias) >= threshold) hits.emplace_back(alias, canonical);
    }
    std::sort(hits.begin(), hits.end());
    hits.erase(std::unique(hits.begin(), hits.end()), hits.end());
    return hits;
}

/// Greedy weighted MMR that rescores every remaining candidate against the
/// whole selected set in every round.
inline std::vector<regionqa::Triplet> mmr_select(std::string_view question,
                                                 const std::vector<regionqa::Triplet>& candidates,
                                                 regionqa::DomainCategory domain,
                                                 const regionqa::RelationWeightMatrix& matrix,
                                                 const regionqa::RegionConfig& config,
                                                 const regionqa::EmbeddingProvider& embedder) {
    using regionqa::cosine;
    using regionqa::triplet_text;
    const auto q = embedder.embed(question);
    std::vector<regionqa::Triplet> selected;
    std::vector<regionqa::Triplet> remaining = candidates;
    while (selected.size() < config.k && !remaining.empty()) {
        std::size_t best = 0;
        double best_score = 0, best_rel = 0;
        std::string best_text;
        for (std::size_t i = 0; i < remaining.size(); ++i) {
            const auto& t = remaining[i];
            const auto e = embedder.embed(triplet_text(t));
            const double rel = cosine(q, e);
            double red = 0.0;
            for (std::size_t s = 0; s < selected.size(); ++s) {
                const double sim = cosine(e, embedder.embed(triplet_text(selected[s])));
                red = s == 0 ? sim : std::max(red, sim);
            }
            const double w = config.domain_prior_enabled ? matrix.get(t.relation, domain) : 1.0;
            const double score = config.mmr_enabled ? config.lambda * rel * w - (1 - config.lambda) * red : rel * w;
            const auto text = triplet_text(t);
            bool better = i == 0 || score > best_score ||
                          (score == best_score && (rel > best_rel || (rel == best_rel && text < best_text)));
            if (better) {
                best = i;
                best_score = score;
                best_rel = rel;
                best_text = text;
            }
        }
        selected.push_back(remaining[best]);
        remaining.erase(remaining.begin() + static_cast<std::ptrdiff_t>(best));
    }
    return selected;
}

}  // namespace oracle
