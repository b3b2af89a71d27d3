#include "regionqa/entity_linker.hpp"

#include <algorithm>
#include <fstream>
#include <nlohmann/json.hpp>

#include "regionqa/errors.hpp"
#include "regionqa/text.hpp"

namespace regionqa {

std::string_view to_string(MentionSource source) {
    switch (source) {
        case MentionSource::Dictionary: return "dictionary";
        case MentionSource::Fuzzy: return "fuzzy";
        case MentionSource::Alias: return "alias";
    }
    return "dictionary";
}

AliasMap::AliasMap(const std::map<std::string, std::string>& entries) {
    for (const auto& [alias, canonical] : entries) {
        auto a = normalize(alias);
        auto c = normalize(canonical);
        if (!a.empty() && !c.empty()) entries_[a] = c;
    }
}

const std::string* AliasMap::resolve(std::string_view alias) const {
    auto it = entries_.find(alias);
    return it == entries_.end() ? nullptr : &it->second;
}

AliasMap load_alias_map(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw LoadError("cannot open alias map: " + path.string());
    nlohmann::json doc;
    try {
        doc = nlohmann::json::parse(in);
    } catch (const nlohmann::json::parse_error& e) {
        throw ValidationError("alias map " + path.string() + " is not valid JSON: " + e.what());
    }
    if (!doc.is_object()) throw ValidationError("alias map must be a JSON object: " + path.string());
    std::map<std::string, std::string> entries;
    for (const auto& [alias, canonical] : doc.items()) {
        if (!canonical.is_string()) {
            throw ValidationError("alias '" + alias + "' must map to a string");
        }
        entries[alias] = canonical.get<std::string>();
    }
    return AliasMap(entries);
}

std::size_t indel_distance(std::string_view a, std::string_view b) {
    // |a| + |b| - 2 * LCS(a, b), single-row LCS table.
    if (a.size() < b.size()) std::swap(a, b);
    std::vector<std::size_t> row(b.size() + 1, 0);
    for (char ca : a) {
        std::size_t diag = 0;
        for (std::size_t j = 1; j <= b.size(); ++j) {
            std::size_t up = row[j];
            row[j] = (ca == b[j - 1]) ? diag + 1 : std::max(row[j], row[j - 1]);
            diag = up;
        }
    }
    return a.size() + b.size() - 2 * row[b.size()];
}

double fuzzy_ratio(std::string_view a, std::string_view b) {
    const std::size_t total = a.size() + b.size();
    if (total == 0) return 100.0;
    return 100.0 * (1.0 - static_cast<double>(indel_distance(a, b)) / static_cast<double>(total));
}

namespace {

struct Span {
    std::size_t begin;
    std::size_t end;  // exclusive
};

std::string span_text(const std::vector<Token>& tokens, Span s, bool normalized) {
    std::string out;
    for (std::size_t i = s.begin; i < s.end; ++i) {
        if (i > s.begin) out.push_back(' ');
        out += normalized ? tokens[i].normalized : tokens[i].raw;
    }
    return out;
}

bool overlaps(const std::vector<bool>& covered, Span s) {
    for (std::size_t i = s.begin; i < s.end; ++i)
        if (covered[i]) return true;
    return false;
}

void mark(std::vector<bool>& covered, Span s) {
    for (std::size_t i = s.begin; i < s.end; ++i) covered[i] = true;
}

// Visits every n-gram not overlapping `covered`, longest first, left to right.
// The callback returns true to claim the span.
template <typename Fn>
void scan_ngrams(const std::vector<Token>& tokens, std::size_t max_ngram, std::vector<bool>& covered,
                 Fn&& claim) {
    const std::size_t n_max = std::min(max_ngram, tokens.size());
    for (std::size_t n = n_max; n >= 1; --n) {
        for (std::size_t i = 0; i + n <= tokens.size(); ++i) {
            Span s{i, i + n};
            if (overlaps(covered, s)) continue;
            if (claim(s)) mark(covered, s);
        }
    }
}

using Found = std::vector<std::pair<std::size_t, Mention>>;

void exact_pass(const std::vector<Token>& tokens, const KnowledgeGraph& kg, const AliasMap& aliases,
                std::size_t max_ngram, std::vector<bool>& covered, Found& found) {
    scan_ngrams(tokens, max_ngram, covered, [&](Span s) {
        auto norm = span_text(tokens, s, true);
        MentionSource source;
        if (kg.has_entity(norm)) {
            source = MentionSource::Dictionary;
        } else if (aliases.resolve(norm)) {
            source = MentionSource::Alias;
        } else {
            return false;
        }
        found.push_back({s.begin, Mention{span_text(tokens, s, false), std::move(norm), source}});
        return true;
    });
}

std::vector<Mention> in_text_order(Found found) {
    std::stable_sort(found.begin(), found.end(),
                     [](const auto& a, const auto& b) { return a.first < b.first; });
    std::vector<Mention> out;
    out.reserve(found.size());
    for (auto& [_, m] : found) out.push_back(std::move(m));
    return out;
}

}  // namespace

std::vector<Mention> extract_mentions(std::string_view question, const KnowledgeGraph& kg,
                                      const AliasMap& aliases, std::size_t max_ngram) {
    const auto tokens = tokenize(question);
    std::vector<bool> covered(tokens.size(), false);
    Found found;
    exact_pass(tokens, kg, aliases, max_ngram, covered, found);
    return in_text_order(std::move(found));
}

FuzzyIndex::FuzzyIndex(const KnowledgeGraph& kg, const AliasMap& aliases) {
    for (const auto& e : kg.entities()) by_length_[e.size()].push_back({e, e});
    for (const auto& [alias, canonical] : aliases.entries()) {
        if (kg.has_entity(canonical)) by_length_[alias.size()].push_back({alias, canonical});
    }
}

std::vector<FuzzyIndex::Hit> FuzzyIndex::lookup(std::string_view mention, double threshold) const {
    std::vector<Hit> hits;
    const double la = static_cast<double>(mention.size());
    for (const auto& [len, entries] : by_length_) {
        // Indel distance is at least the length difference, which caps the ratio.
        const double lb = static_cast<double>(len);
        const double cap = (la + lb) == 0.0 ? 100.0 : 100.0 * (1.0 - std::abs(la - lb) / (la + lb));
        if (cap < threshold) continue;
        for (const auto& entry : entries) {
            double r = fuzzy_ratio(mention, entry.key);
            if (r >= threshold) hits.push_back({entry.key, entry.canonical, r});
        }
    }
    return hits;
}

namespace {

ExpandedEntitySet expand_with_index(const std::vector<Mention>& mentions, const KnowledgeGraph& kg,
                                    const AliasMap& aliases, const FuzzyIndex& index,
                                    double fuzzy_threshold) {
    ExpandedEntitySet out;
    for (const auto& m : mentions) {
        auto add = [&](const std::string& entity) {
            if (!kg.has_entity(entity)) return;
            out.entities.insert(entity);
            out.provenance[entity].insert(m);
        };
        add(m.normalized);
        if (const auto* canonical = aliases.resolve(m.normalized)) add(*canonical);
        for (const auto& hit : index.lookup(m.normalized, fuzzy_threshold)) add(hit.canonical);
    }
    return out;
}

}  // namespace

ExpandedEntitySet expand_entities(const std::vector<Mention>& mentions, const KnowledgeGraph& kg,
                                  const AliasMap& aliases, double fuzzy_threshold) {
    return expand_with_index(mentions, kg, aliases, FuzzyIndex(kg, aliases), fuzzy_threshold);
}

EntityLinker::EntityLinker(const KnowledgeGraph& kg, const AliasMap& aliases, LinkerConfig config)
    : kg_(kg), aliases_(aliases), config_(config), index_(kg, aliases) {}

std::vector<Mention> EntityLinker::mentions(std::string_view text) const {
    const auto tokens = tokenize(text);
    std::vector<bool> covered(tokens.size(), false);
    Found found;
    // Exact pass first so fuzzy spans never shadow a dictionary hit.
    exact_pass(tokens, kg_, aliases_, config_.max_ngram, covered, found);
    scan_ngrams(tokens, config_.max_ngram, covered, [&](Span s) {
        auto norm = span_text(tokens, s, true);
        if (norm.size() < config_.min_fuzzy_length) return false;
        if (index_.lookup(norm, config_.fuzzy_threshold).empty()) return false;
        found.push_back({s.begin, Mention{span_text(tokens, s, false), std::move(norm), MentionSource::Fuzzy}});
        return true;
    });
    return in_text_order(std::move(found));
}

ExpandedEntitySet EntityLinker::link(std::string_view text) const {
    return expand_with_index(mentions(text), kg_, aliases_, index_, config_.fuzzy_threshold);
}

}  // namespace regionqa
