#pragma once

#include <cstddef>
#include <filesystem>
#include <map>
#include <set>
#include <string>
#include <string_view>
#include <vector>

#include "regionqa/kg_store.hpp"

namespace regionqa {

enum class MentionSource { Dictionary, Fuzzy, Alias };

std::string_view to_string(MentionSource source);

struct Mention {
    std::string surface;
    std::string normalized;
    MentionSource source = MentionSource::Dictionary;

    friend auto operator<=>(const Mention&, const Mention&) = default;
};

/// alias -> canonical entity, both normalized.
class AliasMap {
public:
    AliasMap() = default;
    explicit AliasMap(const std::map<std::string, std::string>& entries);

    /// Canonical name for `alias`, or nullptr.
    const std::string* resolve(std::string_view alias) const;
    const std::map<std::string, std::string, std::less<>>& entries() const noexcept { return entries_; }
    bool empty() const noexcept { return entries_.empty(); }

private:
    std::map<std::string, std::string, std::less<>> entries_;
};

/// JSON object {alias: canonical}.
AliasMap load_alias_map(const std::filesystem::path& path);

struct ExpandedEntitySet {
    std::set<std::string> entities;
    std::map<std::string, std::set<Mention>> provenance;
};

/// Insertions + deletions needed to turn `a` into `b` (a substitution counts 2).
std::size_t indel_distance(std::string_view a, std::string_view b);

/// 100 * (1 - indel / (|a| + |b|)); two empty strings score 100.
double fuzzy_ratio(std::string_view a, std::string_view b);

struct LinkerConfig {
    std::size_t max_ngram = 5;
    double fuzzy_threshold = 90.0;
    /// Word n-grams shorter than this many characters are not fuzzy-matched.
    std::size_t min_fuzzy_length = 4;
};

/// Exact n-gram scan against KG entity names and alias keys, longest span first.
/// Output is ordered by position in the question.
std::vector<Mention> extract_mentions(std::string_view question, const KnowledgeGraph& kg,
                                      const AliasMap& aliases, std::size_t max_ngram = 5);

/// Union of exact KG matches, alias resolutions, and fuzzy matches
/// (against entity names and alias keys) at or above `fuzzy_threshold`.
ExpandedEntitySet expand_entities(const std::vector<Mention>& mentions, const KnowledgeGraph& kg,
                                  const AliasMap& aliases, double fuzzy_threshold = 90.0);

/// Entity names and alias keys bucketed by length so fuzzy matching only
/// visits strings whose length admits a ratio at or above the threshold.
class FuzzyIndex {
public:
    FuzzyIndex(const KnowledgeGraph& kg, const AliasMap& aliases);

    struct Hit {
        std::string matched;    // entity name or alias key
        std::string canonical;  // KG entity it stands for
        double ratio = 0.0;
    };

    std::vector<Hit> lookup(std::string_view mention, double threshold) const;

private:
    struct Entry {
        std::string key;
        std::string canonical;
    };
    std::map<std::size_t, std::vector<Entry>> by_length_;
};

/// Reference linker: exact mentions, then fuzzy mentions for uncovered spans, then expansion.
class EntityLinker {
public:
    EntityLinker(const KnowledgeGraph& kg, const AliasMap& aliases, LinkerConfig config = {});

    std::vector<Mention> mentions(std::string_view text) const;
    ExpandedEntitySet link(std::string_view text) const;

    const LinkerConfig& config() const noexcept { return config_; }

private:
    const KnowledgeGraph& kg_;
    const AliasMap& aliases_;
    LinkerConfig config_;
    FuzzyIndex index_;
};

}  // namespace regionqa
