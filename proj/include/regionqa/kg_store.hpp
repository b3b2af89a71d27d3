#pragma once

#include <compare>
#include <cstddef>
#include <filesystem>
#include <optional>
#include <set>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

namespace regionqa {

struct Triplet {
    std::string head;
    std::string relation;
    std::string tail;
    std::optional<std::string> head_type;
    std::optional<std::string> tail_type;

    /// Identity is (head, relation, tail); category labels are annotations.
    friend bool operator==(const Triplet& a, const Triplet& b) {
        return a.head == b.head && a.relation == b.relation && a.tail == b.tail;
    }
    friend std::strong_ordering operator<=>(const Triplet& a, const Triplet& b) {
        if (auto c = a.head <=> b.head; c != 0) return c;
        if (auto c = a.relation <=> b.relation; c != 0) return c;
        return a.tail <=> b.tail;
    }
};

/// "(head, relation, tail)"
std::string to_string(const Triplet& t);

/// Relation spelling used everywhere: normalized, underscores read as spaces
/// ("Interacts_with" -> "interacts with").
std::string canonical_relation(std::string_view relation);

/// Builds a triplet with all three fields normalized (relation canonicalized). Returns nullopt if any
/// field is empty after normalization.
std::optional<Triplet> make_triplet(std::string_view head, std::string_view relation,
                                    std::string_view tail);

/// Ordered set of relation names (lexicographic).
class RelationSchema {
public:
    RelationSchema() = default;
    explicit RelationSchema(std::vector<std::string> relations);

    const std::vector<std::string>& relations() const noexcept { return relations_; }
    bool contains(std::string_view relation) const;
    std::size_t size() const noexcept { return relations_.size(); }
    bool empty() const noexcept { return relations_.empty(); }

    /// "a, b, c"
    std::string joined(std::string_view sep = ", ") const;

    friend bool operator==(const RelationSchema&, const RelationSchema&) = default;

private:
    std::vector<std::string> relations_;
};

/// Immutable, indexed triplet store. Triplets are kept sorted and unique.
class KnowledgeGraph {
public:
    /// Deduplicates and indexes. If `declared` is given, every relation must belong to it.
    explicit KnowledgeGraph(std::vector<Triplet> triplets,
                            std::optional<RelationSchema> declared = std::nullopt);

    const std::vector<Triplet>& triplets() const noexcept { return triplets_; }
    const RelationSchema& schema() const noexcept { return schema_; }
    std::size_t size() const noexcept { return triplets_.size(); }

    bool has_entity(std::string_view name) const;
    /// All entity names, sorted.
    const std::vector<std::string>& entities() const noexcept { return entities_; }

    /// Indices into triplets() incident to `name` (as head or tail), ascending.
    const std::vector<std::size_t>& incident(std::string_view name) const;

private:
    std::vector<Triplet> triplets_;
    std::vector<std::string> entities_;
    std::unordered_map<std::string, std::vector<std::size_t>> entity_index_;
    RelationSchema schema_;
};

/// Reads a TSV triplet file: head, relation, tail[, head_type, tail_type].
/// Lines starting with '#' and blank lines are skipped.
KnowledgeGraph load_graph(const std::filesystem::path& path,
                          const std::optional<std::filesystem::path>& schema_override = std::nullopt);

/// One relation name per line; '#' comments allowed.
RelationSchema load_schema(const std::filesystem::path& path);

/// Union of incidence lists, in canonical triplet order without duplicates.
/// Unknown entities contribute nothing.
std::vector<Triplet> triplets_for_entities(const KnowledgeGraph& kg,
                                           const std::vector<std::string>& entities);
std::vector<Triplet> triplets_for_entities(const KnowledgeGraph& kg,
                                           const std::set<std::string>& entities);

inline const RelationSchema& relation_schema(const KnowledgeGraph& kg) { return kg.schema(); }

}  // namespace regionqa
