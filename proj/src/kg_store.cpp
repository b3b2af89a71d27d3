#include "regionqa/kg_store.hpp"

#include <algorithm>
#include <fstream>

#include "regionqa/errors.hpp"
#include "regionqa/text.hpp"

namespace regionqa {

namespace {

std::vector<std::string_view> split_tabs(std::string_view line) {
    std::vector<std::string_view> cols;
    std::size_t start = 0;
    while (true) {
        auto pos = line.find('\t', start);
        if (pos == std::string_view::npos) {
            cols.push_back(line.substr(start));
            break;
        }
        cols.push_back(line.substr(start, pos - start));
        start = pos + 1;
    }
    return cols;
}

std::string_view strip_cr(std::string_view line) {
    if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
    return line;
}

bool is_skippable(std::string_view line) {
    auto first = line.find_first_not_of(" \t");
    return first == std::string_view::npos || line[first] == '#';
}

std::optional<std::string> optional_label(const std::vector<std::string_view>& cols, std::size_t i) {
    if (i >= cols.size()) return std::nullopt;
    auto v = normalize(cols[i]);
    if (v.empty()) return std::nullopt;
    return v;
}

}  // namespace

std::string to_string(const Triplet& t) {
    return "(" + t.head + ", " + t.relation + ", " + t.tail + ")";
}

std::string canonical_relation(std::string_view relation) {
    std::string r(relation);
    std::replace(r.begin(), r.end(), '_', ' ');
    return normalize(r);
}

std::optional<Triplet> make_triplet(std::string_view head, std::string_view relation,
                                    std::string_view tail) {
    Triplet t{normalize(head), canonical_relation(relation), normalize(tail), std::nullopt, std::nullopt};
    if (t.head.empty() || t.relation.empty() || t.tail.empty()) return std::nullopt;
    return t;
}

RelationSchema::RelationSchema(std::vector<std::string> relations) : relations_(std::move(relations)) {
    std::sort(relations_.begin(), relations_.end());
    relations_.erase(std::unique(relations_.begin(), relations_.end()), relations_.end());
}

bool RelationSchema::contains(std::string_view relation) const {
    return std::binary_search(relations_.begin(), relations_.end(), relation);
}

std::string RelationSchema::joined(std::string_view sep) const { return join(relations_, sep); }

KnowledgeGraph::KnowledgeGraph(std::vector<Triplet> triplets, std::optional<RelationSchema> declared)
    : triplets_(std::move(triplets)) {
    // stable_sort keeps the first occurrence's category labels when deduplicating.
    std::stable_sort(triplets_.begin(), triplets_.end());
    triplets_.erase(std::unique(triplets_.begin(), triplets_.end()), triplets_.end());

    std::vector<std::string> relations;
    for (std::size_t i = 0; i < triplets_.size(); ++i) {
        const auto& t = triplets_[i];
        entity_index_[t.head].push_back(i);
        if (t.tail != t.head) entity_index_[t.tail].push_back(i);
        relations.push_back(t.relation);
    }
    entities_.reserve(entity_index_.size());
    for (const auto& [name, _] : entity_index_) entities_.push_back(name);
    std::sort(entities_.begin(), entities_.end());

    if (declared) {
        for (const auto& r : relations) {
            if (!declared->contains(r)) {
                throw ValidationError("relation '" + r + "' is not in the declared schema");
            }
        }
        schema_ = std::move(*declared);
    } else {
        schema_ = RelationSchema(std::move(relations));
    }
}

bool KnowledgeGraph::has_entity(std::string_view name) const {
    return entity_index_.find(std::string(name)) != entity_index_.end();
}

const std::vector<std::size_t>& KnowledgeGraph::incident(std::string_view name) const {
    static const std::vector<std::size_t> kEmpty;
    auto it = entity_index_.find(std::string(name));
    return it == entity_index_.end() ? kEmpty : it->second;
}

RelationSchema load_schema(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw LoadError("cannot open schema file: " + path.string());
    std::vector<std::string> relations;
    std::string line;
    while (std::getline(in, line)) {
        std::string_view view = strip_cr(line);
        if (is_skippable(view)) continue;
        relations.push_back(canonical_relation(view));
    }
    if (relations.empty()) throw ValidationError("schema file declares no relations: " + path.string());
    return RelationSchema(std::move(relations));
}

KnowledgeGraph load_graph(const std::filesystem::path& path,
                          const std::optional<std::filesystem::path>& schema_override) {
    std::ifstream in(path);
    if (!in) throw LoadError("cannot open graph file: " + path.string());

    std::optional<RelationSchema> declared;
    if (schema_override) declared = load_schema(*schema_override);

    std::vector<Triplet> triplets;
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        std::string_view view = strip_cr(line);
        if (is_skippable(view)) continue;
        auto cols = split_tabs(view);
        if (cols.size() < 3) {
            throw ParseError(path.string(), lineno,
                             "expected at least 3 tab-separated columns, got " + std::to_string(cols.size()));
        }
        auto t = make_triplet(cols[0], cols[1], cols[2]);
        if (!t) throw ParseError(path.string(), lineno, "empty head, relation, or tail");
        if (declared && !declared->contains(t->relation)) {
            throw ParseError(path.string(), lineno, "relation '" + t->relation + "' not in declared schema");
        }
        t->head_type = optional_label(cols, 3);
        t->tail_type = optional_label(cols, 4);
        triplets.push_back(std::move(*t));
    }
    if (in.bad()) throw LoadError("read failure on graph file: " + path.string());
    if (triplets.empty()) throw EmptyGraphError("graph file contains no triplets: " + path.string());
    return KnowledgeGraph(std::move(triplets), std::move(declared));
}

namespace {

template <typename Range>
std::vector<Triplet> collect(const KnowledgeGraph& kg, const Range& entities) {
    std::vector<std::size_t> ids;
    for (const auto& e : entities) {
        const auto& inc = kg.incident(e);
        ids.insert(ids.end(), inc.begin(), inc.end());
    }
    std::sort(ids.begin(), ids.end());
    ids.erase(std::unique(ids.begin(), ids.end()), ids.end());
    std::vector<Triplet> out;
    out.reserve(ids.size());
    for (auto i : ids) out.push_back(kg.triplets()[i]);
    return out;
}

}  // namespace

std::vector<Triplet> triplets_for_entities(const KnowledgeGraph& kg,
                                           const std::vector<std::string>& entities) {
    return collect(kg, entities);
}

std::vector<Triplet> triplets_for_entities(const KnowledgeGraph& kg,
                                           const std::set<std::string>& entities) {
    return collect(kg, entities);
}

}  // namespace regionqa
