#pragma once

#include <array>
#include <optional>
#include <string>
#include <string_view>

namespace regionqa {

/// High-level query category; selects the column of the relation-weight matrix.
enum class DomainCategory {
    GeneProtein,
    DrugTherapy,
    DiseaseSymptom,
    PathwayMetabolism,
    Integrated,
};

inline constexpr std::array<DomainCategory, 5> kAllDomains = {
    DomainCategory::GeneProtein, DomainCategory::DrugTherapy, DomainCategory::DiseaseSymptom,
    DomainCategory::PathwayMetabolism, DomainCategory::Integrated};

/// "GENE_PROTEIN", "DRUG_THERAPY", ...
std::string_view to_string(DomainCategory domain);

/// Accepts the canonical names case-insensitively; '/' and ' ' are read as '_'.
std::optional<DomainCategory> parse_domain(std::string_view name);

}  // namespace regionqa
