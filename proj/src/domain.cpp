#include "regionqa/domain.hpp"

#include <cctype>
#include <string>

namespace regionqa {

std::string_view to_string(DomainCategory domain) {
    switch (domain) {
        case DomainCategory::GeneProtein: return "GENE_PROTEIN";
        case DomainCategory::DrugTherapy: return "DRUG_THERAPY";
        case DomainCategory::DiseaseSymptom: return "DISEASE_SYMPTOM";
        case DomainCategory::PathwayMetabolism: return "PATHWAY_METABOLISM";
        case DomainCategory::Integrated: return "INTEGRATED";
    }
    return "INTEGRATED";
}

std::optional<DomainCategory> parse_domain(std::string_view name) {
    std::string key;
    for (char c : name) {
        if (c == '/' || c == ' ' || c == '-') c = '_';
        key.push_back(static_cast<char>(std::toupper(static_cast<unsigned char>(c))));
    }
    // Trim underscores introduced by surrounding whitespace.
    while (!key.empty() && key.front() == '_') key.erase(key.begin());
    while (!key.empty() && key.back() == '_') key.pop_back();
    for (auto d : kAllDomains) {
        if (key == to_string(d)) return d;
    }
    if (key == "PATHWAY_METAB") return DomainCategory::PathwayMetabolism;
    return std::nullopt;
}

}  // namespace regionqa
