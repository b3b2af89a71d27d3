#pragma once

#include <fstream>
#include <string>

#include <nlohmann/json.hpp>

#include "regionqa/eval.hpp"

namespace ngly1 {

inline std::string dir() { return std::string(REGIONQA_FIXTURES) + "/ngly1"; }
inline std::string graph() { return dir() + "/graph.tsv"; }
inline std::string transcript() { return dir() + "/transcript.json"; }
inline std::string aliases() { return std::string(REGIONQA_FIXTURES) + "/aliases.json"; }

/// The fixture question with its options, exactly as the pipeline receives it.
inline regionqa::DatasetItem item() {
    std::ifstream in(dir() + "/question.json");
    auto q = nlohmann::json::parse(in);
    regionqa::DatasetItem it{q["id"], q["question"], std::vector<regionqa::AnswerOption>{}, q["answer"]};
    for (const auto& o : q["options"]) it.options->push_back({o["label"], o["text"]});
    return it;
}

}  // namespace ngly1
