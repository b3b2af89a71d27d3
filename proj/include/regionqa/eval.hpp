#pragma once

#include <cstddef>
#include <filesystem>
#include <istream>
#include <map>
#include <memory>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

#include "regionqa/llm_gateway.hpp"
#include "regionqa/reasoner.hpp"

namespace regionqa {

enum class Protocol { Mcq, Saq };

std::string_view to_string(Protocol p);
std::optional<Protocol> parse_protocol(std::string_view name);

struct AnswerOption {
    std::string label;
    std::string text;
};

struct DatasetItem {
    std::string id;
    std::string question;
    std::optional<std::vector<AnswerOption>> options;
    std::string gold;

    /// Question as sent to the pipeline; MCQ options are appended as
    /// "Options: (A) ... (B) ...".
    std::string query_text() const;
};

/// JSONL, one {"id", "question", "options"?, "answer"} object per line.
std::vector<DatasetItem> load_dataset(const std::filesystem::path& path, Protocol protocol);
std::vector<DatasetItem> parse_dataset(std::istream& in, Protocol protocol, const std::string& source = "<dataset>");

/// How a free-text answer was mapped onto an option label.
struct OptionMapping {
    enum class Rule { Letter, Overlap, Unparseable };

    std::optional<std::string> label;
    Rule rule = Rule::Unparseable;
};

std::string_view to_string(OptionMapping::Rule rule);

/// First "(X)" with X a label; else the first standalone label token (an "A"
/// followed by a lowercase word reads as the article); else the option whose
/// text shares the most tokens with the answer (tie: smallest label).
OptionMapping map_option(std::string_view answer, const std::vector<AnswerOption>& options);

/// 100 * exact label matches / items. Missing or empty predictions count as wrong.
double mcq_accuracy(const std::map<std::string, std::string>& predictions, const std::vector<DatasetItem>& items);

inline constexpr double kJudgeThreshold = 0.8;

struct JudgeVerdict {
    double similarity = 0.0;
    bool correct = false;
    std::string reasoning;
};

/// nullopt when no similarity could be extracted (the item is unjudged).
std::optional<JudgeVerdict> judge_saq(std::string_view question, std::string_view gold, std::string_view predicted,
                                      const Gateway& judge, double threshold = kJudgeThreshold,
                                      CallLog* log = nullptr);

struct ISRecord {
    double is_value = 0.0;
    std::string rationale;
    bool clamped = false;
};

/// nullopt when the score could not be extracted (excluded from mean IS).
std::optional<ISRecord> inconsistency_score(std::string_view question, std::string_view gold,
                                            std::string_view predicted, const Gateway& judge,
                                            CallLog* log = nullptr);

struct ItemRecord {
    std::string id;
    std::string gold;
    std::string answer;
    bool correct = false;
    std::optional<std::string> predicted_label;
    std::optional<OptionMapping::Rule> mapping_rule;
    std::optional<JudgeVerdict> verdict;
    bool unjudged = false;
    std::optional<ISRecord> is;
    std::optional<std::string> error;
    std::size_t hops = 0;
    std::vector<std::string> modes;
    std::size_t out_of_region = 0;  // T_i triplets outside V_q or the schema (strict/hybrid hops)
    double latency_ms = 0.0;
};

struct EvalOptions {
    Protocol protocol = Protocol::Mcq;
    std::size_t workers = 1;
    double judge_threshold = kJudgeThreshold;
};

struct EvalReport {
    Protocol protocol = Protocol::Mcq;
    std::size_t n = 0;
    std::size_t correct = 0;
    std::size_t denominator = 0;  // n minus unjudged items
    double accuracy = 0.0;
    std::size_t unjudged = 0;
    std::size_t unparseable = 0;
    std::size_t errors = 0;
    std::optional<double> mean_is;  // SAQ only
    std::size_t is_scored = 0;
    std::size_t is_failed = 0;
    Ablations ablations;
    std::size_t hop_depth = 3;
    std::vector<ItemRecord> records;
    double wall_ms = 0.0;

    nlohmann::ordered_json to_json() const;
    std::string summary_table() const;
};

/// Runs every item through `engine` and scores it. `judge` defaults to the
/// engine's own gateway. Item failures are recorded, never thrown.
EvalReport run_eval(const std::vector<DatasetItem>& items, const Engine& engine, const EvalOptions& options,
                    const Gateway* judge = nullptr);

}  // namespace regionqa
