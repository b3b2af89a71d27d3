#include "regionqa/eval.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <set>
#include <sstream>
#include <thread>

#include "regionqa/errors.hpp"
#include "regionqa/text.hpp"

namespace regionqa {

std::string_view to_string(Protocol p) { return p == Protocol::Mcq ? "MCQ" : "SAQ"; }

std::optional<Protocol> parse_protocol(std::string_view name) {
    auto n = normalize(name);
    if (n == "mcq") return Protocol::Mcq;
    if (n == "saq") return Protocol::Saq;
    return std::nullopt;
}

std::string DatasetItem::query_text() const {
    if (!options || options->empty()) return question;
    std::string out = question + "\nOptions:";
    for (const auto& o : *options) out += " (" + o.label + ") " + o.text;
    return out;
}

std::vector<DatasetItem> parse_dataset(std::istream& in, Protocol protocol, const std::string& source) {
    std::vector<DatasetItem> items;
    std::set<std::string> ids;
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (trim(line).empty()) continue;

        nlohmann::json row;
        try {
            row = nlohmann::json::parse(line);
        } catch (const nlohmann::json::parse_error& e) {
            throw ParseError(source, lineno, std::string("invalid JSON: ") + e.what());
        }
        auto str = [&](const char* key) {
            if (!row.is_object() || !row.contains(key) || !row[key].is_string())
                throw ParseError(source, lineno, std::string("missing string field \"") + key + "\"");
            return row[key].get<std::string>();
        };

        DatasetItem item;
        item.id = str("id");
        item.question = str("question");
        item.gold = trim(str("answer"));
        if (row.contains("options") && !row["options"].is_null()) {
            if (!row["options"].is_array()) throw ParseError(source, lineno, "\"options\" must be a list");
            std::vector<AnswerOption> options;
            for (const auto& o : row["options"]) {
                if (!o.is_object() || !o.contains("label") || !o.contains("text") || !o["label"].is_string() ||
                    !o["text"].is_string())
                    throw ParseError(source, lineno, "each option needs string \"label\" and \"text\"");
                options.push_back({trim(o["label"].get<std::string>()), o["text"].get<std::string>()});
            }
            item.options = std::move(options);
        }

        if (!ids.insert(item.id).second) throw ValidationError("duplicate item id " + item.id);
        if (protocol == Protocol::Mcq) {
            if (!item.options || item.options->size() < 2)
                throw ValidationError("MCQ item " + item.id + " needs at least two options");
            const auto& opts = *item.options;
            bool found = std::any_of(opts.begin(), opts.end(), [&](const AnswerOption& o) { return o.label == item.gold; });
            if (!found) throw ValidationError("MCQ item " + item.id + ": gold \"" + item.gold + "\" is not an option label");
        }
        items.push_back(std::move(item));
    }
    return items;
}

std::vector<DatasetItem> load_dataset(const std::filesystem::path& path, Protocol protocol) {
    std::ifstream in(path);
    if (!in) throw LoadError("cannot open dataset " + path.string());
    return parse_dataset(in, protocol, path.string());
}

// ---------------------------------------------------------------------------
// Option mapping

std::string_view to_string(OptionMapping::Rule rule) {
    switch (rule) {
        case OptionMapping::Rule::Letter: return "letter";
        case OptionMapping::Rule::Overlap: return "overlap";
        case OptionMapping::Rule::Unparseable: return "unparseable";
    }
    return "unparseable";
}

OptionMapping map_option(std::string_view answer, const std::vector<AnswerOption>& options) {
    std::set<std::string> labels;
    for (const auto& o : options) labels.insert(o.label);

    // "(C)" is the least ambiguous form.
    for (std::size_t open = answer.find('('); open != std::string_view::npos; open = answer.find('(', open + 1)) {
        auto close = answer.find(')', open);
        if (close == std::string_view::npos) break;
        std::string inner = trim(answer.substr(open + 1, close - open - 1));
        if (labels.count(inner)) return {inner, OptionMapping::Rule::Letter};
    }

    auto tokens = tokenize(answer);
    for (std::size_t i = 0; i < tokens.size(); ++i) {
        const auto& raw = tokens[i].raw;
        if (!labels.count(raw)) continue;
        if (raw == "A" && i + 1 < tokens.size()) {
            unsigned char next = static_cast<unsigned char>(tokens[i + 1].raw.front());
            if (std::islower(next)) continue;  // "A rare disorder ..."
        }
        return {raw, OptionMapping::Rule::Letter};
    }

    std::set<std::string> answer_words;
    for (const auto& t : tokens) answer_words.insert(t.normalized);
    std::optional<std::string> best;
    std::size_t best_overlap = 0;
    // Options visited in label order so ties resolve to the smallest label.
    std::vector<const AnswerOption*> sorted;
    for (const auto& o : options) sorted.push_back(&o);
    std::sort(sorted.begin(), sorted.end(), [](auto* a, auto* b) { return a->label < b->label; });
    for (const auto* o : sorted) {
        std::set<std::string> words;
        for (const auto& t : tokenize(o->text)) words.insert(t.normalized);
        std::size_t overlap = 0;
        for (const auto& w : words) overlap += answer_words.count(w);
        if (overlap > best_overlap) {
            best_overlap = overlap;
            best = o->label;
        }
    }
    if (best) return {best, OptionMapping::Rule::Overlap};
    return {std::nullopt, OptionMapping::Rule::Unparseable};
}

double mcq_accuracy(const std::map<std::string, std::string>& predictions, const std::vector<DatasetItem>& items) {
    if (items.empty()) return 0.0;
    std::size_t correct = 0;
    for (const auto& item : items) {
        auto it = predictions.find(item.id);
        if (it != predictions.end() && !it->second.empty() && it->second == item.gold) ++correct;
    }
    return 100.0 * static_cast<double>(correct) / static_cast<double>(items.size());
}

// ---------------------------------------------------------------------------
// Judges

namespace {

std::optional<double> number_field(const nlohmann::json& obj, const char* key) {
    if (!obj.is_object() || !obj.contains(key)) return std::nullopt;
    const auto& v = obj[key];
    if (v.is_number()) return v.get<double>();
    if (v.is_string()) {
        try {
            return std::stod(v.get<std::string>());
        } catch (const std::logic_error&) {
        }
    }
    return std::nullopt;
}

std::string string_field(const nlohmann::json& obj, const char* key) {
    if (obj.is_object() && obj.contains(key) && obj[key].is_string()) return obj[key].get<std::string>();
    return {};
}

}  // namespace

std::optional<JudgeVerdict> judge_saq(std::string_view question, std::string_view gold, std::string_view predicted,
                                      const Gateway& judge, double threshold, CallLog* log) {
    auto prompt = judge.render(TemplateId::JudgeSaq, {{"query", std::string(question)},
                                                      {"ground_truth_answer", std::string(gold)},
                                                      {"model_response", std::string(predicted)}});
    try {
        auto payload = judge.complete_json(prompt, CompletionParams::judging(), log);
        auto sim = number_field(payload.parsed, "similarity_score");
        if (!sim || !std::isfinite(*sim)) return std::nullopt;
        JudgeVerdict v;
        v.similarity = std::clamp(*sim, 0.0, 1.0);
        // Correctness follows the score, not the judge's own is_correct field.
        v.correct = v.similarity >= threshold;
        v.reasoning = string_field(payload.parsed, "reasoning");
        return v;
    } catch (const ExtractionError&) {
        return std::nullopt;
    }
}

std::optional<ISRecord> inconsistency_score(std::string_view question, std::string_view gold,
                                            std::string_view predicted, const Gateway& judge, CallLog* log) {
    auto prompt = judge.render(TemplateId::ScoreIs, {{"query", std::string(question)},
                                                     {"ground_truth", std::string(gold)},
                                                     {"model_answer", std::string(predicted)}});
    try {
        auto payload = judge.complete_json(prompt, CompletionParams::judging(), log);
        auto value = number_field(payload.parsed, "is");
        if (!value || !std::isfinite(*value)) return std::nullopt;
        ISRecord r;
        r.is_value = std::clamp(*value, 0.0, 1.0);
        r.clamped = r.is_value != *value;
        if (r.clamped) std::fprintf(stderr, "warning: inconsistency score %g clamped to %g\n", *value, r.is_value);
        r.rationale = string_field(payload.parsed, "rationale");
        return r;
    } catch (const ExtractionError&) {
        return std::nullopt;
    }
}

// ---------------------------------------------------------------------------
// Harness

namespace {

std::size_t count_out_of_region(const PipelineResult& result, const RelationSchema& schema) {
    std::size_t n = 0;
    for (const auto& hop : result.evidence.hops) {
        if (hop.mode == ReasoningMode::LlmGuess) {
            n += hop.triplets.size();
            continue;
        }
        for (const auto& t : hop.triplets) {
            if (!schema.contains(t.relation) || !hop.region.has_vertex(t.head) || !hop.region.has_vertex(t.tail)) ++n;
        }
    }
    return n;
}

ItemRecord evaluate_item(const DatasetItem& item, const Engine& engine, const Gateway& judge,
                         const EvalOptions& options) {
    ItemRecord rec;
    rec.id = item.id;
    rec.gold = item.gold;
    Stopwatch clock;
    try {
        auto result = engine.run(item.query_text());
        rec.answer = result.answer;
        rec.hops = result.evidence.hops.size();
        for (const auto& h : result.evidence.hops) rec.modes.emplace_back(to_string(h.mode));
        // Under the reviewer ablation unverified triplets are expected in T_i.
        if (!engine.config().ablations.no_reviewer) rec.out_of_region = count_out_of_region(result, engine.graph().schema());
    } catch (const Error& e) {
        rec.error = e.what();
    }

    if (options.protocol == Protocol::Mcq) {
        if (!rec.error) {
            auto mapping = map_option(rec.answer, item.options.value_or(std::vector<AnswerOption>{}));
            rec.predicted_label = mapping.label;
            rec.mapping_rule = mapping.rule;
            rec.correct = mapping.label && *mapping.label == item.gold;
        }
    } else if (!rec.error) {
        try {
            rec.verdict = judge_saq(item.question, item.gold, rec.answer, judge, options.judge_threshold);
            rec.unjudged = !rec.verdict;
            rec.correct = rec.verdict && rec.verdict->correct;
            rec.is = inconsistency_score(item.question, item.gold, rec.answer, judge);
        } catch (const Error& e) {
            rec.error = std::string("judge failed: ") + e.what();
            rec.unjudged = true;
        }
    }
    rec.latency_ms = clock.elapsed_ms();
    return rec;
}

}  // namespace

EvalReport run_eval(const std::vector<DatasetItem>& items, const Engine& engine, const EvalOptions& options,
                    const Gateway* judge) {
    const Gateway& judge_gateway = judge ? *judge : engine.gateway();
    EvalReport report;
    report.protocol = options.protocol;
    report.n = items.size();
    report.ablations = engine.config().ablations;
    report.hop_depth = engine.config().max_hops;
    report.records.resize(items.size());

    Stopwatch clock;
    const std::size_t workers = std::max<std::size_t>(1, std::min(options.workers, items.size()));
    if (workers <= 1) {
        for (std::size_t i = 0; i < items.size(); ++i) report.records[i] = evaluate_item(items[i], engine, judge_gateway, options);
    } else {
        std::atomic<std::size_t> next{0};
        std::vector<std::thread> pool;
        for (std::size_t w = 0; w < workers; ++w) {
            pool.emplace_back([&] {
                for (std::size_t i = next++; i < items.size(); i = next++) {
                    report.records[i] = evaluate_item(items[i], engine, judge_gateway, options);
                }
            });
        }
        for (auto& t : pool) t.join();
    }
    report.wall_ms = clock.elapsed_ms();

    // Reduction in dataset order, independent of the worker schedule.
    double is_sum = 0.0;
    for (const auto& r : report.records) {
        if (r.error) ++report.errors;
        if (r.unjudged) ++report.unjudged;
        if (r.mapping_rule == OptionMapping::Rule::Unparseable) ++report.unparseable;
        if (r.correct) ++report.correct;
        if (options.protocol == Protocol::Saq && !r.error) {
            if (r.is) {
                ++report.is_scored;
                is_sum += r.is->is_value;
            } else {
                ++report.is_failed;
            }
        }
    }
    report.denominator = report.n - report.unjudged;
    report.accuracy = report.denominator ? 100.0 * static_cast<double>(report.correct) / static_cast<double>(report.denominator) : 0.0;
    if (options.protocol == Protocol::Saq && report.is_scored) {
        report.mean_is = is_sum / static_cast<double>(report.is_scored);
    }
    return report;
}

nlohmann::ordered_json EvalReport::to_json() const {
    nlohmann::ordered_json out;
    out["protocol"] = to_string(protocol);
    out["n"] = n;
    out["correct"] = correct;
    out["denominator"] = denominator;
    out["accuracy"] = accuracy;
    out["unjudged"] = unjudged;
    out["unparseable"] = unparseable;
    out["errors"] = errors;
    if (protocol == Protocol::Saq) {
        out["mean_is"] = mean_is ? nlohmann::ordered_json(*mean_is) : nlohmann::ordered_json(nullptr);
        out["mean_is_x100"] = mean_is ? nlohmann::ordered_json(*mean_is * 100.0) : nlohmann::ordered_json(nullptr);
        out["is_scored"] = is_scored;
        out["is_failed"] = is_failed;
    }
    out["ablations"] = {{"no_domain_prior", ablations.no_domain_prior},
                        {"no_multihop", ablations.no_multihop},
                        {"no_mmr", ablations.no_mmr},
                        {"no_reviewer", ablations.no_reviewer},
                        {"hop_depth", hop_depth}};

    auto rows = nlohmann::ordered_json::array();
    for (const auto& r : records) {
        nlohmann::ordered_json row;
        row["id"] = r.id;
        row["gold"] = r.gold;
        row["answer"] = r.answer;
        row["correct"] = r.correct;
        if (r.mapping_rule) {
            row["predicted_label"] = r.predicted_label ? nlohmann::ordered_json(*r.predicted_label) : nlohmann::ordered_json(nullptr);
            row["mapping_rule"] = to_string(*r.mapping_rule);
        }
        if (protocol == Protocol::Saq) {
            row["unjudged"] = r.unjudged;
            if (r.verdict) row["judge"] = {{"similarity", r.verdict->similarity}, {"reasoning", r.verdict->reasoning}};
            if (r.is) row["is"] = {{"value", r.is->is_value}, {"rationale", r.is->rationale}, {"clamped", r.is->clamped}};
        }
        row["hops"] = r.hops;
        row["modes"] = r.modes;
        row["out_of_region"] = r.out_of_region;
        if (r.error) row["error"] = *r.error;
        row["latency_ms"] = r.latency_ms;
        rows.push_back(std::move(row));
    }
    out["records"] = std::move(rows);
    out["wall_ms"] = wall_ms;
    return out;
}

std::string EvalReport::summary_table() const {
    char buf[128];
    std::ostringstream os;
    auto line = [&](const char* key, const std::string& value) {
        std::snprintf(buf, sizeof buf, "%-16s %s\n", key, value.c_str());
        os << buf;
    };
    auto fixed = [](double v, int digits) {
        char b[64];
        std::snprintf(b, sizeof b, "%.*f", digits, v);
        return std::string(b);
    };
    line("protocol", std::string(to_string(protocol)));
    line("items", std::to_string(n));
    line("correct", std::to_string(correct) + " / " + std::to_string(denominator));
    line("accuracy (%)", fixed(accuracy, 2));
    if (protocol == Protocol::Saq) {
        line("unjudged", std::to_string(unjudged));
        line("mean IS [0,1]", mean_is ? fixed(*mean_is, 4) : "n/a");
        line("mean IS (x100)", mean_is ? fixed(*mean_is * 100.0, 2) : "n/a");
        line("IS failures", std::to_string(is_failed));
    } else {
        line("unparseable", std::to_string(unparseable));
    }
    line("errors", std::to_string(errors));
    auto active = ablations.active();
    line("ablations", active.empty() ? "none" : join(active, ", "));
    line("hop depth", std::to_string(hop_depth));
    line("wall (ms)", fixed(wall_ms, 1));
    return os.str();
}

}  // namespace regionqa
