// Regenerates the bundled fixtures under data/fixtures:
//
//   ngly1/transcript.json        scripted responses for the NGLY1 question
//   synthetic/graph.tsv          200-triplet synthetic graph
//   synthetic/mcq.jsonl          20 multiple-choice items over it
//   synthetic/transcript.json    scripted responses for those items
//
// Responses come from an oracle responder that reads the rendered slots. Each
// question is run through the real pipeline with that responder, and the
// transcript is harvested from the resulting traces, so a replay through the
// mock provider follows exactly the same path.

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <random>
#include <set>
#include <string>
#include <vector>

#include "regionqa/config.hpp"
#include "regionqa/eval.hpp"
#include "regionqa/reasoner.hpp"
#include "regionqa/text.hpp"

namespace fs = std::filesystem;
using namespace regionqa;

namespace {

std::string json_block(const nlohmann::json& j) {
    return std::string(kJsonStart) + "\n" + j.dump() + "\n" + std::string(kJsonEnd);
}

// "(h, r, t)" back into its fields.
std::vector<std::string> split_triplet_text(const std::string& text) {
    std::string body = text.substr(1, text.size() - 2);
    std::vector<std::string> parts;
    std::size_t pos = 0;
    for (std::size_t next; (next = body.find(", ", pos)) != std::string::npos; pos = next + 2) {
        parts.push_back(body.substr(pos, next - pos));
    }
    parts.push_back(body.substr(pos));
    return parts;
}

std::vector<std::string> split_list(const std::string& text) {
    std::vector<std::string> out;
    std::size_t pos = 0;
    for (std::size_t next; (next = text.find(", ", pos)) != std::string::npos; pos = next + 2) {
        out.push_back(text.substr(pos, next - pos));
    }
    if (pos < text.size()) out.push_back(text.substr(pos));
    return out;
}

/// What the oracle knows about one question.
struct Script {
    std::string domain;
    std::vector<std::string> hops;  // empty: decomposition fails and the run falls back to one hop
    std::map<std::string, std::string> hop_answers;
    std::string final_answer;
};

/// Shared responses for the hypothesize/revise loop: one triplet that passes
/// review, one off-schema triplet that a revision repairs, and one triplet
/// with an entity outside the region that never gets repaired.
std::string hypothesize_response(const Slots& slots) {
    auto vertices = split_list(slots.at("allowed_entities"));
    const auto& first = vertices.front();
    const auto& last = vertices.back();
    nlohmann::json triplets = nlohmann::json::array();
    triplets.push_back({first, "associated_with", last});
    triplets.push_back({last, "cures", first});
    triplets.push_back({first, "interacts_with", "phantom factor zq9"});
    return "Candidate relations for this step:\n" + json_block({{"Triplets", triplets}});
}

std::string revise_response(const Slots& slots, const RelationSchema& schema) {
    auto parts = split_triplet_text(slots.at("t"));
    nlohmann::json revised = nlohmann::json::array();
    if (!schema.contains(parts[1])) {
        revised.push_back({parts[0], "treats", parts[2]});
    } else {
        revised.push_back({parts[0], parts[1], parts[2] + " variant"});
    }
    return json_block({{"Revised_Triplets", revised}});
}

class Oracle {
public:
    Oracle(std::map<std::string, Script> by_query, RelationSchema schema)
        : by_query_(std::move(by_query)), schema_(std::move(schema)) {
        for (const auto& [q, s] : by_query_) {
            for (const auto& [hop, answer] : s.hop_answers) hop_answers_[hop] = answer;
        }
    }

    std::string operator()(const RenderedPrompt& p, const CompletionParams&) const {
        const auto& s = p.slots;
        switch (p.id) {
            case TemplateId::DomainClassify:
                return json_block({{"category", script(s.at("user_question")).domain}});
            case TemplateId::Decompose: {
                const auto& sc = script(s.at("user_question"));
                if (sc.hops.empty()) return "This question is best answered in a single step.";
                nlohmann::json hops = nlohmann::json::array();
                for (std::size_t i = 0; i < sc.hops.size(); ++i) {
                    hops.push_back("Hop " + std::to_string(i + 1) + ": " + sc.hops[i]);
                }
                return json_block({{"hops", hops}});
            }
            case TemplateId::Hypothesize: return hypothesize_response(s);
            case TemplateId::Revise: return revise_response(s, schema_);
            case TemplateId::HopStrict:
            case TemplateId::HopHybrid:
            case TemplateId::HopGuess: {
                auto it = hop_answers_.find(s.at("hop_question"));
                if (it == hop_answers_.end()) throw std::runtime_error("oracle has no answer for " + s.at("hop_question"));
                return it->second;
            }
            case TemplateId::Synthesize: return script(s.at("original_query")).final_answer;
            default: throw std::runtime_error("oracle has no script for template " + std::string(to_string(p.id)));
        }
    }

private:
    const Script& script(const std::string& query) const {
        auto it = by_query_.find(query);
        if (it == by_query_.end()) throw std::runtime_error("oracle has no script for query: " + query);
        return it->second;
    }

    std::map<std::string, Script> by_query_;
    std::map<std::string, std::string> hop_answers_;
    RelationSchema schema_;
};

/// Runs every query through the oracle and returns the harvested transcript.
nlohmann::json harvest(const std::shared_ptr<const KnowledgeGraph>& kg, const std::shared_ptr<const AliasMap>& aliases,
                       const std::map<std::string, Script>& scripts) {
    auto provider = std::make_shared<const CallbackProvider>(Oracle(scripts, kg->schema()));
    auto gateway = std::make_shared<const Gateway>(std::make_shared<const PromptLibrary>(PromptLibrary::bundled()), provider);
    Engine engine(kg, aliases, nullptr, std::make_shared<const HashingEmbedder>(), gateway, PipelineConfig{});

    nlohmann::json transcript = nlohmann::json::array();
    std::set<std::pair<std::string, std::string>> seen;
    for (const auto& [query, script] : scripts) {
        auto result = engine.run(query);
        for (auto& entry : transcript_from_trace(result.trace.to_json())) {
            std::pair key{entry["template"].get<std::string>(), entry["slot_digest"].get<std::string>()};
            if (seen.insert(key).second) transcript.push_back(std::move(entry));
        }
    }
    return transcript;
}

void write_text(const fs::path& path, const std::string& text) {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot write " + path.string());
    out << text;
}

// ---------------------------------------------------------------------------
// NGLY1 question

void make_ngly1(const fs::path& dir, const std::shared_ptr<const AliasMap>& aliases) {
    auto kg = std::make_shared<const KnowledgeGraph>(load_graph(dir / "graph.tsv"));
    std::ifstream in(dir / "question.json");
    auto q = nlohmann::json::parse(in);
    DatasetItem item{q["id"], q["question"], std::vector<AnswerOption>{}, q["answer"]};
    for (const auto& o : q["options"]) item.options->push_back({o["label"], o["text"]});

    Script s;
    s.domain = "GENE_PROTEIN";
    // No hops: decomposition fails and the question runs as a single hop.
    s.hop_answers[item.query_text()] =
        "NGLY1 is associated with NGLY1-deficiency, with neurological and systemic phenotypes such as "
        "developmental regression, cerebral atrophy and alacrima.";
    s.final_answer =
        "The answer is (C) NGLY1-deficiency. Loss of NGLY1 function causes NGLY1-deficiency, whose clinical "
        "outcomes include developmental regression, cerebral atrophy, alacrima, hypotonia and seizures.";

    auto transcript = harvest(kg, aliases, {{item.query_text(), s}});
    write_text(dir / "transcript.json", transcript.dump(2) + "\n");
    std::cout << "ngly1: " << transcript.size() << " transcript entries\n";
}

// ---------------------------------------------------------------------------
// Synthetic graph and MCQ suite

struct Names {
    std::vector<std::string> genes, drugs, diseases, symptoms, pathways, tissues;
};

Names make_names(std::mt19937& rng) {
    const std::vector<std::string> syl = {"ka", "lo", "mi", "ren", "tu", "vos", "zel", "dra", "pex", "quin",
                                          "bor", "sa", "ti", "nor", "gal", "fen", "ru", "ox", "mel", "cy"};
    std::set<std::string> used;
    auto pick = [&](int n) {
        std::string s;
        for (int i = 0; i < n; ++i) s += syl[rng() % syl.size()];
        return s;
    };
    auto fresh = [&](auto make) {
        for (;;) {
            std::string name = make();
            // Names differ in their first word so no name is a prefix n-gram of another.
            auto head = name.substr(0, name.find(' '));
            if (used.insert(head).second) return name;
        }
    };
    Names n;
    for (int i = 0; i < 12; ++i) n.genes.push_back(fresh([&] {
        std::string g;
        for (int j = 0; j < 3; ++j) g += static_cast<char>('A' + rng() % 26);
        return g + std::to_string(1 + rng() % 9);
    }));
    const std::vector<std::string> drug_suffix = {"mab", "nib", "stat", "cillin"};
    for (int i = 0; i < 10; ++i) n.drugs.push_back(fresh([&] { return pick(2) + drug_suffix[rng() % 4]; }));
    const std::vector<std::string> disease_suffix = {"syndrome", "disease"};
    for (int i = 0; i < 10; ++i)
        n.diseases.push_back(fresh([&] { return pick(2) + "ic " + disease_suffix[rng() % 2]; }));
    const std::vector<std::string> symptom_suffix = {"algia", "emia", "osis"};
    for (int i = 0; i < 10; ++i) n.symptoms.push_back(fresh([&] { return pick(2) + symptom_suffix[rng() % 3]; }));
    for (int i = 0; i < 6; ++i) n.pathways.push_back(fresh([&] { return pick(2) + "ase pathway"; }));
    for (int i = 0; i < 4; ++i) n.tissues.push_back(fresh([&] { return pick(2) + "al tissue"; }));
    return n;
}

std::vector<std::array<std::string, 3>> make_graph(std::mt19937& rng, const Names& n) {
    std::set<std::array<std::string, 3>> seen;
    std::vector<std::array<std::string, 3>> rows;
    auto add = [&](const std::string& h, const std::string& r, const std::string& t) {
        if (h == t) return;
        std::array<std::string, 3> row{h, r, t};
        if (seen.insert(row).second) rows.push_back(row);
    };
    auto any = [&](const std::vector<std::string>& v) -> const std::string& { return v[rng() % v.size()]; };

    // Every drug treats a disease and targets a gene; every gene regulates a
    // pathway and is associated with a disease; every disease causes a symptom.
    for (std::size_t i = 0; i < n.drugs.size(); ++i) {
        add(n.drugs[i], "treats", n.diseases[i % n.diseases.size()]);
        add(n.drugs[i], "targets", n.genes[i % n.genes.size()]);
    }
    for (std::size_t i = 0; i < n.genes.size(); ++i) {
        add(n.genes[i], "regulates", n.pathways[i % n.pathways.size()]);
        add(n.genes[i], "associated_with", n.diseases[i % n.diseases.size()]);
    }
    for (std::size_t i = 0; i < n.diseases.size(); ++i) add(n.diseases[i], "causes", n.symptoms[i]);

    while (rows.size() < 200) {
        switch (rng() % 8) {
            case 0: add(any(n.genes), "interacts_with", any(n.genes)); break;
            case 1: add(any(n.drugs), "targets", any(n.genes)); break;
            case 2: add(any(n.drugs), "treats", any(n.diseases)); break;
            case 3: add(any(n.diseases), "causes", any(n.symptoms)); break;
            case 4: add(any(n.genes), "expressed_in", any(n.tissues)); break;
            case 5: add(any(n.genes), "associated_with", any(n.diseases)); break;
            case 6: add(any(n.genes), "regulates", any(n.pathways)); break;
            case 7: add(any(n.pathways), "occurs_in", any(n.tissues)); break;
        }
    }
    return rows;
}

struct GraphView {
    std::vector<std::array<std::string, 3>> rows;

    std::vector<std::string> objects(const std::string& head, const std::string& rel) const {
        std::vector<std::string> out;
        for (const auto& r : rows) {
            if (r[0] == head && r[1] == rel) out.push_back(r[2]);
        }
        std::sort(out.begin(), out.end());
        return out;
    }
};

void make_synthetic(const fs::path& dir, const std::shared_ptr<const AliasMap>& aliases) {
    std::mt19937 rng(20240611u);
    auto names = make_names(rng);
    GraphView g{make_graph(rng, names)};

    std::string tsv = "# head\trelation\ttail\n";
    for (const auto& r : g.rows) tsv += r[0] + "\t" + r[1] + "\t" + r[2] + "\n";
    write_text(dir / "graph.tsv", tsv);
    auto kg = std::make_shared<const KnowledgeGraph>(load_graph(dir / "graph.tsv"));

    const std::vector<std::string> labels = {"A", "B", "C", "D"};
    std::map<std::string, Script> scripts;
    std::string jsonl;

    // Four distinct options with the gold at `gold_slot`; distractors avoid every correct object.
    auto options_for = [&](const std::string& gold, const std::vector<std::string>& pool,
                           const std::vector<std::string>& correct, std::size_t gold_slot) {
        std::vector<std::string> distractors;
        for (const auto& c : pool) {
            if (std::find(correct.begin(), correct.end(), c) == correct.end()) distractors.push_back(c);
        }
        std::shuffle(distractors.begin(), distractors.end(), rng);
        distractors.resize(3);
        distractors.insert(distractors.begin() + static_cast<std::ptrdiff_t>(gold_slot), gold);
        return distractors;
    };

    for (int i = 0; i < 20; ++i) {
        DatasetItem item;
        item.id = "syn-" + std::string(i < 9 ? "0" : "") + std::to_string(i + 1);
        const std::size_t gold_slot = rng() % 4;
        Script s;
        std::string gold_text;
        std::vector<std::string> options;

        switch (i % 4) {
            case 0: {  // one hop
                const auto& drug = names.drugs[static_cast<std::size_t>(i / 4) % names.drugs.size()];
                auto treated = g.objects(drug, "treats");
                gold_text = treated.front();
                options = options_for(gold_text, names.diseases, treated, gold_slot);
                item.question = "Which disease is treated by " + drug + "?";
                s.domain = "DRUG_THERAPY";
                s.hops = {item.question};
                s.hop_answers[item.question] = drug + " is used to treat " + gold_text + ".";
                break;
            }
            case 1: {  // two hops: drug -> gene -> pathway
                const auto& drug = names.drugs[static_cast<std::size_t>(i / 4 + 3) % names.drugs.size()];
                const auto gene = g.objects(drug, "targets").front();
                auto pathways = g.objects(gene, "regulates");
                gold_text = pathways.front();
                options = options_for(gold_text, names.pathways, pathways, gold_slot);
                item.question = "Which pathway is regulated by the gene that " + drug + " targets?";
                s.domain = "PATHWAY_METABOLISM";
                s.hops = {"Which gene does " + drug + " target?", "Which pathway does " + gene + " regulate?"};
                s.hop_answers[s.hops[0]] = drug + " targets " + gene + ".";
                s.hop_answers[s.hops[1]] = gene + " regulates the " + gold_text + ".";
                break;
            }
            case 2: {  // three hops, the last one outside the graph
                const auto& gene = names.genes[static_cast<std::size_t>(i / 4 + 5) % names.genes.size()];
                const auto disease = g.objects(gene, "associated_with").front();
                auto symptoms = g.objects(disease, "causes");
                gold_text = symptoms.front();
                options = options_for(gold_text, names.symptoms, symptoms, gold_slot);
                item.question = "Which symptom is caused by the disease associated with " + gene +
                                ", and what is the usual prognosis?";
                s.domain = "DISEASE_SYMPTOM";
                s.hops = {"Which disease is associated with " + gene + "?",
                          "Which symptom does " + disease + " cause?", "What is the usual prognosis?"};
                s.hop_answers[s.hops[0]] = gene + " is associated with " + disease + ".";
                s.hop_answers[s.hops[1]] = disease + " causes " + gold_text + ".";
                s.hop_answers[s.hops[2]] = "Based on general knowledge, the prognosis depends on severity and onset.";
                break;
            }
            default: {  // decomposition fails; one hop over the full question
                const auto& gene = names.genes[static_cast<std::size_t>(i / 4 + 1) % names.genes.size()];
                auto diseases = g.objects(gene, "associated_with");
                gold_text = diseases.front();
                options = options_for(gold_text, names.diseases, diseases, gold_slot);
                item.question = "Which disease is associated with " + gene + "?";
                s.domain = i % 8 == 3 ? "GENE_PROTEIN" : "INTEGRATED";
                break;
            }
        }

        item.options = std::vector<AnswerOption>{};
        for (std::size_t k = 0; k < 4; ++k) item.options->push_back({labels[k], options[k]});
        item.gold = labels[gold_slot];
        if (s.hops.empty()) {
            s.hop_answers[item.query_text()] = "The graph links this gene to " + gold_text + ".";
        }
        // Mix the answer styles the option mapper has to handle.
        if (i % 5 == 3) {
            s.final_answer = "Most consistent with the evidence: " + gold_text + ".";
        } else if (i % 5 == 4) {
            s.final_answer = item.gold + ". " + gold_text;
        } else {
            s.final_answer = "The answer is (" + item.gold + ") " + gold_text + ".";
        }
        scripts[item.query_text()] = s;

        nlohmann::ordered_json row;
        row["id"] = item.id;
        row["question"] = item.question;
        row["options"] = nlohmann::ordered_json::array();
        for (const auto& o : *item.options) row["options"].push_back({{"label", o.label}, {"text", o.text}});
        row["answer"] = item.gold;
        jsonl += row.dump() + "\n";
    }
    write_text(dir / "mcq.jsonl", jsonl);

    auto transcript = harvest(kg, aliases, scripts);
    write_text(dir / "transcript.json", transcript.dump(2) + "\n");
    std::cout << "synthetic: " << g.rows.size() << " triplets, 20 items, " << transcript.size()
              << " transcript entries\n";
}

}  // namespace

int main(int argc, char** argv) {
    const fs::path root = argc > 1 ? fs::path(argv[1]) : fs::path("data/fixtures");
    try {
        auto aliases = std::make_shared<const AliasMap>(load_alias_map(root / "aliases.json"));
        make_ngly1(root / "ngly1", aliases);
        make_synthetic(root / "synthetic", aliases);
    } catch (const std::exception& e) {
        std::cerr << "make_fixtures: " << e.what() << '\n';
        return 1;
    }
    return 0;
}
