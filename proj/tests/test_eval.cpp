#include <gtest/gtest.h>

#include <sstream>

#include "regionqa/errors.hpp"
#include "regionqa/eval.hpp"
#include "scripted_world.hpp"

using namespace regionqa;

namespace {

std::vector<AnswerOption> ngly1_options() {
    return {{"A", "Cystic fibrosis"}, {"B", "Phenylketonuria"}, {"C", "NGLY1-deficiency"}, {"D", "Tay-Sachs disease"}};
}

std::shared_ptr<const Gateway> judge_returning(std::string response) {
    return std::make_shared<const Gateway>(
        std::make_shared<const PromptLibrary>(PromptLibrary::bundled()),
        std::make_shared<const CallbackProvider>(
            [response](const RenderedPrompt&, const CompletionParams&) { return response; }));
}

std::vector<DatasetItem> parse(const std::string& text, Protocol p) {
    std::istringstream in(text);
    return parse_dataset(in, p);
}

}  // namespace

TEST(MapOption, LetterRules) {
    auto opts = ngly1_options();
    auto m = map_option("The answer is (C) NGLY1-deficiency.", opts);
    EXPECT_EQ(m.label, "C");
    EXPECT_EQ(m.rule, OptionMapping::Rule::Letter);
    EXPECT_EQ(map_option("B. Phenylketonuria", opts).label, "B");
    EXPECT_EQ(map_option("Answer: D", opts).label, "D");
    // "A" followed by a lowercase word is the article, not a label.
    EXPECT_EQ(map_option("A deficiency of the NGLY1 enzyme, option (C)", opts).label, "C");
}

TEST(MapOption, OverlapAndUnparseable) {
    auto opts = ngly1_options();
    auto m = map_option("it is most likely tay-sachs disease", opts);
    EXPECT_EQ(m.label, "D");
    EXPECT_EQ(m.rule, OptionMapping::Rule::Overlap);
    auto none = map_option("no idea at all", opts);
    EXPECT_FALSE(none.label);
    EXPECT_EQ(none.rule, OptionMapping::Rule::Unparseable);
}

TEST(McqAccuracy, CountsMissingAsWrong) {
    auto items = parse(R"({"id":"1","question":"q","options":[{"label":"A","text":"x"},{"label":"B","text":"y"}],"answer":"A"}
{"id":"2","question":"q","options":[{"label":"A","text":"x"},{"label":"B","text":"y"}],"answer":"B"}
{"id":"3","question":"q","options":[{"label":"A","text":"x"},{"label":"B","text":"y"}],"answer":"B"}
{"id":"4","question":"q","options":[{"label":"A","text":"x"},{"label":"B","text":"y"}],"answer":"A"}
)",
                       Protocol::Mcq);
    EXPECT_DOUBLE_EQ(mcq_accuracy({{"1", "A"}, {"2", "B"}, {"3", "A"}}, items), 50.0);
    EXPECT_DOUBLE_EQ(mcq_accuracy({}, items), 0.0);
}

TEST(Dataset, ParsesAndValidates) {
    auto items = parse("{\"id\":\"s1\",\"question\":\"q?\",\"answer\":\"gold\"}\n\n", Protocol::Saq);
    ASSERT_EQ(items.size(), 1u);
    EXPECT_EQ(items[0].query_text(), "q?");

    auto mcq = parse(R"({"id":"m","question":"Q?","options":[{"label":"A","text":"x"},{"label":"B","text":"y"}],"answer":"B"})",
                     Protocol::Mcq);
    EXPECT_EQ(mcq[0].query_text(), "Q?\nOptions: (A) x (B) y");

    try {
        parse("{\"id\":\"a\",\"question\":\"q\",\"answer\":\"x\"}\nnot json\n", Protocol::Saq);
        FAIL() << "expected ParseError";
    } catch (const ParseError& e) {
        EXPECT_NE(std::string(e.what()).find("2"), std::string::npos);
    }
    EXPECT_THROW(parse("{\"id\":\"a\",\"question\":\"q\",\"answer\":\"x\"}\n{\"id\":\"a\",\"question\":\"q\",\"answer\":\"y\"}",
                       Protocol::Saq),
                 ValidationError);
    EXPECT_THROW(parse(R"({"id":"m","question":"Q","options":[{"label":"A","text":"x"},{"label":"B","text":"y"}],"answer":"E"})", Protocol::Mcq),
                 ValidationError);
}

TEST(JudgeSaq, ThresholdOnSimilarity) {
    auto verdict = [](double sim) {
        return judge_saq("q", "gold", "pred",
                         *judge_returning("{\"similarity_score\": " + std::to_string(sim) + ", \"is_correct\": true}"));
    };
    EXPECT_FALSE(verdict(0.79)->correct);
    EXPECT_TRUE(verdict(0.80)->correct);
    EXPECT_TRUE(verdict(0.85)->correct);
    EXPECT_DOUBLE_EQ(verdict(1.4)->similarity, 1.0);
    EXPECT_FALSE(judge_saq("q", "g", "p", *judge_returning("I think they match")));
}

TEST(InconsistencyScore, ClampsAndFails) {
    auto r = inconsistency_score("q", "g", "p", *judge_returning("{\"is\": 0.25, \"rationale\": \"minor\"}"));
    ASSERT_TRUE(r);
    EXPECT_DOUBLE_EQ(r->is_value, 0.25);
    EXPECT_EQ(r->rationale, "minor");
    auto clamped = inconsistency_score("q", "g", "p", *judge_returning("{\"is\": 1.5}"));
    EXPECT_DOUBLE_EQ(clamped->is_value, 1.0);
    EXPECT_TRUE(clamped->clamped);
    EXPECT_FALSE(inconsistency_score("q", "g", "p", *judge_returning("{\"other\": 1}")));
}

TEST(RunEval, SaqReportExcludesUnjudgedFromDenominator) {
    std::vector<Triplet> ts{*make_triplet("node0", "associated with", "node1")};
    auto kg = std::make_shared<const KnowledgeGraph>(ts);
    auto engine = scripted::engine(kg, scripted::gateway({}));
    auto items = parse("{\"id\":\"1\",\"question\":\"node0?\",\"answer\":\"node1\"}\n"
                       "{\"id\":\"2\",\"question\":\"node1?\",\"answer\":\"node0\"}\n",
                       Protocol::Saq);

    auto good = judge_returning("{\"similarity_score\": 0.9, \"is\": 0.1}");
    EvalOptions opts;
    opts.protocol = Protocol::Saq;
    auto report = run_eval(items, engine, opts, good.get());
    EXPECT_EQ(report.correct, 2u);
    EXPECT_EQ(report.denominator, 2u);
    EXPECT_DOUBLE_EQ(report.accuracy, 100.0);
    ASSERT_TRUE(report.mean_is);
    EXPECT_NEAR(*report.mean_is, 0.1, 1e-12);

    auto broken = judge_returning("no verdict");
    report = run_eval(items, engine, opts, broken.get());
    EXPECT_EQ(report.unjudged, 2u);
    EXPECT_EQ(report.denominator, 0u);
    EXPECT_DOUBLE_EQ(report.accuracy, 0.0);
}

TEST(RunEval, McqWorkersPreserveOrderAndResults) {
    std::vector<Triplet> ts{*make_triplet("node0", "associated with", "node1")};
    auto kg = std::make_shared<const KnowledgeGraph>(ts);
    scripted::Responder r;
    r.final_answer = "The answer is (B) y";
    auto engine = scripted::engine(kg, scripted::gateway(r));
    std::string text;
    for (int i = 0; i < 12; ++i) {
        text += R"({"id":"i)" + std::to_string(i) +
                R"(","question":"node0?","options":[{"label":"A","text":"x"},{"label":"B","text":"y"}],"answer":")" +
                (i % 3 ? "B" : "A") + "\"}\n";
    }
    auto items = parse(text, Protocol::Mcq);
    EvalOptions serial;
    EvalOptions parallel;
    parallel.workers = 4;
    auto a = run_eval(items, engine, serial);
    auto b = run_eval(items, engine, parallel);
    EXPECT_EQ(a.correct, 8u);
    EXPECT_EQ(b.correct, 8u);
    EXPECT_FALSE(a.mean_is);
    for (std::size_t i = 0; i < items.size(); ++i) {
        EXPECT_EQ(a.records[i].id, items[i].id);
        EXPECT_EQ(b.records[i].id, items[i].id);
    }
    auto j = a.to_json();
    EXPECT_EQ(j["n"], 12);
    EXPECT_FALSE(a.summary_table().empty());
}

TEST(RunEval, ItemFailuresAreRecordedNotThrown) {
    std::vector<Triplet> ts{*make_triplet("node0", "associated with", "node1")};
    auto kg = std::make_shared<const KnowledgeGraph>(ts);
    auto mock = std::make_shared<const Gateway>(std::make_shared<const PromptLibrary>(PromptLibrary::bundled()),
                                                std::make_shared<const MockProvider>(std::vector<MockProvider::Entry>{}));
    auto engine = scripted::engine(kg, mock);
    auto items = parse(R"({"id":"x","question":"q","options":[{"label":"A","text":"x"},{"label":"B","text":"y"}],"answer":"A"})", Protocol::Mcq);
    auto report = run_eval(items, engine, {});
    EXPECT_EQ(report.errors, 1u);
    EXPECT_EQ(report.correct, 0u);
    EXPECT_TRUE(report.records[0].error);
}
