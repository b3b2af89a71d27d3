#include <gtest/gtest.h>

#include "regionqa/errors.hpp"
#include "regionqa/reasoner.hpp"
#include "scripted_world.hpp"

using namespace regionqa;

namespace {

Triplet tri(const std::string& h, const std::string& r, const std::string& t) { return *make_triplet(h, r, t); }

Region region_of(std::vector<Triplet> ts) {
    Region r;
    for (const auto& t : ts) {
        r.vertices.insert(t.head);
        r.vertices.insert(t.tail);
    }
    r.selected = std::move(ts);
    r.scores.assign(r.selected.size(), 0.0);
    r.relevance.assign(r.selected.size(), 0.0);
    return r;
}

/// A chain graph node0 -> node1 -> ... with `n` edges plus a hub with `hub_degree` spokes.
std::shared_ptr<const KnowledgeGraph> chain_graph(std::size_t hub_degree) {
    std::vector<Triplet> ts;
    for (int i = 0; i < 4; ++i) ts.push_back(tri("node" + std::to_string(i), "associated with", "node" + std::to_string(i + 1)));
    for (std::size_t i = 0; i < hub_degree; ++i) ts.push_back(tri("hub", "interacts with", "spoke" + std::to_string(i)));
    return std::make_shared<const KnowledgeGraph>(std::move(ts));
}

struct Fixed final : TripletScorer {
    ReviewScore score(const Triplet&, std::string_view, const Region&, const RelationSchema&) const override {
        return ReviewScore(1.0);
    }
};

}  // namespace

TEST(Dispatch, Boundaries) {
    EXPECT_EQ(dispatch_mode(0), ReasoningMode::LlmGuess);
    EXPECT_EQ(dispatch_mode(1), ReasoningMode::Hybrid);
    EXPECT_EQ(dispatch_mode(9), ReasoningMode::Hybrid);
    EXPECT_EQ(dispatch_mode(10), ReasoningMode::KgStrict);
    EXPECT_EQ(dispatch_mode(15), ReasoningMode::KgStrict);
    EXPECT_EQ(to_string(ReasoningMode::KgStrict), "KG_STRICT");
    EXPECT_EQ(to_string(ReasoningMode::Hybrid), "HYBRID");
    EXPECT_EQ(to_string(ReasoningMode::LlmGuess), "LLM_GUESS");
}

TEST(HopContext, RendersNumberedPairsAndStaysImmutable) {
    HopContext empty;
    EXPECT_EQ(empty.render(), "Previously answered: (none)");
    auto one = empty.with("q1", "a1");
    auto two = one.with("q2", "a2");
    EXPECT_TRUE(empty.empty());
    EXPECT_EQ(one.entries().size(), 1u);
    EXPECT_EQ(two.render(), "Previously answered:\n1. Q: q1\n   A: a1\n2. Q: q2\n   A: a2");
}

TEST(EvidenceMap, FlattenedIsOrderedUnionAndSerializeListsHops) {
    EvidenceMap ev;
    HopResult h1;
    h1.subquestion = "s1";
    h1.answer = "a1";
    h1.mode = ReasoningMode::KgStrict;
    h1.triplets = {tri("a", "treats", "b"), tri("c", "treats", "d")};
    HopResult h2;
    h2.subquestion = "s2";
    h2.answer = "a2";
    h2.triplets = {tri("c", "treats", "d"), tri("e", "causes", "f")};
    HopResult h3;
    h3.subquestion = "s3";
    h3.answer = "a3";
    ev.hops = {h1, h2, h3};
    auto flat = ev.flattened();
    ASSERT_EQ(flat.size(), 3u);
    EXPECT_EQ(flat[2], tri("e", "causes", "f"));
    auto text = ev.serialize();
    EXPECT_NE(text.find("Hop 1 [KG_STRICT]\nSub-question: s1\nSub-answer: a1\nTriplets:\n(a, treats, b)"), std::string::npos);
    EXPECT_NE(text.find("Hop 3 [LLM_GUESS]\nSub-question: s3\nSub-answer: a3\nTriplets: (none)"), std::string::npos);
}

TEST(StripHopPrefix, RemovesLabels) {
    EXPECT_EQ(strip_hop_prefix("Hop 1: What is X?"), "What is X?");
    EXPECT_EQ(strip_hop_prefix("  hop 12) Why"), "Why");
    EXPECT_EQ(strip_hop_prefix("HOP 3 - then"), "then");
    EXPECT_EQ(strip_hop_prefix("Hopkins syndrome?"), "Hopkins syndrome?");
}

TEST(ClassifyDomain, ValidCategoryAndFallbacks) {
    scripted::Responder r;
    r.category = "DRUG_THERAPY";
    Trace trace;
    auto d = classify_domain("q", *scripted::gateway(r), trace);
    EXPECT_EQ(d.domain, DomainCategory::DrugTherapy);
    EXPECT_FALSE(d.fallback);

    r.category = "ASTROLOGY";
    d = classify_domain("q", *scripted::gateway(r), trace);
    EXPECT_EQ(d.domain, DomainCategory::Integrated);
    EXPECT_TRUE(d.fallback);

    auto prose = std::make_shared<const Gateway>(
        std::make_shared<const PromptLibrary>(PromptLibrary::bundled()),
        std::make_shared<const CallbackProvider>([](const RenderedPrompt&, const CompletionParams&) { return std::string("hmm"); }));
    d = classify_domain("q", *prose, trace);
    EXPECT_EQ(d.domain, DomainCategory::Integrated);
    EXPECT_TRUE(d.fallback);
    EXPECT_EQ(trace.count("classify_domain"), 3u);
}

TEST(DecomposeQuery, ParsesTruncatesAndFallsBack) {
    scripted::Responder r;
    r.hops = {"Hop 1: first", "Hop 2: second", "Hop 3: third"};
    Trace trace;
    auto d = decompose_query("Q", 2, *scripted::gateway(r), trace);
    EXPECT_EQ(d.hops, (std::vector<std::string>{"first", "second"}));
    EXPECT_FALSE(d.fallback);
    EXPECT_EQ(trace.events().back().data["truncated_from"], 3);

    r.hops = {};
    d = decompose_query("Q", 3, *scripted::gateway(r), trace);
    EXPECT_EQ(d.hops, std::vector<std::string>{"Q"});
    EXPECT_TRUE(d.fallback);

    EXPECT_THROW(decompose_query("Q", 0, *scripted::gateway(r), trace), ValidationError);
}

TEST(AnswerHop, StrictUsesRegionFactsOnly) {
    auto gw = scripted::gateway({});
    Reviewer reviewer({}, nullptr);
    RelationSchema schema({"treats"});
    HopDependencies deps{*gw, reviewer, schema};
    auto region = region_of({tri("a", "treats", "b")});
    Trace trace;
    auto hop = answer_hop("what treats b?", region, {}, ReasoningMode::KgStrict, deps, trace);
    EXPECT_EQ(hop.triplets, region.selected);
    EXPECT_EQ(hop.answer, "answer to what treats b?");
    EXPECT_TRUE(hop.hypothesized.empty());
    EXPECT_EQ(trace.count("hop_answer"), 1u);
}

TEST(AnswerHop, GuessAnswersCarryPreamble) {
    auto gw = scripted::gateway({});
    Reviewer reviewer({}, nullptr);
    RelationSchema schema({"treats"});
    HopDependencies deps{*gw, reviewer, schema};
    Trace trace;
    auto hop = answer_hop("why?", Region{}, {}, ReasoningMode::LlmGuess, deps, trace);
    EXPECT_EQ(hop.answer, "Based on general knowledge, answer to why?");
    EXPECT_TRUE(hop.triplets.empty());
}

TEST(AnswerHop, HybridKeepsOnlyClosedWorldHypotheses) {
    scripted::Responder r;
    r.hypothesize = [](const RenderedPrompt& p) {
        EXPECT_NE(p.slots.at("allowed_entities").find("a, b"), std::string::npos);
        return scripted::sentinel({{"Triplets", {{"b", "treats", "a"}, {"a", "treats", "zzz"}, {"a", "cures", "b"}}}});
    };
    auto gw = scripted::gateway(r);
    RelationSchema schema({"treats"});
    auto region = region_of({tri("a", "treats", "b")});

    // An approve-everything scorer still cannot leak evidence out of the region.
    Reviewer lenient({}, std::make_shared<Fixed>());
    HopDependencies deps{*gw, lenient, schema};
    Trace trace;
    auto hop = answer_hop("q", region, {}, ReasoningMode::Hybrid, deps, trace);
    EXPECT_EQ(hop.hypothesized.size(), 3u);
    EXPECT_EQ(hop.triplets, (std::vector<Triplet>{tri("a", "treats", "b"), tri("b", "treats", "a")}));
    EXPECT_EQ(hop.dropped.size(), 2u);

    Reviewer strict({}, nullptr);
    HopDependencies rule_deps{*gw, strict, schema};
    hop = answer_hop("q", region, {}, ReasoningMode::Hybrid, rule_deps, trace);
    EXPECT_EQ(hop.triplets.size(), 2u);
    ASSERT_TRUE(hop.review);
    EXPECT_EQ(hop.review->rejected.size(), 2u);
}

TEST(AnswerHop, ProviderFailureIsPipelineFailureWithTrace) {
    auto gw = std::make_shared<const Gateway>(
        std::make_shared<const PromptLibrary>(PromptLibrary::bundled()),
        std::make_shared<const MockProvider>(std::vector<MockProvider::Entry>{}));
    Reviewer reviewer({}, nullptr);
    RelationSchema schema({"treats"});
    HopDependencies deps{*gw, reviewer, schema};
    Trace trace;
    try {
        answer_hop("q", region_of({tri("a", "treats", "b")}), {}, ReasoningMode::KgStrict, deps, trace);
        FAIL() << "expected PipelineFailure";
    } catch (const PipelineFailure& e) {
        ASSERT_FALSE(e.partial_trace().empty());
        EXPECT_EQ(e.partial_trace().back()["stage"], "hop_error");
    }
}

TEST(Engine, RunsAllStagesAndModesFollowRegionSize) {
    scripted::Responder r;
    r.hops = {"What does node0 connect to?", "Which spokes touch hub?", "Anything about nowhere?"};
    auto eng = scripted::engine(chain_graph(12), scripted::gateway(r));
    auto result = eng.run("multi-part question");
    EXPECT_EQ(result.answer, "final answer");
    ASSERT_EQ(result.evidence.hops.size(), 3u);
    EXPECT_EQ(result.evidence.hops[0].mode, ReasoningMode::Hybrid);
    EXPECT_EQ(result.evidence.hops[1].mode, ReasoningMode::KgStrict);
    EXPECT_EQ(result.evidence.hops[2].mode, ReasoningMode::LlmGuess);

    std::vector<std::string> stages;
    for (const auto& e : result.trace.events()) stages.push_back(e.stage);
    EXPECT_EQ(stages, (std::vector<std::string>{"classify_domain", "decompose", "region_select", "hop_answer",
                                                "region_select", "hop_answer", "region_select", "hop_answer",
                                                "synthesize"}));
    auto j = result.to_json();
    std::vector<std::string> keys;
    for (auto it = j.begin(); it != j.end(); ++it) keys.push_back(it.key());
    EXPECT_EQ(keys, (std::vector<std::string>{"answer", "plan", "evidence", "trace"}));
    EXPECT_FALSE(j["trace"][0].contains("elapsed_ms"));
    EXPECT_TRUE(result.to_json(true)["trace"][0].contains("elapsed_ms"));
}

TEST(Engine, TraceReplaysThroughMockTranscript) {
    scripted::Responder r;
    r.hops = {"What does node0 connect to?", "Which spokes touch hub?"};
    r.hypothesize = [](const RenderedPrompt&) {
        return scripted::sentinel({{"Triplets", {{"node0", "associated with", "node1"}, {"node0", "cures", "x"}}}});
    };
    auto kg = chain_graph(12);
    auto live = scripted::engine(kg, scripted::gateway(r)).run("Q");

    auto transcript = transcript_from_trace(live.to_json()["trace"]);
    auto mock = std::make_shared<const Gateway>(std::make_shared<const PromptLibrary>(PromptLibrary::bundled()),
                                                std::make_shared<const MockProvider>(MockProvider::from_json(transcript)));
    auto replay = scripted::engine(kg, mock).run("Q");
    EXPECT_EQ(replay.to_json().dump(), live.to_json().dump());
}

TEST(Engine, NoMultihopAnswersQueryAsOneHop) {
    scripted::Responder r;
    r.hops = {"a", "b", "c"};
    PipelineConfig cfg;
    cfg.ablations.no_multihop = true;
    auto result = scripted::engine(chain_graph(3), scripted::gateway(r), cfg).run("tell me about node0");
    EXPECT_EQ(result.plan.hops, std::vector<std::string>{"tell me about node0"});
    EXPECT_EQ(result.trace.count("region_select"), 1u);
    EXPECT_EQ(result.trace.count("decompose"), 1u);
}

TEST(Engine, HopBudgetCapsRegionsAndAnswers) {
    for (std::size_t h : {1u, 2u, 4u}) {
        scripted::Responder r;
        r.hops = {"one", "two", "three", "four", "five", "six"};
        PipelineConfig cfg;
        cfg.max_hops = h;
        auto result = scripted::engine(chain_graph(3), scripted::gateway(r), cfg).run("Q");
        EXPECT_EQ(result.evidence.hops.size(), h);
        EXPECT_EQ(result.trace.count("region_select"), h);
        EXPECT_EQ(result.trace.count("hop_answer"), h);
    }
}

TEST(Engine, RejectsBadConfiguration) {
    PipelineConfig cfg;
    cfg.max_hops = 0;
    EXPECT_THROW(scripted::engine(chain_graph(1), scripted::gateway({}), cfg), ValidationError);
    cfg = {};
    cfg.region.lambda = 1.5;
    EXPECT_THROW(scripted::engine(chain_graph(1), scripted::gateway({}), cfg), ValidationError);
}

TEST(Engine, RegionPlanMatchesRunRegions) {
    scripted::Responder r;
    r.hops = {"What does node0 connect to?", "Which spokes touch hub?"};
    auto eng = scripted::engine(chain_graph(12), scripted::gateway(r));
    auto plan = eng.plan_regions("Q");
    auto run = eng.run("Q");
    ASSERT_EQ(plan.hops.size(), run.evidence.hops.size());
    for (std::size_t i = 0; i < plan.hops.size(); ++i) EXPECT_EQ(plan.hops[i].second.selected, run.evidence.hops[i].region.selected);
}
