#include <gtest/gtest.h>

#include <random>

#include "oracles.hpp"
#include "regionqa/errors.hpp"
#include "regionqa/region.hpp"

using namespace regionqa;

namespace {

Triplet T(const std::string& h, const std::string& r, const std::string& t) { return *make_triplet(h, r, t); }

}  // namespace

TEST(RelationWeights, BundledTableSpotChecks) {
    auto m = RelationWeightMatrix::bundled();
    EXPECT_DOUBLE_EQ(relation_weight(m, "Interacts_with", DomainCategory::GeneProtein), 1.5);
    EXPECT_DOUBLE_EQ(relation_weight(m, "Targets", DomainCategory::DrugTherapy), 1.5);
    EXPECT_DOUBLE_EQ(relation_weight(m, "interacts with", DomainCategory::DrugTherapy), 0.8);
    EXPECT_DOUBLE_EQ(relation_weight(m, "phenotype present", DomainCategory::Integrated), 1.0);
    EXPECT_EQ(m.relations().size(), 8u);
}

TEST(RelationWeights, DomainPriorAblationForcesOne) {
    auto m = RelationWeightMatrix::bundled();
    for (const auto& r : m.relations()) {
        for (auto d : kAllDomains) EXPECT_DOUBLE_EQ(relation_weight(m, r, d, false), 1.0);
    }
}

TEST(RelationWeights, ParseRejectsBadDocuments) {
    EXPECT_THROW(parse_weight_matrix("not json"), Error);
    EXPECT_THROW(parse_weight_matrix(R"({"treats": {"NOT_A_DOMAIN": 1.0}})"), Error);
    auto m = parse_weight_matrix(R"({"Treats": {"DRUG_THERAPY": 2.5}})");
    EXPECT_DOUBLE_EQ(m.get("treats", DomainCategory::DrugTherapy), 2.5);
    EXPECT_DOUBLE_EQ(m.get("treats", DomainCategory::GeneProtein), 1.0);
}

TEST(MmrScore, HandComputedValues) {
    RegionConfig cfg;
    EXPECT_NEAR(mmr_score(1.0, 1.0, 0.0, cfg), 0.7, 1e-9);
    EXPECT_NEAR(mmr_score(0.5, 1.2, 0.5, cfg), 0.27, 1e-9);
    EXPECT_NEAR(mmr_score(0.0, 1.5, 1.0, cfg), -0.3, 1e-9);
    cfg.mmr_enabled = false;
    EXPECT_NEAR(mmr_score(0.5, 1.2, 0.5, cfg), 0.6, 1e-9);
}

TEST(MmrScore, EmbeddingOverloadMatchesArithmetic) {
    HashingEmbedder e;
    RegionConfig cfg;
    auto t = T("flt4", "interacts_with", "vegfc");
    auto q = e.embed("flt4 interacts with vegfc");
    EXPECT_NEAR(mmr_score(t, q, {}, cfg, 1.0, e), 0.7, 1e-9);
    // Selecting t itself makes the redundancy term 1.
    EXPECT_NEAR(mmr_score(t, q, {t}, cfg, 1.0, e), 0.7 - 0.3, 1e-9);
}

TEST(SelectRegion, EmptyEntitiesGiveEmptyRegion) {
    KnowledgeGraph kg({T("a", "treats", "b")});
    auto r = select_region("q", {}, kg, DomainCategory::Integrated, RelationWeightMatrix::bundled(), {},
                           HashingEmbedder{});
    EXPECT_TRUE(r.selected.empty());
    EXPECT_TRUE(r.vertices.empty());
}

TEST(SelectRegion, SmallCandidateSetFullySelectedInOracleOrder) {
    KnowledgeGraph kg({T("flt4", "interacts_with", "vegfc"), T("flt4", "expressed_in", "lymph node"),
                       T("drug x", "targets", "flt4")});
    ExpandedEntitySet ents;
    ents.entities = {"flt4"};
    HashingEmbedder e;
    auto m = RelationWeightMatrix::bundled();
    RegionConfig cfg;
    auto r = select_region("which gene interacts with flt4", ents, kg, DomainCategory::GeneProtein, m, cfg, e);
    ASSERT_EQ(r.n_facts(), 3u);
    EXPECT_EQ(r.selected, oracle::mmr_select("which gene interacts with flt4", kg.triplets(),
                                             DomainCategory::GeneProtein, m, cfg, e));
    EXPECT_EQ(r.vertices, (std::set<std::string>{"drug x", "flt4", "lymph node", "vegfc"}));
}

TEST(SelectRegion, TieBreaksOnSmallerTripletText) {
    // Same relation and head; tails are unrelated to the query so scores tie at round 0.
    HashingEmbedder e;
    auto m = RelationWeightMatrix::bundled();
    RegionConfig cfg;
    cfg.k = 1;
    auto r = select_from_candidates("zzz", {T("a", "treats", "qb"), T("a", "treats", "qa")}, DomainCategory::Integrated,
                                    m, cfg, e);
    ASSERT_EQ(r.n_facts(), 1u);
    EXPECT_EQ(r.selected[0].tail, "qa");
}

TEST(SelectRegion, KBoundsSelectionAndNoMmrScoresAreNonIncreasing) {
    std::vector<Triplet> ts;
    for (int i = 0; i < 40; ++i) ts.push_back(T("hub", i % 2 ? "treats" : "causes", "n" + std::to_string(i)));
    KnowledgeGraph kg(ts);
    ExpandedEntitySet ents;
    ents.entities = {"hub"};
    HashingEmbedder e;
    RegionConfig cfg;
    auto r = select_region("what does hub treat n3 n5", ents, kg, DomainCategory::DrugTherapy,
                           RelationWeightMatrix::bundled(), cfg, e);
    EXPECT_EQ(r.n_facts(), 15u);
    EXPECT_EQ(r.candidate_count, 40u);

    cfg.mmr_enabled = false;
    auto plain = select_region("what does hub treat n3 n5", ents, kg, DomainCategory::DrugTherapy,
                               RelationWeightMatrix::bundled(), cfg, e);
    for (std::size_t i = 1; i < plain.scores.size(); ++i) EXPECT_LE(plain.scores[i], plain.scores[i - 1]);
}

TEST(SelectRegion, IncrementalGreedyEqualsNaiveOracle) {
    std::mt19937 rng(3);
    const std::vector<std::string> rels = {"interacts_with", "targets", "treats", "causes", "expressed_in",
                                           "associated_with", "regulates", "occurs_in", "phenotype present"};
    const std::vector<std::string> vocab = {"alpha", "beta", "gamma", "delta", "eps", "zeta", "eta", "theta"};
    HashingEmbedder e(32);  // small dimension forces collisions and ties
    auto m = RelationWeightMatrix::bundled();
    for (int inst = 0; inst < 200; ++inst) {
        std::vector<Triplet> cands;
        const int n = 1 + static_cast<int>(rng() % 20);
        for (int i = 0; i < n; ++i) {
            cands.push_back(T(vocab[rng() % vocab.size()], rels[rng() % rels.size()], vocab[rng() % vocab.size()]));
        }
        std::sort(cands.begin(), cands.end());
        cands.erase(std::unique(cands.begin(), cands.end()), cands.end());
        RegionConfig cfg;
        cfg.k = 1 + rng() % 5;
        cfg.lambda = (rng() % 11) / 10.0;
        const auto domain = kAllDomains[rng() % kAllDomains.size()];
        std::string q = vocab[rng() % vocab.size()] + " " + vocab[rng() % vocab.size()];
        auto got = select_from_candidates(q, cands, domain, m, cfg, e);
        ASSERT_EQ(got.selected, oracle::mmr_select(q, cands, domain, m, cfg, e)) << "instance " << inst;
    }
}
