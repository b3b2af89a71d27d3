#include <gtest/gtest.h>

#include <cmath>

#include <nlohmann/json.hpp>

#include "http_fixture.hpp"
#include "regionqa/embedding.hpp"
#include "regionqa/errors.hpp"
#include "regionqa/text.hpp"

using namespace regionqa;

namespace {

double norm(const Vector& v) {
    double s = 0;
    for (double x : v) s += x * x;
    return std::sqrt(s);
}

// Independent feature-hashing reference.
Vector hashing_reference(const std::string& text, std::size_t dim) {
    Vector v(dim, 0.0);
    for (const auto& w : words(text)) {
        std::uint64_t h = 0xcbf29ce484222325ULL;
        for (unsigned char c : w) h = (h ^ c) * 0x100000001b3ULL;
        v[h % dim] += (h & (1ULL << 63)) ? -1.0 : 1.0;
    }
    double n = norm(v);
    if (n > 0) for (double& x : v) x /= n;
    return v;
}

}  // namespace

TEST(TripletText, RelationUnderscoresBecomeSpaces) {
    EXPECT_EQ(triplet_text(*make_triplet("flt4", "interacts_with", "vegfc")), "flt4 interacts with vegfc");
    EXPECT_EQ(triplet_text(*make_triplet("a", "treats", "b")), "a treats b");
    EXPECT_NE(triplet_text(*make_triplet("x", "phenotype_present", "y")).find("phenotype present"), std::string::npos);
}

TEST(Cosine, KnownValues) {
    EXPECT_NEAR(cosine({1, 1, 0}, {1, 0, 0}), 0.7071, 1e-4);
    EXPECT_DOUBLE_EQ(cosine({1, 0}, {0, 1}), 0.0);
    Vector v{0.3, -2.0, 5.5};
    EXPECT_NEAR(cosine(v, v), 1.0, 1e-9);
    EXPECT_DOUBLE_EQ(cosine({0, 0}, {1, 0}), 0.0);
    EXPECT_THROW(cosine({1, 0}, {1, 0, 0}), DimensionMismatch);
}

TEST(HashingEmbedder, DeterministicUnitNormAndZeroForEmpty) {
    HashingEmbedder e;
    EXPECT_EQ(e.dimension(), 384u);
    auto a = e.embed("NGLY1 deficiency causes alacrima");
    EXPECT_EQ(a, e.embed("NGLY1 deficiency causes alacrima"));
    EXPECT_NEAR(norm(a), 1.0, 1e-9);
    auto z = e.embed("");
    EXPECT_EQ(z, Vector(384, 0.0));
    EXPECT_EQ(e.embed("What about FLT4?"), e.embed("what about flt4"));
}

TEST(HashingEmbedder, MatchesReferenceHashing) {
    HashingEmbedder e(64);
    for (std::string text : {"flt4 interacts with vegfc", "a b c d e f g", "repeat repeat repeat", "x"}) {
        auto got = e.embed(text);
        auto want = hashing_reference(text, 64);
        ASSERT_EQ(got.size(), want.size());
        for (std::size_t i = 0; i < got.size(); ++i) EXPECT_NEAR(got[i], want[i], 1e-12) << text;
    }
}

TEST(CachingEmbedder, MemoizesByExactText) {
    auto inner = std::make_shared<HashingEmbedder>();
    CachingEmbedder cache(inner);
    auto v = cache.embed("abc");
    cache.embed("abc");
    cache.embed("ABC");
    EXPECT_EQ(cache.cached(), 2u);
    EXPECT_EQ(v, inner->embed("abc"));
}

TEST(RemoteEmbedder, ParsesResponsesAndEnforcesDimension) {
    std::string seen_auth;
    LocalServer server("/v1/embeddings", [&](const httplib::Request& req, httplib::Response& res) {
        seen_auth = req.get_header_value("Authorization");
        auto body = nlohmann::json::parse(req.body);
        nlohmann::json data = nlohmann::json::array();
        for (const auto& text : body["input"]) {
            const double n = static_cast<double>(text.get<std::string>().size());
            data.push_back({{"embedding", {n, 1.0, 0.0}}});
        }
        res.set_content(nlohmann::json{{"data", data}}.dump(), "application/json");
    });

    RemoteEmbedder ok({server.url("/v1/embeddings"), "secret", "m", 5.0}, 3);
    auto vs = ok.embed_batch({"ab", "abcd"});
    ASSERT_EQ(vs.size(), 2u);
    EXPECT_EQ(vs[1], (Vector{4.0, 1.0, 0.0}));
    EXPECT_EQ(seen_auth, "Bearer secret");

    RemoteEmbedder wrong_dim({server.url("/v1/embeddings"), "", "", 5.0}, 8);
    EXPECT_THROW(wrong_dim.embed("x"), ContractViolation);
}

TEST(RemoteEmbedder, ServerErrorsAreRetriableProviderErrors) {
    LocalServer server("/v1/embeddings", [](const httplib::Request&, httplib::Response& res) {
        res.status = 503;
        res.set_content("busy", "text/plain");
    });
    RemoteEmbedder e({server.url("/v1/embeddings"), "", "", 5.0}, 3);
    try {
        e.embed("x");
        FAIL() << "expected ProviderError";
    } catch (const ProviderError& err) {
        EXPECT_TRUE(err.retriable());
    }
}
