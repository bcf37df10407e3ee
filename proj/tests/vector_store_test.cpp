#include "trifuse/vector_store.hpp"

#include <gtest/gtest.h>

#include <random>

#include "oracles.hpp"
#include "test_support.hpp"

using namespace trifuse;

namespace {

Embedding vec(std::vector<double> v) { return Embedding{std::move(v)}; }

std::vector<double> random_vector(std::mt19937& rng, std::size_t dim) {
    std::normal_distribution<double> normal(0.0, 1.0);
    std::vector<double> v(dim);
    for (double& x : v) x = normal(rng);
    return v;
}

}  // namespace

TEST(Cosine, IdenticalVectorsGiveOne) {
    const Embedding v = vec({0.3, -0.4, 0.5});
    EXPECT_NEAR(cosine(v, v), 1.0, 1e-12);
}

TEST(Cosine, OrthogonalVectorsGiveZero) {
    EXPECT_DOUBLE_EQ(cosine(vec({1, 0}), vec({0, 1})), 0.0);
}

TEST(Cosine, FortyFiveDegrees) {
    // Hand arithmetic: cos = 1/sqrt(2).
    EXPECT_NEAR(cosine(vec({1, 0}), vec({1, 1})), 0.7071067811865475, 1e-9);
}

TEST(Cosine, ErrorsOnDimMismatchAndZeroVector) {
    try {
        cosine(vec({1, 0}), vec({1, 0, 0}));
        FAIL() << "expected Error";
    } catch (const Error& e) {
        EXPECT_EQ(e.code(), ErrorCode::DimMismatch);
    }
    try {
        cosine(vec({0, 0}), vec({1, 0}));
        FAIL() << "expected Error";
    } catch (const Error& e) {
        EXPECT_EQ(e.code(), ErrorCode::ZeroVector);
    }
}

TEST(Cosine, BoundedAndSymmetric) {
    std::mt19937 rng(5);
    for (int iter = 0; iter < 500; ++iter) {
        const std::size_t dim = 2 + rng() % 16;
        const Embedding a = vec(random_vector(rng, dim));
        const Embedding b = vec(random_vector(rng, dim));
        const double ab = cosine(a, b);
        EXPECT_LE(std::abs(ab), 1.0 + 1e-9);
        EXPECT_NEAR(ab, cosine(b, a), 1e-12);
    }
}

TEST(HashedBowEmbedder, Deterministic) {
    HashedBowEmbedder embedder(32, AnalyzerConfig{});
    EXPECT_EQ(embedder.embed("lung cancer in india"), embedder.embed("lung cancer in india"));
}

TEST(HashedBowEmbedder, EmptyTextIsUnitBasisVector) {
    HashedBowEmbedder embedder(8, AnalyzerConfig{});
    const Embedding e = embedder.embed("");
    ASSERT_EQ(e.dim(), 8u);
    EXPECT_DOUBLE_EQ(e.v[0], 1.0);
    for (std::size_t i = 1; i < e.dim(); ++i) EXPECT_DOUBLE_EQ(e.v[i], 0.0);
}

TEST(HashedBowEmbedder, OutputIsUnitNorm) {
    HashedBowEmbedder embedder(64, AnalyzerConfig{});
    EXPECT_NEAR(l2_norm(embedder.embed("cancer research in india since 2022")), 1.0, 1e-6);
}

TEST(HashedBowEmbedder, SynonymCanonicalizationPullsVariantsTogether) {
    const AnalyzerConfig analyzer = testing_support::demo_analyzer();
    HashedBowEmbedder embedder(64, analyzer);
    const Embedding query = embedder.embed("lung cancer");
    const double with_synonym = cosine(query, embedder.embed("lung carcinoma"));
    const double with_other = cosine(query, embedder.embed("heart disease"));
    EXPECT_GT(with_synonym, with_other);
    EXPECT_GT(with_synonym, 0.5);
}

TEST(HashedBowEmbedder, RejectsTinyDimension) {
    EXPECT_THROW(HashedBowEmbedder(1, AnalyzerConfig{}), Error);
}

TEST(VectorStore, InsertValidatesDimAndDuplicates) {
    VectorStore store(3);
    store.insert("a", vec({1, 0, 0}));
    try {
        store.insert("a", vec({0, 1, 0}));
        FAIL() << "expected Error";
    } catch (const Error& e) {
        EXPECT_EQ(e.code(), ErrorCode::DuplicateDocId);
    }
    try {
        store.insert("b", vec({1, 0}));
        FAIL() << "expected Error";
    } catch (const Error& e) {
        EXPECT_EQ(e.code(), ErrorCode::DimMismatch);
    }
}

TEST(SearchVector, ExactQueryVectorComesFirstWithScoreOne) {
    VectorStore store(3);
    store.insert("target", vec({0.6, 0.8, 0.0}));
    store.insert("other", vec({0.0, 0.0, 1.0}));
    const RankedList results = store.search_vector(vec({0.6, 0.8, 0.0}), 2);
    ASSERT_EQ(results.docs.size(), 2u);
    EXPECT_EQ(results.docs[0].doc_id, "target");
    EXPECT_NEAR(results.docs[0].score, 1.0, 1e-12);
    EXPECT_EQ(results.source_label, "semantic");
}

TEST(SearchVector, KLargerThanStoreReturnsEverythingSorted) {
    VectorStore store(2);
    store.insert("a", vec({1, 0}));
    store.insert("b", vec({0, 1}));
    store.insert("c", vec({1, 1}));
    const RankedList results = store.search_vector(vec({1, 0}), 100);
    EXPECT_EQ(results.docs.size(), 3u);
    EXPECT_EQ(results.docs[0].doc_id, "a");
    EXPECT_NO_THROW(check_ranked_list(results));
}

TEST(SearchVector, DimMismatchRejected) {
    VectorStore store(4);
    EXPECT_THROW(store.search_vector(vec({1, 0}), 3), Error);
}

TEST(SearchVector, MatchesBruteForceOracle) {
    std::mt19937 rng(77);
    for (int iter = 0; iter < 50; ++iter) {
        const std::size_t dim = 2 + rng() % 15;
        const std::size_t count = 1 + rng() % 50;
        VectorStore store(dim);
        std::vector<std::pair<std::string, std::vector<double>>> raw;
        for (std::size_t i = 0; i < count; ++i) {
            const std::string id = "d" + std::to_string(i);
            auto v = random_vector(rng, dim);
            raw.emplace_back(id, v);
            store.insert(id, vec(v));
        }
        const auto query = random_vector(rng, dim);
        const std::size_t k = 1 + rng() % 8;
        const RankedList got = store.search_vector(vec(query), k);
        const auto expected = oracle::brute_force_top_cosine(raw, query, k);
        ASSERT_EQ(got.docs.size(), expected.size());
        for (std::size_t i = 0; i < expected.size(); ++i) {
            EXPECT_EQ(got.docs[i].doc_id, expected[i].first);
            EXPECT_NEAR(got.docs[i].score, expected[i].second, 1e-12);
        }
    }
}

TEST(SearchVector, OrderInvariantUnderQueryScaling) {
    std::mt19937 rng(79);
    VectorStore store(8);
    for (std::size_t i = 0; i < 40; ++i) store.insert("d" + std::to_string(i), vec(random_vector(rng, 8)));
    for (int iter = 0; iter < 20; ++iter) {
        auto q = random_vector(rng, 8);
        auto scaled = q;
        for (double& x : scaled) x *= 123.456;
        const RankedList a = store.search_vector(vec(q), 40);
        const RankedList b = store.search_vector(vec(scaled), 40);
        ASSERT_EQ(a.docs.size(), b.docs.size());
        for (std::size_t i = 0; i < a.docs.size(); ++i) EXPECT_EQ(a.docs[i].doc_id, b.docs[i].doc_id);
    }
}

TEST(VectorStore, PersistenceRoundTripIsBitExact) {
    testing_support::TempDir tmp("vectors");
    std::mt19937 rng(83);
    VectorStore store(16);
    for (std::size_t i = 0; i < 30; ++i) store.insert("d" + std::to_string(i), vec(random_vector(rng, 16)));
    const std::string path = tmp.file("vectors.json");
    store.save(path);
    const VectorStore reloaded = VectorStore::load(path);
    ASSERT_EQ(reloaded.size(), store.size());
    EXPECT_EQ(reloaded.entries(), store.entries());

    const auto q = random_vector(rng, 16);
    const RankedList a = store.search_vector(vec(q), 10);
    const RankedList b = reloaded.search_vector(vec(q), 10);
    ASSERT_EQ(a.docs.size(), b.docs.size());
    for (std::size_t i = 0; i < a.docs.size(); ++i) {
        EXPECT_EQ(a.docs[i].doc_id, b.docs[i].doc_id);
        EXPECT_EQ(a.docs[i].score, b.docs[i].score);
    }
}
