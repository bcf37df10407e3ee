#include "trifuse/structured_query.hpp"

#include <gtest/gtest.h>

#include <random>

#include "oracles.hpp"
#include "test_support.hpp"

using namespace trifuse;
using testing_support::make_doc;

namespace {

// The example query the JSON dialect is modelled on.
const char* kDermatitisQuery =
    R"({ "indication": "atopic dermatitis",
         "age": { "$gt": 18 },
         "country": "India",
         "year": { "$gte": 2022 } })";

std::vector<Document> synthetic_corpus(std::size_t n, std::mt19937& rng) {
    const std::vector<std::string> indications = {"atopic dermatitis", "lung cancer", "asthma", "diabetes"};
    const std::vector<std::string> countries = {"India", "Japan", "Brazil", "Germany"};
    std::vector<Document> corpus;
    for (std::size_t i = 0; i < n; ++i) {
        std::map<std::string, FieldValue> metadata;
        if (rng() % 10 != 0) metadata["indication"] = FieldValue(indications[rng() % indications.size()]);
        if (rng() % 10 != 0) metadata["country"] = FieldValue(countries[rng() % countries.size()]);
        if (rng() % 8 != 0) metadata["age"] = FieldValue(static_cast<double>(rng() % 90));
        if (rng() % 8 != 0) metadata["year"] = FieldValue(static_cast<double>(2015 + rng() % 11));
        corpus.push_back(make_doc("d" + std::to_string(i),
                                  "study " + std::to_string(rng() % 50), std::move(metadata)));
    }
    return corpus;
}

StructuredQuery random_query(std::mt19937& rng) {
    const std::vector<std::string> indications = {"atopic dermatitis", "lung cancer", "asthma", "diabetes"};
    const std::vector<std::string> countries = {"India", "Japan", "Brazil", "Germany"};
    StructuredQuery q;
    if (rng() % 2) q.predicates.push_back({"indication", PredicateOp::Eq,
                                           FieldValue(indications[rng() % indications.size()])});
    if (rng() % 2) q.predicates.push_back({"country", PredicateOp::Eq,
                                           FieldValue(countries[rng() % countries.size()])});
    if (rng() % 2) {
        const PredicateOp op = std::vector<PredicateOp>{PredicateOp::Gt, PredicateOp::Gte, PredicateOp::Lt,
                                                        PredicateOp::Lte}[rng() % 4];
        q.predicates.push_back({"age", op, FieldValue(static_cast<double>(rng() % 90))});
    }
    if (rng() % 2) {
        const PredicateOp op = rng() % 2 ? PredicateOp::Gte : PredicateOp::Lt;
        q.predicates.push_back({"year", op, FieldValue(static_cast<double>(2015 + rng() % 11))});
    }
    detail::canonicalize_predicates(q.predicates);
    return q;
}

}  // namespace

TEST(ParseStructuredQuery, ParsesTheCanonicalExample) {
    const StructuredQuery q = parse_structured_query(kDermatitisQuery);
    ASSERT_EQ(q.predicates.size(), 4u);
    // Canonical order: field ascending.
    EXPECT_EQ(q.predicates[0].field, "age");
    EXPECT_EQ(q.predicates[0].op, PredicateOp::Gt);
    EXPECT_DOUBLE_EQ(q.predicates[0].value.as_number(), 18.0);
    EXPECT_EQ(q.predicates[1].field, "country");
    EXPECT_EQ(q.predicates[1].op, PredicateOp::Eq);
    EXPECT_EQ(q.predicates[1].value.as_string(), "India");
    EXPECT_EQ(q.predicates[2].field, "indication");
    EXPECT_EQ(q.predicates[2].value.as_string(), "atopic dermatitis");
    EXPECT_EQ(q.predicates[3].field, "year");
    EXPECT_EQ(q.predicates[3].op, PredicateOp::Gte);
    EXPECT_DOUBLE_EQ(q.predicates[3].value.as_number(), 2022.0);
}

TEST(ParseStructuredQuery, EmptyObjectMatchesAll) {
    const StructuredQuery q = parse_structured_query("{}");
    EXPECT_TRUE(q.predicates.empty());
    EXPECT_TRUE(matches(q, make_doc("d", "anything")));
}

TEST(ParseStructuredQuery, RejectsUnknownOperator) {
    try {
        parse_structured_query(R"({"age": {"$near": 18}})");
        FAIL() << "expected Error";
    } catch (const Error& e) {
        EXPECT_EQ(e.code(), ErrorCode::UnknownOperator);
    }
}

TEST(ParseStructuredQuery, RejectsNonNumericComparison) {
    try {
        parse_structured_query(R"({"age": {"$gt": "x"}})");
        FAIL() << "expected Error";
    } catch (const Error& e) {
        EXPECT_EQ(e.code(), ErrorCode::NonNumericComparison);
    }
}

TEST(ParseStructuredQuery, RejectsMalformedInput) {
    EXPECT_THROW(parse_structured_query("{"), Error);
    EXPECT_THROW(parse_structured_query("[1,2]"), Error);
    EXPECT_THROW(parse_structured_query(R"({"flag": true})"), Error);
    EXPECT_THROW(parse_structured_query(R"({"age": {}})"), Error);
}

TEST(ParseStructuredQuery, AcceptsMultiOperatorRange) {
    const StructuredQuery q = parse_structured_query(R"({"age": {"$gte": 18, "$lt": 65}})");
    ASSERT_EQ(q.predicates.size(), 2u);
    EXPECT_EQ(q.predicates[0].op, PredicateOp::Gte);
    EXPECT_EQ(q.predicates[1].op, PredicateOp::Lt);
}

TEST(Serialize, RoundTripIsAFixedPoint) {
    const StructuredQuery q = parse_structured_query(kDermatitisQuery);
    const std::string once = serialize_structured_query(q);
    const StructuredQuery q2 = parse_structured_query(once);
    EXPECT_EQ(q, q2);
    EXPECT_EQ(serialize_structured_query(q2), once);
}

TEST(Serialize, CanonicalFormKeepsIntegersAndBareEquality) {
    const StructuredQuery q = parse_structured_query(kDermatitisQuery);
    EXPECT_EQ(serialize_structured_query(q),
              R"({"age":{"$gt":18},"country":"India","indication":"atopic dermatitis","year":{"$gte":2022}})");
}

TEST(Matches, StrictGreaterThanOnAge) {
    const StructuredQuery q = parse_structured_query(kDermatitisQuery);
    const auto doc_with_age = [](double age) {
        return make_doc("d", "", {{"age", FieldValue(age)},
                                  {"country", FieldValue("India")},
                                  {"year", FieldValue(2023.0)},
                                  {"indication", FieldValue("atopic dermatitis")}});
    };
    EXPECT_TRUE(matches(q, doc_with_age(19)));
    EXPECT_FALSE(matches(q, doc_with_age(18)));  // $gt is strict
    EXPECT_FALSE(matches(q, doc_with_age(17)));
}

TEST(Matches, MissingFieldIsFalse) {
    const StructuredQuery q = parse_structured_query(kDermatitisQuery);
    const Document doc = make_doc("d", "", {{"age", FieldValue(30.0)},
                                            {"country", FieldValue("India")},
                                            {"indication", FieldValue("atopic dermatitis")}});
    EXPECT_FALSE(matches(q, doc));  // no "year" field
    EXPECT_FALSE(oracle::oracle_matches(q, doc));
}

TEST(Matches, StringComparisonIsCaseInsensitive) {
    StructuredQuery q;
    q.predicates.push_back({"country", PredicateOp::Eq, FieldValue("INDIA")});
    EXPECT_TRUE(matches(q, make_doc("d", "", {{"country", FieldValue("india")}})));
    EXPECT_TRUE(matches(q, make_doc("d", "", {{"country", FieldValue(" India ")}})));
}

TEST(Matches, TypeMismatchIsFalse) {
    StructuredQuery q;
    q.predicates.push_back({"year", PredicateOp::Gte, FieldValue(2020.0)});
    EXPECT_FALSE(matches(q, make_doc("d", "", {{"year", FieldValue("2022")}})));
}

TEST(Matches, MonotoneUnderPredicateRemoval) {
    std::mt19937 rng(123);
    const auto corpus = synthetic_corpus(100, rng);
    for (int iter = 0; iter < 100; ++iter) {
        const StructuredQuery q = random_query(rng);
        if (q.predicates.empty()) continue;
        StructuredQuery subset = q;
        subset.predicates.erase(subset.predicates.begin() + static_cast<long>(rng() % subset.predicates.size()));
        for (const Document& doc : corpus)
            if (matches(q, doc)) EXPECT_TRUE(matches(subset, doc));
    }
}

TEST(Matches, AgreesWithBruteForceEvaluatorOnSyntheticCorpus) {
    std::mt19937 rng(321);
    const auto corpus = synthetic_corpus(20, rng);
    const StructuredQuery q = parse_structured_query(kDermatitisQuery);
    for (const Document& doc : corpus) EXPECT_EQ(matches(q, doc), oracle::oracle_matches(q, doc));
}

TEST(SearchStructured, FilterEqualsBruteForceAndRanksBySeedScore) {
    std::mt19937 rng(11);
    const auto corpus = synthetic_corpus(20, rng);
    const InvertedIndex index = InvertedIndex::build(corpus, AnalyzerConfig{});
    const StructuredQuery q = parse_structured_query(kDermatitisQuery);

    const RankedList results = search_structured(corpus, index, q, corpus.size());
    std::set<std::string> got;
    for (const ScoredDoc& d : results.docs) got.insert(d.doc_id);
    EXPECT_EQ(got, oracle::brute_force_filter(corpus, q));

    // Scores must equal the BM25 score of the concatenated string values.
    const TokenStream seed = tokenize("atopic dermatitis India", index.analyzer());
    for (const ScoredDoc& d : results.docs) EXPECT_DOUBLE_EQ(d.score, index.bm25_score(seed, d.doc_id));
}

TEST(SearchStructured, SetEqualsFilterForRandomQueries) {
    std::mt19937 rng(13);
    const auto corpus = synthetic_corpus(300, rng);
    const InvertedIndex index = InvertedIndex::build(corpus, AnalyzerConfig{});
    for (int iter = 0; iter < 50; ++iter) {
        const StructuredQuery q = random_query(rng);
        const RankedList results = search_structured(corpus, index, q, corpus.size());
        std::set<std::string> got;
        for (const ScoredDoc& d : results.docs) got.insert(d.doc_id);
        EXPECT_EQ(got, oracle::brute_force_filter(corpus, q));
    }
}

TEST(SearchStructured, NoMatchYieldsEmptyList) {
    std::mt19937 rng(17);
    const auto corpus = synthetic_corpus(20, rng);
    const InvertedIndex index = InvertedIndex::build(corpus, AnalyzerConfig{});
    StructuredQuery q;
    q.predicates.push_back({"country", PredicateOp::Eq, FieldValue("Atlantis")});
    EXPECT_TRUE(search_structured(corpus, index, q, 10).docs.empty());
}

TEST(SearchStructured, KOneReturnsUniqueTopScorer) {
    const std::vector<Document> corpus = {
        make_doc("hit", "atopic dermatitis india cohort", {{"country", FieldValue("India")}}),
        make_doc("weak", "unrelated text", {{"country", FieldValue("India")}}),
    };
    const InvertedIndex index = InvertedIndex::build(corpus, AnalyzerConfig{});
    StructuredQuery q = parse_structured_query(R"({"country": "India"})");
    const RankedList results = search_structured(corpus, index, q, 1);
    ASSERT_EQ(results.docs.size(), 1u);
    EXPECT_EQ(results.docs[0].doc_id, "hit");
}

TEST(SearchStructured, EmptyQueryTiesAllAtZeroOrderedById) {
    const std::vector<Document> corpus = {make_doc("b", "x"), make_doc("a", "y"), make_doc("c", "z")};
    const InvertedIndex index = InvertedIndex::build(corpus, AnalyzerConfig{});
    const RankedList results = search_structured(corpus, index, StructuredQuery{}, 10);
    ASSERT_EQ(results.docs.size(), 3u);
    EXPECT_EQ(results.docs[0].doc_id, "a");
    EXPECT_EQ(results.docs[1].doc_id, "b");
    EXPECT_EQ(results.docs[2].doc_id, "c");
    for (const ScoredDoc& d : results.docs) EXPECT_EQ(d.score, 0.0);
}

TEST(SearchStructured, ZeroScoreSurvivorsSortAfterScoredOnes) {
    const std::vector<Document> corpus = {
        make_doc("a_zero", "nothing relevant", {{"country", FieldValue("India")}}),
        make_doc("z_hit", "india india india", {{"country", FieldValue("India")}}),
    };
    const InvertedIndex index = InvertedIndex::build(corpus, AnalyzerConfig{});
    const StructuredQuery q = parse_structured_query(R"({"country": "India"})");
    const RankedList results = search_structured(corpus, index, q, 10);
    ASSERT_EQ(results.docs.size(), 2u);
    EXPECT_EQ(results.docs[0].doc_id, "z_hit");
    EXPECT_EQ(results.docs[1].doc_id, "a_zero");
}
