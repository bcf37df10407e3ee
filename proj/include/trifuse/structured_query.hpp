#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <string>
#include <vector>

#include <json.hpp>

#include "trifuse/core.hpp"
#include "trifuse/error.hpp"
#include "trifuse/keyword_index.hpp"

namespace trifuse {

enum class PredicateOp { Eq, Gt, Gte, Lt, Lte };

inline const char* predicate_op_token(PredicateOp op) {
    switch (op) {
        case PredicateOp::Eq: return "$eq";  // never serialized; EQ emits bare values
        case PredicateOp::Gt: return "$gt";
        case PredicateOp::Gte: return "$gte";
        case PredicateOp::Lt: return "$lt";
        case PredicateOp::Lte: return "$lte";
    }
    return "?";
}

/// One field constraint. Range operators require a numeric value; EQ allows
/// string or number.
struct Predicate {
    std::string field;
    PredicateOp op = PredicateOp::Eq;
    FieldValue value;

    bool operator==(const Predicate& other) const {
        return field == other.field && op == other.op && value == other.value;
    }
};

/// Conjunction of predicates. An empty predicate list matches everything.
/// At most one predicate per (field, op) pair.
struct StructuredQuery {
    enum class Source { Llm, Rules, Manual };

    std::vector<Predicate> predicates;
    Source source = Source::Manual;

    bool operator==(const StructuredQuery& other) const { return predicates == other.predicates; }
};

namespace detail {

inline void canonicalize_predicates(std::vector<Predicate>& preds) {
    std::stable_sort(preds.begin(), preds.end(), [](const Predicate& a, const Predicate& b) {
        if (a.field != b.field) return a.field < b.field;
        return static_cast<int>(a.op) < static_cast<int>(b.op);
    });
    for (std::size_t i = 1; i < preds.size(); ++i)
        if (preds[i].field == preds[i - 1].field && preds[i].op == preds[i - 1].op)
            throw Error(ErrorCode::ValidationError,
                        "duplicate predicate for field '" + preds[i].field + "'");
}

/// Emits integral doubles as JSON integers so serialized queries keep the
/// shape they were parsed from.
inline nlohmann::json number_to_json(double v) {
    constexpr double kMaxExact = 9007199254740992.0;  // 2^53
    if (std::floor(v) == v && std::abs(v) <= kMaxExact) return static_cast<std::int64_t>(v);
    return v;
}

}  // namespace detail

/// Parses the JSON predicate dialect: bare values are equality tests,
/// operator objects like {"$gt": 18} are numeric comparisons.
inline StructuredQuery parse_structured_query(const std::string& json_text) {
    nlohmann::json j;
    try {
        j = nlohmann::json::parse(json_text);
    } catch (const std::exception& e) {
        throw Error(ErrorCode::MalformedJson, e.what());
    }
    if (!j.is_object()) throw Error(ErrorCode::MalformedJson, "structured query must be a JSON object");

    StructuredQuery q;
    for (const auto& [field, value] : j.items()) {
        if (value.is_string()) {
            q.predicates.push_back({field, PredicateOp::Eq, FieldValue(value.get<std::string>())});
        } else if (value.is_number()) {
            q.predicates.push_back({field, PredicateOp::Eq, FieldValue(value.get<double>())});
        } else if (value.is_object()) {
            if (value.empty())
                throw Error(ErrorCode::MalformedJson, "field '" + field + "' has an empty operator object");
            for (const auto& [op_key, op_value] : value.items()) {
                PredicateOp op;
                if (op_key == "$gt")
                    op = PredicateOp::Gt;
                else if (op_key == "$gte")
                    op = PredicateOp::Gte;
                else if (op_key == "$lt")
                    op = PredicateOp::Lt;
                else if (op_key == "$lte")
                    op = PredicateOp::Lte;
                else
                    throw Error(ErrorCode::UnknownOperator,
                                "unknown operator '" + op_key + "' for field '" + field + "'");
                if (!op_value.is_number())
                    throw Error(ErrorCode::NonNumericComparison,
                                "operator " + op_key + " on field '" + field + "' requires a number");
                q.predicates.push_back({field, op, FieldValue(op_value.get<double>())});
            }
        } else {
            throw Error(ErrorCode::MalformedJson, "field '" + field + "' has an unsupported value type");
        }
    }
    detail::canonicalize_predicates(q.predicates);
    return q;
}

inline nlohmann::json structured_query_to_json(const StructuredQuery& q) {
    nlohmann::json out = nlohmann::json::object();
    for (const Predicate& p : q.predicates) {
        if (p.op == PredicateOp::Eq) {
            if (out.contains(p.field))
                throw std::logic_error("field '" + p.field + "' mixes equality and range predicates");
            out[p.field] = p.value.is_string() ? nlohmann::json(p.value.as_string())
                                               : detail::number_to_json(p.value.as_number());
        } else {
            if (out.contains(p.field) && !out[p.field].is_object())
                throw std::logic_error("field '" + p.field + "' mixes equality and range predicates");
            out[p.field][predicate_op_token(p.op)] = detail::number_to_json(p.value.as_number());
        }
    }
    return out;
}

/// Canonical serialization: keys sorted, EQ as bare values, integral numbers
/// as integers. parse -> serialize -> parse is a fixed point.
inline std::string serialize_structured_query(const StructuredQuery& q) {
    return structured_query_to_json(q).dump();
}

/// True iff every predicate holds. A predicate on a field absent from the
/// document's metadata is false; EQ on strings compares case-insensitively.
inline bool matches(const StructuredQuery& q, const Document& doc) {
    for (const Predicate& p : q.predicates) {
        const auto it = doc.metadata.find(p.field);
        if (it == doc.metadata.end()) return false;
        const FieldValue& actual = it->second;
        if (p.op == PredicateOp::Eq) {
            if (!field_values_equal(actual, p.value)) return false;
            continue;
        }
        if (!actual.is_number() || !p.value.is_number()) return false;
        const double a = actual.as_number();
        const double b = p.value.as_number();
        bool ok = false;
        switch (p.op) {
            case PredicateOp::Gt: ok = a > b; break;
            case PredicateOp::Gte: ok = a >= b; break;
            case PredicateOp::Lt: ok = a < b; break;
            case PredicateOp::Lte: ok = a <= b; break;
            case PredicateOp::Eq: ok = true; break;
        }
        if (!ok) return false;
    }
    return true;
}

/// Filters the corpus by the query, then ranks survivors by BM25 score of
/// the concatenated string-valued predicate values against each document's
/// text. Documents that score zero sort after scored ones by doc_id. The
/// index must be built over the same corpus.
inline RankedList search_structured(const std::vector<Document>& corpus, const InvertedIndex& index,
                                    const StructuredQuery& q, std::size_t k) {
    std::string seed;
    for (const Predicate& p : q.predicates) {
        if (!p.value.is_string()) continue;
        if (!seed.empty()) seed.push_back(' ');
        seed += p.value.as_string();
    }
    const TokenStream seed_tokens = tokenize(seed, index.analyzer());
    std::vector<ScoredDoc> scored;
    for (const Document& doc : corpus) {
        if (!matches(q, doc)) continue;
        scored.push_back({doc.id, index.bm25_score(seed_tokens, doc.id)});
    }
    return make_ranked_list(std::move(scored), k, "structured");
}

}  // namespace trifuse
