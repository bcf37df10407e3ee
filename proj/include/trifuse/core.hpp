#pragma once

#include <cmath>
#include <cstdint>
#include <map>
#include <set>
#include <stdexcept>
#include <string>
#include <variant>
#include <vector>

#include "trifuse/analyzer.hpp"
#include "trifuse/error.hpp"

namespace trifuse {

/// Metadata value: a string, or a number with 64-bit float semantics
/// (integers exact up to 2^53). Strings compare case-insensitively after
/// trimming; numbers compare numerically.
class FieldValue {
public:
    FieldValue() : value_(std::string()) {}
    FieldValue(std::string s) : value_(std::move(s)) {}
    FieldValue(const char* s) : value_(std::string(s)) {}
    FieldValue(double n) : value_(n) {}
    FieldValue(int n) : value_(static_cast<double>(n)) {}

    bool is_string() const { return std::holds_alternative<std::string>(value_); }
    bool is_number() const { return std::holds_alternative<double>(value_); }
    const std::string& as_string() const { return std::get<std::string>(value_); }
    double as_number() const { return std::get<double>(value_); }

    /// Exact representation equality (bytes for strings, == for numbers).
    bool operator==(const FieldValue& other) const { return value_ == other.value_; }
    bool operator!=(const FieldValue& other) const { return !(*this == other); }

private:
    std::variant<std::string, double> value_;
};

/// Equality as used by EQ predicates: numeric for numbers, case-insensitive
/// after trimming for strings, false across types.
inline bool field_values_equal(const FieldValue& a, const FieldValue& b) {
    if (a.is_number() && b.is_number()) return a.as_number() == b.as_number();
    if (a.is_string() && b.is_string()) return fold_key(a.as_string()) == fold_key(b.as_string());
    return false;
}

/// The unit of retrieval: an id, a free-text body, and typed metadata.
struct Document {
    std::string id;
    std::string text;
    std::map<std::string, FieldValue> metadata;

    bool operator==(const Document& other) const {
        return id == other.id && text == other.text && metadata == other.metadata;
    }
};

struct ScoredDoc {
    std::string doc_id;
    double score = 0.0;

    bool operator==(const ScoredDoc& other) const {
        return doc_id == other.doc_id && score == other.score;
    }
};

/// Ordered retrieval output. Scores are non-increasing, ties break by
/// ascending doc_id, ids are unique; rank of the first element is 1.
struct RankedList {
    std::vector<ScoredDoc> docs;
    std::string source_label;
};

/// Shared invariant checker applied to every returned RankedList. A failure
/// here is an internal bug, not a caller error.
inline void check_ranked_list(const RankedList& list) {
    std::set<std::string> seen;
    for (std::size_t i = 0; i < list.docs.size(); ++i) {
        const ScoredDoc& d = list.docs[i];
        if (!std::isfinite(d.score) || d.score < 0.0)
            throw std::logic_error("ranked list '" + list.source_label + "': score for " + d.doc_id +
                                   " is negative or not finite");
        if (!seen.insert(d.doc_id).second)
            throw std::logic_error("ranked list '" + list.source_label + "': duplicate doc id " + d.doc_id);
        if (i > 0) {
            const ScoredDoc& prev = list.docs[i - 1];
            if (d.score > prev.score)
                throw std::logic_error("ranked list '" + list.source_label + "': scores increase at rank " +
                                       std::to_string(i + 1));
            if (d.score == prev.score && d.doc_id < prev.doc_id)
                throw std::logic_error("ranked list '" + list.source_label + "': tie order violated at rank " +
                                       std::to_string(i + 1));
        }
    }
}

/// Sorts by descending score with ties broken by ascending doc_id, truncates
/// to k, and checks the invariants.
inline RankedList make_ranked_list(std::vector<ScoredDoc> docs, std::size_t k, std::string source_label) {
    std::sort(docs.begin(), docs.end(), [](const ScoredDoc& a, const ScoredDoc& b) {
        if (a.score != b.score) return a.score > b.score;
        return a.doc_id < b.doc_id;
    });
    if (docs.size() > k) docs.resize(k);
    RankedList list{std::move(docs), std::move(source_label)};
    check_ranked_list(list);
    return list;
}

/// Corpus-level statistics consumed by the BM25 scorer.
struct CorpusStats {
    std::size_t doc_count = 0;
    double avg_doc_len = 0.0;
    std::map<std::string, std::size_t> doc_len;

    bool operator==(const CorpusStats& other) const {
        return doc_count == other.doc_count && avg_doc_len == other.avg_doc_len && doc_len == other.doc_len;
    }
};

/// Checks id and metadata invariants and returns the normalized document
/// (metadata strings trimmed). Idempotent: validating a valid document
/// returns an equal one.
inline Document validate_document(const Document& raw) {
    if (trim_copy(raw.id).empty()) throw Error(ErrorCode::EmptyId, "document id is missing or blank");
    Document doc;
    doc.id = raw.id;
    doc.text = raw.text;
    for (const auto& [field, value] : raw.metadata) {
        if (value.is_number() && !std::isfinite(value.as_number()))
            throw Error(ErrorCode::BadFieldValue,
                        "metadata field '" + field + "' of document " + raw.id + " is not a finite number");
        if (value.is_string())
            doc.metadata.emplace(field, FieldValue(trim_copy(value.as_string())));
        else
            doc.metadata.emplace(field, value);
    }
    return doc;
}

/// Token counts per document plus their mean. Empty corpus yields zeros.
inline CorpusStats compute_corpus_stats(const std::vector<Document>& corpus, const AnalyzerConfig& analyzer) {
    CorpusStats stats;
    stats.doc_count = corpus.size();
    std::size_t total = 0;
    for (const Document& doc : corpus) {
        const std::size_t len = tokenize(doc.text, analyzer).size();
        stats.doc_len[doc.id] = len;
        total += len;
    }
    stats.avg_doc_len = corpus.empty() ? 0.0 : static_cast<double>(total) / static_cast<double>(corpus.size());
    return stats;
}

}  // namespace trifuse
