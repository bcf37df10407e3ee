#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <map>
#include <string>
#include <vector>

#include <json.hpp>

#include "trifuse/analyzer.hpp"
#include "trifuse/core.hpp"
#include "trifuse/error.hpp"
#include "trifuse/keyword_index.hpp"

namespace trifuse {

/// Fixed-dimension real vector. Vectors held by a VectorStore are
/// L2-normalized.
struct Embedding {
    std::vector<double> v;

    std::size_t dim() const { return v.size(); }

    bool operator==(const Embedding& other) const { return v == other.v; }
};

inline double l2_norm(const Embedding& e) {
    double sum = 0.0;
    for (double x : e.v) sum += x * x;
    return std::sqrt(sum);
}

inline Embedding l2_normalized(Embedding e) {
    const double norm = l2_norm(e);
    if (norm < 1e-12) throw Error(ErrorCode::ZeroVector, "cannot normalize a (near-)zero vector");
    for (double& x : e.v) x /= norm;
    return e;
}

/// Cosine of the angle between two vectors: dot(a,b) / (|a||b|).
inline double cosine(const Embedding& a, const Embedding& b) {
    if (a.dim() != b.dim())
        throw Error(ErrorCode::DimMismatch, "cosine over dims " + std::to_string(a.dim()) + " and " +
                                                std::to_string(b.dim()));
    const double na = l2_norm(a);
    const double nb = l2_norm(b);
    if (na < 1e-12 || nb < 1e-12) throw Error(ErrorCode::ZeroVector, "cosine of a (near-)zero vector");
    double dot = 0.0;
    for (std::size_t i = 0; i < a.v.size(); ++i) dot += a.v[i] * b.v[i];
    return dot / (na * nb);
}

/// Produces fixed-dimension embeddings for text. Implementations are either
/// deterministic for a fixed configuration (local) or explicitly not
/// (remote); output dimension is constant per instance.
class EmbeddingProvider {
public:
    virtual ~EmbeddingProvider() = default;
    virtual Embedding embed(const std::string& text) = 0;
    /// 0 means the dimension is unknown until the first call.
    virtual std::size_t dim() const = 0;
    virtual bool deterministic() const = 0;
};

/// Deterministic offline embedder: hashed bag of words. Each token of the
/// text, together with the tokens of its synonym-canonicalized form, is
/// hashed to a bucket with a signed count; the result is L2-normalized.
/// Empty (or fully cancelled) input maps to the unit basis vector e0.
class HashedBowEmbedder final : public EmbeddingProvider {
public:
    HashedBowEmbedder(std::size_t dim, AnalyzerConfig config, std::uint64_t seed = 0)
        : dim_(dim), config_(std::move(config)), seed_(seed) {
        if (dim_ < 2) throw Error(ErrorCode::ValidationError, "embedding dimension must be at least 2");
    }

    Embedding embed(const std::string& text) override {
        const TokenStream tokens = tokenize(text, config_);
        const TokenStream canonical = canonicalize_tokens(tokens, config_);
        Embedding e;
        e.v.assign(dim_, 0.0);
        accumulate(e, tokens);
        accumulate(e, canonical);
        if (l2_norm(e) < 1e-12) {
            e.v.assign(dim_, 0.0);
            e.v[0] = 1.0;
            return e;
        }
        return l2_normalized(std::move(e));
    }

    std::size_t dim() const override { return dim_; }
    bool deterministic() const override { return true; }
    std::uint64_t seed() const { return seed_; }

private:
    static std::uint64_t fnv1a64(std::string_view s, std::uint64_t seed) {
        std::uint64_t h = 14695981039346656037ull;
        for (int i = 0; i < 8; ++i) {
            h ^= (seed >> (8 * i)) & 0xff;
            h *= 1099511628211ull;
        }
        for (unsigned char c : s) {
            h ^= c;
            h *= 1099511628211ull;
        }
        return h;
    }

    void accumulate(Embedding& e, const TokenStream& tokens) const {
        for (const std::string& token : tokens) {
            const std::size_t bucket = static_cast<std::size_t>(fnv1a64(token, seed_) % dim_);
            const double sign = (fnv1a64(token, seed_ ^ 0x9e3779b97f4a7c15ull) & 1u) ? 1.0 : -1.0;
            e.v[bucket] += sign;
        }
    }

    std::size_t dim_;
    AnalyzerConfig config_;
    std::uint64_t seed_;
};

/// doc_id -> unit vector map with exact exhaustive top-k retrieval.
/// Construction is single-writer; the store is immutable afterwards.
class VectorStore {
public:
    explicit VectorStore(std::size_t dim) : dim_(dim) {
        if (dim_ < 1) throw Error(ErrorCode::ValidationError, "vector store dimension must be positive");
    }

    /// Normalizes and stores the vector. Rejects duplicate ids and
    /// dimension mismatches.
    void insert(const std::string& doc_id, Embedding e) {
        if (e.dim() != dim_)
            throw Error(ErrorCode::DimMismatch, "vector for " + doc_id + " has dim " +
                                                    std::to_string(e.dim()) + ", store dim " +
                                                    std::to_string(dim_));
        if (entries_.count(doc_id)) throw Error(ErrorCode::DuplicateDocId, "duplicate vector id: " + doc_id);
        entries_.emplace(doc_id, l2_normalized(std::move(e)));
    }

    /// Exhaustive top-k by cosine similarity, remapped to [0,1] via
    /// (cos+1)/2 so scores satisfy the ScoredDoc invariant. Fusion consumes
    /// ranks, so the monotone remap never changes downstream order.
    RankedList search_vector(const Embedding& query, std::size_t k) const {
        if (query.dim() != dim_)
            throw Error(ErrorCode::DimMismatch, "query dim " + std::to_string(query.dim()) + ", store dim " +
                                                    std::to_string(dim_));
        std::vector<ScoredDoc> scored;
        scored.reserve(entries_.size());
        for (const auto& [doc_id, vec] : entries_) {
            const double remapped = (cosine(query, vec) + 1.0) / 2.0;
            scored.push_back({doc_id, std::max(0.0, remapped)});
        }
        return make_ranked_list(std::move(scored), k, "semantic");
    }

    std::size_t dim() const { return dim_; }
    std::size_t size() const { return entries_.size(); }
    const std::map<std::string, Embedding>& entries() const { return entries_; }

    void save(const std::string& path) const {
        nlohmann::json j;
        j["format_version"] = 1;
        j["dim"] = dim_;
        nlohmann::json entries = nlohmann::json::object();
        for (const auto& [doc_id, vec] : entries_) entries[doc_id] = vec.v;
        j["entries"] = std::move(entries);
        detail::write_json_file(path, j);
    }

    static VectorStore load(const std::string& path) {
        const nlohmann::json j = detail::load_json_file(path);
        detail::check_format_version(j, "vector store");
        VectorStore store(j.at("dim").get<std::size_t>());
        for (const auto& [doc_id, vec] : j.at("entries").items()) {
            Embedding e{vec.get<std::vector<double>>()};
            if (e.dim() != store.dim_)
                throw Error(ErrorCode::DimMismatch, "stored vector for " + doc_id + " has wrong dim");
            store.entries_.emplace(doc_id, std::move(e));
        }
        return store;
    }

private:
    std::size_t dim_;
    std::map<std::string, Embedding> entries_;
};

}  // namespace trifuse
