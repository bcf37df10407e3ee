#pragma once

#include <chrono>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <functional>
#include <map>
#include <memory>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "trifuse/analyzer.hpp"
#include "trifuse/core.hpp"
#include "trifuse/corpus_io.hpp"
#include "trifuse/error.hpp"
#include "trifuse/fusion.hpp"
#include "trifuse/keyword_index.hpp"
#include "trifuse/structured_query.hpp"
#include "trifuse/structurer.hpp"
#include "trifuse/vector_store.hpp"

namespace trifuse {

/// FULL runs all three retrieval paths; FAST bypasses the LLM-backed
/// structured path; the single-path modes skip fusion entirely.
enum class SearchMode { Full, Fast, KeywordOnly, SemanticOnly };

inline const char* search_mode_name(SearchMode mode) {
    switch (mode) {
        case SearchMode::Full: return "full";
        case SearchMode::Fast: return "fast";
        case SearchMode::KeywordOnly: return "keyword";
        case SearchMode::SemanticOnly: return "semantic";
    }
    return "?";
}

inline SearchMode parse_search_mode(const std::string& name) {
    if (name == "full") return SearchMode::Full;
    if (name == "fast") return SearchMode::Fast;
    if (name == "keyword") return SearchMode::KeywordOnly;
    if (name == "semantic") return SearchMode::SemanticOnly;
    throw Error(ErrorCode::UnknownMode, "unknown search mode '" + name + "'");
}

struct SearchRequest {
    std::string query;
    SearchMode mode = SearchMode::Full;
    std::size_t k = 10;
    /// Candidate depth per path before fusion; raised to k when smaller.
    std::size_t per_path_k = 50;
};

struct PathDiagnostics {
    std::string path;
    std::size_t list_size = 0;
    double elapsed_ms = 0.0;
    std::vector<std::string> errors;
};

struct SearchResponse {
    RankedList results;
    /// Present exactly when the structured (LLM) path ran, i.e. FULL mode.
    std::optional<StructurerResult> structured;
    std::vector<PathDiagnostics> path_diagnostics;
};

struct EngineConfig {
    AnalyzerConfig analyzer;
    Bm25Params bm25;
    double rrf_c = 60.0;
    std::size_t dim = 64;
    std::uint64_t hash_seed = 0;
    std::string embedder_kind = "hashed_bow";  // "hashed_bow" | "remote"
    Lexicons lexicons;
    PromptTemplate prompt = PromptTemplate::defaults();
    bool strict = false;
};

/// Immutable search engine state: validated corpus snapshot, keyword index,
/// vector store, and configuration. Construction is exclusive; a fully
/// constructed engine is safe for unlimited concurrent searches.
class Engine {
public:
    /// Builds every structure from an in-memory corpus. Documents are
    /// validated; the embedder must be present.
    Engine(std::vector<Document> corpus, EngineConfig config, std::shared_ptr<EmbeddingProvider> embedder)
        : config_(std::move(config)), embedder_(std::move(embedder)) {
        if (!embedder_) throw Error(ErrorCode::ValidationError, "an embedding provider is required to build");
        corpus_.reserve(corpus.size());
        for (Document& doc : corpus) corpus_.push_back(validate_document(doc));
        index_ = std::make_unique<InvertedIndex>(
            InvertedIndex::build(corpus_, config_.analyzer, config_.bm25));

        std::size_t dim = embedder_->dim();
        std::vector<std::pair<std::string, Embedding>> vectors;
        vectors.reserve(corpus_.size());
        for (const Document& doc : corpus_) {
            Embedding e = embedder_->embed(doc.text);
            if (dim == 0) dim = e.dim();
            vectors.emplace_back(doc.id, std::move(e));
        }
        if (dim == 0) dim = config_.dim;
        store_ = std::make_unique<VectorStore>(dim);
        for (auto& [id, vec] : vectors) store_->insert(id, std::move(vec));
        config_.dim = dim;
    }

    /// Reads, validates, and indexes a JSON Lines corpus. Lenient mode
    /// reports skipped lines through `warnings`; strict mode aborts on the
    /// first bad line.
    static Engine ingest_file(const std::string& corpus_path, EngineConfig config,
                              std::shared_ptr<EmbeddingProvider> embedder,
                              std::vector<std::string>* warnings = nullptr) {
        CorpusLoadResult loaded = read_corpus_jsonl(corpus_path, config.strict);
        if (warnings) *warnings = loaded.warnings;
        return Engine(std::move(loaded.docs), std::move(config), std::move(embedder));
    }

    /// Runs the requested paths and fuses (or forwards) their lists. Path
    /// failures degrade to an empty list plus a diagnostic; the response is
    /// a deterministic function of the request for deterministic providers.
    SearchResponse search(const SearchRequest& request, LlmClient* llm = nullptr) const {
        if (trim_copy(request.query).empty())
            throw Error(ErrorCode::ValidationError, "query must be a non-empty string");
        if (request.k == 0) throw Error(ErrorCode::ValidationError, "k must be positive");
        const std::size_t k = request.k;
        const std::size_t per_path_k = std::max(request.per_path_k, k);
        const SearchMode mode = request.mode;

        SearchResponse response;
        std::vector<RankedList> lists;

        using Clock = std::chrono::steady_clock;
        const auto run_path = [&](const char* label, std::size_t depth, auto&& fn) {
            PathDiagnostics diag;
            diag.path = label;
            const auto t0 = Clock::now();
            RankedList list{{}, label};
            try {
                list = fn(depth, diag);
            } catch (const Error& e) {
                diag.errors.push_back(e.what());
            }
            diag.elapsed_ms = std::chrono::duration<double, std::milli>(Clock::now() - t0).count();
            diag.list_size = list.docs.size();
            response.path_diagnostics.push_back(std::move(diag));
            lists.push_back(std::move(list));
        };

        if (mode == SearchMode::Full) {
            run_path("structured", per_path_k, [&](std::size_t depth, PathDiagnostics& diag) {
                StructurerResult sr = llm_structure(llm, request.query, config_.prompt, config_.lexicons);
                RankedList list{{}, "structured"};
                if (sr.llm_failure == ErrorCode::ProviderUnavailable) {
                    // Provider down: the path contributes nothing, so FULL
                    // degrades to exactly FAST.
                    diag.errors.push_back("ProviderUnavailable: structured path degraded to an empty list");
                } else if (sr.query) {
                    list = search_structured(corpus_, *index_, *sr.query, depth);
                } else {
                    diag.errors.push_back("no structured query extracted");
                }
                response.structured = std::move(sr);
                return list;
            });
        }
        const bool keyword_wanted = mode != SearchMode::SemanticOnly;
        const bool semantic_wanted = mode != SearchMode::KeywordOnly;
        const bool fused = mode == SearchMode::Full || mode == SearchMode::Fast;
        if (keyword_wanted)
            run_path("keyword", fused ? per_path_k : k, [&](std::size_t depth, PathDiagnostics&) {
                return index_->search_keyword(request.query, depth);
            });
        if (semantic_wanted)
            run_path("semantic", fused ? per_path_k : k, [&](std::size_t depth, PathDiagnostics&) {
                if (!embedder_)
                    throw Error(ErrorCode::ProviderUnavailable, "no embedding provider configured");
                return store_->search_vector(embedder_->embed(request.query), depth);
            });

        if (fused) {
            response.results = rrf_fuse(lists, FusionConfig{config_.rrf_c, k});
        } else {
            response.results = std::move(lists.front());
        }
        check_ranked_list(response.results);
        return response;
    }

    /// Persists the corpus snapshot, keyword index, vector store, lexicons,
    /// prompt template, and a manifest carrying the format version and all
    /// configs, so a reload reproduces results exactly.
    void save(const std::string& dir) const {
        namespace fs = std::filesystem;
        std::error_code ec;
        fs::create_directories(dir, ec);
        if (ec) throw Error(ErrorCode::IoError, "cannot create " + dir + ": " + ec.message());

        nlohmann::json manifest;
        manifest["format_version"] = 1;
        manifest["analyzer"] = detail::analyzer_to_json(config_.analyzer);
        manifest["bm25"] = {{"k1", config_.bm25.k1}, {"b", config_.bm25.b}};
        manifest["fusion"] = {{"c", config_.rrf_c}};
        manifest["embedder"] = {{"kind", config_.embedder_kind},
                                {"dim", store_->dim()},
                                {"seed", config_.hash_seed}};
        manifest["strict"] = config_.strict;
        detail::write_json_file(fs::path(dir) / "manifest.json", manifest);

        write_corpus_jsonl((fs::path(dir) / "corpus.jsonl").string(), corpus_);
        index_->save((fs::path(dir) / "index").string());
        store_->save((fs::path(dir) / "vectors.json").string());
        detail::write_json_file(fs::path(dir) / "lexicons.json", config_.lexicons.to_json());
        std::ofstream prompt_out(fs::path(dir) / "prompt_template.txt");
        if (!prompt_out) throw Error(ErrorCode::IoError, "cannot write prompt template");
        prompt_out << config_.prompt.text;
    }

    /// Factory for the embedding provider used at query time, given the
    /// manifest's embedder kind and dimension. Returning nullptr leaves the
    /// semantic path degraded.
    using ProviderFactory =
        std::function<std::shared_ptr<EmbeddingProvider>(const std::string& kind, std::size_t dim,
                                                         const EngineConfig& config)>;

    static Engine load(const std::string& dir, const ProviderFactory& provider_factory = {}) {
        namespace fs = std::filesystem;
        if (!fs::exists(fs::path(dir) / "manifest.json"))
            throw Error(ErrorCode::IoError, "no engine at " + dir + " (manifest.json missing)");
        const nlohmann::json manifest = detail::load_json_file(fs::path(dir) / "manifest.json");
        detail::check_format_version(manifest, "engine manifest");

        EngineConfig config;
        config.analyzer = detail::analyzer_from_json(manifest.at("analyzer"));
        config.bm25.k1 = manifest.at("bm25").at("k1").get<double>();
        config.bm25.b = manifest.at("bm25").at("b").get<double>();
        config.rrf_c = manifest.at("fusion").at("c").get<double>();
        config.embedder_kind = manifest.at("embedder").at("kind").get<std::string>();
        config.dim = manifest.at("embedder").at("dim").get<std::size_t>();
        config.hash_seed = manifest.at("embedder").at("seed").get<std::uint64_t>();
        config.strict = manifest.value("strict", false);
        config.lexicons = Lexicons::load_file((fs::path(dir) / "lexicons.json").string());
        config.prompt = PromptTemplate::load_file((fs::path(dir) / "prompt_template.txt").string());

        Engine engine;
        std::shared_ptr<EmbeddingProvider> embedder;
        if (provider_factory) embedder = provider_factory(config.embedder_kind, config.dim, config);
        if (!embedder && config.embedder_kind == "hashed_bow")
            embedder = std::make_shared<HashedBowEmbedder>(config.dim, config.analyzer, config.hash_seed);
        engine.embedder_ = std::move(embedder);

        CorpusLoadResult loaded = read_corpus_jsonl((fs::path(dir) / "corpus.jsonl").string(), true);
        engine.corpus_ = std::move(loaded.docs);
        engine.index_ = std::make_unique<InvertedIndex>(InvertedIndex::load((fs::path(dir) / "index").string()));
        engine.store_ =
            std::make_unique<VectorStore>(VectorStore::load((fs::path(dir) / "vectors.json").string()));
        engine.config_ = std::move(config);
        return engine;
    }

    const std::vector<Document>& corpus() const { return corpus_; }
    const InvertedIndex& index() const { return *index_; }
    const VectorStore& store() const { return *store_; }
    const EngineConfig& config() const { return config_; }
    EmbeddingProvider* embedder() const { return embedder_.get(); }

private:
    Engine() = default;

    EngineConfig config_;
    std::vector<Document> corpus_;
    std::unique_ptr<InvertedIndex> index_;
    std::unique_ptr<VectorStore> store_;
    std::shared_ptr<EmbeddingProvider> embedder_;
};

/// Canonical JSON shape shared by the CLI and the HTTP service. Timings are
/// excluded by default so output is byte-stable across runs.
inline nlohmann::json response_to_json(const SearchResponse& response, bool include_timings = false) {
    nlohmann::json j;
    j["results"] = nlohmann::json::array();
    for (std::size_t i = 0; i < response.results.docs.size(); ++i) {
        const ScoredDoc& d = response.results.docs[i];
        j["results"].push_back({{"id", d.doc_id}, {"score", d.score}, {"rank", i + 1}});
    }
    if (response.structured) {
        const StructurerResult& sr = *response.structured;
        nlohmann::json s;
        s["provenance"] = sr.provenance == StructurerResult::Provenance::Llm ? "llm" : "rules";
        s["query"] = sr.query ? structured_query_to_json(*sr.query) : nlohmann::json(nullptr);
        s["diagnostics"] = sr.diagnostics;
        j["structured_query"] = std::move(s);
    } else {
        j["structured_query"] = nullptr;
    }
    nlohmann::json paths = nlohmann::json::array();
    for (const PathDiagnostics& d : response.path_diagnostics) {
        nlohmann::json p{{"path", d.path}, {"list_size", d.list_size}, {"errors", d.errors}};
        if (include_timings) p["elapsed_ms"] = d.elapsed_ms;
        paths.push_back(std::move(p));
    }
    j["diagnostics"] = {{"paths", std::move(paths)}};
    return j;
}

}  // namespace trifuse
