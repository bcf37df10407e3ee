// Command-line surface for the hybrid retrieval engine: index a corpus,
// query or serve an engine directory, run labelled evaluations, and inspect
// rank fusion.

#include <cstdlib>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <memory>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "trifuse/engine.hpp"
#include "trifuse/eval.hpp"
#include "trifuse/fusion.hpp"
#include "trifuse/remote_providers.hpp"
#include "trifuse/server.hpp"

namespace {

using namespace trifuse;

constexpr int kExitOk = 0;
constexpr int kExitUsage = 1;
constexpr int kExitRuntime = 2;

/// Provider endpoints and keys, resolved from an optional JSON config file
/// with the environment taking precedence.
struct ProviderSettings {
    std::string llm_endpoint;
    std::string llm_api_key;
    bool llm_chat_format = false;
    std::string embed_endpoint;
    std::string embed_api_key;
};

ProviderSettings resolve_provider_settings(const std::string& config_path) {
    ProviderSettings s;
    if (!config_path.empty()) {
        std::ifstream in(config_path);
        if (!in) throw Error(ErrorCode::IoError, "cannot open config file: " + config_path);
        nlohmann::json j;
        try {
            in >> j;
        } catch (const std::exception& e) {
            throw Error(ErrorCode::MalformedJson, "config file " + config_path + ": " + e.what());
        }
        s.llm_endpoint = j.value("llm_endpoint", "");
        s.llm_api_key = j.value("llm_api_key", "");
        s.llm_chat_format = j.value("llm_chat_format", false);
        s.embed_endpoint = j.value("embed_endpoint", "");
        s.embed_api_key = j.value("embed_api_key", "");
    }
    const auto env = [](const char* name) -> std::string {
        const char* v = std::getenv(name);
        return v ? v : "";
    };
    if (!env("LLM_ENDPOINT").empty()) s.llm_endpoint = env("LLM_ENDPOINT");
    if (!env("LLM_API_KEY").empty()) s.llm_api_key = env("LLM_API_KEY");
    if (!env("EMBED_ENDPOINT").empty()) s.embed_endpoint = env("EMBED_ENDPOINT");
    if (!env("EMBED_API_KEY").empty()) s.embed_api_key = env("EMBED_API_KEY");
    return s;
}

std::shared_ptr<LlmClient> make_llm_client(const ProviderSettings& s) {
    if (s.llm_endpoint.empty()) return nullptr;
    return std::make_shared<HttpLlmClient>(ProviderConfig{s.llm_endpoint, s.llm_api_key},
                                           s.llm_chat_format);
}

Engine::ProviderFactory make_provider_factory(const ProviderSettings& s) {
    return [s](const std::string& kind, std::size_t dim,
               const EngineConfig&) -> std::shared_ptr<EmbeddingProvider> {
        if (kind == "remote" && !s.embed_endpoint.empty())
            return std::make_shared<RemoteEmbedder>(ProviderConfig{s.embed_endpoint, s.embed_api_key}, dim);
        return nullptr;  // hashed_bow is reconstructed by Engine::load
    };
}

int run_index(const std::string& corpus, const std::string& out, const std::string& synonyms,
              const std::string& stopwords, const std::string& lexicons, const std::string& prompt_template,
              std::size_t dim, std::uint64_t seed, double k1, double b, double c, bool strict,
              std::string embedder_kind, const ProviderSettings& settings) {
    EngineConfig config;
    if (!synonyms.empty()) config.analyzer.synonym_table = load_synonym_table(synonyms, config.analyzer);
    if (!stopwords.empty()) config.analyzer.stopwords = load_stopwords(stopwords);
    if (!lexicons.empty()) config.lexicons = Lexicons::load_file(lexicons);
    if (!prompt_template.empty()) config.prompt = PromptTemplate::load_file(prompt_template);
    config.bm25 = Bm25Params{k1, b};
    config.rrf_c = c;
    config.dim = dim;
    config.hash_seed = seed;
    config.strict = strict;

    if (embedder_kind == "auto") embedder_kind = settings.embed_endpoint.empty() ? "hashed" : "remote";
    std::shared_ptr<EmbeddingProvider> embedder;
    if (embedder_kind == "remote") {
        if (settings.embed_endpoint.empty())
            throw Error(ErrorCode::ProviderUnavailable,
                        "remote embedder requested but EMBED_ENDPOINT is not configured");
        config.embedder_kind = "remote";
        embedder = std::make_shared<RemoteEmbedder>(
            ProviderConfig{settings.embed_endpoint, settings.embed_api_key}, 0);
    } else {
        config.embedder_kind = "hashed_bow";
        embedder = std::make_shared<HashedBowEmbedder>(dim, config.analyzer, seed);
    }

    std::vector<std::string> warnings;
    const Engine engine = Engine::ingest_file(corpus, std::move(config), std::move(embedder), &warnings);
    for (const std::string& w : warnings) std::cerr << "warning: " << w << "\n";
    engine.save(out);
    std::cout << "indexed " << engine.corpus().size() << " documents into " << out << " (dim "
              << engine.store().dim() << ", embedder " << engine.config().embedder_kind << ")\n";
    if (!warnings.empty()) std::cerr << warnings.size() << " line(s) skipped\n";
    return kExitOk;
}

void print_human_response(const SearchResponse& response) {
    if (response.structured && response.structured->query) {
        std::cout << "structured query ("
                  << (response.structured->provenance == StructurerResult::Provenance::Llm ? "llm" : "rules")
                  << "): " << serialize_structured_query(*response.structured->query) << "\n";
    }
    if (response.results.docs.empty()) {
        std::cout << "no results\n";
        return;
    }
    std::cout << std::left << std::setw(6) << "rank" << std::setw(14) << "score"
              << "id\n";
    for (std::size_t i = 0; i < response.results.docs.size(); ++i) {
        const ScoredDoc& d = response.results.docs[i];
        std::cout << std::left << std::setw(6) << (i + 1) << std::setw(14) << std::setprecision(6)
                  << std::fixed << d.score << d.doc_id << "\n";
        std::cout.unsetf(std::ios::fixed);
    }
    for (const PathDiagnostics& diag : response.path_diagnostics)
        for (const std::string& err : diag.errors)
            std::cerr << "path " << diag.path << ": " << err << "\n";
}

int run_query(const std::string& engine_dir, const std::string& mode, std::size_t k, std::size_t per_path_k,
              const std::string& text, bool as_json, bool timings, const ProviderSettings& settings) {
    const Engine engine = Engine::load(engine_dir, make_provider_factory(settings));
    const auto llm = make_llm_client(settings);
    SearchRequest request;
    request.query = text;
    request.mode = parse_search_mode(mode);
    request.k = k;
    request.per_path_k = per_path_k;
    const SearchResponse response = engine.search(request, llm.get());
    if (as_json)
        std::cout << response_to_json(response, timings).dump() << "\n";
    else
        print_human_response(response);
    return kExitOk;
}

int run_serve(const std::string& engine_dir, const std::string& host, int port,
              const ProviderSettings& settings) {
    auto engine = std::make_shared<const Engine>(Engine::load(engine_dir, make_provider_factory(settings)));
    SearchServer server;
    server.set_engine(engine, make_llm_client(settings));
    std::cout << "serving " << engine->corpus().size() << " documents on " << host << ":" << port << "\n";
    if (!server.listen(host, port))
        throw Error(ErrorCode::IoError, "cannot listen on " + host + ":" + std::to_string(port));
    return kExitOk;
}

int run_eval_cmd(const std::string& engine_dir, const std::string& cases_path, bool as_json,
                 const ProviderSettings& settings) {
    const Engine engine = Engine::load(engine_dir, make_provider_factory(settings));
    const auto llm = make_llm_client(settings);
    const std::vector<EvalCase> cases = load_eval_cases(cases_path);
    const EvalReport report = run_eval(engine, cases, llm.get());
    if (as_json) {
        std::cout << eval_report_to_json(report).dump() << "\n";
        return kExitOk;
    }
    for (const EvalCaseResult& r : report.cases) {
        std::cout << std::left << std::setw(9) << search_mode_name(r.eval_case.mode) << "recall@"
                  << r.eval_case.k << "=" << std::setprecision(4) << r.recall_at_k << " rr="
                  << r.reciprocal_rank << "  " << r.eval_case.query << "\n";
    }
    for (const auto& [mode, agg] : report.per_mode)
        std::cout << mode << ": cases=" << agg.case_count << " mean_recall=" << std::setprecision(4)
                  << agg.mean_recall << " mean_rr=" << agg.mean_reciprocal_rank << "\n";
    return kExitOk;
}

int run_fuse_debug(const std::string& lists_path, double c, std::size_t k) {
    std::ifstream in(lists_path);
    if (!in) throw Error(ErrorCode::IoError, "cannot open lists file: " + lists_path);
    nlohmann::json j;
    try {
        in >> j;
    } catch (const std::exception& e) {
        throw Error(ErrorCode::MalformedJson, lists_path + ": " + e.what());
    }
    const nlohmann::json& arr = j.is_object() && j.contains("lists") ? j["lists"] : j;
    if (!arr.is_array())
        throw Error(ErrorCode::ValidationError, "expected an array of ranked lists (or {\"lists\": [...]})");

    std::vector<RankedList> lists;
    for (std::size_t i = 0; i < arr.size(); ++i) {
        const nlohmann::json& entry = arr[i];
        RankedList list;
        list.source_label = entry.is_object() ? entry.value("label", "list" + std::to_string(i))
                                              : "list" + std::to_string(i);
        const nlohmann::json& docs = entry.is_object() ? entry.at("docs") : entry;
        if (!docs.is_array())
            throw Error(ErrorCode::ValidationError, "list " + std::to_string(i) + ": docs must be an array");
        for (std::size_t r = 0; r < docs.size(); ++r) {
            const nlohmann::json& d = docs[r];
            if (d.is_string()) {
                // Bare ids: synthesize scores that respect list order.
                list.docs.push_back({d.get<std::string>(), static_cast<double>(docs.size() - r)});
            } else {
                list.docs.push_back({d.at("id").get<std::string>(), d.at("score").get<double>()});
            }
        }
        try {
            check_ranked_list(list);
        } catch (const std::exception& e) {
            throw Error(ErrorCode::ValidationError, "list " + std::to_string(i) + ": " + e.what());
        }
        lists.push_back(std::move(list));
    }

    const auto positions = rank_positions(lists);
    const RankedList fused = rrf_fuse(lists, FusionConfig{c, k});
    nlohmann::json out;
    out["rank_positions"] = nlohmann::json::object();
    for (const auto& [doc_id, ranks] : positions) {
        nlohmann::json row = nlohmann::json::array();
        for (const auto& rank : ranks)
            row.push_back(rank ? nlohmann::json(*rank) : nlohmann::json(nullptr));
        out["rank_positions"][doc_id] = std::move(row);
    }
    out["fused"] = nlohmann::json::array();
    for (std::size_t i = 0; i < fused.docs.size(); ++i)
        out["fused"].push_back({{"id", fused.docs[i].doc_id}, {"score", fused.docs[i].score}, {"rank", i + 1}});
    std::cout << out.dump(2) << "\n";
    return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"trifuse — hybrid document retrieval (structured + keyword + semantic, RRF-fused)"};
    app.require_subcommand(1);

    std::string config_path;
    app.add_option("--config", config_path, "JSON config with provider endpoints (environment wins)");

    // index
    auto* index_cmd = app.add_subcommand("index", "Build an engine directory from a JSONL corpus");
    std::string corpus, out_dir, synonyms, stopwords, lexicons, prompt_template;
    std::size_t dim = 64;
    std::uint64_t seed = 0;
    double k1 = 1.2, b = 0.75, c = 60.0;
    bool strict = false;
    std::string embedder_kind = "auto";
    index_cmd->add_option("--corpus", corpus, "Corpus JSONL file")->required();
    index_cmd->add_option("--out", out_dir, "Output engine directory")->required();
    index_cmd->add_option("--synonyms", synonyms, "Synonym table JSON file");
    index_cmd->add_option("--stopwords", stopwords, "Stopword file, one token per line");
    index_cmd->add_option("--lexicons", lexicons, "Gazetteer JSON file for the structured path");
    index_cmd->add_option("--prompt-template", prompt_template, "LLM prompt template file");
    index_cmd->add_option("--dim", dim, "Embedding dimension for the hashed embedder");
    index_cmd->add_option("--seed", seed, "Hash seed for the hashed embedder");
    index_cmd->add_option("--k1", k1, "BM25 k1");
    index_cmd->add_option("--b", b, "BM25 b");
    index_cmd->add_option("--c", c, "RRF constant");
    index_cmd->add_flag("--strict", strict, "Abort on the first invalid corpus line");
    index_cmd->add_option("--embedder", embedder_kind, "auto|hashed|remote")
        ->check(CLI::IsMember({"auto", "hashed", "remote"}));

    // query
    auto* query_cmd = app.add_subcommand("query", "Search an engine directory");
    std::string engine_dir, mode = "full", query_text;
    std::size_t k = 10, per_path_k = 50;
    bool as_json = false, timings = false;
    query_cmd->add_option("--engine", engine_dir, "Engine directory")->required();
    query_cmd->add_option("--mode", mode, "full|fast|keyword|semantic")
        ->check(CLI::IsMember({"full", "fast", "keyword", "semantic"}));
    query_cmd->add_option("-k,--k", k, "Number of results");
    query_cmd->add_option("--per-path-k", per_path_k, "Candidate depth per path before fusion");
    query_cmd->add_flag("--json", as_json, "Emit the response as JSON");
    query_cmd->add_flag("--timings", timings, "Include per-path timings in JSON output");
    query_cmd->add_option("text", query_text, "Query text")->required();

    // serve
    auto* serve_cmd = app.add_subcommand("serve", "Serve an engine over HTTP");
    std::string serve_engine, host = "0.0.0.0";
    int port = 0;
    serve_cmd->add_option("--engine", serve_engine, "Engine directory")->required();
    serve_cmd->add_option("--port", port, "Port to listen on")->required();
    serve_cmd->add_option("--host", host, "Bind address");

    // eval
    auto* eval_cmd = app.add_subcommand("eval", "Run labelled eval cases against an engine");
    std::string eval_engine, cases_path;
    bool eval_json = false;
    eval_cmd->add_option("--engine", eval_engine, "Engine directory")->required();
    eval_cmd->add_option("--cases", cases_path, "Eval cases JSONL file")->required();
    eval_cmd->add_flag("--json", eval_json, "Emit the report as JSON");

    // fuse-debug
    auto* fuse_cmd = app.add_subcommand("fuse-debug", "Dump rank vectors and RRF scores for given lists");
    std::string lists_path;
    double fuse_c = 60.0;
    std::size_t fuse_k = 10;
    fuse_cmd->add_option("--lists", lists_path, "JSON file with ranked lists")->required();
    fuse_cmd->add_option("--c", fuse_c, "RRF constant");
    fuse_cmd->add_option("-k,--k", fuse_k, "Output depth");

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return kExitUsage;
    }

    try {
        const ProviderSettings settings = resolve_provider_settings(config_path);
        if (*index_cmd)
            return run_index(corpus, out_dir, synonyms, stopwords, lexicons, prompt_template, dim, seed, k1,
                             b, c, strict, embedder_kind, settings);
        if (*query_cmd)
            return run_query(engine_dir, mode, k, per_path_k, query_text, as_json, timings, settings);
        if (*serve_cmd) return run_serve(serve_engine, host, port, settings);
        if (*eval_cmd) return run_eval_cmd(eval_engine, cases_path, eval_json, settings);
        if (*fuse_cmd) return run_fuse_debug(lists_path, fuse_c, fuse_k);
    } catch (const Error& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitRuntime;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitRuntime;
    }
    return kExitOk;
}
