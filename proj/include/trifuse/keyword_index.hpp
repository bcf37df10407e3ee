#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <map>
#include <set>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "trifuse/analyzer.hpp"
#include "trifuse/core.hpp"
#include "trifuse/error.hpp"

namespace trifuse {

/// BM25 parameters; k1 saturates term frequency, b normalizes by document
/// length. Defaults are the literature values.
struct Bm25Params {
    double k1 = 1.2;
    double b = 0.75;
};

struct Posting {
    std::string doc_id;
    std::uint32_t term_freq = 0;

    bool operator==(const Posting& other) const {
        return doc_id == other.doc_id && term_freq == other.term_freq;
    }
};

namespace detail {

inline nlohmann::json analyzer_to_json(const AnalyzerConfig& a) {
    nlohmann::json j;
    j["lowercase"] = a.lowercase;
    j["strip_punctuation"] = a.strip_punctuation;
    j["stopwords"] = a.stopwords;
    nlohmann::json syn = nlohmann::json::object();
    for (const auto& [key, repls] : a.synonym_table) {
        nlohmann::json arr = nlohmann::json::array();
        for (const auto& r : repls) arr.push_back(join_tokens(r));
        syn[join_tokens(key)] = std::move(arr);
    }
    j["synonym_table"] = std::move(syn);
    return j;
}

inline AnalyzerConfig analyzer_from_json(const nlohmann::json& j) {
    AnalyzerConfig a;
    a.lowercase = j.at("lowercase").get<bool>();
    a.strip_punctuation = j.at("strip_punctuation").get<bool>();
    a.stopwords = j.at("stopwords").get<std::set<std::string>>();
    for (const auto& [key, repls] : j.at("synonym_table").items()) {
        std::vector<TokenStream> values;
        for (const auto& r : repls) values.push_back(phrase_tokens(r.get<std::string>(), a));
        a.synonym_table[phrase_tokens(key, a)] = std::move(values);
    }
    return a;
}

inline nlohmann::json load_json_file(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw Error(ErrorCode::IoError, "cannot open " + path.string());
    nlohmann::json j;
    try {
        in >> j;
    } catch (const std::exception& e) {
        throw Error(ErrorCode::MalformedJson, path.string() + ": " + e.what());
    }
    return j;
}

inline void write_json_file(const std::filesystem::path& path, const nlohmann::json& j) {
    std::ofstream out(path);
    if (!out) throw Error(ErrorCode::IoError, "cannot write " + path.string());
    out << j.dump(2) << '\n';
    if (!out) throw Error(ErrorCode::IoError, "write failed: " + path.string());
}

inline void check_format_version(const nlohmann::json& j, const std::string& what) {
    if (!j.contains("format_version") || !j["format_version"].is_number_integer() ||
        j["format_version"].get<int>() != 1)
        throw Error(ErrorCode::ValidationError, what + ": unsupported format version");
}

}  // namespace detail

/// Token -> postings map with the corpus statistics BM25 needs. Build once,
/// then the index is immutable; searches may run concurrently.
class InvertedIndex {
public:
    static InvertedIndex build(const std::vector<Document>& corpus, AnalyzerConfig analyzer,
                               Bm25Params params = {}) {
        if (params.k1 <= 0.0 || params.b < 0.0 || params.b > 1.0)
            throw Error(ErrorCode::ValidationError, "bm25 parameters out of range (need k1 > 0, b in [0,1])");
        InvertedIndex index;
        index.analyzer_ = std::move(analyzer);
        index.params_ = params;
        std::size_t total_len = 0;
        for (const Document& doc : corpus) {
            if (index.stats_.doc_len.count(doc.id))
                throw Error(ErrorCode::DuplicateDocId, "duplicate document id: " + doc.id);
            const TokenStream tokens = tokenize(doc.text, index.analyzer_);
            index.stats_.doc_len[doc.id] = tokens.size();
            total_len += tokens.size();
            std::map<std::string, std::uint32_t> counts;
            for (const std::string& t : tokens) ++counts[t];
            for (const auto& [token, freq] : counts) index.postings_[token].push_back({doc.id, freq});
        }
        index.stats_.doc_count = corpus.size();
        index.stats_.avg_doc_len =
            corpus.empty() ? 0.0 : static_cast<double>(total_len) / static_cast<double>(corpus.size());
        for (auto& [token, plist] : index.postings_)
            std::sort(plist.begin(), plist.end(),
                      [](const Posting& a, const Posting& b) { return a.doc_id < b.doc_id; });
        return index;
    }

    /// BM25 score of a document against the distinct tokens of a query.
    /// score = sum over tokens of idf * tf*(k1+1) / (tf + k1*(1-b+b*len/avg)),
    /// idf = ln(1 + (N - df + 0.5)/(df + 0.5)). Tokens absent from the
    /// document (or corpus) contribute 0.
    double bm25_score(const TokenStream& query_tokens, const std::string& doc_id) const {
        const auto len_it = stats_.doc_len.find(doc_id);
        if (len_it == stats_.doc_len.end())
            throw Error(ErrorCode::UnknownDoc, "document not in index: " + doc_id);
        const double doc_len = static_cast<double>(len_it->second);
        const double n_docs = static_cast<double>(stats_.doc_count);
        const double rel_len = stats_.avg_doc_len > 0.0 ? doc_len / stats_.avg_doc_len : 0.0;
        double score = 0.0;
        std::set<std::string_view> seen;
        for (const std::string& token : query_tokens) {
            if (!seen.insert(token).second) continue;
            const auto post_it = postings_.find(token);
            if (post_it == postings_.end()) continue;
            const std::uint32_t tf = term_freq(post_it->second, doc_id);
            if (tf == 0) continue;
            const double df = static_cast<double>(post_it->second.size());
            const double idf = std::log(1.0 + (n_docs - df + 0.5) / (df + 0.5));
            const double tf_d = static_cast<double>(tf);
            score += idf * (tf_d * (params_.k1 + 1.0)) /
                     (tf_d + params_.k1 * (1.0 - params_.b + params_.b * rel_len));
        }
        return score;
    }

    /// Tokenizes and expands the query, scores every document that contains
    /// at least one variant token (max across variants), and returns the
    /// top k. A query with no matching tokens returns an empty list.
    RankedList search_keyword(std::string_view query, std::size_t k) const {
        const std::vector<TokenStream> variants = expand_query(tokenize(query, analyzer_), analyzer_);
        std::set<std::string> candidates;
        for (const TokenStream& variant : variants) {
            std::set<std::string_view> distinct(variant.begin(), variant.end());
            for (const std::string_view token : distinct) {
                const auto it = postings_.find(std::string(token));
                if (it == postings_.end()) continue;
                for (const Posting& p : it->second) candidates.insert(p.doc_id);
            }
        }
        std::vector<ScoredDoc> scored;
        scored.reserve(candidates.size());
        for (const std::string& doc_id : candidates) {
            double best = 0.0;
            for (const TokenStream& variant : variants) best = std::max(best, bm25_score(variant, doc_id));
            scored.push_back({doc_id, best});
        }
        return make_ranked_list(std::move(scored), k, "keyword");
    }

    const CorpusStats& stats() const { return stats_; }
    const AnalyzerConfig& analyzer() const { return analyzer_; }
    const Bm25Params& params() const { return params_; }
    const std::map<std::string, std::vector<Posting>>& postings() const { return postings_; }

    /// Writes a stats file and a postings file into `dir`. Reloading
    /// reproduces search results exactly.
    void save(const std::string& dir) const {
        namespace fs = std::filesystem;
        std::error_code ec;
        fs::create_directories(dir, ec);
        if (ec) throw Error(ErrorCode::IoError, "cannot create " + dir + ": " + ec.message());

        nlohmann::json stats;
        stats["format_version"] = 1;
        stats["bm25"] = {{"k1", params_.k1}, {"b", params_.b}};
        stats["analyzer"] = detail::analyzer_to_json(analyzer_);
        stats["stats"] = {{"doc_count", stats_.doc_count},
                          {"avg_doc_len", stats_.avg_doc_len},
                          {"doc_len", stats_.doc_len}};
        detail::write_json_file(fs::path(dir) / "stats.json", stats);

        nlohmann::json postings;
        postings["format_version"] = 1;
        nlohmann::json entries = nlohmann::json::object();
        for (const auto& [token, plist] : postings_) {
            nlohmann::json arr = nlohmann::json::array();
            for (const Posting& p : plist) arr.push_back({p.doc_id, p.term_freq});
            entries[token] = std::move(arr);
        }
        postings["postings"] = std::move(entries);
        detail::write_json_file(fs::path(dir) / "postings.json", postings);
    }

    static InvertedIndex load(const std::string& dir) {
        namespace fs = std::filesystem;
        const nlohmann::json stats = detail::load_json_file(fs::path(dir) / "stats.json");
        const nlohmann::json postings = detail::load_json_file(fs::path(dir) / "postings.json");
        detail::check_format_version(stats, "keyword index stats");
        detail::check_format_version(postings, "keyword index postings");

        InvertedIndex index;
        index.params_.k1 = stats.at("bm25").at("k1").get<double>();
        index.params_.b = stats.at("bm25").at("b").get<double>();
        index.analyzer_ = detail::analyzer_from_json(stats.at("analyzer"));
        index.stats_.doc_count = stats.at("stats").at("doc_count").get<std::size_t>();
        index.stats_.avg_doc_len = stats.at("stats").at("avg_doc_len").get<double>();
        index.stats_.doc_len = stats.at("stats").at("doc_len").get<std::map<std::string, std::size_t>>();
        for (const auto& [token, arr] : postings.at("postings").items()) {
            std::vector<Posting> plist;
            for (const auto& entry : arr)
                plist.push_back({entry.at(0).get<std::string>(), entry.at(1).get<std::uint32_t>()});
            index.postings_[token] = std::move(plist);
        }
        return index;
    }

private:
    InvertedIndex() = default;

    static std::uint32_t term_freq(const std::vector<Posting>& plist, const std::string& doc_id) {
        const auto it = std::lower_bound(plist.begin(), plist.end(), doc_id,
                                         [](const Posting& p, const std::string& id) { return p.doc_id < id; });
        if (it == plist.end() || it->doc_id != doc_id) return 0;
        return it->term_freq;
    }

    std::map<std::string, std::vector<Posting>> postings_;
    CorpusStats stats_;
    AnalyzerConfig analyzer_;
    Bm25Params params_;
};

}  // namespace trifuse
