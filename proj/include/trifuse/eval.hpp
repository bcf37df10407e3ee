#pragma once

#include <fstream>
#include <map>
#include <set>
#include <string>
#include <vector>

#include <json.hpp>

#include "trifuse/engine.hpp"
#include "trifuse/error.hpp"

namespace trifuse {

/// One labelled retrieval case: a query, the mode to run it in, and the set
/// of documents that count as relevant.
struct EvalCase {
    std::string query;
    SearchMode mode = SearchMode::Full;
    std::vector<std::string> relevant_ids;
    std::size_t k = 10;
};

struct EvalCaseResult {
    EvalCase eval_case;
    double recall_at_k = 0.0;
    double reciprocal_rank = 0.0;
    std::vector<std::string> retrieved_ids;
};

struct ModeAggregate {
    std::size_t case_count = 0;
    double mean_recall = 0.0;
    double mean_reciprocal_rank = 0.0;
};

struct EvalReport {
    std::vector<EvalCaseResult> cases;
    std::map<std::string, ModeAggregate> per_mode;
};

/// Cases file: JSON Lines of
/// {"query": "...", "mode": "full", "relevant_ids": ["d1", ...], "k": 10}.
inline std::vector<EvalCase> load_eval_cases(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw Error(ErrorCode::IoError, "cannot open eval cases file: " + path);
    std::vector<EvalCase> cases;
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (trim_copy(line).empty()) continue;
        nlohmann::json j;
        try {
            j = nlohmann::json::parse(line);
        } catch (const std::exception& e) {
            throw Error(ErrorCode::MalformedJson, "line " + std::to_string(line_no) + ": " + e.what());
        }
        EvalCase c;
        c.query = j.at("query").get<std::string>();
        c.mode = parse_search_mode(j.value("mode", "full"));
        c.relevant_ids = j.at("relevant_ids").get<std::vector<std::string>>();
        c.k = j.value("k", std::size_t{10});
        if (c.relevant_ids.empty())
            throw Error(ErrorCode::ValidationError,
                        "line " + std::to_string(line_no) + ": relevant_ids must be non-empty");
        cases.push_back(std::move(c));
    }
    return cases;
}

/// Runs every case and reports recall@k and reciprocal rank per case plus
/// arithmetic-mean aggregates per mode. Relevant ids must exist in the
/// engine's corpus.
inline EvalReport run_eval(const Engine& engine, const std::vector<EvalCase>& cases,
                           LlmClient* llm = nullptr) {
    EvalReport report;
    for (const EvalCase& c : cases) {
        for (const std::string& id : c.relevant_ids)
            if (!engine.index().stats().doc_len.count(id))
                throw Error(ErrorCode::UnknownDocInCases, "relevant id '" + id + "' is not in the corpus");

        SearchRequest request;
        request.query = c.query;
        request.mode = c.mode;
        request.k = c.k;
        request.per_path_k = std::max<std::size_t>(50, c.k);
        const SearchResponse response = engine.search(request, llm);

        EvalCaseResult result;
        result.eval_case = c;
        const std::set<std::string> relevant(c.relevant_ids.begin(), c.relevant_ids.end());
        std::size_t hits = 0;
        for (std::size_t i = 0; i < response.results.docs.size(); ++i) {
            const std::string& id = response.results.docs[i].doc_id;
            result.retrieved_ids.push_back(id);
            if (relevant.count(id)) {
                ++hits;
                if (result.reciprocal_rank == 0.0)
                    result.reciprocal_rank = 1.0 / static_cast<double>(i + 1);
            }
        }
        result.recall_at_k = static_cast<double>(hits) / static_cast<double>(relevant.size());
        report.cases.push_back(std::move(result));
    }
    for (const EvalCaseResult& r : report.cases) {
        ModeAggregate& agg = report.per_mode[search_mode_name(r.eval_case.mode)];
        ++agg.case_count;
        agg.mean_recall += r.recall_at_k;
        agg.mean_reciprocal_rank += r.reciprocal_rank;
    }
    for (auto& [mode, agg] : report.per_mode) {
        agg.mean_recall /= static_cast<double>(agg.case_count);
        agg.mean_reciprocal_rank /= static_cast<double>(agg.case_count);
    }
    return report;
}

inline nlohmann::json eval_report_to_json(const EvalReport& report) {
    nlohmann::json j;
    j["cases"] = nlohmann::json::array();
    for (const EvalCaseResult& r : report.cases) {
        j["cases"].push_back({{"query", r.eval_case.query},
                              {"mode", search_mode_name(r.eval_case.mode)},
                              {"k", r.eval_case.k},
                              {"recall_at_k", r.recall_at_k},
                              {"reciprocal_rank", r.reciprocal_rank},
                              {"retrieved_ids", r.retrieved_ids}});
    }
    j["per_mode"] = nlohmann::json::object();
    for (const auto& [mode, agg] : report.per_mode) {
        j["per_mode"][mode] = {{"cases", agg.case_count},
                               {"mean_recall", agg.mean_recall},
                               {"mean_reciprocal_rank", agg.mean_reciprocal_rank}};
    }
    return j;
}

}  // namespace trifuse
