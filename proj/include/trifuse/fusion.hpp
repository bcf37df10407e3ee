#pragma once

#include <map>
#include <optional>
#include <string>
#include <vector>

#include "trifuse/core.hpp"
#include "trifuse/error.hpp"

namespace trifuse {

/// Reciprocal rank fusion settings. c smooths the influence of lower-ranked
/// documents; 60 is the conventional default.
struct FusionConfig {
    double c = 60.0;
    std::size_t k_out = 10;
};

/// 1-based rank of every document in every input list (nullopt where the
/// document is absent). Exposed for diagnostics and used by rrf_fuse.
inline std::map<std::string, std::vector<std::optional<std::size_t>>> rank_positions(
    const std::vector<RankedList>& lists) {
    std::map<std::string, std::vector<std::optional<std::size_t>>> positions;
    for (std::size_t list_idx = 0; list_idx < lists.size(); ++list_idx) {
        for (std::size_t i = 0; i < lists[list_idx].docs.size(); ++i) {
            auto& ranks = positions[lists[list_idx].docs[i].doc_id];
            ranks.resize(lists.size());
            ranks[list_idx] = i + 1;
        }
    }
    for (auto& [id, ranks] : positions) ranks.resize(lists.size());
    return positions;
}

/// Merges ranked lists by summing 1/(rank + c) over the lists that contain
/// each document. Input scores are ignored entirely; only ranks matter.
/// Output is sorted, tie-broken by ascending doc_id, and truncated to k_out.
inline RankedList rrf_fuse(const std::vector<RankedList>& lists, const FusionConfig& config) {
    if (config.c < 0.0) throw Error(ErrorCode::ValidationError, "rrf constant c must be non-negative");
    for (const RankedList& list : lists) check_ranked_list(list);
    const auto positions = rank_positions(lists);
    std::vector<ScoredDoc> fused;
    fused.reserve(positions.size());
    for (const auto& [doc_id, ranks] : positions) {
        double score = 0.0;
        for (const auto& rank : ranks)
            if (rank) score += 1.0 / (static_cast<double>(*rank) + config.c);
        fused.push_back({doc_id, score});
    }
    return make_ranked_list(std::move(fused), config.k_out, "fused");
}

}  // namespace trifuse
