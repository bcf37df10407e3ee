#pragma once

#include <fstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "trifuse/core.hpp"
#include "trifuse/error.hpp"

namespace trifuse {

/// Builds a validated Document from one corpus JSON object:
/// {"id": "...", "text": "...", "metadata": {"field": value, ...}}.
/// Metadata values must be strings or finite numbers.
inline Document document_from_json(const nlohmann::json& j) {
    if (!j.is_object()) throw Error(ErrorCode::ValidationError, "document line must be a JSON object");
    Document raw;
    if (j.contains("id")) {
        if (!j["id"].is_string()) throw Error(ErrorCode::ValidationError, "document id must be a string");
        raw.id = j["id"].get<std::string>();
    }
    if (j.contains("text")) {
        if (!j["text"].is_string()) throw Error(ErrorCode::ValidationError, "document text must be a string");
        raw.text = j["text"].get<std::string>();
    }
    if (j.contains("metadata")) {
        if (!j["metadata"].is_object())
            throw Error(ErrorCode::ValidationError, "document metadata must be an object");
        for (const auto& [field, value] : j["metadata"].items()) {
            if (value.is_string())
                raw.metadata.emplace(field, FieldValue(value.get<std::string>()));
            else if (value.is_number())
                raw.metadata.emplace(field, FieldValue(value.get<double>()));
            else
                throw Error(ErrorCode::BadFieldValue,
                            "metadata field '" + field + "' must be a string or a number");
        }
    }
    return validate_document(raw);
}

inline nlohmann::json document_to_json(const Document& doc) {
    nlohmann::json j;
    j["id"] = doc.id;
    j["text"] = doc.text;
    nlohmann::json meta = nlohmann::json::object();
    for (const auto& [field, value] : doc.metadata) {
        if (value.is_string()) {
            meta[field] = value.as_string();
        } else {
            const double n = value.as_number();
            constexpr double kMaxExact = 9007199254740992.0;  // 2^53
            if (std::floor(n) == n && std::abs(n) <= kMaxExact)
                meta[field] = static_cast<std::int64_t>(n);
            else
                meta[field] = n;
        }
    }
    j["metadata"] = std::move(meta);
    return j;
}

struct CorpusLoadResult {
    std::vector<Document> docs;
    std::vector<std::string> warnings;  // "line N: reason" for skipped lines (lenient mode)
};

/// Reads a JSON Lines corpus. In strict mode the first bad line aborts with
/// its line number; otherwise bad lines are reported and skipped. Blank
/// lines are ignored.
inline CorpusLoadResult read_corpus_jsonl(const std::string& path, bool strict) {
    std::ifstream in(path);
    if (!in) throw Error(ErrorCode::IoError, "cannot open corpus file: " + path);
    CorpusLoadResult result;
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (trim_copy(line).empty()) continue;
        try {
            nlohmann::json j;
            try {
                j = nlohmann::json::parse(line);
            } catch (const std::exception& e) {
                throw Error(ErrorCode::MalformedJson, e.what());
            }
            result.docs.push_back(document_from_json(j));
        } catch (const Error& e) {
            const std::string where = "line " + std::to_string(line_no) + ": " + e.what();
            if (strict) throw Error(ErrorCode::ValidationError, where);
            result.warnings.push_back(where);
        }
    }
    return result;
}

inline void write_corpus_jsonl(const std::string& path, const std::vector<Document>& docs) {
    std::ofstream out(path);
    if (!out) throw Error(ErrorCode::IoError, "cannot write corpus file: " + path);
    for (const Document& doc : docs) out << document_to_json(doc).dump() << '\n';
    if (!out) throw Error(ErrorCode::IoError, "write failed: " + path);
}

}  // namespace trifuse
