#pragma once

#include <cstdint>
#include <fstream>
#include <map>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "trifuse/analyzer.hpp"
#include "trifuse/error.hpp"
#include "trifuse/structured_query.hpp"

namespace trifuse {

/// Gazetteers backing the deterministic rule-based extractor. Matching keys
/// are normalized token sequences; indication/country entries keep the
/// display form the structured query should carry. No phrase may appear in
/// two entity sets.
struct Lexicons {
    std::map<TokenStream, std::string> indications;
    std::map<TokenStream, std::string> countries;
    std::map<TokenStream, Predicate> age_groups;
    std::set<std::string> extra_fields;

    /// Lexicon file shape:
    ///   {"indications": ["lung cancer", ...],
    ///    "countries": ["India", ...],
    ///    "age_groups": {"adults": {"age": {"$gt": 18}}, ...},
    ///    "extra_fields": ["phase", ...]}
    static Lexicons from_json(const nlohmann::json& j) {
        if (!j.is_object()) throw Error(ErrorCode::MalformedJson, "lexicon file must be a JSON object");
        Lexicons lex;
        AnalyzerConfig plain;
        std::set<TokenStream> taken;
        const auto claim = [&](const TokenStream& phrase, const std::string& display) {
            if (phrase.empty())
                throw Error(ErrorCode::ValidationError, "lexicon phrase '" + display + "' normalizes to nothing");
            if (!taken.insert(phrase).second)
                throw Error(ErrorCode::ValidationError,
                            "lexicon phrase '" + display + "' appears in two entity sets");
        };
        if (j.contains("indications"))
            for (const auto& entry : j.at("indications")) {
                const std::string display = entry.get<std::string>();
                TokenStream key = phrase_tokens(display, plain);
                claim(key, display);
                lex.indications.emplace(std::move(key), display);
            }
        if (j.contains("countries"))
            for (const auto& entry : j.at("countries")) {
                const std::string display = entry.get<std::string>();
                TokenStream key = phrase_tokens(display, plain);
                claim(key, display);
                lex.countries.emplace(std::move(key), display);
            }
        if (j.contains("age_groups"))
            for (const auto& [phrase, pred_json] : j.at("age_groups").items()) {
                const StructuredQuery q = parse_structured_query(pred_json.dump());
                if (q.predicates.size() != 1)
                    throw Error(ErrorCode::ValidationError,
                                "age group '" + phrase + "' must map to exactly one predicate");
                TokenStream key = phrase_tokens(phrase, plain);
                claim(key, phrase);
                lex.age_groups.emplace(std::move(key), q.predicates.front());
            }
        if (j.contains("extra_fields"))
            for (const auto& entry : j.at("extra_fields")) lex.extra_fields.insert(entry.get<std::string>());
        return lex;
    }

    static Lexicons load_file(const std::string& path) {
        std::ifstream in(path);
        if (!in) throw Error(ErrorCode::IoError, "cannot open lexicon file: " + path);
        nlohmann::json j;
        try {
            in >> j;
        } catch (const std::exception& e) {
            throw Error(ErrorCode::MalformedJson, "lexicon file " + path + ": " + e.what());
        }
        return from_json(j);
    }

    nlohmann::json to_json() const {
        nlohmann::json j;
        j["indications"] = nlohmann::json::array();
        for (const auto& [key, display] : indications) j["indications"].push_back(display);
        j["countries"] = nlohmann::json::array();
        for (const auto& [key, display] : countries) j["countries"].push_back(display);
        j["age_groups"] = nlohmann::json::object();
        for (const auto& [key, pred] : age_groups) {
            StructuredQuery q;
            q.predicates.push_back(pred);
            j["age_groups"][join_tokens(key)] = structured_query_to_json(q);
        }
        j["extra_fields"] = extra_fields;
        return j;
    }
};

/// Outcome of query structuring. `query` is absent when nothing usable was
/// produced, in which case diagnostics explain why. `llm_failure` carries
/// the cause when the LLM path did not produce the query itself.
struct StructurerResult {
    enum class Provenance { Llm, Rules };

    std::optional<StructuredQuery> query;
    Provenance provenance = Provenance::Rules;
    std::vector<std::string> diagnostics;
    std::optional<ErrorCode> llm_failure;
};

/// Longest-match scan of the normalized query against the gazetteers, plus
/// a year recognizer ("since Y" -> year >= Y, "after Y" -> year > Y, bare
/// four-digit tokens -> year == Y). Total function: unrecognizable input
/// yields an absent query with a diagnostic.
inline StructurerResult rule_based_extract(const std::string& nl_query, const Lexicons& lex) {
    AnalyzerConfig plain;
    const TokenStream tokens = tokenize(nl_query, plain);

    std::size_t max_phrase = 1;
    for (const auto& [key, _] : lex.indications) max_phrase = std::max(max_phrase, key.size());
    for (const auto& [key, _] : lex.countries) max_phrase = std::max(max_phrase, key.size());
    for (const auto& [key, _] : lex.age_groups) max_phrase = std::max(max_phrase, key.size());

    const auto is_year = [](const std::string& t) {
        if (t.size() != 4) return false;
        for (char c : t)
            if (c < '0' || c > '9') return false;
        return true;
    };

    StructurerResult result;
    std::vector<Predicate> preds;
    std::size_t i = 0;
    while (i < tokens.size()) {
        if ((tokens[i] == "since" || tokens[i] == "after") && i + 1 < tokens.size() && is_year(tokens[i + 1])) {
            const PredicateOp op = tokens[i] == "since" ? PredicateOp::Gte : PredicateOp::Gt;
            preds.push_back({"year", op, FieldValue(std::stod(tokens[i + 1]))});
            i += 2;
            continue;
        }
        if (is_year(tokens[i])) {
            preds.push_back({"year", PredicateOp::Eq, FieldValue(std::stod(tokens[i]))});
            ++i;
            continue;
        }
        bool matched = false;
        const std::size_t longest = std::min(max_phrase, tokens.size() - i);
        for (std::size_t len = longest; len >= 1 && !matched; --len) {
            const TokenStream slice(tokens.begin() + i, tokens.begin() + i + len);
            if (const auto it = lex.indications.find(slice); it != lex.indications.end()) {
                preds.push_back({"indication", PredicateOp::Eq, FieldValue(it->second)});
            } else if (const auto it = lex.countries.find(slice); it != lex.countries.end()) {
                preds.push_back({"country", PredicateOp::Eq, FieldValue(it->second)});
            } else if (const auto it = lex.age_groups.find(slice); it != lex.age_groups.end()) {
                preds.push_back(it->second);
            } else {
                continue;
            }
            matched = true;
            i += len;
        }
        if (!matched) ++i;
    }

    // Conjunction semantics can hold only one predicate per (field, op);
    // later hits for the same slot are dropped.
    std::vector<Predicate> unique;
    std::set<std::pair<std::string, int>> slots;
    for (Predicate& p : preds) {
        if (!slots.insert({p.field, static_cast<int>(p.op)}).second) {
            result.diagnostics.push_back("ignoring repeated predicate for field '" + p.field + "'");
            continue;
        }
        unique.push_back(std::move(p));
    }

    if (unique.empty()) {
        result.diagnostics.push_back("no entities recognized");
        return result;
    }
    StructuredQuery q;
    q.predicates = std::move(unique);
    detail::canonicalize_predicates(q.predicates);
    q.source = StructuredQuery::Source::Rules;
    result.query = std::move(q);
    return result;
}

// ---------------------------------------------------------------------------
// Prompting
// ---------------------------------------------------------------------------

inline constexpr std::string_view kQuerySchemaBlock =
    "The structured query is a single JSON object. Allowed fields:\n"
    "  \"indication\": string, the disease or condition\n"
    "  \"country\": string, the location\n"
    "  \"age\": number, or {\"$gt\"|\"$gte\"|\"$lt\"|\"$lte\": number}\n"
    "  \"year\": number, or {\"$gt\"|\"$gte\"|\"$lt\"|\"$lte\": number}\n"
    "Example: { \"indication\": \"atopic dermatitis\", \"age\": { \"$gt\": 18 },\n"
    "           \"country\": \"India\", \"year\": { \"$gte\": 2022 } }\n"
    "Omit fields the query does not constrain.";

/// Prompt text with {{query}} and {{schema}} placeholders. The query is
/// substituted as an escaped JSON string literal, so hostile input cannot
/// break out of the schema block.
struct PromptTemplate {
    std::string text;

    static PromptTemplate defaults() {
        return PromptTemplate{
            "You translate document-search requests into a structured query.\n"
            "\n"
            "{{schema}}\n"
            "\n"
            "Respond with ONLY the JSON object, no prose.\n"
            "\n"
            "User query: {{query}}\n"};
    }

    static PromptTemplate load_file(const std::string& path) {
        std::ifstream in(path);
        if (!in) throw Error(ErrorCode::IoError, "cannot open prompt template: " + path);
        std::ostringstream buf;
        buf << in.rdbuf();
        return PromptTemplate{buf.str()};
    }

    std::string render(const std::string& nl_query) const {
        const std::string escaped = nlohmann::json(nl_query).dump();
        std::string out = text;
        const auto replace_all = [&out](std::string_view placeholder, std::string_view with) {
            std::size_t pos = 0;
            while ((pos = out.find(placeholder, pos)) != std::string::npos) {
                out.replace(pos, placeholder.size(), with);
                pos += with.size();
            }
        };
        replace_all("{{schema}}", kQuerySchemaBlock);
        replace_all("{{query}}", escaped);
        return out;
    }
};

/// One-shot text completion against an LLM provider. Throws Error on
/// transport or protocol failure.
class LlmClient {
public:
    virtual ~LlmClient() = default;
    virtual std::string complete(const std::string& prompt) = 0;
};

/// Scans free-form model output for the first balanced {...} that parses as
/// JSON. Tolerates surrounding prose and code fences.
inline std::optional<std::string> extract_first_json_object(std::string_view text) {
    for (std::size_t start = text.find('{'); start != std::string_view::npos;
         start = text.find('{', start + 1)) {
        int depth = 0;
        bool in_string = false;
        bool escaped = false;
        for (std::size_t i = start; i < text.size(); ++i) {
            const char c = text[i];
            if (in_string) {
                if (escaped)
                    escaped = false;
                else if (c == '\\')
                    escaped = true;
                else if (c == '"')
                    in_string = false;
                continue;
            }
            if (c == '"') {
                in_string = true;
            } else if (c == '{') {
                ++depth;
            } else if (c == '}') {
                if (--depth == 0) {
                    std::string candidate(text.substr(start, i - start + 1));
                    if (nlohmann::json::accept(candidate)) return candidate;
                    break;
                }
            }
        }
    }
    return std::nullopt;
}

inline std::set<std::string> structurer_field_whitelist(const Lexicons& lex) {
    std::set<std::string> fields{"indication", "country", "age", "year"};
    fields.insert(lex.extra_fields.begin(), lex.extra_fields.end());
    return fields;
}

/// Prompts the LLM for a structured query and validates the reply. Any
/// failure — provider down, unparseable output, schema violation — falls
/// back to rule_based_extract with the cause recorded; this never throws.
inline StructurerResult llm_structure(LlmClient* client, const std::string& nl_query,
                                      const PromptTemplate& prompt, const Lexicons& lex) {
    const auto fall_back = [&](ErrorCode cause, const std::string& message) {
        StructurerResult result = rule_based_extract(nl_query, lex);
        result.llm_failure = cause;
        result.diagnostics.insert(result.diagnostics.begin(),
                                  std::string(error_code_name(cause)) + ": " + message);
        return result;
    };

    if (!client) return fall_back(ErrorCode::ProviderUnavailable, "no LLM client configured");

    std::string reply;
    try {
        reply = client->complete(prompt.render(nl_query));
    } catch (const Error& e) {
        return fall_back(ErrorCode::ProviderUnavailable, e.what());
    } catch (const std::exception& e) {
        return fall_back(ErrorCode::ProviderUnavailable, e.what());
    }

    const auto object_text = extract_first_json_object(reply);
    if (!object_text) return fall_back(ErrorCode::MalformedOutput, "no JSON object in model output");

    StructuredQuery q;
    try {
        q = parse_structured_query(*object_text);
    } catch (const Error& e) {
        const ErrorCode cause =
            e.code() == ErrorCode::MalformedJson ? ErrorCode::MalformedOutput : ErrorCode::SchemaViolation;
        return fall_back(cause, e.what());
    }

    const std::set<std::string> whitelist = structurer_field_whitelist(lex);
    for (const Predicate& p : q.predicates)
        if (!whitelist.count(p.field))
            return fall_back(ErrorCode::SchemaViolation, "field '" + p.field + "' is not allowed");

    q.source = StructuredQuery::Source::Llm;
    StructurerResult result;
    result.query = std::move(q);
    result.provenance = StructurerResult::Provenance::Llm;
    return result;
}

}  // namespace trifuse
