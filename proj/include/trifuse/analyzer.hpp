#pragma once

#include <algorithm>
#include <cstdint>
#include <fstream>
#include <map>
#include <set>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "trifuse/error.hpp"

namespace trifuse {

/// Ordered sequence of normalized tokens. Tokens are non-empty and never
/// contain whitespace.
using TokenStream = std::vector<std::string>;

/// Tokenization and query-expansion settings, shared by the keyword path and
/// the hashed test embedder.
///
/// Synonym table keys and values are already-normalized token sequences; use
/// load_synonym_table / phrase_tokens to build them.
struct AnalyzerConfig {
    bool lowercase = true;
    bool strip_punctuation = true;
    std::set<std::string> stopwords;
    std::map<TokenStream, std::vector<TokenStream>> synonym_table;
};

// ---------------------------------------------------------------------------
// String helpers
// ---------------------------------------------------------------------------

namespace detail {

inline bool is_ascii_space(unsigned char c) {
    return c == ' ' || (c >= 0x09 && c <= 0x0d);
}

}  // namespace detail

/// Removes leading/trailing ASCII whitespace.
inline std::string trim_copy(std::string_view s) {
    std::size_t b = 0, e = s.size();
    while (b < e && detail::is_ascii_space(static_cast<unsigned char>(s[b]))) ++b;
    while (e > b && detail::is_ascii_space(static_cast<unsigned char>(s[e - 1]))) --e;
    return std::string(s.substr(b, e - b));
}

inline std::string ascii_lower_copy(std::string_view s) {
    std::string out(s);
    for (char& c : out)
        if (c >= 'A' && c <= 'Z') c = static_cast<char>(c - 'A' + 'a');
    return out;
}

/// Comparison key for case-insensitive string fields: trimmed and
/// ASCII-case-folded. Input is assumed already composition-normalized.
inline std::string fold_key(std::string_view s) { return ascii_lower_copy(trim_copy(s)); }

// ---------------------------------------------------------------------------
// Tokenization
// ---------------------------------------------------------------------------

namespace detail {

/// Decodes the UTF-8 code point starting at i and advances i past it.
/// Invalid sequences decode one byte at a time as U+FFFD.
inline std::uint32_t next_code_point(std::string_view s, std::size_t& i) {
    const auto byte = [&](std::size_t k) { return static_cast<std::uint32_t>(static_cast<unsigned char>(s[k])); };
    const std::uint32_t b0 = byte(i);
    if (b0 < 0x80) {
        ++i;
        return b0;
    }
    std::size_t len = 0;
    std::uint32_t cp = 0;
    if ((b0 & 0xe0) == 0xc0) {
        len = 2;
        cp = b0 & 0x1f;
    } else if ((b0 & 0xf0) == 0xe0) {
        len = 3;
        cp = b0 & 0x0f;
    } else if ((b0 & 0xf8) == 0xf0) {
        len = 4;
        cp = b0 & 0x07;
    } else {
        ++i;
        return 0xfffd;
    }
    if (i + len > s.size()) {
        ++i;
        return 0xfffd;
    }
    for (std::size_t k = 1; k < len; ++k) {
        if ((byte(i + k) & 0xc0) != 0x80) {
            ++i;
            return 0xfffd;
        }
        cp = (cp << 6) | (byte(i + k) & 0x3f);
    }
    i += len;
    return cp;
}

inline bool is_space_cp(std::uint32_t cp) {
    if (cp == ' ' || (cp >= 0x09 && cp <= 0x0d)) return true;
    switch (cp) {
        case 0x85:
        case 0xa0:
        case 0x1680:
        case 0x2028:
        case 0x2029:
        case 0x202f:
        case 0x205f:
        case 0x3000:
            return true;
        default:
            return cp >= 0x2000 && cp <= 0x200a;
    }
}

inline bool is_punct_cp(std::uint32_t cp) {
    if (cp < 0x80) {
        return (cp >= 0x21 && cp <= 0x2f) || (cp >= 0x3a && cp <= 0x40) ||
               (cp >= 0x5b && cp <= 0x60) || (cp >= 0x7b && cp <= 0x7e);
    }
    // Common non-ASCII punctuation: general punctuation block, inverted
    // marks, guillemets, CJK and fullwidth forms.
    if (cp >= 0x2010 && cp <= 0x2027) return true;
    if (cp >= 0x2030 && cp <= 0x205e) return true;
    switch (cp) {
        case 0xa1:
        case 0xa7:
        case 0xab:
        case 0xb6:
        case 0xb7:
        case 0xbb:
        case 0xbf:
        case 0x3001:
        case 0x3002:
            return true;
        default:
            break;
    }
    if (cp >= 0xff01 && cp <= 0xff0f) return true;
    if (cp >= 0xff1a && cp <= 0xff20) return true;
    if (cp >= 0xff3b && cp <= 0xff40) return true;
    if (cp >= 0xff5b && cp <= 0xff65) return true;
    return false;
}

inline void append_code_point(std::string& out, std::string_view src, std::size_t from, std::size_t to,
                              bool lowercase) {
    for (std::size_t k = from; k < to; ++k) {
        char c = src[k];
        if (lowercase && c >= 'A' && c <= 'Z') c = static_cast<char>(c - 'A' + 'a');
        out.push_back(c);
    }
}

}  // namespace detail

/// Splits text on Unicode whitespace (always) and punctuation (when
/// strip_punctuation is set), lowercases ASCII letters per config, and drops
/// stopwords. Token order follows the input; empty text yields an empty
/// stream.
inline TokenStream tokenize(std::string_view text, const AnalyzerConfig& config) {
    TokenStream out;
    std::string current;
    const auto flush = [&] {
        if (!current.empty() && config.stopwords.find(current) == config.stopwords.end())
            out.push_back(current);
        current.clear();
    };
    std::size_t i = 0;
    while (i < text.size()) {
        const std::size_t start = i;
        const std::uint32_t cp = detail::next_code_point(text, i);
        const bool boundary =
            detail::is_space_cp(cp) || (config.strip_punctuation && detail::is_punct_cp(cp));
        if (boundary) {
            flush();
        } else {
            detail::append_code_point(current, text, start, i, config.lowercase);
        }
    }
    flush();
    return out;
}

/// Parses a space-joined phrase into a normalized token sequence using the
/// config's casing/punctuation rules (stopwords and synonyms do not apply).
inline TokenStream phrase_tokens(std::string_view phrase, const AnalyzerConfig& config) {
    AnalyzerConfig plain;
    plain.lowercase = config.lowercase;
    plain.strip_punctuation = config.strip_punctuation;
    return tokenize(phrase, plain);
}

inline std::string join_tokens(const TokenStream& tokens) {
    std::string out;
    for (std::size_t i = 0; i < tokens.size(); ++i) {
        if (i) out.push_back(' ');
        out += tokens[i];
    }
    return out;
}

// ---------------------------------------------------------------------------
// Query expansion
// ---------------------------------------------------------------------------

/// Replaces every non-overlapping occurrence of `from` in `in` with `to`,
/// scanning left to right.
inline TokenStream substitute_all(const TokenStream& in, const TokenStream& from, const TokenStream& to) {
    if (from.empty()) return in;
    TokenStream out;
    out.reserve(in.size());
    std::size_t i = 0;
    while (i < in.size()) {
        if (i + from.size() <= in.size() && std::equal(from.begin(), from.end(), in.begin() + i)) {
            out.insert(out.end(), to.begin(), to.end());
            i += from.size();
        } else {
            out.push_back(in[i]);
            ++i;
        }
    }
    return out;
}

inline bool contains_phrase(const TokenStream& tokens, const TokenStream& phrase) {
    if (phrase.empty() || phrase.size() > tokens.size()) return false;
    for (std::size_t i = 0; i + phrase.size() <= tokens.size(); ++i)
        if (std::equal(phrase.begin(), phrase.end(), tokens.begin() + i)) return true;
    return false;
}

/// Returns the original stream plus one variant per applicable synonym rule.
/// Each variant substitutes all non-overlapping occurrences of that rule's
/// key with one of its replacements; rules never combine within a variant.
/// With an empty table the result is exactly {tokens}.
inline std::vector<TokenStream> expand_query(const TokenStream& tokens, const AnalyzerConfig& config) {
    std::vector<TokenStream> out;
    out.push_back(tokens);
    for (const auto& [key, replacements] : config.synonym_table) {
        if (!contains_phrase(tokens, key)) continue;
        for (const auto& replacement : replacements) {
            TokenStream variant = substitute_all(tokens, key, replacement);
            if (std::find(out.begin(), out.end(), variant) == out.end()) out.push_back(std::move(variant));
        }
    }
    return out;
}

/// Maps synonym variants back to their canonical form: every occurrence of a
/// replacement sequence becomes its rule's key sequence. Rules apply in
/// sorted key order, so the result is deterministic.
inline TokenStream canonicalize_tokens(const TokenStream& tokens, const AnalyzerConfig& config) {
    TokenStream out = tokens;
    for (const auto& [key, replacements] : config.synonym_table)
        for (const auto& replacement : replacements)
            if (!replacement.empty()) out = substitute_all(out, replacement, key);
    return out;
}

// ---------------------------------------------------------------------------
// Config files
// ---------------------------------------------------------------------------

/// Synonym file: JSON object mapping a space-joined phrase to an array of
/// space-joined phrases, e.g. {"lung cancer": ["lung carcinoma"]}.
inline std::map<TokenStream, std::vector<TokenStream>> load_synonym_table(const std::string& path,
                                                                          const AnalyzerConfig& config) {
    std::ifstream in(path);
    if (!in) throw Error(ErrorCode::IoError, "cannot open synonym file: " + path);
    nlohmann::json j;
    try {
        in >> j;
    } catch (const std::exception& e) {
        throw Error(ErrorCode::MalformedJson, "synonym file " + path + ": " + e.what());
    }
    if (!j.is_object()) throw Error(ErrorCode::MalformedJson, "synonym file must be a JSON object");
    std::map<TokenStream, std::vector<TokenStream>> table;
    for (const auto& [phrase, repls] : j.items()) {
        if (!repls.is_array())
            throw Error(ErrorCode::MalformedJson, "synonym entry for '" + phrase + "' must be an array");
        TokenStream key = phrase_tokens(phrase, config);
        if (key.empty()) continue;
        std::vector<TokenStream> values;
        for (const auto& r : repls) {
            if (!r.is_string())
                throw Error(ErrorCode::MalformedJson, "synonym replacements must be strings");
            values.push_back(phrase_tokens(r.get<std::string>(), config));
        }
        table[std::move(key)] = std::move(values);
    }
    return table;
}

/// Stopword file: one token per line; blank lines ignored.
inline std::set<std::string> load_stopwords(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw Error(ErrorCode::IoError, "cannot open stopword file: " + path);
    std::set<std::string> words;
    std::string line;
    while (std::getline(in, line)) {
        std::string w = trim_copy(line);
        if (!w.empty()) words.insert(std::move(w));
    }
    return words;
}

}  // namespace trifuse
