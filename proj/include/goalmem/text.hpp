#pragma once

#include <algorithm>
#include <cctype>
#include <cstddef>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace goalmem::text {

inline bool is_space(char c) { return std::isspace(static_cast<unsigned char>(c)) != 0; }

inline bool is_word_byte(char c)
{
    auto u = static_cast<unsigned char>(c);
    // Non-ASCII bytes belong to UTF-8 sequences and stay inside words.
    return u >= 0x80 || std::isalnum(u) != 0;
}

inline std::string to_lower(std::string_view s)
{
    std::string out(s);
    std::transform(out.begin(), out.end(), out.begin(),
                   [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
    return out;
}

inline std::string_view trim_view(std::string_view s)
{
    std::size_t b = 0;
    std::size_t e = s.size();
    while (b < e && is_space(s[b])) {
        ++b;
    }
    while (e > b && is_space(s[e - 1])) {
        --e;
    }
    return s.substr(b, e - b);
}

inline std::string trim(std::string_view s) { return std::string(trim_view(s)); }

inline bool starts_with_icase(std::string_view s, std::string_view prefix)
{
    if (s.size() < prefix.size()) {
        return false;
    }
    for (std::size_t i = 0; i < prefix.size(); ++i) {
        if (std::tolower(static_cast<unsigned char>(s[i]))
            != std::tolower(static_cast<unsigned char>(prefix[i]))) {
            return false;
        }
    }
    return true;
}

inline bool iequals(std::string_view a, std::string_view b)
{
    return a.size() == b.size() && starts_with_icase(a, b);
}

inline std::vector<std::string> split_lines(std::string_view s)
{
    std::vector<std::string> lines;
    std::size_t start = 0;
    while (start <= s.size()) {
        auto nl = s.find('\n', start);
        if (nl == std::string_view::npos) {
            nl = s.size();
        }
        auto line = s.substr(start, nl - start);
        if (!line.empty() && line.back() == '\r') {
            line.remove_suffix(1);
        }
        lines.emplace_back(line);
        start = nl + 1;
    }
    return lines;
}

inline std::vector<std::string> split(std::string_view s, char sep)
{
    std::vector<std::string> parts;
    std::size_t start = 0;
    while (true) {
        auto pos = s.find(sep, start);
        if (pos == std::string_view::npos) {
            parts.emplace_back(s.substr(start));
            break;
        }
        parts.emplace_back(s.substr(start, pos - start));
        start = pos + 1;
    }
    return parts;
}

inline std::string join(const std::vector<std::string>& parts, std::string_view sep)
{
    std::string out;
    for (std::size_t i = 0; i < parts.size(); ++i) {
        if (i != 0) {
            out += sep;
        }
        out += parts[i];
    }
    return out;
}

/// Lowercased alphanumeric runs; every other byte separates tokens.
inline std::vector<std::string> tokenize(std::string_view s)
{
    std::vector<std::string> tokens;
    std::string current;
    for (char c : s) {
        if (is_word_byte(c)) {
            current.push_back(static_cast<char>(std::tolower(static_cast<unsigned char>(c))));
        } else if (!current.empty()) {
            tokens.push_back(std::move(current));
            current.clear();
        }
    }
    if (!current.empty()) {
        tokens.push_back(std::move(current));
    }
    return tokens;
}

inline std::string collapse_whitespace(std::string_view s)
{
    std::string out;
    bool pending = false;
    for (char c : s) {
        if (is_space(c)) {
            pending = !out.empty();
            continue;
        }
        if (pending) {
            out.push_back(' ');
            pending = false;
        }
        out.push_back(c);
    }
    return out;
}

inline bool is_terminal_punct(char c)
{
    return c == '.' || c == ',' || c == '!' || c == '?' || c == ';' || c == ':';
}

inline std::string strip_terminal_punct(std::string s)
{
    while (!s.empty() && (is_terminal_punct(s.back()) || is_space(s.back()))) {
        s.pop_back();
    }
    return s;
}

/// Replaces every `(name:type)` group by `name` and every `(name)` group by
/// `name`. Unbalanced parentheses are dropped.
inline std::string strip_slot_markers(std::string_view s)
{
    std::string out;
    out.reserve(s.size());
    std::size_t i = 0;
    while (i < s.size()) {
        if (s[i] == '(') {
            auto close = s.find(')', i + 1);
            if (close == std::string_view::npos) {
                ++i;
                continue;
            }
            auto inner = s.substr(i + 1, close - i - 1);
            auto colon = inner.find(':');
            out += trim_view(colon == std::string_view::npos ? inner : inner.substr(0, colon));
            i = close + 1;
        } else if (s[i] == ')') {
            ++i;
        } else {
            out.push_back(s[i]);
            ++i;
        }
    }
    return out;
}

/// Matching key used by the oracle judgments: lowercase, bare slot names,
/// collapsed whitespace, no terminal punctuation.
inline std::string normalize_for_match(std::string_view s)
{
    return strip_terminal_punct(collapse_whitespace(to_lower(strip_slot_markers(s))));
}

/// Identity key for subgoals and scripted lookups. Keeps slot markers and
/// type labels so that differently typed subgoals stay distinct.
inline std::string canonical_key(std::string_view s)
{
    return strip_terminal_punct(collapse_whitespace(to_lower(s)));
}

/// A labeled block of an LLM-style structured output, e.g.
/// `Subgoals:` followed by bullet lines.
struct Section {
    std::string label;
    std::string inline_text;         // text after "Label:" on the same line
    std::vector<std::string> lines;  // following lines until the next label
};

/// Splits `s` into sections keyed by the first matching label in `labels`.
/// Labels are matched case-insensitively at line start (leading whitespace
/// ignored). Lines before the first label are discarded. Longer labels are
/// tried first so that "Refined Subgoals" wins over "Subgoals".
inline std::map<std::string, Section> split_sections(std::string_view s,
                                                     std::vector<std::string> labels)
{
    std::sort(labels.begin(), labels.end(),
              [](const auto& a, const auto& b) { return a.size() > b.size(); });
    std::map<std::string, Section> sections;
    Section* current = nullptr;
    for (auto& raw : split_lines(s)) {
        auto line = trim_view(raw);
        const std::string* hit = nullptr;
        for (const auto& label : labels) {
            if (starts_with_icase(line, label) && line.size() > label.size()
                && line[label.size()] == ':') {
                hit = &label;
                break;
            }
        }
        if (hit != nullptr) {
            if (sections.contains(*hit)) {
                // Repeated label: keep the first block, skip the duplicate.
                current = nullptr;
                continue;
            }
            Section sec;
            sec.label = *hit;
            sec.inline_text = trim(line.substr(hit->size() + 1));
            current = &sections.emplace(*hit, std::move(sec)).first->second;
            continue;
        }
        if (current != nullptr) {
            current->lines.emplace_back(raw);
        }
    }
    return sections;
}

/// Returns the bullet payloads (`- item`) of a section. Blank lines are
/// skipped; a non-bullet line yields std::nullopt for that line so callers can
/// report it.
inline std::vector<std::optional<std::string>> bullets(const Section& sec)
{
    std::vector<std::optional<std::string>> out;
    for (const auto& raw : sec.lines) {
        auto line = trim_view(raw);
        if (line.empty()) {
            continue;
        }
        if (line.size() >= 2 && line[0] == '-' && is_space(line[1])) {
            out.emplace_back(trim(line.substr(2)));
        } else if (line == "-") {
            out.emplace_back(std::string{});
        } else {
            out.emplace_back(std::nullopt);
        }
    }
    return out;
}

/// Section text with continuation lines appended (joined by newlines,
/// trailing blank lines dropped).
inline std::string block_text(const Section& sec)
{
    std::string out = sec.inline_text;
    std::vector<std::string> rest(sec.lines.begin(), sec.lines.end());
    while (!rest.empty() && trim_view(rest.back()).empty()) {
        rest.pop_back();
    }
    for (const auto& l : rest) {
        out += '\n';
        out += l;
    }
    return out;
}

inline bool is_none_marker(std::string_view s)
{
    auto t = trim_view(s);
    while (!t.empty() && (t.front() == '"' || t.front() == '\'')) {
        t.remove_prefix(1);
    }
    while (!t.empty() && (t.back() == '"' || t.back() == '\'' || t.back() == '.')) {
        t.remove_suffix(1);
    }
    return iequals(t, "none");
}

}  // namespace goalmem::text
