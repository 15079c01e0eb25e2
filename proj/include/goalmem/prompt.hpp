#pragma once

#include <filesystem>
#include <fstream>
#include <map>
#include <optional>
#include <regex>
#include <set>
#include <sstream>
#include <stdexcept>
#include <string>
#include <variant>
#include <vector>

#include <yaml-cpp/yaml.h>

#include "goalmem/text.hpp"

namespace goalmem {

using PromptValue = std::variant<std::string, std::vector<std::string>>;
using PromptValues = std::map<std::string, PromptValue>;

struct FewShot {
    PromptValues input;
    std::string output;
};

/// A chat prompt: system text, an input template and worked examples.
///
/// Template syntax:
///   {{NAME}}                        value substituted verbatim
///   {{ NAME|join('\n') }}           list joined by newlines
///   {% if NAME %} ... {% endif %}   dropped when NAME is absent or empty
/// A tag alone on its line removes the whole line.
struct PromptTemplate {
    std::string name;
    std::string system;
    std::string input_template;
    std::vector<FewShot> few_shots;
    /// Literal labels of the expected output format.
    std::vector<std::string> output_labels;
};

struct RenderedPrompt {
    std::string system;
    std::string user;

    std::string text() const { return system + "\n\n" + user; }
};

class PromptError : public std::runtime_error {
public:
    enum class Kind { MissingPlaceholder, UnbalancedBlock, BadTemplate };

    PromptError(Kind kind, std::string name)
        : std::runtime_error(describe(kind, name)), kind_(kind), name_(std::move(name))
    {
    }

    Kind kind() const { return kind_; }
    const std::string& name() const { return name_; }

private:
    static std::string describe(Kind kind, const std::string& name)
    {
        switch (kind) {
        case Kind::MissingPlaceholder:
            return "missing placeholder: " + name;
        case Kind::UnbalancedBlock:
            return "unbalanced optional block in template " + name;
        case Kind::BadTemplate:
            return "bad template: " + name;
        }
        return name;
    }

    Kind kind_;
    std::string name_;
};

namespace detail {

inline bool value_present(const PromptValues& values, const std::string& name)
{
    auto it = values.find(name);
    if (it == values.end()) {
        return false;
    }
    if (const auto* s = std::get_if<std::string>(&it->second)) {
        return !text::trim_view(*s).empty();
    }
    return !std::get<std::vector<std::string>>(it->second).empty();
}

inline std::string value_text(const PromptValue& v, const std::string& sep)
{
    if (const auto* s = std::get_if<std::string>(&v)) {
        return *s;
    }
    return text::join(std::get<std::vector<std::string>>(v), sep);
}

/// Decodes the separator argument of a join filter ('\n' escapes allowed).
inline std::string join_separator(const std::string& arg)
{
    std::string out;
    for (std::size_t i = 0; i < arg.size(); ++i) {
        if (arg[i] == '\\' && i + 1 < arg.size()) {
            char n = arg[++i];
            out += n == 'n' ? '\n' : n == 't' ? '\t' : n;
        } else {
            out += arg[i];
        }
    }
    return out;
}

/// Removes `{% if %}` / `{% endif %}` tags; drops the enclosed text when the
/// guard value is missing. Tags alone on a line take the line with them.
inline std::string resolve_blocks(const std::string& tpl, const PromptValues& values,
                                  const std::string& template_name)
{
    static const std::regex tag(R"(\{%-?\s*(if\s+([A-Za-z_][A-Za-z0-9_]*)|endif)\s*-?%\})");
    std::string out;
    std::vector<bool> keep_stack;
    auto keeping = [&] {
        for (bool k : keep_stack) {
            if (!k) {
                return false;
            }
        }
        return true;
    };
    std::size_t pos = 0;
    for (auto it = std::sregex_iterator(tpl.begin(), tpl.end(), tag); it != std::sregex_iterator(); ++it) {
        auto start = static_cast<std::size_t>(it->position(0));
        auto end = start + static_cast<std::size_t>(it->length(0));
        // Whole-line tag: swallow the leading indentation and trailing newline.
        std::size_t line_start = 0;
        if (start > 0) {
            auto nl = tpl.rfind('\n', start - 1);
            line_start = nl == std::string::npos ? 0 : nl + 1;
        }
        bool alone_before = text::trim_view(std::string_view(tpl).substr(line_start, start - line_start)).empty();
        auto line_end = tpl.find('\n', end);
        auto after = std::string_view(tpl).substr(end, (line_end == std::string::npos ? tpl.size() : line_end) - end);
        bool alone_after = text::trim_view(after).empty();
        std::size_t cut_from = start;
        std::size_t resume = end;
        if (alone_before && alone_after) {
            cut_from = line_start < pos ? pos : line_start;
            resume = line_end == std::string::npos ? tpl.size() : line_end + 1;
        }
        if (keeping()) {
            out.append(tpl, pos, cut_from - pos);
        }
        if ((*it)[2].matched) {
            keep_stack.push_back(value_present(values, (*it)[2].str()));
        } else {
            if (keep_stack.empty()) {
                throw PromptError(PromptError::Kind::UnbalancedBlock, template_name);
            }
            keep_stack.pop_back();
        }
        pos = resume;
    }
    if (!keep_stack.empty()) {
        throw PromptError(PromptError::Kind::UnbalancedBlock, template_name);
    }
    if (pos < tpl.size()) {
        out.append(tpl, pos, std::string::npos);
    }
    return out;
}

inline std::string substitute(const std::string& tpl, const PromptValues& values)
{
    static const std::regex ph(
        R"(\{\{\s*([A-Za-z_][A-Za-z0-9_]*)\s*(\|\s*join\(\s*'((?:[^'\\]|\\.)*)'\s*\))?\s*\}\})");
    std::string out;
    std::size_t pos = 0;
    for (auto it = std::sregex_iterator(tpl.begin(), tpl.end(), ph); it != std::sregex_iterator(); ++it) {
        auto start = static_cast<std::size_t>(it->position(0));
        out.append(tpl, pos, start - pos);
        auto name = (*it)[1].str();
        auto v = values.find(name);
        if (v == values.end()) {
            throw PromptError(PromptError::Kind::MissingPlaceholder, name);
        }
        out += value_text(v->second, (*it)[2].matched ? join_separator((*it)[3].str()) : "\n");
        pos = start + static_cast<std::size_t>(it->length(0));
    }
    out.append(tpl, pos, std::string::npos);
    return out;
}

}  // namespace detail

/// Renders only the input template.
inline std::string render_input(const PromptTemplate& tpl, const PromptValues& values)
{
    return detail::substitute(detail::resolve_blocks(tpl.input_template, values, tpl.name), values);
}

/// Few-shot examples in order, then the live input.
inline RenderedPrompt render_prompt(const PromptTemplate& tpl, const PromptValues& values)
{
    RenderedPrompt p;
    p.system = tpl.system;
    for (std::size_t i = 0; i < tpl.few_shots.size(); ++i) {
        auto n = std::to_string(i + 1);
        p.user += "### Example " + n + " input\n" + render_input(tpl, tpl.few_shots[i].input) + "\n";
        p.user += "### Example " + n + " output\n" + tpl.few_shots[i].output + "\n\n";
    }
    if (!tpl.few_shots.empty()) {
        p.user += "### Your input\n";
    }
    p.user += render_input(tpl, values);
    return p;
}

/// Placeholder names used outside any optional block.
inline std::set<std::string> required_placeholders(const PromptTemplate& tpl)
{
    PromptValues none;
    // Drop every optional block, then collect what is left.
    auto stripped = detail::resolve_blocks(tpl.input_template, none, tpl.name);
    static const std::regex ph(R"(\{\{\s*([A-Za-z_][A-Za-z0-9_]*))");
    std::set<std::string> out;
    for (auto it = std::sregex_iterator(stripped.begin(), stripped.end(), ph); it != std::sregex_iterator();
         ++it) {
        out.insert((*it)[1].str());
    }
    return out;
}

// ---------------------------------------------------------------------------
// YAML loading

inline PromptValues values_from_yaml(const YAML::Node& node)
{
    PromptValues values;
    if (!node || !node.IsMap()) {
        return values;
    }
    for (const auto& kv : node) {
        auto key = kv.first.as<std::string>();
        if (kv.second.IsSequence()) {
            std::vector<std::string> items;
            for (const auto& item : kv.second) {
                items.push_back(item.as<std::string>());
            }
            values[key] = std::move(items);
        } else {
            values[key] = kv.second.as<std::string>();
        }
    }
    return values;
}

/// Keys: system, input_template (or input_template_commonsense), few-shot
/// (list of {input, output}), output_labels.
inline PromptTemplate template_from_yaml(const std::string& yaml_text, const std::string& name)
{
    PromptTemplate tpl;
    tpl.name = name;
    YAML::Node root;
    try {
        root = YAML::Load(yaml_text);
    } catch (const YAML::Exception& e) {
        throw PromptError(PromptError::Kind::BadTemplate, name + ": " + e.what());
    }
    if (!root["system"] || !(root["input_template"] || root["input_template_commonsense"])) {
        throw PromptError(PromptError::Kind::BadTemplate, name + ": needs system and input_template");
    }
    tpl.system = root["system"].as<std::string>();
    tpl.input_template = root["input_template"] ? root["input_template"].as<std::string>()
                                                : root["input_template_commonsense"].as<std::string>();
    if (const auto shots = root["few-shot"]) {
        for (const auto& shot : shots) {
            tpl.few_shots.push_back({values_from_yaml(shot["input"]), shot["output"].as<std::string>()});
        }
    }
    if (const auto labels = root["output_labels"]) {
        for (const auto& l : labels) {
            tpl.output_labels.push_back(l.as<std::string>());
        }
    }
    return tpl;
}

inline PromptTemplate load_template_file(const std::filesystem::path& path)
{
    std::ifstream in(path);
    if (!in) {
        throw PromptError(PromptError::Kind::BadTemplate, "cannot read " + path.string());
    }
    std::stringstream ss;
    ss << in.rdbuf();
    return template_from_yaml(ss.str(), path.stem().string());
}

}  // namespace goalmem
