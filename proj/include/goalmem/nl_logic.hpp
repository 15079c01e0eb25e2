#pragma once

#include <cstddef>
#include <functional>
#include <map>
#include <optional>
#include <regex>
#include <set>
#include <stdexcept>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include "goalmem/text.hpp"

namespace goalmem {

enum class TermKind { variable, constant };

struct TypedTerm {
    TermKind kind = TermKind::constant;
    std::string name;
    std::optional<std::string> type_label;

    bool is_variable() const { return kind == TermKind::variable; }
    bool operator==(const TypedTerm&) const = default;
};

inline TypedTerm make_variable(std::string name, std::string type_label)
{
    return {TermKind::variable, std::move(name), std::move(type_label)};
}

inline TypedTerm make_constant(std::string name, std::optional<std::string> type_label = {})
{
    return {TermKind::constant, std::move(name), std::move(type_label)};
}

/// `(name:type)` or `(name)`.
inline std::string render_term(const TypedTerm& t)
{
    std::string out = "(";
    out += t.name;
    if (t.type_label) {
        out += ':';
        out += *t.type_label;
    }
    out += ')';
    return out;
}

struct Slot {
    std::size_t offset = 0;
    std::size_t length = 0;
    TypedTerm term;

    bool operator==(const Slot&) const = default;
};

class FormulaError : public std::runtime_error {
public:
    enum class Kind { Empty, UnbalancedParens, EmptySlotName, OverlappingSlots, InvalidName };

    FormulaError(Kind kind, std::size_t position, const std::string& what)
        : std::runtime_error(what), kind_(kind), position_(position)
    {
    }

    Kind kind() const { return kind_; }
    std::size_t position() const { return position_; }

private:
    Kind kind_;
    std::size_t position_;
};

inline bool valid_term_name(std::string_view name)
{
    return name.find_first_of("():") == std::string_view::npos && !text::trim_view(name).empty();
}

using FormulaPiece = std::variant<std::string, TypedTerm>;

/// Surface text plus the byte spans of its typed argument slots. Text outside
/// the slots is the relational phrase and is kept verbatim.
class AtomicFormula {
public:
    AtomicFormula() = default;

    /// Builds a formula from literal text runs and terms. Throws
    /// FormulaError(InvalidName) for names or types that contain `(`, `)` or
    /// `:` (no escape syntax exists) and for literal runs with parentheses.
    static AtomicFormula from_pieces(const std::vector<FormulaPiece>& pieces)
    {
        AtomicFormula f;
        for (const auto& piece : pieces) {
            if (const auto* lit = std::get_if<std::string>(&piece)) {
                if (lit->find_first_of("()") != std::string::npos) {
                    throw FormulaError(FormulaError::Kind::InvalidName, f.surface_.size(),
                                       "literal text contains a parenthesis: " + *lit);
                }
                f.surface_ += *lit;
                continue;
            }
            const auto& term = std::get<TypedTerm>(piece);
            if (!valid_term_name(term.name)) {
                throw FormulaError(FormulaError::Kind::InvalidName, f.surface_.size(),
                                   "invalid term name: " + term.name);
            }
            if (term.type_label && !valid_term_name(*term.type_label)) {
                throw FormulaError(FormulaError::Kind::InvalidName, f.surface_.size(),
                                   "invalid type label: " + *term.type_label);
            }
            if (term.is_variable() && !term.type_label) {
                throw FormulaError(FormulaError::Kind::InvalidName, f.surface_.size(),
                                   "variable without type: " + term.name);
            }
            auto rendered = render_term(term);
            f.slots_.push_back({f.surface_.size(), rendered.size(), term});
            f.surface_ += rendered;
        }
        return f;
    }

    const std::string& surface() const { return surface_; }
    const std::vector<Slot>& slots() const { return slots_; }

    std::vector<FormulaPiece> pieces() const
    {
        std::vector<FormulaPiece> out;
        std::size_t pos = 0;
        for (const auto& s : slots_) {
            if (s.offset > pos) {
                out.emplace_back(surface_.substr(pos, s.offset - pos));
            }
            out.emplace_back(s.term);
            pos = s.offset + s.length;
        }
        if (pos < surface_.size()) {
            out.emplace_back(surface_.substr(pos));
        }
        return out;
    }

    bool is_ground() const
    {
        for (const auto& s : slots_) {
            if (s.term.is_variable()) {
                return false;
            }
        }
        return true;
    }

    std::size_t variable_count() const
    {
        std::size_t n = 0;
        for (const auto& s : slots_) {
            n += s.term.is_variable() ? 1 : 0;
        }
        return n;
    }

    bool operator==(const AtomicFormula&) const = default;

private:
    friend AtomicFormula parse_formula(std::string_view, const std::set<std::string>&);

    std::string surface_;
    std::vector<Slot> slots_;
};

inline bool looks_like_variable(std::string_view name)
{
    static const std::regex pattern("^[a-z]{1,3}$");
    return std::regex_match(name.begin(), name.end(), pattern);
}

/// Parses NL-Logic text. `declared` names are treated as variables inside
/// typed slots in addition to the short-lowercase convention.
inline AtomicFormula parse_formula(std::string_view input,
                                   const std::set<std::string>& declared = {})
{
    using K = FormulaError::Kind;
    if (text::trim_view(input).empty()) {
        throw FormulaError(K::Empty, 0, "empty formula");
    }
    AtomicFormula f;
    f.surface_ = std::string(input);
    std::size_t i = 0;
    while (i < input.size()) {
        char c = input[i];
        if (c == ')') {
            throw FormulaError(K::UnbalancedParens, i, "unmatched ')' at byte " + std::to_string(i));
        }
        if (c != '(') {
            ++i;
            continue;
        }
        std::size_t close = std::string_view::npos;
        for (std::size_t j = i + 1; j < input.size(); ++j) {
            if (input[j] == '(') {
                throw FormulaError(K::OverlappingSlots, j,
                                   "nested slot at byte " + std::to_string(j));
            }
            if (input[j] == ')') {
                close = j;
                break;
            }
        }
        if (close == std::string_view::npos) {
            throw FormulaError(K::UnbalancedParens, i, "unclosed '(' at byte " + std::to_string(i));
        }
        auto inner = input.substr(i + 1, close - i - 1);
        auto colon = inner.find(':');
        TypedTerm term;
        term.name = std::string(colon == std::string_view::npos ? inner : inner.substr(0, colon));
        if (text::trim_view(term.name).empty()) {
            throw FormulaError(K::EmptySlotName, i, "empty slot name at byte " + std::to_string(i));
        }
        if (colon != std::string_view::npos) {
            auto type = inner.substr(colon + 1);
            if (type.find(':') != std::string_view::npos || text::trim_view(type).empty()) {
                throw FormulaError(K::InvalidName, i,
                                   "malformed type in slot at byte " + std::to_string(i));
            }
            term.type_label = std::string(type);
            bool var = looks_like_variable(term.name) || declared.contains(term.name);
            term.kind = var ? TermKind::variable : TermKind::constant;
        }
        f.slots_.push_back({i, close + 1 - i, std::move(term)});
        i = close + 1;
    }
    return f;
}

inline std::string render_formula(const AtomicFormula& f)
{
    std::string out;
    for (const auto& piece : f.pieces()) {
        if (const auto* lit = std::get_if<std::string>(&piece)) {
            out += *lit;
        } else {
            out += render_term(std::get<TypedTerm>(piece));
        }
    }
    return out;
}

struct FreeVariable {
    std::string name;
    std::string type_label;

    bool operator==(const FreeVariable&) const = default;
};

inline std::vector<FreeVariable> free_variables(const AtomicFormula& f)
{
    std::vector<FreeVariable> out;
    std::set<std::string> seen;
    for (const auto& s : f.slots()) {
        if (s.term.is_variable() && seen.insert(s.term.name).second) {
            out.push_back({s.term.name, s.term.type_label.value_or("")});
        }
    }
    return out;
}

struct Binding {
    std::string constant;
    std::optional<std::string> type_label;

    bool operator==(const Binding&) const = default;
};

/// Variable -> constant map. A variable is bound at most once.
class Substitution {
public:
    Substitution() = default;

    /// Returns false (and leaves the map untouched) when `var` is already
    /// bound.
    bool bind(const std::string& var, Binding b)
    {
        if (var.empty() || b.constant.empty()) {
            throw std::invalid_argument("substitution needs a variable and a constant");
        }
        return bindings_.emplace(var, std::move(b)).second;
    }

    bool bind(const std::string& var, std::string constant)
    {
        return bind(var, Binding{std::move(constant), std::nullopt});
    }

    const Binding* find(const std::string& var) const
    {
        auto it = bindings_.find(var);
        return it == bindings_.end() ? nullptr : &it->second;
    }

    bool contains(const std::string& var) const { return bindings_.contains(var); }
    bool empty() const { return bindings_.empty(); }
    std::size_t size() const { return bindings_.size(); }
    const std::map<std::string, Binding>& bindings() const { return bindings_; }

    bool operator==(const Substitution&) const = default;

private:
    std::map<std::string, Binding> bindings_;
};

/// `x / a, y / b` (no braces). Empty substitution renders as "".
inline std::string render_bindings(const Substitution& s)
{
    std::string out;
    for (const auto& [var, b] : s.bindings()) {
        if (!out.empty()) {
            out += ", ";
        }
        out += var + " / " + b.constant;
    }
    return out;
}

inline std::string render_substitution(const Substitution& s)
{
    return "{" + render_bindings(s) + "}";
}

/// Inverse of render_bindings. Accepts "none"/"" as empty. Returns nullopt on
/// text that is not a binding list or that binds one variable twice.
inline std::optional<Substitution> parse_bindings(std::string_view input)
{
    auto body = text::trim(input);
    Substitution s;
    if (body.empty() || text::is_none_marker(body)) {
        return s;
    }
    static const std::regex head(R"((^|,)\s*([A-Za-z_][A-Za-z0-9_]*)\s*/\s*)");
    std::vector<std::pair<std::string, std::pair<std::size_t, std::size_t>>> marks;
    for (auto it = std::sregex_iterator(body.begin(), body.end(), head); it != std::sregex_iterator();
         ++it) {
        auto pos = static_cast<std::size_t>(it->position(0));
        auto len = static_cast<std::size_t>(it->length(0));
        marks.push_back({(*it)[2].str(), {pos, pos + len}});
    }
    if (marks.empty() || marks.front().second.first != 0) {
        return std::nullopt;
    }
    for (std::size_t k = 0; k < marks.size(); ++k) {
        auto start = marks[k].second.second;
        auto stop = k + 1 < marks.size() ? marks[k + 1].second.first : body.size();
        auto value = text::trim(std::string_view(body).substr(start, stop - start));
        if (value.empty() || !s.bind(marks[k].first, value)) {
            return std::nullopt;
        }
    }
    return s;
}

/// Parses `{x / a, ...}`, `{}`, `none` or `"none"`.
inline std::optional<Substitution> parse_substitution(std::string_view input)
{
    auto t = text::trim_view(input);
    if (text::is_none_marker(t)) {
        return Substitution{};
    }
    if (t.size() < 2 || t.front() != '{' || t.back() != '}') {
        return std::nullopt;
    }
    return parse_bindings(t.substr(1, t.size() - 2));
}

/// Bound variables become untyped constant slots; everything else is kept.
inline AtomicFormula apply_substitution(const AtomicFormula& f, const Substitution& theta)
{
    if (theta.empty()) {
        return f;
    }
    bool touched = false;
    auto pieces = f.pieces();
    for (auto& piece : pieces) {
        auto* term = std::get_if<TypedTerm>(&piece);
        if (term == nullptr || !term->is_variable()) {
            continue;
        }
        if (const auto* b = theta.find(term->name)) {
            *term = make_constant(b->constant);
            touched = true;
        }
    }
    return touched ? AtomicFormula::from_pieces(pieces) : f;
}

struct Conflict {
    std::string variable;
    std::string incoming;  // delta's constant
    std::string existing;  // theta's constant

    bool operator==(const Conflict&) const = default;
};

/// (constant, constant, context) -> same entity?
using EqualityJudgment =
    std::function<bool(const std::string&, const std::string&, const std::string&)>;

/// theta ∪ delta. Shared variables keep theta's spelling when `eq` accepts the
/// pair; the first rejected variable (in name order) is reported.
inline std::variant<Substitution, Conflict> merge_substitutions(const Substitution& theta,
                                                                const Substitution& delta,
                                                                const EqualityJudgment& eq)
{
    Substitution merged = theta;
    for (const auto& [var, b] : delta.bindings()) {
        const auto* existing = theta.find(var);
        if (existing == nullptr) {
            merged.bind(var, b);
            continue;
        }
        if (!eq(b.constant, existing->constant, var)) {
            return Conflict{var, b.constant, existing->constant};
        }
    }
    return merged;
}

struct VariableDecl {
    std::string name;
    std::string type_label;
    std::string description;

    bool operator==(const VariableDecl&) const = default;
};

struct DecompositionRule {
    std::vector<AtomicFormula> antecedents;
    AtomicFormula consequent;
    std::vector<VariableDecl> answer_variables;
    std::string rule_text;       // the "Rule:" line without its label
    std::string variables_note;  // description after "none:" when no variable is declared
    std::string difference;      // next-hop decompositions only

    bool operator==(const DecompositionRule&) const = default;
};

struct Goal {
    AtomicFormula formula;
    std::vector<std::string> answer_variables;

    bool operator==(const Goal&) const = default;
};

class RuleError : public std::runtime_error {
public:
    enum class Kind { MissingSection, MalformedBullet, InvalidRule };

    RuleError(Kind kind, std::string detail)
        : std::runtime_error(describe(kind, detail)), kind_(kind), detail_(std::move(detail))
    {
    }

    Kind kind() const { return kind_; }
    /// Section name, offending line, or violated condition.
    const std::string& detail() const { return detail_; }

private:
    static std::string describe(Kind kind, const std::string& detail)
    {
        switch (kind) {
        case Kind::MissingSection:
            return "missing section: " + detail;
        case Kind::MalformedBullet:
            return "malformed bullet: " + detail;
        case Kind::InvalidRule:
            return "invalid rule: " + detail;
        }
        return detail;
    }

    Kind kind_;
    std::string detail_;
};

inline const std::vector<std::string>& rule_labels()
{
    static const std::vector<std::string> labels = {
        "Goal", "Rule", "Variables", "Subgoals", "Premises", "Difference From Prior Decompositions",
    };
    return labels;
}

namespace detail {

inline VariableDecl parse_variable_bullet(const std::string& line)
{
    // "(x:type): description"
    if (line.empty() || line.front() != '(') {
        throw RuleError(RuleError::Kind::MalformedBullet, line);
    }
    auto close = line.find(')');
    if (close == std::string::npos) {
        throw RuleError(RuleError::Kind::MalformedBullet, line);
    }
    auto inner = std::string_view(line).substr(1, close - 1);
    auto colon = inner.find(':');
    if (colon == std::string_view::npos) {
        throw RuleError(RuleError::Kind::MalformedBullet, line);
    }
    VariableDecl v;
    v.name = text::trim(inner.substr(0, colon));
    v.type_label = text::trim(inner.substr(colon + 1));
    if (v.name.empty() || v.type_label.empty()) {
        throw RuleError(RuleError::Kind::MalformedBullet, line);
    }
    auto rest = text::trim_view(std::string_view(line).substr(close + 1));
    if (!rest.empty()) {
        if (rest.front() != ':') {
            throw RuleError(RuleError::Kind::MalformedBullet, line);
        }
        v.description = text::trim(rest.substr(1));
    }
    return v;
}

}  // namespace detail

/// Parses the decomposition output format. A Premises section is accepted and
/// ignored; render_rule regenerates it from the subgoals.
inline DecompositionRule parse_rule(std::string_view output)
{
    using K = RuleError::Kind;
    auto sections = text::split_sections(output, rule_labels());
    for (const char* required : {"Goal", "Rule", "Variables", "Subgoals"}) {
        if (!sections.contains(required)) {
            throw RuleError(K::MissingSection, required);
        }
    }

    DecompositionRule rule;
    const auto& vars = sections.at("Variables");
    std::set<std::string> declared;
    auto var_bullets = text::bullets(vars);
    for (std::size_t i = 0; i < var_bullets.size(); ++i) {
        if (!var_bullets[i]) {
            throw RuleError(K::MalformedBullet, text::trim(vars.lines[i]));
        }
        const auto& item = *var_bullets[i];
        if (text::starts_with_icase(item, "none")) {
            auto rest = text::trim_view(std::string_view(item).substr(4));
            if (!rest.empty() && rest.front() == ':') {
                rest = text::trim_view(rest.substr(1));
            }
            rule.variables_note = std::string(rest);
            continue;
        }
        auto decl = detail::parse_variable_bullet(item);
        declared.insert(decl.name);
        rule.answer_variables.push_back(std::move(decl));
    }

    try {
        rule.consequent = parse_formula(sections.at("Goal").inline_text, declared);
    } catch (const FormulaError& e) {
        throw RuleError(K::InvalidRule, "goal: " + std::string(e.what()));
    }
    rule.rule_text = text::block_text(sections.at("Rule"));

    const auto& subgoals = sections.at("Subgoals");
    for (const auto& b : text::bullets(subgoals)) {
        if (!b || b->empty()) {
            throw RuleError(K::MalformedBullet, b ? "-" : "non-bullet line in Subgoals");
        }
        if (text::is_none_marker(*b)) {
            continue;
        }
        try {
            rule.antecedents.push_back(parse_formula(*b, declared));
        } catch (const FormulaError& e) {
            throw RuleError(K::MalformedBullet, *b);
        }
    }
    if (auto it = sections.find("Difference From Prior Decompositions"); it != sections.end()) {
        rule.difference = text::block_text(it->second);
    }

    for (const auto& v : rule.answer_variables) {
        bool in_goal = false;
        for (const auto& fv : free_variables(rule.consequent)) {
            in_goal = in_goal || fv.name == v.name;
        }
        if (!in_goal) {
            throw RuleError(K::InvalidRule, "answer variable " + v.name + " not in goal");
        }
        bool in_body = false;
        for (const auto& a : rule.antecedents) {
            for (const auto& fv : free_variables(a)) {
                in_body = in_body || fv.name == v.name;
            }
        }
        if (!in_body) {
            throw RuleError(K::InvalidRule, "answer variable " + v.name + " not in any subgoal");
        }
    }
    return rule;
}

/// "IF a AND b, THEN goal" with terminal periods stripped from the parts.
inline std::string synthesize_rule_text(const DecompositionRule& rule)
{
    std::vector<std::string> parts;
    for (const auto& a : rule.antecedents) {
        parts.push_back(text::strip_terminal_punct(render_formula(a)));
    }
    return "IF " + text::join(parts, " AND ") + ", THEN "
           + text::strip_terminal_punct(render_formula(rule.consequent)) + ".";
}

inline std::string render_rule(const DecompositionRule& rule)
{
    std::string out = "Goal: " + render_formula(rule.consequent) + "\n";
    out += "Rule: " + (rule.rule_text.empty() ? synthesize_rule_text(rule) : rule.rule_text) + "\n";
    out += "Variables:\n";
    if (rule.answer_variables.empty()) {
        out += "- none";
        if (!rule.variables_note.empty()) {
            out += ": " + rule.variables_note;
        }
        out += "\n";
    }
    for (const auto& v : rule.answer_variables) {
        out += "- (" + v.name + ":" + v.type_label + ")";
        if (!v.description.empty()) {
            out += ": " + v.description;
        }
        out += "\n";
    }
    std::string bullets;
    for (const auto& a : rule.antecedents) {
        bullets += "- " + render_formula(a) + "\n";
    }
    out += "Subgoals:\n" + bullets;
    out += "Premises:\n" + bullets;
    if (!rule.difference.empty()) {
        out += "Difference From Prior Decompositions: " + rule.difference + "\n";
    }
    out.pop_back();
    return out;
}

inline Goal goal_from_rule(const DecompositionRule& rule)
{
    Goal g;
    g.formula = rule.consequent;
    for (const auto& v : rule.answer_variables) {
        g.answer_variables.push_back(v.name);
    }
    return g;
}

/// Variable names declared by a rule, for re-parsing its formulas.
inline std::set<std::string> declared_variables(const DecompositionRule& rule)
{
    std::set<std::string> out;
    for (const auto& v : rule.answer_variables) {
        out.insert(v.name);
    }
    return out;
}

}  // namespace goalmem
