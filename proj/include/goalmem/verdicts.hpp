#pragma once
// Structured judge outputs: parsers and renderers.

#include <algorithm>
#include <cstdlib>
#include <optional>
#include <regex>
#include <stdexcept>
#include <string>
#include <vector>

#include "json.hpp"

#include "goalmem/nl_logic.hpp"
#include "goalmem/text.hpp"

namespace goalmem {

class VerdictError : public std::runtime_error {
public:
    enum class Kind { MalformedVerdict, UnknownStatus };

    VerdictError(Kind kind, std::string detail)
        : std::runtime_error((kind == Kind::MalformedVerdict ? "malformed verdict: " : "unknown status: ")
                             + detail),
          kind_(kind), detail_(std::move(detail))
    {
    }

    Kind kind() const { return kind_; }
    const std::string& detail() const { return detail_; }

private:
    Kind kind_;
    std::string detail_;
};

namespace detail {

inline const text::Section& require_section(const std::map<std::string, text::Section>& s,
                                            const std::string& label)
{
    auto it = s.find(label);
    if (it == s.end()) {
        throw VerdictError(VerdictError::Kind::MalformedVerdict, "missing " + label);
    }
    return it->second;
}

/// Bullets of a section; a single "none" bullet (or an inline "none") is the
/// empty list. Non-bullet lines are rejected.
inline std::vector<std::string> bullet_list(const text::Section& sec)
{
    std::vector<std::string> out;
    if (!sec.inline_text.empty() && !text::is_none_marker(sec.inline_text)) {
        throw VerdictError(VerdictError::Kind::MalformedVerdict, sec.label + " expects bullets");
    }
    for (const auto& b : text::bullets(sec)) {
        if (!b) {
            throw VerdictError(VerdictError::Kind::MalformedVerdict, "non-bullet line in " + sec.label);
        }
        if (!b->empty() && !text::is_none_marker(*b)) {
            out.push_back(*b);
        }
    }
    return out;
}

inline std::string render_bullets(const std::vector<std::string>& items)
{
    if (items.empty()) {
        return "- none\n";
    }
    std::string out;
    for (const auto& i : items) {
        out += "- " + i + "\n";
    }
    return out;
}

inline std::string or_none(const std::string& s) { return s.empty() ? "none" : s; }

}  // namespace detail

// ---------------------------------------------------------------------------
// Unification

enum class UnifyStatus { satisfied, unsatisfied, conflict };

inline const char* to_string(UnifyStatus s)
{
    switch (s) {
    case UnifyStatus::satisfied:
        return "satisfied";
    case UnifyStatus::unsatisfied:
        return "unsatisfied";
    case UnifyStatus::conflict:
        return "conflict";
    }
    return "?";
}

struct GroundedEntry {
    std::string subgoal;
    /// Raw support text, e.g. "Fact 1" or "Facts 2, 3" or "Known Info".
    std::string support;
    /// 1-based indices into the fact list shown to the judge.
    std::vector<std::size_t> fact_refs;
    bool from_known_info = false;
    Substitution bindings;

    bool operator==(const GroundedEntry&) const = default;
};

struct UnresolvedEntry {
    std::string subgoal;
    std::string reason;

    bool operator==(const UnresolvedEntry&) const = default;
};

struct UnifyVerdict {
    UnifyStatus status = UnifyStatus::unsatisfied;
    Substitution substitution;
    std::vector<GroundedEntry> grounded;
    std::vector<UnresolvedEntry> unresolved;
    std::string reasoning;
    std::string final_answer;
    std::vector<std::string> known_info;

    bool operator==(const UnifyVerdict&) const = default;
};

/// "Fact 1", "Facts 1, 3", "Fact 2 and Fact 4" -> {1,3} etc.
inline std::vector<std::size_t> parse_fact_refs(const std::string& support)
{
    std::vector<std::size_t> out;
    static const std::regex num(R"(\d+)");
    for (auto it = std::sregex_iterator(support.begin(), support.end(), num); it != std::sregex_iterator(); ++it) {
        auto n = static_cast<std::size_t>(std::stoul(it->str()));
        if (n > 0 && std::find(out.begin(), out.end(), n) == out.end()) {
            out.push_back(n);
        }
    }
    return out;
}

inline std::string support_text(const std::vector<std::size_t>& refs)
{
    std::string out = refs.size() == 1 ? "Fact " : "Facts ";
    for (std::size_t i = 0; i < refs.size(); ++i) {
        out += (i ? ", " : "") + std::to_string(refs[i]);
    }
    return out;
}

inline const std::vector<std::string>& unify_labels()
{
    static const std::vector<std::string> l = {
        "Unification Status", "Substitution", "Grounded Subgoals", "Unresolved Subgoals",
        "Reasoning",          "Final Answer", "Known Info",
    };
    return l;
}

inline UnifyVerdict parse_unify_verdict(std::string_view output)
{
    using K = VerdictError::Kind;
    auto sections = text::split_sections(output, unify_labels());
    UnifyVerdict v;

    auto status = text::to_lower(text::trim(detail::require_section(sections, "Unification Status").inline_text));
    if (status == "satisfied") {
        v.status = UnifyStatus::satisfied;
    } else if (status == "unsatisfied") {
        v.status = UnifyStatus::unsatisfied;
    } else if (status == "conflict") {
        v.status = UnifyStatus::conflict;
    } else {
        throw VerdictError(K::UnknownStatus, status);
    }

    auto sub = parse_substitution(detail::require_section(sections, "Substitution").inline_text);
    if (!sub) {
        throw VerdictError(K::MalformedVerdict, "bad substitution");
    }
    v.substitution = *sub;

    if (auto it = sections.find("Grounded Subgoals"); it != sections.end()) {
        for (const auto& item : detail::bullet_list(it->second)) {
            // "<subgoal> <= <support>; bindings: <bindings>"
            auto arrow = item.find(" <= ");
            if (arrow == std::string::npos) {
                throw VerdictError(K::MalformedVerdict, "grounded entry without support: " + item);
            }
            GroundedEntry g;
            g.subgoal = text::trim(item.substr(0, arrow));
            auto rest = item.substr(arrow + 4);
            auto bpos = rest.find("; bindings:");
            g.support = text::trim(rest.substr(0, bpos));
            if (bpos != std::string::npos) {
                auto b = parse_bindings(rest.substr(bpos + 11));
                if (!b) {
                    throw VerdictError(K::MalformedVerdict, "bad bindings: " + item);
                }
                g.bindings = *b;
            }
            g.from_known_info = text::to_lower(g.support).find("known info") != std::string::npos;
            g.fact_refs = parse_fact_refs(g.support);
            if (g.fact_refs.empty() && !g.from_known_info) {
                throw VerdictError(K::MalformedVerdict, "grounded entry cites nothing: " + item);
            }
            v.grounded.push_back(std::move(g));
        }
    }
    if (auto it = sections.find("Unresolved Subgoals"); it != sections.end()) {
        for (const auto& item : detail::bullet_list(it->second)) {
            auto dash = item.find(" -- ");
            UnresolvedEntry u;
            u.subgoal = text::trim(item.substr(0, dash));
            if (dash != std::string::npos) {
                u.reason = text::trim(item.substr(dash + 4));
            }
            v.unresolved.push_back(std::move(u));
        }
    }
    if (auto it = sections.find("Reasoning"); it != sections.end()) {
        v.reasoning = text::block_text(it->second);
    }
    v.final_answer = text::block_text(detail::require_section(sections, "Final Answer"));
    if (auto it = sections.find("Known Info"); it != sections.end()) {
        auto body = text::block_text(it->second);
        if (!text::is_none_marker(body)) {
            for (auto& part : text::split(body, ';')) {
                auto t = text::trim(part);
                if (!t.empty()) {
                    v.known_info.push_back(t);
                }
            }
        }
    }
    if (v.status == UnifyStatus::satisfied && !v.unresolved.empty()) {
        throw VerdictError(K::MalformedVerdict, "satisfied with unresolved subgoals");
    }
    return v;
}

inline std::string render_unify_verdict(const UnifyVerdict& v)
{
    std::string out = std::string("Unification Status: ") + to_string(v.status) + "\n";
    out += "Substitution: " + render_substitution(v.substitution) + "\n";
    out += "Grounded Subgoals:\n";
    std::vector<std::string> items;
    for (const auto& g : v.grounded) {
        items.push_back(g.subgoal + " <= " + g.support + "; bindings: " + detail::or_none(render_bindings(g.bindings)));
    }
    out += detail::render_bullets(items);
    items.clear();
    for (const auto& u : v.unresolved) {
        items.push_back(u.reason.empty() ? u.subgoal : u.subgoal + " -- " + u.reason);
    }
    out += "Unresolved Subgoals:\n" + detail::render_bullets(items);
    out += "Reasoning: " + v.reasoning + "\n";
    out += "Final Answer: " + v.final_answer + "\n";
    out += "Known Info: " + detail::or_none(text::join(v.known_info, "; "));
    return out;
}

// ---------------------------------------------------------------------------
// Refinement

enum class RefineStatus { refine, stop };
enum class RelationType { temporal, causal, semantic, spatial };

inline const char* to_string(RefineStatus s) { return s == RefineStatus::refine ? "refine" : "stop"; }

inline const char* to_string(RelationType r)
{
    switch (r) {
    case RelationType::temporal:
        return "temporal";
    case RelationType::causal:
        return "causal";
    case RelationType::semantic:
        return "semantic";
    case RelationType::spatial:
        return "spatial";
    }
    return "?";
}

struct RefineVerdict {
    RefineStatus status = RefineStatus::stop;
    std::string missing_info;
    std::optional<RelationType> relation_type;
    std::vector<AtomicFormula> refined_subgoals;
    std::vector<std::string> retrieval_queries;
    std::string rationale;

    bool operator==(const RefineVerdict&) const = default;
};

inline const std::vector<std::string>& refine_labels()
{
    static const std::vector<std::string> l = {
        "Refinement Status", "Missing Info", "Relation Type", "Refined Subgoals", "Retrieval Queries", "Rationale",
    };
    return l;
}

/// `declared` lists variable names that are variables even when longer than
/// three letters (the rule's answer variables).
inline RefineVerdict parse_refine_verdict(std::string_view output, const std::set<std::string>& declared = {})
{
    using K = VerdictError::Kind;
    auto sections = text::split_sections(output, refine_labels());
    RefineVerdict v;
    auto status = text::to_lower(text::trim(detail::require_section(sections, "Refinement Status").inline_text));
    if (status == "refine") {
        v.status = RefineStatus::refine;
    } else if (status == "stop") {
        v.status = RefineStatus::stop;
    } else {
        throw VerdictError(K::UnknownStatus, status);
    }
    if (auto it = sections.find("Missing Info"); it != sections.end()) {
        v.missing_info = text::block_text(it->second);
    }
    if (auto it = sections.find("Relation Type"); it != sections.end()) {
        auto r = text::to_lower(text::trim(it->second.inline_text));
        if (r == "temporal") {
            v.relation_type = RelationType::temporal;
        } else if (r == "causal") {
            v.relation_type = RelationType::causal;
        } else if (r == "semantic") {
            v.relation_type = RelationType::semantic;
        } else if (r == "spatial") {
            v.relation_type = RelationType::spatial;
        } else if (!r.empty() && !text::is_none_marker(r)) {
            throw VerdictError(K::UnknownStatus, r);
        }
    }
    if (auto it = sections.find("Refined Subgoals"); it != sections.end()) {
        for (const auto& item : detail::bullet_list(it->second)) {
            try {
                v.refined_subgoals.push_back(parse_formula(item, declared));
            } catch (const FormulaError& e) {
                throw VerdictError(K::MalformedVerdict, "refined subgoal: " + item);
            }
        }
    }
    if (auto it = sections.find("Retrieval Queries"); it != sections.end()) {
        v.retrieval_queries = detail::bullet_list(it->second);
    }
    if (auto it = sections.find("Rationale"); it != sections.end()) {
        v.rationale = text::block_text(it->second);
    }
    if (v.status == RefineStatus::refine && v.refined_subgoals.empty()) {
        throw VerdictError(K::MalformedVerdict, "refine without refined subgoals");
    }
    if (v.retrieval_queries.size() != v.refined_subgoals.size()) {
        throw VerdictError(K::MalformedVerdict, "retrieval queries do not match refined subgoals");
    }
    return v;
}

inline std::string render_refine_verdict(const RefineVerdict& v)
{
    std::string out = std::string("Refinement Status: ") + to_string(v.status) + "\n";
    out += "Missing Info: " + detail::or_none(v.missing_info) + "\n";
    out += std::string("Relation Type: ") + (v.relation_type ? to_string(*v.relation_type) : "none") + "\n";
    std::vector<std::string> items;
    for (const auto& f : v.refined_subgoals) {
        items.push_back(render_formula(f));
    }
    out += "Refined Subgoals:\n" + detail::render_bullets(items);
    out += "Retrieval Queries:\n" + detail::render_bullets(v.retrieval_queries);
    out += "Rationale: " + v.rationale;
    return out;
}

// ---------------------------------------------------------------------------
// Goal parsing and answers

/// A goal_parse reply with the per-variable notes the model wrote. Goal alone
/// is what the solver needs; the notes make the format round-trip.
struct GoalVerdict {
    Goal goal;
    std::vector<std::string> variable_notes;  // parallel to goal.answer_variables
    std::string none_note;                     // text after "none:" for yes/no goals

    bool operator==(const GoalVerdict&) const = default;
};

inline GoalVerdict parse_goal_reply(std::string_view output)
{
    using K = VerdictError::Kind;
    auto sections = text::split_sections(output, {"Goal", "Variables"});
    const auto& goal_sec = detail::require_section(sections, "Goal");
    GoalVerdict v;
    Goal& g = v.goal;
    std::set<std::string> declared;
    std::vector<std::string> types;
    if (auto it = sections.find("Variables"); it != sections.end()) {
        for (const auto& item : detail::bullet_list(it->second)) {
            if (text::starts_with_icase(item, "none")) {
                auto rest = text::trim_view(std::string_view(item).substr(4));
                if (!rest.empty() && rest.front() == ':') {
                    v.none_note = text::trim(rest.substr(1));
                }
                continue;
            }
            try {
                auto decl = detail::parse_variable_bullet(item);
                declared.insert(decl.name);
                g.answer_variables.push_back(decl.name);
                v.variable_notes.push_back(decl.description);
            } catch (const RuleError&) {
                throw VerdictError(K::MalformedVerdict, "variable bullet: " + item);
            }
        }
    }
    try {
        g.formula = parse_formula(goal_sec.inline_text, declared);
    } catch (const FormulaError& e) {
        throw VerdictError(K::MalformedVerdict, std::string("goal: ") + e.what());
    }
    auto fvs = free_variables(g.formula);
    for (const auto& name : g.answer_variables) {
        bool found = std::any_of(fvs.begin(), fvs.end(), [&](const auto& f) { return f.name == name; });
        if (!found) {
            throw VerdictError(K::MalformedVerdict, "variable " + name + " not in goal");
        }
    }
    return v;
}

inline Goal parse_goal_verdict(std::string_view output) { return parse_goal_reply(output).goal; }

inline std::string render_goal_verdict(const GoalVerdict& v)
{
    const Goal& g = v.goal;
    std::string out = "Goal: " + render_formula(g.formula) + "\nVariables:\n";
    if (g.answer_variables.empty()) {
        return out + "- none" + (v.none_note.empty() ? "" : ": " + v.none_note);
    }
    auto fvs = free_variables(g.formula);
    for (std::size_t i = 0; i < g.answer_variables.size(); ++i) {
        const auto& name = g.answer_variables[i];
        for (const auto& f : fvs) {
            if (f.name == name) {
                out += "- (" + name + ":" + f.type_label + ")";
                if (i < v.variable_notes.size() && !v.variable_notes[i].empty()) {
                    out += ": " + v.variable_notes[i];
                }
                out += "\n";
                break;
            }
        }
    }
    out.pop_back();
    return out;
}

inline std::string render_goal_verdict(const Goal& g) { return render_goal_verdict(GoalVerdict{g, {}, {}}); }

/// Text after "Answer:" (or the whole reply when the label is missing).
inline std::string parse_answer(std::string_view output)
{
    auto sections = text::split_sections(output, {"Answer"});
    std::string a = sections.contains("Answer") ? text::block_text(sections.at("Answer")) : std::string(output);
    a = text::trim(a);
    if (a.empty()) {
        throw VerdictError(VerdictError::Kind::MalformedVerdict, "empty answer");
    }
    return a;
}

/// "Verdict: correct|incorrect".
inline bool parse_answer_judgment(std::string_view output)
{
    auto sections = text::split_sections(output, {"Verdict"});
    auto v = text::to_lower(text::trim(detail::require_section(sections, "Verdict").inline_text));
    v = text::strip_terminal_punct(v);
    if (v == "correct") {
        return true;
    }
    if (v == "incorrect") {
        return false;
    }
    throw VerdictError(VerdictError::Kind::UnknownStatus, v);
}

// ---------------------------------------------------------------------------
// Baseline outputs

inline std::vector<std::string> parse_queries(std::string_view output)
{
    auto sections = text::split_sections(output, {"Queries"});
    return detail::bullet_list(detail::require_section(sections, "Queries"));
}

struct ReflectionDecision {
    bool sufficient = false;
    std::string next_query;
    std::string rationale;

    bool operator==(const ReflectionDecision&) const = default;
};

namespace detail {

inline bool parse_yes_no(const std::string& raw)
{
    auto v = text::strip_terminal_punct(text::to_lower(text::trim(raw)));
    if (v == "yes" || v == "true") {
        return true;
    }
    if (v == "no" || v == "false") {
        return false;
    }
    throw VerdictError(VerdictError::Kind::UnknownStatus, v);
}

}  // namespace detail

/// Accepts the JSON object form or a labeled Sufficient / Next Query /
/// Rationale block.
inline ReflectionDecision parse_reflection(std::string_view output)
{
    ReflectionDecision d;
    auto open = output.find('{');
    auto close = output.rfind('}');
    if (open != std::string_view::npos && close != std::string_view::npos && close > open) {
        auto j = nlohmann::json::parse(output.substr(open, close - open + 1), nullptr, false);
        if (!j.is_discarded() && j.is_object() && j.contains("sufficient")) {
            const auto& s = j["sufficient"];
            if (s.is_boolean()) {
                d.sufficient = s.get<bool>();
            } else if (s.is_string()) {
                d.sufficient = detail::parse_yes_no(s.get<std::string>());
            } else {
                throw VerdictError(VerdictError::Kind::MalformedVerdict, "sufficient");
            }
            if (j.contains("next_query") && j["next_query"].is_string()) {
                d.next_query = text::trim(j["next_query"].get<std::string>());
            }
            if (j.contains("rationale") && j["rationale"].is_string()) {
                d.rationale = j["rationale"].get<std::string>();
            }
            return d;
        }
    }
    auto sections = text::split_sections(output, {"Sufficient", "Next Query", "Rationale"});
    d.sufficient = detail::parse_yes_no(detail::require_section(sections, "Sufficient").inline_text);
    if (auto it = sections.find("Next Query"); it != sections.end()) {
        auto q = text::trim(it->second.inline_text);
        d.next_query = text::is_none_marker(q) ? "" : q;
    }
    if (auto it = sections.find("Rationale"); it != sections.end()) {
        d.rationale = text::block_text(it->second);
    }
    return d;
}

inline std::string render_reflection(const ReflectionDecision& d)
{
    nlohmann::json j = {{"sufficient", d.sufficient}, {"next_query", d.next_query}, {"rationale", d.rationale}};
    return j.dump();
}

struct ReactStep {
    enum class Action { retrieve, finish };

    std::string thought;
    Action action = Action::finish;
    std::string argument;

    bool operator==(const ReactStep&) const = default;
};

inline ReactStep parse_react_step(std::string_view output)
{
    using K = VerdictError::Kind;
    auto sections = text::split_sections(output, {"Thought", "Action"});
    ReactStep s;
    if (auto it = sections.find("Thought"); it != sections.end()) {
        s.thought = text::block_text(it->second);
    }
    auto action = text::trim(detail::require_section(sections, "Action").inline_text);
    static const std::regex form(R"(^(Retrieve|Finish)\[(.*)\]$)", std::regex::icase);
    std::smatch m;
    if (!std::regex_match(action, m, form)) {
        throw VerdictError(K::MalformedVerdict, "action: " + action);
    }
    s.action = text::iequals(m[1].str(), "retrieve") ? ReactStep::Action::retrieve : ReactStep::Action::finish;
    s.argument = text::trim(m[2].str());
    if (s.action == ReactStep::Action::retrieve && s.argument.empty()) {
        throw VerdictError(K::MalformedVerdict, "empty retrieve query");
    }
    return s;
}

inline std::string render_react_step(const ReactStep& s)
{
    return "Thought: " + s.thought + "\nAction: "
           + (s.action == ReactStep::Action::retrieve ? "Retrieve[" : "Finish[") + s.argument + "]";
}

struct IntentCapture {
    std::string intent;
    std::vector<std::string> queries;

    bool operator==(const IntentCapture&) const = default;
};

inline IntentCapture parse_intent(std::string_view output)
{
    auto sections = text::split_sections(output, {"Intent", "Queries"});
    IntentCapture c;
    c.intent = text::block_text(detail::require_section(sections, "Intent"));
    c.queries = detail::bullet_list(detail::require_section(sections, "Queries"));
    return c;
}

struct SlotDecision {
    bool sufficient = false;
    std::vector<std::string> missing_slots;
    std::vector<std::string> followups;

    bool operator==(const SlotDecision&) const = default;
};

inline SlotDecision parse_slot_decision(std::string_view output)
{
    auto sections = text::split_sections(output, {"Sufficient", "Missing Slots", "Follow-up Queries"});
    SlotDecision d;
    d.sufficient = detail::parse_yes_no(detail::require_section(sections, "Sufficient").inline_text);
    if (auto it = sections.find("Missing Slots"); it != sections.end()) {
        d.missing_slots = detail::bullet_list(it->second);
    }
    if (auto it = sections.find("Follow-up Queries"); it != sections.end()) {
        d.followups = detail::bullet_list(it->second);
    }
    return d;
}

/// "- N: score" lines; candidates without a line score 0. Scores are clamped
/// to [0,1].
inline std::vector<double> parse_scores(std::string_view output, std::size_t candidates)
{
    auto sections = text::split_sections(output, {"Scores"});
    std::vector<double> out(candidates, 0.0);
    static const std::regex line(R"(^(\d+)\s*:\s*([-+0-9.eE]+)$)");
    for (const auto& item : detail::bullet_list(detail::require_section(sections, "Scores"))) {
        std::smatch m;
        if (!std::regex_match(item, m, line)) {
            throw VerdictError(VerdictError::Kind::MalformedVerdict, "score line: " + item);
        }
        auto idx = std::stoul(m[1].str());
        if (idx >= 1 && idx <= candidates) {
            out[idx - 1] = std::clamp(std::strtod(m[2].str().c_str(), nullptr), 0.0, 1.0);
        }
    }
    return out;
}

}  // namespace goalmem
