#pragma once
// Deterministic knowledge-base judge used for tests, acceptance runs and the
// synthetic benchmark.

#include <algorithm>
#include <deque>
#include <filesystem>
#include <fstream>
#include <map>
#include <memory>
#include <set>
#include <string>
#include <utility>
#include <vector>

#include "json.hpp"

#include "goalmem/judge.hpp"

namespace goalmem {

class KbError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

struct RefinementScript {
    std::string subgoal;
    std::string refined;
    std::optional<RelationType> relation;
};

/// Type lattice, instances, alias classes, entailment pairs and scripted
/// decompositions. Mutable while building; call finalize() before querying.
class OracleKb {
public:
    void add_type_edge(std::string sub, std::string super)
    {
        type_edges_.emplace_back(std::move(sub), std::move(super));
        finalized_ = false;
    }
    void add_instance(std::string constant, std::string type)
    {
        instances_.emplace_back(std::move(constant), std::move(type));
        finalized_ = false;
    }
    void add_alias_class(std::vector<std::string> names)
    {
        aliases_.push_back(std::move(names));
        finalized_ = false;
    }
    void add_entailment(std::string fact, std::string subgoal)
    {
        entailments_.emplace_back(std::move(fact), std::move(subgoal));
        finalized_ = false;
    }
    /// `rule_text` is a decomposition in the structured output format.
    /// Rules for one question are tried in the order they were added.
    void add_rule(std::string question, std::string rule_text)
    {
        try {
            parse_rule(rule_text);
        } catch (const std::exception& e) {
            throw KbError("bad scripted rule for '" + question + "': " + e.what());
        }
        rules_.emplace_back(std::move(question), std::move(rule_text));
        finalized_ = false;
    }
    void add_refinement(std::string subgoal, std::string refined, std::optional<RelationType> relation = {})
    {
        try {
            parse_formula(refined);
        } catch (const FormulaError& e) {
            throw KbError("bad scripted refinement '" + refined + "': " + e.what());
        }
        refinements_.push_back({std::move(subgoal), std::move(refined), relation});
        finalized_ = false;
    }

    /// Builds the indexes. Throws KbError on a type cycle or on a name that
    /// belongs to two alias classes.
    void finalize()
    {
        supertypes_.clear();
        alias_of_.clear();
        instance_types_.clear();
        entail_set_.clear();
        rule_index_.clear();
        refine_index_.clear();
        known_constants_.clear();

        std::map<std::string, std::set<std::string>> direct;
        for (const auto& [sub, super] : type_edges_) {
            auto a = key(sub);
            auto b = key(super);
            if (a != b) {
                direct[a].insert(b);
            }
        }
        for (const auto& [start, _] : direct) {
            std::set<std::string> seen;
            std::deque<std::string> queue(direct[start].begin(), direct[start].end());
            while (!queue.empty()) {
                auto t = queue.front();
                queue.pop_front();
                if (t == start) {
                    throw KbError("type cycle through '" + start + "'");
                }
                if (!seen.insert(t).second) {
                    continue;
                }
                if (auto it = direct.find(t); it != direct.end()) {
                    queue.insert(queue.end(), it->second.begin(), it->second.end());
                }
            }
            supertypes_[start] = std::move(seen);
        }

        for (std::size_t c = 0; c < aliases_.size(); ++c) {
            for (const auto& name : aliases_[c]) {
                auto k = key(name);
                auto [it, fresh] = alias_of_.emplace(k, c);
                if (!fresh && it->second != c) {
                    throw KbError("'" + name + "' is in two alias classes");
                }
                add_known_constant(name);
            }
        }
        for (const auto& [constant, type] : instances_) {
            instance_types_[canon(constant)].insert(key(type));
            add_known_constant(constant);
        }
        for (const auto& [fact, subgoal] : entailments_) {
            entail_set_.emplace(key(fact), key(subgoal));
        }
        for (const auto& [question, text] : rules_) {
            rule_index_[text::canonical_key(question)].push_back(parse_rule(text));
        }
        for (const auto& r : refinements_) {
            refine_index_[text::canonical_key(r.subgoal)] = r;
        }
        finalized_ = true;
    }

    bool finalized() const { return finalized_; }

    bool type_entails(const std::string& sub, const std::string& super) const
    {
        check();
        auto a = key(sub);
        auto b = key(super);
        if (a == b) {
            return true;
        }
        auto it = supertypes_.find(a);
        return it != supertypes_.end() && it->second.contains(b);
    }

    bool equal(const std::string& a, const std::string& b) const
    {
        check();
        return canon(a) == canon(b);
    }

    bool instance_of(const std::string& constant, const std::string& type) const
    {
        check();
        auto it = instance_types_.find(canon(constant));
        if (it == instance_types_.end()) {
            return false;
        }
        return std::any_of(it->second.begin(), it->second.end(),
                           [&](const std::string& t) { return type_entails(t, type); });
    }

    bool entails(const std::string& fact, const std::string& subgoal) const
    {
        check();
        auto f = key(fact);
        auto s = key(subgoal);
        return f == s || entail_set_.contains({f, s});
    }

    const std::vector<DecompositionRule>* rules_for(const std::string& question) const
    {
        check();
        auto it = rule_index_.find(text::canonical_key(question));
        return it == rule_index_.end() ? nullptr : &it->second;
    }

    const RefinementScript* refinement_for(const std::string& subgoal) const
    {
        check();
        auto it = refine_index_.find(text::canonical_key(subgoal));
        return it == refine_index_.end() ? nullptr : &it->second;
    }

    /// KB constants mentioned (as a whole token run) in `s`.
    std::vector<std::string> constants_in(const std::string& s) const
    {
        check();
        auto toks = text::tokenize(s);
        std::vector<std::string> out;
        for (const auto& [ctoks, raw] : known_constants_) {
            if (ctoks.empty() || ctoks.size() > toks.size()) {
                continue;
            }
            for (std::size_t i = 0; i + ctoks.size() <= toks.size(); ++i) {
                if (std::equal(ctoks.begin(), ctoks.end(), toks.begin() + static_cast<std::ptrdiff_t>(i))) {
                    out.push_back(raw);
                    break;
                }
            }
        }
        return out;
    }

    // Serialization: one JSON object per record, field "kind" selects the
    // record type.
    nlohmann::json to_records() const
    {
        auto arr = nlohmann::json::array();
        for (const auto& [sub, super] : type_edges_) {
            arr.push_back({{"kind", "type_edge"}, {"sub", sub}, {"super", super}});
        }
        for (const auto& [c, t] : instances_) {
            arr.push_back({{"kind", "instance"}, {"constant", c}, {"type", t}});
        }
        for (const auto& names : aliases_) {
            arr.push_back({{"kind", "alias"}, {"names", names}});
        }
        for (const auto& [f, s] : entailments_) {
            arr.push_back({{"kind", "entailment"}, {"fact", f}, {"subgoal", s}});
        }
        for (const auto& [q, t] : rules_) {
            arr.push_back({{"kind", "rule"}, {"question", q}, {"text", t}});
        }
        for (const auto& r : refinements_) {
            nlohmann::json j = {{"kind", "refinement"}, {"subgoal", r.subgoal}, {"refined", r.refined}};
            if (r.relation) {
                j["relation"] = to_string(*r.relation);
            }
            arr.push_back(std::move(j));
        }
        return arr;
    }

    void add_record(const nlohmann::json& j)
    {
        auto field = [&](const char* name) {
            if (!j.contains(name) || !j[name].is_string()) {
                throw KbError(std::string("record missing field '") + name + "'");
            }
            return j[name].get<std::string>();
        };
        auto kind = field("kind");
        if (kind == "type_edge") {
            add_type_edge(field("sub"), field("super"));
        } else if (kind == "instance") {
            add_instance(field("constant"), field("type"));
        } else if (kind == "alias") {
            if (!j.contains("names") || !j["names"].is_array()) {
                throw KbError("record missing field 'names'");
            }
            add_alias_class(j["names"].get<std::vector<std::string>>());
        } else if (kind == "entailment") {
            add_entailment(field("fact"), field("subgoal"));
        } else if (kind == "rule") {
            add_rule(field("question"), field("text"));
        } else if (kind == "refinement") {
            std::optional<RelationType> rel;
            if (j.contains("relation")) {
                rel = parse_relation(field("relation"));
            }
            add_refinement(field("subgoal"), field("refined"), rel);
        } else {
            throw KbError("unknown record kind '" + kind + "'");
        }
    }

    static OracleKb from_records(const nlohmann::json& arr)
    {
        OracleKb kb;
        for (const auto& r : arr) {
            kb.add_record(r);
        }
        kb.finalize();
        return kb;
    }

    /// A .jsonl record file, or a .json object carrying a "kb" array.
    static OracleKb load(const std::filesystem::path& path)
    {
        std::ifstream in(path);
        if (!in) {
            throw KbError("cannot read " + path.string());
        }
        if (path.extension() == ".json") {
            auto j = nlohmann::json::parse(in, nullptr, false);
            if (j.is_discarded() || !j.contains("kb")) {
                throw KbError(path.string() + ": expected an object with a \"kb\" array");
            }
            return from_records(j["kb"]);
        }
        OracleKb kb;
        std::string line;
        std::size_t n = 0;
        while (std::getline(in, line)) {
            ++n;
            if (text::trim_view(line).empty()) {
                continue;
            }
            auto j = nlohmann::json::parse(line, nullptr, false);
            if (j.is_discarded()) {
                throw KbError(path.string() + ":" + std::to_string(n) + ": invalid JSON");
            }
            try {
                kb.add_record(j);
            } catch (const KbError& e) {
                throw KbError(path.string() + ":" + std::to_string(n) + ": " + e.what());
            }
        }
        kb.finalize();
        return kb;
    }

    static RelationType parse_relation(const std::string& s)
    {
        auto r = text::to_lower(text::trim(s));
        if (r == "temporal") {
            return RelationType::temporal;
        }
        if (r == "causal") {
            return RelationType::causal;
        }
        if (r == "spatial") {
            return RelationType::spatial;
        }
        if (r == "semantic") {
            return RelationType::semantic;
        }
        throw KbError("unknown relation type '" + s + "'");
    }

private:
    static std::string key(const std::string& s) { return text::normalize_for_match(s); }

    std::string canon(const std::string& name) const
    {
        auto k = key(name);
        auto it = alias_of_.find(k);
        return it == alias_of_.end() ? k : "\x01" + std::to_string(it->second);
    }

    void add_known_constant(const std::string& raw)
    {
        auto toks = text::tokenize(raw);
        for (const auto& [t, r] : known_constants_) {
            if (r == raw) {
                return;
            }
        }
        known_constants_.emplace_back(std::move(toks), raw);
    }

    void check() const
    {
        if (!finalized_) {
            throw std::logic_error("OracleKb queried before finalize()");
        }
    }

    std::vector<std::pair<std::string, std::string>> type_edges_;
    std::vector<std::pair<std::string, std::string>> instances_;
    std::vector<std::vector<std::string>> aliases_;
    std::vector<std::pair<std::string, std::string>> entailments_;
    std::vector<std::pair<std::string, std::string>> rules_;
    std::vector<RefinementScript> refinements_;

    bool finalized_ = false;
    std::map<std::string, std::set<std::string>> supertypes_;
    std::map<std::string, std::size_t> alias_of_;
    std::map<std::string, std::set<std::string>> instance_types_;
    std::set<std::pair<std::string, std::string>> entail_set_;
    std::map<std::string, std::vector<DecompositionRule>> rule_index_;
    std::map<std::string, RefinementScript> refine_index_;
    std::vector<std::pair<std::vector<std::string>, std::string>> known_constants_;
};

// ---------------------------------------------------------------------------
// Batched unification

namespace oracle {

struct Candidate {
    std::string constant;
    std::optional<std::string> type_label;
};

/// Constants a fact offers for binding: its slot terms plus KB constants
/// mentioned in the text.
inline std::vector<Candidate> fact_candidates(const OracleKb& kb, const MemoryFact& fact)
{
    std::vector<Candidate> out;
    auto add = [&](const std::string& c, std::optional<std::string> t) {
        for (auto& existing : out) {
            if (existing.constant == c) {
                if (!existing.type_label) {
                    existing.type_label = std::move(t);
                }
                return;
            }
        }
        out.push_back({c, std::move(t)});
    };
    try {
        for (const auto& slot : parse_formula(fact.text).slots()) {
            add(slot.term.name, slot.term.type_label);
        }
    } catch (const FormulaError&) {
        // Free text; fall back to KB constants only.
    }
    for (const auto& c : kb.constants_in(fact.text)) {
        add(c, std::nullopt);
    }
    return out;
}

enum class Stage { no_candidate, candidate, typed, consistent };

struct Option {
    Substitution delta;
    std::size_t fact = 0;  // 1-based
};

struct SubgoalScan {
    std::vector<Option> options;
    Stage best = Stage::no_candidate;
};

inline constexpr std::size_t kMaxCombinations = 4096;

/// Checks every candidate binding of `goal` against every fact, in the order
/// type consistency, equality with theta, entailment.
inline SubgoalScan scan(const OracleKb& kb, const AtomicFormula& goal, const Substitution& theta,
                        const std::vector<MemoryFact>& facts)
{
    SubgoalScan result;
    std::vector<FreeVariable> vars;
    for (const auto& v : free_variables(goal)) {
        if (std::none_of(vars.begin(), vars.end(), [&](const auto& x) { return x.name == v.name; })) {
            vars.push_back(v);
        }
    }
    for (std::size_t j = 0; j < facts.size(); ++j) {
        auto cands = fact_candidates(kb, facts[j]);
        std::vector<std::vector<Candidate>> per_var;
        std::size_t combos = 1;
        for (const auto& v : vars) {
            std::vector<Candidate> list = cands;
            if (const auto* b = theta.find(v.name)) {
                bool present = std::any_of(list.begin(), list.end(),
                                           [&](const auto& c) { return c.constant == b->constant; });
                if (!present) {
                    list.insert(list.begin(), Candidate{b->constant, b->type_label});
                }
            }
            combos *= std::max<std::size_t>(list.size(), 1);
            per_var.push_back(std::move(list));
        }
        if (std::any_of(per_var.begin(), per_var.end(), [](const auto& l) { return l.empty(); })) {
            continue;
        }
        result.best = std::max(result.best, Stage::candidate);
        combos = std::min(combos, kMaxCombinations);
        std::vector<std::size_t> idx(vars.size(), 0);
        for (std::size_t n = 0; n < combos; ++n) {
            bool typed = true;
            bool consistent = true;
            Substitution delta;
            for (std::size_t k = 0; k < vars.size(); ++k) {
                const auto& c = per_var[k][idx[k]];
                const auto* bound = theta.find(vars[k].name);
                if (bound == nullptr) {
                    bool ok = kb.instance_of(c.constant, vars[k].type_label)
                              || (c.type_label && kb.type_entails(*c.type_label, vars[k].type_label));
                    typed = typed && ok;
                } else {
                    consistent = consistent && kb.equal(c.constant, bound->constant);
                }
                delta.bind(vars[k].name, c.constant);
            }
            if (typed) {
                result.best = std::max(result.best, Stage::typed);
                if (consistent) {
                    result.best = std::max(result.best, Stage::consistent);
                    auto grounded = render_formula(apply_substitution(goal, delta));
                    if (kb.entails(facts[j].text, grounded)) {
                        result.options.push_back({delta, j + 1});
                    }
                }
            }
            // Odometer over the candidate lists.
            for (std::size_t k = 0; k < idx.size(); ++k) {
                if (++idx[k] < per_var[k].size()) {
                    break;
                }
                idx[k] = 0;
            }
        }
    }
    return result;
}

inline bool same_bindings(const OracleKb& kb, const Substitution& a, const Substitution& b)
{
    if (a.size() != b.size()) {
        return false;
    }
    for (const auto& [var, binding] : a.bindings()) {
        const auto* other = b.find(var);
        if (other == nullptr || !kb.equal(binding.constant, other->constant)) {
            return false;
        }
    }
    return true;
}

inline std::string unresolved_reason(const AtomicFormula& goal, Stage best)
{
    if (free_variables(goal).empty()) {
        return "no retrieved fact entails it";
    }
    switch (best) {
    case Stage::no_candidate:
        return "no retrieved fact offers a candidate binding";
    case Stage::candidate:
        return "no candidate binding is type-consistent";
    case Stage::typed:
        return "candidate bindings conflict with the current substitution";
    case Stage::consistent:
        return "no retrieved fact entails the grounded subgoal";
    }
    return "";
}

/// Rounds of simultaneous evaluation: subgoals whose accepted bindings all
/// agree are grounded together and extend theta for the next round. Two
/// forced bindings that disagree, or a subgoal left with disagreeing options
/// at the fixpoint, is a conflict. The outcome does not depend on fact order.
inline UnifyVerdict unify(const OracleKb& kb, const std::vector<AtomicFormula>& subgoals,
                          const Substitution& theta_in, const std::vector<MemoryFact>& facts,
                          const std::vector<std::string>& answer_variables)
{
    UnifyVerdict v;
    Substitution theta = theta_in;
    std::vector<bool> done(subgoals.size(), false);
    std::vector<Stage> best(subgoals.size(), Stage::no_candidate);
    std::string conflict_note;
    std::set<std::size_t> used_facts;

    while (conflict_note.empty()) {
        struct Forced {
            std::size_t subgoal;
            Substitution delta;
            std::vector<std::size_t> facts;
        };
        std::vector<Forced> forced;
        std::vector<std::size_t> ambiguous;
        for (std::size_t i = 0; i < subgoals.size(); ++i) {
            if (done[i]) {
                continue;
            }
            auto s = scan(kb, subgoals[i], theta, facts);
            best[i] = std::max(best[i], s.best);
            if (s.options.empty()) {
                continue;
            }
            bool agree = std::all_of(s.options.begin(), s.options.end(),
                                     [&](const Option& o) { return same_bindings(kb, o.delta, s.options[0].delta); });
            if (!agree) {
                ambiguous.push_back(i);
                continue;
            }
            Forced f{i, s.options[0].delta, {}};
            for (const auto& o : s.options) {
                if (std::find(f.facts.begin(), f.facts.end(), o.fact) == f.facts.end()) {
                    f.facts.push_back(o.fact);
                }
            }
            std::sort(f.facts.begin(), f.facts.end());
            forced.push_back(std::move(f));
        }
        if (forced.empty()) {
            if (!ambiguous.empty()) {
                conflict_note = "retrieved facts support incompatible bindings for "
                                + render_formula(subgoals[ambiguous.front()]);
            }
            break;
        }
        Substitution pending;
        for (const auto& f : forced) {
            for (const auto& [var, b] : f.delta.bindings()) {
                if (theta.contains(var)) {
                    continue;
                }
                if (const auto* p = pending.find(var)) {
                    if (!kb.equal(p->constant, b.constant)) {
                        conflict_note = "variable " + var + " bound to both " + p->constant + " and " + b.constant;
                    }
                    continue;
                }
                pending.bind(var, b);
            }
        }
        if (!conflict_note.empty()) {
            break;
        }
        for (const auto& [var, b] : pending.bindings()) {
            theta.bind(var, b);
        }
        for (auto& f : forced) {
            done[f.subgoal] = true;
            used_facts.insert(f.facts.begin(), f.facts.end());
            GroundedEntry g;
            g.subgoal = render_formula(subgoals[f.subgoal]);
            g.fact_refs = f.facts;
            g.support = support_text(f.facts);
            g.bindings = f.delta;
            v.grounded.push_back(std::move(g));
            v.known_info.push_back(
                text::strip_terminal_punct(render_formula(apply_substitution(subgoals[f.subgoal], theta))));
        }
    }

    for (std::size_t i = 0; i < subgoals.size(); ++i) {
        if (!done[i]) {
            v.unresolved.push_back({render_formula(subgoals[i]),
                                    conflict_note.empty() ? unresolved_reason(subgoals[i], best[i]) : conflict_note});
        }
    }
    if (!conflict_note.empty()) {
        v.status = UnifyStatus::conflict;
        v.substitution = theta_in;
    } else {
        v.status = v.unresolved.empty() ? UnifyStatus::satisfied : UnifyStatus::unsatisfied;
        v.substitution = theta;
    }
    v.final_answer = dont_know();
    if (v.status == UnifyStatus::satisfied) {
        if (answer_variables.empty()) {
            v.final_answer = "yes";
        } else if (const auto* b = v.substitution.find(answer_variables.front())) {
            v.final_answer = b->constant;
        }
    }
    v.reasoning = conflict_note.empty() ? "Used " + std::to_string(used_facts.size()) + " facts and 1 general rule."
                                        : conflict_note + ".";
    return v;
}

/// Question tokens with one token dropped per rewrite; never adds words.
inline std::vector<std::string> surface_rewrites(const std::string& question, std::size_t n)
{
    auto toks = text::tokenize(question);
    std::vector<std::string> out;
    for (std::size_t k = 0; k < n; ++k) {
        if (toks.size() <= 1) {
            out.push_back(text::join(toks, " "));
            continue;
        }
        auto copy = toks;
        copy.erase(copy.begin() + static_cast<std::ptrdiff_t>(k % toks.size()));
        out.push_back(text::join(copy, " "));
    }
    return out;
}

}  // namespace oracle

/// Judge backed by an OracleKb. Stateless apart from the shared, immutable KB.
class OracleJudge : public Judge {
public:
    explicit OracleJudge(std::shared_ptr<const OracleKb> kb) : kb_(std::move(kb))
    {
        if (!kb_ || !kb_->finalized()) {
            throw std::invalid_argument("OracleJudge needs a finalized knowledge base");
        }
    }

    const OracleKb& kb() const { return *kb_; }

    Goal parse_goal(const std::string& question) override { return goal_from_rule(rules(question).front()); }

    /// First scripted rule whose subgoal set differs from every prior one;
    /// the last rule (a duplicate) once the script is used up.
    DecompositionRule decompose(const DecomposeRequest& req) override
    {
        const auto& list = rules(req.question);
        std::set<std::set<std::string>> seen;
        for (const auto& p : req.prior) {
            seen.insert(subgoal_set_key(p));
        }
        for (const auto& r : list) {
            if (!seen.contains(subgoal_set_key(r))) {
                return r;
            }
        }
        return list.back();
    }

    UnifyVerdict unify(const UnifyRequest& req) override
    {
        return oracle::unify(*kb_, req.subgoals, req.theta, req.facts, req.goal.answer_variables);
    }

    RefineVerdict refine(const RefineRequest& req) override
    {
        RefineVerdict v;
        std::set<std::string> previous;
        for (const auto& p : req.previous_refined) {
            previous.insert(text::canonical_key(p));
        }
        std::set<std::string> declared(req.goal.answer_variables.begin(), req.goal.answer_variables.end());
        for (const auto& u : req.unresolved) {
            const auto* script = kb_->refinement_for(render_formula(u));
            if (script == nullptr) {
                script = kb_->refinement_for(render_formula(apply_substitution(u, req.theta)));
            }
            if (script == nullptr || previous.contains(text::canonical_key(script->refined))) {
                continue;
            }
            auto f = parse_formula(script->refined, declared);
            if (std::any_of(v.refined_subgoals.begin(), v.refined_subgoals.end(),
                            [&](const auto& g) { return g == f; })) {
                continue;
            }
            if (!v.relation_type) {
                v.relation_type = script->relation.value_or(RelationType::semantic);
            }
            v.refined_subgoals.push_back(f);
            v.retrieval_queries.push_back(text::strip_terminal_punct(text::strip_slot_markers(script->refined)));
        }
        if (v.refined_subgoals.empty()) {
            v.status = RefineStatus::stop;
            v.rationale = "No scripted antecedent remains for the unresolved subgoals.";
            return v;
        }
        v.status = RefineStatus::refine;
        v.missing_info = text::join(v.retrieval_queries, "; ");
        v.rationale = "Grounding the antecedent makes the unresolved subgoal checkable.";
        return v;
    }

    std::string answer(const AnswerRequest& req) override
    {
        if (req.goal && req.grounded_goal) {
            if (req.goal->answer_variables.empty()) {
                return "yes";
            }
            const auto* b = req.theta.find(req.goal->answer_variables.front());
            return b ? b->constant : dont_know();
        }
        return forward_answer(req.question, req.facts);
    }

    bool type_entails(const std::string& sub, const std::string& super) override
    {
        return kb_->type_entails(sub, super);
    }
    bool instance_of(const std::string& constant, const std::string& type) override
    {
        return kb_->instance_of(constant, type);
    }
    bool equal(const std::string& a, const std::string& b, const std::string&) override { return kb_->equal(a, b); }
    bool entails(const std::string& fact, const std::string& subgoal) override
    {
        return kb_->entails(fact, subgoal);
    }

    // Forward baselines: query generation never goes beyond the question's
    // own tokens, and answering succeeds only when the facts in hand ground
    // the scripted goal.

    std::vector<std::string> rewrite(const std::string& question, std::size_t n) override
    {
        return oracle::surface_rewrites(question, n);
    }

    ReflectionDecision reflect(const std::string& question, const std::vector<std::string>& queries,
                               const std::vector<MemoryFact>& facts) override
    {
        ReflectionDecision d;
        d.sufficient = !is_dont_know(forward_answer(question, facts));
        if (!d.sufficient) {
            d.next_query = next_surface_query(question, queries);
        }
        d.rationale = d.sufficient ? "the facts ground the goal" : "the goal is not grounded yet";
        return d;
    }

    ReactStep react(const ReactRequest& req) override
    {
        ReactStep s;
        auto a = forward_answer(req.question, req.observations);
        auto next = next_surface_query(req.question, req.queries);
        if (!is_dont_know(a) || req.force_finish || next.empty()) {
            s.thought = "Answer from the observations.";
            s.action = ReactStep::Action::finish;
            s.argument = a;
        } else {
            s.thought = "Search again.";
            s.action = ReactStep::Action::retrieve;
            s.argument = next;
        }
        return s;
    }

    IntentCapture capture_intent(const std::string& question, std::size_t n) override
    {
        return {question, oracle::surface_rewrites(question, n)};
    }

    SlotDecision check_slots(const std::string& question, const std::string&, const std::vector<std::string>& queries,
                             const std::vector<MemoryFact>& facts, std::size_t max_followups) override
    {
        SlotDecision d;
        d.sufficient = !is_dont_know(forward_answer(question, facts));
        if (d.sufficient) {
            return d;
        }
        d.missing_slots.push_back("answer");
        auto issued = queries;
        while (d.followups.size() < max_followups) {
            auto q = next_surface_query(question, issued);
            if (q.empty()) {
                break;
            }
            d.followups.push_back(q);
            issued.push_back(q);
        }
        return d;
    }

    /// Share of the question's tokens that appear in each candidate.
    std::vector<double> score_candidates(const std::string& question, const std::vector<std::string>&,
                                         const std::vector<MemoryFact>& candidates) override
    {
        auto qt = text::tokenize(question);
        std::set<std::string> q(qt.begin(), qt.end());
        std::vector<double> out;
        for (const auto& c : candidates) {
            auto ft = text::tokenize(c.text);
            std::set<std::string> f(ft.begin(), ft.end());
            std::size_t hit = 0;
            for (const auto& t : q) {
                hit += f.contains(t) ? 1 : 0;
            }
            out.push_back(q.empty() ? 0.0 : static_cast<double>(hit) / static_cast<double>(q.size()));
        }
        return out;
    }

    bool judge_answer(const std::string&, const std::string& reference, const std::string& prediction) override
    {
        return kb_->equal(reference, prediction);
    }

    /// Grounds the first scripted rule together with every scripted
    /// refinement reachable from it, using only `facts`.
    std::string forward_answer(const std::string& question, const std::vector<MemoryFact>& facts) const
    {
        const auto* list = kb_->rules_for(question);
        if (list == nullptr || list->empty()) {
            return dont_know();
        }
        const auto& rule = list->front();
        auto goal = goal_from_rule(rule);
        std::set<std::string> declared(goal.answer_variables.begin(), goal.answer_variables.end());
        std::vector<AtomicFormula> closure = rule.antecedents;
        std::set<std::string> keys;
        for (const auto& a : closure) {
            keys.insert(text::canonical_key(render_formula(a)));
        }
        for (std::size_t i = 0; i < closure.size(); ++i) {
            const auto* s = kb_->refinement_for(render_formula(closure[i]));
            if (s != nullptr && keys.insert(text::canonical_key(s->refined)).second) {
                closure.push_back(parse_formula(s->refined, declared));
            }
        }
        auto v = oracle::unify(*kb_, closure, {}, facts, goal.answer_variables);
        if (v.status == UnifyStatus::conflict) {
            return dont_know();
        }
        std::set<std::string> grounded;
        for (const auto& g : v.grounded) {
            grounded.insert(text::canonical_key(g.subgoal));
        }
        for (const auto& a : rule.antecedents) {
            if (!grounded.contains(text::canonical_key(render_formula(a)))) {
                return dont_know();
            }
        }
        if (goal.answer_variables.empty()) {
            return "yes";
        }
        const auto* b = v.substitution.find(goal.answer_variables.front());
        return b ? b->constant : dont_know();
    }

private:
    const std::vector<DecompositionRule>& rules(const std::string& question) const
    {
        const auto* list = kb_->rules_for(question);
        if (list == nullptr || list->empty()) {
            throw JudgeError(JudgeError::Kind::unsupported, "no scripted decomposition for: " + question);
        }
        return *list;
    }

    static std::string next_surface_query(const std::string& question, const std::vector<std::string>& issued)
    {
        std::set<std::string> seen;
        for (const auto& q : issued) {
            seen.insert(text::canonical_key(q));
        }
        auto toks = text::tokenize(question);
        for (const auto& q : oracle::surface_rewrites(question, toks.size())) {
            if (!seen.contains(text::canonical_key(q))) {
                return q;
            }
        }
        return {};
    }

    std::shared_ptr<const OracleKb> kb_;
};

}  // namespace goalmem
