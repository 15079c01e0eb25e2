#pragma once
// Backward-chaining search: breadth loop over goal decompositions, depth loop
// over subgoal refinements.

#include <algorithm>
#include <functional>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "json.hpp"

#include "goalmem/judge.hpp"
#include "goalmem/memory.hpp"

namespace goalmem {

struct SolverConfig {
    std::size_t max_breadth = 3;
    std::size_t max_depth = 5;
    std::size_t retrieval_cap = kDefaultRetrievalCap;
    std::size_t per_subgoal_fanout = 10;

    /// max_depth may be 0 (no refinement); everything else must be positive.
    void validate() const
    {
        for (auto [name, v] : {std::pair<const char*, std::size_t>{"max_breadth", max_breadth},
                               {"retrieval_cap", retrieval_cap},
                               {"per_subgoal_fanout", per_subgoal_fanout}}) {
            if (v == 0) {
                throw std::invalid_argument(std::string("solver.") + name + " must be positive");
            }
        }
        if (per_subgoal_fanout > retrieval_cap) {
            throw std::invalid_argument("per_subgoal_fanout exceeds retrieval_cap");
        }
    }

    /// 1 + B(2 + 2D): goal parsing plus per-breadth decomposition,
    /// unification and refinement calls. Answer generation is one more.
    std::size_t judge_call_bound() const { return 1 + max_breadth * (2 + 2 * max_depth); }
};

struct TelemetryRecord {
    std::string method = "goalmem";
    std::string item_id;
    bool answered = false;
    std::size_t max_breadth = 0;
    std::size_t max_depth = 0;
    std::size_t retrieval_cap = kDefaultRetrievalCap;
    std::size_t realized_breadth = 0;
    std::size_t realized_depth = 0;
    std::vector<std::size_t> subgoal_counts;
    std::size_t judge_calls = 0;
    std::size_t retrieval_calls = 0;
    std::size_t admitted_facts = 0;
    /// Most subgoals retrieved for in a single step.
    std::size_t max_step_subgoals = 0;
    std::size_t dropped_refinements = 0;
    std::size_t format_retries = 0;
    /// Facts shown to the answer stage.
    std::size_t answer_facts = 0;
    /// Baselines: turns, steps or rounds taken.
    std::size_t iterations = 0;

    bool operator==(const TelemetryRecord&) const = default;
};

inline nlohmann::json telemetry_to_json(const TelemetryRecord& t)
{
    return {
        {"method", t.method},
        {"item_id", t.item_id},
        {"answered", t.answered},
        {"max_breadth", t.max_breadth},
        {"max_depth", t.max_depth},
        {"retrieval_cap", t.retrieval_cap},
        {"realized_breadth", t.realized_breadth},
        {"realized_depth", t.realized_depth},
        {"subgoal_counts", t.subgoal_counts},
        {"judge_calls", t.judge_calls},
        {"retrieval_calls", t.retrieval_calls},
        {"admitted_facts", t.admitted_facts},
        {"max_step_subgoals", t.max_step_subgoals},
        {"dropped_refinements", t.dropped_refinements},
        {"format_retries", t.format_retries},
        {"answer_facts", t.answer_facts},
        {"iterations", t.iterations},
    };
}

inline TelemetryRecord telemetry_from_json(const nlohmann::json& j)
{
    TelemetryRecord t;
    t.method = j.value("method", std::string("goalmem"));
    t.item_id = j.value("item_id", std::string());
    t.answered = j.value("answered", false);
    t.max_breadth = j.value("max_breadth", std::size_t{0});
    t.max_depth = j.value("max_depth", std::size_t{0});
    t.retrieval_cap = j.value("retrieval_cap", kDefaultRetrievalCap);
    t.realized_breadth = j.value("realized_breadth", std::size_t{0});
    t.realized_depth = j.value("realized_depth", std::size_t{0});
    t.subgoal_counts = j.value("subgoal_counts", std::vector<std::size_t>{});
    t.judge_calls = j.value("judge_calls", std::size_t{0});
    t.retrieval_calls = j.value("retrieval_calls", std::size_t{0});
    t.admitted_facts = j.value("admitted_facts", std::size_t{0});
    t.max_step_subgoals = j.value("max_step_subgoals", std::size_t{0});
    t.dropped_refinements = j.value("dropped_refinements", std::size_t{0});
    t.format_retries = j.value("format_retries", std::size_t{0});
    t.answer_facts = j.value("answer_facts", std::size_t{0});
    t.iterations = j.value("iterations", std::size_t{0});
    return t;
}

/// Per-breadth search state.
struct SolverState {
    std::size_t breadth = 0;
    std::size_t depth = 0;
    Substitution theta;
    /// Accumulated subgoals, in order of first appearance.
    std::vector<AtomicFormula> subgoals;
    std::set<std::string> resolved;    // subgoal keys
    std::set<std::string> unresolved;  // subgoal keys
    std::vector<MemoryFact> pool;      // M_t
    std::set<std::string> supporting;  // fact ids
    std::vector<std::string> known_info;
    std::vector<DecompositionRule> prior;
};

struct SolveOutcome {
    enum class Kind { answered, failed };

    Kind kind = Kind::failed;
    std::string answer;
    std::optional<AtomicFormula> grounded_goal;
    Goal goal;
    Substitution theta;
    std::vector<MemoryFact> supporting_facts;
    /// Grounded subgoal texts with the ids of the facts cited for them.
    std::vector<std::pair<std::string, std::vector<std::string>>> groundings;
    TelemetryRecord telemetry;
    std::string diagnostic;
};

struct SolveHooks {
    /// Called after every unification with the updated state.
    std::function<void(const SolverState&)> after_unify;
};

inline std::string subgoal_key(const AtomicFormula& f) { return text::canonical_key(render_formula(f)); }

namespace detail {

class SolveRun {
public:
    SolveRun(const std::string& question, const MemoryStore& store, Judge& judge, const SolverConfig& cfg,
             const SolveHooks& hooks)
        : question_(question), store_(store), judge_(judge), cfg_(cfg), hooks_(hooks)
    {
        budget_.cap = cfg.retrieval_cap;
        out_.telemetry.max_breadth = cfg.max_breadth;
        out_.telemetry.max_depth = cfg.max_depth;
        out_.telemetry.retrieval_cap = cfg.retrieval_cap;
    }

    SolveOutcome run()
    {
        auto retries_before = judge_.format_retries();
        try {
            search();
        } catch (const JudgeError& e) {
            fail(std::string("judge failure: ") + e.what());
        } catch (const std::exception& e) {
            fail(std::string("judge failure: ") + e.what());
        }
        out_.telemetry.admitted_facts = budget_.spent;
        out_.telemetry.format_retries = judge_.format_retries() - retries_before;
        out_.telemetry.answered = out_.kind == SolveOutcome::Kind::answered;
        return std::move(out_);
    }

private:
    void fail(std::string why)
    {
        out_.kind = SolveOutcome::Kind::failed;
        out_.answer.clear();
        out_.grounded_goal.reset();
        out_.supporting_facts.clear();
        if (out_.diagnostic.empty()) {
            out_.diagnostic = std::move(why);
        }
    }

    void search()
    {
        ++calls();
        goal_ = judge_.parse_goal(question_);
        out_.goal = goal_;
        std::vector<DecompositionRule> prior;
        std::vector<std::string> reasons;
        for (std::size_t b = 1; b <= cfg_.max_breadth; ++b) {
            out_.telemetry.realized_breadth = b;
            out_.telemetry.realized_depth = 0;
            auto reason = attempt(b, prior);
            if (!reason) {
                return;
            }
            reasons.push_back("breadth " + std::to_string(b) + ": " + *reason);
        }
        fail("no decomposition grounded the goal (" + text::join(reasons, "; ") + ")");
    }

    std::size_t& calls() { return out_.telemetry.judge_calls; }

    bool is_new(const DecompositionRule& r, const std::vector<DecompositionRule>& prior) const
    {
        if (r.antecedents.empty()) {
            return false;
        }
        auto k = subgoal_set_key(r);
        return std::none_of(prior.begin(), prior.end(), [&](const auto& p) { return subgoal_set_key(p) == k; });
    }

    /// One breadth attempt. Returns nullopt on success, else why it failed.
    std::optional<std::string> attempt(std::size_t b, std::vector<DecompositionRule>& prior)
    {
        const std::size_t allowance = 2 + 2 * cfg_.max_depth;
        std::size_t used = 0;

        DecomposeRequest dreq{question_, goal_, {}, {}, prior, false};
        ++calls();
        ++used;
        auto rule = judge_.decompose(dreq);
        if (!is_new(rule, prior) && used + 2 <= allowance) {
            dreq.retry = true;
            ++calls();
            ++used;
            rule = judge_.decompose(dreq);
        }
        bool fresh = is_new(rule, prior);
        prior.push_back(rule);
        if (!fresh) {
            return std::string("decomposition repeated an earlier one");
        }
        out_.telemetry.subgoal_counts.push_back(rule.antecedents.size());

        SolverState st;
        st.breadth = b;
        st.prior = prior;
        rule_text_ = rule_text_of(rule);
        std::vector<AtomicFormula> frontier;
        for (const auto& a : rule.antecedents) {
            if (add_subgoal(st, a)) {
                frontier.push_back(a);
            }
        }
        retrieve(st, frontier);
        ++calls();
        ++used;
        auto verdict = unify(st);
        if (verdict.status == UnifyStatus::conflict) {
            return std::string("conflicting bindings");
        }
        if (!try_finish(st)) {
            return std::nullopt;
        }

        std::vector<std::string> missing_seen;
        std::vector<std::string> refined_seen;
        for (std::size_t d = 1; d <= cfg_.max_depth; ++d) {
            if (used + 2 > allowance) {
                break;
            }
            std::vector<AtomicFormula> open;
            std::vector<std::string> reasons;
            for (const auto& f : frontier) {
                if (st.unresolved.contains(subgoal_key(f))) {
                    open.push_back(f);
                    reasons.push_back(reason_for(verdict, f));
                }
            }
            if (open.empty()) {
                break;
            }
            RefineRequest rreq{question_, goal_,         rule_text_, st.subgoals,  st.theta,     st.known_info,
                               render_unify_verdict(verdict), open, reasons, missing_seen, refined_seen, st.pool};
            ++calls();
            ++used;
            auto rv = judge_.refine(rreq);
            if (rv.status == RefineStatus::stop) {
                break;
            }
            if (!rv.missing_info.empty()) {
                missing_seen.push_back(rv.missing_info);
            }
            frontier.clear();
            for (const auto& f : rv.refined_subgoals) {
                refined_seen.push_back(render_formula(f));
                if (add_subgoal(st, f)) {
                    frontier.push_back(f);
                } else {
                    ++out_.telemetry.dropped_refinements;
                }
            }
            if (frontier.empty()) {
                break;
            }
            st.depth = d;
            out_.telemetry.realized_depth = d;
            auto fresh_facts = retrieve(st, frontier);
            ++calls();
            ++used;
            verdict = unify(st);
            if (verdict.status == UnifyStatus::conflict) {
                return std::string("conflicting bindings at depth ") + std::to_string(d);
            }
            if (!try_finish(st)) {
                return std::nullopt;
            }
            if (fresh_facts == 0) {
                break;
            }
        }
        return std::string("unresolved subgoals remain");
    }

    bool add_subgoal(SolverState& st, const AtomicFormula& f)
    {
        auto k = subgoal_key(f);
        if (std::any_of(st.subgoals.begin(), st.subgoals.end(), [&](const auto& g) { return subgoal_key(g) == k; })) {
            return false;
        }
        st.subgoals.push_back(f);
        st.unresolved.insert(k);
        return true;
    }

    /// One retrieval per subgoal; results are merged in fact-id order. Facts
    /// admitted by an earlier breadth rejoin the pool without new budget.
    std::size_t retrieve(SolverState& st, const std::vector<AtomicFormula>& subgoals)
    {
        out_.telemetry.max_step_subgoals = std::max(out_.telemetry.max_step_subgoals, subgoals.size());
        std::map<std::string, ScoredFact> hits;
        for (const auto& s : subgoals) {
            ++out_.telemetry.retrieval_calls;
            auto query = render_formula(apply_substitution(s, st.theta));
            for (auto& r : store_.retrieve(query, cfg_.per_subgoal_fanout)) {
                hits.emplace(r.fact.id, std::move(r));
            }
        }
        std::set<std::string> in_pool;
        for (const auto& f : st.pool) {
            in_pool.insert(f.id);
        }
        std::vector<ScoredFact> unseen;
        std::size_t added = 0;
        for (auto& [id, r] : hits) {
            if (in_pool.contains(id)) {
                continue;
            }
            if (budget_.seen_ids.contains(id)) {
                st.pool.push_back(r.fact);
                ++added;
            } else {
                unseen.push_back(std::move(r));
            }
        }
        for (auto& f : budgeted_merge(budget_, unseen)) {
            st.pool.push_back(std::move(f));
            ++added;
        }
        return added;
    }

    UnifyVerdict unify(SolverState& st)
    {
        UnifyRequest req;
        req.question = question_;
        req.goal = goal_;
        req.rule_text = rule_text_;
        for (const auto& s : st.subgoals) {
            if (!st.resolved.contains(subgoal_key(s))) {
                req.subgoals.push_back(s);
            }
        }
        req.theta = st.theta;
        req.known_info = st.known_info;
        req.facts = st.pool;
        auto v = judge_.unify(req);
        if (v.status == UnifyStatus::conflict) {
            notify(st);
            return v;
        }

        // Extend theta; drop bindings for variables the search never used.
        std::set<std::string> known_vars(goal_.answer_variables.begin(), goal_.answer_variables.end());
        for (const auto& fv : free_variables(goal_.formula)) {
            known_vars.insert(fv.name);
        }
        for (const auto& s : st.subgoals) {
            for (const auto& fv : free_variables(s)) {
                known_vars.insert(fv.name);
            }
        }
        Substitution incoming;
        for (const auto& [var, b] : v.substitution.bindings()) {
            if (known_vars.contains(var)) {
                incoming.bind(var, b);
            }
        }
        auto merged = merge_substitutions(st.theta, incoming, judge_.equality());
        if (std::holds_alternative<Conflict>(merged)) {
            v.status = UnifyStatus::conflict;
            notify(st);
            return v;
        }
        st.theta = std::get<Substitution>(merged);

        std::map<std::string, const AtomicFormula*> by_key;
        std::map<std::string, const AtomicFormula*> by_loose;
        for (const auto& s : req.subgoals) {
            by_key.emplace(subgoal_key(s), &s);
            by_loose.emplace(text::normalize_for_match(render_formula(s)), &s);
        }
        for (const auto& g : v.grounded) {
            const AtomicFormula* hit = nullptr;
            if (auto it = by_key.find(text::canonical_key(g.subgoal)); it != by_key.end()) {
                hit = it->second;
            } else if (auto it2 = by_loose.find(text::normalize_for_match(g.subgoal)); it2 != by_loose.end()) {
                hit = it2->second;
            }
            if (hit == nullptr) {
                continue;
            }
            std::vector<std::string> ids;
            for (auto ref : g.fact_refs) {
                if (ref >= 1 && ref <= req.facts.size()) {
                    ids.push_back(req.facts[ref - 1].id);
                }
            }
            if (ids.empty() && !g.from_known_info) {
                continue;
            }
            auto k = subgoal_key(*hit);
            st.resolved.insert(k);
            st.unresolved.erase(k);
            st.supporting.insert(ids.begin(), ids.end());
            out_.groundings.emplace_back(render_formula(*hit), ids);
        }
        for (const auto& k : v.known_info) {
            if (std::find(st.known_info.begin(), st.known_info.end(), k) == st.known_info.end()) {
                st.known_info.push_back(k);
            }
        }
        notify(st);
        return v;
    }

    void notify(const SolverState& st)
    {
        if (hooks_.after_unify) {
            hooks_.after_unify(st);
        }
    }

    static std::string reason_for(const UnifyVerdict& v, const AtomicFormula& f)
    {
        auto k = subgoal_key(f);
        for (const auto& u : v.unresolved) {
            if (text::canonical_key(u.subgoal) == k) {
                return u.reason;
            }
        }
        return {};
    }

    /// Success needs every subgoal grounded, every answer variable bound and,
    /// when there are answer variables, at least one supporting fact.
    std::optional<std::string> try_finish(SolverState& st)
    {
        if (!st.unresolved.empty()) {
            return std::string("unresolved subgoals remain");
        }
        for (const auto& v : goal_.answer_variables) {
            if (!st.theta.contains(v)) {
                return std::string("answer variable ") + v + " unbound";
            }
        }
        if (!goal_.answer_variables.empty() && st.supporting.empty()) {
            return std::string("no supporting facts");
        }
        AnswerRequest req;
        req.question = question_;
        req.goal = goal_;
        req.grounded_goal = apply_substitution(goal_.formula, st.theta);
        req.theta = st.theta;
        for (const auto& f : st.pool) {
            if (st.supporting.contains(f.id)) {
                req.facts.push_back(f);
            }
        }
        out_.telemetry.answer_facts = req.facts.size();
        ++calls();
        out_.answer = judge_.answer(req);
        out_.kind = SolveOutcome::Kind::answered;
        out_.grounded_goal = req.grounded_goal;
        out_.theta = st.theta;
        out_.supporting_facts = req.facts;
        // Keep only the groundings of the successful attempt.
        std::set<std::string> keys;
        for (const auto& s : st.subgoals) {
            keys.insert(render_formula(s));
        }
        std::vector<std::pair<std::string, std::vector<std::string>>> kept;
        for (auto it = out_.groundings.rbegin(); it != out_.groundings.rend(); ++it) {
            if (keys.erase(it->first) > 0) {
                kept.push_back(*it);
            }
        }
        std::reverse(kept.begin(), kept.end());
        out_.groundings = std::move(kept);
        return std::nullopt;
    }

    const std::string& question_;
    const MemoryStore& store_;
    Judge& judge_;
    const SolverConfig& cfg_;
    const SolveHooks& hooks_;
    RetrievalBudget budget_;
    Goal goal_;
    std::string rule_text_;
    SolveOutcome out_;
};

}  // namespace detail

inline SolveOutcome solve(const std::string& question, const MemoryStore& store, Judge& judge,
                          const SolverConfig& config = {}, const SolveHooks& hooks = {})
{
    config.validate();
    return detail::SolveRun(question, store, judge, config, hooks).run();
}

}  // namespace goalmem
