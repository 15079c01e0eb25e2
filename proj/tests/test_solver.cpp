#include <gtest/gtest.h>

#include <algorithm>
#include <random>

#include "goalmem/evalkit.hpp"
#include "goalmem/oracle.hpp"
#include "goalmem/solver.hpp"
#include "scripted_judge.hpp"

using namespace goalmem;
using testing_judges::AdversarialJudge;
using testing_judges::ScriptedJudge;

namespace {

const std::string kCafeQuestion = "Alice: I like the cafe I went to last week, what drink should I try this time?";

const std::string kCafeRule = R"(Goal: Recommend (x:drink) to (Alice) from the menu of the cafe she went to last week.
Rule: IF Alice likes (y:flavor) AND (x:drink) contains (y:flavor) AND (x:drink) is served in (z:cafe visited last week), THEN recommend (x:drink) to Alice.
Variables:
- (x:drink): the drink to recommend
Subgoals:
- Alice likes (y:flavor).
- (x:drink) contains (y:flavor).
- (x:drink) is served in (z:cafe visited last week).)";

const std::string kCafeRuleOneHop = R"(Goal: Recommend (x:drink) to (Alice).
Rule: IF Alice likes (y:flavor) AND (x:drink) contains (y:flavor), THEN recommend (x:drink) to Alice.
Variables:
- (x:drink): the drink to recommend
Subgoals:
- Alice likes (y:flavor).
- (x:drink) contains (y:flavor).)";

/// The cafe example encoded as an oracle KB: ingredient is a kind of flavor,
/// Matcha Powder and Matcha are one thing, and the last-week cafe is found by
/// refining the served-in subgoal.
std::shared_ptr<OracleKb> cafe_kb(const std::string& rule)
{
    auto kb = std::make_shared<OracleKb>();
    kb->add_type_edge("ingredient", "flavor");
    kb->add_alias_class({"Matcha Powder", "Matcha"});
    kb->add_instance("Kyoto Latte", "drink");
    kb->add_instance("Berry Soda", "drink");
    kb->add_instance("Matcha", "flavor");
    kb->add_instance("Strawberry", "flavor");
    kb->add_instance("Momoco", "cafe");
    kb->add_entailment("The cafe advertised a (Kyoto Latte) drink with (Matcha Powder:ingredient)",
                       "(Kyoto Latte) contains (Matcha Powder).");
    kb->add_rule(kCafeQuestion, rule);
    kb->add_refinement("(x:drink) is served in (z:cafe visited last week).", "Alice visited (z:cafe) last week.",
                       RelationType::temporal);
    kb->finalize();
    return kb;
}

void fill_cafe_store(MemoryStore& store)
{
    store.insert("Alice likes matcha.");
    store.insert("(Berry Soda) contains (Strawberry:flavor).");
    store.insert("The cafe advertised a (Kyoto Latte) drink with (Matcha Powder:ingredient)");
    store.insert("(Kyoto Latte) is served in (Momoco).");
    store.insert("Alice visited (Momoco) last week.");
}

Goal simple_goal()
{
    Goal g;
    g.formula = parse_formula("(x:thing) is wanted.");
    g.answer_variables = {"x"};
    return g;
}

DecompositionRule simple_rule(const std::vector<std::string>& subgoals)
{
    DecompositionRule r;
    r.consequent = parse_formula("(x:thing) is wanted.");
    r.answer_variables = {{"x", "thing", ""}};
    for (const auto& s : subgoals) {
        r.antecedents.push_back(parse_formula(s));
    }
    return r;
}

/// Grounds every subgoal it is given with fact 1 and binds x once.
UnifyVerdict ground_all(const UnifyRequest& r)
{
    UnifyVerdict v;
    v.status = UnifyStatus::satisfied;
    for (const auto& s : r.subgoals) {
        GroundedEntry g;
        g.subgoal = render_formula(s);
        g.fact_refs = {1};
        v.grounded.push_back(g);
    }
    if (!r.theta.contains("x")) {
        v.substitution.bind("x", "thing one");
    }
    return v;
}

UnifyVerdict ground_none(const UnifyRequest& r)
{
    UnifyVerdict v;
    v.status = UnifyStatus::unsatisfied;
    for (const auto& s : r.subgoals) {
        v.unresolved.push_back({render_formula(s), "no fact"});
    }
    return v;
}

std::size_t call_bound(const SolverConfig& c) { return 1 + c.max_breadth * (2 + 2 * c.max_depth); }

}  // namespace

// ---------------------------------------------------------------------------
// Config and telemetry

TEST(SolverConfig, DefaultsAndValidation)
{
    SolverConfig c;
    EXPECT_EQ(c.max_breadth, 3u);
    EXPECT_EQ(c.max_depth, 5u);
    EXPECT_EQ(c.retrieval_cap, 60u);
    EXPECT_EQ(c.per_subgoal_fanout, 10u);
    EXPECT_NO_THROW(c.validate());

    auto bad = c;
    bad.max_breadth = 0;
    EXPECT_THROW(bad.validate(), std::invalid_argument);
    bad = c;
    bad.per_subgoal_fanout = 61;
    EXPECT_THROW(bad.validate(), std::invalid_argument);
    bad = c;
    bad.max_depth = 0;
    EXPECT_NO_THROW(bad.validate());
}

TEST(SolverConfig, CallBoundMatchesCountedSchedule)
{
    // Count the schedule directly: goal parse, then per breadth one
    // decomposition, one retry, one unification, and per depth a refinement
    // plus a unification.
    for (std::size_t b = 1; b <= 4; ++b) {
        for (std::size_t d = 0; d <= 6; ++d) {
            std::size_t counted = 1;
            for (std::size_t i = 0; i < b; ++i) {
                counted += 2;
                for (std::size_t j = 0; j < d; ++j) {
                    counted += 2;
                }
            }
            SolverConfig c;
            c.max_breadth = b;
            c.max_depth = d;
            EXPECT_EQ(c.judge_call_bound(), counted);
        }
    }
}

TEST(Telemetry, JsonRoundTrip)
{
    TelemetryRecord t;
    t.item_id = "q7";
    t.answered = true;
    t.max_breadth = 3;
    t.max_depth = 5;
    t.realized_breadth = 2;
    t.realized_depth = 1;
    t.subgoal_counts = {3, 2};
    t.judge_calls = 9;
    t.retrieval_calls = 6;
    t.admitted_facts = 17;
    t.max_step_subgoals = 3;
    t.dropped_refinements = 1;
    t.format_retries = 2;
    t.answer_facts = 4;
    EXPECT_EQ(telemetry_from_json(nlohmann::json::parse(telemetry_to_json(t).dump())), t);
}

// ---------------------------------------------------------------------------
// Oracle scenarios

TEST(Solve, CafeOneHopStopsAtDepthZero)
{
    auto kb = cafe_kb(kCafeRuleOneHop);
    OracleJudge judge(kb);
    Bm25Store store;
    fill_cafe_store(store);
    auto o = solve(kCafeQuestion, store, judge);
    ASSERT_EQ(o.kind, SolveOutcome::Kind::answered) << o.diagnostic;
    EXPECT_EQ(o.answer, "Kyoto Latte");
    EXPECT_EQ(o.telemetry.realized_breadth, 1u);
    EXPECT_EQ(o.telemetry.realized_depth, 0u);
    // parse + decompose + unify + answer
    EXPECT_EQ(o.telemetry.judge_calls, 4u);
    EXPECT_EQ(o.theta.find("y")->constant, "Matcha");
}

TEST(Solve, CafeTwoHopRefinesTheServedInSubgoal)
{
    auto kb = cafe_kb(kCafeRule);
    OracleJudge judge(kb);
    Bm25Store store;
    fill_cafe_store(store);
    auto o = solve(kCafeQuestion, store, judge);
    ASSERT_EQ(o.kind, SolveOutcome::Kind::answered) << o.diagnostic;
    EXPECT_EQ(o.answer, "Kyoto Latte");
    EXPECT_EQ(o.telemetry.realized_depth, 1u);
    EXPECT_EQ(o.theta.find("z")->constant, "Momoco");
    ASSERT_TRUE(o.grounded_goal);
    EXPECT_EQ(render_formula(*o.grounded_goal),
              "Recommend (Kyoto Latte) to (Alice) from the menu of the cafe she went to last week.");
    // Berry Soda was retrieved but supports nothing.
    for (const auto& f : o.supporting_facts) {
        EXPECT_EQ(f.text.find("Berry Soda"), std::string::npos);
    }
    EXPECT_EQ(o.supporting_facts.size(), 4u);
}

TEST(Solve, RefinedSubgoalGroundsAgainstFactsAlreadyInPool)
{
    // Five facts, fanout ten: everything is admitted at depth 0, so the
    // refinement step retrieves nothing new and must still unify.
    auto kb = cafe_kb(kCafeRule);
    OracleJudge judge(kb);
    Bm25Store store;
    fill_cafe_store(store);
    std::vector<std::size_t> pool_sizes;
    SolveHooks hooks;
    hooks.after_unify = [&](const SolverState& s) { pool_sizes.push_back(s.pool.size()); };
    auto o = solve(kCafeQuestion, store, judge, {}, hooks);
    ASSERT_EQ(o.kind, SolveOutcome::Kind::answered);
    ASSERT_EQ(pool_sizes.size(), 2u);
    EXPECT_EQ(pool_sizes[0], 5u);
    EXPECT_EQ(pool_sizes[1], 5u);
    EXPECT_EQ(o.telemetry.admitted_facts, 5u);
}

TEST(Solve, EmptyStoreFailsAfterEveryBreadth)
{
    auto kb = cafe_kb(kCafeRule);
    OracleJudge judge(kb);
    Bm25Store store;
    SolverConfig cfg;
    auto o = solve(kCafeQuestion, store, judge, cfg);
    EXPECT_EQ(o.kind, SolveOutcome::Kind::failed);
    EXPECT_TRUE(o.answer.empty());
    EXPECT_EQ(o.telemetry.realized_breadth, cfg.max_breadth);
    EXPECT_LE(o.telemetry.judge_calls, call_bound(cfg) + 1);
    EXPECT_NE(o.diagnostic.find("breadth 1:"), std::string::npos);
}

TEST(Solve, ConflictAbandonsTheDecompositionAndAdvancesBreadth)
{
    const std::string q = "What did Alice order?";
    auto kb = std::make_shared<OracleKb>();
    kb->add_instance("Kyoto Latte", "drink");
    kb->add_instance("Berry Soda", "drink");
    kb->add_rule(q, "Goal: (Alice) ordered (x:drink).\nRule: IF (Alice) ordered (x:drink), THEN x.\nVariables:\n"
                    "- (x:drink): the order\nSubgoals:\n- (Alice) ordered (x:drink).");
    kb->add_rule(q, "Goal: (Alice) ordered (x:drink).\nRule: IF (Alice) paid for (x:drink), THEN x.\nVariables:\n"
                    "- (x:drink): the order\nSubgoals:\n- (Alice) paid for (x:drink).");
    kb->finalize();
    OracleJudge judge(kb);
    Bm25Store store;
    store.insert("(Alice) ordered (Kyoto Latte).");
    store.insert("(Alice) ordered (Berry Soda).");
    store.insert("(Alice) paid for (Berry Soda).");
    SolverConfig cfg;
    auto o = solve(q, store, judge, cfg);
    ASSERT_EQ(o.kind, SolveOutcome::Kind::answered) << o.diagnostic;
    EXPECT_EQ(o.answer, "Berry Soda");
    EXPECT_EQ(o.telemetry.realized_breadth, 2u);
    // A conflict does not spend the depth budget: parse, decompose, unify,
    // then decompose, unify, answer.
    EXPECT_EQ(o.telemetry.judge_calls, 6u);
}

TEST(Solve, YesNoGoalAnswersAffirmatively)
{
    const std::string q = "Has Melanie been running?";
    auto kb = std::make_shared<OracleKb>();
    kb->add_rule(q, "Goal: Melanie has been running.\nRule: IF Melanie runs in the park, THEN Melanie has been "
                    "running.\nVariables:\n- none: no answer variable is needed\nSubgoals:\n- Melanie runs in the park.");
    kb->finalize();
    OracleJudge judge(kb);
    Bm25Store store;
    store.insert("Melanie runs in the park.");
    auto o = solve(q, store, judge);
    ASSERT_EQ(o.kind, SolveOutcome::Kind::answered) << o.diagnostic;
    EXPECT_EQ(o.answer, "yes");
    EXPECT_EQ(o.supporting_facts.size(), 1u);
}

// ---------------------------------------------------------------------------
// Scripted judges

TEST(Solve, DuplicateDecompositionIsRetriedOnceThenSkipped)
{
    ScriptedJudge j;
    j.on_parse_goal = [](const std::string&) { return simple_goal(); };
    j.on_decompose = [](const DecomposeRequest&) { return simple_rule({"(x:thing) is red."}); };
    j.on_unify = ground_none;
    j.on_refine = [](const RefineRequest&) {
        RefineVerdict v;
        v.status = RefineStatus::stop;
        return v;
    };
    Bm25Store store;
    store.insert("something red.");
    SolverConfig cfg;
    cfg.max_breadth = 3;
    auto o = solve("q", store, j, cfg);
    EXPECT_EQ(o.kind, SolveOutcome::Kind::failed);
    // Breadth 1 decomposes once; breadths 2 and 3 get a duplicate, retry with
    // the next-hop flag, get the duplicate again and are skipped.
    ASSERT_EQ(j.decompose_log.size(), 5u);
    EXPECT_FALSE(j.decompose_log[1].retry);
    EXPECT_TRUE(j.decompose_log[2].retry);
    EXPECT_EQ(j.decompose_log[2].prior.size(), 1u);
    EXPECT_EQ(j.unify_log.size(), 1u);
    EXPECT_EQ(o.telemetry.subgoal_counts, std::vector<std::size_t>{1});
    EXPECT_EQ(o.telemetry.realized_breadth, 3u);
}

TEST(Solve, SecondBreadthSeesPriorDecompositions)
{
    ScriptedJudge j;
    j.on_parse_goal = [](const std::string&) { return simple_goal(); };
    j.on_decompose = [](const DecomposeRequest& r) {
        return r.prior.empty() ? simple_rule({"(x:thing) is red."}) : simple_rule({"(x:thing) is round."});
    };
    j.on_unify = [](const UnifyRequest& r) {
        return render_formula(r.subgoals.at(0)) == "(x:thing) is round." ? ground_all(r) : ground_none(r);
    };
    j.on_refine = [](const RefineRequest&) {
        RefineVerdict v;
        v.status = RefineStatus::stop;
        return v;
    };
    Bm25Store store;
    store.insert("the ball is round.");
    auto o = solve("q", store, j);
    ASSERT_EQ(o.kind, SolveOutcome::Kind::answered) << o.diagnostic;
    EXPECT_EQ(o.telemetry.realized_breadth, 2u);
    EXPECT_EQ(j.decompose_log.back().prior.size(), 1u);
    // Theta starts empty in every breadth.
    EXPECT_TRUE(j.unify_log.back().theta.empty());
}

TEST(Solve, RefinementDuplicatesAreDroppedAndCounted)
{
    ScriptedJudge j;
    j.on_parse_goal = [](const std::string&) { return simple_goal(); };
    j.on_decompose = [](const DecomposeRequest&) { return simple_rule({"(x:thing) is red."}); };
    j.on_unify = ground_none;
    j.on_refine = [](const RefineRequest&) {
        RefineVerdict v;
        v.status = RefineStatus::refine;
        v.refined_subgoals = {parse_formula("(x:thing)  IS red"), parse_formula("(x:thing) is crimson.")};
        v.retrieval_queries = {"red", "crimson"};
        return v;
    };
    Bm25Store store;
    store.insert("red things.");
    store.insert("crimson things.");
    SolverConfig cfg;
    cfg.max_breadth = 1;
    cfg.max_depth = 3;
    auto o = solve("q", store, j, cfg);
    EXPECT_EQ(o.kind, SolveOutcome::Kind::failed);
    // Depth 1 drops the restated red subgoal; depth 2 drops both.
    EXPECT_EQ(o.telemetry.dropped_refinements, 3u);
    EXPECT_EQ(j.refine_log.size(), 2u);
    // The judge is reminded of everything it proposed, kept or not.
    EXPECT_EQ(j.refine_log[1].previous_refined.size(), 2u);
}

TEST(Solve, RefineSeesOnlyTheUnresolvedFrontier)
{
    ScriptedJudge j;
    j.on_parse_goal = [](const std::string&) { return simple_goal(); };
    j.on_decompose = [](const DecomposeRequest&) {
        return simple_rule({"(x:thing) is red.", "(x:thing) is round."});
    };
    j.on_unify = [](const UnifyRequest& r) {
        UnifyVerdict v;
        v.status = UnifyStatus::unsatisfied;
        for (const auto& s : r.subgoals) {
            if (render_formula(s) == "(x:thing) is red.") {
                GroundedEntry g;
                g.subgoal = render_formula(s);
                g.fact_refs = {1};
                v.grounded.push_back(g);
            } else {
                v.unresolved.push_back({render_formula(s), "why not"});
            }
        }
        return v;
    };
    j.on_refine = [](const RefineRequest&) {
        RefineVerdict v;
        v.status = RefineStatus::stop;
        return v;
    };
    Bm25Store store;
    store.insert("red and round.");
    SolverConfig cfg;
    cfg.max_breadth = 1;
    solve("q", store, j, cfg);
    ASSERT_EQ(j.refine_log.size(), 1u);
    ASSERT_EQ(j.refine_log[0].unresolved.size(), 1u);
    EXPECT_EQ(render_formula(j.refine_log[0].unresolved[0]), "(x:thing) is round.");
    EXPECT_EQ(j.refine_log[0].unresolved_reasons, std::vector<std::string>{"why not"});
    // The second unification skips the resolved subgoal.
    EXPECT_EQ(j.unify_log.size(), 1u);
}

TEST(Solve, AnswerStageSeesSupportingFactsOnly)
{
    ScriptedJudge j;
    j.on_parse_goal = [](const std::string&) { return simple_goal(); };
    j.on_decompose = [](const DecomposeRequest&) { return simple_rule({"(x:thing) is red."}); };
    j.on_unify = [](const UnifyRequest& r) {
        auto v = ground_all(r);
        v.grounded[0].fact_refs = {2};
        return v;
    };
    Bm25Store store;
    for (int i = 0; i < 8; ++i) {
        store.insert("red fact number " + std::to_string(i));
    }
    auto o = solve("q", store, j);
    ASSERT_EQ(o.kind, SolveOutcome::Kind::answered) << o.diagnostic;
    ASSERT_EQ(j.answer_log.size(), 1u);
    ASSERT_EQ(j.answer_log[0].facts.size(), 1u);
    EXPECT_EQ(j.answer_log[0].facts[0].id, j.unify_log[0].facts[1].id);
    EXPECT_EQ(render_formula(*j.answer_log[0].grounded_goal), "(thing one) is wanted.");
}

TEST(Solve, BoundVariablesWithOpenSubgoalsIsNotSuccess)
{
    ScriptedJudge j;
    j.on_parse_goal = [](const std::string&) { return simple_goal(); };
    j.on_decompose = [](const DecomposeRequest&) {
        return simple_rule({"(x:thing) is red.", "(x:thing) is round."});
    };
    j.on_unify = [](const UnifyRequest& r) {
        auto v = ground_all(r);
        v.grounded.pop_back();
        v.unresolved.push_back({render_formula(r.subgoals.back()), "no fact"});
        v.status = UnifyStatus::unsatisfied;
        return v;
    };
    j.on_refine = [](const RefineRequest&) {
        RefineVerdict v;
        v.status = RefineStatus::stop;
        return v;
    };
    Bm25Store store;
    store.insert("red.");
    auto o = solve("q", store, j);
    EXPECT_EQ(o.kind, SolveOutcome::Kind::failed);
    EXPECT_TRUE(j.answer_log.empty());
}

TEST(Solve, RebindingVerdictIsTreatedAsConflict)
{
    ScriptedJudge j;
    j.on_parse_goal = [](const std::string&) { return simple_goal(); };
    j.on_decompose = [](const DecomposeRequest&) {
        return simple_rule({"(x:thing) is red.", "(x:thing) is round."});
    };
    int calls = 0;
    j.on_unify = [&](const UnifyRequest& r) {
        UnifyVerdict v;
        v.status = UnifyStatus::unsatisfied;
        v.grounded.push_back({render_formula(r.subgoals[0]), "Fact 1", {1}, false, {}});
        v.unresolved.push_back({render_formula(r.subgoals.back()), "later"});
        v.substitution.bind("x", ++calls == 1 ? "apple" : "pear");
        return v;
    };
    j.on_refine = [](const RefineRequest&) {
        RefineVerdict v;
        v.status = RefineStatus::refine;
        v.refined_subgoals = {parse_formula("(x:thing) is spherical.")};
        v.retrieval_queries = {"spherical"};
        return v;
    };
    Bm25Store store;
    store.insert("red apple.");
    store.insert("spherical pear.");
    SolverConfig cfg;
    cfg.max_breadth = 1;
    auto o = solve("q", store, j, cfg);
    EXPECT_EQ(o.kind, SolveOutcome::Kind::failed);
    EXPECT_NE(o.diagnostic.find("conflicting bindings at depth 1"), std::string::npos);
}

TEST(Solve, JudgeFailureBecomesDiagnostic)
{
    ScriptedJudge j;
    j.on_parse_goal = [](const std::string&) -> Goal {
        throw JudgeError(JudgeError::Kind::transport, "connection refused");
    };
    Bm25Store store;
    auto o = solve("q", store, j);
    EXPECT_EQ(o.kind, SolveOutcome::Kind::failed);
    EXPECT_NE(o.diagnostic.find("connection refused"), std::string::npos);
    EXPECT_EQ(o.telemetry.judge_calls, 1u);
}

TEST(Solve, RetrievalBudgetCapsThePool)
{
    ScriptedJudge j;
    j.on_parse_goal = [](const std::string&) { return simple_goal(); };
    j.on_decompose = [](const DecomposeRequest&) {
        return simple_rule({"(x:thing) is red.", "(x:thing) is blue.", "(x:thing) is green."});
    };
    j.on_unify = ground_none;
    j.on_refine = [](const RefineRequest&) {
        RefineVerdict v;
        v.status = RefineStatus::stop;
        return v;
    };
    Bm25Store store;
    for (int i = 0; i < 40; ++i) {
        store.insert(std::string(i % 3 == 0 ? "red" : i % 3 == 1 ? "blue" : "green") + " item " + std::to_string(i));
    }
    SolverConfig cfg;
    cfg.max_breadth = 1;
    cfg.retrieval_cap = 12;
    auto o = solve("q", store, j, cfg);
    EXPECT_EQ(o.telemetry.retrieval_calls, 3u);
    EXPECT_EQ(o.telemetry.admitted_facts, 12u);
    EXPECT_EQ(j.unify_log.at(0).facts.size(), 12u);
    // Merged in fact-id order.
    EXPECT_TRUE(std::is_sorted(j.unify_log[0].facts.begin(), j.unify_log[0].facts.end(),
                               [](const auto& a, const auto& b) { return a.id < b.id; }));
}

TEST(Solve, QueriesAreRenderedSubgoalsWithThetaApplied)
{
    struct SpyStore : MemoryStore {
        Bm25Store inner;
        mutable std::vector<std::string> queries;
        std::string insert(std::string text, FactMeta meta = {}) override { return inner.insert(text, meta); }
        void insert_fact(MemoryFact f) override { inner.insert_fact(std::move(f)); }
        std::vector<ScoredFact> retrieve(std::string_view q, std::size_t k) const override
        {
            queries.emplace_back(q);
            EXPECT_EQ(k, 7u);
            return inner.retrieve(q, k);
        }
        std::size_t size() const override { return inner.size(); }
        std::vector<MemoryFact> snapshot() const override { return inner.snapshot(); }
        std::optional<MemoryFact> find(const std::string& id) const override { return inner.find(id); }
    };
    ScriptedJudge j;
    j.on_parse_goal = [](const std::string&) { return simple_goal(); };
    j.on_decompose = [](const DecomposeRequest&) { return simple_rule({"(x:thing) is red."}); };
    j.on_unify = [](const UnifyRequest& r) {
        UnifyVerdict v = ground_none(r);
        if (!r.theta.contains("x")) {
            v.substitution.bind("x", "Apple");
        }
        return v;
    };
    j.on_refine = [](const RefineRequest&) {
        RefineVerdict v;
        v.status = RefineStatus::refine;
        v.refined_subgoals = {parse_formula("(x:thing) grows on (y:plant).")};
        v.retrieval_queries = {"grows"};
        return v;
    };
    SpyStore store;
    store.insert("Apple grows on trees.");
    SolverConfig cfg;
    cfg.max_breadth = 1;
    cfg.max_depth = 1;
    cfg.per_subgoal_fanout = 7;
    solve("q", store, j, cfg);
    ASSERT_EQ(store.queries.size(), 2u);
    EXPECT_EQ(store.queries[0], "(x:thing) is red.");
    EXPECT_EQ(store.queries[1], "(Apple) grows on (y:plant).");
}

// ---------------------------------------------------------------------------
// Properties

TEST(Properties, CallAndRetrievalBoundsUnderAdversarialJudges)
{
    std::mt19937 rng(20240611);
    for (int trial = 0; trial < 400; ++trial) {
        SolverConfig cfg;
        cfg.max_breadth = 1 + rng() % 4;
        cfg.max_depth = rng() % 7;
        cfg.per_subgoal_fanout = 1 + rng() % 10;
        cfg.retrieval_cap = cfg.per_subgoal_fanout + rng() % 60;
        Bm25Store store;
        testing_judges::fill_random_store(store, rng, rng() % 40);
        AdversarialJudge judge(static_cast<std::uint32_t>(rng()));
        auto o = solve("what does the user want?", store, judge, cfg);
        const auto& t = o.telemetry;
        ASSERT_LE(t.judge_calls, call_bound(cfg) + 1) << "trial " << trial;
        ASSERT_LE(t.retrieval_calls, cfg.max_breadth * (cfg.max_depth + 1) * t.max_step_subgoals) << "trial " << trial;
        ASSERT_LE(t.realized_breadth, cfg.max_breadth);
        ASSERT_LE(t.realized_depth, cfg.max_depth);
        ASSERT_LE(t.admitted_facts, cfg.retrieval_cap);
        ASSERT_LE(t.answer_facts, cfg.retrieval_cap);
        if (o.kind == SolveOutcome::Kind::answered) {
            for (const auto& v : o.goal.answer_variables) {
                ASSERT_TRUE(o.theta.contains(v)) << "trial " << trial;
            }
            if (!o.goal.answer_variables.empty()) {
                ASSERT_FALSE(o.supporting_facts.empty());
            }
        }
    }
}

TEST(Properties, AccumulationIsMonotoneWithinABreadth)
{
    std::mt19937 rng(77);
    for (int trial = 0; trial < 200; ++trial) {
        Bm25Store store;
        testing_judges::fill_random_store(store, rng, 5 + rng() % 30);
        AdversarialJudge judge(static_cast<std::uint32_t>(rng()), 0.0);
        std::optional<SolverState> prev;
        bool ok = true;
        std::string why;
        SolveHooks hooks;
        hooks.after_unify = [&](const SolverState& s) {
            if (prev && prev->breadth == s.breadth) {
                auto subset = [](const auto& a, const auto& b) {
                    return std::includes(b.begin(), b.end(), a.begin(), a.end());
                };
                std::set<std::string> p_ids, s_ids;
                for (const auto& f : prev->pool) {
                    p_ids.insert(f.id);
                }
                for (const auto& f : s.pool) {
                    s_ids.insert(f.id);
                }
                if (!subset(p_ids, s_ids)) {
                    ok = false, why = "pool shrank";
                }
                if (!subset(prev->resolved, s.resolved)) {
                    ok = false, why = "resolved set shrank";
                }
                if (s.subgoals.size() < prev->subgoals.size()) {
                    ok = false, why = "subgoals shrank";
                }
                if (s.depth < prev->depth) {
                    ok = false, why = "depth went back";
                }
                for (const auto& [var, b] : prev->theta.bindings()) {
                    const auto* now = s.theta.find(var);
                    if (now == nullptr || now->constant != b.constant) {
                        ok = false, why = "theta lost or rebound " + var;
                    }
                }
            }
            prev = s;
        };
        SolverConfig cfg;
        cfg.max_depth = rng() % 6;
        solve("what does the user want?", store, judge, cfg, hooks);
        ASSERT_TRUE(ok) << "trial " << trial << ": " << why;
    }
}

TEST(Properties, SyntheticChainsMatchForwardChaining)
{
    for (std::uint32_t seed = 1; seed <= 80; ++seed) {
        std::size_t hops = 1 + seed % 4;
        auto s = gen_synthetic_chain(hops, seed % 11, seed);
        auto kb = std::make_shared<const OracleKb>(s.kb());
        OracleJudge judge(kb);
        Bm25Store store;
        for (const auto& f : s.facts) {
            store.insert(f);
        }
        auto expected = forward_chain(s.facts, s.kb_records, s.chain);
        ASSERT_EQ(expected.answers.size(), 1u);
        auto o = solve(s.qa.question, store, judge);
        ASSERT_EQ(o.kind, SolveOutcome::Kind::answered) << "seed " << seed << ": " << o.diagnostic;
        EXPECT_EQ(o.answer, *expected.answers.begin()) << "seed " << seed;
        EXPECT_EQ(o.telemetry.realized_depth, hops - 1) << "seed " << seed;
        EXPECT_EQ(o.telemetry.realized_breadth, 1u);
    }
}

TEST(Properties, ChainsLongerThanTheDepthBudgetFail)
{
    for (std::uint32_t seed = 1; seed <= 20; ++seed) {
        auto s = gen_synthetic_chain(4, seed % 6, seed);
        auto kb = std::make_shared<const OracleKb>(s.kb());
        OracleJudge judge(kb);
        Bm25Store store;
        for (const auto& f : s.facts) {
            store.insert(f);
        }
        SolverConfig cfg;
        cfg.max_depth = 2;
        auto o = solve(s.qa.question, store, judge, cfg);
        EXPECT_EQ(o.kind, SolveOutcome::Kind::failed) << "seed " << seed;
    }
}

TEST(Properties, GroundingsAreEntailedByCitedFacts)
{
    for (std::uint32_t seed = 100; seed < 160; ++seed) {
        auto s = gen_synthetic_chain(1 + seed % 4, seed % 11, seed);
        auto kb = std::make_shared<const OracleKb>(s.kb());
        OracleJudge judge(kb);
        Bm25Store store;
        for (const auto& f : s.facts) {
            store.insert(f);
        }
        auto o = solve(s.qa.question, store, judge);
        ASSERT_EQ(o.kind, SolveOutcome::Kind::answered);
        ASSERT_FALSE(o.groundings.empty());
        for (const auto& [subgoal, ids] : o.groundings) {
            auto grounded = render_formula(apply_substitution(parse_formula(subgoal, {"x"}), o.theta));
            bool entailed = false;
            for (const auto& id : ids) {
                entailed = entailed || kb->entails(store.find(id)->text, grounded);
            }
            EXPECT_TRUE(entailed) << subgoal;
        }
    }
}
