// Acceptance checks. Prints one PASS/FAIL line per criterion and exits
// non-zero when any criterion fails.

#include <chrono>
#include <cmath>
#include <fstream>
#include <functional>
#include <iomanip>
#include <iostream>
#include <random>
#include <set>
#include <sstream>

#include "bm25_oracle.hpp"
#include "fixtures.hpp"
#include "goalmem/baselines.hpp"
#include "goalmem/builtin_prompts.hpp"
#include "goalmem/evalkit.hpp"
#include "goalmem/oracle.hpp"
#include "goalmem/runner.hpp"
#include "goalmem/solver.hpp"
#include "scripted_judge.hpp"

using namespace goalmem;

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) { return std::chrono::duration<double>(Clock::now() - t0).count(); }

struct Verdict {
    bool pass = false;
    std::string detail;
};

// ---------------------------------------------------------------------------
// Proxies that count what the solver actually does, independent of its own
// telemetry.

struct Counters {
    std::size_t judge_calls = 0;
    std::size_t retrievals = 0;
    std::size_t step_retrievals = 0;
    std::size_t max_step_retrievals = 0;
    /// Largest number of distinct fact ids shown to an answer stage.
    std::size_t max_answer_facts = 0;
    /// Same, over every judgment that receives facts.
    std::size_t max_any_facts = 0;

    void close_step()
    {
        max_step_retrievals = std::max(max_step_retrievals, step_retrievals);
        step_retrievals = 0;
    }
    void saw(const std::vector<MemoryFact>& facts, bool answer_stage)
    {
        std::set<std::string> ids;
        for (const auto& f : facts) {
            ids.insert(f.id);
        }
        max_any_facts = std::max(max_any_facts, ids.size());
        if (answer_stage) {
            max_answer_facts = std::max(max_answer_facts, ids.size());
        }
    }
};

class CountingStore : public MemoryStore {
public:
    CountingStore(const MemoryStore& inner, Counters& c) : inner_(inner), c_(c) {}

    std::string insert(std::string, FactMeta) override { throw std::logic_error("read-only"); }
    void insert_fact(MemoryFact) override { throw std::logic_error("read-only"); }
    std::vector<ScoredFact> retrieve(std::string_view q, std::size_t k) const override
    {
        ++c_.retrievals;
        ++c_.step_retrievals;
        return inner_.retrieve(q, k);
    }
    std::size_t size() const override { return inner_.size(); }
    std::vector<MemoryFact> snapshot() const override { return inner_.snapshot(); }
    std::optional<MemoryFact> find(const std::string& id) const override { return inner_.find(id); }

private:
    const MemoryStore& inner_;
    Counters& c_;
};

/// Forwards every call; counts solver judgments and records fact exposure.
class WatchingJudge : public Judge {
public:
    WatchingJudge(Judge& inner, Counters& c) : inner_(inner), c_(c) {}

    Goal parse_goal(const std::string& q) override
    {
        ++c_.judge_calls;
        return inner_.parse_goal(q);
    }
    DecompositionRule decompose(const DecomposeRequest& r) override
    {
        ++c_.judge_calls;
        return inner_.decompose(r);
    }
    UnifyVerdict unify(const UnifyRequest& r) override
    {
        ++c_.judge_calls;
        c_.close_step();
        c_.saw(r.facts, false);
        return inner_.unify(r);
    }
    RefineVerdict refine(const RefineRequest& r) override
    {
        ++c_.judge_calls;
        c_.saw(r.facts, false);
        return inner_.refine(r);
    }
    std::string answer(const AnswerRequest& r) override
    {
        ++c_.judge_calls;
        c_.saw(r.facts, true);
        return inner_.answer(r);
    }
    bool type_entails(const std::string& a, const std::string& b) override { return inner_.type_entails(a, b); }
    bool instance_of(const std::string& a, const std::string& b) override { return inner_.instance_of(a, b); }
    bool equal(const std::string& a, const std::string& b, const std::string& ctx) override
    {
        return inner_.equal(a, b, ctx);
    }
    bool entails(const std::string& f, const std::string& s) override { return inner_.entails(f, s); }
    std::vector<std::string> rewrite(const std::string& q, std::size_t n) override { return inner_.rewrite(q, n); }
    ReflectionDecision reflect(const std::string& q, const std::vector<std::string>& qs,
                               const std::vector<MemoryFact>& facts) override
    {
        c_.saw(facts, false);
        return inner_.reflect(q, qs, facts);
    }
    ReactStep react(const ReactRequest& r) override
    {
        // Any ReAct step may Finish from its observations.
        c_.saw(r.observations, true);
        return inner_.react(r);
    }
    IntentCapture capture_intent(const std::string& q, std::size_t n) override { return inner_.capture_intent(q, n); }
    SlotDecision check_slots(const std::string& q, const std::string& intent, const std::vector<std::string>& qs,
                             const std::vector<MemoryFact>& facts, std::size_t max_followups) override
    {
        c_.saw(facts, false);
        return inner_.check_slots(q, intent, qs, facts, max_followups);
    }
    std::vector<double> score_candidates(const std::string& q, const std::vector<std::string>& missing,
                                         const std::vector<MemoryFact>& c) override
    {
        c_.saw(c, false);
        return inner_.score_candidates(q, missing, c);
    }
    bool judge_answer(const std::string& q, const std::string& r, const std::string& p) override
    {
        return inner_.judge_answer(q, r, p);
    }
    std::size_t format_retries() const override { return inner_.format_retries(); }

private:
    Judge& inner_;
    Counters& c_;
};

std::unique_ptr<MemoryStore> store_of(const SyntheticScenario& s)
{
    auto store = std::make_unique<Bm25Store>();
    for (const auto& f : s.facts) {
        store->insert(f);
    }
    return store;
}

std::string fmt(double v, int digits = 3)
{
    std::ostringstream os;
    os << std::fixed << std::setprecision(digits) << v;
    return os.str();
}

// ---------------------------------------------------------------------------
// 1. Call bounds

Verdict call_bounds()
{
    auto t0 = Clock::now();
    std::mt19937 rng(20240601);
    std::size_t scenarios = 0, violations = 0, telemetry_mismatch = 0;
    std::string first;
    for (std::size_t i = 0; i < 1200; ++i) {
        SolverConfig cfg;
        cfg.max_breadth = 1 + i % 4;
        cfg.max_depth = (i / 4) % 7;
        cfg.per_subgoal_fanout = 1 + rng() % 10;
        Counters c;
        SolveOutcome o;
        if (i % 2 == 0) {
            // Adversarial judge over a random store.
            Bm25Store base;
            testing_judges::fill_random_store(base, rng, rng() % 60);
            testing_judges::AdversarialJudge adv(static_cast<std::uint32_t>(rng()));
            CountingStore store(base, c);
            WatchingJudge judge(adv, c);
            o = solve("what does the user want?", store, judge, cfg);
        } else {
            // Oracle judge over a synthetic chain.
            auto s = gen_synthetic_chain(1 + rng() % 4, rng() % 11, static_cast<std::uint32_t>(rng()));
            auto base = store_of(s);
            OracleJudge oracle(std::make_shared<const OracleKb>(s.kb()));
            CountingStore store(*base, c);
            WatchingJudge judge(oracle, c);
            o = solve(s.qa.question, store, judge, cfg);
        }
        c.close_step();
        ++scenarios;
        const std::size_t b = cfg.max_breadth, d = cfg.max_depth;
        bool bad = c.judge_calls > 1 + b * (2 + 2 * d) + 1 || c.retrievals > b * (d + 1) * c.max_step_retrievals;
        if (bad) {
            ++violations;
            if (first.empty()) {
                first = "scenario " + std::to_string(i) + ": judge " + std::to_string(c.judge_calls) + ", retrieval "
                        + std::to_string(c.retrievals);
            }
        }
        if (o.telemetry.judge_calls != c.judge_calls || o.telemetry.retrieval_calls != c.retrievals
            || o.telemetry.max_step_subgoals != c.max_step_retrievals) {
            ++telemetry_mismatch;
        }
    }
    double secs = seconds_since(t0);
    bool pass = scenarios >= 1000 && violations == 0 && telemetry_mismatch == 0 && secs < 10.0;
    return {pass, std::to_string(scenarios) + " scenarios, " + std::to_string(violations) + " bound violations, "
                      + std::to_string(telemetry_mismatch) + " telemetry mismatches, " + fmt(secs, 2) + " s (limit 10 s)"
                      + (first.empty() ? "" : "; first: " + first)};
}

// ---------------------------------------------------------------------------
// 2. Synthetic chains, and 4. shallow solutions (same runs)

struct ChainRuns {
    std::size_t total = 0;
    std::size_t solvable = 0;
    std::size_t correct = 0;
    std::size_t unsupported = 0;
    double seconds = 0;
    std::vector<TelemetryRecord> telemetry;
};

ChainRuns run_chains()
{
    ChainRuns r;
    auto t0 = Clock::now();
    SolverConfig cfg;
    for (std::uint32_t i = 0; i < 200; ++i) {
        std::size_t hops = 1 + i % 4;
        std::size_t distractors = (i / 4) % 11;
        auto s = gen_synthetic_chain(hops, distractors, 7000 + i);
        ++r.total;
        auto expected = forward_chain(s.facts, s.kb_records, s.chain);
        bool solvable = expected.answers.size() == 1 && expected.min_hops >= 1 && expected.min_hops - 1 <= cfg.max_depth;
        auto kb = std::make_shared<const OracleKb>(s.kb());
        OracleJudge judge(kb);
        auto store = store_of(s);
        auto o = solve(s.qa.question, *store, judge, cfg);
        o.telemetry.item_id = "chain-" + std::to_string(i);
        r.telemetry.push_back(o.telemetry);
        if (!solvable) {
            continue;
        }
        ++r.solvable;
        if (o.kind == SolveOutcome::Kind::answered && o.answer == *expected.answers.begin()) {
            ++r.correct;
        }
        // Every grounded subgoal must be entailed by one of the facts it cites.
        bool supported = o.kind == SolveOutcome::Kind::answered && !o.groundings.empty();
        for (const auto& [subgoal, ids] : o.groundings) {
            auto grounded = render_formula(apply_substitution(parse_formula(subgoal, {"x"}), o.theta));
            bool ok = false;
            for (const auto& id : ids) {
                auto f = store->find(id);
                ok = ok || (f && kb->entails(f->text, grounded));
            }
            supported = supported && ok;
        }
        r.unsupported += supported ? 0 : 1;
    }
    r.seconds = seconds_since(t0);
    return r;
}

Verdict chains_correct(const ChainRuns& r)
{
    bool pass = r.solvable > 0 && r.correct == r.solvable && r.unsupported == 0 && r.seconds < 30.0;
    return {pass, std::to_string(r.correct) + "/" + std::to_string(r.solvable) + " solvable chains correct (of "
                      + std::to_string(r.total) + "), " + std::to_string(r.unsupported)
                      + " failed the entailment re-check, " + fmt(r.seconds, 2) + " s (limit 30 s)"};
}

Verdict shallow_solutions(const ChainRuns& r)
{
    auto rep = aggregate_telemetry(r.telemetry);
    double frac = rep.records == 0 ? 0.0 : static_cast<double>(rep.answered_shallow) / static_cast<double>(rep.records);
    return {frac >= 0.95, std::to_string(rep.answered_shallow) + "/" + std::to_string(rep.records)
                              + " runs answered within b=1, d<=3 (" + fmt(100.0 * frac, 1) + "%, need 95%), "
                              + std::to_string(rep.violations.size()) + " telemetry bound violations"};
}

// ---------------------------------------------------------------------------
// 3. Separation on the hard suite

Verdict separation()
{
    std::vector<EvalTask> tasks;
    for (std::uint32_t i = 0; i < 60; ++i) {
        auto s = gen_synthetic_chain(2 + i % 3, 5 + i % 6, 9000 + i);
        tasks.push_back(scenario_task(s));
    }
    std::map<std::string, double> acc;
    std::vector<std::string> order;
    for (const auto* name : {"goalmem", "qr", "sr", "react", "memguide"}) {
        auto m = parse_method(name);
        auto recs = evaluate(tasks, m, SolverConfig{}, BaselineConfig{});
        std::size_t correct = 0;
        for (const auto& r : recs) {
            correct += r.result.correct.value_or(false) ? 1 : 0;
        }
        acc[name] = static_cast<double>(correct) / static_cast<double>(recs.size());
        order.push_back(name);
    }
    bool pass = acc["qr"] < acc["goalmem"] && acc["sr"] < acc["goalmem"];
    std::string detail = std::to_string(tasks.size()) + " chains (hops 2-4, distractors 5-10), accuracy";
    for (const auto& n : order) {
        detail += " " + n + "=" + fmt(acc[n]);
    }
    return {pass, detail};
}

// ---------------------------------------------------------------------------
// 5. Cafe example

Verdict cafe_example()
{
    auto kb = std::make_shared<const OracleKb>(OracleKb::load(fixtures::data_path("cafe_kb.jsonl")));
    OracleJudge judge(kb);
    std::vector<std::string> failed;
    auto check = [&](bool ok, const std::string& what) {
        if (!ok) {
            failed.push_back(what);
        }
    };
    check(judge.type_entails("ingredient", "flavor"), "ingredient |- flavor");
    check(!judge.type_entails("flavor", "ingredient"), "flavor |/- ingredient");
    check(judge.equal("Matcha Powder", "Matcha", "Alice likes (y:flavor)."), "Matcha Powder = Matcha");
    check(!judge.equal("Strawberry", "Matcha", "Alice likes (y:flavor)."), "Strawberry != Matcha");

    Substitution theta;
    theta.bind("x", "Kyoto Latte");
    theta.bind("y", "Matcha Powder");
    auto grounded = render_formula(apply_substitution(parse_formula("(x:drink) contains (y:flavor)."), theta));
    check(judge.entails("The cafe advertised a (Kyoto Latte) drink with (Matcha Powder:ingredient)", grounded),
          "advertised drink entails " + grounded);
    check(!judge.entails("(Berry Soda) contains (Strawberry:flavor).", grounded), "Berry Soda does not entail it");

    Bm25Store store;
    load_jsonl(store, fixtures::data_path("cafe_store.jsonl"));
    auto o = solve("Alice: I like the cafe I went to last week, what drink should I try this time?", store, judge);
    check(o.kind == SolveOutcome::Kind::answered && o.answer == "Kyoto Latte", "end-to-end answer Kyoto Latte");

    std::string detail = "6 atomic checks and the end-to-end question";
    if (!failed.empty()) {
        detail += "; failed: " + text::join(failed, ", ");
    }
    return {failed.empty(), detail};
}

// ---------------------------------------------------------------------------
// 6. Parser and metric exactness

Verdict exactness()
{
    std::vector<std::string> failed;
    // Formula round-trip.
    std::ifstream in(fixtures::data_path("formulas.txt"));
    std::size_t formulas = 0, formula_ok = 0;
    for (std::string line; std::getline(in, line);) {
        ++formulas;
        try {
            formula_ok += render_formula(parse_formula(line)) == line ? 1 : 0;
        } catch (const std::exception&) {
        }
    }
    if (formulas != 100 || formula_ok != formulas) {
        failed.push_back("formulas " + std::to_string(formula_ok) + "/" + std::to_string(formulas));
    }

    // Token F1 against hand-worked fractions.
    auto cases = fixtures::load_f1_cases();
    std::size_t f1_ok = 0;
    for (const auto& c : cases) {
        double want = static_cast<double>(c.num) / static_cast<double>(c.den);
        f1_ok += std::abs(token_f1(c.prediction, c.reference) - want) <= 1e-12 ? 1 : 0;
    }
    if (cases.size() < 20 || f1_ok != cases.size()) {
        failed.push_back("token_f1 " + std::to_string(f1_ok) + "/" + std::to_string(cases.size()));
    }

    // BM25 against brute force.
    std::mt19937 rng(4242);
    std::size_t bm25_bad = 0, bm25_checked = 0;
    for (int trial = 0; trial < 200; ++trial) {
        Bm25Store store;
        std::vector<std::string> corpus;
        auto n = 1 + rng() % 50;
        for (std::size_t i = 0; i < n; ++i) {
            corpus.push_back(bm25_oracle::random_doc(rng, 12));
            store.insert(corpus.back());
        }
        auto q = bm25_oracle::random_doc(rng, 4);
        auto hits = store.retrieve(q, n);
        std::set<std::size_t> returned;
        for (const auto& h : hits) {
            auto idx = static_cast<std::size_t>(std::stoul(h.fact.id.substr(1))) - 1;
            returned.insert(idx);
            ++bm25_checked;
            bm25_bad += std::abs(h.score - bm25_oracle::brute_bm25(corpus, idx, q)) <= 1e-9 ? 0 : 1;
        }
        // Documents sharing no term with the query must not be returned.
        auto qt = bm25_oracle::ref_tokens(q);
        for (std::size_t i = 0; i < n; ++i) {
            auto dt = bm25_oracle::ref_tokens(corpus[i]);
            bool overlap = std::any_of(qt.begin(), qt.end(),
                                       [&](const auto& t) { return std::find(dt.begin(), dt.end(), t) != dt.end(); });
            bm25_bad += overlap == returned.contains(i) ? 0 : 1;
        }
    }
    if (bm25_bad != 0) {
        failed.push_back("bm25 " + std::to_string(bm25_bad) + " mismatches");
    }

    double hw = confidence_half_width(62, 100);
    if (std::abs(hw - 0.09514) > 1e-5) {
        failed.push_back("half-width " + fmt(hw, 6));
    }
    std::string detail = std::to_string(formula_ok) + "/" + std::to_string(formulas) + " formulas byte-exact, "
                         + std::to_string(f1_ok) + "/" + std::to_string(cases.size()) + " F1 cases, "
                         + std::to_string(bm25_checked) + " BM25 scores checked, half-width(62,100)=" + fmt(hw, 5);
    if (!failed.empty()) {
        detail += "; failed: " + text::join(failed, ", ");
    }
    return {failed.empty(), detail};
}

// ---------------------------------------------------------------------------
// 7. Few-shot round-trips, labels and golden files

std::string read_file(const std::string& path)
{
    std::ifstream in(path, std::ios::binary);
    std::stringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

Verdict few_shots()
{
    const auto& set = prompts::builtin_templates();
    std::vector<std::string> failed;
    std::size_t shots = 0;
    for (const auto& [name, t] : set) {
        for (std::size_t i = 0; i < t.few_shots.size(); ++i) {
            ++shots;
            const auto& out = t.few_shots[i].output;
            std::string again;
            try {
                if (name == "unification") {
                    again = render_unify_verdict(parse_unify_verdict(out));
                } else if (name == "refinement") {
                    again = render_refine_verdict(parse_refine_verdict(out));
                } else if (name == "decomposition" || name == "decomposition_next_hop") {
                    again = render_rule(parse_rule(out));
                } else if (name == "goal_parse") {
                    again = render_goal_verdict(parse_goal_reply(out));
                } else {
                    failed.push_back(name + " has no parser");
                    continue;
                }
            } catch (const std::exception& e) {
                failed.push_back(name + "#" + std::to_string(i + 1) + " does not parse: " + e.what());
                continue;
            }
            if (again != out) {
                failed.push_back(name + "#" + std::to_string(i + 1) + " re-serializes differently");
            }
        }
        // Rendered prompt carries every output label.
        PromptValues values;
        for (const auto& p : required_placeholders(t)) {
            values[p] = std::string("v");
        }
        auto text = render_prompt(t, values).text();
        for (const auto& l : t.output_labels) {
            if (text.find(l) == std::string::npos) {
                failed.push_back(name + " prompt lacks " + l);
            }
        }
        if (t.output_labels.empty()) {
            failed.push_back(name + " declares no output labels");
        }
    }

    // Golden files.
    const std::string golden = std::string(GOALMEM_TEST_DATA) + "/../golden/";
    std::string verdicts;
    for (const auto& shot : set.at("unification").few_shots) {
        verdicts += render_unify_verdict(parse_unify_verdict(shot.output)) + "\n---\n";
    }
    for (const auto& shot : set.at("refinement").few_shots) {
        verdicts += render_refine_verdict(parse_refine_verdict(shot.output)) + "\n---\n";
    }
    if (verdicts != read_file(golden + "few_shot_verdicts.txt")) {
        failed.push_back("few_shot_verdicts.txt");
    }
    if (render_input(set.at("refinement"), set.at("refinement").few_shots[0].input)
        != read_file(golden + "refinement_input.txt")) {
        failed.push_back("refinement_input.txt");
    }
    auto next_hop = render_prompt(set.at("decomposition_next_hop"),
                                  {{"QUESTION", std::string("What is the name of Melanie's dog?")},
                                   {"AXIOMS", std::vector<std::string>{"IF Melanie has a dog, THEN x is the answer."}}})
                        .text();
    if (next_hop != read_file(golden + "decomposition_next_hop_prompt.txt")) {
        failed.push_back("decomposition_next_hop_prompt.txt");
    }

    std::string detail = std::to_string(shots) + " few-shot outputs across " + std::to_string(set.size())
                         + " templates, 3 golden files";
    if (!failed.empty()) {
        detail += "; failed: " + text::join(failed, ", ");
    }
    return {failed.empty(), detail};
}

// ---------------------------------------------------------------------------
// 8. Fact exposure cap

Verdict exposure_cap()
{
    std::mt19937 rng(8080);
    std::size_t runs = 0, over = 0, max_seen = 0, max_any = 0;
    const std::vector<std::string> methods = {"goalmem", "qr", "sr", "react", "memguide"};
    for (std::size_t i = 0; i < 1000; ++i) {
        auto method = parse_method(methods[i % methods.size()]);
        SolverConfig scfg;
        scfg.max_breadth = 1 + rng() % 4;
        scfg.max_depth = rng() % 7;
        scfg.per_subgoal_fanout = 1 + rng() % 60;
        BaselineConfig bcfg;
        bcfg.n_rewrites = 1 + rng() % 15;
        bcfg.max_reflection_turns = 1 + rng() % 15;
        bcfg.max_react_steps = 1 + rng() % 15;
        bcfg.memguide_rounds = 1 + rng() % 6;
        bcfg.memguide_followups = 1 + rng() % 10;
        bcfg.intent_queries = 1 + rng() % 10;
        bcfg.per_query_fanout = 1 + rng() % 60;

        Counters c;
        Bm25Store base;
        std::string question = "alpha beta gamma delta";
        std::unique_ptr<Judge> inner;
        if (i % 3 == 0) {
            // A chain buried in a large random store, oracle judge.
            auto s = gen_synthetic_chain(1 + rng() % 4, rng() % 11, static_cast<std::uint32_t>(rng()));
            for (const auto& f : s.facts) {
                base.insert(f);
            }
            testing_judges::fill_random_store(base, rng, rng() % 300);
            inner = std::make_unique<OracleJudge>(std::make_shared<const OracleKb>(s.kb()));
            question = s.qa.question;
        } else {
            testing_judges::fill_random_store(base, rng, rng() % 400);
            inner = std::make_unique<testing_judges::AdversarialJudge>(static_cast<std::uint32_t>(rng()));
        }
        CountingStore store(base, c);
        WatchingJudge judge(*inner, c);
        auto r = run_method(method, question, store, judge, scfg, bcfg);
        c.saw(r.answer_facts, true);
        ++runs;
        over += c.max_answer_facts > kDefaultRetrievalCap ? 1 : 0;
        max_seen = std::max(max_seen, c.max_answer_facts);
        max_any = std::max(max_any, c.max_any_facts);
    }
    return {over == 0, std::to_string(runs) + " fuzzed runs over 5 methods, max facts at an answer stage "
                           + std::to_string(max_seen) + ", at any stage " + std::to_string(max_any) + " (cap "
                           + std::to_string(kDefaultRetrievalCap) + "), " + std::to_string(over) + " over the cap"};
}

}  // namespace

int main()
{
    struct Criterion {
        const char* name;
        std::function<Verdict()> run;
    };
    ChainRuns chains;
    const std::vector<Criterion> criteria = {
        {"call-bounds", call_bounds},
        {"synthetic-chains",
         [&] {
             chains = run_chains();
             return chains_correct(chains);
         }},
        {"separation", separation},
        {"shallow-solutions", [&] { return shallow_solutions(chains); }},
        {"running-example", cafe_example},
        {"exactness", exactness},
        {"few-shot-formats", few_shots},
        {"fact-exposure-cap", exposure_cap},
    };
    int failures = 0;
    for (std::size_t i = 0; i < criteria.size(); ++i) {
        Verdict v;
        try {
            v = criteria[i].run();
        } catch (const std::exception& e) {
            v = {false, std::string("threw: ") + e.what()};
        }
        failures += v.pass ? 0 : 1;
        std::cout << (v.pass ? "PASS" : "FAIL") << " " << (i + 1) << " " << criteria[i].name << ": " << v.detail
                  << std::endl;
    }
    return failures == 0 ? 0 : 1;
}
