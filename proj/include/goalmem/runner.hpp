#pragma once
// Method dispatch and batch evaluation shared by the CLI and the acceptance
// binary.

#include <atomic>
#include <functional>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <thread>
#include <vector>

#include "goalmem/baselines.hpp"
#include "goalmem/evalkit.hpp"
#include "goalmem/solver.hpp"

namespace goalmem {

/// goalmem, or one of the baselines.
struct Method {
    std::optional<BaselineKind> baseline;

    std::string name() const { return baseline ? to_string(*baseline) : "goalmem"; }
    /// Short name used in run folder names.
    std::string tag() const
    {
        if (!baseline) {
            return "goalmem";
        }
        switch (*baseline) {
        case BaselineKind::query_reformulation:
            return "qr";
        case BaselineKind::self_reflection:
            return "sr";
        case BaselineKind::react:
            return "react";
        case BaselineKind::memguide:
            return "memguide";
        }
        return "baseline";
    }
};

inline Method parse_method(const std::string& s)
{
    if (s == "goalmem") {
        return {};
    }
    return {parse_baseline_kind(s)};
}

struct MethodResult {
    bool failed = false;
    std::string answer;
    std::string diagnostic;
    std::vector<MemoryFact> answer_facts;
    /// Solver only: grounded subgoal text and the ids of the facts cited.
    std::vector<std::pair<std::string, std::vector<std::string>>> groundings;
    TelemetryRecord telemetry;

    bool answered() const { return !failed && !is_dont_know(answer); }
};

inline MethodResult run_method(const Method& m, const std::string& question, const MemoryStore& store, Judge& judge,
                               const SolverConfig& solver_cfg, BaselineConfig baseline_cfg)
{
    MethodResult r;
    if (!m.baseline) {
        auto o = solve(question, store, judge, solver_cfg);
        r.failed = o.kind == SolveOutcome::Kind::failed;
        r.answer = o.answer;
        r.diagnostic = o.diagnostic;
        r.answer_facts = o.supporting_facts;
        r.groundings = o.groundings;
        r.telemetry = o.telemetry;
        return r;
    }
    baseline_cfg.kind = *m.baseline;
    auto o = run_baseline(question, store, judge, baseline_cfg);
    r.failed = o.failed;
    r.answer = o.answer;
    r.diagnostic = o.diagnostic;
    r.answer_facts = o.answer_facts;
    r.telemetry = o.telemetry;
    return r;
}

/// One QA item evaluated against its own store and judge.
struct EvalTask {
    QaItem item;
    std::shared_ptr<const MemoryStore> store;
    /// Builds a judge for this task; called on the worker thread.
    std::function<std::unique_ptr<Judge>()> make_judge;
};

struct EvalRecord {
    ItemResult result;
    MethodResult run;
};

/// Runs every task with up to `workers` threads. Results keep task order.
inline std::vector<EvalRecord> evaluate(const std::vector<EvalTask>& tasks, const Method& method,
                                        const SolverConfig& solver_cfg, const BaselineConfig& baseline_cfg,
                                        std::size_t workers = 1)
{
    std::vector<EvalRecord> out(tasks.size());
    std::atomic<std::size_t> next{0};
    std::mutex error_mutex;
    std::exception_ptr error;
    auto work = [&] {
        for (std::size_t i = next++; i < tasks.size(); i = next++) {
            try {
                const auto& t = tasks[i];
                auto judge = t.make_judge();
                auto run = run_method(method, t.item.question, *t.store, *judge, solver_cfg, baseline_cfg);
                run.telemetry.item_id = t.item.id;
                ItemResult res;
                res.id = t.item.id;
                res.question = t.item.question;
                res.reference = t.item.reference_answer;
                res.prediction = run.answer;
                res.category = t.item.category.value_or("");
                res.f1 = token_f1(run.answer, t.item.reference_answer);
                res.answered = run.answered();
                try {
                    res.correct = judge->judge_answer(t.item.question, t.item.reference_answer, run.answer);
                } catch (const JudgeError& e) {
                    if (e.kind() != JudgeError::Kind::unsupported) {
                        throw;
                    }
                }
                out[i] = {std::move(res), std::move(run)};
            } catch (...) {
                std::lock_guard lock(error_mutex);
                if (!error) {
                    error = std::current_exception();
                }
            }
        }
    };
    workers = std::max<std::size_t>(1, std::min(workers, tasks.size()));
    if (workers == 1) {
        work();
    } else {
        std::vector<std::thread> pool;
        for (std::size_t w = 0; w < workers; ++w) {
            pool.emplace_back(work);
        }
        for (auto& th : pool) {
            th.join();
        }
    }
    if (error) {
        std::rethrow_exception(error);
    }
    return out;
}

inline nlohmann::json eval_record_to_json(const EvalRecord& r)
{
    auto ids = nlohmann::json::array();
    for (const auto& f : r.run.answer_facts) {
        ids.push_back(f.id);
    }
    nlohmann::json j = {{"id", r.result.id},
                        {"question", r.result.question},
                        {"reference", r.result.reference},
                        {"prediction", r.result.prediction},
                        {"category", r.result.category},
                        {"f1", r.result.f1},
                        {"answered", r.result.answered},
                        {"failed", r.run.failed},
                        {"answer_fact_ids", ids}};
    if (r.result.correct) {
        j["correct"] = *r.result.correct;
    }
    if (!r.run.diagnostic.empty()) {
        j["diagnostic"] = r.run.diagnostic;
    }
    return j;
}

/// Store and oracle judge for a synthetic scenario.
inline EvalTask scenario_task(const SyntheticScenario& s, StoreKind kind = StoreKind::bm25)
{
    auto store = std::shared_ptr<MemoryStore>(make_store(kind));
    for (const auto& f : s.facts) {
        store->insert(f);
    }
    auto kb = std::make_shared<const OracleKb>(s.kb());
    return {s.qa, store, [kb] { return std::make_unique<OracleJudge>(kb); }};
}

}  // namespace goalmem
