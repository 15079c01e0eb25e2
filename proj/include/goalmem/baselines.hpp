#pragma once
// Forward-reasoning comparison methods. They share the store, the judge and
// the per-question retrieval cap with the solver.

#include <algorithm>
#include <numeric>
#include <set>
#include <stdexcept>
#include <string>
#include <vector>

#include "goalmem/judge.hpp"
#include "goalmem/memory.hpp"
#include "goalmem/solver.hpp"

namespace goalmem {

enum class BaselineKind { query_reformulation, self_reflection, react, memguide };

inline std::string to_string(BaselineKind k)
{
    switch (k) {
    case BaselineKind::query_reformulation:
        return "query_reformulation";
    case BaselineKind::self_reflection:
        return "self_reflection";
    case BaselineKind::react:
        return "react";
    case BaselineKind::memguide:
        return "memguide";
    }
    return "";
}

/// Accepts the long names and the short CLI names (qr, sr).
inline BaselineKind parse_baseline_kind(const std::string& s)
{
    if (s == "query_reformulation" || s == "qr") {
        return BaselineKind::query_reformulation;
    }
    if (s == "self_reflection" || s == "sr") {
        return BaselineKind::self_reflection;
    }
    if (s == "react") {
        return BaselineKind::react;
    }
    if (s == "memguide" || s == "mg") {
        return BaselineKind::memguide;
    }
    throw std::invalid_argument("unknown baseline '" + s + "'");
}

struct BaselineConfig {
    BaselineKind kind = BaselineKind::query_reformulation;
    std::size_t n_rewrites = 5;
    std::size_t max_reflection_turns = 5;
    std::size_t max_react_steps = 5;
    std::size_t memguide_rounds = 3;
    std::size_t memguide_followups = 5;
    std::size_t intent_queries = 5;
    double lambda_mix = 0.7;
    std::size_t retrieval_cap = kDefaultRetrievalCap;
    std::size_t per_query_fanout = 10;

    void validate() const
    {
        for (auto v : {n_rewrites, max_reflection_turns, max_react_steps, memguide_rounds, memguide_followups,
                       intent_queries, retrieval_cap, per_query_fanout}) {
            if (v == 0) {
                throw std::invalid_argument("baseline counts must be positive");
            }
        }
        if (!(lambda_mix >= 0.0 && lambda_mix <= 1.0)) {
            throw std::invalid_argument("lambda_mix must be in [0,1]");
        }
    }
};

struct BaselineOutcome {
    bool failed = false;
    std::string answer;
    std::vector<std::string> queries;
    /// Exactly what the answer stage saw.
    std::vector<MemoryFact> answer_facts;
    TelemetryRecord telemetry;
    std::string diagnostic;

    bool answered() const { return !failed && !is_dont_know(answer); }
};

/// lambda * llm + (1 - lambda) * rank prior.
inline double memguide_score(double llm_score, double retrieval_rank_score, double lambda)
{
    for (double v : {llm_score, retrieval_rank_score, lambda}) {
        if (!(v >= 0.0 && v <= 1.0)) {
            throw std::invalid_argument("memguide_score inputs must be in [0,1]");
        }
    }
    return lambda * llm_score + (1.0 - lambda) * retrieval_rank_score;
}

/// 1 - (rank - 1) / pool_size for a 1-based rank.
inline double rank_prior(std::size_t rank, std::size_t pool_size)
{
    if (rank == 0 || rank > pool_size) {
        throw std::invalid_argument("rank out of range");
    }
    return 1.0 - static_cast<double>(rank - 1) / static_cast<double>(pool_size);
}

namespace detail {

/// Shared bookkeeping: a deduplicated, capped fact pool plus counters.
class BaselineRun {
public:
    BaselineRun(const std::string& question, const MemoryStore& store, Judge& judge, const BaselineConfig& cfg)
        : question(question), judge(judge), cfg(cfg), store_(store), retries_before_(judge.format_retries())
    {
        budget_.cap = cfg.retrieval_cap;
        out.telemetry.method = to_string(cfg.kind);
        out.telemetry.retrieval_cap = cfg.retrieval_cap;
    }

    /// Retrieves for `query` and admits unseen facts until the cap. Returns
    /// the number admitted.
    std::size_t retrieve(const std::string& query)
    {
        ++out.telemetry.retrieval_calls;
        out.queries.push_back(query);
        auto admitted = budgeted_merge(budget_, store_.retrieve(query, cfg.per_query_fanout));
        for (auto& f : admitted) {
            pool.push_back(std::move(f));
        }
        return admitted.size();
    }

    bool issued(const std::string& query) const
    {
        auto k = text::canonical_key(query);
        return std::any_of(out.queries.begin(), out.queries.end(),
                           [&](const auto& q) { return text::canonical_key(q) == k; });
    }

    std::string answer_from(std::vector<MemoryFact> facts)
    {
        if (facts.size() > cfg.retrieval_cap) {
            facts.resize(cfg.retrieval_cap);
        }
        AnswerRequest req;
        req.question = question;
        req.facts = facts;
        out.answer_facts = std::move(facts);
        ++calls();
        return judge.answer(req);
    }

    std::size_t& calls() { return out.telemetry.judge_calls; }

    BaselineOutcome finish()
    {
        out.telemetry.admitted_facts = budget_.spent;
        out.telemetry.answer_facts = out.answer_facts.size();
        out.telemetry.format_retries = judge.format_retries() - retries_before_;
        out.telemetry.answered = out.answered();
        return std::move(out);
    }

    BaselineOutcome fail(const std::exception& e)
    {
        out.failed = true;
        out.answer.clear();
        out.diagnostic = std::string("judge failure: ") + e.what();
        return finish();
    }

    const std::string& question;
    Judge& judge;
    const BaselineConfig& cfg;
    std::vector<MemoryFact> pool;
    BaselineOutcome out;

private:
    const MemoryStore& store_;
    RetrievalBudget budget_;
    std::size_t retries_before_;
};

template <class Body>
BaselineOutcome guarded(BaselineRun& run, Body body)
{
    try {
        body();
        return run.finish();
    } catch (const std::exception& e) {
        return run.fail(e);
    }
}

}  // namespace detail

/// The question plus n judge rewrites, retrieved in order and merged under
/// the cap, then one answer call.
inline BaselineOutcome run_query_reformulation(const std::string& question, const MemoryStore& store, Judge& judge,
                                               const BaselineConfig& config = {})
{
    config.validate();
    detail::BaselineRun run(question, store, judge, config);
    return detail::guarded(run, [&] {
        ++run.calls();
        auto rewrites = judge.rewrite(question, config.n_rewrites);
        if (rewrites.size() > config.n_rewrites) {
            rewrites.resize(config.n_rewrites);
        }
        run.retrieve(question);
        for (const auto& r : rewrites) {
            if (!text::trim_view(r).empty() && !run.issued(r)) {
                run.retrieve(r);
            }
        }
        run.out.telemetry.iterations = 1;
        run.out.answer = run.answer_from(run.pool);
    });
}

/// Retrieve, then ask the judge whether the facts suffice. Stops when they
/// do, when no new query is proposed, when a query adds nothing, or at the
/// turn cap.
inline BaselineOutcome run_self_reflection(const std::string& question, const MemoryStore& store, Judge& judge,
                                           const BaselineConfig& config = {})
{
    config.validate();
    detail::BaselineRun run(question, store, judge, config);
    return detail::guarded(run, [&] {
        std::string query = question;
        for (std::size_t turn = 1; turn <= config.max_reflection_turns; ++turn) {
            run.out.telemetry.iterations = turn;
            auto added = run.retrieve(query);
            if (turn > 1 && added == 0) {
                break;
            }
            ++run.calls();
            auto d = judge.reflect(question, run.out.queries, run.pool);
            if (d.sufficient || text::trim_view(d.next_query).empty() || run.issued(d.next_query)) {
                break;
            }
            query = d.next_query;
        }
        run.out.answer = run.answer_from(run.pool);
    });
}

/// Thought/Action loop with Retrieve[q] and Finish[a]. A step whose output
/// stays malformed after the judge's retry ends the loop with a forced
/// Finish, as does the step cap.
inline BaselineOutcome run_react(const std::string& question, const MemoryStore& store, Judge& judge,
                                 const BaselineConfig& config = {})
{
    config.validate();
    detail::BaselineRun run(question, store, judge, config);
    return detail::guarded(run, [&] {
        ReactRequest req;
        req.question = question;
        auto record_step = [&](const ReactStep& s) {
            for (auto& line : text::split_lines(render_react_step(s))) {
                req.trajectory.push_back(std::move(line));
            }
        };
        for (std::size_t step = 1; step <= config.max_react_steps; ++step) {
            run.out.telemetry.iterations = step;
            req.queries = run.out.queries;
            req.observations = run.pool;
            ReactStep s;
            try {
                ++run.calls();
                s = judge.react(req);
            } catch (const JudgeError& e) {
                if (e.kind() != JudgeError::Kind::format_after_retry) {
                    throw;
                }
                break;
            }
            record_step(s);
            if (s.action == ReactStep::Action::finish) {
                run.out.answer_facts = run.pool;
                run.out.answer = s.argument;
                return;
            }
            auto added = run.retrieve(s.argument);
            req.trajectory.push_back("Observation: " + std::to_string(added) + " new facts");
        }
        // Forced Finish from the observations gathered so far.
        req.queries = run.out.queries;
        req.observations = run.pool;
        req.force_finish = true;
        try {
            ++run.calls();
            auto s = judge.react(req);
            if (s.action == ReactStep::Action::finish) {
                run.out.answer_facts = run.pool;
                run.out.answer = s.argument;
                return;
            }
        } catch (const JudgeError& e) {
            if (e.kind() != JudgeError::Kind::format_after_retry) {
                throw;
            }
        }
        run.out.answer = run.answer_from(run.pool);
    });
}

/// Intent-aligned retrieval, missing-slot follow-up rounds, then a
/// lambda-mixed rerank clipped to the cap before answering.
inline BaselineOutcome run_memguide(const std::string& question, const MemoryStore& store, Judge& judge,
                                    const BaselineConfig& config = {})
{
    config.validate();
    detail::BaselineRun run(question, store, judge, config);
    return detail::guarded(run, [&] {
        ++run.calls();
        auto intent = judge.capture_intent(question, config.intent_queries);
        if (intent.queries.size() > config.intent_queries) {
            intent.queries.resize(config.intent_queries);
        }
        run.retrieve(question);
        for (const auto& q : intent.queries) {
            if (!text::trim_view(q).empty() && !run.issued(q)) {
                run.retrieve(q);
            }
        }
        std::vector<std::string> missing;
        for (std::size_t round = 1; round <= config.memguide_rounds; ++round) {
            ++run.calls();
            auto d = judge.check_slots(question, intent.intent, run.out.queries, run.pool, config.memguide_followups);
            missing = d.missing_slots;
            if (d.sufficient) {
                break;
            }
            run.out.telemetry.iterations = round;
            std::size_t added = 0;
            std::size_t issued = 0;
            for (const auto& q : d.followups) {
                if (issued == config.memguide_followups) {
                    break;
                }
                if (text::trim_view(q).empty() || run.issued(q)) {
                    continue;
                }
                ++issued;
                added += run.retrieve(q);
            }
            if (added == 0) {
                break;
            }
        }
        std::vector<MemoryFact> ranked = run.pool;
        if (!ranked.empty()) {
            ++run.calls();
            auto llm = judge.score_candidates(question, missing, ranked);
            if (llm.size() != ranked.size()) {
                throw JudgeError(JudgeError::Kind::format_after_retry, "score count does not match candidates");
            }
            std::vector<std::size_t> order(ranked.size());
            std::iota(order.begin(), order.end(), 0);
            std::vector<double> score(ranked.size());
            for (std::size_t i = 0; i < ranked.size(); ++i) {
                score[i] = memguide_score(std::clamp(llm[i], 0.0, 1.0), rank_prior(i + 1, ranked.size()),
                                          config.lambda_mix);
            }
            std::stable_sort(order.begin(), order.end(), [&](auto a, auto b) { return score[a] > score[b]; });
            std::vector<MemoryFact> sorted;
            for (auto i : order) {
                sorted.push_back(ranked[i]);
            }
            ranked = std::move(sorted);
        }
        run.out.answer = run.answer_from(std::move(ranked));
    });
}

inline BaselineOutcome run_baseline(const std::string& question, const MemoryStore& store, Judge& judge,
                                    const BaselineConfig& config)
{
    switch (config.kind) {
    case BaselineKind::query_reformulation:
        return run_query_reformulation(question, store, judge, config);
    case BaselineKind::self_reflection:
        return run_self_reflection(question, store, judge, config);
    case BaselineKind::react:
        return run_react(question, store, judge, config);
    case BaselineKind::memguide:
        return run_memguide(question, store, judge, config);
    }
    throw std::invalid_argument("unknown baseline kind");
}

}  // namespace goalmem
