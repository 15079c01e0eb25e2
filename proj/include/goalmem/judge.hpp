#pragma once
// Judge interface: every LLM-delegated step of the solver and the baselines.

#include <optional>
#include <set>
#include <stdexcept>
#include <string>
#include <vector>

#include "goalmem/memory.hpp"
#include "goalmem/nl_logic.hpp"
#include "goalmem/verdicts.hpp"

namespace goalmem {

class JudgeError : public std::runtime_error {
public:
    enum class Kind { transport, format_after_retry, unsupported };

    JudgeError(Kind kind, const std::string& what) : std::runtime_error(what), kind_(kind) {}
    Kind kind() const { return kind_; }

private:
    Kind kind_;
};

struct DecomposeRequest {
    std::string question;
    Goal goal;
    std::string background;
    std::vector<std::string> known_info;
    /// Earlier decompositions for this question; non-empty selects the
    /// next-hop prompt.
    std::vector<DecompositionRule> prior;
    /// Set on the single retry after a duplicate decomposition.
    bool retry = false;
};

struct UnifyRequest {
    std::string question;
    Goal goal;
    std::string rule_text;
    /// Active subgoals (accumulated minus already resolved).
    std::vector<AtomicFormula> subgoals;
    Substitution theta;
    std::vector<std::string> known_info;
    /// Shown to the judge numbered from 1.
    std::vector<MemoryFact> facts;
};

struct RefineRequest {
    std::string question;
    Goal goal;
    std::string rule_text;
    std::vector<AtomicFormula> subgoals;
    Substitution theta;
    std::vector<std::string> known_info;
    std::string unification_trace;
    /// Unresolved subgoals of the previous frontier, with reasons.
    std::vector<AtomicFormula> unresolved;
    std::vector<std::string> unresolved_reasons;
    std::vector<std::string> previous_missing_info;
    std::vector<std::string> previous_refined;
    std::vector<MemoryFact> facts;
};

struct AnswerRequest {
    std::string question;
    /// Absent for the forward baselines.
    std::optional<Goal> goal;
    std::optional<AtomicFormula> grounded_goal;
    Substitution theta;
    std::vector<MemoryFact> facts;
};

struct ReactRequest {
    std::string question;
    /// Thought / Action / Observation lines so far.
    std::vector<std::string> trajectory;
    std::vector<std::string> queries;
    std::vector<MemoryFact> observations;
    bool force_finish = false;
};

class Judge {
public:
    virtual ~Judge() = default;

    virtual Goal parse_goal(const std::string& question) = 0;
    virtual DecompositionRule decompose(const DecomposeRequest& req) = 0;
    virtual UnifyVerdict unify(const UnifyRequest& req) = 0;
    virtual RefineVerdict refine(const RefineRequest& req) = 0;
    virtual std::string answer(const AnswerRequest& req) = 0;

    // Atomic checks.
    virtual bool type_entails(const std::string& sub, const std::string& super) = 0;
    virtual bool instance_of(const std::string& constant, const std::string& type) = 0;
    virtual bool equal(const std::string& a, const std::string& b, const std::string& context) = 0;
    virtual bool entails(const std::string& fact, const std::string& grounded_subgoal) = 0;

    // Forward baselines.
    virtual std::vector<std::string> rewrite(const std::string& /*question*/, std::size_t /*n*/) { unsupported("rewrite"); }
    virtual ReflectionDecision reflect(const std::string& /*question*/, const std::vector<std::string>& /*queries*/,
                                       const std::vector<MemoryFact>& /*facts*/)
    {
        unsupported("reflect");
    }
    virtual ReactStep react(const ReactRequest& /*req*/) { unsupported("react"); }
    virtual IntentCapture capture_intent(const std::string& /*question*/, std::size_t /*n*/) { unsupported("intent"); }
    virtual SlotDecision check_slots(const std::string& /*question*/, const std::string& /*intent*/,
                                     const std::vector<std::string>& /*queries*/,
                                     const std::vector<MemoryFact>& /*facts*/, std::size_t /*max_followups*/)
    {
        unsupported("slots");
    }
    virtual std::vector<double> score_candidates(const std::string& /*question*/,
                                                 const std::vector<std::string>& /*missing_slots*/,
                                                 const std::vector<MemoryFact>& /*candidates*/)
    {
        unsupported("score");
    }
    virtual bool judge_answer(const std::string& /*question*/, const std::string& /*reference*/,
                              const std::string& /*prediction*/)
    {
        unsupported("judge_answer");
    }

    /// Stricter-format retries performed so far.
    virtual std::size_t format_retries() const { return 0; }

    EqualityJudgment equality()
    {
        return [this](const std::string& a, const std::string& b, const std::string& ctx) {
            return equal(a, b, ctx);
        };
    }

protected:
    [[noreturn]] static void unsupported(const char* what)
    {
        throw JudgeError(JudgeError::Kind::unsupported, std::string("judge does not support ") + what);
    }
};

// ---------------------------------------------------------------------------
// Shared helpers

/// "N- text [event point_in_time: ...] [spoken at: ...]", numbered from 1.
inline std::vector<std::string> numbered_facts(const std::vector<MemoryFact>& facts)
{
    std::vector<std::string> out;
    for (std::size_t i = 0; i < facts.size(); ++i) {
        auto line = std::to_string(i + 1) + "- " + facts[i].text;
        if (facts[i].meta.event_time) {
            line += " [event point_in_time: " + *facts[i].meta.event_time + "]";
        }
        if (facts[i].meta.spoken_at) {
            line += " [spoken at: " + *facts[i].meta.spoken_at + "]";
        }
        out.push_back(std::move(line));
    }
    return out;
}

/// Identity of a decomposition: the set of its subgoal keys.
inline std::set<std::string> subgoal_set_key(const DecompositionRule& rule)
{
    std::set<std::string> keys;
    for (const auto& a : rule.antecedents) {
        keys.insert(text::canonical_key(render_formula(a)));
    }
    return keys;
}

inline std::string rule_text_of(const DecompositionRule& rule)
{
    return rule.rule_text.empty() ? synthesize_rule_text(rule) : rule.rule_text;
}

inline const std::string& dont_know()
{
    static const std::string s = "I don't know";
    return s;
}

inline bool is_dont_know(std::string_view s)
{
    auto t = text::strip_terminal_punct(text::to_lower(text::trim(s)));
    return t.empty() || t == "i don't know" || t == "i do not know" || t == "unknown";
}

}  // namespace goalmem
