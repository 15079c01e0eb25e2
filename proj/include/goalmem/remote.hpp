#pragma once
// Chat-completion backed judge.

#include <atomic>
#include <cstdlib>
#include <functional>
#include <memory>
#include <mutex>
#include <string>
#include <vector>

#include "httplib.h"
#include "json.hpp"

#include "goalmem/builtin_prompts.hpp"
#include "goalmem/judge.hpp"
#include "goalmem/prompt.hpp"

namespace goalmem {

class Transport {
public:
    virtual ~Transport() = default;
    /// Returns the completion text or throws JudgeError(transport).
    virtual std::string complete(const RenderedPrompt& prompt) = 0;
};

struct RemoteConfig {
    std::string base_url = "http://localhost:8000/v1";
    std::string model;
    /// Name of the environment variable holding the bearer token.
    std::string api_key_env = "GOALMEM_API_KEY";
    double temperature = 0.0;
    int max_tokens = 1024;
    int timeout_seconds = 120;
};

/// POSTs OpenAI-style `/chat/completions` requests.
class HttpTransport : public Transport {
public:
    explicit HttpTransport(RemoteConfig cfg) : cfg_(std::move(cfg))
    {
        auto scheme_end = cfg_.base_url.find("://");
        if (scheme_end == std::string::npos) {
            throw JudgeError(JudgeError::Kind::transport, "base_url needs a scheme: " + cfg_.base_url);
        }
        auto path_start = cfg_.base_url.find('/', scheme_end + 3);
        origin_ = cfg_.base_url.substr(0, path_start);
        prefix_ = path_start == std::string::npos ? "" : cfg_.base_url.substr(path_start);
        while (!prefix_.empty() && prefix_.back() == '/') {
            prefix_.pop_back();
        }
        if (const char* key = std::getenv(cfg_.api_key_env.c_str())) {
            api_key_ = key;
        }
    }

    std::string complete(const RenderedPrompt& prompt) override
    {
        nlohmann::json body = {
            {"model", cfg_.model},
            {"temperature", cfg_.temperature},
            {"max_tokens", cfg_.max_tokens},
            {"messages",
             {{{"role", "system"}, {"content", prompt.system}}, {{"role", "user"}, {"content", prompt.user}}}},
        };
        httplib::Client client(origin_);
        client.set_connection_timeout(cfg_.timeout_seconds);
        client.set_read_timeout(cfg_.timeout_seconds);
        httplib::Headers headers;
        if (!api_key_.empty()) {
            headers.emplace("Authorization", "Bearer " + api_key_);
        }
        auto res = client.Post(prefix_ + "/chat/completions", headers, body.dump(), "application/json");
        if (!res) {
            throw JudgeError(JudgeError::Kind::transport, "request failed: " + httplib::to_string(res.error()));
        }
        if (res->status != 200) {
            throw JudgeError(JudgeError::Kind::transport,
                             "HTTP " + std::to_string(res->status) + ": " + res->body.substr(0, 200));
        }
        auto j = nlohmann::json::parse(res->body, nullptr, false);
        try {
            return j.at("choices").at(0).at("message").at("content").get<std::string>();
        } catch (const nlohmann::json::exception&) {
            throw JudgeError(JudgeError::Kind::transport, "unexpected response body");
        }
    }

private:
    RemoteConfig cfg_;
    std::string origin_;
    std::string prefix_;
    std::string api_key_;
};

/// Replays canned replies in order; records every prompt it receives.
class ScriptedTransport : public Transport {
public:
    explicit ScriptedTransport(std::vector<std::string> replies) : replies_(std::move(replies)) {}

    std::string complete(const RenderedPrompt& prompt) override
    {
        std::lock_guard lock(mu_);
        prompts_.push_back(prompt);
        if (next_ >= replies_.size()) {
            throw JudgeError(JudgeError::Kind::transport, "script exhausted");
        }
        return replies_[next_++];
    }

    std::vector<RenderedPrompt> prompts() const
    {
        std::lock_guard lock(mu_);
        return prompts_;
    }

private:
    mutable std::mutex mu_;
    std::vector<std::string> replies_;
    std::size_t next_ = 0;
    std::vector<RenderedPrompt> prompts_;
};

inline std::string format_reminder(const PromptTemplate& tpl)
{
    return "Your previous reply did not follow the required output format. Reply again using exactly these "
           "labels, in this order, each at the start of its own line: "
           + text::join(tpl.output_labels, " ") + " Do not add any other text.";
}

namespace detail {

inline std::vector<std::string> rendered(const std::vector<AtomicFormula>& fs)
{
    std::vector<std::string> out;
    for (const auto& f : fs) {
        out.push_back(render_formula(f));
    }
    return out;
}

}  // namespace detail

/// Structured steps go through the prompt templates; a reply that does not
/// parse is retried once with a format reminder. Atomic checks run locally
/// on normalized text and are used only to re-validate returned bindings.
class RemoteJudge : public Judge {
public:
    RemoteJudge(std::shared_ptr<Transport> transport, prompts::TemplateSet templates = prompts::builtin_templates())
        : transport_(std::move(transport)), templates_(std::move(templates))
    {
    }

    std::size_t format_retries() const override { return retries_.load(); }

    Goal parse_goal(const std::string& question) override
    {
        return call("goal_parse", {{"QUESTION", question}}, [](const std::string& r) { return parse_goal_verdict(r); });
    }

    DecompositionRule decompose(const DecomposeRequest& req) override
    {
        PromptValues values{{"QUESTION", req.question}};
        if (!req.background.empty()) {
            values["BACKGROUND_SUMMARY"] = req.background;
        }
        if (!req.known_info.empty()) {
            values["ASSUMED_KNOWN_INFO"] = req.known_info;
        }
        bool next_hop = !req.prior.empty() || req.retry;
        if (next_hop) {
            std::vector<std::string> axioms;
            for (const auto& p : req.prior) {
                axioms.push_back(rule_text_of(p));
            }
            values["AXIOMS"] = axioms;
        }
        return call(next_hop ? "decomposition_next_hop" : "decomposition", values,
                    [](const std::string& r) { return parse_rule(r); });
    }

    UnifyVerdict unify(const UnifyRequest& req) override
    {
        PromptValues values{{"QUESTION", req.question}, {"GOAL", render_formula(req.goal.formula)}};
        std::vector<std::string> subgoals;
        for (const auto& s : req.subgoals) {
            subgoals.push_back("- " + render_formula(s));
        }
        values["SUBGOALS"] = subgoals;
        if (!req.theta.empty()) {
            values["CURRENT_SUBSTITUTION"] = render_substitution(req.theta);
        }
        if (!req.known_info.empty()) {
            values["ASSUMED_KNOWN_INFO"] = req.known_info;
        }
        values["GENERAL_RULE"] = req.rule_text;
        values["FACTS"] = numbered_facts(req.facts);
        auto verdict = call("unification", values, [&](const std::string& r) {
            auto v = parse_unify_verdict(r);
            for (const auto& g : v.grounded) {
                for (auto ref : g.fact_refs) {
                    if (ref > req.facts.size()) {
                        throw VerdictError(VerdictError::Kind::MalformedVerdict, "cites unknown fact " + std::to_string(ref));
                    }
                }
            }
            return v;
        });
        // Never let a reply rebind what theta already fixed.
        auto merged = merge_substitutions(req.theta, verdict.substitution, equality());
        if (const auto* c = std::get_if<Conflict>(&merged)) {
            verdict.status = UnifyStatus::conflict;
            verdict.substitution = req.theta;
            verdict.reasoning += " [local check: " + c->variable + " / " + c->incoming + " conflicts with "
                                 + c->existing + "]";
        } else {
            verdict.substitution = std::get<Substitution>(merged);
        }
        return verdict;
    }

    RefineVerdict refine(const RefineRequest& req) override
    {
        PromptValues values{{"QUESTION", req.question}, {"GOAL", render_formula(req.goal.formula)}};
        values["GENERAL_RULE"] = req.rule_text;
        values["SUBGOALS"] = detail::rendered(req.subgoals);
        values["CURRENT_SUBSTITUTION"] = render_substitution(req.theta);
        values["KNOWN_INFO"] = req.known_info;
        values["UNIFICATION_TRACE"] = req.unification_trace;
        std::vector<std::string> unresolved;
        for (std::size_t i = 0; i < req.unresolved.size(); ++i) {
            auto line = render_formula(req.unresolved[i]);
            if (i < req.unresolved_reasons.size() && !req.unresolved_reasons[i].empty()) {
                line += " -- " + req.unresolved_reasons[i];
            }
            unresolved.push_back(line);
        }
        values["UNRESOLVED_SUBGOALS"] = unresolved;
        values["PREVIOUSLY_RETRIEVED_MISSING_INFO"] = req.previous_missing_info;
        values["PREVIOUSLY_REFINED_SUBGOALS"] = req.previous_refined;
        values["FACTS"] = numbered_facts(req.facts);
        std::set<std::string> declared(req.goal.answer_variables.begin(), req.goal.answer_variables.end());
        return call("refinement", values, [&](const std::string& r) { return parse_refine_verdict(r, declared); });
    }

    std::string answer(const AnswerRequest& req) override
    {
        PromptValues values{{"QUESTION", req.question}};
        if (req.grounded_goal) {
            values["GROUNDED_GOAL"] = render_formula(*req.grounded_goal);
            values["SUBSTITUTION"] = render_substitution(req.theta);
        }
        values["FACTS"] = numbered_facts(req.facts);
        return call("answer", values, [](const std::string& r) { return parse_answer(r); });
    }

    bool type_entails(const std::string& sub, const std::string& super) override
    {
        return text::normalize_for_match(sub) == text::normalize_for_match(super);
    }
    bool instance_of(const std::string&, const std::string&) override { return true; }

    /// Normalized equality, or one name's tokens appearing as a contiguous run
    /// inside the other's ("Matcha" vs "Matcha Powder").
    bool equal(const std::string& a, const std::string& b, const std::string&) override
    {
        auto ta = text::tokenize(a);
        auto tb = text::tokenize(b);
        if (ta.size() > tb.size()) {
            std::swap(ta, tb);
        }
        if (ta.empty()) {
            return tb.empty();
        }
        return std::search(tb.begin(), tb.end(), ta.begin(), ta.end()) != tb.end();
    }
    bool entails(const std::string& fact, const std::string& subgoal) override
    {
        return text::normalize_for_match(fact) == text::normalize_for_match(subgoal);
    }

    std::vector<std::string> rewrite(const std::string& question, std::size_t n) override
    {
        return call("rewrite", {{"QUESTION", question}, {"COUNT", std::to_string(n)}},
                    [](const std::string& r) { return parse_queries(r); });
    }

    ReflectionDecision reflect(const std::string& question, const std::vector<std::string>& queries,
                               const std::vector<MemoryFact>& facts) override
    {
        return call("reflection", {{"QUESTION", question}, {"QUERIES", queries}, {"FACTS", numbered_facts(facts)}},
                    [](const std::string& r) { return parse_reflection(r); });
    }

    ReactStep react(const ReactRequest& req) override
    {
        PromptValues values{{"QUESTION", req.question}, {"TRAJECTORY", req.trajectory}};
        if (req.force_finish) {
            values["FORCE_FINISH"] = std::string(
                "The step limit is reached. Reply with a Thought line and Action: Finish[<answer>] now.");
        }
        return call("react", values, [&](const std::string& r) {
            auto s = parse_react_step(r);
            if (req.force_finish && s.action != ReactStep::Action::finish) {
                throw VerdictError(VerdictError::Kind::MalformedVerdict, "expected Finish");
            }
            return s;
        });
    }

    IntentCapture capture_intent(const std::string& question, std::size_t n) override
    {
        return call("memguide_intent", {{"QUESTION", question}, {"COUNT", std::to_string(n)}},
                    [](const std::string& r) { return parse_intent(r); });
    }

    SlotDecision check_slots(const std::string& question, const std::string& intent,
                             const std::vector<std::string>&, const std::vector<MemoryFact>& facts,
                             std::size_t max_followups) override
    {
        auto d = call("memguide_slots",
                      {{"QUESTION", question},
                       {"INTENT", intent},
                       {"MAX_FOLLOWUPS", std::to_string(max_followups)},
                       {"FACTS", numbered_facts(facts)}},
                      [](const std::string& r) { return parse_slot_decision(r); });
        if (d.followups.size() > max_followups) {
            d.followups.resize(max_followups);
        }
        return d;
    }

    std::vector<double> score_candidates(const std::string& question, const std::vector<std::string>& missing_slots,
                                         const std::vector<MemoryFact>& candidates) override
    {
        return call("memguide_score",
                    {{"QUESTION", question}, {"MISSING_SLOTS", missing_slots}, {"CANDIDATES", numbered_facts(candidates)}},
                    [&](const std::string& r) { return parse_scores(r, candidates.size()); });
    }

    bool judge_answer(const std::string& question, const std::string& reference, const std::string& prediction) override
    {
        return call("answer_judge", {{"QUESTION", question}, {"REFERENCE", reference}, {"PREDICTION", prediction}},
                    [](const std::string& r) { return parse_answer_judgment(r); });
    }

private:
    template <class Parse>
    auto call(const std::string& name, const PromptValues& values, Parse parse) -> decltype(parse(std::string{}))
    {
        const auto& tpl = templates_.at(name);
        auto prompt = render_prompt(tpl, values);
        std::string first_error;
        try {
            return parse(transport_->complete(prompt));
        } catch (const VerdictError& e) {
            first_error = e.what();
        } catch (const RuleError& e) {
            first_error = e.what();
        } catch (const FormulaError& e) {
            first_error = e.what();
        }
        ++retries_;
        prompt.user += "\n\n" + format_reminder(tpl);
        try {
            return parse(transport_->complete(prompt));
        } catch (const VerdictError& e) {
            throw JudgeError(JudgeError::Kind::format_after_retry, name + ": " + e.what());
        } catch (const RuleError& e) {
            throw JudgeError(JudgeError::Kind::format_after_retry, name + ": " + e.what());
        } catch (const FormulaError& e) {
            throw JudgeError(JudgeError::Kind::format_after_retry, name + ": " + e.what());
        }
    }

    std::shared_ptr<Transport> transport_;
    prompts::TemplateSet templates_;
    std::atomic<std::size_t> retries_{0};
};

}  // namespace goalmem
