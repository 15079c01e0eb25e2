#pragma once
// Application config file (YAML). Credentials are never read from here; the
// remote judge names the environment variable that holds its token.

#include <filesystem>
#include <fstream>
#include <sstream>
#include <set>
#include <stdexcept>
#include <string>

#include <yaml-cpp/yaml.h>

#include "goalmem/baselines.hpp"
#include "goalmem/memory.hpp"
#include "goalmem/remote.hpp"
#include "goalmem/solver.hpp"

namespace goalmem {

class ConfigError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

enum class JudgeKind { remote, oracle };

inline JudgeKind parse_judge_kind(const std::string& s)
{
    if (s == "remote") {
        return JudgeKind::remote;
    }
    if (s == "oracle") {
        return JudgeKind::oracle;
    }
    throw ConfigError("judge kind must be remote or oracle, got '" + s + "'");
}

inline StoreKind parse_store_kind(const std::string& s)
{
    if (s == "bm25") {
        return StoreKind::bm25;
    }
    if (s == "dense") {
        return StoreKind::dense;
    }
    throw ConfigError("store kind must be bm25 or dense, got '" + s + "'");
}

struct AppConfig {
    StoreKind store_kind = StoreKind::bm25;
    std::string store_path;
    JudgeKind judge_kind = JudgeKind::oracle;
    RemoteConfig remote;
    std::string kb_path;
    std::string prompt_dir;
    SolverConfig solver;
    BaselineConfig baseline;
    std::size_t workers = 1;
    std::string output_dir = "runs";
    std::uint32_t seed = 0;

    void validate() const
    {
        solver.validate();
        baseline.validate();
        if (workers == 0) {
            throw ConfigError("workers must be positive");
        }
        if (judge_kind == JudgeKind::remote && remote.model.empty()) {
            throw ConfigError("judge.model is required for the remote judge");
        }
    }
};

namespace detail {

inline std::string key_path(const std::string& section, const std::string& key)
{
    return section.empty() ? key : section + "." + key;
}

inline void check_keys(const YAML::Node& node, const std::string& section, const std::set<std::string>& allowed)
{
    if (!node.IsMap()) {
        throw ConfigError("'" + section + "' must be a mapping");
    }
    for (const auto& kv : node) {
        auto key = kv.first.as<std::string>();
        if (!allowed.contains(key)) {
            throw ConfigError("unknown key '" + key_path(section, key) + "'");
        }
    }
}

template <class T>
void read(const YAML::Node& node, const char* key, T& out, const std::string& section)
{
    if (!node[key]) {
        return;
    }
    try {
        out = node[key].as<T>();
    } catch (const YAML::Exception&) {
        throw ConfigError("bad value for '" + key_path(section, key) + "'");
    }
}

inline void read_count(const YAML::Node& node, const char* key, std::size_t& out, const std::string& section)
{
    long long v = static_cast<long long>(out);
    read(node, key, v, section);
    if (v < 0) {
        throw ConfigError("'" + key_path(section, key) + "' must not be negative");
    }
    out = static_cast<std::size_t>(v);
}

}  // namespace detail

inline AppConfig parse_config(const std::string& yaml_text)
{
    YAML::Node root;
    try {
        root = YAML::Load(yaml_text);
    } catch (const YAML::Exception& e) {
        throw ConfigError(std::string("config is not valid YAML: ") + e.what());
    }
    AppConfig c;
    if (root.IsNull()) {
        return c;
    }
    detail::check_keys(root, "", {"store", "judge", "solver", "baseline", "workers", "output_dir", "seed"});

    if (auto s = root["store"]) {
        detail::check_keys(s, "store", {"kind", "path"});
        std::string kind = "bm25";
        detail::read(s, "kind", kind, "store");
        c.store_kind = parse_store_kind(kind);
        detail::read(s, "path", c.store_path, "store");
    }
    if (auto j = root["judge"]) {
        detail::check_keys(j, "judge",
                           {"kind", "base_url", "model", "api_key_env", "temperature", "max_tokens", "timeout",
                            "kb", "prompt_dir"});
        std::string kind = "oracle";
        detail::read(j, "kind", kind, "judge");
        c.judge_kind = parse_judge_kind(kind);
        detail::read(j, "base_url", c.remote.base_url, "judge");
        detail::read(j, "model", c.remote.model, "judge");
        detail::read(j, "api_key_env", c.remote.api_key_env, "judge");
        detail::read(j, "temperature", c.remote.temperature, "judge");
        detail::read(j, "max_tokens", c.remote.max_tokens, "judge");
        detail::read(j, "timeout", c.remote.timeout_seconds, "judge");
        detail::read(j, "kb", c.kb_path, "judge");
        detail::read(j, "prompt_dir", c.prompt_dir, "judge");
    }
    if (auto s = root["solver"]) {
        detail::check_keys(s, "solver", {"max_breadth", "max_depth", "retrieval_cap", "per_subgoal_fanout"});
        detail::read_count(s, "max_breadth", c.solver.max_breadth, "solver");
        detail::read_count(s, "max_depth", c.solver.max_depth, "solver");
        detail::read_count(s, "retrieval_cap", c.solver.retrieval_cap, "solver");
        detail::read_count(s, "per_subgoal_fanout", c.solver.per_subgoal_fanout, "solver");
    }
    if (auto b = root["baseline"]) {
        detail::check_keys(b, "baseline",
                           {"kind", "n_rewrites", "max_reflection_turns", "max_react_steps", "memguide_rounds",
                            "memguide_followups", "intent_queries", "lambda_mix", "retrieval_cap",
                            "per_query_fanout"});
        if (b["kind"]) {
            std::string kind;
            detail::read(b, "kind", kind, "baseline");
            try {
                c.baseline.kind = parse_baseline_kind(kind);
            } catch (const std::invalid_argument& e) {
                throw ConfigError(e.what());
            }
        }
        detail::read_count(b, "n_rewrites", c.baseline.n_rewrites, "baseline");
        detail::read_count(b, "max_reflection_turns", c.baseline.max_reflection_turns, "baseline");
        detail::read_count(b, "max_react_steps", c.baseline.max_react_steps, "baseline");
        detail::read_count(b, "memguide_rounds", c.baseline.memguide_rounds, "baseline");
        detail::read_count(b, "memguide_followups", c.baseline.memguide_followups, "baseline");
        detail::read_count(b, "intent_queries", c.baseline.intent_queries, "baseline");
        detail::read(b, "lambda_mix", c.baseline.lambda_mix, "baseline");
        detail::read_count(b, "retrieval_cap", c.baseline.retrieval_cap, "baseline");
        detail::read_count(b, "per_query_fanout", c.baseline.per_query_fanout, "baseline");
    }
    detail::read_count(root, "workers", c.workers, "");
    detail::read(root, "output_dir", c.output_dir, "");
    detail::read(root, "seed", c.seed, "");
    try {
        c.validate();
    } catch (const std::invalid_argument& e) {
        throw ConfigError(e.what());
    }
    return c;
}

inline AppConfig load_config(const std::filesystem::path& path)
{
    std::ifstream in(path);
    if (!in) {
        throw ConfigError("cannot read config file " + path.string());
    }
    std::stringstream ss;
    ss << in.rdbuf();
    return parse_config(ss.str());
}

}  // namespace goalmem
