#pragma once
// Command-line front end. Exit codes: 0 success, 2 solver failure (or bound
// violations for `telemetry`), 1 operational error.

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "CLI11.hpp"

#include "goalmem/builtin_prompts.hpp"
#include "goalmem/config.hpp"
#include "goalmem/evalkit.hpp"
#include "goalmem/oracle.hpp"
#include "goalmem/remote.hpp"
#include "goalmem/runner.hpp"

namespace goalmem::cli {

namespace fs = std::filesystem;

inline constexpr int kExitOk = 0;
inline constexpr int kExitError = 1;
inline constexpr int kExitFailed = 2;

/// Flags shared by every command; unset ones fall back to the config file.
struct GlobalFlags {
    std::string config_path;
    std::string store_path;
    std::string judge;
    std::string kb_path;
    std::string method = "goalmem";
    std::string output_dir;
    std::optional<std::size_t> workers;
    std::optional<std::uint32_t> seed;
};

class CommandError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

inline AppConfig resolve_config(const GlobalFlags& g)
{
    AppConfig c;
    if (!g.config_path.empty()) {
        if (!fs::exists(g.config_path)) {
            throw CommandError("config file not found: " + g.config_path);
        }
        c = load_config(g.config_path);
    }
    if (!g.store_path.empty()) {
        c.store_path = g.store_path;
    }
    if (!g.judge.empty()) {
        c.judge_kind = parse_judge_kind(g.judge);
    }
    if (!g.kb_path.empty()) {
        c.kb_path = g.kb_path;
    }
    if (!g.output_dir.empty()) {
        c.output_dir = g.output_dir;
    }
    if (g.workers) {
        c.workers = *g.workers;
    }
    if (g.seed) {
        c.seed = *g.seed;
    }
    c.validate();
    return c;
}

inline std::unique_ptr<MemoryStore> open_store(const AppConfig& c, bool must_exist)
{
    auto store = make_store(c.store_kind);
    if (c.store_path.empty()) {
        if (must_exist) {
            throw CommandError("no store path given (--store or store.path)");
        }
        return store;
    }
    if (fs::exists(c.store_path)) {
        load_jsonl(*store, c.store_path);
    } else if (must_exist) {
        throw CommandError("store file not found: " + c.store_path);
    }
    return store;
}

/// Judge factory for the configured kind. `kb_records` overrides the KB file
/// (synthetic scenarios carry their own).
inline std::function<std::unique_ptr<Judge>()> judge_factory(const AppConfig& c,
                                                             const std::optional<nlohmann::json>& kb_records = {})
{
    if (c.judge_kind == JudgeKind::remote) {
        auto templates = prompts::load_templates(c.prompt_dir);
        auto remote = c.remote;
        return [remote, templates] {
            return std::make_unique<RemoteJudge>(std::make_shared<HttpTransport>(remote), templates);
        };
    }
    std::shared_ptr<const OracleKb> kb;
    if (kb_records) {
        kb = std::make_shared<const OracleKb>(OracleKb::from_records(*kb_records));
    } else if (!c.kb_path.empty()) {
        if (!fs::exists(c.kb_path)) {
            throw CommandError("knowledge base not found: " + c.kb_path);
        }
        kb = std::make_shared<const OracleKb>(OracleKb::load(c.kb_path));
    } else {
        throw CommandError("the oracle judge needs a knowledge base (--kb or judge.kb)");
    }
    return [kb] { return std::make_unique<OracleJudge>(kb); };
}

/// First free `run-<method>-<seed>-<idx>` folder under the output directory.
inline fs::path make_run_dir(const AppConfig& c, const Method& m)
{
    fs::create_directories(c.output_dir);
    for (std::size_t idx = 0;; ++idx) {
        auto dir = fs::path(c.output_dir) / ("run-" + m.tag() + "-" + std::to_string(c.seed) + "-" + std::to_string(idx));
        if (!fs::exists(dir)) {
            fs::create_directories(dir);
            return dir;
        }
    }
}

inline void write_file(const fs::path& p, const std::string& content)
{
    std::ofstream out(p, std::ios::binary | std::ios::trunc);
    if (!out) {
        throw CommandError("cannot write " + p.string());
    }
    out << content;
}

/// Reads the "format" key of a dataset file when present.
inline DatasetFormat detect_format(const fs::path& p, const std::string& flag)
{
    if (!flag.empty()) {
        return parse_dataset_format(flag);
    }
    std::ifstream in(p);
    auto j = nlohmann::json::parse(in, nullptr, false);
    if (!j.is_discarded() && j.is_object() && j.value("format", "") == "synthetic") {
        return DatasetFormat::synthetic;
    }
    return DatasetFormat::locomo_like;
}

// ---------------------------------------------------------------------------

inline int cmd_ingest(const GlobalFlags& g, const std::string& dataset, const std::string& format, std::ostream& out)
{
    auto c = resolve_config(g);
    if (c.store_path.empty()) {
        throw CommandError("no store path given (--store or store.path)");
    }
    auto d = load_dataset(dataset, detect_format(dataset, format));
    auto store = open_store(c, false);
    auto before = store->size();
    ingest_turns(*store, d.turns);
    if (auto parent = fs::path(c.store_path).parent_path(); !parent.empty()) {
        fs::create_directories(parent);
    }
    save_jsonl(*store, c.store_path);
    out << "ingested " << d.turns.size() << " turns; store " << c.store_path << " holds " << store->size()
        << " facts (was " << before << ")\n";
    return kExitOk;
}

inline int cmd_ask(const GlobalFlags& g, const std::string& question, std::ostream& out)
{
    auto c = resolve_config(g);
    auto method = parse_method(g.method);
    auto store = open_store(c, false);
    auto judge = judge_factory(c)();
    auto r = run_method(method, question, *store, *judge, c.solver, c.baseline);
    r.telemetry.item_id = "ask";
    if (r.answered()) {
        out << "ANSWER: " << r.answer << "\n";
    } else {
        out << "FAILED: " << (r.diagnostic.empty() ? "no grounded answer" : r.diagnostic) << "\n";
    }
    auto line = telemetry_to_json(r.telemetry).dump();
    out << "telemetry: " << line << "\n";
    fs::create_directories(c.output_dir);
    std::ofstream(fs::path(c.output_dir) / "telemetry.jsonl", std::ios::app) << line << "\n";
    return r.answered() ? kExitOk : kExitFailed;
}

inline int cmd_eval(const GlobalFlags& g, const std::string& dataset, const std::string& format, std::ostream& out)
{
    auto c = resolve_config(g);
    auto method = parse_method(g.method);
    std::vector<fs::path> files;
    if (fs::is_directory(dataset)) {
        for (const auto& e : fs::directory_iterator(dataset)) {
            if (e.path().extension() == ".json") {
                files.push_back(e.path());
            }
        }
        std::sort(files.begin(), files.end());
    } else if (fs::exists(dataset)) {
        files.push_back(dataset);
    } else {
        throw CommandError("dataset not found: " + dataset);
    }
    if (files.empty()) {
        throw CommandError("no .json datasets in " + dataset);
    }

    std::vector<EvalTask> tasks;
    for (const auto& f : files) {
        auto d = load_dataset(f, detect_format(f, format));
        std::shared_ptr<MemoryStore> store;
        if (d.turns.empty()) {
            store = open_store(c, true);
        } else {
            store = make_store(c.store_kind);
            ingest_turns(*store, d.turns);
        }
        auto factory = judge_factory(c, c.judge_kind == JudgeKind::oracle ? d.kb : std::nullopt);
        for (auto& q : d.qa) {
            if (files.size() > 1) {
                q.id = f.stem().string() + "/" + q.id;
            }
            tasks.push_back({q, store, factory});
        }
    }
    if (tasks.empty()) {
        throw CommandError("dataset has no QA items");
    }

    auto records = evaluate(tasks, method, c.solver, c.baseline, c.workers);
    auto dir = make_run_dir(c, method);
    std::string results;
    std::string telemetry;
    std::vector<ItemResult> items;
    std::vector<TelemetryRecord> tel;
    for (const auto& r : records) {
        results += eval_record_to_json(r).dump() + "\n";
        telemetry += telemetry_to_json(r.run.telemetry).dump() + "\n";
        items.push_back(r.result);
        tel.push_back(r.run.telemetry);
    }
    auto report = build_report(method.name(), items);
    write_file(dir / "results.jsonl", results);
    write_file(dir / "telemetry.jsonl", telemetry);
    write_file(dir / "report.json", report_to_json(report).dump(2) + "\n");
    write_file(dir / "report.txt", report_table(report));
    write_file(dir / "telemetry_report.json", telemetry_report_to_json(aggregate_telemetry(tel)).dump(2) + "\n");
    out << report_table(report);
    out << "run directory: " << dir.string() << "\n";
    return kExitOk;
}

inline int cmd_bench_synth(const GlobalFlags& g, std::size_t hops, std::size_t distractors, std::size_t count,
                           const std::string& out_dir, std::ostream& out)
{
    auto c = resolve_config(g);
    fs::path dir = out_dir.empty() ? fs::path(c.output_dir) / "synth" : fs::path(out_dir);
    fs::create_directories(dir);
    for (std::size_t i = 0; i < count; ++i) {
        auto seed = static_cast<std::uint32_t>(c.seed + i);
        auto s = gen_synthetic_chain(hops, distractors, seed);
        auto fc = forward_chain(s.facts, s.kb_records, s.chain);
        auto name = "chain-h" + std::to_string(hops) + "-d" + std::to_string(distractors) + "-s" + std::to_string(seed)
                    + ".json";
        write_file(dir / name, scenario_to_json(s).dump(2) + "\n");
        out << (dir / name).string() << " min_hops=" << fc.min_hops << "\n";
    }
    return kExitOk;
}

inline int cmd_telemetry(const std::vector<std::string>& files, std::ostream& out)
{
    std::vector<TelemetryRecord> all;
    for (const auto& f : files) {
        auto recs = read_telemetry_file(f);
        all.insert(all.end(), recs.begin(), recs.end());
    }
    auto r = aggregate_telemetry(all);
    out << telemetry_report_to_json(r).dump(2) << "\n";
    for (const auto& v : r.violations) {
        out << "VIOLATION record " << v.index << " (" << v.item_id << "): " << v.what << "\n";
    }
    return r.violations.empty() ? kExitOk : kExitFailed;
}

// ---------------------------------------------------------------------------

inline int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err)
{
    CLI::App app{"Backward-chaining memory reasoning over a conversational fact store", "goalmem"};
    app.require_subcommand(1);
    GlobalFlags g;
    std::size_t workers = 0;
    std::uint32_t seed = 0;
    app.add_option("--config", g.config_path, "YAML config file");
    app.add_option("--store", g.store_path, "fact store (.jsonl)");
    app.add_option("--judge", g.judge, "remote or oracle")->check(CLI::IsMember({"remote", "oracle"}));
    app.add_option("--kb", g.kb_path, "oracle knowledge base (.jsonl or .json)");
    app.add_option("--method", g.method, "goalmem, qr, sr, react or memguide")
        ->check(CLI::IsMember({"goalmem", "qr", "sr", "react", "memguide", "query_reformulation", "self_reflection"}));
    auto* workers_opt = app.add_option("--workers", workers, "parallel evaluation workers")->check(CLI::PositiveNumber);
    auto* seed_opt = app.add_option("--seed", seed, "seed for generated benchmarks and run names");
    app.add_option("--output", g.output_dir, "output directory");

    std::string dataset;
    std::string format;
    auto* ingest = app.add_subcommand("ingest", "add one fact per dataset turn to the store");
    ingest->add_option("dataset", dataset, "dataset file")->required();
    ingest->add_option("--format", format, "locomo_like, longmemeval_like or synthetic");
    ingest->fallthrough();

    std::string question;
    auto* ask = app.add_subcommand("ask", "answer one question");
    ask->add_option("question", question, "the question")->required();
    ask->fallthrough();

    auto* eval = app.add_subcommand("eval", "evaluate a dataset file or a directory of scenario files");
    eval->add_option("dataset", dataset, "dataset file or directory")->required();
    eval->add_option("--format", format, "locomo_like, longmemeval_like or synthetic");
    eval->fallthrough();

    std::size_t hops = 2;
    std::size_t distractors = 5;
    std::size_t count = 10;
    std::string synth_out;
    auto* synth = app.add_subcommand("bench-synth", "write synthetic multi-hop scenario files");
    synth->add_option("--hops", hops, "chain length")->check(CLI::Range(std::size_t{1}, kMaxSyntheticHops));
    synth->add_option("--distractors", distractors, "near-miss facts per scenario");
    synth->add_option("--count", count, "number of scenarios");
    synth->add_option("--out", synth_out, "output directory (default <output>/synth)");
    synth->fallthrough();

    std::vector<std::string> telemetry_files;
    auto* tel = app.add_subcommand("telemetry", "summarize telemetry records");
    tel->add_option("files", telemetry_files, "telemetry .jsonl files")->required();
    tel->fallthrough();

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        int code = app.exit(e, out, err);
        return code == 0 ? kExitOk : kExitError;
    }
    if (workers_opt->count() > 0) {
        g.workers = workers;
    }
    if (seed_opt->count() > 0) {
        g.seed = seed;
    }

    try {
        if (ingest->parsed()) {
            return cmd_ingest(g, dataset, format, out);
        }
        if (ask->parsed()) {
            return cmd_ask(g, question, out);
        }
        if (eval->parsed()) {
            return cmd_eval(g, dataset, format, out);
        }
        if (synth->parsed()) {
            return cmd_bench_synth(g, hops, distractors, count, synth_out, out);
        }
        if (tel->parsed()) {
            return cmd_telemetry(telemetry_files, out);
        }
    } catch (const std::exception& e) {
        err << "error: " << e.what() << "\n";
        return kExitError;
    }
    return kExitError;
}

}  // namespace goalmem::cli
