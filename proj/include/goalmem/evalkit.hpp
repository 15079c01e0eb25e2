#pragma once
// Datasets, answer metrics, telemetry aggregation and the synthetic chain
// benchmark.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <map>
#include <optional>
#include <random>
#include <regex>
#include <set>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "json.hpp"

#include "goalmem/judge.hpp"
#include "goalmem/memory.hpp"
#include "goalmem/oracle.hpp"
#include "goalmem/solver.hpp"

namespace goalmem {

// ---------------------------------------------------------------------------
// Metrics

/// Lowercase, punctuation dropped, articles a/an/the removed.
inline std::vector<std::string> answer_tokens(std::string_view s)
{
    std::string cleaned;
    cleaned.reserve(s.size());
    for (char c : s) {
        auto u = static_cast<unsigned char>(c);
        if (std::ispunct(u) != 0) {
            continue;
        }
        cleaned.push_back(static_cast<char>(std::tolower(u)));
    }
    std::vector<std::string> out;
    std::istringstream in(cleaned);
    for (std::string w; in >> w;) {
        if (w != "a" && w != "an" && w != "the") {
            out.push_back(w);
        }
    }
    return out;
}

inline double token_f1(std::string_view prediction, std::string_view reference)
{
    auto p = answer_tokens(prediction);
    auto r = answer_tokens(reference);
    if (p.empty() && r.empty()) {
        return 1.0;
    }
    if (p.empty() || r.empty()) {
        return 0.0;
    }
    std::map<std::string, int> counts;
    for (const auto& t : r) {
        ++counts[t];
    }
    std::size_t common = 0;
    for (const auto& t : p) {
        if (auto it = counts.find(t); it != counts.end() && it->second > 0) {
            --it->second;
            ++common;
        }
    }
    if (common == 0) {
        return 0.0;
    }
    double precision = static_cast<double>(common) / static_cast<double>(p.size());
    double recall = static_cast<double>(common) / static_cast<double>(r.size());
    return 2.0 * precision * recall / (precision + recall);
}

enum class IntervalMethod { wald, wilson };

inline std::string to_string(IntervalMethod m) { return m == IntervalMethod::wald ? "wald" : "wilson"; }

inline constexpr double kZ95 = 1.96;

/// 95% half-width for a binomial proportion.
inline double confidence_half_width(std::size_t successes, std::size_t n,
                                    IntervalMethod method = IntervalMethod::wald)
{
    if (n == 0 || successes > n) {
        throw std::invalid_argument("confidence_half_width needs 0 <= successes <= n and n >= 1");
    }
    double nn = static_cast<double>(n);
    double p = static_cast<double>(successes) / nn;
    if (method == IntervalMethod::wald) {
        return kZ95 * std::sqrt(p * (1.0 - p) / nn);
    }
    double z2 = kZ95 * kZ95;
    return kZ95 / (1.0 + z2 / nn) * std::sqrt(p * (1.0 - p) / nn + z2 / (4.0 * nn * nn));
}

/// Normal-approximation half-width of a mean of values in [0,1]; uses the
/// population variance so that 0/1 values reduce to the Wald interval.
inline double mean_half_width(const std::vector<double>& values)
{
    if (values.empty()) {
        return 0.0;
    }
    double n = static_cast<double>(values.size());
    double mean = 0.0;
    for (double v : values) {
        mean += v;
    }
    mean /= n;
    double var = 0.0;
    for (double v : values) {
        var += (v - mean) * (v - mean);
    }
    var /= n;
    return kZ95 * std::sqrt(var / n);
}

/// Fraction of predictions the judge accepts. Throws on an empty set.
inline double judge_accuracy(const std::vector<std::string>& questions, const std::vector<std::string>& predictions,
                             const std::vector<std::string>& references, Judge& judge)
{
    if (predictions.empty()) {
        throw std::invalid_argument("judge_accuracy needs at least one prediction");
    }
    if (predictions.size() != references.size() || questions.size() != predictions.size()) {
        throw std::invalid_argument("judge_accuracy: questions, predictions and references differ in length");
    }
    std::size_t correct = 0;
    for (std::size_t i = 0; i < predictions.size(); ++i) {
        correct += judge.judge_answer(questions[i], references[i], predictions[i]) ? 1 : 0;
    }
    return static_cast<double>(correct) / static_cast<double>(predictions.size());
}

// ---------------------------------------------------------------------------
// Datasets

struct ConversationTurn {
    std::string speaker;
    std::string utterance;
    std::string session;
    std::optional<std::string> timestamp;
};

struct QaItem {
    std::string id;
    std::string question;
    std::string reference_answer;
    std::optional<std::string> category;
    std::optional<std::string> session;
};

enum class DatasetFormat { locomo_like, longmemeval_like, synthetic };

inline DatasetFormat parse_dataset_format(const std::string& s)
{
    if (s == "locomo_like" || s == "locomo") {
        return DatasetFormat::locomo_like;
    }
    if (s == "longmemeval_like" || s == "longmemeval") {
        return DatasetFormat::longmemeval_like;
    }
    if (s == "synthetic") {
        return DatasetFormat::synthetic;
    }
    throw std::invalid_argument("unknown dataset format '" + s + "'");
}

struct Dataset {
    std::vector<ConversationTurn> turns;
    std::vector<QaItem> qa;
    /// Oracle knowledge-base records carried by synthetic scenario files.
    std::optional<nlohmann::json> kb;
};

class ParseError : public std::runtime_error {
public:
    ParseError(std::string where, const std::string& what) : std::runtime_error(where + ": " + what), where_(std::move(where))
    {
    }
    /// "path:line" for syntax errors, "path: field" for schema errors.
    const std::string& where() const { return where_; }

private:
    std::string where_;
};

/// Fact text for a turn; the speaker becomes a prefix when present.
inline std::string turn_text(const ConversationTurn& t)
{
    return t.speaker.empty() ? t.utterance : t.speaker + ": " + t.utterance;
}

namespace detail {

inline std::size_t line_of_offset(const std::string& s, std::size_t offset)
{
    offset = std::min(offset, s.size());
    return 1 + static_cast<std::size_t>(std::count(s.begin(), s.begin() + static_cast<std::ptrdiff_t>(offset), '\n'));
}

inline std::string json_scalar_text(const nlohmann::json& v)
{
    return v.is_string() ? v.get<std::string>() : v.dump();
}

}  // namespace detail

inline Dataset parse_dataset(const std::string& content, DatasetFormat format, const std::string& origin = "<input>")
{
    nlohmann::json j;
    try {
        j = nlohmann::json::parse(content);
    } catch (const nlohmann::json::parse_error& e) {
        throw ParseError(origin + ":" + std::to_string(detail::line_of_offset(content, e.byte == 0 ? 0 : e.byte - 1)),
                         "malformed JSON");
    }
    auto bad = [&](const std::string& field, const std::string& what) { return ParseError(origin + ": " + field, what); };
    if (!j.is_object()) {
        throw bad("<root>", "expected an object with 'turns' and 'qa'");
    }
    auto text_field = [&](const nlohmann::json& obj, const char* name, const std::string& path, bool required)
        -> std::optional<std::string> {
        if (!obj.contains(name) || obj[name].is_null()) {
            if (required) {
                throw bad(path + "." + name, "missing field '" + std::string(name) + "'");
            }
            return std::nullopt;
        }
        const auto& v = obj[name];
        if (!v.is_string() && !v.is_number()) {
            throw bad(path + "." + name, "field '" + std::string(name) + "' must be text");
        }
        return detail::json_scalar_text(v);
    };

    Dataset d;
    if (j.contains("turns")) {
        if (!j["turns"].is_array()) {
            throw bad("turns", "field 'turns' must be an array");
        }
        for (std::size_t i = 0; i < j["turns"].size(); ++i) {
            const auto& t = j["turns"][i];
            auto path = "turns[" + std::to_string(i) + "]";
            if (!t.is_object()) {
                throw bad(path, "turn must be an object");
            }
            ConversationTurn turn;
            turn.speaker = text_field(t, "speaker", path, false).value_or("");
            turn.utterance = *text_field(t, "utterance", path, true);
            if (text::trim_view(turn.utterance).empty()) {
                throw bad(path + ".utterance", "field 'utterance' is empty");
            }
            turn.session = text_field(t, "session", path, false).value_or("");
            turn.timestamp = text_field(t, "timestamp", path, false);
            d.turns.push_back(std::move(turn));
        }
    }
    if (!j.contains("qa") || !j["qa"].is_array()) {
        throw bad("qa", "missing field 'qa'");
    }
    for (std::size_t i = 0; i < j["qa"].size(); ++i) {
        const auto& q = j["qa"][i];
        auto path = "qa[" + std::to_string(i) + "]";
        if (!q.is_object()) {
            throw bad(path, "qa item must be an object");
        }
        QaItem item;
        item.question = *text_field(q, "question", path, true);
        item.reference_answer = *text_field(q, "answer", path, true);
        if (text::trim_view(item.question).empty()) {
            throw bad(path + ".question", "field 'question' is empty");
        }
        if (text::trim_view(item.reference_answer).empty()) {
            throw bad(path + ".answer", "field 'answer' is empty");
        }
        item.category = text_field(q, "category", path, false);
        item.session = text_field(q, "session", path, false);
        item.id = text_field(q, "id", path, false).value_or("q" + std::to_string(i + 1));
        d.qa.push_back(std::move(item));
    }
    if (format == DatasetFormat::synthetic) {
        if (!j.contains("kb") || !j["kb"].is_array()) {
            throw bad("kb", "missing field 'kb'");
        }
        d.kb = j["kb"];
    } else if (j.contains("kb") && j["kb"].is_array()) {
        d.kb = j["kb"];
    }

    // Chronological order when every turn carries an ISO timestamp.
    bool stamped = !d.turns.empty()
                   && std::all_of(d.turns.begin(), d.turns.end(), [](const auto& t) { return t.timestamp.has_value(); });
    if (stamped) {
        std::stable_sort(d.turns.begin(), d.turns.end(),
                         [](const auto& a, const auto& b) { return *a.timestamp < *b.timestamp; });
    }
    return d;
}

inline Dataset load_dataset(const std::filesystem::path& path, DatasetFormat format)
{
    std::ifstream in(path, std::ios::binary);
    if (!in) {
        throw ParseError(path.string(), "cannot read file");
    }
    std::stringstream ss;
    ss << in.rdbuf();
    return parse_dataset(ss.str(), format, path.string());
}

// ---------------------------------------------------------------------------
// Reports

struct ItemResult {
    std::string id;
    std::string question;
    std::string reference;
    std::string prediction;
    std::string category;
    double f1 = 0.0;
    std::optional<bool> correct;
    bool answered = false;
};

struct CategoryStats {
    std::size_t n = 0;
    double mean_f1 = 0.0;
    double f1_half_width = 0.0;
    std::optional<double> accuracy;
    std::optional<double> accuracy_half_width;
};

struct MetricReport {
    std::string method;
    IntervalMethod interval = IntervalMethod::wald;
    CategoryStats overall;
    std::map<std::string, CategoryStats> by_category;
};

namespace detail {

inline CategoryStats summarize(const std::vector<const ItemResult*>& items, IntervalMethod interval)
{
    CategoryStats s;
    s.n = items.size();
    if (items.empty()) {
        return s;
    }
    std::vector<double> f1s;
    std::size_t judged = 0;
    std::size_t correct = 0;
    for (const auto* r : items) {
        f1s.push_back(r->f1);
        if (r->correct) {
            ++judged;
            correct += *r->correct ? 1 : 0;
        }
    }
    double sum = 0.0;
    for (double v : f1s) {
        sum += v;
    }
    s.mean_f1 = sum / static_cast<double>(f1s.size());
    s.f1_half_width = mean_half_width(f1s);
    if (judged > 0) {
        s.accuracy = static_cast<double>(correct) / static_cast<double>(judged);
        s.accuracy_half_width = confidence_half_width(correct, judged, interval);
    }
    return s;
}

}  // namespace detail

inline MetricReport build_report(const std::string& method, const std::vector<ItemResult>& items,
                                 IntervalMethod interval = IntervalMethod::wald)
{
    MetricReport r;
    r.method = method;
    r.interval = interval;
    std::vector<const ItemResult*> all;
    std::map<std::string, std::vector<const ItemResult*>> groups;
    for (const auto& i : items) {
        all.push_back(&i);
        groups[i.category.empty() ? "uncategorized" : i.category].push_back(&i);
    }
    r.overall = detail::summarize(all, interval);
    for (const auto& [cat, list] : groups) {
        r.by_category[cat] = detail::summarize(list, interval);
    }
    return r;
}

inline nlohmann::json category_to_json(const CategoryStats& s)
{
    nlohmann::json j = {{"n", s.n}, {"mean_f1", s.mean_f1}, {"f1_half_width", s.f1_half_width}};
    if (s.accuracy) {
        j["judge_accuracy"] = *s.accuracy;
        j["accuracy_half_width"] = *s.accuracy_half_width;
    }
    return j;
}

inline nlohmann::json report_to_json(const MetricReport& r)
{
    nlohmann::json cats = nlohmann::json::object();
    for (const auto& [c, s] : r.by_category) {
        cats[c] = category_to_json(s);
    }
    return {{"method", r.method}, {"interval", to_string(r.interval)}, {"overall", category_to_json(r.overall)},
            {"by_category", cats}};
}

/// Aligned-column text table, one row per category plus the overall row.
inline std::string report_table(const MetricReport& r)
{
    std::vector<std::vector<std::string>> rows = {{"category", "n", "f1", "f1_ci", "acc", "acc_ci"}};
    auto fmt = [](double v) {
        std::ostringstream os;
        os << std::fixed << std::setprecision(4) << v;
        return os.str();
    };
    auto row = [&](const std::string& name, const CategoryStats& s) {
        rows.push_back({name, std::to_string(s.n), fmt(s.mean_f1), fmt(s.f1_half_width),
                        s.accuracy ? fmt(*s.accuracy) : "-", s.accuracy_half_width ? fmt(*s.accuracy_half_width) : "-"});
    };
    for (const auto& [c, s] : r.by_category) {
        row(c, s);
    }
    row("overall", r.overall);
    std::vector<std::size_t> width(rows[0].size(), 0);
    for (const auto& rw : rows) {
        for (std::size_t i = 0; i < rw.size(); ++i) {
            width[i] = std::max(width[i], rw[i].size());
        }
    }
    std::ostringstream os;
    os << "# method: " << r.method << ", interval: " << to_string(r.interval) << "\n";
    for (const auto& rw : rows) {
        for (std::size_t i = 0; i < rw.size(); ++i) {
            if (i == 0) {
                os << std::left << std::setw(static_cast<int>(width[i])) << rw[i];
            } else {
                os << "  " << std::right << std::setw(static_cast<int>(width[i])) << rw[i];
            }
        }
        os << "\n";
    }
    return os.str();
}

// ---------------------------------------------------------------------------
// Telemetry

struct BoundViolation {
    std::size_t index = 0;
    std::string item_id;
    std::string what;
};

struct TelemetryReport {
    std::size_t records = 0;
    std::map<std::size_t, std::size_t> breadth_hist;
    std::map<std::size_t, std::size_t> depth_hist;
    /// One entry per decomposition, so its mass is the decomposition count.
    std::map<std::size_t, std::size_t> subgoal_hist;
    std::vector<BoundViolation> violations;
    /// Answered runs that finished at breadth 1 and depth <= 3.
    std::size_t answered = 0;
    std::size_t answered_shallow = 0;
};

inline std::vector<std::string> bound_violations(const TelemetryRecord& t)
{
    std::vector<std::string> out;
    if (t.method == "goalmem") {
        auto judge_bound = 1 + t.max_breadth * (2 + 2 * t.max_depth) + 1;
        if (t.judge_calls > judge_bound) {
            out.push_back("judge_calls " + std::to_string(t.judge_calls) + " > " + std::to_string(judge_bound));
        }
        auto retrieval_bound = t.max_breadth * (t.max_depth + 1) * t.max_step_subgoals;
        if (t.retrieval_calls > retrieval_bound) {
            out.push_back("retrieval_calls " + std::to_string(t.retrieval_calls) + " > "
                          + std::to_string(retrieval_bound));
        }
        if (t.realized_breadth > t.max_breadth) {
            out.push_back("realized_breadth exceeds max_breadth");
        }
        if (t.realized_depth > t.max_depth) {
            out.push_back("realized_depth exceeds max_depth");
        }
    }
    if (t.admitted_facts > t.retrieval_cap) {
        out.push_back("admitted_facts " + std::to_string(t.admitted_facts) + " > cap");
    }
    if (t.answer_facts > t.retrieval_cap) {
        out.push_back("answer_facts " + std::to_string(t.answer_facts) + " > cap");
    }
    return out;
}

inline TelemetryReport aggregate_telemetry(const std::vector<TelemetryRecord>& records)
{
    TelemetryReport r;
    r.records = records.size();
    for (std::size_t i = 0; i < records.size(); ++i) {
        const auto& t = records[i];
        ++r.breadth_hist[t.realized_breadth];
        ++r.depth_hist[t.realized_depth];
        for (auto c : t.subgoal_counts) {
            ++r.subgoal_hist[c];
        }
        for (auto& v : bound_violations(t)) {
            r.violations.push_back({i, t.item_id, std::move(v)});
        }
        if (t.answered) {
            ++r.answered;
            if (t.realized_breadth <= 1 && t.realized_depth <= 3) {
                ++r.answered_shallow;
            }
        }
    }
    return r;
}

inline nlohmann::json telemetry_report_to_json(const TelemetryReport& r)
{
    auto hist = [](const std::map<std::size_t, std::size_t>& h) {
        nlohmann::json j = nlohmann::json::object();
        for (const auto& [k, v] : h) {
            j[std::to_string(k)] = v;
        }
        return j;
    };
    auto viol = nlohmann::json::array();
    for (const auto& v : r.violations) {
        viol.push_back({{"index", v.index}, {"item_id", v.item_id}, {"what", v.what}});
    }
    return {{"records", r.records},     {"realized_breadth", hist(r.breadth_hist)},
            {"realized_depth", hist(r.depth_hist)}, {"subgoals_per_decomposition", hist(r.subgoal_hist)},
            {"violations", viol},       {"answered", r.answered},
            {"answered_b1_d3", r.answered_shallow}};
}

inline std::vector<TelemetryRecord> read_telemetry(std::istream& in, const std::string& origin = "<telemetry>")
{
    std::vector<TelemetryRecord> out;
    std::size_t line_no = 0;
    for (std::string line; std::getline(in, line);) {
        ++line_no;
        if (text::trim_view(line).empty()) {
            continue;
        }
        auto j = nlohmann::json::parse(line, nullptr, false);
        if (j.is_discarded() || !j.is_object()) {
            throw ParseError(origin + ":" + std::to_string(line_no), "malformed telemetry record");
        }
        out.push_back(telemetry_from_json(j));
    }
    return out;
}

inline std::vector<TelemetryRecord> read_telemetry_file(const std::filesystem::path& path)
{
    std::ifstream in(path);
    if (!in) {
        throw ParseError(path.string(), "cannot read file");
    }
    return read_telemetry(in, path.string());
}

// ---------------------------------------------------------------------------
// Synthetic chains
//
// An entity chain e0 -> e1 -> ... -> eh, one fact per link. The question
// names only e0 and the first relation, so only the first link is reachable
// from the question text; the scripted decomposition asks for the last link
// and the scripted refinements walk the chain backward.

struct ChainSpec {
    std::string anchor;
    std::vector<std::string> entities;   // e0..eh
    std::vector<std::string> types;      // T0..Th
    std::vector<std::string> relations;  // rel1..relh
};

struct SyntheticScenario {
    std::uint32_t seed = 0;
    std::size_t hops = 0;
    std::size_t distractors = 0;
    std::vector<std::string> facts;  // insertion order
    nlohmann::json kb_records = nlohmann::json::array();
    QaItem qa;
    ChainSpec chain;

    OracleKb kb() const { return OracleKb::from_records(kb_records); }
};

inline constexpr std::size_t kMaxSyntheticHops = 8;
inline constexpr std::size_t kSyntheticFillers = 12;
inline constexpr std::size_t kSyntheticCheckK = 10;

namespace detail {

inline const std::vector<std::string>& chain_types()
{
    static const std::vector<std::string> v = {
        "lantern", "harbor", "orchard", "ledger", "compass", "violin", "meadow", "quarry", "beacon", "saddle",
        "anchor",  "garnet", "kettle",  "thimble", "gazebo", "parcel", "spindle", "trellis", "marble", "tundra",
    };
    return v;
}

inline const std::vector<std::string>& chain_relations()
{
    static const std::vector<std::string> v = {
        "mentored", "painted", "guarded", "carried", "repaired", "sketched", "borrowed", "polished",
        "rescued",  "traded",  "planted", "tuned",   "welded",   "carved",   "stitched", "baked",
    };
    return v;
}

inline const std::vector<std::string>& name_heads()
{
    static const std::vector<std::string> v = {"Cor", "Dal", "Ves", "Mir", "Tal", "Bren", "Kas", "Lun",
                                               "Or",  "Pell", "Quin", "Ros", "Sef", "Tor", "Ul", "Wyn"};
    return v;
}

inline const std::vector<std::string>& name_tails()
{
    static const std::vector<std::string> v = {"vin", "ia", "ra", "en", "ick", "ow", "eth", "ard", "is", "una"};
    return v;
}

inline const std::vector<std::string>& filler_moods()
{
    static const std::vector<std::string> v = {"quiet", "long", "steep", "muddy", "bright", "cold", "narrow", "busy"};
    return v;
}

inline const std::vector<std::string>& filler_places()
{
    static const std::vector<std::string> v = {"pier", "market", "station", "bridge", "square", "chapel"};
    return v;
}

/// Uniform index without relying on library distributions, so scenarios are
/// identical across standard library implementations.
inline std::size_t draw(std::mt19937& rng, std::size_t n)
{
    auto limit = (std::uint64_t{rng.max()} + 1) / n * n;
    std::uint64_t v = 0;
    do {
        v = rng();
    } while (v >= limit);
    return static_cast<std::size_t>(v % n);
}

template <class T>
void shuffle(std::mt19937& rng, std::vector<T>& v)
{
    for (std::size_t i = v.size(); i > 1; --i) {
        std::swap(v[i - 1], v[draw(rng, i)]);
    }
}

/// Distinct picks from `pool`, in draw order.
inline std::vector<std::string> distinct(std::mt19937& rng, const std::vector<std::string>& pool, std::size_t n)
{
    auto copy = pool;
    shuffle(rng, copy);
    copy.resize(n);
    return copy;
}

inline std::string chain_var(std::size_t i) { return std::string("v") + static_cast<char>('a' + i - 1); }

}  // namespace detail

/// Subgoal for link i (1-based) of a chain with `hops` links.
inline std::string chain_subgoal(const ChainSpec& c, std::size_t i)
{
    std::size_t hops = c.relations.size();
    std::string tail = i == hops ? "(x:" + c.types[i] + ")" : "(" + detail::chain_var(i) + ":" + c.types[i] + ")";
    std::string head = i == 1 ? "(" + c.anchor + ")"
                              : "(" + detail::chain_var(i - 1) + ":" + c.types[i - 1] + " linked to " + c.anchor + ")";
    return head + " " + c.relations[i - 1] + " " + tail + ".";
}

/// Facts carry no type labels; types live in the KB instance records, so a
/// link's fact shares no token with the neighbouring links' subgoals.
inline std::string chain_fact(const ChainSpec& c, std::size_t i)
{
    return "(" + c.entities[i - 1] + ") " + c.relations[i - 1] + " (" + c.entities[i] + ").";
}

inline std::string chain_question(const ChainSpec& c)
{
    return c.anchor + ": what is at the end of the trail that starts with what I " + c.relations[0] + "?";
}

inline std::string chain_rule_text(const ChainSpec& c)
{
    std::size_t hops = c.relations.size();
    std::string goal = "(x:" + c.types[hops] + ") is reached from (" + c.anchor + ") through the trail.";
    std::string sub = chain_subgoal(c, hops);
    return "Goal: " + goal + "\nRule: IF " + text::strip_terminal_punct(sub) + ", THEN "
           + text::strip_terminal_punct(goal) + ".\nVariables:\n- (x:" + c.types[hops]
           + "): the end of the trail\nSubgoals:\n- " + sub;
}

/// Exhaustive forward chaining over ground "(a) rel (b)." facts and the
/// instance records of a KB record array, written without the formula parser
/// or the oracle judge.
struct ForwardChainResult {
    std::set<std::string> answers;
    /// Shortest directed fact path from the anchor to the single answer;
    /// 0 when there is no unique answer or it is unreachable.
    std::size_t min_hops = 0;
};

inline ForwardChainResult forward_chain(const std::vector<std::string>& facts, const nlohmann::json& kb_records,
                                        const ChainSpec& c)
{
    static const std::regex triple(R"(^\(([^()]+)\) (.+) \(([^()]+)\)\.$)");
    struct Edge {
        std::string head, rel, tail;
    };
    std::multimap<std::string, std::string> type_of;
    for (const auto& r : kb_records) {
        if (r.value("kind", "") == "instance") {
            type_of.emplace(r.at("constant").get<std::string>(), r.at("type").get<std::string>());
        }
    }
    auto has_type = [&](const std::string& e, const std::string& t) {
        auto [lo, hi] = type_of.equal_range(e);
        return std::any_of(lo, hi, [&](const auto& kv) { return kv.second == t; });
    };
    std::vector<Edge> edges;
    for (const auto& f : facts) {
        std::smatch m;
        if (std::regex_match(f, m, triple)) {
            edges.push_back({m[1], m[2], m[3]});
        }
    }
    ForwardChainResult r;
    std::set<std::string> frontier = {c.anchor};
    for (std::size_t i = 0; i < c.relations.size(); ++i) {
        std::set<std::string> next;
        for (const auto& e : edges) {
            if (e.rel == c.relations[i] && frontier.contains(e.head) && has_type(e.tail, c.types[i + 1])) {
                next.insert(e.tail);
            }
        }
        frontier = std::move(next);
    }
    r.answers = frontier;
    if (r.answers.size() != 1) {
        return r;
    }
    // BFS over every fact edge, whatever its relation.
    std::map<std::string, std::size_t> dist = {{c.anchor, 0}};
    std::vector<std::string> queue = {c.anchor};
    for (std::size_t qi = 0; qi < queue.size(); ++qi) {
        auto here = queue[qi];
        for (const auto& e : edges) {
            if (e.head == here && !dist.contains(e.tail)) {
                dist[e.tail] = dist[here] + 1;
                queue.push_back(e.tail);
            }
        }
    }
    if (auto it = dist.find(*r.answers.begin()); it != dist.end()) {
        r.min_hops = it->second;
    }
    return r;
}

inline SyntheticScenario gen_synthetic_chain(std::size_t hops, std::size_t distractors, std::uint32_t seed)
{
    if (hops < 1 || hops > kMaxSyntheticHops) {
        throw std::invalid_argument("hops must be in 1.." + std::to_string(kMaxSyntheticHops));
    }
    std::mt19937 rng(seed);
    SyntheticScenario s;
    s.seed = seed;
    s.hops = hops;
    s.distractors = distractors;

    // Entity names: distinct head+tail combinations.
    std::vector<std::string> names;
    for (const auto& h : detail::name_heads()) {
        for (const auto& t : detail::name_tails()) {
            names.push_back(h + t);
        }
    }
    detail::shuffle(rng, names);
    std::size_t next_name = 0;
    auto fresh = [&] {
        if (next_name >= names.size()) {
            throw std::invalid_argument("too many distractors for the name pool");
        }
        return names[next_name++];
    };

    auto& c = s.chain;
    auto types = detail::distinct(rng, detail::chain_types(), detail::chain_types().size());
    c.types.assign(types.begin(), types.begin() + static_cast<std::ptrdiff_t>(hops + 1));
    std::vector<std::string> spare_types(types.begin() + static_cast<std::ptrdiff_t>(hops + 1), types.end());
    c.relations = detail::distinct(rng, detail::chain_relations(), hops);
    for (std::size_t i = 0; i <= hops; ++i) {
        c.entities.push_back(fresh());
    }
    c.anchor = c.entities[0];

    nlohmann::json kb = nlohmann::json::array();
    auto instance = [&](const std::string& e, const std::string& t) {
        kb.push_back({{"kind", "instance"}, {"constant", e}, {"type", t}});
    };
    for (std::size_t i = 0; i <= hops; ++i) {
        instance(c.entities[i], c.types[i]);
    }

    std::vector<std::string> facts;
    for (std::size_t i = 1; i <= hops; ++i) {
        facts.push_back(chain_fact(c, i));
    }
    // Distractors go round-robin over the links, starting at a random one.
    std::size_t first_link = detail::draw(rng, hops);
    for (std::size_t k = 0; k < distractors; ++k) {
        std::size_t i = 1 + (first_link + k) % hops;
        const auto& rel = c.relations[i - 1];
        switch (k % 3) {
        case 0: {  // right head and relation, object of the wrong type
            auto w = fresh();
            instance(w, spare_types[detail::draw(rng, spare_types.size())]);
            facts.push_back("(" + c.entities[i - 1] + ") " + rel + " (" + w + ").");
            break;
        }
        case 1: {  // same relation and types from a different head
            auto z = fresh();
            auto y = fresh();
            instance(z, c.types[i - 1]);
            instance(y, c.types[i]);
            facts.push_back("(" + z + ") " + rel + " (" + y + ").");
            break;
        }
        default: {  // near-miss relation
            auto n = fresh();
            instance(n, c.types[i]);
            facts.push_back("(" + c.entities[i - 1] + ") almost " + rel + " (" + n + ").");
            break;
        }
        }
    }
    for (std::size_t k = 0; k < kSyntheticFillers; ++k) {
        const auto& mood = detail::filler_moods()[detail::draw(rng, detail::filler_moods().size())];
        const auto& place = detail::filler_places()[detail::draw(rng, detail::filler_places().size())];
        facts.push_back("(" + c.anchor + ") said the trail by the " + place + " felt " + mood + ".");
    }
    detail::shuffle(rng, facts);
    s.facts = std::move(facts);

    s.qa.id = "chain-" + std::to_string(seed);
    s.qa.question = chain_question(c);
    s.qa.reference_answer = c.entities[hops];
    s.qa.category = hops == 1 ? "single-hop" : "multi-hop";

    kb.push_back({{"kind", "rule"}, {"question", s.qa.question}, {"text", chain_rule_text(c)}});
    for (std::size_t i = hops; i >= 2; --i) {
        kb.push_back({{"kind", "refinement"},
                      {"subgoal", chain_subgoal(c, i)},
                      {"refined", chain_subgoal(c, i - 1)},
                      {"relation", "semantic"}});
    }
    s.kb_records = std::move(kb);

    // Self-checks: the chain is the unique shortest derivation, and for
    // multi-hop chains the raw question does not retrieve the last link.
    auto fc = forward_chain(s.facts, s.kb_records, c);
    if (fc.answers != std::set<std::string>{s.qa.reference_answer} || fc.min_hops != hops) {
        throw std::logic_error("synthetic chain self-check failed for seed " + std::to_string(seed));
    }
    if (hops > 1) {
        Bm25Store store;
        for (const auto& f : s.facts) {
            store.insert(f);
        }
        auto last = chain_fact(c, hops);
        for (const auto& r : store.retrieve(s.qa.question, kSyntheticCheckK)) {
            if (r.fact.text == last) {
                throw std::logic_error("raw question retrieves the last link for seed " + std::to_string(seed));
            }
        }
    }
    return s;
}

inline nlohmann::json scenario_to_json(const SyntheticScenario& s)
{
    auto turns = nlohmann::json::array();
    for (const auto& f : s.facts) {
        turns.push_back({{"speaker", ""}, {"utterance", f}, {"session", "s1"}});
    }
    nlohmann::json qa = {{"id", s.qa.id}, {"question", s.qa.question}, {"answer", s.qa.reference_answer}};
    if (s.qa.category) {
        qa["category"] = *s.qa.category;
    }
    return {{"format", "synthetic"},
            {"seed", s.seed},
            {"hops", s.hops},
            {"distractors", s.distractors},
            {"chain",
             {{"anchor", s.chain.anchor},
              {"entities", s.chain.entities},
              {"types", s.chain.types},
              {"relations", s.chain.relations}}},
            {"turns", turns},
            {"qa", nlohmann::json::array({qa})},
            {"kb", s.kb_records}};
}

/// Loads every fact of a dataset into `store`, one per turn.
inline std::size_t ingest_turns(MemoryStore& store, const std::vector<ConversationTurn>& turns)
{
    for (const auto& t : turns) {
        FactMeta meta;
        meta.session = t.session;
        meta.speaker = t.speaker;
        meta.spoken_at = t.timestamp;
        store.insert(turn_text(t), meta);
    }
    return turns.size();
}

}  // namespace goalmem
