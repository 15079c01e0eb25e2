#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <fstream>
#include <functional>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <set>
#include <shared_mutex>
#include <stdexcept>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "json.hpp"

#include "goalmem/text.hpp"

namespace goalmem {

struct FactMeta {
    std::string session;
    std::string speaker;
    std::optional<std::string> event_time;  // ISO-8601
    std::optional<std::string> spoken_at;

    bool operator==(const FactMeta&) const = default;
};

struct MemoryFact {
    std::string id;
    std::string text;
    FactMeta meta;

    bool operator==(const MemoryFact&) const = default;
};

struct ScoredFact {
    MemoryFact fact;
    double score = 0.0;
};

class MemoryError : public std::runtime_error {
public:
    enum class Kind { EmptyText, DuplicateId, DimensionMismatch, ZeroNormVector, Io, Parse };

    MemoryError(Kind kind, const std::string& what) : std::runtime_error(what), kind_(kind) {}
    Kind kind() const { return kind_; }

private:
    Kind kind_;
};

/// Backbone interface. Reads may run concurrently; inserts are serialized.
class MemoryStore {
public:
    virtual ~MemoryStore() = default;

    /// Stores `text` under a fresh id and returns the id.
    virtual std::string insert(std::string text, FactMeta meta = {}) = 0;
    /// Stores a fact that already carries an id (used when loading).
    virtual void insert_fact(MemoryFact fact) = 0;
    /// At most k facts, descending score, ties in insertion order.
    virtual std::vector<ScoredFact> retrieve(std::string_view query, std::size_t k) const = 0;
    virtual std::size_t size() const = 0;
    /// All facts in insertion order.
    virtual std::vector<MemoryFact> snapshot() const = 0;
    virtual std::optional<MemoryFact> find(const std::string& id) const = 0;
};

inline std::string insert_fact(MemoryStore& store, std::string text, FactMeta meta = {})
{
    return store.insert(std::move(text), std::move(meta));
}

// ---------------------------------------------------------------------------
// BM25

inline constexpr double kBm25K1 = 1.2;
inline constexpr double kBm25B = 0.75;

struct CorpusStats {
    std::size_t doc_count = 0;
    double avg_length = 0.0;
    std::function<std::size_t(const std::string&)> doc_freq;
};

/// Okapi IDF floored at zero.
inline double bm25_idf(std::size_t doc_count, std::size_t df)
{
    auto n = static_cast<double>(doc_count);
    auto d = static_cast<double>(df);
    return std::max(0.0, std::log((n - d + 0.5) / (d + 0.5)));
}

inline double bm25_tf(double tf, double doc_length, double avg_length)
{
    double norm = avg_length > 0.0 ? doc_length / avg_length : 1.0;
    return tf * (kBm25K1 + 1.0) / (tf + kBm25K1 * (1.0 - kBm25B + kBm25B * norm));
}

/// Sums over distinct query terms present in the fact.
inline double bm25_score(const std::vector<std::string>& query_terms,
                         const std::vector<std::string>& fact_terms, const CorpusStats& stats)
{
    std::unordered_map<std::string, std::size_t> tf;
    for (const auto& t : fact_terms) {
        ++tf[t];
    }
    std::set<std::string> distinct(query_terms.begin(), query_terms.end());
    double score = 0.0;
    for (const auto& q : distinct) {
        auto it = tf.find(q);
        if (it == tf.end()) {
            continue;
        }
        score += bm25_idf(stats.doc_count, stats.doc_freq(q))
                 * bm25_tf(static_cast<double>(it->second), static_cast<double>(fact_terms.size()),
                           stats.avg_length);
    }
    return score;
}

namespace detail {

/// Shared storage and locking for the flat stores.
class FlatStore : public MemoryStore {
public:
    std::string insert(std::string text, FactMeta meta = {}) override
    {
        std::unique_lock lock(mutex_);
        std::string id;
        do {
            id = next_id();
        } while (index_.contains(id));
        add_locked({id, std::move(text), std::move(meta)});
        return id;
    }

    void insert_fact(MemoryFact fact) override
    {
        std::unique_lock lock(mutex_);
        if (fact.id.empty() || index_.contains(fact.id)) {
            throw MemoryError(MemoryError::Kind::DuplicateId, "duplicate or empty id: " + fact.id);
        }
        add_locked(std::move(fact));
    }

    std::size_t size() const override
    {
        std::shared_lock lock(mutex_);
        return facts_.size();
    }

    std::vector<MemoryFact> snapshot() const override
    {
        std::shared_lock lock(mutex_);
        return facts_;
    }

    std::optional<MemoryFact> find(const std::string& id) const override
    {
        std::shared_lock lock(mutex_);
        auto it = index_.find(id);
        if (it == index_.end()) {
            return std::nullopt;
        }
        return facts_[it->second];
    }

protected:
    virtual void index_locked(const MemoryFact& fact) = 0;

    /// Stable ranking of (doc, score) pairs; keeps at most k.
    std::vector<ScoredFact> top_k_locked(std::vector<std::pair<std::size_t, double>> scored,
                                         std::size_t k) const
    {
        std::stable_sort(scored.begin(), scored.end(), [](const auto& a, const auto& b) {
            if (a.second != b.second) {
                return a.second > b.second;
            }
            return a.first < b.first;
        });
        if (scored.size() > k) {
            scored.resize(k);
        }
        std::vector<ScoredFact> out;
        out.reserve(scored.size());
        for (const auto& [doc, score] : scored) {
            out.push_back({facts_[doc], score});
        }
        return out;
    }

    mutable std::shared_mutex mutex_;
    std::vector<MemoryFact> facts_;

private:
    std::string next_id()
    {
        auto n = std::to_string(++counter_);
        return "m" + std::string(n.size() < 6 ? 6 - n.size() : 0, '0') + n;
    }

    void add_locked(MemoryFact fact)
    {
        if (text::trim_view(fact.text).empty()) {
            throw MemoryError(MemoryError::Kind::EmptyText, "fact text is empty");
        }
        index_.emplace(fact.id, facts_.size());
        facts_.push_back(std::move(fact));
        index_locked(facts_.back());
    }

    std::unordered_map<std::string, std::size_t> index_;
    std::uint64_t counter_ = 0;
};

}  // namespace detail

/// Okapi BM25 over an inverted index. Facts sharing no term with the query
/// are never returned; facts that match only zero-IDF terms are, with score 0.
class Bm25Store final : public detail::FlatStore {
public:
    std::vector<ScoredFact> retrieve(std::string_view query, std::size_t k) const override
    {
        std::shared_lock lock(mutex_);
        auto terms = text::tokenize(query);
        std::set<std::string> distinct(terms.begin(), terms.end());
        std::unordered_map<std::size_t, double> acc;
        double avg = facts_.empty() ? 0.0 : static_cast<double>(total_length_) / facts_.size();
        for (const auto& term : distinct) {
            auto it = postings_.find(term);
            if (it == postings_.end()) {
                continue;
            }
            double idf = bm25_idf(facts_.size(), it->second.size());
            for (const auto& [doc, tf] : it->second) {
                acc[doc] += idf
                            * bm25_tf(static_cast<double>(tf), static_cast<double>(lengths_[doc]), avg);
            }
        }
        return top_k_locked({acc.begin(), acc.end()}, k);
    }

    /// Corpus statistics at the current state (for diagnostics and tests).
    CorpusStats stats() const
    {
        std::shared_lock lock(mutex_);
        CorpusStats s;
        s.doc_count = facts_.size();
        s.avg_length = facts_.empty() ? 0.0 : static_cast<double>(total_length_) / facts_.size();
        std::unordered_map<std::string, std::size_t> df;
        for (const auto& [term, posting] : postings_) {
            df[term] = posting.size();
        }
        s.doc_freq = [df = std::move(df)](const std::string& t) {
            auto it = df.find(t);
            return it == df.end() ? std::size_t{0} : it->second;
        };
        return s;
    }

private:
    void index_locked(const MemoryFact& fact) override
    {
        auto terms = text::tokenize(fact.text);
        std::map<std::string, std::size_t> tf;
        for (const auto& t : terms) {
            ++tf[t];
        }
        auto doc = facts_.size() - 1;
        for (const auto& [term, count] : tf) {
            postings_[term].emplace_back(doc, count);
        }
        lengths_.push_back(terms.size());
        total_length_ += terms.size();
    }

    std::unordered_map<std::string, std::vector<std::pair<std::size_t, std::size_t>>> postings_;
    std::vector<std::size_t> lengths_;
    std::size_t total_length_ = 0;
};

// ---------------------------------------------------------------------------
// Dense retrieval

class Embedder {
public:
    virtual ~Embedder() = default;
    virtual std::vector<double> embed(std::string_view text) const = 0;
    virtual std::size_t dimension() const = 0;
};

inline std::uint64_t fnv1a64(std::string_view s, std::uint64_t seed = 0)
{
    std::uint64_t h = 1469598103934665603ULL ^ seed;
    for (unsigned char c : s) {
        h ^= c;
        h *= 1099511628211ULL;
    }
    return h;
}

/// Feature hashing of unigrams and adjacent-token bigrams. Counts are
/// unsigned so that distinct features never cancel.
class HashingEmbedder final : public Embedder {
public:
    explicit HashingEmbedder(std::size_t dims = 256, std::uint64_t seed = 0x5eed0f00dULL)
        : dims_(dims), seed_(seed)
    {
        if (dims_ == 0) {
            throw std::invalid_argument("embedding dimension must be positive");
        }
    }

    std::vector<double> embed(std::string_view text) const override
    {
        std::vector<double> v(dims_, 0.0);
        auto tokens = text::tokenize(text);
        for (std::size_t i = 0; i < tokens.size(); ++i) {
            v[fnv1a64(tokens[i], seed_) % dims_] += 1.0;
            if (i + 1 < tokens.size()) {
                v[fnv1a64(tokens[i] + '\x1f' + tokens[i + 1], seed_) % dims_] += 1.0;
            }
        }
        return v;
    }

    std::size_t dimension() const override { return dims_; }

private:
    std::size_t dims_;
    std::uint64_t seed_;
};

inline double l2_norm(const std::vector<double>& v)
{
    double s = 0.0;
    for (double x : v) {
        s += x * x;
    }
    return std::sqrt(s);
}

struct RankedIndex {
    std::size_t index = 0;
    double similarity = 0.0;
};

/// Descending cosine similarity, ties by position in `vectors`.
inline std::vector<RankedIndex> cosine_rank(const std::vector<double>& query,
                                            const std::vector<std::vector<double>>& vectors,
                                            std::size_t k)
{
    double qn = l2_norm(query);
    if (qn == 0.0) {
        throw MemoryError(MemoryError::Kind::ZeroNormVector, "query vector has zero norm");
    }
    std::vector<RankedIndex> out;
    out.reserve(vectors.size());
    for (std::size_t i = 0; i < vectors.size(); ++i) {
        const auto& v = vectors[i];
        if (v.size() != query.size()) {
            throw MemoryError(MemoryError::Kind::DimensionMismatch,
                              "vector " + std::to_string(i) + " has dimension "
                                  + std::to_string(v.size()) + ", expected "
                                  + std::to_string(query.size()));
        }
        double vn = l2_norm(v);
        if (vn == 0.0) {
            throw MemoryError(MemoryError::Kind::ZeroNormVector,
                              "vector " + std::to_string(i) + " has zero norm");
        }
        double dot = 0.0;
        for (std::size_t j = 0; j < v.size(); ++j) {
            dot += v[j] * query[j];
        }
        out.push_back({i, dot / (qn * vn)});
    }
    std::stable_sort(out.begin(), out.end(),
                     [](const auto& a, const auto& b) { return a.similarity > b.similarity; });
    if (out.size() > k) {
        out.resize(k);
    }
    return out;
}

/// Cosine ranking over injected embeddings. Texts that embed to the zero
/// vector are stored but never ranked; a zero query returns nothing.
class DenseStore final : public detail::FlatStore {
public:
    explicit DenseStore(std::shared_ptr<const Embedder> embedder = std::make_shared<HashingEmbedder>())
        : embedder_(std::move(embedder))
    {
    }

    std::vector<ScoredFact> retrieve(std::string_view query, std::size_t k) const override
    {
        auto q = embedder_->embed(query);
        if (l2_norm(q) == 0.0) {
            return {};
        }
        std::shared_lock lock(mutex_);
        auto ranked = cosine_rank(q, vectors_, k);
        std::vector<std::pair<std::size_t, double>> scored;
        for (const auto& r : ranked) {
            scored.emplace_back(doc_of_[r.index], r.similarity);
        }
        return top_k_locked(std::move(scored), k);
    }

private:
    void index_locked(const MemoryFact& fact) override
    {
        auto v = embedder_->embed(fact.text);
        if (v.size() != embedder_->dimension()) {
            throw MemoryError(MemoryError::Kind::DimensionMismatch, "embedder returned wrong size");
        }
        if (l2_norm(v) == 0.0) {
            return;
        }
        vectors_.push_back(std::move(v));
        doc_of_.push_back(facts_.size() - 1);
    }

    std::shared_ptr<const Embedder> embedder_;
    std::vector<std::vector<double>> vectors_;
    std::vector<std::size_t> doc_of_;
};

// ---------------------------------------------------------------------------
// Budget

inline constexpr std::size_t kDefaultRetrievalCap = 60;

/// Per-question cap on unique facts exposed downstream.
struct RetrievalBudget {
    std::size_t cap = kDefaultRetrievalCap;
    std::set<std::string> seen_ids;
    std::size_t spent = 0;

    bool exhausted() const { return spent >= cap; }
    std::size_t remaining() const { return cap > spent ? cap - spent : 0; }
};

/// Admits unseen ids in rank order until the cap is reached.
inline std::vector<MemoryFact> budgeted_merge(RetrievalBudget& budget,
                                              const std::vector<ScoredFact>& results)
{
    std::vector<MemoryFact> admitted;
    for (const auto& r : results) {
        if (budget.exhausted()) {
            break;
        }
        if (!budget.seen_ids.insert(r.fact.id).second) {
            continue;
        }
        ++budget.spent;
        admitted.push_back(r.fact);
    }
    return admitted;
}

// ---------------------------------------------------------------------------
// Persistence

inline nlohmann::json fact_to_json(const MemoryFact& f)
{
    nlohmann::json j = {{"id", f.id}, {"text", f.text}};
    if (!f.meta.session.empty()) {
        j["session"] = f.meta.session;
    }
    if (!f.meta.speaker.empty()) {
        j["speaker"] = f.meta.speaker;
    }
    if (f.meta.event_time) {
        j["event_time"] = *f.meta.event_time;
    }
    if (f.meta.spoken_at) {
        j["spoken_at"] = *f.meta.spoken_at;
    }
    return j;
}

inline MemoryFact fact_from_json(const nlohmann::json& j)
{
    MemoryFact f;
    f.id = j.at("id").get<std::string>();
    f.text = j.at("text").get<std::string>();
    f.meta.session = j.value("session", "");
    f.meta.speaker = j.value("speaker", "");
    if (j.contains("event_time")) {
        f.meta.event_time = j["event_time"].get<std::string>();
    }
    if (j.contains("spoken_at")) {
        f.meta.spoken_at = j["spoken_at"].get<std::string>();
    }
    return f;
}

inline void save_jsonl(const MemoryStore& store, const std::string& path)
{
    std::ofstream out(path, std::ios::trunc);
    if (!out) {
        throw MemoryError(MemoryError::Kind::Io, "cannot write " + path);
    }
    for (const auto& f : store.snapshot()) {
        out << fact_to_json(f).dump() << '\n';
    }
}

/// Appends every record of `path` to `store`. Blank lines are skipped.
inline std::size_t load_jsonl(MemoryStore& store, const std::string& path)
{
    std::ifstream in(path);
    if (!in) {
        throw MemoryError(MemoryError::Kind::Io, "cannot read " + path);
    }
    std::size_t count = 0;
    std::size_t line_no = 0;
    for (std::string line; std::getline(in, line);) {
        ++line_no;
        if (text::trim_view(line).empty()) {
            continue;
        }
        try {
            store.insert_fact(fact_from_json(nlohmann::json::parse(line)));
        } catch (const nlohmann::json::exception& e) {
            throw MemoryError(MemoryError::Kind::Parse,
                              path + ":" + std::to_string(line_no) + ": " + e.what());
        }
        ++count;
    }
    return count;
}

enum class StoreKind { bm25, dense };

inline std::unique_ptr<MemoryStore> make_store(StoreKind kind)
{
    if (kind == StoreKind::dense) {
        return std::make_unique<DenseStore>();
    }
    return std::make_unique<Bm25Store>();
}

}  // namespace goalmem
