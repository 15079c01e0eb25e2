#pragma once
// Hand-rolled generators for the property tests.

#include <ostream>
#include <random>
#include <string>
#include <vector>

#include "goalmem/nl_logic.hpp"

namespace gen {

using Rng = std::mt19937;

inline std::size_t below(Rng& rng, std::size_t n)
{
    return std::uniform_int_distribution<std::size_t>(0, n - 1)(rng);
}

inline bool coin(Rng& rng, double p = 0.5) { return std::bernoulli_distribution(p)(rng); }

template <class T>
const T& pick(Rng& rng, const std::vector<T>& v)
{
    return v[below(rng, v.size())];
}

inline const std::vector<std::string>& words()
{
    static const std::vector<std::string> w = {
        "likes", "ordered", "at", "visited", "with", "contains", "served in", "recommended",
        "the", "menu", "of", "last week", "is", "has name", "near", "before", "after", "talked about",
    };
    return w;
}

inline const std::vector<std::string>& constants()
{
    static const std::vector<std::string> c = {
        "Alice", "Momoco", "Kyoto Latte", "Matcha Powder", "Caroline", "Melanie's dog",
        "Cafe Lumen", "Bruno", "Oslo", "Strawberry", "counseling", "New York",
    };
    return c;
}

inline const std::vector<std::string>& types()
{
    static const std::vector<std::string> t = {
        "drink", "cafe", "human", "flavor", "ingredient", "career_field", "cafe visited last week",
        "person_or_pet_name", "city",
    };
    return t;
}

inline const std::vector<std::string>& variable_names()
{
    static const std::vector<std::string> v = {"x", "y", "z", "w", "ab", "abc"};
    return v;
}

/// Random formula built from pieces; literal runs never contain parentheses.
inline goalmem::AtomicFormula formula(Rng& rng, std::size_t max_slots = 4)
{
    std::vector<goalmem::FormulaPiece> pieces;
    auto slots = below(rng, max_slots + 1);
    if (coin(rng)) {
        pieces.emplace_back(pick(rng, words()) + " ");
    }
    for (std::size_t i = 0; i < slots; ++i) {
        auto roll = below(rng, 3);
        if (roll == 0) {
            pieces.emplace_back(goalmem::make_variable(pick(rng, variable_names()), pick(rng, types())));
        } else if (roll == 1) {
            pieces.emplace_back(goalmem::make_constant(pick(rng, constants()), pick(rng, types())));
        } else {
            pieces.emplace_back(goalmem::make_constant(pick(rng, constants())));
        }
        pieces.emplace_back(" " + pick(rng, words()) + (i + 1 == slots ? "" : " "));
    }
    if (slots == 0) {
        pieces.assign(1, pick(rng, constants()) + " " + pick(rng, words()));
    }
    if (coin(rng)) {
        pieces.emplace_back(std::string("."));
    }
    return goalmem::AtomicFormula::from_pieces(pieces);
}

inline goalmem::Substitution substitution(Rng& rng, const std::vector<std::string>& vars)
{
    goalmem::Substitution s;
    for (const auto& v : vars) {
        if (coin(rng)) {
            s.bind(v, pick(rng, constants()));
        }
    }
    return s;
}

}  // namespace gen

namespace goalmem {

inline void PrintTo(const AtomicFormula& f, std::ostream* os) { *os << '"' << render_formula(f) << '"'; }

inline void PrintTo(const Substitution& s, std::ostream* os) { *os << render_substitution(s); }

inline void PrintTo(const DecompositionRule& r, std::ostream* os) { *os << "\n" << render_rule(r) << "\n"; }

}  // namespace goalmem
