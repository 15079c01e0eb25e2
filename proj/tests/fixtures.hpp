#pragma once
// Data files shared by the unit tests and the acceptance binary.

#include <fstream>
#include <stdexcept>
#include <string>
#include <vector>

namespace fixtures {

inline std::string data_path(const std::string& name) { return std::string(GOALMEM_TEST_DATA) + "/" + name; }

struct F1Case {
    std::string prediction;
    std::string reference;
    long num = 0;
    long den = 1;
};

/// prediction TAB reference TAB num/den, '#' comments.
inline std::vector<F1Case> load_f1_cases()
{
    std::ifstream in(data_path("token_f1_cases.tsv"));
    if (!in) {
        throw std::runtime_error("missing token_f1_cases.tsv");
    }
    std::vector<F1Case> out;
    for (std::string line; std::getline(in, line);) {
        if (line.empty() || line[0] == '#') {
            continue;
        }
        auto a = line.find('\t');
        auto b = line.find('\t', a + 1);
        auto slash = line.find('/', b + 1);
        if (a == std::string::npos || b == std::string::npos || slash == std::string::npos) {
            throw std::runtime_error("bad f1 case: " + line);
        }
        F1Case c;
        c.prediction = line.substr(0, a);
        c.reference = line.substr(a + 1, b - a - 1);
        c.num = std::stol(line.substr(b + 1, slash - b - 1));
        c.den = std::stol(line.substr(slash + 1));
        out.push_back(std::move(c));
    }
    return out;
}

}  // namespace fixtures
