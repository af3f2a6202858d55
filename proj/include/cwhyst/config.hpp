#pragma once

#include <algorithm>
#include <cctype>
#include <cstdint>
#include <fstream>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include "cwhyst/errors.hpp"
#include "cwhyst/io.hpp"

namespace cwhyst {

// Experiment configuration: one file = one experiment. The file format is a
// flat key = value tree (a TOML subset: numbers, booleans, quoted strings and
// arrays of numbers; '#' comments). The canonicalized content is hashed and
// the digest embedded in every output for provenance.

struct ExperimentConfig {
    double beta = 2.0;
    std::vector<long long> N_list = {1000, 10000};
    double kappa = 2.0 / 3.0;
    std::vector<double> kappa_grid = {0.5, 2.0 / 3.0, 0.9};
    double T = 5.0;
    double epsilon_start = 0.2;
    double epsilon_boundary = 1.2;
    double epsilon_class = 0.2;
    double dt_max = 1e-3;
    long long replicas = 1000;
    std::uint64_t seed = 20270714;
    double gamma = 0.1;
    double gamma_prime = 0.25;
    double eta = 0.3;
    int periods = 2;
    std::uint64_t proposal_budget = 1ull << 34;
    int threads = 0;  // 0 = hardware concurrency
    std::string out_dir = "out";
    std::string format = "json";

    void validate() const {
        if (!(beta > 1.0)) throw ConfigError("config: beta must be > 1");
        if (N_list.empty()) throw ConfigError("config: N list must not be empty");
        for (long long n : N_list)
            if (n < 2) throw ConfigError("config: every N must be >= 2");
        if (!(kappa > 0.0)) throw ConfigError("config: kappa must be > 0");
        for (double k : kappa_grid)
            if (!(k > 0.0)) throw ConfigError("config: kappa grid entries must be > 0");
        if (!(T > 0.0)) throw ConfigError("config: T must be > 0");
        if (!(gamma > 0.0)) throw ConfigError("config: gamma must be > 0");
        if (!(gamma_prime > gamma)) throw ConfigError("config: gamma_prime must exceed gamma");
        if (!(eta > 0.0 && eta < 1.5707963267948966))
            throw ConfigError("config: eta must lie in (0, pi/2)");
        if (replicas < 1) throw ConfigError("config: replicas must be >= 1");
        if (!(epsilon_start > 0.0 && epsilon_boundary > 0.0 && epsilon_class > 0.0))
            throw ConfigError("config: epsilons must be > 0");
        if (!(dt_max > 0.0)) throw ConfigError("config: dt_max must be > 0");
        if (periods < 1) throw ConfigError("config: periods must be >= 1");
        if (threads < 0) throw ConfigError("config: threads must be >= 0");
        if (format != "json" && format != "csv")
            throw ConfigError("config: format must be json or csv");
    }

    std::string canonical_string() const {
        std::ostringstream os;
        os.precision(17);
        os << "beta=" << beta << "\n";
        os << "dt_max=" << dt_max << "\n";
        os << "epsilon_boundary=" << epsilon_boundary << "\n";
        os << "epsilon_class=" << epsilon_class << "\n";
        os << "epsilon_start=" << epsilon_start << "\n";
        os << "eta=" << eta << "\n";
        os << "format=" << format << "\n";
        os << "gamma=" << gamma << "\n";
        os << "gamma_prime=" << gamma_prime << "\n";
        os << "kappa=" << kappa << "\n";
        os << "kappa_grid=";
        for (std::size_t i = 0; i < kappa_grid.size(); ++i) os << (i ? "," : "") << kappa_grid[i];
        os << "\n";
        os << "N=";
        for (std::size_t i = 0; i < N_list.size(); ++i) os << (i ? "," : "") << N_list[i];
        os << "\n";
        os << "out=" << out_dir << "\n";
        os << "periods=" << periods << "\n";
        os << "proposal_budget=" << proposal_budget << "\n";
        os << "replicas=" << replicas << "\n";
        os << "seed=" << seed << "\n";
        os << "T=" << T << "\n";
        os << "threads=" << threads << "\n";
        return os.str();
    }

    std::uint64_t hash() const { return io::fnv1a64(canonical_string()); }
    std::string hash_hex() const { return io::hex64(hash()); }
};

namespace detail_cfg {

inline std::string trim(const std::string& s) {
    std::size_t a = 0, b = s.size();
    while (a < b && std::isspace(static_cast<unsigned char>(s[a]))) ++a;
    while (b > a && std::isspace(static_cast<unsigned char>(s[b - 1]))) --b;
    return s.substr(a, b - a);
}

inline std::string strip_comment(const std::string& s) {
    bool in_str = false;
    for (std::size_t i = 0; i < s.size(); ++i) {
        if (s[i] == '"') in_str = !in_str;
        if (s[i] == '#' && !in_str) return s.substr(0, i);
    }
    return s;
}

inline double parse_number(const std::string& tok, const std::string& key) {
    std::size_t pos = 0;
    double v;
    try {
        v = std::stod(tok, &pos);
    } catch (...) {
        throw ConfigError("config: invalid number for key '" + key + "': " + tok);
    }
    if (pos != tok.size())
        throw ConfigError("config: trailing characters in number for key '" + key + "': " + tok);
    return v;
}

inline std::vector<double> parse_array(const std::string& tok, const std::string& key) {
    if (tok.size() < 2 || tok.front() != '[' || tok.back() != ']')
        throw ConfigError("config: invalid array for key '" + key + "'");
    std::vector<double> out;
    std::string inner = tok.substr(1, tok.size() - 2);
    std::stringstream ss(inner);
    std::string item;
    while (std::getline(ss, item, ',')) {
        item = trim(item);
        if (item.empty()) continue;
        out.push_back(parse_number(item, key));
    }
    return out;
}

}  // namespace detail_cfg

inline ExperimentConfig parse_config(const std::string& text) {
    using namespace detail_cfg;
    ExperimentConfig cfg;
    std::istringstream in(text);
    std::string raw;
    int lineno = 0;
    while (std::getline(in, raw)) {
        ++lineno;
        const std::string line = trim(strip_comment(raw));
        if (line.empty()) continue;
        if (line.front() == '[')
            throw ConfigError("config: sections are not supported (line " +
                              std::to_string(lineno) + ")");
        const std::size_t eq = line.find('=');
        if (eq == std::string::npos)
            throw ConfigError("config: expected key = value (line " + std::to_string(lineno) + ")");
        const std::string key = trim(line.substr(0, eq));
        std::string val = trim(line.substr(eq + 1));
        if (val.empty()) throw ConfigError("config: empty value for key '" + key + "'");

        auto as_string = [&]() {
            if (val.size() >= 2 && val.front() == '"' && val.back() == '"')
                return val.substr(1, val.size() - 2);
            return val;
        };

        if (key == "beta") cfg.beta = parse_number(val, key);
        else if (key == "T") cfg.T = parse_number(val, key);
        else if (key == "kappa") cfg.kappa = parse_number(val, key);
        else if (key == "epsilon_start") cfg.epsilon_start = parse_number(val, key);
        else if (key == "epsilon_boundary") cfg.epsilon_boundary = parse_number(val, key);
        else if (key == "epsilon_class") cfg.epsilon_class = parse_number(val, key);
        else if (key == "dt_max") cfg.dt_max = parse_number(val, key);
        else if (key == "gamma") cfg.gamma = parse_number(val, key);
        else if (key == "gamma_prime") cfg.gamma_prime = parse_number(val, key);
        else if (key == "eta") cfg.eta = parse_number(val, key);
        else if (key == "replicas") cfg.replicas = static_cast<long long>(parse_number(val, key));
        else if (key == "seed") cfg.seed = static_cast<std::uint64_t>(parse_number(val, key));
        else if (key == "periods") cfg.periods = static_cast<int>(parse_number(val, key));
        else if (key == "threads") cfg.threads = static_cast<int>(parse_number(val, key));
        else if (key == "proposal_budget")
            cfg.proposal_budget = static_cast<std::uint64_t>(parse_number(val, key));
        else if (key == "out") cfg.out_dir = as_string();
        else if (key == "format") cfg.format = as_string();
        else if (key == "N") {
            cfg.N_list.clear();
            if (!val.empty() && val.front() == '[') {
                for (double v : parse_array(val, key)) cfg.N_list.push_back(static_cast<long long>(v));
            } else {
                cfg.N_list.push_back(static_cast<long long>(parse_number(val, key)));
            }
        } else if (key == "kappa_grid") {
            cfg.kappa_grid = parse_array(val, key);
        } else {
            throw ConfigError("config: unknown key '" + key + "' (line " + std::to_string(lineno) +
                              ")");
        }
    }
    cfg.validate();
    return cfg;
}

inline ExperimentConfig load_config(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("config: cannot open file " + path);
    std::ostringstream ss;
    ss << in.rdbuf();
    return parse_config(ss.str());
}

}  // namespace cwhyst
