#pragma once

#include <fstream>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include "narmsr/errors.hpp"
#include "narmsr/solver.hpp"

namespace narmsr {

// Flat key=value solver configuration. '#' starts a comment; blank lines are
// ignored. Step sizes accept "auto" (resolved from the power-iteration bound)
// or a positive number. Every key is also exposed as a CLI flag.

namespace detail {

inline std::string trim(const std::string& s) {
    const auto b = s.find_first_not_of(" \t\r\n");
    if (b == std::string::npos) return "";
    const auto e = s.find_last_not_of(" \t\r\n");
    return s.substr(b, e - b + 1);
}

inline double parse_double(const std::string& key, const std::string& value) {
    std::size_t pos = 0;
    double v = 0.0;
    try {
        v = std::stod(value, &pos);
    } catch (const std::exception&) {
        throw config_error("config: key '" + key + "' expects a number, got '" + value + "'");
    }
    if (pos != value.size())
        throw config_error("config: key '" + key + "' expects a number, got '" + value + "'");
    return v;
}

inline int parse_int(const std::string& key, const std::string& value) {
    const double v = parse_double(key, value);
    const int i = static_cast<int>(v);
    if (static_cast<double>(i) != v)
        throw config_error("config: key '" + key + "' expects an integer, got '" + value + "'");
    return i;
}

inline bool parse_bool(const std::string& key, const std::string& value) {
    if (value == "true" || value == "1") return true;
    if (value == "false" || value == "0") return false;
    throw config_error("config: key '" + key + "' expects true/false, got '" + value + "'");
}

}  // namespace detail

/// Apply one key=value setting. Unknown keys raise config_error.
inline void set_config_key(SolverConfig& cfg, const std::string& key, const std::string& value) {
    using detail::parse_bool;
    using detail::parse_double;
    using detail::parse_int;
    if (key == "mode") {
        if (value == "mog") cfg.mode = SolverMode::kMoG;
        else if (value == "dpdnn") cfg.mode = SolverMode::kDpdnn;
        else throw config_error("config: mode must be 'mog' or 'dpdnn', got '" + value + "'");
    } else if (key == "mu") cfg.mu = parse_double(key, value);
    else if (key == "gamma_narm") cfg.gamma_narm = parse_double(key, value);
    else if (key == "eta") cfg.eta = parse_double(key, value);
    else if (key == "delta") {
        if (value == "auto") cfg.delta.reset();
        else cfg.delta = parse_double(key, value);
    } else if (key == "delta_prime") {
        if (value == "auto") cfg.delta_prime.reset();
        else cfg.delta_prime = parse_double(key, value);
    } else if (key == "step_safety") cfg.step_safety = parse_double(key, value);
    else if (key == "power_iters") cfg.power_iters = parse_int(key, value);
    else if (key == "stages") cfg.stages = parse_int(key, value);
    else if (key == "inner_x_steps") cfg.inner_x_steps = parse_int(key, value);
    else if (key == "inner_e_steps") cfg.inner_e_steps = parse_int(key, value);
    else if (key == "denoiser") cfg.denoiser.kind = denoiser_kind_from_string(value);
    else if (key == "strength") cfg.denoiser.strength = parse_double(key, value);
    else if (key == "strength_decay") cfg.strength_decay = parse_double(key, value);
    else if (key == "narm_patch_size") cfg.narm.patch_size = parse_int(key, value);
    else if (key == "narm_neighbors") cfg.narm.neighbors = parse_int(key, value);
    else if (key == "narm_search_window") cfg.narm.search_window = parse_int(key, value);
    else if (key == "narm_gamma_reg") cfg.narm.gamma_reg = parse_double(key, value);
    else if (key == "narm_q") cfg.narm.q = parse_int(key, value);
    else if (key == "narm_backend") {
        if (value == "closed_form") cfg.narm_backend = NarmBackend::kClosedForm;
        else if (value == "attention") cfg.narm_backend = NarmBackend::kAttention;
        else throw config_error("config: narm_backend must be 'closed_form' or 'attention'");
    } else if (key == "narm_weights_file") {
        if (!value.empty()) cfg.embedding = load_embedding_weights(value);
    } else if (key == "mu_residual_minus_e") cfg.mu_residual_minus_e = parse_bool(key, value);
    else throw config_error("config: unknown key '" + key + "'");
}

/// Parse a config file into `cfg`. Collects every offending key before
/// failing so the error message lists them all.
inline void load_solver_config(const std::string& path, SolverConfig& cfg) {
    std::ifstream f(path);
    if (!f) throw io_error("config: cannot open " + path);
    std::string line;
    std::vector<std::string> problems;
    int line_no = 0;
    while (std::getline(f, line)) {
        ++line_no;
        const auto hash = line.find('#');
        if (hash != std::string::npos) line = line.substr(0, hash);
        line = detail::trim(line);
        if (line.empty()) continue;
        const auto eq = line.find('=');
        if (eq == std::string::npos) {
            problems.push_back("line " + std::to_string(line_no) + ": expected key=value");
            continue;
        }
        const std::string key = detail::trim(line.substr(0, eq));
        const std::string value = detail::trim(line.substr(eq + 1));
        try {
            set_config_key(cfg, key, value);
        } catch (const std::exception& ex) {
            problems.push_back("line " + std::to_string(line_no) + ": " + ex.what());
        }
    }
    if (!problems.empty()) {
        std::string msg = "config: " + path + " has errors:";
        for (const auto& p : problems) msg += "\n  " + p;
        throw config_error(msg);
    }
}

/// Snapshot of every setting as ordered key/value pairs (for manifests).
inline std::vector<std::pair<std::string, std::string>> config_items(const SolverConfig& cfg) {
    auto num = [](double v) {
        std::ostringstream os;
        os.precision(17);
        os << v;
        return os.str();
    };
    std::vector<std::pair<std::string, std::string>> items;
    items.emplace_back("mode", cfg.mode == SolverMode::kMoG ? "mog" : "dpdnn");
    items.emplace_back("mu", num(cfg.mu));
    items.emplace_back("gamma_narm", num(cfg.gamma_narm));
    items.emplace_back("eta", num(cfg.eta));
    items.emplace_back("delta", cfg.delta ? num(*cfg.delta) : "auto");
    items.emplace_back("delta_prime", cfg.delta_prime ? num(*cfg.delta_prime) : "auto");
    items.emplace_back("step_safety", num(cfg.step_safety));
    items.emplace_back("power_iters", std::to_string(cfg.power_iters));
    items.emplace_back("stages", std::to_string(cfg.stages));
    items.emplace_back("inner_x_steps", std::to_string(cfg.inner_x_steps));
    items.emplace_back("inner_e_steps", std::to_string(cfg.inner_e_steps));
    items.emplace_back("denoiser", to_string(cfg.denoiser.kind));
    items.emplace_back("strength", num(cfg.denoiser.strength));
    items.emplace_back("strength_decay", num(cfg.strength_decay));
    items.emplace_back("narm_patch_size", std::to_string(cfg.narm.patch_size));
    items.emplace_back("narm_neighbors", std::to_string(cfg.narm.neighbors));
    items.emplace_back("narm_search_window", std::to_string(cfg.narm.search_window));
    items.emplace_back("narm_gamma_reg", num(cfg.narm.gamma_reg));
    items.emplace_back("narm_q", std::to_string(cfg.narm.q));
    items.emplace_back("narm_backend",
                       cfg.narm_backend == NarmBackend::kClosedForm ? "closed_form" : "attention");
    items.emplace_back("mu_residual_minus_e", cfg.mu_residual_minus_e ? "true" : "false");
    return items;
}

}  // namespace narmsr
