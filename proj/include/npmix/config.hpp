#pragma once
// Declarative run configuration shared by the command-line front end: every
// option is optional so defaults, config-file values and flags can be merged
// with flag-over-file-over-default precedence.

#include <npmix/core.hpp>
#include <npmix/grid.hpp>

#include <json.hpp>

#include <cstdint>
#include <fstream>
#include <optional>
#include <random>
#include <string>
#include <vector>

namespace npmix {

struct RunConfig {
    std::optional<std::string> kernel;
    std::optional<std::string> grid;         // "q1xq2[xq3]"
    std::optional<std::string> bounds_mode;  // box | hull
    std::optional<std::string> solver;       // em | fw
    std::optional<double> tol;
    std::optional<long> max_iter;
    std::optional<std::string> seed;  // integer or "auto"
    std::optional<std::string> input;
    std::optional<std::string> output;
    std::optional<bool> trace;
    std::optional<std::string> fit;   // fit-file path
    std::optional<std::string> dims;  // comma-separated coordinate list
    std::optional<long> dim;
    std::optional<long> draws;
    std::optional<long> replicates;
    std::optional<long> reps;
    std::optional<long> p;
    std::optional<long> n;
    std::optional<std::string> mixing;  // dist1 | dist2
    std::optional<long> min_at_bats;
    std::optional<std::string> train;
    std::optional<std::string> test;
    std::optional<bool> independent;
    std::optional<std::string> model;  // lm | ss
};

// Fields set in `over` win; everything else falls through to `base`.
inline RunConfig merge(RunConfig base, const RunConfig& over) {
    if (over.kernel) base.kernel = over.kernel;
    if (over.grid) base.grid = over.grid;
    if (over.bounds_mode) base.bounds_mode = over.bounds_mode;
    if (over.solver) base.solver = over.solver;
    if (over.tol) base.tol = over.tol;
    if (over.max_iter) base.max_iter = over.max_iter;
    if (over.seed) base.seed = over.seed;
    if (over.input) base.input = over.input;
    if (over.output) base.output = over.output;
    if (over.trace) base.trace = over.trace;
    if (over.fit) base.fit = over.fit;
    if (over.dims) base.dims = over.dims;
    if (over.dim) base.dim = over.dim;
    if (over.draws) base.draws = over.draws;
    if (over.replicates) base.replicates = over.replicates;
    if (over.reps) base.reps = over.reps;
    if (over.p) base.p = over.p;
    if (over.n) base.n = over.n;
    if (over.mixing) base.mixing = over.mixing;
    if (over.min_at_bats) base.min_at_bats = over.min_at_bats;
    if (over.train) base.train = over.train;
    if (over.test) base.test = over.test;
    if (over.independent) base.independent = over.independent;
    if (over.model) base.model = over.model;
    return base;
}

namespace detail {

inline std::string config_string(const nlohmann::json& v, const std::string& key) {
    if (v.is_string()) return v.get<std::string>();
    if (v.is_number_integer()) return std::to_string(v.get<long long>());
    throw SchemaError("config: key '" + key + "' must be a string");
}

inline long config_long(const nlohmann::json& v, const std::string& key) {
    if (!v.is_number_integer()) throw SchemaError("config: key '" + key + "' must be an integer");
    return v.get<long>();
}

inline bool config_bool(const nlohmann::json& v, const std::string& key) {
    if (!v.is_boolean()) throw SchemaError("config: key '" + key + "' must be a boolean");
    return v.get<bool>();
}

}  // namespace detail

inline RunConfig parse_config_json(const nlohmann::json& j) {
    if (!j.is_object()) throw SchemaError("config: top level must be an object");
    RunConfig cfg;
    for (const auto& [key, value] : j.items()) {
        if (key == "kernel") cfg.kernel = detail::config_string(value, key);
        else if (key == "grid") cfg.grid = detail::config_string(value, key);
        else if (key == "bounds_mode") cfg.bounds_mode = detail::config_string(value, key);
        else if (key == "solver") cfg.solver = detail::config_string(value, key);
        else if (key == "tol") {
            if (!value.is_number()) throw SchemaError("config: key 'tol' must be a number");
            cfg.tol = value.get<double>();
        } else if (key == "max_iter") cfg.max_iter = detail::config_long(value, key);
        else if (key == "seed") cfg.seed = detail::config_string(value, key);
        else if (key == "input") cfg.input = detail::config_string(value, key);
        else if (key == "output") cfg.output = detail::config_string(value, key);
        else if (key == "trace") cfg.trace = detail::config_bool(value, key);
        else if (key == "fit") cfg.fit = detail::config_string(value, key);
        else if (key == "dims") cfg.dims = detail::config_string(value, key);
        else if (key == "dim") cfg.dim = detail::config_long(value, key);
        else if (key == "draws") cfg.draws = detail::config_long(value, key);
        else if (key == "replicates") cfg.replicates = detail::config_long(value, key);
        else if (key == "reps") cfg.reps = detail::config_long(value, key);
        else if (key == "p") cfg.p = detail::config_long(value, key);
        else if (key == "n") cfg.n = detail::config_long(value, key);
        else if (key == "mixing") cfg.mixing = detail::config_string(value, key);
        else if (key == "min_at_bats") cfg.min_at_bats = detail::config_long(value, key);
        else if (key == "train") cfg.train = detail::config_string(value, key);
        else if (key == "test") cfg.test = detail::config_string(value, key);
        else if (key == "independent") cfg.independent = detail::config_bool(value, key);
        else if (key == "model") cfg.model = detail::config_string(value, key);
        else throw SchemaError("config: unknown key '" + key + "'");
    }
    return cfg;
}

inline RunConfig load_config_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw Error("cannot open " + path);
    nlohmann::json j;
    try {
        in >> j;
    } catch (const nlohmann::json::exception& e) {
        throw SchemaError(std::string("config: ") + e.what());
    }
    return parse_config_json(j);
}

// "30x30" -> {30, 30}; every count must be a positive integer.
inline std::vector<int> parse_grid_counts(const std::string& spec) {
    std::vector<int> counts;
    std::string::size_type start = 0;
    while (start <= spec.size()) {
        const auto pos = spec.find('x', start);
        const std::string piece =
            pos == std::string::npos ? spec.substr(start) : spec.substr(start, pos - start);
        try {
            std::size_t used = 0;
            const int q = std::stoi(piece, &used);
            if (used != piece.size() || piece.empty() || q < 1)
                throw std::invalid_argument("");
            counts.push_back(q);
        } catch (const std::exception&) {
            throw SchemaError("grid: expected counts like 30x30, got '" + spec + "'");
        }
        if (pos == std::string::npos) break;
        start = pos + 1;
    }
    return counts;
}

inline BoundsMode bounds_mode_from_name(const std::string& name) {
    if (name == "box") return BoundsMode::BoundingBox;
    if (name == "hull") return BoundsMode::ConvexHullFilter;
    throw SchemaError("bounds-mode must be box or hull, got '" + name + "'");
}

// A randomized command needs an explicit seed: either an integer or the
// literal "auto" to draw one from the system.
inline std::uint64_t resolve_seed(const std::optional<std::string>& seed, const char* what) {
    if (!seed)
        throw SchemaError(std::string(what) + ": need --seed <integer> or --seed auto");
    if (*seed == "auto") {
        std::random_device rd;
        return (static_cast<std::uint64_t>(rd()) << 32) ^ rd();
    }
    try {
        std::size_t used = 0;
        const unsigned long long v = std::stoull(*seed, &used);
        if (used != seed->size() || seed->empty() || seed->front() == '-')
            throw std::invalid_argument("");
        return static_cast<std::uint64_t>(v);
    } catch (const std::exception&) {
        throw SchemaError("seed must be a nonnegative integer or 'auto', got '" + *seed + "'");
    }
}

inline std::vector<std::size_t> parse_dim_list(const std::string& dims, std::size_t grid_dim) {
    std::vector<std::size_t> out;
    std::string::size_type start = 0;
    while (start <= dims.size()) {
        const auto pos = dims.find(',', start);
        const std::string piece =
            pos == std::string::npos ? dims.substr(start) : dims.substr(start, pos - start);
        try {
            std::size_t used = 0;
            const long d = std::stol(piece, &used);
            if (used != piece.size() || piece.empty() || d < 0 ||
                static_cast<std::size_t>(d) >= grid_dim)
                throw std::invalid_argument("");
            out.push_back(static_cast<std::size_t>(d));
        } catch (const std::exception&) {
            throw SchemaError("dims: expected coordinates below " + std::to_string(grid_dim) +
                              ", got '" + dims + "'");
        }
        if (pos == std::string::npos) break;
        start = pos + 1;
    }
    return out;
}

}  // namespace npmix
