#pragma once

#include "spawncphd/errors.hpp"
#include "spawncphd/filter.hpp"
#include "spawncphd/gaussian.hpp"
#include "spawncphd/sim.hpp"
#include "spawncphd/spawning.hpp"

#include <boost/property_tree/ini_parser.hpp>
#include <boost/property_tree/ptree.hpp>

#include <algorithm>
#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <cmath>
#include <map>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <vector>

namespace spawncphd {

enum class ModelKind { Bernoulli, Poisson, Zip, Birth };

inline std::string to_string(ModelKind kind) {
    switch (kind) {
        case ModelKind::Bernoulli: return "bernoulli";
        case ModelKind::Poisson: return "poisson";
        case ModelKind::Zip: return "zip";
        case ModelKind::Birth: return "birth";
    }
    return "?";
}

inline ModelKind parse_model(const std::string& name) {
    if (name == "bernoulli") return ModelKind::Bernoulli;
    if (name == "poisson") return ModelKind::Poisson;
    if (name == "zip") return ModelKind::Zip;
    if (name == "birth") return ModelKind::Birth;
    throw ConfigError("unknown model '" + name + "' (expected bernoulli, poisson, zip or birth)");
}

/// How a filter's initial state is built.
enum class InitialState { Empty, Truth };

struct SpawnSettings {
    double p_b = 0.0;
    double lambda_b = 0.0;
    double sigma_pos = 12.0;
    double sigma_vel = 12.0;
};

struct BirthSettings {
    double rate = 0.025;
    /// Defaults to the centre of the field of view with zero velocity.
    std::optional<StateVector> mean;
    double sigma_pos = 400.0;
    double sigma_vel = 15.0;
};

struct FilterSettings {
    ReductionParams reduction;
    std::size_t n_max = 20;
    double init_sigma_pos = 50.0;
    double init_sigma_vel = 10.0;
    InitialState initialize_spawn = InitialState::Truth;
    InitialState initialize_birth = InitialState::Empty;
};

struct MetricSettings {
    double cutoff_pos = 100.0;
    double cutoff_vel = 100.0;
};

struct ExperimentConfig {
    ScenarioConfig scenario = ScenarioConfig::defaults();
    SpawnSettings bernoulli{0.01, 0.0};
    SpawnSettings poisson{0.0, 0.025};
    SpawnSettings zip{0.01, 2.5};
    BirthSettings birth;
    FilterSettings filter;
    MetricSettings metrics;
    std::vector<ModelKind> models{ModelKind::Bernoulli, ModelKind::Poisson, ModelKind::Zip, ModelKind::Birth};
    std::size_t runs = 500;
    std::uint64_t seed = 1;
    std::string out_dir = "results";
    unsigned jobs = 0;  ///< 0 = hardware concurrency

    [[nodiscard]] SpawnModel spawn_model(ModelKind kind) const {
        switch (kind) {
            case ModelKind::Bernoulli:
                return {BernoulliSpawn{bernoulli.p_b}, SpawnSpatialModel::centred(bernoulli.sigma_pos, bernoulli.sigma_vel)};
            case ModelKind::Poisson:
                return {PoissonSpawn{poisson.lambda_b}, SpawnSpatialModel::centred(poisson.sigma_pos, poisson.sigma_vel)};
            case ModelKind::Zip:
                return {ZeroInflatedPoissonSpawn{zip.p_b, zip.lambda_b},
                        SpawnSpatialModel::centred(zip.sigma_pos, zip.sigma_vel)};
            case ModelKind::Birth: break;
        }
        throw ConfigError("birth is not a spawn model");
    }

    [[nodiscard]] BirthModel birth_model() const {
        GaussianComponent term;
        term.weight = 1.0;
        if (birth.mean) {
            term.mean = *birth.mean;
        } else {
            term.mean << scenario.region.centre_x(), scenario.region.centre_y(), 0.0, 0.0;
        }
        term.cov.diagonal() << birth.sigma_pos * birth.sigma_pos, birth.sigma_pos * birth.sigma_pos,
            birth.sigma_vel * birth.sigma_vel, birth.sigma_vel * birth.sigma_vel;
        return BirthModel{birth.rate, GaussianMixture{{term}}};
    }

    [[nodiscard]] SensorModel sensor() const {
        SensorModel s = scenario.sensor;
        s.fov = scenario.region;
        return s;
    }

    /// Throws ConfigError describing the first violated constraint.
    void validate() const {
        if (runs < 1) throw ConfigError("experiment.runs must be >= 1");
        if (models.empty()) throw ConfigError("experiment.models must name at least one model");
        if (filter.n_max < 1) throw ConfigError("filter.n_max must be >= 1");
        if (filter.reduction.max_components < 1) throw ConfigError("filter.max_components must be >= 1");
        if (!(metrics.cutoff_pos > 0.0) || !(metrics.cutoff_vel > 0.0))
            throw ConfigError("metrics cutoffs must be positive");
        if (!(scenario.region.area() > 0.0)) throw ConfigError("scenario.fov has no area");
        if (scenario.initial_targets.size() > filter.n_max)
            throw ConfigError("scenario has more initial targets than filter.n_max");
        try {
            scenario.motion().validate();
            sensor().validate();
            for (ModelKind kind : models)
                if (kind != ModelKind::Birth) (void)spawn_model(kind);
            if (!(birth.rate >= 0.0)) throw InvalidModelError("birth.rate must be nonnegative");
        } catch (const InvalidModelError& e) {
            throw ConfigError(e.what());
        }
    }
};

namespace detail {

inline std::vector<double> parse_numbers(const std::string& key, const std::string& text) {
    std::istringstream in(text);
    std::vector<double> out;
    std::string token;
    while (in >> token) {
        try {
            std::size_t used = 0;
            out.push_back(std::stod(token, &used));
            if (used != token.size()) throw std::invalid_argument(token);
        } catch (const std::exception&) {
            throw ConfigError("config key '" + key + "': '" + token + "' is not a number");
        }
    }
    return out;
}

inline double parse_number(const std::string& key, const std::string& text) {
    const auto v = parse_numbers(key, text);
    if (v.size() != 1) throw ConfigError("config key '" + key + "' expects one number");
    return v.front();
}

inline std::size_t parse_count(const std::string& key, const std::string& text) {
    const double v = parse_number(key, text);
    if (v < 0.0 || v != std::floor(v)) throw ConfigError("config key '" + key + "' expects a nonnegative integer");
    return static_cast<std::size_t>(v);
}

inline std::uint64_t parse_seed(const std::string& key, const std::string& text) {
    const auto first = text.find_first_not_of(" \t");
    const auto last = text.find_last_not_of(" \t");
    const std::string token = first == std::string::npos ? "" : text.substr(first, last - first + 1);
    if (token.empty() || token.find_first_not_of("0123456789") != std::string::npos)
        throw ConfigError("config key '" + key + "' expects a nonnegative integer");
    try {
        return std::stoull(token);
    } catch (const std::exception&) {
        throw ConfigError("config key '" + key + "' is out of range");
    }
}

inline bool parse_bool(const std::string& key, const std::string& text) {
    if (text == "true" || text == "1") return true;
    if (text == "false" || text == "0") return false;
    throw ConfigError("config key '" + key + "' expects true or false");
}

inline std::vector<std::vector<double>> parse_groups(const std::string& key, const std::string& text,
                                                     std::size_t width) {
    std::vector<std::vector<double>> out;
    std::istringstream in(text);
    std::string group;
    while (std::getline(in, group, ';')) {
        if (group.find_first_not_of(" \t") == std::string::npos) continue;
        auto v = parse_numbers(key, group);
        if (v.size() != width)
            throw ConfigError("config key '" + key + "': each ';'-separated entry needs " + std::to_string(width) +
                              " numbers");
        out.push_back(std::move(v));
    }
    return out;
}

inline InitialState parse_initial(const std::string& key, const std::string& text) {
    if (text == "empty") return InitialState::Empty;
    if (text == "truth") return InitialState::Truth;
    throw ConfigError("config key '" + key + "' expects 'empty' or 'truth'");
}

inline std::vector<ModelKind> parse_models(const std::string& text) {
    std::vector<ModelKind> out;
    std::istringstream in(text);
    std::string name;
    while (std::getline(in, name, ',')) {
        name.erase(0, name.find_first_not_of(" \t"));
        name.erase(name.find_last_not_of(" \t") + 1);
        if (name.empty()) continue;
        const ModelKind kind = parse_model(name);
        if (std::find(out.begin(), out.end(), kind) != out.end())
            throw ConfigError("model '" + name + "' listed twice");
        out.push_back(kind);
    }
    return out;
}

inline StateVector to_state(const std::vector<double>& v) {
    StateVector s;
    s << v[0], v[1], v[2], v[3];
    return s;
}

inline void apply_spawn_key(SpawnSettings& s, const std::string& name, const std::string& key,
                            const std::string& value, bool has_p, bool has_lambda) {
    if (has_p && name == "p_b") s.p_b = parse_number(key, value);
    else if (has_lambda && name == "lambda_b") s.lambda_b = parse_number(key, value);
    else if (name == "sigma_pos") s.sigma_pos = parse_number(key, value);
    else if (name == "sigma_vel") s.sigma_vel = parse_number(key, value);
    else throw ConfigError("unknown config key '" + key + "'");
}

}  // namespace detail

/// Applies `section.key = value` to `cfg`; unknown keys are errors.
inline void apply_config_key(ExperimentConfig& cfg, const std::string& section, const std::string& name,
                             const std::string& value) {
    using namespace detail;
    const std::string key = section + "." + name;
    auto& sc = cfg.scenario;
    if (section == "scenario") {
        if (name == "duration") sc.duration = parse_count(key, value);
        else if (name == "dt") sc.dt = parse_number(key, value);
        else if (name == "fov") {
            const auto v = parse_numbers(key, value);
            if (v.size() != 4) throw ConfigError("config key '" + key + "' expects x_min x_max y_min y_max");
            sc.region = Rect{v[0], v[1], v[2], v[3]};
        } else if (name == "targets") {
            sc.initial_targets.clear();
            for (const auto& g : parse_groups(key, value, 4)) sc.initial_targets.push_back(to_state(g));
        } else if (name == "spawn_events") {
            sc.spawn_events.clear();
            for (const auto& g : parse_groups(key, value, 4)) {
                if (g[1] < 0 || g[2] < 0) throw ConfigError("config key '" + key + "': negative parent or count");
                sc.spawn_events.push_back({g[0], static_cast<std::size_t>(g[1]), static_cast<std::size_t>(g[2]), g[3]});
            }
        } else if (name == "daughter_sigma_pos") sc.daughter_sigma_pos = parse_number(key, value);
        else if (name == "daughter_sigma_vel") sc.daughter_sigma_vel = parse_number(key, value);
        else if (name == "max_redraws") sc.max_redraws = parse_count(key, value);
        else throw ConfigError("unknown config key '" + key + "'");
    } else if (section == "motion") {
        if (name == "p_s") sc.p_survival = parse_number(key, value);
        else if (name == "sigma_accel") sc.sigma_accel = parse_number(key, value);
        else throw ConfigError("unknown config key '" + key + "'");
    } else if (section == "sensor") {
        if (name == "p_d") sc.sensor.p_detection = parse_number(key, value);
        else if (name == "sigma") {
            const double s = parse_number(key, value);
            sc.sensor.noise = s * s * MeasMatrix::Identity();
        } else if (name == "clutter_rate") sc.sensor.clutter_rate = parse_number(key, value);
        else throw ConfigError("unknown config key '" + key + "'");
    } else if (section == "spawn.bernoulli") {
        apply_spawn_key(cfg.bernoulli, name, key, value, true, false);
    } else if (section == "spawn.poisson") {
        apply_spawn_key(cfg.poisson, name, key, value, false, true);
    } else if (section == "spawn.zip") {
        apply_spawn_key(cfg.zip, name, key, value, true, true);
    } else if (section == "birth") {
        if (name == "rate") cfg.birth.rate = parse_number(key, value);
        else if (name == "mean") {
            const auto v = parse_numbers(key, value);
            if (v.size() != 4) throw ConfigError("config key '" + key + "' expects 4 numbers");
            cfg.birth.mean = to_state(v);
        } else if (name == "sigma_pos") cfg.birth.sigma_pos = parse_number(key, value);
        else if (name == "sigma_vel") cfg.birth.sigma_vel = parse_number(key, value);
        else throw ConfigError("unknown config key '" + key + "'");
    } else if (section == "filter") {
        auto& f = cfg.filter;
        if (name == "truncation") f.reduction.truncation = parse_number(key, value);
        else if (name == "merge") f.reduction.merge = parse_number(key, value);
        else if (name == "max_components") f.reduction.max_components = parse_count(key, value);
        else if (name == "truncate_before_merge") f.reduction.truncate_before_merge = parse_bool(key, value);
        else if (name == "n_max") f.n_max = parse_count(key, value);
        else if (name == "init_sigma_pos") f.init_sigma_pos = parse_number(key, value);
        else if (name == "init_sigma_vel") f.init_sigma_vel = parse_number(key, value);
        else if (name == "initialize_spawn") f.initialize_spawn = parse_initial(key, value);
        else if (name == "initialize_birth") f.initialize_birth = parse_initial(key, value);
        else throw ConfigError("unknown config key '" + key + "'");
    } else if (section == "metrics") {
        if (name == "cutoff_pos") cfg.metrics.cutoff_pos = parse_number(key, value);
        else if (name == "cutoff_vel") cfg.metrics.cutoff_vel = parse_number(key, value);
        else throw ConfigError("unknown config key '" + key + "'");
    } else if (section == "experiment") {
        if (name == "runs") cfg.runs = parse_count(key, value);
        else if (name == "seed") cfg.seed = parse_seed(key, value);
        else if (name == "models") cfg.models = parse_models(value);
        else if (name == "out") cfg.out_dir = value;
        else if (name == "jobs") cfg.jobs = static_cast<unsigned>(parse_count(key, value));
        else throw ConfigError("unknown config key '" + key + "'");
    } else {
        throw ConfigError("unknown config section '[" + section + "]'");
    }
}

/// Parses a sectioned key-value config over the defaults.
inline ExperimentConfig parse_config(std::istream& in, const std::string& origin = "<config>") {
    namespace pt = boost::property_tree;
    pt::ptree tree;
    try {
        pt::ini_parser::read_ini(in, tree);
    } catch (const pt::ini_parser_error& e) {
        throw ConfigError(origin + ": " + e.message() + " (line " + std::to_string(e.line()) + ")");
    }
    ExperimentConfig cfg;
    for (const auto& [section, body] : tree) {
        if (body.empty() && !body.data().empty())
            throw ConfigError(origin + ": key '" + section + "' must appear inside a section");
        for (const auto& [name, value] : body) {
            try {
                apply_config_key(cfg, section, name, value.data());
            } catch (const ConfigError& e) {
                throw ConfigError(origin + ": " + e.what());
            }
        }
    }
    return cfg;
}

inline ExperimentConfig load_config(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot read config file " + path.string());
    return parse_config(in, path.string());
}

}  // namespace spawncphd
