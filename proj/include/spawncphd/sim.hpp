#pragma once

#include "spawncphd/cardinality.hpp"
#include "spawncphd/errors.hpp"
#include "spawncphd/filter.hpp"
#include "spawncphd/spawning.hpp"

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <variant>
#include <cstddef>
#include <cstdint>
#include <random>
#include <string>
#include <vector>

namespace spawncphd {

using Rng = std::mt19937_64;

/// Independent generator for (seed, stream); streams of one seed never overlap in use.
inline Rng make_rng(std::uint64_t seed, std::uint32_t stream) {
    std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32), stream};
    return Rng(seq);
}

/// Uniform double in [0, 1) from the top 53 bits.
inline double uniform01(Rng& rng) { return static_cast<double>(rng() >> 11) * 0x1.0p-53; }

/// At `time`, track `parent` spawns `count` daughters that live for `lifespan` seconds.
struct SpawnEvent {
    double time = 0.0;
    std::size_t parent = 0;
    std::size_t count = 0;
    double lifespan = 0.0;
};

struct ScenarioConfig {
    std::size_t duration = 100;  ///< number of scans
    double dt = 1.0;             ///< s between scans
    Rect region;
    std::vector<StateVector> initial_targets;
    std::vector<SpawnEvent> spawn_events;
    /// Daughter states are drawn from N(parent, diag(pos^2, pos^2, vel^2, vel^2)).
    double daughter_sigma_pos = 12.0;
    double daughter_sigma_vel = 12.0;
    /// Redraws allowed to keep a daughter inside the region for its whole life.
    std::size_t max_redraws = 1000;
    double sigma_accel = 5.0;
    double p_survival = 0.99;
    SensorModel sensor = SensorModel::position(10.0, 0.95, 50.0, Rect{});

    [[nodiscard]] MotionModel motion() const {
        return MotionModel::constant_velocity(dt, sigma_accel, p_survival);
    }

    /// Two parents in opposite quadrants; 2 daughters at 15 s, 3 at 25 s, 60 s lifespan.
    static ScenarioConfig defaults() {
        ScenarioConfig cfg;
        StateVector a, b;
        a << -750.0, -600.0, 14.0, 6.0;
        b << 650.0, 700.0, -15.0, -5.0;
        cfg.initial_targets = {a, b};
        cfg.spawn_events = {{15.0, 0, 2, 60.0}, {25.0, 1, 3, 60.0}};
        return cfg;
    }
};

struct TruthPoint {
    std::size_t id = 0;
    StateVector state = StateVector::Zero();
};

/// Alive targets per scan.
struct GroundTruth {
    std::vector<std::vector<TruthPoint>> scans;

    [[nodiscard]] std::size_t count(std::size_t scan) const { return scans.at(scan).size(); }
};

/// Unlabelled, shuffled position measurements of one scan.
struct MeasurementScan {
    std::vector<MeasVector> points;
};

namespace detail {

struct Track {
    std::size_t first_scan = 0;
    std::size_t end_scan = 0;  // exclusive
    StateVector start = StateVector::Zero();

    [[nodiscard]] bool alive(std::size_t k) const { return k >= first_scan && k < end_scan; }
    [[nodiscard]] StateVector at(std::size_t k, double dt) const {
        const double t = static_cast<double>(k - first_scan) * dt;
        StateVector s = start;
        s(0) += t * start(2);
        s(1) += t * start(3);
        return s;
    }
};

inline bool stays_inside(const Track& track, const Rect& region, double dt) {
    for (std::size_t k = track.first_scan; k < track.end_scan; ++k) {
        const StateVector s = track.at(k, dt);
        if (!region.contains(s(0), s(1))) return false;
    }
    return true;
}

}  // namespace detail

/// Constant-velocity ground truth with scheduled spawn events.
inline GroundTruth generate_truth(const ScenarioConfig& cfg, Rng& rng, Diagnostics* diag = nullptr) {
    if (cfg.duration == 0 || !(cfg.dt > 0.0)) throw ConfigError("scenario: duration and dt must be positive");
    std::vector<detail::Track> tracks;
    for (const auto& x : cfg.initial_targets) tracks.push_back({0, cfg.duration, x});

    std::vector<SpawnEvent> events = cfg.spawn_events;
    std::stable_sort(events.begin(), events.end(),
                     [](const SpawnEvent& a, const SpawnEvent& b) { return a.time < b.time; });
    std::normal_distribution<double> normal(0.0, 1.0);
    for (const auto& ev : events) {
        const double scan_pos = ev.time / cfg.dt;
        if (ev.time < 0.0 || scan_pos > static_cast<double>(cfg.duration - 1))
            throw ConfigError("scenario: spawn event at t=" + std::to_string(ev.time) + " outside the scenario");
        const auto k = static_cast<std::size_t>(std::llround(scan_pos));
        if (ev.parent >= tracks.size() || !tracks[ev.parent].alive(k))
            throw ConfigError("scenario: spawn parent " + std::to_string(ev.parent) + " is not alive at t=" +
                              std::to_string(ev.time));
        const auto life_scans = static_cast<std::size_t>(std::floor(ev.lifespan / cfg.dt + 1e-9));
        const std::size_t end = std::min(cfg.duration, k + life_scans + 1);
        const StateVector parent = tracks[ev.parent].at(k, cfg.dt);
        for (std::size_t d = 0; d < ev.count; ++d) {
            detail::Track daughter{k, end, parent};
            bool inside = false;
            for (std::size_t attempt = 0; attempt <= cfg.max_redraws && !inside; ++attempt) {
                daughter.start = parent;
                for (int axis = 0; axis < 2; ++axis) {
                    daughter.start(axis) += cfg.daughter_sigma_pos * normal(rng);
                    daughter.start(axis + 2) += cfg.daughter_sigma_vel * normal(rng);
                }
                inside = detail::stays_inside(daughter, cfg.region, cfg.dt);
            }
            if (!inside) log_to(diag, "scenario: daughter of track " + std::to_string(ev.parent) + " leaves the region");
            tracks.push_back(daughter);
        }
    }

    GroundTruth truth;
    truth.scans.resize(cfg.duration);
    for (std::size_t id = 0; id < tracks.size(); ++id) {
        for (std::size_t k = tracks[id].first_scan; k < tracks[id].end_scan; ++k) {
            const StateVector s = tracks[id].at(k, cfg.dt);
            if (id < cfg.initial_targets.size() && !cfg.region.contains(s(0), s(1)))
                log_to(diag, "scenario: track " + std::to_string(id) + " outside the region at scan " + std::to_string(k));
            truth.scans[k].push_back({id, s});
        }
    }
    return truth;
}

/// Detections (probability p_d, Gaussian noise) of in-FoV targets plus uniform Poisson clutter.
inline std::vector<MeasurementScan> generate_measurements(const GroundTruth& truth, const SensorModel& sensor,
                                                          Rng& rng) {
    sensor.validate();
    const MeasMatrix noise_sqrt = Eigen::SelfAdjointEigenSolver<MeasMatrix>(sensor.noise).operatorSqrt();
    std::normal_distribution<double> normal(0.0, 1.0);
    std::poisson_distribution<long> clutter_count(sensor.clutter_rate > 0.0 ? sensor.clutter_rate : 1.0);
    const Rect& fov = sensor.fov;

    std::vector<MeasurementScan> scans(truth.scans.size());
    for (std::size_t k = 0; k < truth.scans.size(); ++k) {
        auto& points = scans[k].points;
        for (const auto& target : truth.scans[k]) {
            const double x = target.state(0);
            const double y = target.state(1);
            if (!fov.contains(x, y)) continue;
            if (!(uniform01(rng) < sensor.p_detection)) continue;
            MeasVector white;
            white << normal(rng), normal(rng);
            const MeasVector z = sensor.observation * target.state + noise_sqrt * white;
            if (fov.contains(z.x(), z.y())) points.push_back(z);
        }
        const long clutter = sensor.clutter_rate > 0.0 ? clutter_count(rng) : 0;
        for (long c = 0; c < clutter; ++c) {
            MeasVector z;
            z << fov.x_min + (fov.x_max - fov.x_min) * uniform01(rng),
                fov.y_min + (fov.y_max - fov.y_min) * uniform01(rng);
            points.push_back(z);
        }
        std::shuffle(points.begin(), points.end(), rng);
    }
    return scans;
}

namespace detail {

/// Inverse-cdf sampler over 0..K for a pmf given up to a negligible tail.
class DiscreteSampler {
public:
    explicit DiscreteSampler(std::vector<double> pmf) : cdf_(std::move(pmf)) {
        double acc = 0.0;
        for (double& p : cdf_) {
            acc += p;
            p = acc;
        }
        for (double& p : cdf_) p /= acc;
    }
    std::size_t operator()(Rng& rng) const {
        const double u = uniform01(rng);
        const auto it = std::upper_bound(cdf_.begin(), cdf_.end(), u);
        return std::min<std::size_t>(static_cast<std::size_t>(it - cdf_.begin()), cdf_.size() - 1);
    }

private:
    std::vector<double> cdf_;
};

inline DiscreteSampler poisson_sampler(double rate) {
    std::vector<double> pmf{std::exp(-rate)};
    double tail = 1.0 - pmf.back();
    for (std::size_t k = 1; tail > 1e-16 && k < 400; ++k) {
        pmf.push_back(pmf.back() * rate / static_cast<double>(k));
        tail -= pmf.back();
    }
    return DiscreteSampler(std::move(pmf));
}

}  // namespace detail

/// Monte-Carlo branching simulation of one prediction step: each of m ~ rho parents
/// survives with probability p_s and independently spawns per the model. Totals above
/// n_max are clipped to n_max.
inline CardinalityDistribution mc_branching_oracle(const CardinalityDistribution& rho, const SpawnModel& spawn,
                                                   double p_s, std::size_t samples, Rng& rng) {
    if (samples == 0) throw DomainError("mc_branching_oracle: needs at least one sample");
    const std::size_t n_max = rho.n_max();
    const detail::DiscreteSampler parents(rho.probs());
    double spawn_probability = 1.0;
    double rate = 0.0;
    bool poisson_daughters = true;
    std::visit(
        [&](const auto& l) {
            using L = std::decay_t<decltype(l)>;
            if constexpr (std::is_same_v<L, BernoulliSpawn>) {
                spawn_probability = l.probability;
                poisson_daughters = false;
            } else if constexpr (std::is_same_v<L, PoissonSpawn>) {
                rate = l.rate;
            } else {
                spawn_probability = l.probability;
                rate = l.rate;
            }
        },
        spawn.law());
    const auto daughters = detail::poisson_sampler(rate);

    std::vector<double> hist(n_max + 1, 0.0);
    for (std::size_t s = 0; s < samples; ++s) {
        const std::size_t m = parents(rng);
        std::size_t total = 0;
        for (std::size_t p = 0; p < m; ++p) {
            if (uniform01(rng) < p_s) ++total;
            if (uniform01(rng) < spawn_probability) total += poisson_daughters ? daughters(rng) : 1;
        }
        hist[std::min(total, n_max)] += 1.0;
    }
    for (double& h : hist) h /= static_cast<double>(samples);
    return CardinalityDistribution::normalized(std::move(hist));
}

}  // namespace spawncphd
