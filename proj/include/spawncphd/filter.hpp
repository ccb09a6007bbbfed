#pragma once

#include "spawncphd/cardinality.hpp"
#include "spawncphd/errors.hpp"
#include "spawncphd/gaussian.hpp"
#include "spawncphd/spawning.hpp"

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <numeric>
#include <span>
#include <string>
#include <vector>

namespace spawncphd {

using MeasVector = Eigen::Vector2d;
using MeasMatrix = Eigen::Matrix2d;
using ObservationMatrix = Eigen::Matrix<double, 2, kStateDim>;

/// Axis-aligned rectangle in metres.
struct Rect {
    double x_min = -1000.0;
    double x_max = 1000.0;
    double y_min = -1000.0;
    double y_max = 1000.0;

    [[nodiscard]] double area() const { return (x_max - x_min) * (y_max - y_min); }
    [[nodiscard]] bool contains(double x, double y) const {
        return x >= x_min && x <= x_max && y >= y_min && y <= y_max;
    }
    [[nodiscard]] double centre_x() const { return 0.5 * (x_min + x_max); }
    [[nodiscard]] double centre_y() const { return 0.5 * (y_min + y_max); }
};

/// Linear Gaussian single-target motion with uniform survival.
struct MotionModel {
    StateMatrix transition = StateMatrix::Identity();
    StateMatrix noise = StateMatrix::Zero();
    double p_survival = 1.0;

    /// Nearly-constant-velocity model driven by white acceleration of std `sigma_accel`.
    static MotionModel constant_velocity(double dt, double sigma_accel, double p_survival) {
        MotionModel m;
        m.transition.setIdentity();
        m.transition(0, 2) = dt;
        m.transition(1, 3) = dt;
        const double q = sigma_accel * sigma_accel;
        const double dt2 = dt * dt;
        m.noise.setZero();
        for (int axis = 0; axis < 2; ++axis) {
            m.noise(axis, axis) = q * dt2 * dt2 / 4.0;
            m.noise(axis, axis + 2) = q * dt2 * dt / 2.0;
            m.noise(axis + 2, axis) = q * dt2 * dt / 2.0;
            m.noise(axis + 2, axis + 2) = q * dt2;
        }
        m.p_survival = p_survival;
        return m;
    }

    void validate() const {
        if (!(p_survival >= 0.0 && p_survival <= 1.0))
            throw InvalidModelError("motion: survival probability must lie in [0, 1]");
        if (!is_psd(noise)) throw InvalidModelError("motion: process noise is not PSD");
    }
};

/// Position sensor with uniform detection and Poisson clutter uniform over the FoV.
struct SensorModel {
    ObservationMatrix observation = ObservationMatrix::Identity();
    MeasMatrix noise = MeasMatrix::Identity();
    double p_detection = 1.0;
    double clutter_rate = 0.0;
    Rect fov;

    static SensorModel position(double sigma, double p_detection, double clutter_rate, Rect fov) {
        SensorModel s;
        s.observation.setZero();
        s.observation(0, 0) = 1.0;
        s.observation(1, 1) = 1.0;
        s.noise = sigma * sigma * MeasMatrix::Identity();
        s.p_detection = p_detection;
        s.clutter_rate = clutter_rate;
        s.fov = fov;
        return s;
    }

    [[nodiscard]] double clutter_density() const { return clutter_rate / fov.area(); }

    void validate() const {
        if (!(p_detection >= 0.0 && p_detection <= 1.0))
            throw InvalidModelError("sensor: detection probability must lie in [0, 1]");
        if (!(clutter_rate >= 0.0)) throw InvalidModelError("sensor: clutter rate must be nonnegative");
        if (!(fov.area() > 0.0)) throw InvalidModelError("sensor: field of view has no area");
        if (!is_psd(noise)) throw InvalidModelError("sensor: measurement noise is not PSD");
    }
};

/// Spontaneous Poisson birth: `rate` expected births per scan spread over `terms`.
struct BirthModel {
    double rate = 0.0;
    /// Spatial distribution; weights should sum to one.
    GaussianMixture terms;
};

/// Posterior or predicted CPHD state.
struct FilterState {
    GaussianMixture intensity;
    CardinalityDistribution cardinality;
};

namespace detail {

inline GaussianMixture survival_mixture(const GaussianMixture& prior, const MotionModel& motion) {
    GaussianMixture out;
    out.components.reserve(prior.size());
    for (const auto& c : prior.components)
        out.components.push_back(
            affine_transform(c, motion.transition, StateVector::Zero(), motion.noise, motion.p_survival));
    return out;
}

}  // namespace detail

/// Prediction with spawning and no spontaneous birth. No mixture reduction.
inline FilterState predict_spawning(const FilterState& state, const MotionModel& motion,
                                    const SpawnModel& spawn, Diagnostics* diag = nullptr) {
    motion.validate();
    FilterState out;
    out.intensity = detail::survival_mixture(state.intensity, motion);
    auto spawned = spawn_intensity(state.intensity, spawn);
    out.intensity.components.insert(out.intensity.components.end(), spawned.components.begin(),
                                    spawned.components.end());
    const auto bell = bell_coefficients(spawn, motion.p_survival, state.cardinality.n_max());
    auto predicted = predict_cardinality(state.cardinality, bell);
    if (predicted.truncated_mass > 1e-9)
        log_to(diag, "predict_spawning: truncated cardinality mass " +
                         std::to_string(predicted.truncated_mass));
    out.cardinality = std::move(predicted.distribution);
    return out;
}

/// Baseline prediction with spontaneous Poisson birth and no spawning. No mixture reduction.
inline FilterState predict_birth(const FilterState& state, const MotionModel& motion,
                                 const BirthModel& birth, Diagnostics* diag = nullptr) {
    motion.validate();
    if (!(birth.rate >= 0.0)) throw InvalidModelError("birth: rate must be nonnegative");
    FilterState out;
    out.intensity = detail::survival_mixture(state.intensity, motion);
    for (const auto& term : birth.terms.components) {
        GaussianComponent c = term;
        c.weight = birth.rate * term.weight;
        out.intensity.components.push_back(c);
    }

    const std::size_t n_max = state.cardinality.n_max();
    const double ps = motion.p_survival;
    const auto binom = detail::binomials(n_max);
    std::vector<double> survivors(n_max + 1, 0.0);
    for (std::size_t m = 0; m <= n_max; ++m) {
        const double pm = state.cardinality[m];
        if (pm == 0.0) continue;
        for (std::size_t k = 0; k <= m; ++k)
            survivors[k] += pm * binom[m][k] * std::pow(ps, static_cast<double>(k)) *
                            std::pow(1.0 - ps, static_cast<double>(m - k));
    }
    std::vector<double> births(n_max + 1, 0.0);
    births[0] = std::exp(-birth.rate);
    for (std::size_t k = 1; k <= n_max; ++k)
        births[k] = births[k - 1] * birth.rate / static_cast<double>(k);

    std::vector<double> mass(n_max + 1, 0.0);
    for (std::size_t a = 0; a <= n_max; ++a)
        for (std::size_t c = 0; a + c <= n_max; ++c) mass[a + c] += survivors[a] * births[c];
    double deficit = 0.0;
    out.cardinality = CardinalityDistribution::normalized(std::move(mass), &deficit);
    if (deficit > 1e-9) log_to(diag, "predict_birth: truncated cardinality mass " + std::to_string(deficit));
    return out;
}

/// Weights produced by the CPHD data update for a predicted mixture.
struct UpdateWeights {
    CardinalityDistribution cardinality;
    /// Multiplier applied to every predicted weight for the missed-detection terms.
    double missed_scale = 0.0;
    /// detected(j, i): posterior weight of component j updated with measurement i.
    Eigen::MatrixXd detected;
};

namespace detail {

/// Falling factorial n! / (n - k)!.
inline double falling_factorial(std::size_t n, std::size_t k) {
    double out = 1.0;
    for (std::size_t i = 0; i < k; ++i) out *= static_cast<double>(n - i);
    return out;
}

/// sum_j coeff(j) * P^n_{j+u} (1 - pd)^(n - j - u) * esf[j], per n.
inline std::vector<double> upsilon(const std::vector<double>& esf, std::size_t u, std::size_t n_max,
                                   double p_miss, std::size_t only_j, bool poisson_clutter) {
    std::vector<double> out(n_max + 1, 0.0);
    for (std::size_t n = 0; n <= n_max; ++n) {
        double sum = 0.0;
        for (std::size_t j = 0; j < esf.size() && j + u <= n; ++j) {
            if (!poisson_clutter && j != only_j) continue;
            sum += falling_factorial(n, j + u) * std::pow(p_miss, static_cast<double>(n - j - u)) * esf[j];
        }
        out[n] = sum;
    }
    return out;
}

inline double inner(const std::vector<double>& a, const CardinalityDistribution& rho) {
    double s = 0.0;
    for (std::size_t n = 0; n < a.size(); ++n) s += a[n] * rho[n];
    return s;
}

}  // namespace detail

/// CPHD update weights from predicted weights and the likelihood matrix
/// likelihood(j, i) = N(z_i; H m_j, S_j).
///
/// Each measurement's likelihood is expressed relative to the clutter density and the
/// predicted mass, so only ratios enter the elementary symmetric functions; scaling the
/// likelihoods and the clutter density by a common factor leaves the result unchanged.
/// With `clutter_density == 0` the clutter process is empty and every measurement must
/// come from a target.
inline UpdateWeights cphd_update_weights(std::span<const double> weights,
                                         const Eigen::MatrixXd& likelihood, double clutter_density,
                                         double p_detection, const CardinalityDistribution& predicted) {
    const std::size_t n_comp = weights.size();
    const std::size_t n_meas = static_cast<std::size_t>(likelihood.cols());
    const std::size_t n_max = predicted.n_max();
    const bool poisson_clutter = clutter_density > 0.0;
    const double p_miss = 1.0 - p_detection;

    double total = 0.0;
    for (double w : weights) total += w;
    const double inv_total = total > 0.0 ? 1.0 / total : 0.0;
    const double kappa = poisson_clutter ? clutter_density : 1.0;

    std::vector<double> ratio(n_meas, 0.0);
    for (std::size_t i = 0; i < n_meas; ++i) {
        double s = 0.0;
        for (std::size_t j = 0; j < n_comp; ++j) s += weights[j] * likelihood(static_cast<Eigen::Index>(j), static_cast<Eigen::Index>(i));
        ratio[i] = p_detection * s / kappa * inv_total;
    }

    const auto esf_all = elementary_symmetric(ratio, n_max);
    const auto ups0 = detail::upsilon(esf_all, 0, n_max, p_miss, n_meas, poisson_clutter);
    auto ups1 = detail::upsilon(esf_all, 1, n_max, p_miss, n_meas, poisson_clutter);
    for (double& v : ups1) v *= inv_total;

    const double norm = detail::inner(ups0, predicted);
    if (!(norm > 0.0) || !std::isfinite(norm))
        throw NumericalError("cphd update: scan has zero likelihood under the predicted cardinality (" +
                             std::to_string(n_meas) + " measurements)");

    std::vector<double> post(n_max + 1);
    for (std::size_t n = 0; n <= n_max; ++n) post[n] = ups0[n] * predicted[n];

    UpdateWeights out{CardinalityDistribution::normalized(std::move(post)), 0.0,
                      Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(n_comp), static_cast<Eigen::Index>(n_meas))};
    out.missed_scale = p_miss * detail::inner(ups1, predicted) / norm;

    std::vector<double> others;
    others.reserve(n_meas);
    for (std::size_t i = 0; i < n_meas; ++i) {
        others.clear();
        for (std::size_t k = 0; k < n_meas; ++k)
            if (k != i) others.push_back(ratio[k]);
        const auto esf = elementary_symmetric(others, n_max);
        auto ups = detail::upsilon(esf, 1, n_max, p_miss, n_meas - 1, poisson_clutter);
        const double gain = detail::inner(ups, predicted) * inv_total / norm;
        for (std::size_t j = 0; j < n_comp; ++j) {
            const auto r = static_cast<Eigen::Index>(j);
            const auto c = static_cast<Eigen::Index>(i);
            out.detected(r, c) = p_detection * weights[j] * likelihood(r, c) / kappa * gain;
        }
    }
    return out;
}

/// Standard GM-CPHD measurement update followed by mixture reduction. Surviving weights
/// are rescaled so the intensity mass matches the posterior expected cardinality.
inline FilterState update(const FilterState& state, std::span<const MeasVector> scan,
                          const SensorModel& sensor, const ReductionParams& reduction = {},
                          Diagnostics* diag = nullptr) {
    sensor.validate();
    const std::size_t n_meas = scan.size();
    if (sensor.clutter_rate == 0.0 && n_meas > 0 && sensor.p_detection < 1.0)
        throw ConfigError("update: zero clutter density with a nonempty scan requires p_d = 1");
    for (const auto& z : scan)
        if (!sensor.fov.contains(z.x(), z.y()))
            log_to(diag, "update: measurement outside the field of view");

    const auto& comps = state.intensity.components;
    const std::size_t n_comp = comps.size();
    const ObservationMatrix& H = sensor.observation;

    struct Innovation {
        MeasVector predicted;
        Eigen::LLT<MeasMatrix> factor;
        double log_norm;
        Eigen::Matrix<double, kStateDim, 2> gain;
        StateMatrix cov;
    };
    std::vector<Innovation> innov;
    innov.reserve(n_comp);
    for (std::size_t j = 0; j < n_comp; ++j) {
        const auto& c = comps[j];
        const MeasMatrix s = symmetrized(H * c.cov * H.transpose() + sensor.noise);
        Eigen::LLT<MeasMatrix> llt(s);
        if (llt.info() != Eigen::Success)
            throw NumericalError("update: singular innovation covariance for component " + std::to_string(j));
        const MeasMatrix l = llt.matrixL();
        const double log_norm = -std::log(2.0 * std::numbers::pi) - std::log(l(0, 0)) - std::log(l(1, 1));
        const Eigen::Matrix<double, kStateDim, 2> pht = c.cov * H.transpose();
        const Eigen::Matrix<double, kStateDim, 2> gain = llt.solve(pht.transpose()).transpose();
        const StateMatrix cov = symmetrized((StateMatrix::Identity() - gain * H) * c.cov);
        innov.push_back({H * c.mean, std::move(llt), log_norm, gain, cov});
    }

    Eigen::MatrixXd likelihood(static_cast<Eigen::Index>(n_comp), static_cast<Eigen::Index>(n_meas));
    std::vector<double> weights(n_comp);
    for (std::size_t j = 0; j < n_comp; ++j) {
        weights[j] = comps[j].weight;
        for (std::size_t i = 0; i < n_meas; ++i) {
            const MeasVector residual = scan[i] - innov[j].predicted;
            const MeasVector whitened = innov[j].factor.matrixL().solve(residual);
            likelihood(static_cast<Eigen::Index>(j), static_cast<Eigen::Index>(i)) =
                std::exp(innov[j].log_norm - 0.5 * whitened.squaredNorm());
        }
    }

    const auto w = cphd_update_weights(weights, likelihood, sensor.clutter_density(),
                                       sensor.p_detection, state.cardinality);

    GaussianMixture posterior;
    posterior.components.reserve(n_comp * (n_meas + 1));
    for (const auto& c : comps) {
        GaussianComponent missed = c;
        missed.weight = w.missed_scale * c.weight;
        posterior.components.push_back(missed);
    }
    for (std::size_t i = 0; i < n_meas; ++i) {
        for (std::size_t j = 0; j < n_comp; ++j) {
            const double weight = w.detected(static_cast<Eigen::Index>(j), static_cast<Eigen::Index>(i));
            GaussianComponent d;
            d.weight = weight;
            d.mean = comps[j].mean + innov[j].gain * (scan[i] - innov[j].predicted);
            d.cov = innov[j].cov;
            posterior.components.push_back(std::move(d));
        }
    }

    FilterState out;
    out.cardinality = w.cardinality;
    out.intensity = reduce(posterior, reduction, diag);

    const double expected = out.cardinality.mean();
    const double mass = out.intensity.total_weight();
    if (mass > 0.0) {
        const double scale = expected / mass;
        for (auto& c : out.intensity.components) c.weight *= scale;
    } else if (expected > 0.05) {
        log_to(diag, "update: intensity pruned to nothing while expected cardinality is " +
                         std::to_string(expected));
    }
    if (std::abs(expected - out.intensity.total_weight()) / std::max(1.0, out.intensity.total_weight()) > 0.05)
        log_to(diag, "update: intensity mass and expected cardinality disagree");
    return out;
}

/// Means of the MAP-count highest-weight components (ties by index).
inline std::vector<StateVector> extract_estimates(const FilterState& state) {
    const std::size_t count = map_estimate(state.cardinality);
    const auto& comps = state.intensity.components;
    std::vector<std::size_t> order(comps.size());
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::stable_sort(order.begin(), order.end(),
                     [&](std::size_t a, std::size_t b) { return comps[a].weight > comps[b].weight; });
    std::vector<StateVector> out;
    for (std::size_t k = 0; k < std::min(count, order.size()); ++k) out.push_back(comps[order[k]].mean);
    return out;
}

}  // namespace spawncphd
