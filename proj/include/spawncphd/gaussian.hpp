#pragma once

#include "spawncphd/errors.hpp"

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <numbers>
#include <numeric>
#include <string>
#include <vector>

namespace spawncphd {

inline constexpr int kStateDim = 4;

/// Single-target state [x, y, vx, vy] in m and m/s.
using StateVector = Eigen::Matrix<double, kStateDim, 1>;
using StateMatrix = Eigen::Matrix<double, kStateDim, kStateDim>;

/// Weighted Gaussian term of an intensity function.
struct GaussianComponent {
    double weight = 0.0;
    StateVector mean = StateVector::Zero();
    StateMatrix cov = StateMatrix::Zero();
};

/// Ordered list of weighted Gaussian terms.
struct GaussianMixture {
    std::vector<GaussianComponent> components;

    [[nodiscard]] std::size_t size() const { return components.size(); }
    [[nodiscard]] bool empty() const { return components.empty(); }

    /// Left-to-right sum of component weights.
    [[nodiscard]] double total_weight() const {
        double total = 0.0;
        for (const auto& c : components) total += c.weight;
        return total;
    }
};

template <typename Derived>
[[nodiscard]] auto symmetrized(const Eigen::MatrixBase<Derived>& a) {
    using Plain = typename Derived::PlainObject;
    Plain out = 0.5 * (a + a.transpose());
    return out;
}

/// True when `a` is symmetric and numerically positive semidefinite.
template <typename Derived>
[[nodiscard]] bool is_psd(const Eigen::MatrixBase<Derived>& a, double tol = 1e-9) {
    using Plain = typename Derived::PlainObject;
    const Plain s = symmetrized(a);
    const double scale = std::max(1.0, s.cwiseAbs().maxCoeff());
    if ((a - a.transpose()).cwiseAbs().maxCoeff() > tol * scale) return false;
    Eigen::LDLT<Plain> ldlt(s);
    if (ldlt.info() != Eigen::Success) return false;
    const double floor = -tol * std::max(1.0, std::abs(s.trace()));
    return ldlt.vectorD().minCoeff() >= floor;
}

inline void validate(const GaussianComponent& c) {
    if (!(c.weight >= 0.0) || !std::isfinite(c.weight))
        throw InvalidModelError("Gaussian component weight must be finite and nonnegative");
    if (!c.mean.allFinite() || !c.cov.allFinite())
        throw InvalidModelError("Gaussian component has non-finite mean or covariance");
    if (!is_psd(c.cov)) throw InvalidModelError("Gaussian component covariance is not PSD");
}

/// Returns (scale * w, F m + d, F P F^T + Q) with the covariance symmetrized.
inline GaussianComponent affine_transform(const GaussianComponent& c, const StateMatrix& transition,
                                          const StateVector& offset, const StateMatrix& noise,
                                          double scale) {
    if (!(scale >= 0.0)) throw InvalidModelError("affine_transform: scale must be nonnegative");
    if (!is_psd(noise)) throw InvalidModelError("affine_transform: noise covariance is not PSD");
    GaussianComponent out;
    out.weight = scale * c.weight;
    out.mean = transition * c.mean + offset;
    out.cov = symmetrized(transition * c.cov * transition.transpose() + noise);
    return out;
}

/// Measurement likelihood N(z; H m, H P H^T + R).
template <int MeasDim>
[[nodiscard]] double eval_density(const GaussianComponent& c,
                                  const Eigen::Matrix<double, MeasDim, 1>& z,
                                  const Eigen::Matrix<double, MeasDim, kStateDim>& observation,
                                  const Eigen::Matrix<double, MeasDim, MeasDim>& noise) {
    using MeasMatrix = Eigen::Matrix<double, MeasDim, MeasDim>;
    const MeasMatrix innovation = symmetrized(observation * c.cov * observation.transpose() + noise);
    Eigen::LLT<MeasMatrix> llt(innovation);
    if (llt.info() != Eigen::Success)
        throw NumericalError("eval_density: singular innovation covariance");
    const Eigen::Matrix<double, MeasDim, 1> residual = z - observation * c.mean;
    const Eigen::Matrix<double, MeasDim, 1> whitened = llt.matrixL().solve(residual);
    const double log_det = 2.0 * llt.matrixL().toDenseMatrix().diagonal().array().log().sum();
    const double log_density = -0.5 * whitened.squaredNorm() - 0.5 * log_det -
                               0.5 * MeasDim * std::log(2.0 * std::numbers::pi);
    return std::exp(log_density);
}

/// Mixture reduction thresholds. Defaults are the experiment values.
struct ReductionParams {
    double truncation = 1e-5;
    double merge = 4.0;
    std::size_t max_components = 100;
    /// Apply weight truncation before merging (otherwise merge first, then truncate).
    bool truncate_before_merge = true;
};

namespace detail {

/// Moment-matched merge of the selected components.
inline GaussianComponent merge_moments(const std::vector<GaussianComponent>& src,
                                       const std::vector<std::size_t>& group) {
    GaussianComponent out;
    for (std::size_t i : group) out.weight += src[i].weight;
    if (out.weight <= 0.0) {
        out.mean = src[group.front()].mean;
        out.cov = src[group.front()].cov;
        return out;
    }
    out.mean.setZero();
    for (std::size_t i : group) out.mean += src[i].weight * src[i].mean;
    out.mean /= out.weight;
    out.cov.setZero();
    for (std::size_t i : group) {
        const StateVector spread = out.mean - src[i].mean;
        out.cov += src[i].weight * (src[i].cov + spread * spread.transpose());
    }
    out.cov = symmetrized(out.cov / out.weight);
    return out;
}

inline std::vector<GaussianComponent> truncate(std::vector<GaussianComponent> comps,
                                               double threshold) {
    std::erase_if(comps, [threshold](const GaussianComponent& c) { return c.weight < threshold; });
    return comps;
}

/// Greedy merge: highest weight first, ties by index.
inline std::vector<GaussianComponent> merge(const std::vector<GaussianComponent>& comps,
                                            double threshold, Diagnostics* diag) {
    const std::size_t n = comps.size();
    std::vector<Eigen::LLT<StateMatrix>> factors;
    std::vector<bool> mergeable(n, true);
    factors.reserve(n);
    for (std::size_t i = 0; i < n; ++i) {
        factors.emplace_back(comps[i].cov);
        if (factors.back().info() != Eigen::Success) {
            mergeable[i] = false;
            log_to(diag, "reduce: component " + std::to_string(i) +
                             " has singular covariance; excluded from merging");
        }
    }

    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
        return comps[a].weight > comps[b].weight;
    });

    std::vector<bool> used(n, false);
    std::vector<GaussianComponent> out;
    std::vector<std::size_t> group;
    for (std::size_t pivot : order) {
        if (used[pivot]) continue;
        group.clear();
        for (std::size_t j : order) {
            if (used[j]) continue;
            if (j != pivot) {
                if (!mergeable[j]) continue;
                const StateVector diff = comps[pivot].mean - comps[j].mean;
                const double dist = diff.dot(factors[j].solve(diff));
                if (!(dist <= threshold)) continue;
            }
            group.push_back(j);
        }
        std::sort(group.begin(), group.end());
        for (std::size_t j : group) used[j] = true;
        out.push_back(group.size() == 1 ? comps[group.front()] : merge_moments(comps, group));
    }
    return out;
}

inline std::vector<GaussianComponent> prune(std::vector<GaussianComponent> comps,
                                            std::size_t max_components) {
    std::stable_sort(comps.begin(), comps.end(),
                     [](const auto& a, const auto& b) { return a.weight > b.weight; });
    if (comps.size() > max_components) comps.resize(max_components);
    return comps;
}

}  // namespace detail

/// Truncate, merge and cap a mixture. Merging conserves weight, mean and spread.
inline GaussianMixture reduce(const GaussianMixture& m, const ReductionParams& params = {},
                              Diagnostics* diag = nullptr) {
    if (!(params.truncation >= 0.0) || !(params.merge >= 0.0) || params.max_components < 1)
        throw DomainError("reduce: thresholds must be nonnegative and max_components >= 1");
    std::vector<GaussianComponent> comps = m.components;
    if (params.truncate_before_merge) {
        comps = detail::truncate(std::move(comps), params.truncation);
        comps = detail::merge(comps, params.merge, diag);
    } else {
        comps = detail::merge(comps, params.merge, diag);
        comps = detail::truncate(std::move(comps), params.truncation);
    }
    return GaussianMixture{detail::prune(std::move(comps), params.max_components)};
}

}  // namespace spawncphd
