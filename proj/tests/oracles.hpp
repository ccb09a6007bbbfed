#pragma once

// Test-only reference implementations. Each one follows a different computational route from
// the library code it checks (enumeration instead of recurrence, per-axis scalars instead of
// matrices), so agreement is evidence rather than tautology.

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <functional>
#include <numeric>
#include <vector>

namespace oracle {

/// Visits every set partition of {0..n-1} as a block-size list (restricted growth strings).
inline void for_each_set_partition(int n, const std::function<void(const std::vector<int>&)>& visit) {
    if (n == 0) {
        visit({});
        return;
    }
    std::vector<int> label(static_cast<std::size_t>(n), 0);
    std::function<void(int, int)> rec = [&](int pos, int blocks) {
        if (pos == n) {
            std::vector<int> sizes(static_cast<std::size_t>(blocks), 0);
            for (int l : label) ++sizes[static_cast<std::size_t>(l)];
            visit(sizes);
            return;
        }
        for (int b = 0; b <= blocks; ++b) {
            label[static_cast<std::size_t>(pos)] = b;
            rec(pos + 1, std::max(blocks, b + 1));
        }
    };
    rec(1, 1);  // element 0 always opens block 0
}

/// B_{n,j}(x) for all j by summing block products over set partitions; x[i-1] = x_i.
inline std::vector<double> bell_by_partitions(int n, const std::vector<double>& x) {
    std::vector<double> out(static_cast<std::size_t>(n) + 1, 0.0);
    for_each_set_partition(n, [&](const std::vector<int>& sizes) {
        double prod = 1.0;
        for (int s : sizes) prod *= x[static_cast<std::size_t>(s) - 1];
        out[sizes.size()] += prod;
    });
    return out;
}

/// B_{n,j}(x) from the explicit sum over (k_1..k_n) with sum i k_i = n and sum k_i = j.
inline double bell_by_compositions(int n, int j, const std::vector<double>& x) {
    std::vector<double> fact(static_cast<std::size_t>(n) + 1, 1.0);
    for (int i = 1; i <= n; ++i) fact[static_cast<std::size_t>(i)] = fact[static_cast<std::size_t>(i) - 1] * i;
    double total = 0.0;
    std::vector<int> k(static_cast<std::size_t>(n) + 1, 0);
    std::function<void(int, int, int)> rec = [&](int i, int weight_left, int count_left) {
        if (i > n) {
            if (weight_left != 0 || count_left != 0) return;
            double term = fact[static_cast<std::size_t>(n)];
            for (int a = 1; a <= n; ++a) {
                const int ka = k[static_cast<std::size_t>(a)];
                term /= fact[static_cast<std::size_t>(ka)] * std::pow(fact[static_cast<std::size_t>(a)], ka);
                term *= std::pow(x[static_cast<std::size_t>(a) - 1], ka);
            }
            total += term;
            return;
        }
        for (int c = 0; c * i <= weight_left && c <= count_left; ++c) {
            k[static_cast<std::size_t>(i)] = c;
            rec(i + 1, weight_left - c * i, count_left - c);
        }
        k[static_cast<std::size_t>(i)] = 0;
    };
    rec(1, n, j);
    return total;
}

/// e_k by explicit enumeration of all subsets.
inline std::vector<double> esf_by_subsets(const std::vector<double>& v) {
    const std::size_t n = v.size();
    std::vector<double> e(n + 1, 0.0);
    for (std::size_t mask = 0; mask < (std::size_t{1} << n); ++mask) {
        double prod = 1.0;
        std::size_t bits = 0;
        for (std::size_t i = 0; i < n; ++i)
            if (mask & (std::size_t{1} << i)) {
                prod *= v[i];
                ++bits;
            }
        e[bits] += prod;
    }
    return e;
}

/// Squared-cutoff OSPA by trying every injection of the smaller set into the larger.
inline double ospa_by_permutation(const std::vector<Eigen::VectorXd>& x, const std::vector<Eigen::VectorXd>& y,
                                  double c) {
    const auto& a = x.size() <= y.size() ? x : y;
    const auto& b = x.size() <= y.size() ? y : x;
    const std::size_t m = a.size(), n = b.size();
    if (n == 0) return 0.0;
    std::vector<std::size_t> perm(n);
    std::iota(perm.begin(), perm.end(), std::size_t{0});
    double best = std::numeric_limits<double>::infinity();
    do {
        double s = 0.0;
        for (std::size_t i = 0; i < m; ++i) {
            const double d = std::min(c, (a[i] - b[perm[i]]).norm());
            s += d * d;
        }
        best = std::min(best, s);
    } while (std::next_permutation(perm.begin(), perm.end()));
    return std::sqrt((best + c * c * static_cast<double>(n - m)) / static_cast<double>(n));
}

/// Two-state (position, velocity) Kalman filter for one axis of the constant-velocity model.
struct AxisKalman {
    double pos, vel;
    double ppp, ppv, pvv;  // covariance entries

    void predict(double dt, double sigma_accel) {
        const double q = sigma_accel * sigma_accel;
        pos += dt * vel;
        const double npp = ppp + 2.0 * dt * ppv + dt * dt * pvv + q * std::pow(dt, 4) / 4.0;
        const double npv = ppv + dt * pvv + q * std::pow(dt, 3) / 2.0;
        const double nvv = pvv + q * dt * dt;
        ppp = npp;
        ppv = npv;
        pvv = nvv;
    }

    void update(double z, double r) {
        const double s = ppp + r;
        const double kp = ppp / s;
        const double kv = ppv / s;
        const double innov = z - pos;
        pos += kp * innov;
        vel += kv * innov;
        const double npp = (1.0 - kp) * ppp;
        const double npv = (1.0 - kp) * ppv;
        const double nvv = pvv - kv * ppv;
        ppp = npp;
        ppv = npv;
        pvv = nvv;
    }
};

/// Exact posterior cardinality of an IID-cluster prior after one scan, enumerating every
/// subset S of measurements declared target-originated:
///   p(n|Z) ∝ p(n) sum_S [n!/(n-|S|)!] pd^|S| (1-pd)^(n-|S|) prod_{z in S} qbar(z)
///             * pK(M-|S|) (M-|S|)! prod_{z not in S} c(z)
/// with qbar(z) the predicted single-target measurement density, pK the clutter-count pmf and
/// c the clutter spatial pdf.
inline std::vector<double> cardinality_by_association(const std::vector<double>& prior,
                                                      const std::vector<double>& qbar, double pd,
                                                      const std::function<double(std::size_t)>& clutter_pmf,
                                                      double clutter_pdf) {
    const std::size_t m = qbar.size();
    std::vector<double> post(prior.size(), 0.0);
    for (std::size_t n = 0; n < prior.size(); ++n) {
        double lik = 0.0;
        for (std::size_t mask = 0; mask < (std::size_t{1} << m); ++mask) {
            std::size_t d = 0;
            double prod = 1.0;
            for (std::size_t i = 0; i < m; ++i) {
                if (mask & (std::size_t{1} << i)) {
                    ++d;
                    prod *= qbar[i];
                } else {
                    prod *= clutter_pdf;
                }
            }
            if (d > n) continue;
            double assignments = 1.0;
            for (std::size_t a = 0; a < d; ++a) assignments *= static_cast<double>(n - a);
            double clutter_fact = 1.0;
            for (std::size_t a = 2; a <= m - d; ++a) clutter_fact *= static_cast<double>(a);
            lik += assignments * std::pow(pd, static_cast<double>(d)) * std::pow(1.0 - pd, static_cast<double>(n - d)) *
                   prod * clutter_pmf(m - d) * clutter_fact;
        }
        post[n] = prior[n] * lik;
    }
    const double total = std::accumulate(post.begin(), post.end(), 0.0);
    for (double& p : post) p /= total;
    return post;
}

}  // namespace oracle
