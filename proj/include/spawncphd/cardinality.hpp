#pragma once

#include "spawncphd/errors.hpp"

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <span>
#include <string>
#include <vector>

namespace spawncphd {

/// Probability of n targets for n = 0..n_max.
class CardinalityDistribution {
public:
    CardinalityDistribution() : probs_{1.0} {}

    /// Validates nonnegativity and unit mass (within 1e-9).
    explicit CardinalityDistribution(std::vector<double> probs) : probs_(std::move(probs)) {
        if (probs_.empty()) throw DomainError("cardinality distribution needs at least one entry");
        double total = 0.0;
        for (double p : probs_) {
            if (!(p >= 0.0) || !std::isfinite(p))
                throw DomainError("cardinality probabilities must be finite and nonnegative");
            total += p;
        }
        if (std::abs(total - 1.0) > 1e-9)
            throw DomainError("cardinality probabilities sum to " + std::to_string(total));
    }

    static CardinalityDistribution delta(std::size_t n, std::size_t n_max) {
        if (n > n_max) throw DomainError("delta: n exceeds n_max");
        std::vector<double> probs(n_max + 1, 0.0);
        probs[n] = 1.0;
        return CardinalityDistribution(std::move(probs));
    }

    /// Builds from nonnegative unnormalized mass. Returns the distribution and stores the
    /// mass deficit 1 - sum(mass) in `deficit` when non-null.
    static CardinalityDistribution normalized(std::vector<double> mass, double* deficit = nullptr) {
        double total = 0.0;
        for (double p : mass) total += p;
        if (!(total > 0.0) || !std::isfinite(total))
            throw NumericalError("cardinality mass vanished or diverged during normalization");
        if (deficit) *deficit = 1.0 - total;
        for (double& p : mass) p /= total;
        return CardinalityDistribution(std::move(mass));
    }

    [[nodiscard]] std::size_t n_max() const { return probs_.size() - 1; }
    [[nodiscard]] std::size_t size() const { return probs_.size(); }
    [[nodiscard]] double operator[](std::size_t n) const { return probs_[n]; }
    [[nodiscard]] const std::vector<double>& probs() const { return probs_; }

    [[nodiscard]] double mean() const {
        double m = 0.0;
        for (std::size_t n = 0; n < probs_.size(); ++n) m += static_cast<double>(n) * probs_[n];
        return m;
    }

private:
    std::vector<double> probs_;
};

/// Per-parent factorial offspring weights b_0..b_n_max: the offspring pmf is b_i / i!.
struct BellCoefficients {
    std::vector<double> b;
    /// 1 - sum_i b_i / i! over the retained indices.
    double tail_mass = 0.0;
};

/// Output of a truncated cardinality prediction.
struct CardinalityPrediction {
    CardinalityDistribution distribution;
    /// Mass lost to truncation at n_max before renormalization.
    double truncated_mass = 0.0;
};

namespace detail {

inline std::vector<double> factorials(std::size_t n) {
    std::vector<double> f(n + 1, 1.0);
    for (std::size_t i = 1; i <= n; ++i) f[i] = f[i - 1] * static_cast<double>(i);
    return f;
}

inline std::vector<std::vector<double>> binomials(std::size_t n) {
    std::vector<std::vector<double>> c(n + 1, std::vector<double>(n + 1, 0.0));
    for (std::size_t i = 0; i <= n; ++i) {
        c[i][0] = 1.0;
        for (std::size_t k = 1; k <= i; ++k) c[i][k] = c[i - 1][k - 1] + (k < i ? c[i - 1][k] : 0.0);
    }
    return c;
}

}  // namespace detail

/// Table B[n][j] of partial Bell polynomials for 0 <= j <= n <= n_max.
/// `x[i - 1]` holds x_i; missing entries are treated as zero.
inline std::vector<std::vector<double>> partial_bell_table(std::size_t n_max,
                                                           std::span<const double> x) {
    const auto binom = detail::binomials(n_max);
    std::vector<std::vector<double>> table(n_max + 1, std::vector<double>(n_max + 1, 0.0));
    table[0][0] = 1.0;
    for (std::size_t n = 1; n <= n_max; ++n) {
        for (std::size_t j = 1; j <= n; ++j) {
            double sum = 0.0;
            for (std::size_t i = 1; i <= n - j + 1; ++i) {
                const double xi = i <= x.size() ? x[i - 1] : 0.0;
                if (xi == 0.0) continue;
                sum += binom[n - 1][i - 1] * xi * table[n - i][j - 1];
            }
            table[n][j] = sum;
        }
    }
    return table;
}

/// Partial Bell polynomial B_{n,j}(x_1, ..., x_{n-j+1}); `x[0]` is x_1.
inline double partial_bell(int n, int j, std::span<const double> x) {
    if (n < 0 || j < 0 || j > n) throw DomainError("partial_bell: requires 0 <= j <= n");
    const auto table = partial_bell_table(static_cast<std::size_t>(n), x);
    return table[static_cast<std::size_t>(n)][static_cast<std::size_t>(j)];
}

/// Predicted cardinality of a branching population with per-parent factorial offspring
/// weights b. Terms with n > n_max are dropped and the result renormalized.
inline CardinalityPrediction predict_cardinality(const CardinalityDistribution& rho,
                                                 const BellCoefficients& bell) {
    const std::size_t n_max = rho.n_max();
    std::vector<double> b(n_max + 1, 0.0);
    std::copy_n(bell.b.begin(), std::min(bell.b.size(), b.size()), b.begin());
    const double b0 = b[0];

    const auto fact = detail::factorials(n_max);
    const auto bell_table = partial_bell_table(n_max, std::span<const double>(b).subspan(1));

    // inner[j] * n! = sum_{m >= j} m! / (m - j)! rho(m) b0^(m - j)
    std::vector<double> inner(n_max + 1, 0.0);
    for (std::size_t j = 0; j <= n_max; ++j) {
        double sum = 0.0;
        for (std::size_t m = j; m <= n_max; ++m) {
            if (rho[m] == 0.0) continue;
            sum += fact[m] / fact[m - j] * rho[m] * std::pow(b0, static_cast<double>(m - j));
        }
        inner[j] = sum;
    }

    std::vector<double> mass(n_max + 1, 0.0);
    for (std::size_t n = 0; n <= n_max; ++n) {
        double sum = 0.0;
        for (std::size_t j = 0; j <= n; ++j) sum += bell_table[n][j] * inner[j];
        mass[n] = sum / fact[n];
    }
    double deficit = 0.0;
    auto dist = CardinalityDistribution::normalized(std::move(mass), &deficit);
    return {std::move(dist), deficit};
}

/// Independent route: coefficients of sum_m rho(m) g(z)^m with g the offspring pgf,
/// by truncated polynomial composition.
inline CardinalityDistribution pgf_compose_oracle(const CardinalityDistribution& rho,
                                                  std::span<const double> offspring_pmf) {
    const std::size_t n_max = rho.n_max();
    std::vector<double> g(n_max + 1, 0.0);
    for (std::size_t i = 0; i < std::min(offspring_pmf.size(), g.size()); ++i) g[i] = offspring_pmf[i];

    std::vector<double> power(n_max + 1, 0.0);
    power[0] = 1.0;
    std::vector<double> result(n_max + 1, 0.0);
    std::vector<double> next(n_max + 1);
    for (std::size_t m = 0; m <= n_max; ++m) {
        for (std::size_t k = 0; k <= n_max; ++k) result[k] += rho[m] * power[k];
        std::fill(next.begin(), next.end(), 0.0);
        for (std::size_t a = 0; a <= n_max; ++a) {
            if (power[a] == 0.0) continue;
            for (std::size_t c = 0; a + c <= n_max; ++c) next[a + c] += power[a] * g[c];
        }
        power.swap(next);
    }
    return CardinalityDistribution::normalized(std::move(result));
}

/// e_0..e_d of `values`, with d = min(size, max_degree).
inline std::vector<double> elementary_symmetric(std::span<const double> values,
                                                std::size_t max_degree = static_cast<std::size_t>(-1)) {
    const std::size_t degree = std::min(values.size(), max_degree);
    std::vector<double> e(degree + 1, 0.0);
    e[0] = 1.0;
    std::size_t filled = 0;
    for (double v : values) {
        filled = std::min(filled + 1, degree);
        for (std::size_t k = filled; k >= 1; --k) e[k] += v * e[k - 1];
    }
    return e;
}

/// Mode of the distribution; ties go to the smaller count.
inline std::size_t map_estimate(const CardinalityDistribution& rho) {
    std::size_t best = 0;
    for (std::size_t n = 1; n < rho.size(); ++n)
        if (rho[n] > rho[best]) best = n;
    return best;
}

}  // namespace spawncphd
