#pragma once

#include "spawncphd/assignment.hpp"
#include "spawncphd/cardinality.hpp"
#include "spawncphd/errors.hpp"

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <vector>

namespace spawncphd {

/// Finite set of points of one sub-space (e.g. 2-D positions).
using PointSet = std::vector<Eigen::VectorXd>;

/// Second-order OSPA distance with cutoff `c`.
inline double ospa(const PointSet& x, const PointSet& y, double c) {
    if (!(c > 0.0)) throw DomainError("ospa: cutoff must be positive");
    const PointSet& small = x.size() <= y.size() ? x : y;
    const PointSet& large = x.size() <= y.size() ? y : x;
    const std::size_t m = small.size();
    const std::size_t n = large.size();
    if (n == 0) return 0.0;

    Eigen::MatrixXd cost(static_cast<Eigen::Index>(m), static_cast<Eigen::Index>(n));
    for (std::size_t i = 0; i < m; ++i) {
        for (std::size_t j = 0; j < n; ++j) {
            if (small[i].size() != large[j].size()) throw DomainError("ospa: points of different dimension");
            const double d = std::min(c, (small[i] - large[j]).norm());
            cost(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = d * d;
        }
    }
    const double matched = m > 0 ? solve_assignment(cost).cost : 0.0;
    const double total = matched + c * c * static_cast<double>(n - m);
    return std::min(c, std::sqrt(std::max(0.0, total) / static_cast<double>(n)));
}

/// Hellinger distance scaled to [0, 1].
inline double hellinger(const CardinalityDistribution& p, const CardinalityDistribution& q) {
    if (p.size() != q.size()) throw DomainError("hellinger: distributions have different support");
    double sum = 0.0;
    for (std::size_t i = 0; i < p.size(); ++i) {
        const double d = std::sqrt(p[i]) - std::sqrt(q[i]);
        sum += d * d;
    }
    return std::min(1.0, std::sqrt(sum) / std::sqrt(2.0));
}

/// Distribution with all mass on the true count.
inline CardinalityDistribution ideal_cardinality(std::size_t n_true, std::size_t n_max) {
    if (n_true > n_max) throw DomainError("ideal_cardinality: true count exceeds n_max");
    return CardinalityDistribution::delta(n_true, n_max);
}

}  // namespace spawncphd
