#pragma once

#include "spawncphd/errors.hpp"

#include <Eigen/Dense>

#include <cstddef>
#include <limits>
#include <vector>

namespace spawncphd {

struct Assignment {
    /// column assigned to each row
    std::vector<std::size_t> row_to_col;
    double cost = 0.0;
};

/// Minimum-cost assignment of every row to a distinct column (rows <= cols), using the
/// shortest augmenting path method with dual potentials. O(rows^2 * cols).
inline Assignment solve_assignment(const Eigen::MatrixXd& cost) {
    const auto rows = static_cast<std::size_t>(cost.rows());
    const auto cols = static_cast<std::size_t>(cost.cols());
    if (rows > cols) throw DomainError("solve_assignment: more rows than columns");
    Assignment out;
    if (rows == 0) return out;

    constexpr double inf = std::numeric_limits<double>::infinity();
    // 1-based with a virtual column 0 holding the row being inserted.
    std::vector<double> u(rows + 1, 0.0), v(cols + 1, 0.0);
    std::vector<std::size_t> match(cols + 1, 0), way(cols + 1, 0);
    for (std::size_t r = 1; r <= rows; ++r) {
        match[0] = r;
        std::size_t col = 0;
        std::vector<double> min_slack(cols + 1, inf);
        std::vector<bool> visited(cols + 1, false);
        do {
            visited[col] = true;
            const std::size_t row = match[col];
            double delta = inf;
            std::size_t next = 0;
            for (std::size_t c = 1; c <= cols; ++c) {
                if (visited[c]) continue;
                const double slack = cost(static_cast<Eigen::Index>(row - 1), static_cast<Eigen::Index>(c - 1)) - u[row] - v[c];
                if (slack < min_slack[c]) {
                    min_slack[c] = slack;
                    way[c] = col;
                }
                if (min_slack[c] < delta) {
                    delta = min_slack[c];
                    next = c;
                }
            }
            for (std::size_t c = 0; c <= cols; ++c) {
                if (visited[c]) {
                    u[match[c]] += delta;
                    v[c] -= delta;
                } else {
                    min_slack[c] -= delta;
                }
            }
            col = next;
        } while (match[col] != 0);
        do {
            const std::size_t prev = way[col];
            match[col] = match[prev];
            col = prev;
        } while (col != 0);
    }

    out.row_to_col.assign(rows, 0);
    for (std::size_t c = 1; c <= cols; ++c)
        if (match[c] != 0) out.row_to_col[match[c] - 1] = c - 1;
    for (std::size_t r = 0; r < rows; ++r)
        out.cost += cost(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(out.row_to_col[r]));
    return out;
}

}  // namespace spawncphd
