#include "spawncphd/metrics.hpp"

#include "oracles.hpp"

#include <gtest/gtest.h>

#include <random>

using namespace spawncphd;

namespace {

Eigen::VectorXd pt(double x, double y) {
    Eigen::VectorXd v(2);
    v << x, y;
    return v;
}

PointSet random_set(std::mt19937_64& rng, std::size_t n, double spread) {
    std::uniform_real_distribution<double> u(-spread, spread);
    PointSet s;
    for (std::size_t i = 0; i < n; ++i) s.push_back(pt(u(rng), u(rng)));
    return s;
}

CardinalityDistribution random_distribution(std::mt19937_64& rng, std::size_t n_max) {
    std::uniform_real_distribution<double> u(0.0, 1.0);
    std::vector<double> m(n_max + 1);
    for (double& v : m) v = u(rng) < 0.3 ? 0.0 : u(rng);
    m[0] += 1e-3;
    return CardinalityDistribution::normalized(m);
}

}  // namespace

TEST(Ospa, Examples) {
    EXPECT_NEAR(ospa({pt(0, 0)}, {pt(30, 40)}, 100.0), 50.0, 1e-12);
    EXPECT_EQ(ospa({}, {pt(1, 2)}, 100.0), 100.0);
    EXPECT_EQ(ospa({pt(1, 2)}, {}, 100.0), 100.0);
    EXPECT_EQ(ospa({}, {}, 100.0), 0.0);
    EXPECT_EQ(ospa({pt(1, 2), pt(3, 4)}, {pt(3, 4), pt(1, 2)}, 100.0), 0.0);
    // One exact match and one missing point: sqrt((0 + c^2) / 2).
    EXPECT_NEAR(ospa({pt(0, 0)}, {pt(0, 0), pt(500, 0)}, 100.0), 100.0 / std::sqrt(2.0), 1e-12);
    EXPECT_NEAR(ospa({pt(0, 0)}, {pt(1000, 0)}, 100.0), 100.0, 1e-12);
}

TEST(Ospa, RejectsNonPositiveCutoff) {
    EXPECT_THROW(ospa({pt(0, 0)}, {pt(1, 1)}, 0.0), DomainError);
    EXPECT_THROW(ospa({pt(0, 0)}, {pt(1, 1)}, -5.0), DomainError);
}

TEST(Ospa, MatchesPermutationSearchAndAxioms) {
    std::mt19937_64 rng(1);
    std::uniform_int_distribution<std::size_t> size(0, 6);
    for (int trial = 0; trial < 2000; ++trial) {
        const auto x = random_set(rng, size(rng), 150.0);
        const auto y = random_set(rng, size(rng), 150.0);
        const double c = 100.0;
        const double d = ospa(x, y, c);
        EXPECT_NEAR(d, oracle::ospa_by_permutation(x, y, c), 1e-9);
        EXPECT_NEAR(d, ospa(y, x, c), 1e-12);
        EXPECT_GE(d, 0.0);
        EXPECT_LE(d, c);
        EXPECT_NEAR(ospa(x, x, c), 0.0, 1e-12);
    }
}

TEST(Assignment, MatchesBruteForce) {
    std::mt19937_64 rng(2);
    std::uniform_real_distribution<double> u(0.0, 10.0);
    for (int trial = 0; trial < 300; ++trial) {
        const int rows = 1 + trial % 5, cols = rows + trial % 3;
        Eigen::MatrixXd cost(rows, cols);
        for (int i = 0; i < rows; ++i)
            for (int j = 0; j < cols; ++j) cost(i, j) = u(rng);
        const auto a = solve_assignment(cost);
        double check = 0.0;
        std::vector<bool> used(static_cast<std::size_t>(cols), false);
        for (int i = 0; i < rows; ++i) {
            const auto j = a.row_to_col[static_cast<std::size_t>(i)];
            EXPECT_FALSE(used[j]);
            used[j] = true;
            check += cost(i, static_cast<Eigen::Index>(j));
        }
        EXPECT_NEAR(check, a.cost, 1e-12);
        std::vector<int> perm(static_cast<std::size_t>(cols));
        std::iota(perm.begin(), perm.end(), 0);
        double best = 1e300;
        do {
            double s = 0.0;
            for (int i = 0; i < rows; ++i) s += cost(i, perm[static_cast<std::size_t>(i)]);
            best = std::min(best, s);
        } while (std::next_permutation(perm.begin(), perm.end()));
        EXPECT_NEAR(a.cost, best, 1e-9);
    }
    EXPECT_THROW(solve_assignment(Eigen::MatrixXd::Zero(3, 2)), DomainError);
}

TEST(Hellinger, Examples) {
    const auto ideal = ideal_cardinality(2, 4);
    EXPECT_EQ(hellinger(ideal, ideal), 0.0);
    EXPECT_NEAR(hellinger(ideal_cardinality(1, 4), ideal), 1.0, 1e-15);
    // (0.5, 0.5) against (1, 0): sqrt(2 - sqrt(2)) / sqrt(2).
    EXPECT_NEAR(hellinger(CardinalityDistribution({0.5, 0.5}), CardinalityDistribution({1.0, 0.0})), 0.5412, 1e-4);
    const CardinalityDistribution p({0.0, 0.3, 0.7, 0.0, 0.0});
    EXPECT_NEAR(hellinger(p, ideal), 0.4042, 1e-4);
    const CardinalityDistribution q({0.0, 0.8, 0.2, 0.0, 0.0});
    EXPECT_NEAR(hellinger(q, ideal), std::sqrt(1.0 - std::sqrt(0.2)), 1e-12);
    EXPECT_NEAR(hellinger(q, ideal), 0.7434, 1e-4);
    EXPECT_THROW(hellinger(ideal, ideal_cardinality(1, 3)), DomainError);
}

TEST(Hellinger, BoundsSymmetryAndTriangle) {
    std::mt19937_64 rng(3);
    for (int trial = 0; trial < 2000; ++trial) {
        const auto p = random_distribution(rng, 10);
        const auto q = random_distribution(rng, 10);
        const auto r = random_distribution(rng, 10);
        const double pq = hellinger(p, q), qr = hellinger(q, r), pr = hellinger(p, r);
        EXPECT_GE(pq, 0.0);
        EXPECT_LE(pq, 1.0);
        EXPECT_EQ(pq, hellinger(q, p));
        EXPECT_LE(pr, pq + qr + 1e-12);
        EXPECT_NEAR(hellinger(p, p), 0.0, 1e-15);
    }
}

TEST(IdealCardinality, IsDelta) {
    const auto d = ideal_cardinality(3, 20);
    EXPECT_EQ(d.size(), 21u);
    EXPECT_EQ(d[3], 1.0);
    EXPECT_EQ(d.mean(), 3.0);
    EXPECT_THROW(ideal_cardinality(21, 20), DomainError);
}
