#include "spawncphd/spawning.hpp"

#include <gtest/gtest.h>

#include <cmath>
#include <numeric>
#include <random>

using namespace spawncphd;

namespace {

const SpawnSpatialModel kKernel = SpawnSpatialModel::centred(12.0, 12.0);

// Offspring pmf by multiplying the survivor pgf (1 - ps + ps z) with the daughter pmf.
std::vector<double> offspring_by_convolution(double ps, const std::vector<double>& daughters) {
    std::vector<double> out(daughters.size() + 1, 0.0);
    for (std::size_t k = 0; k < daughters.size(); ++k) {
        out[k] += (1.0 - ps) * daughters[k];
        out[k + 1] += ps * daughters[k];
    }
    return out;
}

std::vector<double> poisson_pmf(double rate, std::size_t n) {
    std::vector<double> p(n + 1);
    for (std::size_t k = 0; k <= n; ++k) p[k] = std::exp(-rate + k * std::log(rate) - std::lgamma(k + 1.0));
    return p;
}

}  // namespace

TEST(SpawnAlpha, TableValues) {
    EXPECT_DOUBLE_EQ(spawn_alpha({BernoulliSpawn{0.01}, kKernel}), 0.01);
    EXPECT_DOUBLE_EQ(spawn_alpha({PoissonSpawn{0.025}, kKernel}), 0.025);
    EXPECT_DOUBLE_EQ(spawn_alpha({ZeroInflatedPoissonSpawn{0.01, 2.5}, kKernel}), 0.025);
}

TEST(BellCoefficients, BernoulliValues) {
    const auto bell = bell_coefficients({BernoulliSpawn{0.01}, kKernel}, 0.99, 20);
    EXPECT_NEAR(bell.b[0], 0.0099, 1e-15);
    EXPECT_NEAR(bell.b[1], 0.9802, 1e-15);
    EXPECT_NEAR(bell.b[2], 0.0198, 1e-15);
    for (std::size_t i = 3; i <= 20; ++i) EXPECT_EQ(bell.b[i], 0.0);
    EXPECT_NEAR(bell.tail_mass, 0.0, 1e-15);
}

TEST(BellCoefficients, PoissonWithCertainDeath) {
    const double lambda = 0.025;
    const auto bell = bell_coefficients({PoissonSpawn{lambda}, kKernel}, 0.0, 12);
    for (std::size_t i = 0; i <= 12; ++i)
        EXPECT_NEAR(bell.b[i], std::pow(lambda, static_cast<double>(i)) * std::exp(-lambda), 1e-15);
}

TEST(BellCoefficients, ZeroRatePoissonIsPureSurvival) {
    const auto bell = bell_coefficients({PoissonSpawn{0.0}, kKernel}, 0.99, 6);
    EXPECT_NEAR(bell.b[0], 0.01, 1e-16);
    EXPECT_NEAR(bell.b[1], 0.99, 1e-16);
    for (std::size_t i = 2; i <= 6; ++i) EXPECT_EQ(bell.b[i], 0.0);
}

TEST(BellCoefficients, ZipWithCertainSpawnEqualsPoisson) {
    for (double lambda : {0.0, 0.025, 0.7, 2.5, 9.0}) {
        for (double ps : {0.0, 0.5, 0.99, 1.0}) {
            const auto zip = bell_coefficients({ZeroInflatedPoissonSpawn{1.0, lambda}, kKernel}, ps, 20);
            const auto poi = bell_coefficients({PoissonSpawn{lambda}, kKernel}, ps, 20);
            for (std::size_t i = 0; i <= 20; ++i)
                EXPECT_LE(std::abs(zip.b[i] - poi.b[i]), 1e-15 * std::max(std::abs(poi.b[i]), 1e-300))
                    << "lambda " << lambda << " ps " << ps << " i " << i;
        }
    }
}

TEST(BellCoefficients, ZipWithHugeRateKeepsOnlyQuietMass) {
    const auto bell = bell_coefficients({ZeroInflatedPoissonSpawn{0.01, 50.0}, kKernel}, 0.99, 20);
    EXPECT_NEAR(bell.b[0], 0.01 * 0.99, 1e-15);
}

TEST(BellCoefficients, MatchSurvivorDaughterConvolution) {
    std::mt19937_64 rng(4);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    const std::size_t n = 15;
    for (int trial = 0; trial < 50; ++trial) {
        const double ps = u(rng), pb = u(rng), lambda = 3.0 * u(rng);
        const std::vector<double> bern{1.0 - pb, pb};
        auto zip = poisson_pmf(lambda, n);
        for (double& p : zip) p *= pb;
        zip[0] += 1.0 - pb;
        const std::vector<std::pair<SpawnModel, std::vector<double>>> cases{
            {{BernoulliSpawn{pb}, kKernel}, offspring_by_convolution(ps, bern)},
            {{PoissonSpawn{lambda}, kKernel}, offspring_by_convolution(ps, poisson_pmf(lambda, n))},
            {{ZeroInflatedPoissonSpawn{pb, lambda}, kKernel}, offspring_by_convolution(ps, zip)},
        };
        for (const auto& [model, expected] : cases) {
            const auto pmf = offspring_pmf(bell_coefficients(model, ps, n));
            for (std::size_t i = 0; i <= n; ++i) {
                const double e = i < expected.size() ? expected[i] : 0.0;
                EXPECT_NEAR(pmf[i], e, 1e-14) << model.name() << " i " << i;
            }
        }
    }
}

TEST(BellCoefficients, OffspringPmfIsAProbability) {
    std::mt19937_64 rng(6);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    for (int trial = 0; trial < 100; ++trial) {
        const double ps = u(rng), pb = u(rng), lambda = 4.0 * u(rng);
        for (const SpawnModel& model : {SpawnModel{BernoulliSpawn{pb}, kKernel}, SpawnModel{PoissonSpawn{lambda}, kKernel},
                                        SpawnModel{ZeroInflatedPoissonSpawn{pb, lambda}, kKernel}}) {
            const auto bell = bell_coefficients(model, ps, 40);
            const auto pmf = offspring_pmf(bell);
            for (double p : pmf) EXPECT_GE(p, 0.0);
            EXPECT_NEAR(std::accumulate(pmf.begin(), pmf.end(), 0.0), 1.0, 1e-12);
            EXPECT_NEAR(bell.tail_mass, 0.0, 1e-12);
        }
    }
}

TEST(SpawnModel, RejectsInvalidParameters) {
    EXPECT_THROW((SpawnModel{BernoulliSpawn{1.5}, kKernel}), InvalidModelError);
    EXPECT_THROW((SpawnModel{PoissonSpawn{-0.1}, kKernel}), InvalidModelError);
    EXPECT_THROW((SpawnModel{ZeroInflatedPoissonSpawn{-0.1, 1.0}, kKernel}), InvalidModelError);
    SpawnSpatialModel bad = kKernel;
    bad.terms[0].weight = 0.5;
    EXPECT_THROW((SpawnModel{PoissonSpawn{0.1}, bad}), InvalidModelError);
    EXPECT_THROW(bell_coefficients({PoissonSpawn{0.1}, kKernel}, 1.2, 5), DomainError);
}

TEST(SpawnIntensity, EmptyPosterior) {
    EXPECT_TRUE(spawn_intensity(GaussianMixture{}, {PoissonSpawn{0.025}, kKernel}).empty());
}

TEST(SpawnIntensity, SingleParent) {
    GaussianComponent parent;
    parent.weight = 1.0;
    parent.mean << 10, 20, 1, -1;
    parent.cov = 4.0 * StateMatrix::Identity();
    const auto out = spawn_intensity(GaussianMixture{{parent}}, {ZeroInflatedPoissonSpawn{0.01, 2.5}, kKernel});
    ASSERT_EQ(out.size(), 1u);
    EXPECT_DOUBLE_EQ(out.components[0].weight, 0.025);
    EXPECT_EQ(out.components[0].mean, parent.mean);
    EXPECT_DOUBLE_EQ(out.components[0].cov(0, 0), 4.0 + 144.0);
    EXPECT_DOUBLE_EQ(out.components[0].cov(3, 3), 4.0 + 144.0);
}

TEST(SpawnIntensity, MassAndComponentCount) {
    std::mt19937_64 rng(7);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    SpawnSpatialModel kernel;
    for (int t = 0; t < 3; ++t) {
        SpawnTerm term;
        term.weight = t == 2 ? 0.5 : 0.25;
        term.offset.setConstant(static_cast<double>(t));
        term.noise = (t + 1.0) * StateMatrix::Identity();
        kernel.terms.push_back(term);
    }
    const SpawnModel model{PoissonSpawn{0.3}, kernel};
    for (int trial = 0; trial < 30; ++trial) {
        GaussianMixture post;
        for (int j = 0; j < 1 + trial; ++j) {
            GaussianComponent c;
            c.weight = u(rng);
            c.mean.setConstant(u(rng));
            c.cov = StateMatrix::Identity();
            post.components.push_back(c);
        }
        const auto out = spawn_intensity(post, model);
        EXPECT_EQ(out.size(), post.size() * 3);
        EXPECT_NEAR(out.total_weight(), 0.3 * post.total_weight(), 1e-14 * post.total_weight());
        // Posterior-major ordering.
        EXPECT_EQ(out.components[1].mean, post.components[0].mean + kernel.terms[1].offset);
    }
}
