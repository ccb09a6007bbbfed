#pragma once

#include "spawncphd/cardinality.hpp"
#include "spawncphd/errors.hpp"
#include "spawncphd/gaussian.hpp"

#include <cmath>
#include <string>
#include <type_traits>
#include <variant>
#include <vector>

namespace spawncphd {

/// One term of the spawned-object spatial kernel N(.; F_b x + d_b, Q_b).
struct SpawnTerm {
    double weight = 1.0;
    StateMatrix transition = StateMatrix::Identity();
    StateVector offset = StateVector::Zero();
    StateMatrix noise = StateMatrix::Zero();
};

struct SpawnSpatialModel {
    std::vector<SpawnTerm> terms;

    /// Single term centred on the parent, with independent position/velocity noise.
    static SpawnSpatialModel centred(double sigma_pos, double sigma_vel) {
        SpawnTerm term;
        term.noise.diagonal() << sigma_pos * sigma_pos, sigma_pos * sigma_pos,
            sigma_vel * sigma_vel, sigma_vel * sigma_vel;
        return SpawnSpatialModel{{term}};
    }

    void validate() const {
        if (terms.empty()) throw InvalidModelError("spawn spatial model needs at least one term");
        double total = 0.0;
        for (const auto& t : terms) {
            if (!(t.weight >= 0.0)) throw InvalidModelError("spawn term weight must be nonnegative");
            if (!is_psd(t.noise)) throw InvalidModelError("spawn term noise is not PSD");
            total += t.weight;
        }
        if (std::abs(total - 1.0) > 1e-12)
            throw InvalidModelError("spawn term weights must sum to 1");
    }
};

struct BernoulliSpawn {
    double probability = 0.0;
};

struct PoissonSpawn {
    double rate = 0.0;
};

/// Empty with probability 1 - p, otherwise Poisson(rate) daughters.
struct ZeroInflatedPoissonSpawn {
    double probability = 0.0;
    double rate = 0.0;
};

using SpawnLaw = std::variant<BernoulliSpawn, PoissonSpawn, ZeroInflatedPoissonSpawn>;

/// Offspring law plus the spatial kernel shared by all spawned daughters.
class SpawnModel {
public:
    SpawnModel(SpawnLaw law, SpawnSpatialModel spatial)
        : law_(law), spatial_(std::move(spatial)) {
        std::visit(
            [](const auto& l) {
                using L = std::decay_t<decltype(l)>;
                if constexpr (std::is_same_v<L, BernoulliSpawn>) {
                    check_probability(l.probability);
                } else if constexpr (std::is_same_v<L, PoissonSpawn>) {
                    check_rate(l.rate);
                } else {
                    check_probability(l.probability);
                    check_rate(l.rate);
                }
            },
            law_);
        spatial_.validate();
    }

    [[nodiscard]] const SpawnLaw& law() const { return law_; }
    [[nodiscard]] const SpawnSpatialModel& spatial() const { return spatial_; }

    [[nodiscard]] std::string name() const {
        return std::visit(
            [](const auto& l) -> std::string {
                using L = std::decay_t<decltype(l)>;
                if constexpr (std::is_same_v<L, BernoulliSpawn>) return "bernoulli";
                else if constexpr (std::is_same_v<L, PoissonSpawn>) return "poisson";
                else return "zip";
            },
            law_);
    }

private:
    static void check_probability(double p) {
        if (!(p >= 0.0 && p <= 1.0)) throw InvalidModelError("spawn probability must lie in [0, 1]");
    }
    static void check_rate(double r) {
        if (!(r >= 0.0) || !std::isfinite(r)) throw InvalidModelError("spawn rate must be nonnegative");
    }

    SpawnLaw law_;
    SpawnSpatialModel spatial_;
};

/// Expected number of daughters per parent.
inline double spawn_alpha(const SpawnModel& model) {
    return std::visit(
        [](const auto& l) -> double {
            using L = std::decay_t<decltype(l)>;
            if constexpr (std::is_same_v<L, BernoulliSpawn>) return l.probability;
            else if constexpr (std::is_same_v<L, PoissonSpawn>) return l.rate;
            else return l.probability * l.rate;
        },
        model.law());
}

namespace detail {

inline double bernoulli_bell(double ps, double pb, std::size_t i) {
    switch (i) {
        case 0: return (1.0 - ps) * (1.0 - pb);
        case 1: return ps * (1.0 - pb) + (1.0 - ps) * pb;
        case 2: return 2.0 * ps * pb;
        default: return 0.0;
    }
}

// lambda^(i-1) e^-lambda [(1 - ps) lambda + i ps], split so that i = 0 never forms 1/lambda.
inline double poisson_bell(double ps, double lambda, std::size_t i) {
    const double e = std::exp(-lambda);
    const double k = static_cast<double>(i);
    const double spawn_only = (1.0 - ps) * std::pow(lambda, k) * e;
    if (i == 0) return spawn_only;
    return spawn_only + k * ps * std::pow(lambda, k - 1.0) * e;
}

inline double zip_bell(double ps, double pb, double lambda, std::size_t i) {
    const double e = std::exp(-lambda);
    const double quiet = 1.0 - pb + pb * e;
    switch (i) {
        case 0: return (1.0 - ps) * quiet;
        case 1: return (1.0 - ps) * pb * e * lambda + ps * quiet;
        default: return pb * poisson_bell(ps, lambda, i);
    }
}

}  // namespace detail

/// b_0..b_n_max for uniform survival probability `p_s`.
inline BellCoefficients bell_coefficients(const SpawnModel& model, double p_s, std::size_t n_max) {
    if (!(p_s >= 0.0 && p_s <= 1.0)) throw DomainError("bell_coefficients: p_s must lie in [0, 1]");
    BellCoefficients out;
    out.b.resize(n_max + 1);
    for (std::size_t i = 0; i <= n_max; ++i) {
        out.b[i] = std::visit(
            [&](const auto& l) -> double {
                using L = std::decay_t<decltype(l)>;
                if constexpr (std::is_same_v<L, BernoulliSpawn>)
                    return detail::bernoulli_bell(p_s, l.probability, i);
                else if constexpr (std::is_same_v<L, PoissonSpawn>)
                    return detail::poisson_bell(p_s, l.rate, i);
                else
                    return detail::zip_bell(p_s, l.probability, l.rate, i);
            },
            model.law());
    }
    double mass = 0.0;
    double fact = 1.0;
    for (std::size_t i = 0; i <= n_max; ++i) {
        if (i > 0) fact *= static_cast<double>(i);
        mass += out.b[i] / fact;
    }
    out.tail_mass = 1.0 - mass;
    return out;
}

/// Per-parent offspring pmf b_i / i! (survivor included).
inline std::vector<double> offspring_pmf(const BellCoefficients& bell) {
    std::vector<double> pmf(bell.b.size());
    double fact = 1.0;
    for (std::size_t i = 0; i < bell.b.size(); ++i) {
        if (i > 0) fact *= static_cast<double>(i);
        pmf[i] = bell.b[i] / fact;
    }
    return pmf;
}

/// Spawned-daughter intensity: every posterior component through every spatial term,
/// weighted by alpha * w * w_b. Posterior-major ordering.
inline GaussianMixture spawn_intensity(const GaussianMixture& posterior, const SpawnModel& model) {
    const double alpha = spawn_alpha(model);
    const auto& terms = model.spatial().terms;
    GaussianMixture out;
    out.components.reserve(posterior.size() * terms.size());
    for (const auto& parent : posterior.components) {
        for (const auto& term : terms) {
            out.components.push_back(
                affine_transform(parent, term.transition, term.offset, term.noise, alpha * term.weight));
        }
    }
    return out;
}

}  // namespace spawncphd
