#ifndef RCBO_DYNAMICS_HPP
#define RCBO_DYNAMICS_HPP

#include "rcbo/consensus.hpp"
#include "rcbo/domain.hpp"
#include "rcbo/objective.hpp"
#include "rcbo/random.hpp"
#include "rcbo/schedule.hpp"
#include "rcbo/types.hpp"

#include <cmath>
#include <cstdint>
#include <functional>
#include <optional>
#include <random>
#include <string>
#include <utility>
#include <vector>

namespace rcbo {

enum class Scheme { Penalty, Projection };

inline std::string to_string(Scheme s) { return s == Scheme::Penalty ? "penalty" : "projection"; }

inline Scheme parse_scheme(const std::string& s)
{
    if (s == "penalty") return Scheme::Penalty;
    if (s == "projection") return Scheme::Projection;
    throw ConfigError("unknown scheme '" + s + "' (expected penalty or projection)");
}

template <typename Scalar>
struct Ensemble {
    Particles<Scalar> positions; // d x N
    Scalar time = 0;
    Index step = 0;

    Index size() const { return positions.cols(); }
    Index dimension() const { return positions.rows(); }
};

template <typename Scalar>
struct SolverConfig {
    Scheme scheme = Scheme::Projection;
    Scalar alpha = 1e4;
    Schedule<Scalar> beta = Schedule<Scalar>::constant(1);
    Schedule<Scalar> sigma = Schedule<Scalar>::constant(4);
    std::optional<Schedule<Scalar>> repelling;
    Scalar h = 0.1;
    Index steps = 10;
    Index particles = 100;
    std::uint64_t seed = 0;
    std::optional<Scalar> penalty_epsilon;

    Scalar epsilon() const { return penalty_epsilon ? *penalty_epsilon : h; }

    void validate() const
    {
        if (!(alpha >= 0) || !std::isfinite(double(alpha))) throw ConfigError("alpha must be finite and >= 0");
        if (!(h > 0)) throw ConfigError("step size h must be positive");
        if (steps < 0) throw ConfigError("steps must be >= 0");
        if (particles < 1) throw ConfigError("particle count N must be >= 1");
        if (!(epsilon() > 0)) throw ConfigError("penalty epsilon must be positive");
        const Scalar t_end = h * Scalar(steps);
        if (!beta.nonnegative_on(t_end)) throw ConfigError("beta schedule must be nonnegative on [0, K h]");
        if (!sigma.nonnegative_on(t_end)) throw ConfigError("sigma schedule must be nonnegative on [0, K h]");
        if (repelling && !repelling->nonnegative_on(t_end))
            throw ConfigError("repelling schedule must be nonnegative on [0, K h]");
    }

    // Key/value snapshot for logs and report headers.
    std::vector<std::pair<std::string, std::string>> describe() const
    {
        auto num = [](double v) {
            char buf[64];
            std::snprintf(buf, sizeof buf, "%.17g", v);
            return std::string(buf);
        };
        std::vector<std::pair<std::string, std::string>> out{
            {"scheme", to_string(scheme)},
            {"alpha", num(double(alpha))},
            {"beta", beta.to_string()},
            {"sigma", sigma.to_string()},
            {"repelling", repelling ? repelling->to_string() : "off"},
            {"h", num(double(h))},
            {"steps", std::to_string(steps)},
            {"N", std::to_string(particles)},
            {"seed", std::to_string(seed)},
            {"epsilon", num(double(epsilon()))},
        };
        return out;
    }
};

// Per-particle, per-step Gaussian streams derived from one seed.
struct NoiseStreams {
    std::uint64_t seed = 0;

    CounterRng particle(Index i, Index step) const
    {
        return CounterRng(stream_key(seed, std::uint64_t(i), std::uint64_t(step)));
    }
    CounterRng initial() const { return CounterRng(stream_key(seed, ~0ULL, 0x696e6974ULL)); }
};

namespace detail {

template <typename Scalar>
Vector<Scalar> evaluate_all(const Objective<Scalar>& obj, const Particles<Scalar>& x)
{
    Vector<Scalar> f(x.cols());
    for (Index i = 0; i < x.cols(); ++i) f[i] = obj(x.col(i));
    return f;
}

// Pairwise Gaussian repulsion for every particle, (lambda/N) sum_j ...
template <typename Scalar>
Particles<Scalar> repelling_all(const Particles<Scalar>& x, Scalar lambda)
{
    const Index n = x.cols();
    Particles<Scalar> force = Particles<Scalar>::Zero(x.rows(), n);
    if (lambda == Scalar(0)) return force;
    Vector<Scalar> diff(x.rows());
    for (Index i = 0; i < n; ++i) {
        for (Index j = i + 1; j < n; ++j) {
            diff = x.col(i) - x.col(j);
            diff *= std::exp(-diff.squaredNorm() / 2);
            force.col(i) += diff;
            force.col(j) -= diff;
        }
    }
    return force * (lambda / Scalar(n));
}

// Euler increment b h + sigma Diag(x - c) dW for every particle, with all
// coefficients frozen at t_k and the consensus c taken from pre-step positions.
template <typename Scalar>
Particles<Scalar> cbo_increment(const Ensemble<Scalar>& ens, const SolverConfig<Scalar>& cfg,
                                const Objective<Scalar>& obj, const NoiseStreams& noise,
                                Vector<Scalar>* consensus_out = nullptr)
{
    const Particles<Scalar>& x = ens.positions;
    const Index n = x.cols();
    const Index d = x.rows();
    const Scalar t = cfg.h * Scalar(ens.step);
    const Scalar beta = cfg.beta(t);
    const Scalar sigma = cfg.sigma(t);
    const Scalar sqrt_h = std::sqrt(cfg.h);

    const Vector<Scalar> f = evaluate_all(obj, x);
    const Vector<Scalar> c = consensus(x, f, cfg.alpha);
    if (consensus_out) *consensus_out = c;

    Particles<Scalar> inc(d, n);
    if (cfg.repelling) inc = repelling_all(x, (*cfg.repelling)(t)) * cfg.h;
    else inc.setZero();

    std::normal_distribution<Scalar> gauss;
    for (Index i = 0; i < n; ++i) {
        CounterRng rng = noise.particle(i, ens.step);
        gauss.reset();
        for (Index k = 0; k < d; ++k) {
            const Scalar dev = x(k, i) - c[k];
            const Scalar dw = sqrt_h * gauss(rng);
            inc(k, i) += -beta * dev * cfg.h + sigma * dev * dw;
        }
    }
    return inc;
}

template <typename Scalar>
void require_finite(const Particles<Scalar>& x, Index step)
{
    if (!x.allFinite())
        throw NonFinite("non-finite particle coordinate after step " + std::to_string(step + 1));
}

template <typename Scalar>
void check_inputs(const Ensemble<Scalar>& ens, const Objective<Scalar>& obj, const FeasibleDomain<Scalar>& dom)
{
    require_dimension(dom.dimension(), obj.dimension);
    require_dimension(dom.dimension(), ens.dimension());
    if (ens.size() < 1) throw ConfigError("ensemble is empty");
}

} // namespace detail

// Y_{k+1} = Y_k + b h + sigma Diag(Y_k - c) dW - (h / eps) pi(Y_k).
template <typename Scalar>
Ensemble<Scalar> cbo_step_penalty(const Ensemble<Scalar>& ens, const SolverConfig<Scalar>& cfg,
                                  const Objective<Scalar>& obj, const FeasibleDomain<Scalar>& dom,
                                  const NoiseStreams& noise, Vector<Scalar>* consensus_out = nullptr)
{
    if (cfg.scheme != Scheme::Penalty) throw ConfigError("cbo_step_penalty requires the penalty scheme");
    detail::check_inputs(ens, obj, dom);
    const Particles<Scalar> inc = detail::cbo_increment(ens, cfg, obj, noise, consensus_out);
    const Scalar kappa = cfg.h / cfg.epsilon();

    Ensemble<Scalar> next{Particles<Scalar>(ens.dimension(), ens.size()), cfg.h * Scalar(ens.step + 1),
                          ens.step + 1};
    for (Index i = 0; i < ens.size(); ++i) {
        const auto x = ens.positions.col(i);
        if (dom.contains(x)) {
            next.positions.col(i) = x + inc.col(i);
        } else {
            // x - kappa (x - P(x)) written so that kappa = 1 yields P(x) exactly.
            next.positions.col(i) = ((1 - kappa) * x + kappa * dom.project(x)) + inc.col(i);
        }
    }
    detail::require_finite(next.positions, ens.step);
    return next;
}

// Euler predictor followed by projection onto the domain.
template <typename Scalar>
Ensemble<Scalar> cbo_step_projection(const Ensemble<Scalar>& ens, const SolverConfig<Scalar>& cfg,
                                     const Objective<Scalar>& obj, const FeasibleDomain<Scalar>& dom,
                                     const NoiseStreams& noise, Vector<Scalar>* consensus_out = nullptr)
{
    if (cfg.scheme != Scheme::Projection) throw ConfigError("cbo_step_projection requires the projection scheme");
    detail::check_inputs(ens, obj, dom);
    const Particles<Scalar> inc = detail::cbo_increment(ens, cfg, obj, noise, consensus_out);

    Ensemble<Scalar> next{Particles<Scalar>(ens.dimension(), ens.size()), cfg.h * Scalar(ens.step + 1),
                          ens.step + 1};
    Vector<Scalar> predicted(ens.dimension());
    for (Index i = 0; i < ens.size(); ++i) {
        predicted = ens.positions.col(i) + inc.col(i);
        if (!predicted.allFinite())
            throw NonFinite("non-finite particle coordinate after step " + std::to_string(ens.step + 1));
        next.positions.col(i) = dom.project(predicted);
    }
    return next;
}

template <typename Scalar>
Ensemble<Scalar> cbo_step(const Ensemble<Scalar>& ens, const SolverConfig<Scalar>& cfg, const Objective<Scalar>& obj,
                          const FeasibleDomain<Scalar>& dom, const NoiseStreams& noise,
                          Vector<Scalar>* consensus_out = nullptr)
{
    return cfg.scheme == Scheme::Penalty ? cbo_step_penalty(ens, cfg, obj, dom, noise, consensus_out)
                                         : cbo_step_projection(ens, cfg, obj, dom, noise, consensus_out);
}

template <typename Scalar>
struct CboResult {
    Ensemble<Scalar> final_ensemble;
    Vector<Scalar> final_consensus;
    std::vector<Vector<Scalar>> trace; // consensus at t_0, ..., t_K when requested
};

template <typename Scalar>
Ensemble<Scalar> initial_ensemble(const SolverConfig<Scalar>& cfg, const FeasibleDomain<Scalar>& dom)
{
    CounterRng rng = NoiseStreams{cfg.seed}.initial();
    return Ensemble<Scalar>{dom.sample_uniform(rng, cfg.particles), 0, 0};
}

// Samples N particles uniformly on the domain and advances K steps of the
// configured scheme. The result is a pure function of (cfg, obj, dom).
template <typename Scalar>
CboResult<Scalar> run_cbo(const SolverConfig<Scalar>& cfg, const Objective<Scalar>& obj,
                          const FeasibleDomain<Scalar>& dom, bool record_trace = false)
{
    cfg.validate();
    require_dimension(dom.dimension(), obj.dimension);
    const NoiseStreams noise{cfg.seed};

    CboResult<Scalar> result{initial_ensemble(cfg, dom), {}, {}};
    Vector<Scalar> c;
    for (Index k = 0; k < cfg.steps; ++k) {
        result.final_ensemble = cbo_step(result.final_ensemble, cfg, obj, dom, noise, &c);
        if (record_trace) result.trace.push_back(c);
    }
    const Particles<Scalar>& x = result.final_ensemble.positions;
    result.final_consensus = consensus(x, detail::evaluate_all(obj, x), cfg.alpha);
    if (record_trace) result.trace.push_back(result.final_consensus);
    return result;
}

// Mean-field Langevin dynamics with external potential U and interaction
// potential V. U and V themselves are only needed by the invariant-density
// oracle; stepping uses the gradients.
template <typename Scalar>
struct LangevinConfig {
    using Field = std::function<Vector<Scalar>(const ConstVectorRef<Scalar>&)>;
    using Potential = std::function<Scalar(const ConstVectorRef<Scalar>&)>;

    Field grad_U;
    Field grad_V; // empty means no interaction
    // Optional closed form of (1/N) sum_j grad V(x_i - x_j) for all columns at
    // once; when set it replaces the pairwise sum over grad_V.
    std::function<Particles<Scalar>(const Particles<Scalar>&)> interaction_drift;
    Potential U;
    Potential V;
    Scalar sigma_noise = 1;
    Scalar h = 1e-3;
    Index steps = 1000;
    Index particles = 100;
    std::uint64_t seed = 0;

    void validate() const
    {
        if (!grad_U) throw ConfigError("Langevin config requires grad_U");
        if (!(sigma_noise >= 0)) throw ConfigError("sigma_noise must be >= 0");
        if (!(h > 0)) throw ConfigError("step size h must be positive");
        if (steps < 0) throw ConfigError("steps must be >= 0");
        if (particles < 1) throw ConfigError("particle count N must be >= 1");
    }
};

// X_{k+1} = P(X_k - grad U(X_k) h - (1/N) sum_j grad V(X_k - X^j_k) h + sigma sqrt(h) xi).
template <typename Scalar>
Ensemble<Scalar> langevin_step_projection(const Ensemble<Scalar>& ens, const LangevinConfig<Scalar>& cfg,
                                          const FeasibleDomain<Scalar>& dom)
{
    require_dimension(dom.dimension(), ens.dimension());
    const Index n = ens.size();
    const Index d = ens.dimension();
    const NoiseStreams noise{cfg.seed};
    const Scalar sqrt_h = std::sqrt(cfg.h);
    const Particles<Scalar>& x = ens.positions;

    Ensemble<Scalar> next{Particles<Scalar>(d, n), cfg.h * Scalar(ens.step + 1), ens.step + 1};
    Particles<Scalar> batched;
    if (cfg.interaction_drift) {
        batched = cfg.interaction_drift(x);
        require_dimension(n, batched.cols());
    }
    Vector<Scalar> drift(d), predicted(d);
    std::normal_distribution<Scalar> gauss;
    for (Index i = 0; i < n; ++i) {
        drift = -cfg.grad_U(x.col(i));
        if (cfg.interaction_drift) {
            drift -= batched.col(i);
        } else if (cfg.grad_V) {
            Vector<Scalar> interaction = Vector<Scalar>::Zero(d);
            for (Index j = 0; j < n; ++j) interaction += cfg.grad_V(x.col(i) - x.col(j));
            drift -= interaction / Scalar(n);
        }
        CounterRng rng = noise.particle(i, ens.step);
        gauss.reset();
        for (Index k = 0; k < d; ++k) predicted[k] = x(k, i) + drift[k] * cfg.h + cfg.sigma_noise * sqrt_h * gauss(rng);
        if (!predicted.allFinite())
            throw NonFinite("non-finite particle coordinate after step " + std::to_string(ens.step + 1));
        next.positions.col(i) = dom.project(predicted);
    }
    return next;
}

} // namespace rcbo

#endif // RCBO_DYNAMICS_HPP
