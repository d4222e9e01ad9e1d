#include "rcbo/merton.hpp"

#include "rcbo/random.hpp"

#include <cmath>
#include <limits>
#include <numbers>
#include <ostream>
#include <random>

namespace rcbo::merton {

double MertonParams::compensator() const { return std::expm1(m + 0.5 * gamma * gamma); }

bool MertonParams::in_search_box() const
{
    return sigma >= 0 && sigma <= 1 && m >= -1 && m <= 1 && gamma >= 0 && gamma <= 1;
}

double normal_cdf(double z) { return 0.5 * std::erfc(-z / std::numbers::sqrt2); }

namespace {

// Phi(num / den) with Phi(+-inf) = 1, 0 when the variance vanishes.
double cdf_ratio(double num, double den)
{
    if (den > 0) return normal_cdf(num / den);
    if (num > 0) return 1.0;
    if (num < 0) return 0.0;
    return 0.5;
}

void check_arguments(double t, double x)
{
    if (!(x > 0)) throw ConfigError("merton price requires x > 0");
    if (!(t >= 0 && t <= maturity)) throw ConfigError("merton price requires t in [0, T]");
}

// Evaluates the series at fixed tau for several spot values at once, so the
// Poisson weights are shared across x.
template <int Count>
void series(double tau, const std::array<double, Count>& log_x, const std::array<double, Count>& x,
            const MertonParams& theta, int max_terms, std::array<double, Count>& out)
{
    const double lam_tau = jump_intensity * tau;
    const double b = theta.compensator();
    const double s2 = theta.sigma * theta.sigma;
    const double g2 = theta.gamma * theta.gamma;
    const double jump_growth = theta.m + 0.5 * g2; // log(1 + b)
    double x_max = 0;
    for (int k = 0; k < Count; ++k) {
        out[k] = 0;
        x_max = std::max(x_max, x[k]);
    }

    double log_weight = -lam_tau; // log of e^{-lam tau} (lam tau)^j / j!
    for (int j = 0; j < max_terms; ++j) {
        if (j > 0) {
            if (lam_tau <= 0) break;
            log_weight += std::log(lam_tau) - std::log(double(j));
        }
        const double weight = std::exp(log_weight);
        const double growth = std::exp(-jump_intensity * b * tau + j * jump_growth);
        const double den = std::sqrt(s2 * tau + j * g2);
        const double shift1 = (0.5 * s2 - jump_intensity * b) * tau + j * (theta.m + g2);
        const double shift2 = (-0.5 * s2 - jump_intensity * b) * tau + j * theta.m;
        for (int k = 0; k < Count; ++k) {
            const double term = x[k] * growth * cdf_ratio(log_x[k] + shift1, den) - cdf_ratio(log_x[k] + shift2, den);
            out[k] += weight * term;
        }
        // Every later term is bounded by weight * max(1, x e^{...}); stop once
        // the Poisson tail is past its mode and that bound is negligible.
        if (j >= lam_tau && weight * std::max(1.0, x_max * growth) < series_cutoff) break;
    }
}

} // namespace

double price_with_budget(double t, double x, const MertonParams& theta, int max_terms)
{
    check_arguments(t, x);
    if (max_terms < 1) throw ConfigError("series needs at least one term");
    std::array<double, 1> out{};
    series<1>(maturity - t, {std::log(x)}, {x}, theta, max_terms, out);
    return out[0];
}

double price(double t, double x, const MertonParams& theta) { return price_with_budget(t, x, theta, max_series_terms); }

double grid_time(int i) { return 0.3 * double(i - 1); }
double grid_point(int j) { return 0.8 + 0.1 * double(j - 1); }

Eigen::Matrix<double, ObservationSet::n_times, ObservationSet::n_points> price_grid(const MertonParams& theta,
                                                                                   const ObservationSet& obs)
{
    constexpr int np = ObservationSet::n_points;
    std::array<double, np> log_x{}, x{}, row{};
    for (int j = 0; j < np; ++j) {
        x[j] = obs.points[j];
        log_x[j] = std::log(x[j]);
    }
    Eigen::Matrix<double, ObservationSet::n_times, np> u;
    for (int i = 0; i < ObservationSet::n_times; ++i) {
        series<np>(maturity - obs.times[i], log_x, x, theta, max_series_terms, row);
        for (int j = 0; j < np; ++j) u(i, j) = row[j];
    }
    return u;
}

ObservationSet generate_observations(const MertonParams& theta_true, std::uint64_t seed, double noise_scale)
{
    if (!theta_true.in_search_box()) throw ConfigError("true parameters must lie in the search box");
    if (!(noise_scale >= 0)) throw ConfigError("noise scale must be >= 0");
    ObservationSet obs;
    obs.seed = seed;
    obs.noise_scale = noise_scale;
    for (int i = 0; i < ObservationSet::n_times; ++i) obs.times[i] = grid_time(i + 1);
    for (int j = 0; j < ObservationSet::n_points; ++j) obs.points[j] = grid_point(j + 1);
    obs.u_true = price_grid(theta_true, obs);

    std::normal_distribution<double> gauss;
    for (int i = 0; i < ObservationSet::n_times; ++i) {
        for (int j = 0; j < ObservationSet::n_points; ++j) {
            CounterRng rng(stream_key(seed, std::uint64_t(i), std::uint64_t(j), 0x6f6273ULL));
            gauss.reset();
            const double z = gauss(rng);
            // Relative noise: standard deviation 1e-3 u.
            const double sd = noise_scale * 1e-3 * std::max(obs.u_true(i, j), 0.0);
            obs.u_noisy(i, j) = obs.u_true(i, j) + sd * z;
        }
    }
    return obs;
}

double loss(const MertonParams& theta, const ObservationSet& obs, double lambda_reg)
{
    if (!(lambda_reg >= 0)) throw ConfigError("regularization weight must be >= 0");
    const auto u = price_grid(theta, obs);
    return (u - obs.u_noisy).squaredNorm() + lambda_reg * theta.as_vector().norm();
}

Objective<double> make_objective(const ObservationSet& obs, double lambda_reg)
{
    Objective<double> obj;
    obj.dimension = 3;
    obj.eval = [obs, lambda_reg](const ConstVectorRef<double>& v) {
        return loss(MertonParams::from_vector(v), obs, lambda_reg);
    };
    obj.known_minimizer = true_params.as_vector();
    obj.name = "merton";
    return obj;
}

void write_observations_csv(std::ostream& os, const ObservationSet& obs)
{
    char buf[256];
    os << "i,j,t,x,u_true,u_noisy\n";
    for (int i = 0; i < ObservationSet::n_times; ++i) {
        for (int j = 0; j < ObservationSet::n_points; ++j) {
            std::snprintf(buf, sizeof buf, "%d,%d,%.17g,%.17g,%.17g,%.17g\n", i + 1, j + 1, obs.times[i],
                          obs.points[j], obs.u_true(i, j), obs.u_noisy(i, j));
            os << buf;
        }
    }
}

} // namespace rcbo::merton
