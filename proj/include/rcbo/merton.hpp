#ifndef RCBO_MERTON_HPP
#define RCBO_MERTON_HPP

#include "rcbo/objective.hpp"
#include "rcbo/types.hpp"

#include <array>
#include <cstdint>
#include <iosfwd>
#include <string>

namespace rcbo::merton {

inline constexpr double maturity = 3.0;
inline constexpr double jump_intensity = 1.0;
inline constexpr int max_series_terms = 60;
inline constexpr double series_cutoff = 1e-16;
inline constexpr double default_lambda_reg = 1e-6;

// (sigma, m, gamma): diffusion volatility, jump log-mean, jump log-std.
struct MertonParams {
    double sigma = 0;
    double m = 0;
    double gamma = 0;

    VectorXd as_vector() const
    {
        VectorXd v(3);
        v << sigma, m, gamma;
        return v;
    }
    static MertonParams from_vector(const ConstVectorRef<double>& v)
    {
        require_dimension(3, v.size());
        return {v[0], v[1], v[2]};
    }
    // Jump compensator e^{m + gamma^2/2} - 1.
    double compensator() const;
    bool in_search_box() const;
};

inline constexpr MertonParams true_params{0.1, -0.2, 0.3};

// Standard normal cdf via erfc.
double normal_cdf(double z);

// Price u(t, x) of the call with strike 1 and maturity T = 3 under the
// exponential jump diffusion with unit jump intensity and zero rate, as the
// Poisson-weighted series of Black-Scholes-type terms.
double price(double t, double x, const MertonParams& theta);

// Same series with an explicit term budget; used to check truncation.
double price_with_budget(double t, double x, const MertonParams& theta, int max_terms);

struct ObservationSet {
    static constexpr int n_times = 10;
    static constexpr int n_points = 5;

    std::array<double, n_times> times{};
    std::array<double, n_points> points{};
    Eigen::Matrix<double, n_times, n_points> u_true;
    Eigen::Matrix<double, n_times, n_points> u_noisy;
    std::uint64_t seed = 0;
    double noise_scale = 1.0;
};

// Observation grid t_i = 0.3 (i - 1), x_j = 0.8 + 0.1 (j - 1).
double grid_time(int i);
double grid_point(int j);

// u_hat = u + eps with eps ~ N(0, (noise_scale * 1e-3 * u)^2), i.e. relative
// noise of standard deviation 0.1%. noise_scale = 0 gives exact data.
ObservationSet generate_observations(const MertonParams& theta_true, std::uint64_t seed, double noise_scale = 1.0);

// All 50 forward-map values on the observation grid.
Eigen::Matrix<double, ObservationSet::n_times, ObservationSet::n_points> price_grid(const MertonParams& theta,
                                                                                   const ObservationSet& obs);

// sum_ij |u(t_i, x_j; theta) - u_hat_ij|^2 + lambda_reg |theta|_2
double loss(const MertonParams& theta, const ObservationSet& obs, double lambda_reg = default_lambda_reg);

// Loss as an objective on R^3 for the optimizer; the observation set is copied.
Objective<double> make_objective(const ObservationSet& obs, double lambda_reg = default_lambda_reg);

// CSV with columns i, j, t, x, u_true, u_noisy.
void write_observations_csv(std::ostream& os, const ObservationSet& obs);

} // namespace rcbo::merton

#endif // RCBO_MERTON_HPP
