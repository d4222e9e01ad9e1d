#include "rcbo/experiment.hpp"

#include <algorithm>
#include <cmath>

namespace rcbo {

namespace {

double interval_of(const Domain& dom, double& lo)
{
    if (dom.dimension() != 1 || !std::holds_alternative<Box<double>>(dom.shape()))
        throw ConfigError("Langevin invariant check requires a 1-D interval domain");
    const auto& box = std::get<Box<double>>(dom.shape());
    lo = box.lower[0];
    return box.upper[0];
}

double eval_potential(const LangevinConfig<double>::Potential& p, double x)
{
    VectorXd v(1);
    v[0] = x;
    return p(v);
}

constexpr double kappa = 0.2; // double-well interaction strength

} // namespace

InvariantDensity invariant_density_oracle(const LangevinConfig<double>& cfg, double lo, double hi, int cells,
                                          double tol, int max_iterations, double damping)
{
    if (!cfg.U) throw ConfigError("the invariant-density oracle needs the potential U");
    if (!(hi > lo) || cells < 2) throw ConfigError("oracle grid needs hi > lo and at least 2 cells");
    if (!(cfg.sigma_noise > 0)) throw ConfigError("oracle needs sigma_noise > 0");
    if (!(damping > 0 && damping <= 1)) throw ConfigError("damping must lie in (0, 1]");

    const auto n = static_cast<std::size_t>(cells);
    const double dx = (hi - lo) / double(cells);
    const double inv_temp = 2.0 / (cfg.sigma_noise * cfg.sigma_noise);

    InvariantDensity out;
    out.lo = lo;
    out.hi = hi;
    out.grid.resize(n);
    std::vector<double> u(n);
    for (std::size_t i = 0; i < n; ++i) {
        out.grid[i] = lo + (double(i) + 0.5) * dx;
        u[i] = eval_potential(cfg.U, out.grid[i]);
    }
    // V on the uniform difference grid: kernel[k + n - 1] = V(k dx).
    std::vector<double> kernel;
    if (cfg.V) {
        kernel.resize(2 * n - 1);
        for (std::size_t k = 0; k < kernel.size(); ++k)
            kernel[k] = eval_potential(cfg.V, (double(k) - double(n - 1)) * dx);
    }

    std::vector<double> rho(n, 1.0 / (hi - lo)), next(n), phi(n);
    for (int it = 1; it <= max_iterations; ++it) {
        for (std::size_t i = 0; i < n; ++i) {
            double conv = 0;
            if (!kernel.empty())
                for (std::size_t j = 0; j < n; ++j) conv += kernel[i + n - 1 - j] * rho[j];
            phi[i] = inv_temp * (u[i] + conv * dx);
        }
        const double phi_min = *std::min_element(phi.begin(), phi.end());
        double mass = 0;
        for (std::size_t i = 0; i < n; ++i) {
            next[i] = std::exp(-(phi[i] - phi_min));
            mass += next[i] * dx;
        }
        double residual = 0;
        for (std::size_t i = 0; i < n; ++i) {
            next[i] /= mass;
            residual = std::max(residual, std::abs(next[i] - rho[i]));
            rho[i] = (1 - damping) * rho[i] + damping * next[i];
        }
        out.residual = residual;
        out.iterations = it;
        if (residual <= tol) {
            out.density = std::move(rho);
            return out;
        }
        // Without interaction the map is constant, so one step is exact.
        if (kernel.empty()) {
            rho = next;
        }
    }
    throw OracleNonConvergence("fixed-point residual " + format_double(out.residual) + " above " +
                               format_double(tol) + " after " + std::to_string(max_iterations) + " iterations");
}

LangevinCheckResult langevin_invariant_check(const LangevinConfig<double>& cfg, const Domain& interval, Index burn_in,
                                             Index samples)
{
    cfg.validate();
    double lo = 0;
    const double hi = interval_of(interval, lo);
    if (burn_in < 0 || samples < 1) throw ConfigError("need burn_in >= 0 and samples >= 1");

    LangevinCheckResult result;
    result.density = invariant_density_oracle(cfg, lo, hi);
    const InvariantDensity& dens = result.density;
    const std::size_t cells = dens.grid.size();
    const double dx = (hi - lo) / double(cells);
    const std::size_t per_bin = cells / langevin_bins;

    result.oracle.assign(langevin_bins, 0.0);
    result.empirical.assign(langevin_bins, 0.0);
    for (std::size_t i = 0; i < cells; ++i) result.oracle[std::min(i / per_bin, std::size_t(langevin_bins - 1))] += dens.density[i] * dx;
    for (int b = 0; b < langevin_bins; ++b) result.bin_lo.push_back(lo + (hi - lo) * b / langevin_bins);

    // Oracle cdf at the right edge of each grid cell, for W1.
    std::vector<double> cdf(cells);
    double acc = 0;
    for (std::size_t i = 0; i < cells; ++i) {
        acc += dens.density[i] * dx;
        cdf[i] = acc;
    }
    auto w1_to_oracle = [&](const ParticlesXd& x) {
        std::vector<double> pts(x.data(), x.data() + x.size());
        std::sort(pts.begin(), pts.end());
        double w = 0;
        std::size_t below = 0;
        for (std::size_t i = 0; i < cells; ++i) {
            const double edge = lo + double(i + 1) * dx;
            while (below < pts.size() && pts[below] <= edge) ++below;
            w += std::abs(double(below) / double(pts.size()) - cdf[i]) * dx;
        }
        return w;
    };

    Ensemble<double> ens{ParticlesXd(), 0, 0};
    {
        CounterRng rng = NoiseStreams{cfg.seed}.initial();
        ens.positions = interval.sample_uniform(rng, cfg.particles);
    }
    const Index n = cfg.particles;
    const Index sample_steps = (samples + n - 1) / n;
    const Index total = burn_in + sample_steps;
    const Index stride = std::max<Index>(1, total / 200);

    std::vector<Index> counts(langevin_bins, 0);
    Index collected = 0;
    result.w1_times.push_back(0);
    result.w1.push_back(w1_to_oracle(ens.positions));
    for (Index k = 0; k < total; ++k) {
        ens = langevin_step_projection(ens, cfg, interval);
        if ((k + 1) % stride == 0) {
            result.w1_times.push_back(ens.time);
            result.w1.push_back(w1_to_oracle(ens.positions));
        }
        if (k < burn_in) continue;
        for (Index i = 0; i < n && collected < samples; ++i, ++collected) {
            int b = int(std::floor((ens.positions(0, i) - lo) / (hi - lo) * langevin_bins));
            ++counts[static_cast<std::size_t>(std::clamp(b, 0, langevin_bins - 1))];
        }
    }
    result.l1 = 0;
    for (int b = 0; b < langevin_bins; ++b) {
        result.empirical[b] = double(counts[b]) / double(collected);
        result.l1 += std::abs(result.empirical[b] - result.oracle[b]);
    }
    result.pass = result.l1 <= langevin_l1_tolerance;
    result.config = {{"sigma_noise", format_double(cfg.sigma_noise)},
                     {"h", format_double(cfg.h)},
                     {"N", std::to_string(cfg.particles)},
                     {"seed", std::to_string(cfg.seed)},
                     {"interval", format_double(lo) + " " + format_double(hi)},
                     {"burn_in", std::to_string(burn_in)},
                     {"samples", std::to_string(collected)},
                     {"oracle_iterations", std::to_string(dens.iterations)},
                     {"oracle_residual", format_double(dens.residual)},
                     {"l1", format_double(result.l1)},
                     {"pass", result.pass ? "true" : "false"}};
    return result;
}

LangevinCase langevin_case(const std::string& name, std::uint64_t seed)
{
    using Cfg = LangevinConfig<double>;
    auto scalar_field = [](auto f) {
        return Cfg::Field([f](const ConstVectorRef<double>& x) {
            VectorXd g(1);
            g[0] = f(x[0]);
            return g;
        });
    };
    auto scalar_potential = [](auto f) {
        return Cfg::Potential([f](const ConstVectorRef<double>& x) { return f(x[0]); });
    };

    LangevinCase c{name, {}, Domain::box(VectorXd::Constant(1, -1.0), VectorXd::Constant(1, 1.0)), 0, 0};
    Cfg& cfg = c.config;
    cfg.seed = seed;
    cfg.particles = 1000;
    if (name == "quadratic") {
        // U = x^2, V = 0: density proportional to exp(-2 x^2 / sigma^2), truncated to [-1, 1].
        cfg.U = scalar_potential([](double x) { return x * x; });
        cfg.grad_U = scalar_field([](double x) { return 2 * x; });
        cfg.sigma_noise = 1.0;
        cfg.h = 1e-3;
        c.burn_in = 3000;
        c.samples = 20000000;
    } else if (name == "flat") {
        // Large noise flattens exp(-2 U / sigma^2) towards the uniform law.
        cfg.U = scalar_potential([](double x) { return 0.5 * x * x; });
        cfg.grad_U = scalar_field([](double x) { return x; });
        cfg.sigma_noise = 5.0;
        cfg.h = 1e-4;
        c.burn_in = 5000;
        c.samples = 20000000;
    } else if (name == "double-well") {
        // U = x^4/4 - x^2/2 with attraction V(z) = kappa z^2 / 2 on [-2, 2].
        c.domain = Domain::box(VectorXd::Constant(1, -2.0), VectorXd::Constant(1, 2.0));
        cfg.U = scalar_potential([](double x) { return 0.25 * x * x * x * x - 0.5 * x * x; });
        cfg.grad_U = scalar_field([](double x) { return x * x * x - x; });
        cfg.V = scalar_potential([](double z) { return 0.5 * kappa * z * z; });
        cfg.grad_V = scalar_field([](double z) { return kappa * z; });
        // For quadratic V the empirical convolution is kappa (x_i - mean).
        cfg.interaction_drift = [](const ParticlesXd& x) -> ParticlesXd {
            const VectorXd mean = x.rowwise().mean();
            return kappa * (x.colwise() - mean);
        };
        cfg.sigma_noise = 1.0;
        cfg.h = 2e-3;
        c.burn_in = 1000;
        c.samples = 10000000;
    } else {
        throw ConfigError("unknown Langevin case '" + name + "' (expected quadratic, flat or double-well)");
    }
    return c;
}

CsvTable langevin_histogram_csv(const LangevinCheckResult& result)
{
    CsvTable t;
    t.comments = result.config;
    t.header = {"bin_lo", "empirical", "oracle"};
    for (std::size_t b = 0; b < result.empirical.size(); ++b)
        t.rows.push_back(
            {format_double(result.bin_lo[b]), format_double(result.empirical[b]), format_double(result.oracle[b])});
    return t;
}

CsvTable langevin_w1_csv(const LangevinCheckResult& result)
{
    CsvTable t;
    t.comments = result.config;
    t.header = {"t", "w1"};
    for (std::size_t k = 0; k < result.w1.size(); ++k)
        t.rows.push_back({format_double(result.w1_times[k]), format_double(result.w1[k])});
    return t;
}

} // namespace rcbo
