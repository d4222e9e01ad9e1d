#include "rcbo/experiment.hpp"

#include "rcbo/merton.hpp"
#include "rcbo/random.hpp"

#include <chrono>
#include <cmath>
#include <numbers>
#include <numeric>

namespace rcbo {

namespace {

double seconds_since(std::chrono::steady_clock::time_point start)
{
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
}

struct Outcome {
    VectorXd consensus;
    bool ok = false;
};

// Runs fn(r) for every replica and folds the outcomes into a report.
SuccessReport score_replicas(Index runs, unsigned workers, double eps, const VectorXd& reference,
                             const std::function<VectorXd(Index)>& fn, std::vector<VectorXd>* finals)
{
    if (runs < 1) throw ConfigError("runs must be >= 1");
    if (!(eps > 0)) throw ConfigError("success radius eps must be positive");
    const auto start = std::chrono::steady_clock::now();
    std::vector<Outcome> outcomes(static_cast<std::size_t>(runs));
    parallel_for(outcomes.size(), workers, [&](std::size_t r) {
        try {
            outcomes[r].consensus = fn(Index(r));
            outcomes[r].ok = outcomes[r].consensus.allFinite();
        } catch (const NumericalError&) {
            outcomes[r].ok = false;
        }
    });

    SuccessReport report;
    report.runs = runs;
    for (const Outcome& o : outcomes) {
        if (!o.ok) {
            ++report.failures;
            continue;
        }
        require_dimension(reference.size(), o.consensus.size());
        if ((o.consensus - reference).norm() <= eps) ++report.successes;
    }
    report.rate = double(report.successes) / double(runs);
    report.wilson_ci_95 = wilson_interval(report.successes, runs);
    report.wall_time = seconds_since(start);
    if (finals) {
        finals->clear();
        for (Outcome& o : outcomes)
            if (o.ok) finals->push_back(std::move(o.consensus));
    }
    return report;
}

ConfigSnapshot snapshot_with(const Config& cfg, ConfigSnapshot extra)
{
    ConfigSnapshot out = cfg.describe();
    out.insert(out.end(), extra.begin(), extra.end());
    return out;
}

std::string vector_text(const VectorXd& v)
{
    std::string s;
    for (Index i = 0; i < v.size(); ++i) {
        if (i) s += ' ';
        s += format_double(v[i]);
    }
    return s;
}

} // namespace

SuccessReport success_rate(const Config& cfg, const Objective<double>& obj, const Domain& dom, Index runs, double eps,
                           const VectorXd& reference, unsigned workers, std::vector<VectorXd>* final_consensus)
{
    cfg.validate();
    require_dimension(dom.dimension(), obj.dimension);
    require_dimension(dom.dimension(), reference.size());
    SuccessReport report = score_replicas(
        runs, workers, eps, reference,
        [&](Index r) {
            Config replica = cfg;
            replica.seed = replica_seed(cfg.seed, std::uint64_t(r));
            return run_cbo(replica, obj, dom).final_consensus;
        },
        final_consensus);
    report.config = snapshot_with(cfg, {{"objective", obj.name},
                                        {"domain", dom.kind()},
                                        {"runs", std::to_string(runs)},
                                        {"eps", format_double(eps)},
                                        {"reference", vector_text(reference)}});
    return report;
}

// ---------------------------------------------------------------------------

std::string to_string(TableId id)
{
    switch (id) {
    case TableId::Ackley: return "ackley";
    case TableId::Heart: return "heart";
    case TableId::Rastrigin: return "rastrigin";
    case TableId::Rosenbrock: return "rosenbrock";
    }
    return "?";
}

TableId parse_table(const std::string& name)
{
    if (name == "ackley") return TableId::Ackley;
    if (name == "heart") return TableId::Heart;
    if (name == "rastrigin") return TableId::Rastrigin;
    if (name == "rosenbrock") return TableId::Rosenbrock;
    throw ConfigError("unknown table '" + name + "' (expected ackley, heart, rastrigin or rosenbrock)");
}

std::vector<TableCellSpec> table_cells(TableId id, bool long_run)
{
    const std::vector<Index> ns{10, 20, 50, 100};
    std::vector<TableCellSpec> cells;
    switch (id) {
    case TableId::Ackley:
        for (const char* scheme : {"penalty", "projection"})
            for (Index inv_h : {5, 10, 20, 50, 100})
                for (Index n : ns) cells.push_back({id, scheme, 2, n, inv_h});
        break;
    case TableId::Heart:
        for (Index k : {5, 10, 20, 50, 100})
            for (Index n : ns) cells.push_back({id, "projection", 2, n, k});
        break;
    case TableId::Rastrigin: {
        std::vector<Index> dims{5, 20, 100};
        if (long_run) dims.push_back(500);
        for (Index k : {200, 500, 1000})
            for (Index d : dims)
                for (Index n : ns) cells.push_back({id, "projection", d, n, k});
        break;
    }
    case TableId::Rosenbrock:
        for (const char* variant : {"standard", "repelling"})
            for (Index k : {5, 10, 20, 50, 100})
                for (Index n : ns) cells.push_back({id, variant, 2, n, k});
        break;
    }
    return cells;
}

std::uint64_t cell_seed(const TableCellSpec& spec, std::uint64_t master_seed)
{
    std::uint64_t variant_hash = 0;
    for (char c : spec.variant) variant_hash = mix64(variant_hash ^ std::uint64_t(static_cast<unsigned char>(c)));
    return stream_key(master_seed, std::uint64_t(spec.table) * 1000003ULL + std::uint64_t(spec.dimension),
                      variant_hash, std::uint64_t(spec.particles) * 1000003ULL + std::uint64_t(spec.steps_or_inv_h));
}

CellSetup cell_setup(const TableCellSpec& spec, const TableOptions& options)
{
    if (spec.particles < 1 || spec.steps_or_inv_h < 1) throw ConfigError("table cell needs N >= 1 and K >= 1");
    Config cfg;
    cfg.particles = spec.particles;
    cfg.seed = cell_seed(spec, options.master_seed);
    cfg.alpha = 1e4;
    cfg.beta = Schedule<double>::constant(1);
    cfg.sigma = Schedule<double>::constant(4);
    switch (spec.table) {
    case TableId::Ackley: {
        cfg.scheme = parse_scheme(spec.variant);
        cfg.h = 1.0 / double(spec.steps_or_inv_h);
        cfg.steps = spec.steps_or_inv_h;
        Objective<double> obj = make_ackley();
        VectorXd ref = *obj.known_minimizer;
        return {cfg, std::move(obj), Domain::ball(VectorXd::Zero(2), 3.0), std::move(ref), 0.1};
    }
    case TableId::Heart: {
        cfg.scheme = Scheme::Projection;
        cfg.h = 1.0 / 20.0;
        cfg.steps = spec.steps_or_inv_h;
        Objective<double> obj = make_townsend();
        VectorXd ref = *obj.known_minimizer;
        return {cfg, std::move(obj), Domain::heart(), std::move(ref), 0.1};
    }
    case TableId::Rastrigin: {
        cfg.scheme = Scheme::Projection;
        cfg.h = 1.0 / 500.0;
        cfg.steps = spec.steps_or_inv_h;
        cfg.beta = Schedule<double>::linear(0, 10);
        cfg.sigma = Schedule<double>::exp_decay(10, std::numbers::ln10);
        Objective<double> obj = make_rastrigin(spec.dimension);
        VectorXd ref = *obj.known_minimizer;
        return {cfg, std::move(obj), Domain::ball(VectorXd::Zero(spec.dimension), 5.0), std::move(ref), 0.1};
    }
    case TableId::Rosenbrock: {
        cfg.scheme = Scheme::Projection;
        cfg.h = 1.0 / 20.0;
        cfg.steps = spec.steps_or_inv_h;
        if (spec.variant == "repelling") cfg.repelling = Schedule<double>::inverse_square(options.repelling_lambda0);
        else if (spec.variant != "standard") throw ConfigError("rosenbrock variant must be standard or repelling");
        Objective<double> obj = make_rosenbrock();
        VectorXd ref = *obj.known_minimizer;
        return {cfg, std::move(obj), Domain::ball(VectorXd::Zero(2), std::sqrt(2.0)), std::move(ref), 0.1};
    }
    }
    throw ConfigError("unknown table");
}

TableCell run_table_cell(const TableCellSpec& spec, const TableOptions& options)
{
    CellSetup setup = cell_setup(spec, options);
    TableCell cell{spec, setup.config.seed, {}};
    cell.report = success_rate(setup.config, setup.objective, setup.domain, options.runs, setup.eps, setup.reference,
                               options.workers);
    cell.report.config.emplace_back("table", to_string(spec.table));
    return cell;
}

std::vector<TableCell> reproduce_table(TableId id, const TableOptions& options,
                                       const std::function<void(const TableCell&)>& on_cell)
{
    std::vector<TableCell> cells;
    for (const TableCellSpec& spec : table_cells(id, options.long_run)) {
        cells.push_back(run_table_cell(spec, options));
        if (on_cell) on_cell(cells.back());
    }
    return cells;
}

CsvTable table_csv(const std::vector<TableCell>& cells, const TableOptions& options)
{
    CsvTable t;
    t.comments = {{"runs", std::to_string(options.runs)},
                  {"master_seed", std::to_string(options.master_seed)},
                  {"long", options.long_run ? "true" : "false"},
                  {"repelling_lambda0", format_double(options.repelling_lambda0)}};
    if (!cells.empty()) {
        const CellSetup setup = cell_setup(cells.front().spec, options);
        for (const auto& kv : setup.config.describe())
            if (kv.first != "N" && kv.first != "steps" && kv.first != "seed" && kv.first != "scheme" &&
                kv.first != "h" && kv.first != "epsilon" && kv.first != "repelling")
                t.comments.push_back(kv);
        t.comments.emplace_back("eps", format_double(setup.eps));
    }
    t.header = {"table", "scheme", "d", "N", "k_or_inv_h", "rate", "ci_lo", "ci_hi", "runs", "seed"};
    for (const TableCell& c : cells) {
        t.rows.push_back({to_string(c.spec.table), c.spec.variant, std::to_string(c.spec.dimension),
                          std::to_string(c.spec.particles), std::to_string(c.spec.steps_or_inv_h),
                          format_double(c.report.rate), format_double(c.report.wilson_ci_95.lo),
                          format_double(c.report.wilson_ci_95.hi), std::to_string(c.report.runs),
                          std::to_string(c.seed)});
    }
    return t;
}

// ---------------------------------------------------------------------------

LogLogFit fit_loglog(const std::vector<Index>& n, const std::vector<double>& y, const std::vector<double>& y_se)
{
    if (n.size() < 2) throw ConfigError("log-log fit needs at least 2 points");
    if (y.size() != n.size() || y_se.size() != n.size()) throw ConfigError("log-log fit: size mismatch");
    const std::size_t m = n.size();
    std::vector<double> lx(m), ly(m);
    for (std::size_t i = 0; i < m; ++i) {
        if (n[i] < 1 || !(y[i] > 0)) throw ConfigError("log-log fit needs positive n and y");
        lx[i] = std::log(double(n[i]));
        ly[i] = std::log(y[i]);
    }
    const double mx = std::accumulate(lx.begin(), lx.end(), 0.0) / double(m);
    const double my = std::accumulate(ly.begin(), ly.end(), 0.0) / double(m);
    double sxx = 0, sxy = 0;
    for (std::size_t i = 0; i < m; ++i) {
        sxx += (lx[i] - mx) * (lx[i] - mx);
        sxy += (lx[i] - mx) * (ly[i] - my);
    }
    if (!(sxx > 0)) throw ConfigError("log-log fit needs distinct n values");
    LogLogFit fit;
    fit.slope = sxy / sxx;
    fit.intercept = my - fit.slope * mx;
    // slope = sum_i c_i log y_i with c_i = (lx_i - mx) / sxx; var(log y_i) ~ (se_i / y_i)^2.
    double var = 0;
    for (std::size_t i = 0; i < m; ++i) {
        const double c = (lx[i] - mx) / sxx;
        const double rel = y_se[i] / y[i];
        var += c * c * rel * rel;
    }
    fit.slope_se = std::sqrt(var);
    return fit;
}

RateStudyReport chaos_rate_study(const Config& cfg, const Objective<double>& obj, const Domain& dom,
                                 const std::vector<Index>& n_list, Index n_ref, Index replicas, unsigned workers)
{
    cfg.validate();
    require_dimension(dom.dimension(), obj.dimension);
    if (n_list.size() < 2) throw ConfigError("rate study needs at least 2 values of N");
    for (std::size_t i = 0; i < n_list.size(); ++i) {
        if (n_list[i] < 1) throw ConfigError("rate study N values must be >= 1");
        if (i > 0 && n_list[i] <= n_list[i - 1]) throw ConfigError("rate study N values must be strictly increasing");
    }
    if (n_list.back() * 4 > n_ref) throw ConfigError("rate study requires max(N) <= N_ref / 4");
    if (replicas < 20) throw ConfigError("rate study requires at least 20 replicas");

    auto run_size = [&](Index n, std::uint64_t tag) {
        std::vector<VectorXd> out(static_cast<std::size_t>(replicas));
        parallel_for(out.size(), workers, [&](std::size_t r) {
            Config c = cfg;
            c.particles = n;
            c.seed = replica_seed(stream_key(cfg.seed, tag, std::uint64_t(n)), r);
            out[r] = run_cbo(c, obj, dom).final_consensus;
        });
        return out;
    };

    RateStudyReport report;
    report.n_values = n_list;
    report.n_ref = n_ref;
    report.replicas = replicas;

    const std::vector<VectorXd> ref_runs = run_size(n_ref, 0x726566ULL);
    report.reference = VectorXd::Zero(dom.dimension());
    for (const VectorXd& c : ref_runs) report.reference += c;
    report.reference /= double(replicas);

    for (Index n : n_list) {
        const std::vector<VectorXd> runs = run_size(n, 0x6eULL);
        std::vector<double> err(runs.size());
        for (std::size_t r = 0; r < runs.size(); ++r) err[r] = (runs[r] - report.reference).norm();
        const double mean = std::accumulate(err.begin(), err.end(), 0.0) / double(err.size());
        double ss = 0;
        for (double e : err) ss += (e - mean) * (e - mean);
        const double sd = std::sqrt(ss / double(err.size() - 1));
        report.mean_error.push_back(mean);
        report.error_se.push_back(sd / std::sqrt(double(err.size())));
    }
    const LogLogFit fit = fit_loglog(report.n_values, report.mean_error, report.error_se);
    report.slope = fit.slope;
    report.slope_se = fit.slope_se;
    report.config = snapshot_with(cfg, {{"objective", obj.name},
                                        {"domain", dom.kind()},
                                        {"N_ref", std::to_string(n_ref)},
                                        {"replicas", std::to_string(replicas)},
                                        {"slope", format_double(fit.slope)},
                                        {"slope_se", format_double(fit.slope_se)}});
    if (report.slope_se > 0.1)
        throw InsufficientReplicas("slope standard error " + format_double(report.slope_se) +
                                   " exceeds 0.1; increase replicas");
    return report;
}

CsvTable rate_study_csv(const RateStudyReport& report)
{
    CsvTable t;
    t.comments = report.config;
    t.header = {"N", "mean_error", "error_se", "slope", "slope_se"};
    for (std::size_t i = 0; i < report.n_values.size(); ++i)
        t.rows.push_back({std::to_string(report.n_values[i]), format_double(report.mean_error[i]),
                          format_double(report.error_se[i]), format_double(report.slope),
                          format_double(report.slope_se)});
    return t;
}

ChaosSetup default_chaos_setup(std::uint64_t seed)
{
    Config cfg;
    cfg.scheme = Scheme::Projection;
    cfg.alpha = 1.0;
    cfg.beta = Schedule<double>::constant(1);
    cfg.sigma = Schedule<double>::constant(0.5);
    cfg.h = 0.05;
    cfg.steps = 20;
    cfg.seed = seed;
    Objective<double> obj;
    obj.dimension = 2;
    obj.eval = [](const ConstVectorRef<double>& x) {
        return (x - Eigen::Vector2d(0.5, 0.3)).squaredNorm() + 1.0;
    };
    obj.known_minimizer = Eigen::Vector2d(0.5, 0.3);
    obj.name = "quadratic";
    return {cfg, std::move(obj), Domain::ball(VectorXd::Zero(2), 2.0)};
}

// ---------------------------------------------------------------------------

DecayResult variance_decay_check(double beta, double sigma, double alpha, const Domain& ball, Index replicas,
                                 const DecayOptions& options)
{
    if (!std::holds_alternative<Ball<double>>(ball.shape()))
        throw ConfigError("variance decay check requires a ball domain");
    if (replicas < 1) throw ConfigError("replicas must be >= 1");
    // Constant objective: f_osc = 0, so eta0 = 2 beta - sigma^2 (1 + 1).
    const double eta0 = 2 * beta - 2 * sigma * sigma;
    if (!(eta0 > 0)) throw ConfigError("variance decay requires eta0 = 2 beta - 2 sigma^2 > 0, got " + format_double(eta0));

    Config cfg;
    cfg.scheme = Scheme::Projection;
    cfg.alpha = alpha;
    cfg.beta = Schedule<double>::constant(beta);
    cfg.sigma = Schedule<double>::constant(sigma);
    cfg.h = options.h;
    cfg.steps = Index(std::llround(options.t_end / options.h));
    cfg.particles = options.particles;
    cfg.seed = options.seed;
    cfg.validate();

    Objective<double> flat;
    flat.dimension = ball.dimension();
    flat.eval = [](const ConstVectorRef<double>&) { return 1.0; };
    flat.name = "constant";

    const std::size_t points = static_cast<std::size_t>(cfg.steps) + 1;
    std::vector<std::vector<double>> per_replica(static_cast<std::size_t>(replicas));
    parallel_for(per_replica.size(), options.workers, [&](std::size_t r) {
        Config c = cfg;
        c.seed = replica_seed(cfg.seed, r);
        const NoiseStreams noise{c.seed};
        Ensemble<double> ens = initial_ensemble(c, ball);
        auto variance = [](const ParticlesXd& x) {
            const VectorXd mean = x.rowwise().mean();
            return (x.colwise() - mean).colwise().squaredNorm().mean();
        };
        std::vector<double>& v = per_replica[r];
        v.reserve(points);
        v.push_back(variance(ens.positions));
        for (Index k = 0; k < c.steps; ++k) {
            ens = cbo_step(ens, c, flat, ball, noise);
            v.push_back(variance(ens.positions));
        }
    });

    DecayResult result;
    result.eta0 = eta0;
    result.times.resize(points);
    result.variance.assign(points, 0.0);
    for (const auto& v : per_replica)
        for (std::size_t k = 0; k < points; ++k) result.variance[k] += v[k] / double(replicas);
    for (std::size_t k = 0; k < points; ++k) {
        result.times[k] = cfg.h * double(k);
        result.bound.push_back(result.variance[0] * std::exp(-eta0 * result.times[k]) * options.slack);
    }
    result.pass = true;
    for (double t : options.check_times) {
        const auto k = static_cast<std::size_t>(std::llround(t / cfg.h));
        if (k >= points) throw ConfigError("check time " + format_double(t) + " is beyond the simulated horizon");
        if (!(result.variance[k] <= result.bound[k])) {
            result.pass = false;
            result.failure = "Var(" + format_double(t) + ") = " + format_double(result.variance[k]) +
                             " exceeds bound " + format_double(result.bound[k]);
            break;
        }
    }
    result.config = snapshot_with(cfg, {{"objective", "constant"},
                                        {"domain", ball.kind()},
                                        {"replicas", std::to_string(replicas)},
                                        {"eta0", format_double(eta0)},
                                        {"slack", format_double(options.slack)}});
    return result;
}

CsvTable decay_curve_csv(const DecayResult& result)
{
    CsvTable t;
    t.comments = result.config;
    t.comments.emplace_back("pass", result.pass ? "true" : "false");
    t.header = {"t", "variance", "bound"};
    for (std::size_t k = 0; k < result.times.size(); ++k)
        t.rows.push_back({format_double(result.times[k]), format_double(result.variance[k]),
                          format_double(result.bound[k])});
    return t;
}

// ---------------------------------------------------------------------------

InvertResult invert_merton(const InvertOptions& options)
{
    if (options.particles < 1 || options.steps < 0) throw ConfigError("invalid particle or step count");
    Config cfg;
    cfg.scheme = Scheme::Projection;
    cfg.alpha = options.alpha;
    cfg.beta = Schedule<double>::linear(0, 10);
    cfg.sigma = Schedule<double>::exp_decay(10, std::numbers::ln10);
    cfg.h = options.h;
    cfg.steps = options.steps;
    cfg.particles = options.particles;
    cfg.seed = options.seed;
    cfg.validate();

    VectorXd lower(3), upper(3);
    lower << 0, -1, 0;
    upper << 1, 1, 1;
    const Domain box = Domain::box(lower, upper);
    const VectorXd truth = merton::true_params.as_vector();

    InvertResult result;
    result.report = score_replicas(
        options.runs, options.workers, options.eps, truth,
        [&](Index r) {
            Config c = cfg;
            c.seed = replica_seed(cfg.seed, std::uint64_t(r));
            const merton::ObservationSet obs = merton::generate_observations(
                merton::true_params, stream_key(c.seed, 0x6f6273ULL), options.noise_scale);
            return run_cbo(c, merton::make_objective(obs, options.lambda_reg), box).final_consensus;
        },
        &result.estimates);
    result.report.config = snapshot_with(cfg, {{"objective", "merton"},
                                               {"domain", "box"},
                                               {"runs", std::to_string(options.runs)},
                                               {"eps", format_double(options.eps)},
                                               {"lambda_reg", format_double(options.lambda_reg)},
                                               {"noise_scale", format_double(options.noise_scale)},
                                               {"reference", vector_text(truth)}});
    return result;
}

CsvTable parameter_histogram_csv(const std::vector<VectorXd>& estimates, Index component, double lo, double hi,
                                 int bins, const ConfigSnapshot& config)
{
    if (bins < 1 || !(hi > lo)) throw ConfigError("histogram needs bins >= 1 and hi > lo");
    std::vector<Index> counts(static_cast<std::size_t>(bins), 0);
    for (const VectorXd& e : estimates) {
        const double v = e[component];
        int b = int(std::floor((v - lo) / (hi - lo) * bins));
        b = std::clamp(b, 0, bins - 1);
        ++counts[static_cast<std::size_t>(b)];
    }
    CsvTable t;
    t.comments = config;
    t.comments.emplace_back("component", std::to_string(component));
    t.header = {"bin_lo", "bin_hi", "count"};
    for (int b = 0; b < bins; ++b)
        t.rows.push_back({format_double(lo + (hi - lo) * b / bins), format_double(lo + (hi - lo) * (b + 1) / bins),
                          std::to_string(counts[static_cast<std::size_t>(b)])});
    return t;
}

} // namespace rcbo
