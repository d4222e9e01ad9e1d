// Acceptance suite. Usage: acceptance <criterion>... [--runs N] [--long]
// Criteria: ackley heart rastrigin rosenbrock merton properties decay chaos langevin (or "all").
#include "rcbo/experiment.hpp"
#include "rcbo/merton.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <map>
#include <sstream>
#include <string>
#include <vector>

using namespace rcbo;

namespace {

struct Options {
    Index runs = 1000;
    bool long_run = false;
    unsigned workers = default_workers();
};

// Collects sub-checks and prints one verdict line for the criterion.
class Criterion {
public:
    explicit Criterion(std::string name) : name_(std::move(name)) {}

    void check(bool ok, const std::string& what)
    {
        std::printf("  [%s] %s\n", ok ? "ok" : "MISS", what.c_str());
        std::fflush(stdout);
        ok_ = ok_ && ok;
    }
    bool finish(double seconds) const
    {
        std::printf("%s %s (%.1f s)\n", ok_ ? "PASS" : "FAIL", name_.c_str(), seconds);
        std::fflush(stdout);
        return ok_;
    }

private:
    std::string name_;
    bool ok_ = true;
};

std::string fmt(const char* f, auto... args)
{
    char buf[512];
    std::snprintf(buf, sizeof buf, f, args...);
    return buf;
}

std::string rate_text(const SuccessReport& r)
{
    return fmt("%.3f [%.3f, %.3f] of %lld", r.rate, r.wilson_ci_95.lo, r.wilson_ci_95.hi, (long long)r.runs);
}

const TableCell& find(const std::vector<TableCell>& cells, const std::string& variant, Index n, Index k,
                      Index d = 2)
{
    for (const auto& c : cells)
        if (c.spec.variant == variant && c.spec.particles == n && c.spec.steps_or_inv_h == k &&
            c.spec.dimension == d)
            return c;
    std::fprintf(stderr, "missing table cell %s N=%lld K=%lld\n", variant.c_str(), (long long)n, (long long)k);
    std::exit(3);
}

TableOptions table_options(const Options& o)
{
    TableOptions t;
    t.runs = o.runs;
    t.workers = o.workers;
    t.long_run = o.long_run;
    return t;
}

void at_least(Criterion& c, const TableCell& cell, double bound, const std::string& label)
{
    c.check(cell.report.rate >= bound, fmt("%s rate %s >= %.3f", label.c_str(), rate_text(cell.report).c_str(), bound));
}

void near(Criterion& c, const TableCell& cell, double target, double tol, const std::string& label)
{
    c.check(std::abs(cell.report.rate - target) <= tol,
            fmt("%s rate %s within %.2f of %.3f", label.c_str(), rate_text(cell.report).c_str(), tol, target));
}

void ackley(const Options& o, Criterion& c)
{
    const auto cells = reproduce_table(TableId::Ackley, table_options(o));
    for (Index inv_h : {10, 20, 50, 100})
        at_least(c, find(cells, "projection", 100, inv_h), 0.98, fmt("projection N=100 1/h=%lld", (long long)inv_h));
    near(c, find(cells, "projection", 10, 5), 0.137, 0.05, "projection N=10 1/h=5");
    near(c, find(cells, "penalty", 10, 5), 0.055, 0.05, "penalty N=10 1/h=5");
}

void heart(const Options& o, Criterion& c)
{
    const auto cells = reproduce_table(TableId::Heart, table_options(o));
    at_least(c, find(cells, "projection", 100, 20), 0.97, "N=100 K=20");
    near(c, find(cells, "projection", 10, 5), 0.29, 0.07, "N=10 K=5");
}

void rastrigin(const Options& o, Criterion& c)
{
    const TableOptions t = table_options(o);
    auto cell = [&](Index d) { return run_table_cell({TableId::Rastrigin, "projection", d, 100, 500}, t); };
    at_least(c, cell(5), 0.97, "d=5 N=100 K=500");
    near(c, cell(20), 0.948, 0.05, "d=20 N=100 K=500");
    near(c, cell(100), 0.950, 0.05, "d=100 N=100 K=500");
    if (o.long_run) near(c, cell(500), 0.819, 0.07, "d=500 N=100 K=500");
}

// Repelling strength picked on master seed 977 from {0.5, 1, 2, 4, 8}: the
// value whose (N=50, K=100) rate was closest to 0.979.
constexpr double rosenbrock_lambda0 = 4;

void rosenbrock(const Options& o, Criterion& c)
{
    TableOptions t = table_options(o);
    t.repelling_lambda0 = rosenbrock_lambda0;
    c.check(true, fmt("lambda(t) = %g / (1 + t^2)", rosenbrock_lambda0));
    const auto cells = reproduce_table(TableId::Rosenbrock, t);
    for (Index n : {20, 50, 100})
        for (Index k : {5, 10, 20, 50, 100}) {
            const auto& s = find(cells, "standard", n, k);
            const auto& r = find(cells, "repelling", n, k);
            c.check(r.report.rate >= s.report.rate - 0.02,
                    fmt("N=%lld K=%lld repelling %.3f >= standard %.3f - 0.02", (long long)n, (long long)k,
                        r.report.rate, s.report.rate));
        }
    at_least(c, find(cells, "repelling", 50, 100), 0.95, "repelling N=50 K=100");
    near(c, find(cells, "standard", 50, 100), 0.892, 0.05, "standard N=50 K=100");
}

void merton_inverse(const Options& o, Criterion& c)
{
    InvertOptions opt;
    opt.runs = o.runs;
    opt.workers = o.workers;
    opt.alpha = 1e14;
    const InvertResult high = invert_merton(opt);
    c.check(high.report.rate >= 0.95, fmt("alpha=1e14 rate %s >= 0.95", rate_text(high.report).c_str()));
    opt.alpha = 1e4;
    const InvertResult low = invert_merton(opt);
    c.check(low.report.rate <= 0.3, fmt("alpha=1e4 rate %s <= 0.3", rate_text(low.report).c_str()));
}

void properties(const Options& o, Criterion& c)
{
    {
        const Domain doms[] = {Domain::ball(Eigen::Vector2d(0.5, -1), 3.0),
                               Domain::box(Eigen::Vector2d(-1, -2), Eigen::Vector2d(2, 1)), Domain::heart()};
        for (const Domain& dom : doms) {
            CounterRng rng(17);
            int infeasible = 0, moved = 0;
            double worst = 0;
            for (int k = 0; k < 10000; ++k) {
                const Eigen::Vector2d x(-8 + 16 * rng.uniform(), -8 + 16 * rng.uniform());
                const VectorXd p = dom.project(x);
                if (!dom.contains(p)) ++infeasible;
                const double d = (dom.project(p) - p).norm();
                worst = std::max(worst, d);
                if (d > 1e-9) ++moved;
            }
            c.check(infeasible == 0 && moved == 0,
                    fmt("%s projection: %d infeasible, %d not idempotent (max drift %.2e) of 1e4", dom.kind().c_str(),
                        infeasible, moved, worst));
        }
    }
    {
        CounterRng rng(2);
        ParticlesXd x(4, 50);
        for (Index i = 0; i < x.size(); ++i) x.data()[i] = -3 + 6 * rng.uniform();
        VectorXd f(50);
        for (Index i = 0; i < 50; ++i) f[i] = double((i * 37) % 50) / 64.0;
        bool same = true;
        for (double shift : {1.0, -1024.0, 3.5e6})
            same = same && consensus(x, f, 30.0) == consensus(x, VectorXd((f.array() + shift).matrix()), 30.0);
        c.check(same, "consensus shift invariance (bitwise)");

        VectorXd g(50);
        for (Index i = 0; i < 50; ++i) g[i] = rng.uniform();
        Index best;
        g.minCoeff(&best);
        const double gap = (consensus(x, g, 1e16) - x.col(best)).norm();
        c.check(gap <= 1e-9, fmt("consensus alpha=1e16 within %.2e of argmin", gap));
    }
    {
        const Domain ball = Domain::ball(VectorXd::Zero(2), 3.0);
        CounterRng rng(6);
        ParticlesXd x(2, 30);
        for (Index i = 0; i < x.size(); ++i) x.data()[i] = -6 + 12 * rng.uniform();
        Config cfg;
        cfg.beta = Schedule<double>::constant(0);
        cfg.sigma = Schedule<double>::constant(0);
        cfg.scheme = Scheme::Penalty;
        Objective<double> f;
        f.dimension = 2;
        f.eval = [](const ConstVectorRef<double>& p) { return p.squaredNorm(); };
        const auto pen = cbo_step(Ensemble<double>{x, 0, 0}, cfg, f, ball, NoiseStreams{1});
        cfg.scheme = Scheme::Projection;
        const auto proj = cbo_step(Ensemble<double>{x, 0, 0}, cfg, f, ball, NoiseStreams{1});
        bool exact = pen.positions == proj.positions;
        for (Index i = 0; i < x.cols(); ++i) exact = exact && pen.positions.col(i) == ball.project(x.col(i));
        c.check(exact, "penalty step with eps=h and null coefficients equals projection (exact)");
    }
    {
        TableOptions t;
        t.runs = 100;
        auto csv = [&](unsigned w) {
            t.workers = w;
            std::ostringstream os;
            write_csv(os, table_csv(reproduce_table(TableId::Rosenbrock, t), t));
            return os.str();
        };
        const std::string one = csv(1);
        bool same = true;
        for (unsigned w : {2u, 3u, std::max(4u, o.workers)}) same = same && csv(w) == one;
        c.check(same, "Rosenbrock table CSV byte-identical for 1, 2, 3 and 4+ workers");
    }
}

void decay(const Options& o, Criterion& c)
{
    DecayOptions opt;
    opt.workers = o.workers;
    const DecayResult r = variance_decay_check(2, 1, 1, Domain::ball(VectorXd::Zero(2), 1.0), 200, opt);
    for (double t : opt.check_times) {
        const auto k = std::size_t(std::llround(t / opt.h));
        c.check(r.variance[k] <= r.bound[k],
                fmt("Var(%.2f) = %.4g <= Var(0) e^{-2t} 1.25 = %.4g", t, r.variance[k], r.bound[k]));
    }
    c.check(r.pass, "validator verdict");
}

void chaos(const Options& o, Criterion& c)
{
    const ChaosSetup s = default_chaos_setup();
    try {
        const RateStudyReport r =
            chaos_rate_study(s.config, s.objective, s.domain, {32, 64, 128, 256, 512}, 4096, 100, o.workers);
        c.check(r.slope >= -0.65 && r.slope <= -0.35, fmt("slope %.4f in [-0.65, -0.35]", r.slope));
        c.check(r.slope_se <= 0.1, fmt("slope standard error %.4f <= 0.1", r.slope_se));
    } catch (const InsufficientReplicas& e) {
        c.check(false, e.what());
    }
}

void langevin(const Options&, Criterion& c)
{
    for (const char* name : {"quadratic", "flat", "double-well"}) {
        const LangevinCase lc = langevin_case(name);
        const auto r = langevin_invariant_check(lc.config, lc.domain, lc.burn_in, lc.samples);
        c.check(r.l1 <= langevin_l1_tolerance, fmt("%s L1 %.4f <= %.2f", name, r.l1, langevin_l1_tolerance));
    }
}

} // namespace

int main(int argc, char** argv)
{
    using Fn = void (*)(const Options&, Criterion&);
    const std::vector<std::pair<std::string, std::pair<std::string, Fn>>> all{
        {"ackley", {"1 Ackley table", ackley}},
        {"heart", {"2 heart-constrained Townsend table", heart}},
        {"rastrigin", {"3 Rastrigin K=500", rastrigin}},
        {"rosenbrock", {"4 repelling comparison", rosenbrock}},
        {"merton", {"5 Merton inverse problem", merton_inverse}},
        {"properties", {"6 property suite", properties}},
        {"decay", {"7 variance decay", decay}},
        {"chaos", {"8 chaos rate", chaos}},
        {"langevin", {"9 Langevin invariant measure", langevin}},
    };

    Options opt;
    std::vector<std::string> selected;
    for (int i = 1; i < argc; ++i) {
        const std::string a = argv[i];
        if (a == "--long") opt.long_run = true;
        else if (a == "--runs" && i + 1 < argc) opt.runs = std::atoll(argv[++i]);
        else if (a == "--workers" && i + 1 < argc) opt.workers = unsigned(std::atoi(argv[++i]));
        else if (a == "all")
            for (const auto& e : all) selected.push_back(e.first);
        else selected.push_back(a);
    }
    if (selected.empty() || opt.runs < 1 || opt.workers < 1) {
        std::fprintf(stderr, "usage: acceptance <criterion|all>... [--runs N] [--workers W] [--long]\n");
        return 2;
    }

    bool ok = true;
    for (const std::string& name : selected) {
        auto it = std::find_if(all.begin(), all.end(), [&](const auto& e) { return e.first == name; });
        if (it == all.end()) {
            std::fprintf(stderr, "unknown criterion '%s'\n", name.c_str());
            return 2;
        }
        Criterion c(it->second.first);
        const auto start = std::chrono::steady_clock::now();
        it->second.second(opt, c);
        ok = c.finish(std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count()) && ok;
    }
    return ok ? 0 : 1;
}
