#include "rcbo/consensus.hpp"
#include "rcbo/dynamics.hpp"
#include "rcbo/schedule.hpp"

#include <doctest.h>

#include <cmath>
#include <numbers>

using namespace rcbo;

namespace {

using Config = SolverConfig<double>;

ParticlesXd random_particles(std::uint64_t seed, Index d, Index n, double lo, double hi)
{
    CounterRng rng(seed);
    ParticlesXd x(d, n);
    for (Index i = 0; i < x.size(); ++i) x.data()[i] = lo + (hi - lo) * rng.uniform();
    return x;
}

Objective<double> sphere(Index d)
{
    Objective<double> f;
    f.dimension = d;
    f.eval = [](const ConstVectorRef<double>& x) { return x.squaredNorm(); };
    f.name = "sphere";
    return f;
}

Config null_config(Scheme scheme)
{
    Config cfg;
    cfg.scheme = scheme;
    cfg.beta = Schedule<double>::constant(0);
    cfg.sigma = Schedule<double>::constant(0);
    cfg.h = 0.1;
    return cfg;
}

} // namespace

TEST_CASE("consensus examples")
{
    ParticlesXd same(2, 4);
    same.colwise() = Eigen::Vector2d(0.3, -1.7);
    const VectorXd f = (VectorXd(4) << 3, 1, 2, 5).finished();
    CHECK(consensus(same, f, 10.0) == Eigen::Vector2d(0.3, -1.7));

    const ParticlesXd x = random_particles(1, 3, 7, -2, 2);
    const VectorXd fr = VectorXd::LinSpaced(7, 0, 6);
    CHECK((consensus(x, fr, 0.0) - x.rowwise().mean()).norm() <= 1e-14);

    for (double alpha : {0.5, 3.0, 1e4}) {
        ParticlesXd two(2, 2);
        two << 1, 4, -2, 8;
        const VectorXd f2 = (VectorXd(2) << 0, std::log(2.0) / alpha).finished();
        const VectorXd expect = (2.0 / 3.0) * two.col(0) + (1.0 / 3.0) * two.col(1);
        CHECK((consensus(two, f2, alpha) - expect).norm() <= 1e-12);
    }
    CHECK_THROWS_AS(consensus(ParticlesXd(2, 0), VectorXd(0), 1.0), ConfigError);
}

TEST_CASE("consensus is shift invariant bitwise")
{
    const ParticlesXd x = random_particles(2, 4, 50, -3, 3);
    // Dyadic objective values and shifts keep f + c exact, so the shifted
    // exponents are identical.
    VectorXd f(50);
    for (Index i = 0; i < 50; ++i) f[i] = double((i * 37) % 50) / 64.0;
    for (double c : {1.0, -1024.0, 3.5e6, 0.25}) {
        const VectorXd shifted = (f.array() + c).matrix();
        const VectorXd a = consensus(x, f, 30.0), b = consensus(x, shifted, 30.0);
        CHECK(a == b);
    }
}

TEST_CASE("consensus in the large-alpha limit is the argmin")
{
    const ParticlesXd x = random_particles(3, 3, 40, -5, 5);
    const VectorXd f = (random_particles(4, 1, 40, 0, 1)).transpose();
    Index best;
    f.minCoeff(&best);
    CHECK((consensus(x, f, 1e16) - x.col(best)).norm() <= 1e-9);
}

TEST_CASE("consensus lies in the coordinate hull")
{
    for (std::uint64_t s = 0; s < 50; ++s) {
        const ParticlesXd x = random_particles(100 + s, 3, 20, -4, 4);
        const VectorXd f = random_particles(200 + s, 1, 20, -3, 3).transpose();
        const VectorXd c = consensus(x, f, 2.0);
        for (Index k = 0; k < 3; ++k) {
            CHECK(c[k] >= x.row(k).minCoeff() - 1e-14);
            CHECK(c[k] <= x.row(k).maxCoeff() + 1e-14);
        }
    }
}

TEST_CASE("consensus survives huge exponents")
{
    ParticlesXd x(1, 3);
    x << 1, 2, 3;
    const VectorXd f = (VectorXd(3) << 1e300, 0, 1e-300).finished();
    const VectorXd c = consensus(x, f, 1e14);
    CHECK(std::isfinite(c[0]));
    CHECK(c[0] >= 2.0);
    CHECK(c[0] <= 3.0);
}

TEST_CASE("repelling force")
{
    ParticlesXd coincident(2, 5);
    coincident.colwise() = Eigen::Vector2d(1, 1);
    CHECK(repelling_force(coincident, 2, 1.0) == VectorXd::Zero(2));

    ParticlesXd two(2, 2);
    two << 1, 0, 0, 0;
    const VectorXd f = repelling_force(two, 0, 1.0);
    CHECK(f[0] == doctest::Approx(std::exp(-0.5) / 2).epsilon(1e-15));
    CHECK(f[1] == 0.0);
    CHECK(repelling_force(two, 0, 0.0) == VectorXd::Zero(2));
    CHECK_THROWS_AS(repelling_force(two, 2, 1.0), ConfigError);

    const ParticlesXd x = random_particles(5, 3, 9, -1, 1);
    const ParticlesXd all = detail::repelling_all(x, 0.7);
    for (Index i = 0; i < 9; ++i) CHECK((all.col(i) - repelling_force(x, i, 0.7)).norm() <= 1e-14);
}

TEST_CASE("schedules")
{
    CHECK(parse_schedule("const:1")(5.0) == 1.0);
    CHECK(parse_schedule("2.5")(0.3) == 2.5);
    CHECK(parse_schedule("linear:0:10")(0.5) == 5.0);
    CHECK(parse_schedule("expdecay:10:2.302585")(1.0) == doctest::Approx(10 * std::exp(-2.302585)));
    CHECK(parse_schedule("invsq:1")(2.0) == doctest::Approx(0.2));
    CHECK(parse_schedule("linear:0:10").to_string() == "linear:0:10");
    CHECK_THROWS_AS(parse_schedule("linear:1"), ConfigError);
    CHECK_THROWS_AS(parse_schedule("cubic:1"), ConfigError);
    CHECK_THROWS_AS(parse_schedule("1x"), ConfigError);
}

TEST_CASE("config validation")
{
    Config cfg;
    cfg.h = 0;
    CHECK_THROWS_AS(cfg.validate(), ConfigError);
    cfg = Config{};
    cfg.particles = 0;
    CHECK_THROWS_AS(cfg.validate(), ConfigError);
    cfg = Config{};
    cfg.beta = parse_schedule("linear:1:-1");
    cfg.steps = 20;
    CHECK_THROWS_AS(cfg.validate(), ConfigError);
    CHECK_THROWS_AS(parse_scheme("reflect"), ConfigError);
}

TEST_CASE("penalty step with null coefficients equals projection")
{
    const Domain ball = Domain::ball(VectorXd::Zero(2), 3.0);
    const Ensemble<double> ens{random_particles(6, 2, 30, -6, 6), 0, 0};
    const NoiseStreams noise{9};
    const Config pen = null_config(Scheme::Penalty), proj = null_config(Scheme::Projection);
    const auto a = cbo_step_penalty(ens, pen, sphere(2), ball, noise);
    const auto b = cbo_step_projection(ens, proj, sphere(2), ball, noise);
    for (Index i = 0; i < 30; ++i) {
        CHECK(a.positions.col(i) == ball.project(ens.positions.col(i)));
        CHECK(b.positions.col(i) == ball.project(ens.positions.col(i)));
    }
    CHECK(a.positions == b.positions);
}

TEST_CASE("consensus fixed point and single particle")
{
    const Domain ball = Domain::ball(VectorXd::Zero(2), 3.0);
    Config cfg;
    cfg.beta = Schedule<double>::constant(1);
    cfg.sigma = Schedule<double>::constant(4);
    ParticlesXd same(2, 6);
    same.colwise() = Eigen::Vector2d(0.5, -0.25);
    for (Scheme s : {Scheme::Penalty, Scheme::Projection}) {
        cfg.scheme = s;
        const auto next = cbo_step(Ensemble<double>{same, 0, 0}, cfg, sphere(2), ball, NoiseStreams{1});
        CHECK(next.positions == same);
        const ParticlesXd one = same.leftCols(1);
        CHECK(cbo_step(Ensemble<double>{one, 0, 0}, cfg, sphere(2), ball, NoiseStreams{1}).positions == one);
    }
}

TEST_CASE("projection step stores projected predictor")
{
    const Domain ball = Domain::ball(VectorXd::Zero(2), 3.0);
    Config cfg = null_config(Scheme::Projection);
    cfg.beta = Schedule<double>::constant(1);
    cfg.h = 1.0;
    // h beta = 1 moves the worse particle exactly onto the consensus.
    ParticlesXd x(2, 2);
    x << 0, 2.9, 0, 0;
    Objective<double> f;
    f.dimension = 2;
    f.eval = [](const ConstVectorRef<double>& p) { return -p[0]; };
    cfg.alpha = 1e16;
    const auto next = cbo_step_projection(Ensemble<double>{x, 0, 0}, cfg, f, ball, NoiseStreams{1});
    CHECK((next.positions.col(0) - Eigen::Vector2d(2.9, 0)).norm() <= 1e-15);

    ParticlesXd far(2, 1);
    far << 6, 0;
    const auto outside = cbo_step_projection(Ensemble<double>{far, 0, 0}, null_config(Scheme::Projection), f, ball,
                                             NoiseStreams{1});
    CHECK((outside.positions.col(0) - Eigen::Vector2d(3, 0)).norm() <= 1e-15);
}

TEST_CASE("schemes agree while no constraint is active")
{
    const Domain ball = Domain::ball(VectorXd::Zero(2), 100.0);
    Config cfg;
    cfg.sigma = Schedule<double>::constant(0);
    cfg.h = 0.01;
    const Ensemble<double> ens{random_particles(8, 2, 40, -1, 1), 0, 0};
    cfg.scheme = Scheme::Penalty;
    const auto a = cbo_step(ens, cfg, sphere(2), ball, NoiseStreams{4});
    cfg.scheme = Scheme::Projection;
    const auto b = cbo_step(ens, cfg, sphere(2), ball, NoiseStreams{4});
    CHECK(a.positions == b.positions);
}

TEST_CASE("projection scheme stays feasible")
{
    const Domain doms[] = {Domain::ball(VectorXd::Zero(2), 1.0), Domain::heart()};
    for (const Domain& dom : doms) {
        Config cfg;
        cfg.sigma = Schedule<double>::constant(8);
        cfg.h = 0.1;
        cfg.particles = 50;
        cfg.alpha = 10;
        cfg.seed = 3;
        Ensemble<double> ens = initial_ensemble(cfg, dom);
        for (int k = 0; k < 20; ++k) {
            ens = cbo_step(ens, cfg, sphere(2), dom, NoiseStreams{cfg.seed});
            for (Index i = 0; i < ens.size(); ++i) CHECK(dom.contains(ens.positions.col(i)));
        }
    }
}

TEST_CASE("run_cbo")
{
    const Domain ball = Domain::ball(VectorXd::Zero(2), 3.0);
    Config cfg;
    cfg.particles = 30;
    cfg.seed = 77;
    cfg.steps = 0;
    const auto zero = run_cbo(cfg, sphere(2), ball, true);
    const ParticlesXd& x0 = zero.final_ensemble.positions;
    CHECK(zero.final_consensus == consensus(x0, detail::evaluate_all(sphere(2), x0), cfg.alpha));
    CHECK(zero.trace.size() == 1);

    cfg.steps = 15;
    cfg.repelling = Schedule<double>::inverse_square(1);
    const auto a = run_cbo(cfg, sphere(2), ball, true), b = run_cbo(cfg, sphere(2), ball, true);
    CHECK(a.final_ensemble.positions == b.final_ensemble.positions);
    CHECK(a.final_consensus == b.final_consensus);
    CHECK(a.trace.size() == 16);
    cfg.seed = 78;
    CHECK(run_cbo(cfg, sphere(2), ball).final_consensus != a.final_consensus);

    CHECK_THROWS_AS(run_cbo(cfg, sphere(3), ball), DimensionMismatch);
}

TEST_CASE("noise streams are counter based")
{
    const NoiseStreams s{12};
    CounterRng a = s.particle(3, 7), b = s.particle(3, 7), c = s.particle(7, 3);
    CHECK(a() == b());
    CHECK(s.particle(3, 7)() != c());
    CHECK(replica_seed(1, 0) != replica_seed(1, 1));
    CHECK(replica_seed(1, 5) == replica_seed(1, 5));

    CounterRng u(1);
    double m = 0;
    for (int k = 0; k < 100000; ++k) {
        const double v = u.uniform();
        CHECK_UNARY(v >= 0.0 && v < 1.0);
        m += v;
    }
    CHECK(std::abs(m / 100000 - 0.5) <= 5 * std::sqrt(1.0 / 12 / 100000));
}

TEST_CASE("Langevin step")
{
    const Domain box = Domain::box(VectorXd::Constant(2, -1), VectorXd::Constant(2, 1));
    LangevinConfig<double> cfg;
    cfg.grad_U = [](const ConstVectorRef<double>& x) { return VectorXd(VectorXd::Zero(x.size())); };
    cfg.sigma_noise = 0;
    cfg.h = 0.1;
    const ParticlesXd x = random_particles(10, 2, 8, -1, 1);
    CHECK(langevin_step_projection(Ensemble<double>{x, 0, 0}, cfg, box).positions == x);

    // grad V(z) = z with N = 2: drift on particle 1 is -(x1 - x2) / 2.
    cfg.grad_V = [](const ConstVectorRef<double>& z) { return VectorXd(z); };
    cfg.h = 1;
    ParticlesXd two(2, 2);
    two << 0.4, -0.2, 0.1, 0.3;
    const auto next = langevin_step_projection(Ensemble<double>{two, 0, 0}, cfg, box);
    const VectorXd expect = two.col(0) - (two.col(0) - two.col(1)) / 2;
    CHECK((next.positions.col(0) - expect).norm() <= 1e-15);
    CHECK(next.time == 1.0);
    CHECK(next.step == 1);
}

TEST_CASE("batched Langevin interaction equals the pairwise sum")
{
    const double kappa = 0.2;
    const Domain box = Domain::box(VectorXd::Constant(1, -2), VectorXd::Constant(1, 2));
    LangevinConfig<double> pair;
    pair.grad_U = [](const ConstVectorRef<double>& x) { return VectorXd(x.array().cube() - x.array()); };
    pair.grad_V = [kappa](const ConstVectorRef<double>& z) { return VectorXd(kappa * z); };
    pair.sigma_noise = 1;
    pair.h = 2e-3;
    pair.seed = 5;
    LangevinConfig<double> batched = pair;
    batched.interaction_drift = [kappa](const ParticlesXd& x) -> ParticlesXd {
        return kappa * (x.colwise() - VectorXd(x.rowwise().mean()));
    };
    const Ensemble<double> ens{random_particles(11, 1, 200, -2, 2), 0, 0};
    const auto a = langevin_step_projection(ens, pair, box), b = langevin_step_projection(ens, batched, box);
    CHECK((a.positions - b.positions).cwiseAbs().maxCoeff() <= 1e-13);
}
