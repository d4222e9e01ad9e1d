#include "rcbo/domain.hpp"

#include <doctest.h>

#include <cmath>
#include <numbers>

using namespace rcbo;

namespace {

Eigen::Vector2d v2(double a, double b) { return {a, b}; }

// Direct transcription of the heart inequality, independent of the library.
double heart_g(double x, double y)
{
    const double t = std::atan2(x, y);
    const double a = 2 * std::cos(t) - 0.5 * std::cos(2 * t) - 0.25 * std::cos(3 * t) - 0.125 * std::cos(4 * t);
    return x * x + y * y - (a * a + 4 * std::sin(t) * std::sin(t));
}

Eigen::Vector2d heart_curve(double t)
{
    const double a = 2 * std::cos(t) - 0.5 * std::cos(2 * t) - 0.25 * std::cos(3 * t) - 0.125 * std::cos(4 * t);
    const double r = std::sqrt(a * a + 4 * std::sin(t) * std::sin(t));
    return {r * std::sin(t), r * std::cos(t)};
}

VectorXd random_point(CounterRng& rng, Index d, double lo, double hi)
{
    VectorXd p(d);
    for (Index k = 0; k < d; ++k) p[k] = lo + (hi - lo) * rng.uniform();
    return p;
}

} // namespace

TEST_CASE("ball membership")
{
    const Domain ball = Domain::ball(VectorXd::Zero(2), 3.0);
    CHECK(ball.contains(v2(0, 0)));
    CHECK(ball.contains(v2(3, 0)));
    CHECK_FALSE(ball.contains(v2(4, 0)));
    CHECK_THROWS_AS(ball.contains(VectorXd::Zero(3)), DimensionMismatch);
}

TEST_CASE("ball projection and penalty")
{
    const Domain ball = Domain::ball(VectorXd::Zero(2), 3.0);
    CHECK((ball.project(v2(6, 0)) - v2(3, 0)).norm() <= 1e-15);
    CHECK(ball.project(v2(1, 1)) == v2(1, 1));
    CHECK((ball.penalty_vector(v2(6, 0)) - v2(3, 0)).norm() <= 1e-15);
    CHECK(ball.penalty_vector(v2(1, -2)) == VectorXd::Zero(2));
}

TEST_CASE("box penalty is the clamp residual")
{
    const Domain box = Domain::box(v2(-1, -1), v2(1, 1));
    CHECK(box.penalty_vector(v2(2, 0.5)) == v2(1, 0));
    CHECK(box.project(v2(-3, 7)) == v2(-1, 1));
    CHECK_THROWS_AS(Domain::box(v2(0, 0), v2(1, 0)), ConfigError);
    CHECK_THROWS_AS(Domain::ball(VectorXd::Zero(2), 0.0), ConfigError);
}

TEST_CASE("inward normals")
{
    const Domain ball = Domain::ball(VectorXd::Zero(2), 3.0);
    CHECK((ball.inward_normal(v2(3, 0)) - v2(-1, 0)).norm() <= 1e-15);
    CHECK((ball.inward_normal(v2(0, -3)) - v2(0, 1)).norm() <= 1e-15);
}

TEST_CASE("heart projection from (0, 5)")
{
    const Domain heart = Domain::heart();
    const VectorXd p = heart.project(v2(0, 5));
    CHECK(std::abs(heart_g(p[0], p[1])) <= 1e-10);
    CHECK(heart.contains(p));

    const VectorXd nu = heart.inward_normal(p);
    CHECK(std::abs(nu.norm() - 1) <= 1e-12);
    // Radial shrink stays inside: the region is star-shaped about the origin.
    const VectorXd inner = 0.98 * p;
    REQUIRE(heart_g(inner[0], inner[1]) < 0);
    CHECK(nu.dot(inner - p) > 0);
}

TEST_CASE("heart projection below the tip beats random boundary samples")
{
    const Domain heart = Domain::heart();
    const Eigen::Vector2d x = v2(0, -4);
    const VectorXd p = heart.project(x);
    CHECK(std::abs(heart_g(p[0], p[1])) <= 1e-10);
    const double d = (p - x).norm();
    CounterRng rng(2024);
    for (int k = 0; k < 64; ++k) {
        const Eigen::Vector2d b = heart_curve(-std::numbers::pi + 2 * std::numbers::pi * rng.uniform());
        CHECK(d <= (b - x).norm() + 1e-12);
    }
}

TEST_CASE("heart projection survives rays that miss the region")
{
    const Domain heart = Domain::heart();
    CounterRng rng(5);
    for (int k = 0; k < 2000; ++k) {
        const VectorXd x = random_point(rng, 2, -6, 6);
        const VectorXd p = heart.project(x);
        CHECK(heart.contains(p));
        if (heart_g(x[0], x[1]) > 0) CHECK(std::abs(heart_g(p[0], p[1])) <= 1e-10);
    }
}

TEST_CASE("heart gradient matches central differences")
{
    CounterRng rng(9);
    for (int k = 0; k < 200; ++k) {
        const Eigen::Vector2d p = random_point(rng, 2, -3, 3);
        if (std::abs(p[0]) < 0.05 && p[1] < 0) continue; // atan2 branch cut
        const double e = 1e-6;
        const Eigen::Vector2d fd((heart_g(p[0] + e, p[1]) - heart_g(p[0] - e, p[1])) / (2 * e),
                                 (heart_g(p[0], p[1] + e) - heart_g(p[0], p[1] - e)) / (2 * e));
        CHECK((heart_gradient<double>(p) - fd).norm() <= 1e-5 * (1 + fd.norm()));
    }
}

TEST_CASE("projection idempotence and feasibility on 1e4 points")
{
    const Domain doms[] = {Domain::ball(v2(0.5, -1), 3.0), Domain::box(v2(-1, -2), v2(2, 1)), Domain::heart()};
    for (const Domain& dom : doms) {
        CAPTURE(dom.kind());
        CounterRng rng(17);
        int bad_feasible = 0, bad_idem = 0;
        for (int k = 0; k < 10000; ++k) {
            const VectorXd x = random_point(rng, 2, -8, 8);
            const VectorXd p = dom.project(x);
            if (!dom.contains(p)) ++bad_feasible;
            if ((dom.project(p) - p).norm() > 1e-9) ++bad_idem;
        }
        CHECK(bad_feasible == 0);
        CHECK(bad_idem == 0);
    }
}

TEST_CASE("ball and box projections are nonexpansive")
{
    const Domain doms[] = {Domain::ball(VectorXd::Zero(3), 2.0),
                           Domain::box(VectorXd::Constant(3, -1), VectorXd::Constant(3, 1))};
    for (const Domain& dom : doms) {
        CounterRng rng(3);
        for (int k = 0; k < 2000; ++k) {
            const VectorXd x = random_point(rng, 3, -5, 5), y = random_point(rng, 3, -5, 5);
            CHECK((dom.project(x) - dom.project(y)).norm() <= (x - y).norm() + 1e-12);
        }
    }
}

TEST_CASE("ball projection distance and interior penalty")
{
    const VectorXd c = v2(1, 2);
    const double r = 1.5;
    const Domain ball = Domain::ball(c, r);
    CounterRng rng(11);
    for (int k = 0; k < 2000; ++k) {
        const VectorXd x = random_point(rng, 2, -4, 6);
        const double expect = std::max((x - c).norm() - r, 0.0);
        CHECK(std::abs((ball.project(x) - x).norm() - expect) <= 1e-12);
        if (ball.contains(x)) {
            const VectorXd pen = ball.penalty_vector(x);
            CHECK(pen[0] == 0.0);
            CHECK(pen[1] == 0.0);
        }
    }
}

TEST_CASE("inward normals are unit vectors")
{
    const Domain ball = Domain::ball(VectorXd::Zero(2), 3.0);
    const Domain heart = Domain::heart();
    CounterRng rng(23);
    for (int k = 0; k < 500; ++k) {
        const VectorXd x = random_point(rng, 2, -6, 6);
        CHECK(std::abs(ball.inward_normal(ball.project(x)).norm() - 1) <= 1e-12);
        CHECK(std::abs(heart.inward_normal(heart.project(x)).norm() - 1) <= 1e-12);
    }
}

TEST_CASE("uniform sampling")
{
    CounterRng rng(99);
    const Domain ball = Domain::ball(VectorXd::Zero(2), 3.0);
    const ParticlesXd b = ball.sample_uniform(rng, 1000);
    CHECK(b.cols() == 1000);
    CHECK((b.colwise().norm().array() <= 3.0).all());

    const VectorXd lo = v2(-1, 2), hi = v2(3, 4);
    const ParticlesXd x = Domain::box(lo, hi).sample_uniform(rng, 1000);
    const VectorXd mean = x.rowwise().mean();
    for (int k = 0; k < 2; ++k) {
        const double sd = (hi[k] - lo[k]) / std::sqrt(12.0) / std::sqrt(1000.0);
        CHECK(std::abs(mean[k] - (lo[k] + hi[k]) / 2) <= 5 * sd);
    }

    const ParticlesXd h = Domain::heart().sample_uniform(rng, 1000);
    for (Index i = 0; i < h.cols(); ++i) CHECK(heart_g(h(0, i), h(1, i)) <= 0);

    // Ball sampling is uniform in area: P(|x| <= r/2) = 1/4.
    const ParticlesXd many = ball.sample_uniform(rng, 40000);
    const double inner = double((many.colwise().norm().array() <= 1.5).count()) / 40000.0;
    CHECK(std::abs(inner - 0.25) <= 5 * std::sqrt(0.25 * 0.75 / 40000.0));
}

TEST_CASE("generic level set matches the ball")
{
    LevelSet<double> disc;
    disc.value = [](const ConstVectorRef<double>& p) { return p.squaredNorm() - 4.0; };
    disc.gradient = [](const ConstVectorRef<double>& p) { return VectorXd(2 * p); };
    disc.lower = VectorXd::Constant(2, -2);
    disc.upper = VectorXd::Constant(2, 2);
    const Domain ls = Domain::level_set(disc);
    const Domain ball = Domain::ball(VectorXd::Zero(2), 2.0);
    CounterRng rng(1);
    for (int k = 0; k < 500; ++k) {
        const VectorXd x = random_point(rng, 2, -5, 5);
        CHECK((ls.project(x) - ball.project(x)).norm() <= 1e-9);
    }
}

TEST_CASE("rejection sampling budget")
{
    LevelSet<double> speck;
    speck.value = [](const ConstVectorRef<double>& p) { return p.squaredNorm() - 1e-10; };
    speck.gradient = [](const ConstVectorRef<double>& p) { return VectorXd(2 * p); };
    speck.lower = VectorXd::Constant(2, -1);
    speck.upper = VectorXd::Constant(2, 1);
    CounterRng rng(4);
    CHECK_THROWS_AS(Domain::level_set(speck).sample_uniform(rng, 10), RejectionBudgetExceeded);
}
