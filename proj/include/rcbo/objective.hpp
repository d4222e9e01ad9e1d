#ifndef RCBO_OBJECTIVE_HPP
#define RCBO_OBJECTIVE_HPP

#include "rcbo/domain.hpp"
#include "rcbo/types.hpp"

#include <cmath>
#include <functional>
#include <limits>
#include <numbers>
#include <optional>
#include <string>
#include <utility>

namespace rcbo {

template <typename Scalar>
struct Objective {
    Index dimension = 0;
    std::function<Scalar(const ConstVectorRef<Scalar>&)> eval;
    std::optional<Vector<Scalar>> known_minimizer;
    std::string name;

    Scalar operator()(const ConstVectorRef<Scalar>& x) const { return eval(x); }
};

// Ackley function shifted so that its global minimum 0 sits at (2, 2).
template <typename Derived>
typename Derived::Scalar ackley_translated(const Eigen::MatrixBase<Derived>& p)
{
    using Scalar = typename Derived::Scalar;
    using std::cos;
    using std::exp;
    using std::sqrt;
    constexpr Scalar two_pi = 2 * std::numbers::pi_v<Scalar>;
    const Scalar x = p[0] - 2;
    const Scalar y = p[1] - 2;
    return -20 * exp(Scalar(-0.2) * sqrt((x * x + y * y) / 2))
           - exp((cos(two_pi * x) + cos(two_pi * y)) / 2) + 20 + std::numbers::e_v<Scalar>;
}

template <typename Derived>
typename Derived::Scalar rastrigin(const Eigen::MatrixBase<Derived>& x)
{
    using Scalar = typename Derived::Scalar;
    using std::cos;
    constexpr Scalar two_pi = 2 * std::numbers::pi_v<Scalar>;
    Scalar sum = 10 * Scalar(x.size());
    for (Index i = 0; i < x.size(); ++i) sum += x[i] * x[i] - 10 * cos(two_pi * x[i]);
    return sum;
}

template <typename Derived>
typename Derived::Scalar rosenbrock2(const Eigen::MatrixBase<Derived>& p)
{
    using Scalar = typename Derived::Scalar;
    const Scalar a = 1 - p[0];
    const Scalar b = p[1] - p[0] * p[0];
    return a * a + 100 * b * b;
}

template <typename Derived>
typename Derived::Scalar townsend(const Eigen::MatrixBase<Derived>& p)
{
    using Scalar = typename Derived::Scalar;
    using std::cos;
    using std::sin;
    const Scalar c = cos((p[0] - Scalar(0.1)) * p[1]);
    return -c * c - p[0] * sin(3 * p[0] + p[1]);
}

template <typename Scalar = double>
Objective<Scalar> make_ackley()
{
    Objective<Scalar> obj;
    obj.dimension = 2;
    obj.eval = [](const ConstVectorRef<Scalar>& x) { return ackley_translated(x); };
    obj.known_minimizer = Vector<Scalar>::Constant(2, Scalar(2));
    obj.name = "ackley";
    return obj;
}

template <typename Scalar = double>
Objective<Scalar> make_rastrigin(Index d)
{
    if (d < 1) throw ConfigError("rastrigin dimension must be >= 1");
    Objective<Scalar> obj;
    obj.dimension = d;
    obj.eval = [](const ConstVectorRef<Scalar>& x) { return rastrigin(x); };
    obj.known_minimizer = Vector<Scalar>::Zero(d);
    obj.name = "rastrigin";
    return obj;
}

template <typename Scalar = double>
Objective<Scalar> make_rosenbrock()
{
    Objective<Scalar> obj;
    obj.dimension = 2;
    obj.eval = [](const ConstVectorRef<Scalar>& x) { return rosenbrock2(x); };
    obj.known_minimizer = Vector<Scalar>::Constant(2, Scalar(1));
    obj.name = "rosenbrock";
    return obj;
}

// Brute-force minimizer of a planar objective over the feasible nodes of a
// uniform per_axis x per_axis grid spanning [lower, upper].
template <typename Scalar>
Vector<Scalar> grid_minimizer(const Objective<Scalar>& obj, const FeasibleDomain<Scalar>& dom,
                              const Vector<Scalar>& lower, const Vector<Scalar>& upper, Index per_axis)
{
    require_dimension(2, obj.dimension);
    require_dimension(2, dom.dimension());
    if (per_axis < 2) throw ConfigError("grid needs at least 2 nodes per axis");
    Vector<Scalar> best(2), p(2);
    Scalar best_value = std::numeric_limits<Scalar>::infinity();
    for (Index i = 0; i < per_axis; ++i) {
        p[0] = lower[0] + (upper[0] - lower[0]) * Scalar(i) / Scalar(per_axis - 1);
        for (Index j = 0; j < per_axis; ++j) {
            p[1] = lower[1] + (upper[1] - lower[1]) * Scalar(j) / Scalar(per_axis - 1);
            if (!dom.contains(p)) continue;
            const Scalar v = obj(p);
            if (v < best_value) {
                best_value = v;
                best = p;
            }
        }
    }
    if (!std::isfinite(double(best_value))) throw ConfigError("grid contains no feasible node");
    return best;
}

// Townsend over the heart region; the success reference is the 2000 x 2000
// grid minimizer on [-3, 3]^2, computed once per process.
template <typename Scalar = double>
Objective<Scalar> make_townsend()
{
    Objective<Scalar> obj;
    obj.dimension = 2;
    obj.eval = [](const ConstVectorRef<Scalar>& x) { return townsend(x); };
    obj.name = "townsend";
    static const Vector<Scalar> reference = [&] {
        return grid_minimizer(obj, FeasibleDomain<Scalar>::heart(), Vector<Scalar>(Vector<Scalar>::Constant(2, Scalar(-3))),
                              Vector<Scalar>(Vector<Scalar>::Constant(2, Scalar(3))), Index(2000));
    }();
    obj.known_minimizer = reference;
    return obj;
}

} // namespace rcbo

#endif // RCBO_OBJECTIVE_HPP
