#ifndef RCBO_DOMAIN_HPP
#define RCBO_DOMAIN_HPP

#include "rcbo/random.hpp"
#include "rcbo/types.hpp"

#include <cmath>
#include <functional>
#include <limits>
#include <numbers>
#include <random>
#include <string>
#include <utility>
#include <variant>

namespace rcbo {

struct ProjectionSettings {
    double tol_proj = 1e-10;
    int max_newton_iters = 50;
    bool bisection_fallback = true;

    void validate() const
    {
        if (!(tol_proj > 0.0)) throw ConfigError("tol_proj must be positive");
        if (max_newton_iters < 1) throw ConfigError("max_newton_iters must be >= 1");
    }
};

template <typename Scalar>
struct Ball {
    Vector<Scalar> center;
    Scalar radius;
};

template <typename Scalar>
struct Box {
    Vector<Scalar> lower;
    Vector<Scalar> upper;
};

// Feasible iff value(x) <= 0. The bounding box is used for rejection
// sampling and must contain the whole feasible set.
template <typename Scalar>
struct LevelSet {
    std::function<Scalar(const ConstVectorRef<Scalar>&)> value;
    std::function<Vector<Scalar>(const ConstVectorRef<Scalar>&)> gradient;
    Vector<Scalar> lower;
    Vector<Scalar> upper;
};

// Star-shaped planar heart: x^2 + y^2 <= R(t)^2 with t = atan2(x, y) and
// R(t)^2 = [2cos t - cos2t/2 - cos3t/4 - cos4t/8]^2 + 4 sin^2 t.
struct HeartRegion {};

namespace detail {

template <typename Scalar>
void heart_radius_sq(Scalar t, Scalar& r2, Scalar& dr2)
{
    using std::cos;
    using std::sin;
    const Scalar y = 2 * cos(t) - cos(2 * t) / 2 - cos(3 * t) / 4 - cos(4 * t) / 8;
    const Scalar dy = -2 * sin(t) + sin(2 * t) + Scalar(3) * sin(3 * t) / 4 + sin(4 * t) / 2;
    const Scalar s = sin(t);
    r2 = y * y + 4 * s * s;
    dr2 = 2 * y * dy + 8 * s * cos(t);
}

} // namespace detail

template <typename Scalar>
Scalar heart_level(const ConstVectorRef<Scalar>& p)
{
    using std::atan2;
    Scalar r2, dr2;
    detail::heart_radius_sq(atan2(p[0], p[1]), r2, dr2);
    return p[0] * p[0] + p[1] * p[1] - r2;
}

template <typename Scalar>
Vector<Scalar> heart_gradient(const ConstVectorRef<Scalar>& p)
{
    using std::atan2;
    const Scalar rho2 = p[0] * p[0] + p[1] * p[1];
    Vector<Scalar> g = 2 * p;
    if (rho2 == Scalar(0)) return g;
    Scalar r2, dr2;
    detail::heart_radius_sq(atan2(p[0], p[1]), r2, dr2);
    // d/dx atan2(x, y) = y / rho^2, d/dy atan2(x, y) = -x / rho^2
    g[0] -= dr2 * p[1] / rho2;
    g[1] += dr2 * p[0] / rho2;
    return g;
}

// Point on the heart boundary at polar angle t (measured from the +y axis).
template <typename Scalar>
Vector<Scalar> heart_boundary_point(Scalar t)
{
    using std::sin;
    using std::cos;
    using std::sqrt;
    Scalar r2, dr2;
    detail::heart_radius_sq(t, r2, dr2);
    const Scalar r = sqrt(r2);
    Vector<Scalar> p(2);
    p << r * sin(t), r * cos(t);
    return p;
}

// Closed feasible region with membership, projection, penalty, inward
// normal and uniform sampling. Immutable after construction.
template <typename Scalar>
class FeasibleDomain {
public:
    using Shape = std::variant<Ball<Scalar>, Box<Scalar>, LevelSet<Scalar>, HeartRegion>;
    using VectorType = Vector<Scalar>;
    using Ref = ConstVectorRef<Scalar>;

    static FeasibleDomain ball(VectorType center, Scalar radius, ProjectionSettings settings = {})
    {
        if (!(radius > 0)) throw ConfigError("ball radius must be positive");
        if (center.size() < 1) throw ConfigError("ball center must have dimension >= 1");
        const Index d = center.size();
        return FeasibleDomain(Ball<Scalar>{std::move(center), radius}, d, settings);
    }

    static FeasibleDomain box(VectorType lower, VectorType upper, ProjectionSettings settings = {})
    {
        if (lower.size() < 1) throw ConfigError("box must have dimension >= 1");
        require_dimension(lower.size(), upper.size());
        if (!(lower.array() < upper.array()).all())
            throw ConfigError("box requires lower < upper componentwise");
        const Index d = lower.size();
        return FeasibleDomain(Box<Scalar>{std::move(lower), std::move(upper)}, d, settings);
    }

    static FeasibleDomain level_set(LevelSet<Scalar> shape, ProjectionSettings settings = {})
    {
        if (!shape.value || !shape.gradient) throw ConfigError("level set requires value and gradient");
        require_dimension(shape.lower.size(), shape.upper.size());
        if (!(shape.lower.array() < shape.upper.array()).all())
            throw ConfigError("level set bounding box requires lower < upper");
        const Index d = shape.lower.size();
        return FeasibleDomain(std::move(shape), d, settings);
    }

    static FeasibleDomain heart(ProjectionSettings settings = {})
    {
        return FeasibleDomain(HeartRegion{}, 2, settings);
    }

    Index dimension() const { return dim_; }
    const Shape& shape() const { return shape_; }
    const ProjectionSettings& settings() const { return settings_; }

    std::string kind() const
    {
        return std::visit(
            [](const auto& s) -> std::string {
                using S = std::decay_t<decltype(s)>;
                if constexpr (std::is_same_v<S, Ball<Scalar>>) return "ball";
                else if constexpr (std::is_same_v<S, Box<Scalar>>) return "box";
                else if constexpr (std::is_same_v<S, LevelSet<Scalar>>) return "levelset";
                else return "levelset-heart";
            },
            shape_);
    }

    // Signed level value: <= 0 inside. Defined for every variant.
    Scalar level(const Ref& x) const
    {
        require_dimension(dim_, x.size());
        return std::visit(
            [&](const auto& s) -> Scalar {
                using S = std::decay_t<decltype(s)>;
                if constexpr (std::is_same_v<S, Ball<Scalar>>)
                    return (x - s.center).norm() - s.radius;
                else if constexpr (std::is_same_v<S, Box<Scalar>>)
                    return (s.lower - x).cwiseMax(x - s.upper).maxCoeff();
                else if constexpr (std::is_same_v<S, LevelSet<Scalar>>)
                    return s.value(x);
                else
                    return heart_level<Scalar>(x);
            },
            shape_);
    }

    bool contains(const Ref& x) const
    {
        require_dimension(dim_, x.size());
        return std::visit(
            [&](const auto& s) -> bool {
                using S = std::decay_t<decltype(s)>;
                if constexpr (std::is_same_v<S, Ball<Scalar>>)
                    return (x - s.center).squaredNorm() <= s.radius * s.radius;
                else if constexpr (std::is_same_v<S, Box<Scalar>>)
                    return (x.array() >= s.lower.array()).all() && (x.array() <= s.upper.array()).all();
                else if constexpr (std::is_same_v<S, LevelSet<Scalar>>)
                    return s.value(x) <= Scalar(settings_.tol_proj);
                else
                    return heart_level<Scalar>(x) <= Scalar(settings_.tol_proj);
            },
            shape_);
    }

    // Euclidean projection for Ball and Box; for level sets, the first
    // boundary crossing along the ray x - s * grad/|grad|, s >= 0.
    VectorType project(const Ref& x) const
    {
        require_dimension(dim_, x.size());
        return std::visit(
            [&](const auto& s) -> VectorType {
                using S = std::decay_t<decltype(s)>;
                if constexpr (std::is_same_v<S, Ball<Scalar>>) {
                    return project_ball(s, x);
                } else if constexpr (std::is_same_v<S, Box<Scalar>>) {
                    return x.cwiseMax(s.lower).cwiseMin(s.upper);
                } else if constexpr (std::is_same_v<S, LevelSet<Scalar>>) {
                    return project_along_gradient(s.value, s.gradient, x, s.lower, s.upper, nullptr);
                } else {
                    static const VectorType origin = VectorType::Zero(2);
                    return project_along_gradient(
                        [](const Ref& p) { return heart_level<Scalar>(p); },
                        [](const Ref& p) { return heart_gradient<Scalar>(p); }, x, VectorType::Constant(2, -3),
                        VectorType::Constant(2, 3), &origin);
                }
            },
            shape_);
    }

    // x - project(x); half the gradient of the squared distance to the set.
    VectorType penalty_vector(const Ref& x) const
    {
        if (contains(x)) return VectorType::Zero(dim_);
        return x - project(x);
    }

    VectorType inward_normal(const Ref& x) const
    {
        require_dimension(dim_, x.size());
        VectorType n = std::visit(
            [&](const auto& s) -> VectorType {
                using S = std::decay_t<decltype(s)>;
                if constexpr (std::is_same_v<S, Ball<Scalar>>) {
                    return s.center - x;
                } else if constexpr (std::is_same_v<S, Box<Scalar>>) {
                    const Scalar tol = Scalar(settings_.tol_proj);
                    VectorType v = VectorType::Zero(dim_);
                    for (Index k = 0; k < dim_; ++k) {
                        if (x[k] <= s.lower[k] + tol) v[k] += 1;
                        if (x[k] >= s.upper[k] - tol) v[k] -= 1;
                    }
                    return v;
                } else if constexpr (std::is_same_v<S, LevelSet<Scalar>>) {
                    return -s.gradient(x);
                } else {
                    return -heart_gradient<Scalar>(x);
                }
            },
            shape_);
        const Scalar len = n.norm();
        if (!(len >= Scalar(1e-12))) throw DegenerateGradient("inward normal undefined at this point");
        return n / len;
    }

    // n i.i.d. points uniform on the domain, one per column.
    Particles<Scalar> sample_uniform(CounterRng& rng, Index n) const
    {
        if (n < 1) throw ConfigError("sample_uniform requires n >= 1");
        Particles<Scalar> out(dim_, n);
        std::visit(
            [&](const auto& s) {
                using S = std::decay_t<decltype(s)>;
                if constexpr (std::is_same_v<S, Ball<Scalar>>) {
                    std::normal_distribution<double> gauss;
                    for (Index i = 0; i < n; ++i) {
                        VectorType dir(dim_);
                        Scalar len = 0;
                        do {
                            for (Index k = 0; k < dim_; ++k) dir[k] = Scalar(gauss(rng));
                            len = dir.norm();
                        } while (len == Scalar(0));
                        const Scalar r = s.radius * Scalar(std::pow(rng.uniform(), 1.0 / double(dim_)));
                        out.col(i) = project_ball(s, s.center + dir * (r / len));
                    }
                } else if constexpr (std::is_same_v<S, Box<Scalar>>) {
                    for (Index i = 0; i < n; ++i)
                        for (Index k = 0; k < dim_; ++k)
                            out(k, i) = s.lower[k] + Scalar(rng.uniform()) * (s.upper[k] - s.lower[k]);
                } else {
                    VectorType lo, hi;
                    if constexpr (std::is_same_v<S, LevelSet<Scalar>>) {
                        lo = s.lower;
                        hi = s.upper;
                    } else {
                        lo = VectorType::Constant(2, Scalar(-3));
                        hi = VectorType::Constant(2, Scalar(3));
                    }
                    rejection_sample(rng, lo, hi, out);
                }
            },
            shape_);
        return out;
    }

private:
    FeasibleDomain(Shape shape, Index dim, ProjectionSettings settings)
        : shape_(std::move(shape)), dim_(dim), settings_(settings)
    {
        settings_.validate();
    }

    static VectorType project_ball(const Ball<Scalar>& s, const Ref& x)
    {
        const VectorType diff = x - s.center;
        const Scalar r2 = s.radius * s.radius;
        if (diff.squaredNorm() <= r2) return x;
        Scalar scale = s.radius / diff.norm();
        VectorType y = s.center + scale * diff;
        // Rounding can leave y a few ulps outside; shrink until it is inside.
        while ((y - s.center).squaredNorm() > r2) {
            scale *= Scalar(1) - std::numeric_limits<Scalar>::epsilon();
            y = s.center + scale * diff;
        }
        return y;
    }

    // First sign change of g along x - s * grad/|grad|. The scan stops once the
    // ray has left the bounding box for good; a star-shaped set then falls
    // back to the segment towards its centre.
    template <typename Value, typename Gradient>
    VectorType project_along_gradient(const Value& value, const Gradient& gradient, const Ref& x,
                                      const VectorType& box_lo, const VectorType& box_hi,
                                      const VectorType* star_center) const
    {
        const Scalar tol = Scalar(settings_.tol_proj);
        const Scalar g0 = value(x);
        if (g0 <= tol) return x;

        const VectorType grad0 = gradient(x);
        const Scalar gnorm = grad0.norm();
        if (!(gnorm >= Scalar(1e-12))) {
            if (star_center) return bisect_segment(value, x, *star_center);
            throw DegenerateGradient("level-set gradient vanishes outside the domain");
        }
        const VectorType dir = grad0 / gnorm;

        auto phi = [&](Scalar s) { return value(x - s * dir); };
        auto dphi = [&](Scalar s) { return -gradient(x - s * dir).dot(dir); };

        const VectorType mid = (box_lo + box_hi) / 2;
        const Scalar half_diag = (box_hi - box_lo).norm() / 2;
        const Scalar reach = (x - mid).norm() + half_diag;
        const Scalar max_step = half_diag / 32;

        // Bracket, growing from the linearized step with bounded increments.
        Scalar lo = 0, hi = std::min(g0 / gnorm, reach);
        Scalar f_hi = phi(hi);
        int expansions = 0;
        while (f_hi > 0) {
            if (hi >= reach || ++expansions > 4 * settings_.max_newton_iters) {
                if (star_center) return bisect_segment(value, x, *star_center);
                throw NonConvergence("could not bracket the boundary along the gradient ray");
            }
            lo = hi;
            hi = std::min({hi * Scalar(1.5), hi + max_step, reach});
            f_hi = phi(hi);
        }
        if (f_hi >= -tol) return x - hi * dir;

        // Safeguarded Newton on phi(s) = 0 inside [lo, hi]; phi(lo) > 0 >= phi(hi).
        Scalar s = hi;
        Scalar f = f_hi;
        for (int it = 0; it < settings_.max_newton_iters; ++it) {
            const Scalar df = dphi(s);
            Scalar next = (df != Scalar(0)) ? s - f / df : lo - Scalar(1);
            if (!(next > lo && next < hi)) {
                if (!settings_.bisection_fallback)
                    throw NonConvergence("Newton step left the bracket and bisection is disabled");
                next = (lo + hi) / 2;
            }
            s = next;
            f = phi(s);
            if (std::abs(f) <= tol / 2) return x - s * dir;
            if (f > 0) lo = s;
            else hi = s;
            if (hi - lo <= std::numeric_limits<Scalar>::epsilon() * hi) {
                f_hi = phi(hi);
                if (f_hi >= -tol) return x - hi * dir;
                break;
            }
        }
        throw NonConvergence("level-set projection did not converge");
    }

    // Boundary point on the segment from an exterior x to an interior centre.
    template <typename Value>
    VectorType bisect_segment(const Value& value, const Ref& x, const VectorType& center) const
    {
        const Scalar tol = Scalar(settings_.tol_proj);
        if (!(value(center) < 0)) throw NonConvergence("star centre is not interior");
        Scalar lo = 0, hi = 1; // value > 0 at lo, < 0 at hi
        auto at = [&](Scalar s) { return VectorType(x + s * (center - x)); };
        for (int it = 0; it < 200; ++it) {
            const Scalar m = (lo + hi) / 2;
            const Scalar f = value(at(m));
            if (std::abs(f) <= tol / 2) return at(m);
            if (f > 0) lo = m;
            else hi = m;
            if (hi - lo <= std::numeric_limits<Scalar>::epsilon()) break;
        }
        return at(hi);
    }

    void rejection_sample(CounterRng& rng, const VectorType& lo, const VectorType& hi, Particles<Scalar>& out) const
    {
        constexpr long long window = 100000;
        const Index n = out.cols();
        VectorType p(dim_);
        long long trials = 0, accepted_in_window = 0, window_trials = 0;
        for (Index i = 0; i < n;) {
            for (Index k = 0; k < dim_; ++k) p[k] = lo[k] + Scalar(rng.uniform()) * (hi[k] - lo[k]);
            ++trials;
            ++window_trials;
            if (level(p) <= 0) {
                out.col(i++) = p;
                ++accepted_in_window;
            }
            if (window_trials == window) {
                if (double(accepted_in_window) / double(window) < 1e-4)
                    throw RejectionBudgetExceeded("rejection sampling acceptance rate below 1e-4");
                window_trials = 0;
                accepted_in_window = 0;
            }
        }
    }

    Shape shape_;
    Index dim_;
    ProjectionSettings settings_;
};

using Domain = FeasibleDomain<double>;

} // namespace rcbo

#endif // RCBO_DOMAIN_HPP
