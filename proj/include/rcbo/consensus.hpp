#ifndef RCBO_CONSENSUS_HPP
#define RCBO_CONSENSUS_HPP

#include "rcbo/types.hpp"

#include <cmath>

namespace rcbo {

// Exponents beyond this flush the weight to zero.
inline constexpr double weight_flush_exponent = 700.0;

// Gibbs-weighted mean of the columns of `positions`, weights
// exp(-alpha (f_i - min f)). The sum is anchored at the best particle, whose
// weight is exactly 1, so the denominator is >= 1 and the limit alpha -> inf
// returns that particle exactly.
template <typename PDerived, typename FDerived>
Vector<typename PDerived::Scalar> consensus(const Eigen::MatrixBase<PDerived>& positions,
                                            const Eigen::MatrixBase<FDerived>& f_values,
                                            typename PDerived::Scalar alpha)
{
    using Scalar = typename PDerived::Scalar;
    const Index n = positions.cols();
    if (n < 1) throw ConfigError("consensus needs at least one particle");
    require_dimension(n, f_values.size());

    Index best = 0;
    for (Index i = 1; i < n; ++i)
        if (f_values[i] < f_values[best]) best = i;
    const Scalar f_min = f_values[best];

    const auto anchor = positions.col(best);
    Vector<Scalar> offset = Vector<Scalar>::Zero(positions.rows());
    Scalar denom = 0;
    for (Index i = 0; i < n; ++i) {
        const Scalar exponent = alpha * (f_values[i] - f_min);
        if (!(exponent <= Scalar(weight_flush_exponent))) continue;
        const Scalar w = std::exp(-exponent);
        denom += w;
        if (i != best) offset.noalias() += w * (positions.col(i) - anchor);
    }
    return anchor + offset / denom;
}

// (lambda / N) sum_j (x_i - x_j) exp(-|x_i - x_j|^2 / 2)
template <typename PDerived>
Vector<typename PDerived::Scalar> repelling_force(const Eigen::MatrixBase<PDerived>& positions, Index i,
                                                  typename PDerived::Scalar lambda)
{
    using Scalar = typename PDerived::Scalar;
    const Index n = positions.cols();
    if (i < 0 || i >= n) throw ConfigError("repelling_force: particle index out of range");
    Vector<Scalar> force = Vector<Scalar>::Zero(positions.rows());
    if (lambda == Scalar(0)) return force;
    Vector<Scalar> diff(positions.rows());
    for (Index j = 0; j < n; ++j) {
        if (j == i) continue;
        diff = positions.col(i) - positions.col(j);
        force.noalias() += std::exp(-diff.squaredNorm() / 2) * diff;
    }
    return force * (lambda / Scalar(n));
}

} // namespace rcbo

#endif // RCBO_CONSENSUS_HPP
