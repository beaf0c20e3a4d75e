/*
 * morphtrack - 3D morphable model video tracking and reenactment conditioning.
 *
 * File: include/morphtrack/fitting/box_lsq.hpp
 *
 * Copyright 2026 The morphtrack Authors
 *
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 * http://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */
#pragma once

#ifndef MORPHTRACK_FITTING_BOX_LSQ_HPP
#define MORPHTRACK_FITTING_BOX_LSQ_HPP

#include "morphtrack/core/errors.hpp"

#include "Eigen/Core"
#include "Eigen/SparseCholesky"
#include "Eigen/SparseCore"

#include <algorithm>
#include <cmath>
#include <concepts>
#include <cstdint>
#include <limits>
#include <optional>
#include <vector>

namespace morphtrack {
namespace fitting {

/**
 * A linear least-squares problem min |J x - b|^2 subject to lower <= x <= upper.
 * J only needs to be available as products with vectors; the normal matrix
 * J^T J is requested once per solve as a sparse matrix.
 */
template <typename P>
concept BoxLeastSquaresProblem = requires(const P& p, const Eigen::VectorXd& v) {
    { p.rows() } -> std::convertible_to<Eigen::Index>;
    { p.cols() } -> std::convertible_to<Eigen::Index>;
    { p.apply(v) } -> std::convertible_to<Eigen::VectorXd>;
    { p.apply_transpose(v) } -> std::convertible_to<Eigen::VectorXd>;
    { p.rhs() } -> std::convertible_to<Eigen::VectorXd>;
    { p.lower() } -> std::convertible_to<Eigen::VectorXd>;
    { p.upper() } -> std::convertible_to<Eigen::VectorXd>;
    { p.normal_matrix() } -> std::convertible_to<Eigen::SparseMatrix<double>>;
};

/// A box-constrained problem with an explicit dense Jacobian.
struct DenseBoxProblem
{
    Eigen::MatrixXd jacobian;
    Eigen::VectorXd target;
    Eigen::VectorXd lower_bounds;
    Eigen::VectorXd upper_bounds;

    Eigen::Index rows() const { return jacobian.rows(); }
    Eigen::Index cols() const { return jacobian.cols(); }
    Eigen::VectorXd apply(const Eigen::VectorXd& x) const { return jacobian * x; }
    Eigen::VectorXd apply_transpose(const Eigen::VectorXd& r) const { return jacobian.transpose() * r; }
    Eigen::VectorXd rhs() const { return target; }
    const Eigen::VectorXd& lower() const { return lower_bounds; }
    const Eigen::VectorXd& upper() const { return upper_bounds; }
    Eigen::SparseMatrix<double> normal_matrix() const
    {
        const Eigen::MatrixXd h = jacobian.transpose() * jacobian;
        return h.sparseView(0.0, 0.0);
    }
};

struct BoxLsqOptions
{
    int max_iterations = 200;
    double grad_tolerance = 1e-8;
};

struct BoxLsqResult
{
    Eigen::VectorXd solution;
    int iterations = 0;
    bool converged = false;
    double objective = 0.0;               ///< |J x - b|^2 at the solution
    std::vector<double> objective_history; ///< objective after the start and each accepted step
};

namespace detail {

inline constexpr double infinity = std::numeric_limits<double>::infinity();

/// Bound state of one coordinate during active-set refinement.
enum class BoundState : std::int8_t { free = 0, at_lower = -1, at_upper = 1 };

/**
 * Solves (diag(d) H diag(d) + diag(c)) x = rhs with a sparse LDL^T factorisation
 * followed by two steps of iterative refinement.
 */
inline std::optional<Eigen::VectorXd> solve_scaled_normal(const Eigen::SparseMatrix<double>& h,
                                                          const Eigen::VectorXd& d, const Eigen::VectorXd& c,
                                                          const Eigen::VectorXd& rhs)
{
    const Eigen::Index n = h.rows();
    Eigen::SparseMatrix<double> m = d.asDiagonal() * h * d.asDiagonal();
    Eigen::SparseMatrix<double> shift(n, n);
    shift.reserve(Eigen::VectorXi::Constant(n, 1));
    for (Eigen::Index i = 0; i < n; ++i)
    {
        shift.insert(i, i) = c(i);
    }
    m = m + shift;
    m.makeCompressed();

    Eigen::SimplicialLDLT<Eigen::SparseMatrix<double>> ldlt(m);
    if (ldlt.info() != Eigen::Success)
    {
        return std::nullopt;
    }
    Eigen::VectorXd x = ldlt.solve(rhs);
    for (int refine = 0; refine < 2 && x.allFinite(); ++refine)
    {
        const Eigen::VectorXd res = rhs - m * x;
        x += ldlt.solve(res);
    }
    if (!x.allFinite())
    {
        return std::nullopt;
    }
    return x;
}

/// Largest t >= 0 with lower <= x + t p <= upper; `hits` flags the blocking coordinates.
inline double step_to_bound(const Eigen::VectorXd& x, const Eigen::VectorXd& p, const Eigen::VectorXd& lower,
                            const Eigen::VectorXd& upper, std::vector<bool>* hits = nullptr)
{
    double t = infinity;
    for (Eigen::Index i = 0; i < x.size(); ++i)
    {
        double ti = infinity;
        if (p(i) > 0.0)
        {
            ti = (upper(i) - x(i)) / p(i);
        } else if (p(i) < 0.0)
        {
            ti = (lower(i) - x(i)) / p(i);
        }
        t = std::min(t, std::max(ti, 0.0));
    }
    if (hits)
    {
        hits->assign(static_cast<std::size_t>(x.size()), false);
        for (Eigen::Index i = 0; i < x.size(); ++i)
        {
            const double ti = p(i) > 0.0 ? (upper(i) - x(i)) / p(i) : p(i) < 0.0 ? (lower(i) - x(i)) / p(i) : infinity;
            (*hits)[static_cast<std::size_t>(i)] = std::isfinite(ti) && ti <= t;
        }
    }
    return t;
}

template <BoxLeastSquaresProblem Problem>
class BoxSolver
{
public:
    BoxSolver(const Problem& problem, const BoxLsqOptions& options)
        : problem_(problem), options_(options), lower_(problem.lower()), upper_(problem.upper()), b_(problem.rhs()),
          h_(problem.normal_matrix())
    {
        h_diag_ = h_.diagonal();
    }

    BoxLsqResult run(const Eigen::VectorXd& start)
    {
        BoxLsqResult result;
        Eigen::VectorXd x = strictly_inside(start);
        Eigen::VectorXd r = problem_.apply(x) - b_;
        Eigen::VectorXd g = problem_.apply_transpose(r);
        double f = r.squaredNorm();
        result.objective_history.push_back(f);

        const double g0 = g.norm();
        const double noise_floor =
            1e-13 * (problem_.apply_transpose(b_).norm() + problem_.apply_transpose(problem_.apply(x)).norm());
        tolerance_ = std::max(options_.grad_tolerance * g0, noise_floor);

        if (g.lpNorm<Eigen::Infinity>() <= tolerance_)
        {
            result.converged = true; // interior stationary point of a convex problem
        }

        for (int k = 0; k < options_.max_iterations && !result.converged; ++k)
        {
            result.iterations = k + 1;

            // Try to finish from the active set the current iterate suggests.
            if (auto finished = refine_active_set(x, g, 10 + static_cast<int>(x.size() / 10)))
            {
                const double f_finished = (problem_.apply(*finished) - b_).squaredNorm();
                if (f_finished <= f * (1.0 + 1e-12))
                {
                    x = *finished;
                    f = f_finished;
                    result.objective_history.push_back(f);
                    result.converged = true;
                    break;
                }
            }

            const auto step = reflective_newton_step(x, r, g, g0);
            if (step && step->second < f)
            {
                x = step->first;
                f = step->second;
                result.objective_history.push_back(f);
                r = problem_.apply(x) - b_;
                g = problem_.apply_transpose(r);
                continue;
            }

            // No descent left in the interior: one unrestricted active-set pass.
            if (auto finished = refine_active_set(x, g, 3 * static_cast<int>(x.size()) + 20))
            {
                const double f_finished = (problem_.apply(*finished) - b_).squaredNorm();
                if (f_finished <= f * (1.0 + 1e-12))
                {
                    x = *finished;
                    f = f_finished;
                    result.objective_history.push_back(f);
                    result.converged = true;
                }
            }
            break;
        }

        result.solution = x;
        result.objective = f;
        return result;
    }

private:
    Eigen::VectorXd strictly_inside(Eigen::VectorXd x) const
    {
        for (Eigen::Index i = 0; i < x.size(); ++i)
        {
            const double lo = lower_(i);
            const double hi = upper_(i);
            if (!std::isfinite(x(i)))
            {
                x(i) = std::isfinite(lo) && std::isfinite(hi) ? 0.5 * (lo + hi)
                       : std::isfinite(lo)                    ? lo + 1.0
                       : std::isfinite(hi)                    ? hi - 1.0
                                                              : 0.0;
            }
            const double margin = std::isfinite(hi - lo) ? 1e-3 * (hi - lo)
                                                         : 1e-3 * std::max(1.0, std::isfinite(lo) ? std::abs(lo)
                                                                                                  : std::abs(hi));
            if (std::isfinite(lo) && x(i) <= lo)
            {
                x(i) = lo + margin;
            }
            if (std::isfinite(hi) && x(i) >= hi)
            {
                x(i) = hi - margin;
            }
        }
        return x;
    }

    /**
     * One affine-scaling Newton step: solve (D H D + C) s = -D g, p = D s, with
     * D^2 the distance to the bound the gradient points at and C = diag(|g|)
     * on coordinates with such a bound. If p leaves the box, the best of the
     * truncated step, the reflected path and the scaled Cauchy step is taken.
     */
    std::optional<std::pair<Eigen::VectorXd, double>> reflective_newton_step(const Eigen::VectorXd& x,
                                                                             const Eigen::VectorXd& r,
                                                                             const Eigen::VectorXd& g, double g0) const
    {
        const Eigen::Index n = x.size();
        Eigen::VectorXd d(n);
        Eigen::VectorXd c(n);
        for (Eigen::Index i = 0; i < n; ++i)
        {
            const double bound = g(i) < 0.0 ? upper_(i) : lower_(i);
            if (std::isfinite(bound))
            {
                d(i) = std::sqrt(std::abs(x(i) - bound));
                c(i) = std::abs(g(i));
            } else
            {
                d(i) = 1.0;
                c(i) = 0.0;
            }
        }
        const Eigen::VectorXd dg = d.cwiseProduct(g);
        const double scaled_optimality = d.cwiseProduct(dg).lpNorm<Eigen::Infinity>();
        const double step_back = std::max(0.995, 1.0 - std::min(1.0, scaled_optimality / std::max(g0, 1e-300)));

        const auto s = solve_scaled_normal(h_, d, c, -dg);
        if (!s)
        {
            return std::nullopt;
        }
        const Eigen::VectorXd p = d.cwiseProduct(*s);
        const Eigen::VectorXd jp = problem_.apply(p);

        std::vector<bool> hits;
        const double to_bound = step_to_bound(x, p, lower_, upper_, &hits);
        if (to_bound > 1.0)
        {
            return std::make_pair(Eigen::VectorXd(x + p), (r + jp).squaredNorm());
        }

        // Truncated Newton step.
        const double t_newton = step_back * to_bound;
        Eigen::VectorXd best = x + t_newton * p;
        double best_f = (r + t_newton * jp).squaredNorm();

        // Reflect at the first bound hit and minimise along the reflected ray.
        const Eigen::VectorXd x_hit = x + to_bound * p;
        Eigen::VectorXd p_reflected = p;
        for (Eigen::Index i = 0; i < n; ++i)
        {
            if (hits[static_cast<std::size_t>(i)])
            {
                p_reflected(i) = -p(i);
            }
        }
        const Eigen::VectorXd r_hit = r + to_bound * jp;
        const Eigen::VectorXd jpr = problem_.apply(p_reflected);
        const double curvature = jpr.squaredNorm();
        if (curvature > 0.0)
        {
            const double max_t = step_back * step_to_bound(x_hit, p_reflected, lower_, upper_);
            const double t = std::min(std::max(-r_hit.dot(jpr) / curvature, 0.0), max_t);
            if (t > 0.0)
            {
                const double f_reflected = (r_hit + t * jpr).squaredNorm();
                if (f_reflected < best_f)
                {
                    best = x_hit + t * p_reflected;
                    best_f = f_reflected;
                }
            }
        }

        // Scaled gradient (Cauchy) step.
        const Eigen::VectorXd q = -d.cwiseProduct(dg);
        const Eigen::VectorXd jq = problem_.apply(q);
        const double q_curvature = jq.squaredNorm();
        if (q_curvature > 0.0)
        {
            const double max_t = step_back * step_to_bound(x, q, lower_, upper_);
            const double t = std::min(std::max(-g.dot(q) / q_curvature, 0.0), max_t);
            const double f_cauchy = (r + t * jq).squaredNorm();
            if (t > 0.0 && f_cauchy < best_f)
            {
                best = x + t * q;
                best_f = f_cauchy;
            }
        }

        // Keep the iterate feasible under rounding.
        best = best.cwiseMax(lower_).cwiseMin(upper_);
        return std::make_pair(best, (problem_.apply(best) - b_).squaredNorm());
    }

    /**
     * Primal active-set iterations started from the bound states predicted at
     * x: a coordinate is fixed at a bound when a diagonal Newton step on it
     * alone would cross that bound. Returns a point satisfying the KKT
     * conditions to the solver tolerance, or nothing within max_moves.
     */
    std::optional<Eigen::VectorXd> refine_active_set(const Eigen::VectorXd& x_start, const Eigen::VectorXd& g_start,
                                                     int max_moves) const
    {
        const Eigen::Index n = x_start.size();
        std::vector<BoundState> state(static_cast<std::size_t>(n), BoundState::free);
        Eigen::VectorXd x = x_start;
        for (Eigen::Index i = 0; i < n; ++i)
        {
            const double newton = h_diag_(i) > 0.0 ? x(i) - g_start(i) / h_diag_(i) : x(i);
            if (g_start(i) > 0.0 && std::isfinite(lower_(i)) && newton <= lower_(i))
            {
                state[static_cast<std::size_t>(i)] = BoundState::at_lower;
                x(i) = lower_(i);
            } else if (g_start(i) < 0.0 && std::isfinite(upper_(i)) && newton >= upper_(i))
            {
                state[static_cast<std::size_t>(i)] = BoundState::at_upper;
                x(i) = upper_(i);
            }
        }

        int refinements = 0;
        for (int move = 0; move < max_moves; ++move)
        {
            const Eigen::VectorXd g = problem_.apply_transpose(problem_.apply(x) - b_);
            Eigen::VectorXd d(n);
            Eigen::VectorXd c(n);
            Eigen::VectorXd rhs(n);
            for (Eigen::Index i = 0; i < n; ++i)
            {
                const bool is_free = state[static_cast<std::size_t>(i)] == BoundState::free;
                d(i) = is_free ? 1.0 : 0.0;
                c(i) = is_free ? 0.0 : 1.0;
                rhs(i) = is_free ? -g(i) : 0.0;
            }

            // Stationary on the current face: check the multipliers.
            double worst_free = 0.0;
            for (Eigen::Index i = 0; i < n; ++i)
            {
                if (state[static_cast<std::size_t>(i)] == BoundState::free)
                {
                    worst_free = std::max(worst_free, std::abs(g(i)));
                }
            }
            if (worst_free <= tolerance_)
            {
                Eigen::Index release = -1;
                double worst = tolerance_;
                for (Eigen::Index i = 0; i < n; ++i)
                {
                    const auto s = state[static_cast<std::size_t>(i)];
                    const double violation = s == BoundState::at_lower   ? -g(i)
                                             : s == BoundState::at_upper ? g(i)
                                                                         : 0.0;
                    if (violation > worst)
                    {
                        worst = violation;
                        release = i;
                    }
                }
                if (release < 0)
                {
                    return x;
                }
                state[static_cast<std::size_t>(release)] = BoundState::free;
                refinements = 0;
                continue;
            }
            if (refinements > 3)
            {
                return std::nullopt; // the face problem cannot be solved to tolerance
            }

            const auto delta = solve_scaled_normal(h_, d, c, rhs);
            if (!delta)
            {
                return std::nullopt;
            }
            Eigen::VectorXd step = *delta;
            for (Eigen::Index i = 0; i < n; ++i)
            {
                if (state[static_cast<std::size_t>(i)] != BoundState::free)
                {
                    step(i) = 0.0;
                }
            }
            std::vector<bool> hits;
            const double t = step_to_bound(x, step, lower_, upper_, &hits);
            if (t >= 1.0)
            {
                x += step;
                x = x.cwiseMax(lower_).cwiseMin(upper_);
                ++refinements;
                continue;
            }
            x += t * step;
            for (Eigen::Index i = 0; i < n; ++i)
            {
                if (hits[static_cast<std::size_t>(i)])
                {
                    const bool up = step(i) > 0.0;
                    state[static_cast<std::size_t>(i)] = up ? BoundState::at_upper : BoundState::at_lower;
                    x(i) = up ? upper_(i) : lower_(i);
                }
            }
            x = x.cwiseMax(lower_).cwiseMin(upper_);
            refinements = 0;
        }
        return std::nullopt;
    }

    const Problem& problem_;
    BoxLsqOptions options_;
    Eigen::VectorXd lower_;
    Eigen::VectorXd upper_;
    Eigen::VectorXd b_;
    Eigen::SparseMatrix<double> h_;
    Eigen::VectorXd h_diag_;
    double tolerance_ = 0.0;
};

} /* namespace detail */

/**
 * Minimises |J x - b|^2 subject to lower <= x <= upper.
 *
 * Interior reflective Newton iterations (Coleman-Li affine scaling, with the
 * scaled Newton system solved by sparse LDL^T on the normal matrix) move the
 * iterate towards the solution while staying strictly feasible. Every
 * iteration also tries to finish with a primal active-set refinement from the
 * bound pattern the iterate suggests; it is accepted only if it satisfies the
 * KKT conditions and does not increase the objective, so the returned point
 * lies exactly on its active bounds.
 *
 * Stationarity is |g_i| <= grad_tolerance * |g(x0)| on free coordinates, with
 * g = J^T (J x - b), and an outward gradient on active ones. Running out of
 * iterations is not an error: the best iterate is returned with
 * converged == false.
 */
template <BoxLeastSquaresProblem Problem>
BoxLsqResult solve_box_lsq(const Problem& problem, const Eigen::VectorXd& start, const BoxLsqOptions& options = {})
{
    const Eigen::Index n = problem.cols();
    if (start.size() != n || problem.lower().size() != n || problem.upper().size() != n)
    {
        throw DimensionError("solve_box_lsq: start and bounds must have one entry per unknown");
    }
    for (Eigen::Index i = 0; i < n; ++i)
    {
        if (!(problem.lower()(i) < problem.upper()(i)))
        {
            throw ValidationError("bounds", "lower bound must be strictly below upper bound at index " +
                                                std::to_string(i));
        }
    }
    if (options.max_iterations < 0 || !(options.grad_tolerance > 0.0))
    {
        throw ConfigError("solve_box_lsq: invalid options");
    }
    if (n == 0)
    {
        BoxLsqResult result;
        result.solution = start;
        result.converged = true;
        result.objective = problem.rhs().squaredNorm();
        result.objective_history = {result.objective};
        return result;
    }
    detail::BoxSolver<Problem> solver(problem, options);
    return solver.run(start);
}

} /* namespace fitting */
} /* namespace morphtrack */

#endif /* MORPHTRACK_FITTING_BOX_LSQ_HPP */
