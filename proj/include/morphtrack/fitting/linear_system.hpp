/*
 * morphtrack - 3D morphable model video tracking and reenactment conditioning.
 *
 * File: include/morphtrack/fitting/linear_system.hpp
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

#ifndef MORPHTRACK_FITTING_LINEAR_SYSTEM_HPP
#define MORPHTRACK_FITTING_LINEAR_SYSTEM_HPP

#include "morphtrack/camera/camera.hpp"
#include "morphtrack/core/parallel.hpp"
#include "morphtrack/fitting/types.hpp"
#include "morphtrack/model/morphable_model.hpp"

#include "Eigen/Core"
#include "Eigen/SparseCore"

#include <cmath>
#include <span>
#include <vector>

namespace morphtrack {
namespace fitting {

struct SystemWeights
{
    double landmark = 1.0;
    double prior = 0.0;
    double smoothness = 0.0;
};

/**
 * The fitting energy with fixed cameras as a linear least-squares problem
 * min |J theta - b|^2 over theta = [s_id; s_exp_0; ...; s_exp_{T-1}].
 *
 * Projection is linear in the shape and the shape is linear in the
 * coefficients, so the residual is affine in theta. J is never stored whole;
 * it is kept as its blocks:
 *   - landmark rows of frame t (2L of them, x/y interleaved per landmark),
 *     coupling s_id and s_exp_t through the dense blocks A_t and B_t;
 *   - one diagonal prior row per coefficient, sqrt(w_pr) / sigma;
 *   - n_e smoothness rows per interior frame t = 1..T-2, each
 *     sqrt(w_sm) * (s_exp_{t+1} - 2 s_exp_t + s_exp_{t-1}).
 * All weights are folded into the rows, so |J theta - b|^2 is the total
 * energy.
 */
class FittingSystem
{
public:
    int num_frames = 0;
    int num_identity = 0;
    int num_expression = 0;
    int landmark_rows_per_frame = 0;          ///< 2L
    std::vector<Eigen::MatrixXd> identity_blocks;   ///< A_t, 2L x n_i
    std::vector<Eigen::MatrixXd> expression_blocks; ///< B_t, 2L x n_e
    std::vector<Eigen::VectorXd> landmark_targets;  ///< b_t, 2L
    Eigen::VectorXd prior_scale;                    ///< per unknown, sqrt(w_pr) / sigma
    double smoothness_scale = 0.0;                  ///< sqrt(w_sm)
    Eigen::VectorXd lower_bounds;
    Eigen::VectorXd upper_bounds;

    Eigen::Index cols() const { return num_identity + static_cast<Eigen::Index>(num_frames) * num_expression; }

    Eigen::Index num_smoothness_rows() const
    {
        return num_frames >= 3 ? static_cast<Eigen::Index>(num_frames - 2) * num_expression : 0;
    }

    Eigen::Index rows() const
    {
        return static_cast<Eigen::Index>(num_frames) * landmark_rows_per_frame + cols() + num_smoothness_rows();
    }

    Eigen::Index expression_offset(int t) const
    {
        return num_identity + static_cast<Eigen::Index>(t) * num_expression;
    }

    const Eigen::VectorXd& lower() const { return lower_bounds; }
    const Eigen::VectorXd& upper() const { return upper_bounds; }

    /// J * theta
    Eigen::VectorXd apply(const Eigen::VectorXd& theta) const
    {
        Eigen::VectorXd out(rows());
        const auto id = theta.head(num_identity);
        for (int t = 0; t < num_frames; ++t)
        {
            out.segment(static_cast<Eigen::Index>(t) * landmark_rows_per_frame, landmark_rows_per_frame).noalias() =
                identity_blocks[t] * id + expression_blocks[t] * theta.segment(expression_offset(t), num_expression);
        }
        const Eigen::Index prior_start = static_cast<Eigen::Index>(num_frames) * landmark_rows_per_frame;
        out.segment(prior_start, cols()) = prior_scale.cwiseProduct(theta);
        const Eigen::Index smooth_start = prior_start + cols();
        for (int t = 1; t + 1 < num_frames; ++t)
        {
            out.segment(smooth_start + static_cast<Eigen::Index>(t - 1) * num_expression, num_expression) =
                smoothness_scale * (theta.segment(expression_offset(t + 1), num_expression) -
                                    2.0 * theta.segment(expression_offset(t), num_expression) +
                                    theta.segment(expression_offset(t - 1), num_expression));
        }
        return out;
    }

    /// J^T * r
    Eigen::VectorXd apply_transpose(const Eigen::VectorXd& r) const
    {
        const Eigen::Index prior_start = static_cast<Eigen::Index>(num_frames) * landmark_rows_per_frame;
        Eigen::VectorXd out = prior_scale.cwiseProduct(r.segment(prior_start, cols()));
        for (int t = 0; t < num_frames; ++t)
        {
            const auto rt = r.segment(static_cast<Eigen::Index>(t) * landmark_rows_per_frame, landmark_rows_per_frame);
            out.head(num_identity).noalias() += identity_blocks[t].transpose() * rt;
            out.segment(expression_offset(t), num_expression).noalias() += expression_blocks[t].transpose() * rt;
        }
        const Eigen::Index smooth_start = prior_start + cols();
        for (int t = 1; t + 1 < num_frames; ++t)
        {
            const auto rs = r.segment(smooth_start + static_cast<Eigen::Index>(t - 1) * num_expression, num_expression);
            out.segment(expression_offset(t + 1), num_expression) += smoothness_scale * rs;
            out.segment(expression_offset(t), num_expression) -= 2.0 * smoothness_scale * rs;
            out.segment(expression_offset(t - 1), num_expression) += smoothness_scale * rs;
        }
        return out;
    }

    /// b, the stacked targets (zero on prior and smoothness rows).
    Eigen::VectorXd rhs() const
    {
        Eigen::VectorXd b = Eigen::VectorXd::Zero(rows());
        for (int t = 0; t < num_frames; ++t)
        {
            b.segment(static_cast<Eigen::Index>(t) * landmark_rows_per_frame, landmark_rows_per_frame) =
                landmark_targets[t];
        }
        return b;
    }

    /// J * theta - b
    Eigen::VectorXd residual(const Eigen::VectorXd& theta) const { return apply(theta) - rhs(); }

    /**
     * J^T J as a sparse matrix. Its structure is an arrow (the dense identity
     * rows and columns) around a block-pentadiagonal expression part.
     */
    Eigen::SparseMatrix<double> normal_matrix() const
    {
        const Eigen::Index n = cols();
        std::vector<Eigen::Triplet<double>> triplets;
        triplets.reserve(static_cast<std::size_t>(num_identity * num_identity +
                                                  num_frames * (2 * num_identity * num_expression +
                                                                5 * num_expression * num_expression) +
                                                  n));
        Eigen::MatrixXd id_id = Eigen::MatrixXd::Zero(num_identity, num_identity);
        for (int t = 0; t < num_frames; ++t)
        {
            id_id.noalias() += identity_blocks[t].transpose() * identity_blocks[t];
            const Eigen::MatrixXd id_exp = identity_blocks[t].transpose() * expression_blocks[t];
            const Eigen::MatrixXd exp_exp = expression_blocks[t].transpose() * expression_blocks[t];
            const Eigen::Index off = expression_offset(t);
            for (int a = 0; a < num_identity; ++a)
            {
                for (int k = 0; k < num_expression; ++k)
                {
                    triplets.emplace_back(a, off + k, id_exp(a, k));
                    triplets.emplace_back(off + k, a, id_exp(a, k));
                }
            }
            for (int k = 0; k < num_expression; ++k)
            {
                for (int l = 0; l < num_expression; ++l)
                {
                    triplets.emplace_back(off + k, off + l, exp_exp(k, l));
                }
            }
        }
        for (int a = 0; a < num_identity; ++a)
        {
            for (int b = 0; b < num_identity; ++b)
            {
                triplets.emplace_back(a, b, id_id(a, b));
            }
        }
        for (Eigen::Index i = 0; i < n; ++i)
        {
            triplets.emplace_back(i, i, prior_scale(i) * prior_scale(i));
        }
        const double w = smoothness_scale * smoothness_scale;
        const double stencil[3] = {1.0, -2.0, 1.0};
        for (int t = 1; t + 1 < num_frames; ++t)
        {
            for (int a = 0; a < 3; ++a)
            {
                for (int b = 0; b < 3; ++b)
                {
                    const Eigen::Index oa = expression_offset(t - 1 + a);
                    const Eigen::Index ob = expression_offset(t - 1 + b);
                    for (int k = 0; k < num_expression; ++k)
                    {
                        triplets.emplace_back(oa + k, ob + k, w * stencil[a] * stencil[b]);
                    }
                }
            }
        }
        Eigen::SparseMatrix<double> h(n, n);
        h.setFromTriplets(triplets.begin(), triplets.end());
        return h;
    }

    /// The full Jacobian as a dense matrix. Meant for tests on small systems.
    Eigen::MatrixXd to_dense() const
    {
        Eigen::MatrixXd j(rows(), cols());
        Eigen::VectorXd e = Eigen::VectorXd::Zero(cols());
        for (Eigen::Index c = 0; c < cols(); ++c)
        {
            e(c) = 1.0;
            j.col(c) = apply(e);
            e(c) = 0.0;
        }
        return j;
    }
};

/**
 * Builds the system for an arbitrary set of observed vertices; each frame's
 * points must have one row per entry of vertex_ids. Bounds are
 * +-bound_sigmas * sigma per coefficient.
 */
inline FittingSystem assemble_system(const model::MorphableModel& model, std::span<const int> vertex_ids,
                                     std::span<const LandmarkFrame> frames,
                                     std::span<const camera::CameraParams> cameras, const SystemWeights& weights,
                                     double bound_sigmas, int num_threads = 1)
{
    if (frames.size() != cameras.size())
    {
        throw DimensionError("assemble_system: " + std::to_string(frames.size()) + " frames but " +
                             std::to_string(cameras.size()) + " cameras");
    }
    const auto num_points = static_cast<Eigen::Index>(vertex_ids.size());
    for (const auto& f : frames)
    {
        if (f.points.rows() != num_points || f.confidence.size() != num_points)
        {
            throw DimensionError("assemble_system: frame point count does not match the vertex list");
        }
    }
    for (int v : vertex_ids)
    {
        if (v < 0 || v >= model.num_vertices())
        {
            throw DimensionError("assemble_system: vertex index out of range");
        }
    }

    FittingSystem sys;
    sys.num_frames = static_cast<int>(frames.size());
    sys.num_identity = model.num_identity();
    sys.num_expression = model.num_expression();
    sys.landmark_rows_per_frame = static_cast<int>(2 * num_points);
    sys.identity_blocks.resize(frames.size());
    sys.expression_blocks.resize(frames.size());
    sys.landmark_targets.resize(frames.size());

    parallel_for(frames.size(), num_threads, [&](std::size_t t) {
        const auto& cam = cameras[t];
        camera::validate(cam);
        const Eigen::Matrix3d rot = cam.rotation.toRotationMatrix();
        Eigen::Matrix<double, 2, 3> proj;
        proj.row(0) = cam.scale * rot.row(0);
        proj.row(1) = -cam.scale * rot.row(1);

        auto& a = sys.identity_blocks[t];
        auto& b = sys.expression_blocks[t];
        auto& target = sys.landmark_targets[t];
        a.resize(2 * num_points, sys.num_identity);
        b.resize(2 * num_points, sys.num_expression);
        target.resize(2 * num_points);
        for (Eigen::Index j = 0; j < num_points; ++j)
        {
            const Eigen::Index row = 3 * static_cast<Eigen::Index>(vertex_ids[j]);
            const double w = std::sqrt(weights.landmark * frames[t].confidence(j));
            a.middleRows<2>(2 * j).noalias() = w * proj * model.identity_basis.middleRows<3>(row);
            b.middleRows<2>(2 * j).noalias() = w * proj * model.expression_basis.middleRows<3>(row);
            const Eigen::Vector2d mean_proj = proj * model.mean_shape.segment<3>(row) + cam.translation;
            target.segment<2>(2 * j) = w * (frames[t].points.row(j).transpose() - mean_proj);
        }
    });

    const Eigen::Index n = sys.cols();
    sys.prior_scale.resize(n);
    sys.lower_bounds.resize(n);
    sys.upper_bounds.resize(n);
    const double prior_root = std::sqrt(weights.prior);
    for (int k = 0; k < sys.num_identity; ++k)
    {
        sys.prior_scale(k) = prior_root / model.identity_sigma(k);
        sys.upper_bounds(k) = bound_sigmas * model.identity_sigma(k);
    }
    for (int t = 0; t < sys.num_frames; ++t)
    {
        for (int k = 0; k < sys.num_expression; ++k)
        {
            sys.prior_scale(sys.expression_offset(t) + k) = prior_root / model.expression_sigma(k);
            sys.upper_bounds(sys.expression_offset(t) + k) = bound_sigmas * model.expression_sigma(k);
        }
    }
    sys.lower_bounds = -sys.upper_bounds;
    sys.smoothness_scale = std::sqrt(weights.smoothness);
    return sys;
}

/// The system for a landmark sequence, observing the model's 68 landmark vertices.
inline FittingSystem assemble_linear_system(const model::MorphableModel& model, const LandmarkSequence& landmarks,
                                            std::span<const camera::CameraParams> cameras, const FitConfig& cfg)
{
    validate(landmarks);
    validate(cfg);
    const SystemWeights weights{cfg.resolved_landmark_weight(landmarks.num_frames()), cfg.prior_weight,
                                cfg.smoothness_weight};
    return assemble_system(model, model.landmark_indices, landmarks.frames, cameras, weights, cfg.bound_sigmas,
                           cfg.num_threads);
}

/// Packs a trajectory's coefficients into the unknown vector of a FittingSystem.
inline Eigen::VectorXd pack_coefficients(const Eigen::VectorXd& identity, const Eigen::MatrixXd& expression)
{
    Eigen::VectorXd theta(identity.size() + expression.size());
    theta.head(identity.size()) = identity;
    for (Eigen::Index t = 0; t < expression.rows(); ++t)
    {
        theta.segment(identity.size() + t * expression.cols(), expression.cols()) = expression.row(t).transpose();
    }
    return theta;
}

inline void unpack_coefficients(const Eigen::VectorXd& theta, int num_identity, int num_expression, int num_frames,
                                Eigen::VectorXd& identity, Eigen::MatrixXd& expression)
{
    identity = theta.head(num_identity);
    expression.resize(num_frames, num_expression);
    for (int t = 0; t < num_frames; ++t)
    {
        expression.row(t) =
            theta.segment(num_identity + static_cast<Eigen::Index>(t) * num_expression, num_expression).transpose();
    }
}

} /* namespace fitting */
} /* namespace morphtrack */

#endif /* MORPHTRACK_FITTING_LINEAR_SYSTEM_HPP */
