/*
 * morphtrack - 3D morphable model video tracking and reenactment conditioning.
 *
 * File: include/morphtrack/fitting/energy.hpp
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

#ifndef MORPHTRACK_FITTING_ENERGY_HPP
#define MORPHTRACK_FITTING_ENERGY_HPP

#include "morphtrack/camera/camera.hpp"
#include "morphtrack/fitting/types.hpp"
#include "morphtrack/model/morphable_model.hpp"

#include "Eigen/Core"

#include <span>
#include <vector>

namespace morphtrack {
namespace fitting {

/// Positions of the given vertices only, for one set of coefficients.
inline model::Vertices synthesize_vertices(const model::MorphableModel& model, std::span<const int> vertex_ids,
                                           const Eigen::VectorXd& identity, const Eigen::VectorXd& expression)
{
    model::Vertices out(static_cast<Eigen::Index>(vertex_ids.size()), 3);
    for (std::size_t j = 0; j < vertex_ids.size(); ++j)
    {
        const Eigen::Index row = 3 * static_cast<Eigen::Index>(vertex_ids[j]);
        const Eigen::Vector3d v = model.mean_shape.segment<3>(row) +
                                  model.identity_basis.middleRows<3>(row) * identity +
                                  model.expression_basis.middleRows<3>(row) * expression;
        out.row(static_cast<Eigen::Index>(j)) = v.transpose();
    }
    return out;
}

/**
 * Per-term energies of a trajectory:
 *   landmark:   sum_t sum_j c_tj * |l_tj - proj(x_j(s_t), p_t)|^2
 *   prior:      sum_k (s_id_k / sigma_id_k)^2 + sum_t sum_k (s_exp_tk / sigma_exp_k)^2
 *   smoothness: sum_{t=1}^{T-2} |s_exp_{t+1} - 2 s_exp_t + s_exp_{t-1}|^2
 * and total = w_l * landmark + w_pr * prior + w_sm * smoothness.
 */
inline EnergyBreakdown energy(const model::MorphableModel& model, const LandmarkSequence& landmarks,
                              const ShapeTrajectory& traj, const FitConfig& cfg)
{
    check_dimensions(model, traj);
    const int num_frames = traj.num_frames();
    if (landmarks.num_frames() != num_frames)
    {
        throw DimensionError("energy: " + std::to_string(landmarks.num_frames()) + " landmark frames but " +
                             std::to_string(num_frames) + " trajectory frames");
    }

    EnergyBreakdown e;
    for (int t = 0; t < num_frames; ++t)
    {
        const auto& frame = landmarks.frames[t];
        const auto verts =
            synthesize_vertices(model, model.landmark_indices, traj.identity, traj.expression.row(t).transpose());
        const auto proj = camera::project(verts, traj.cameras[t]);
        e.landmark += (frame.confidence.array() * (proj.points - frame.points).rowwise().squaredNorm().array()).sum();
    }

    e.prior = traj.identity.cwiseQuotient(model.identity_sigma).squaredNorm();
    for (int t = 0; t < num_frames; ++t)
    {
        e.prior += traj.expression.row(t).cwiseQuotient(model.expression_sigma.transpose()).squaredNorm();
    }

    for (int t = 1; t + 1 < num_frames; ++t)
    {
        e.smoothness +=
            (traj.expression.row(t + 1) - 2.0 * traj.expression.row(t) + traj.expression.row(t - 1)).squaredNorm();
    }

    e.total = cfg.resolved_landmark_weight(num_frames) * e.landmark + cfg.prior_weight * e.prior +
              cfg.smoothness_weight * e.smoothness;
    return e;
}

/// Mean Euclidean distance in pixels between observed and reprojected landmarks.
inline double mean_reprojection_error(const model::MorphableModel& model, const LandmarkSequence& landmarks,
                                      const ShapeTrajectory& traj)
{
    check_dimensions(model, traj);
    double sum = 0.0;
    std::size_t count = 0;
    for (int t = 0; t < traj.num_frames(); ++t)
    {
        const auto verts =
            synthesize_vertices(model, model.landmark_indices, traj.identity, traj.expression.row(t).transpose());
        const auto proj = camera::project(verts, traj.cameras[t]);
        sum += (proj.points - landmarks.frames[t].points).rowwise().norm().sum();
        count += static_cast<std::size_t>(proj.points.rows());
    }
    return count ? sum / static_cast<double>(count) : 0.0;
}

} /* namespace fitting */
} /* namespace morphtrack */

#endif /* MORPHTRACK_FITTING_ENERGY_HPP */
