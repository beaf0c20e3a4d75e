/*
 * morphtrack - 3D morphable model video tracking and reenactment conditioning.
 *
 * File: include/morphtrack/fitting/fit_video.hpp
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

#ifndef MORPHTRACK_FITTING_FIT_VIDEO_HPP
#define MORPHTRACK_FITTING_FIT_VIDEO_HPP

#include "morphtrack/camera/camera.hpp"
#include "morphtrack/core/parallel.hpp"
#include "morphtrack/fitting/box_lsq.hpp"
#include "morphtrack/fitting/energy.hpp"
#include "morphtrack/fitting/linear_system.hpp"
#include "morphtrack/fitting/types.hpp"
#include "morphtrack/model/morphable_model.hpp"

#include "Eigen/Core"

#include <vector>

namespace morphtrack {
namespace fitting {

struct FitResult
{
    ShapeTrajectory trajectory;
    EnergyBreakdown energy;
    double solver_objective = 0.0; ///< final |J theta - b|^2 of the last shape solve
    int iterations = 0;            ///< solver iterations summed over all shape solves
    bool converged = false;        ///< every shape solve converged
    int shape_solves = 0;
    double mean_reprojection_error = 0.0; ///< pixels
};

/// Per-frame poses of the given per-frame landmark geometry (68 x 3 each).
inline std::vector<camera::CameraParams> estimate_poses(const LandmarkSequence& landmarks,
                                                        const std::vector<model::Vertices>& shapes, int num_threads)
{
    std::vector<camera::CameraParams> cams(landmarks.frames.size());
    parallel_for(cams.size(), num_threads, [&](std::size_t t) {
        const auto& frame = landmarks.frames[t];
        cams[t] = camera::estimate_pose(frame.points, shapes[shapes.size() == 1 ? 0 : t], frame.confidence);
    });
    return cams;
}

/**
 * Batch fit of one video: a single identity vector shared by all frames,
 * per-frame expressions and per-frame scaled orthographic cameras.
 *
 * Cameras are initialised per frame against the mean-face landmarks, then
 * the shape is solved as one box-constrained linear least-squares problem
 * over all frames. Each pose alternation re-estimates the cameras against the
 * fitted per-frame shapes and re-solves the shape from the previous solution.
 */
inline FitResult fit_video(const model::MorphableModel& model, const LandmarkSequence& landmarks, const FitConfig& cfg)
{
    validate(landmarks);
    validate(cfg);
    const int num_frames = landmarks.num_frames();
    const int n_i = model.num_identity();
    const int n_e = model.num_expression();

    const model::ShapeParams zero{Eigen::VectorXd::Zero(n_i), Eigen::VectorXd::Zero(n_e)};
    std::vector<model::Vertices> shapes{
        synthesize_vertices(model, model.landmark_indices, zero.identity, zero.expression)};

    FitResult result;
    result.converged = true;
    auto& traj = result.trajectory;
    traj.cameras = estimate_poses(landmarks, shapes, cfg.num_threads);
    Eigen::VectorXd theta = Eigen::VectorXd::Zero(n_i + static_cast<Eigen::Index>(num_frames) * n_e);
    const BoxLsqOptions options{cfg.max_iterations, cfg.grad_tolerance};

    for (int round = 0; round <= cfg.pose_alternations; ++round)
    {
        if (round > 0)
        {
            shapes.assign(static_cast<std::size_t>(num_frames), model::Vertices());
            parallel_for(shapes.size(), cfg.num_threads, [&](std::size_t t) {
                shapes[t] = synthesize_vertices(model, model.landmark_indices, traj.identity,
                                                traj.expression.row(static_cast<Eigen::Index>(t)).transpose());
            });
            traj.cameras = estimate_poses(landmarks, shapes, cfg.num_threads);
        }
        const auto system = assemble_linear_system(model, landmarks, traj.cameras, cfg);
        const auto solved = solve_box_lsq(system, theta, options);
        theta = solved.solution;
        unpack_coefficients(theta, n_i, n_e, num_frames, traj.identity, traj.expression);
        result.solver_objective = solved.objective;
        result.iterations += solved.iterations;
        result.converged = result.converged && solved.converged;
        ++result.shape_solves;
    }

    result.energy = energy(model, landmarks, traj, cfg);
    result.mean_reprojection_error = mean_reprojection_error(model, landmarks, traj);
    return result;
}

} /* namespace fitting */
} /* namespace morphtrack */

#endif /* MORPHTRACK_FITTING_FIT_VIDEO_HPP */
