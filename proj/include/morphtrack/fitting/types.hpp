/*
 * morphtrack - 3D morphable model video tracking and reenactment conditioning.
 *
 * File: include/morphtrack/fitting/types.hpp
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

#ifndef MORPHTRACK_FITTING_TYPES_HPP
#define MORPHTRACK_FITTING_TYPES_HPP

#include "morphtrack/camera/camera.hpp"
#include "morphtrack/core/errors.hpp"
#include "morphtrack/model/morphable_model.hpp"

#include "Eigen/Core"

#include <cmath>
#include <optional>
#include <string>
#include <vector>

namespace morphtrack {
namespace fitting {

/// 2D landmarks of one frame with per-point confidence in [0, 1].
struct LandmarkFrame
{
    camera::Points2d points; ///< num_landmarks x 2, pixels
    Eigen::VectorXd confidence;
};

struct LandmarkSequence
{
    std::vector<LandmarkFrame> frames;

    int num_frames() const { return static_cast<int>(frames.size()); }
};

inline void validate(const LandmarkSequence& seq)
{
    if (seq.frames.empty())
    {
        throw ValidationError("frames", "landmark sequence is empty");
    }
    for (std::size_t t = 0; t < seq.frames.size(); ++t)
    {
        const auto& f = seq.frames[t];
        const std::string where = "frames[" + std::to_string(t) + "]";
        if (f.points.rows() != model::num_landmarks)
        {
            throw ValidationError(where, "expected " + std::to_string(model::num_landmarks) + " points, got " +
                                             std::to_string(f.points.rows()));
        }
        if (!f.points.allFinite())
        {
            throw ValidationError(where, "non-finite landmark coordinate");
        }
        if (f.confidence.size() != f.points.rows() ||
            !((f.confidence.array() >= 0.0) && (f.confidence.array() <= 1.0)).all())
        {
            throw ValidationError(where, "confidences must be one value in [0, 1] per point");
        }
    }
}

/**
 * Weights and solver controls of the video fitting energy
 *   E = w_l * E_landmarks + w_pr * E_prior + w_sm * E_smoothness.
 */
struct FitConfig
{
    /// Unset means 1 / (68 * T), a per-landmark normalisation.
    std::optional<double> landmark_weight;
    double prior_weight = 1e-3;
    double smoothness_weight = 0.1;
    double bound_sigmas = 3.0; ///< box half-width in units of each component's sigma
    int max_iterations = 200;
    double grad_tolerance = 1e-8;
    int pose_alternations = 2;
    int num_threads = 1;

    double resolved_landmark_weight(int num_frames) const
    {
        return landmark_weight ? *landmark_weight : 1.0 / (model::num_landmarks * static_cast<double>(num_frames));
    }
};

inline void validate(const FitConfig& cfg)
{
    if (cfg.landmark_weight && !(*cfg.landmark_weight > 0.0 && std::isfinite(*cfg.landmark_weight)))
    {
        throw ConfigError("landmark weight must be positive");
    }
    if (!(cfg.prior_weight >= 0.0) || !(cfg.smoothness_weight >= 0.0) || !std::isfinite(cfg.prior_weight) ||
        !std::isfinite(cfg.smoothness_weight))
    {
        throw ConfigError("prior and smoothness weights must be finite and non-negative");
    }
    if (!(cfg.bound_sigmas > 0.0))
    {
        throw ConfigError("boundSigmas must be positive");
    }
    if (cfg.max_iterations < 0)
    {
        throw ConfigError("maxIterations must be non-negative");
    }
    if (!(cfg.grad_tolerance > 0.0))
    {
        throw ConfigError("gradTolerance must be positive");
    }
    if (cfg.pose_alternations < 0)
    {
        throw ConfigError("poseAlternations must be non-negative");
    }
}

/// Shared identity, per-frame expressions and per-frame cameras of a video.
struct ShapeTrajectory
{
    Eigen::VectorXd identity;   ///< n_i
    Eigen::MatrixXd expression; ///< T x n_e, one row per frame
    std::vector<camera::CameraParams> cameras;

    int num_frames() const { return static_cast<int>(expression.rows()); }

    model::ShapeParams frame_params(int t) const { return {identity, expression.row(t).transpose()}; }
};

inline void check_dimensions(const model::MorphableModel& model, const ShapeTrajectory& traj)
{
    if (traj.identity.size() != model.num_identity() || traj.expression.cols() != model.num_expression())
    {
        throw DimensionError("trajectory coefficient dimensions (" + std::to_string(traj.identity.size()) + ", " +
                             std::to_string(traj.expression.cols()) + ") do not match the model (" +
                             std::to_string(model.num_identity()) + ", " + std::to_string(model.num_expression()) +
                             ")");
    }
    if (static_cast<int>(traj.cameras.size()) != traj.num_frames())
    {
        throw DimensionError("trajectory has " + std::to_string(traj.cameras.size()) + " cameras for " +
                             std::to_string(traj.num_frames()) + " frames");
    }
}

struct EnergyBreakdown
{
    double total = 0.0;
    double landmark = 0.0;
    double prior = 0.0;
    double smoothness = 0.0;
};

} /* namespace fitting */
} /* namespace morphtrack */

#endif /* MORPHTRACK_FITTING_TYPES_HPP */
