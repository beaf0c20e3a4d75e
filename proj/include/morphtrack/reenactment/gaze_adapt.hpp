/*
 * morphtrack - 3D morphable model video tracking and reenactment conditioning.
 *
 * File: include/morphtrack/reenactment/gaze_adapt.hpp
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

#ifndef MORPHTRACK_REENACTMENT_GAZE_ADAPT_HPP
#define MORPHTRACK_REENACTMENT_GAZE_ADAPT_HPP

#include "morphtrack/camera/camera.hpp"
#include "morphtrack/conditioning/gaze.hpp"
#include "morphtrack/core/errors.hpp"
#include "morphtrack/core/parallel.hpp"
#include "morphtrack/fitting/energy.hpp"
#include "morphtrack/fitting/types.hpp"
#include "morphtrack/model/morphable_model.hpp"

#include "Eigen/Core"

#include <complex>
#include <vector>

namespace morphtrack {
namespace reenactment {

/// q = c * p + t on points read as complex numbers x + iy: c encodes scale and rotation.
struct Similarity2d
{
    std::complex<double> c{1.0, 0.0};
    std::complex<double> t{0.0, 0.0};

    Eigen::Vector2d apply(const Eigen::Vector2d& p) const
    {
        const std::complex<double> q = c * std::complex<double>(p.x(), p.y()) + t;
        return {q.real(), q.imag()};
    }

    double scale() const { return std::abs(c); }
    double angle() const { return std::arg(c); }
};

/**
 * Least-squares similarity mapping `from` onto `to` (both K x 2). Closed
 * form: with centred points z, w as complex numbers, c = sum(conj(z) w) / sum(|z|^2).
 */
inline Similarity2d fit_similarity(const camera::Points2d& from, const camera::Points2d& to)
{
    if (from.rows() != to.rows() || from.rows() == 0)
    {
        throw DimensionError("fit_similarity: point sets must be non-empty and of equal size");
    }
    const Eigen::RowVector2d mean_from = from.colwise().mean();
    const Eigen::RowVector2d mean_to = to.colwise().mean();
    std::complex<double> num{0.0, 0.0};
    double den = 0.0;
    for (Eigen::Index k = 0; k < from.rows(); ++k)
    {
        const std::complex<double> z(from(k, 0) - mean_from.x(), from(k, 1) - mean_from.y());
        const std::complex<double> w(to(k, 0) - mean_to.x(), to(k, 1) - mean_to.y());
        num += std::conj(z) * w;
        den += std::norm(z);
    }
    const double extent = from.cwiseAbs().maxCoeff();
    if (!(den > 1e-24 * (1.0 + extent * extent) * static_cast<double>(from.rows())))
    {
        throw DegenerateError("fit_similarity: source eye ring projects to a single point");
    }
    Similarity2d s;
    s.c = num / den;
    s.t = std::complex<double>(mean_to.x(), mean_to.y()) - s.c * std::complex<double>(mean_from.x(), mean_from.y());
    return s;
}

inline conditioning::Polygon transform_polygon(const Similarity2d& s, const conditioning::Polygon& poly)
{
    conditioning::Polygon out;
    out.reserve(poly.size());
    for (const auto& p : poly)
    {
        out.push_back(s.apply(p));
    }
    return out;
}

/// Projected eye-socket ring of frame t.
inline camera::Points2d project_ring(const model::MorphableModel& model, const std::vector<int>& ring,
                                     const fitting::ShapeTrajectory& traj, int t)
{
    const auto vertices =
        fitting::synthesize_vertices(model, ring, traj.identity, traj.expression.row(t).transpose());
    return camera::project(vertices, traj.cameras[static_cast<std::size_t>(t)]).points;
}

/**
 * Moves the source's gaze polygons onto the hybrid render. Per frame and eye,
 * the similarity taking the source fit's projected eye-socket ring onto the
 * hybrid's projected ring is applied to that eye's polygons, so the eyes land
 * on the eye sockets of the hybrid NMFC frame.
 */
inline std::vector<conditioning::GazeFrame> adapt_gaze(const std::vector<conditioning::GazeFrame>& source_gaze,
                                                       const fitting::ShapeTrajectory& source_fit,
                                                       const fitting::ShapeTrajectory& hybrid,
                                                       const model::MorphableModel& model, int num_threads = 1)
{
    fitting::check_dimensions(model, source_fit);
    fitting::check_dimensions(model, hybrid);
    const int num_frames = static_cast<int>(source_gaze.size());
    if (source_fit.num_frames() != num_frames || hybrid.num_frames() != num_frames)
    {
        throw DimensionError("adapt_gaze: gaze, source fit and hybrid must have the same frame count");
    }
    std::vector<conditioning::GazeFrame> out(source_gaze.size());
    parallel_for(source_gaze.size(), num_threads, [&](std::size_t i) {
        const int t = static_cast<int>(i);
        auto adapt = [&](const std::optional<conditioning::EyePolygons>& eye, const std::vector<int>& ring) {
            std::optional<conditioning::EyePolygons> moved;
            if (!eye)
            {
                return moved;
            }
            if (ring.empty())
            {
                throw ValidationError("eyeRegion", "model has no eye-socket ring for a tracked eye");
            }
            const auto s = fit_similarity(project_ring(model, ring, source_fit, t), project_ring(model, ring, hybrid, t));
            moved = conditioning::EyePolygons{transform_polygon(s, eye->eyelid), transform_polygon(s, eye->iris)};
            return moved;
        };
        out[i].left = adapt(source_gaze[i].left, model.left_eye_region);
        out[i].right = adapt(source_gaze[i].right, model.right_eye_region);
    });
    return out;
}

} /* namespace reenactment */
} /* namespace morphtrack */

#endif /* MORPHTRACK_REENACTMENT_GAZE_ADAPT_HPP */
