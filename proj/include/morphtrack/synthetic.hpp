/*
 * morphtrack - 3D morphable model video tracking and reenactment conditioning.
 *
 * File: include/morphtrack/synthetic.hpp
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

#ifndef MORPHTRACK_SYNTHETIC_HPP
#define MORPHTRACK_SYNTHETIC_HPP

#include "morphtrack/camera/camera.hpp"
#include "morphtrack/conditioning/gaze.hpp"
#include "morphtrack/fitting/energy.hpp"
#include "morphtrack/fitting/types.hpp"
#include "morphtrack/model/morphable_model.hpp"

#include "Eigen/Core"
#include "Eigen/Geometry"
#include "Eigen/LU"

#include <cmath>
#include <numbers>
#include <random>
#include <vector>

/*
 * Synthetic face-like morphable models and videos with known ground truth,
 * so the pipeline can be run and tested without licensed 3DMM data.
 */
namespace morphtrack {
namespace synthetic {

struct ModelOptions
{
    int columns = 25; ///< grid vertices across, columns * rows = N
    int rows = 20;
    int num_identity = 20;
    int num_expression = 10;
    std::uint64_t seed = 7;
};

namespace detail {

/// Face-plane position (u, v) in [-1, 1]^2, v up, to a 3D point in millimetres.
inline Eigen::Vector3d surface_point(double u, double v)
{
    const double dome = 50.0 * std::sqrt(std::max(0.05, 1.0 - 0.5 * u * u - 0.35 * v * v));
    const double nose = 22.0 * std::exp(-(u * u) / (2.0 * 0.12 * 0.12) - (v - 0.05) * (v - 0.05) / (2.0 * 0.22 * 0.22));
    return {75.0 * u, 100.0 * v, dome + nose};
}

/// Landmark layout in the face plane, in the usual 68-point order.
inline std::vector<Eigen::Vector2d> landmark_layout()
{
    const double pi = std::numbers::pi;
    std::vector<Eigen::Vector2d> p;
    for (int k = 0; k < 17; ++k) // jaw
    {
        const double phi = pi * k / 16.0;
        p.emplace_back(-0.85 * std::cos(phi), 0.1 - 0.85 * std::sin(phi));
    }
    for (int side = -1; side <= 1; side += 2) // brows, image-left first
    {
        for (int k = 0; k < 5; ++k)
        {
            const double s = k / 4.0;
            const double u = side < 0 ? -0.7 + 0.55 * s : 0.15 + 0.55 * s;
            p.emplace_back(u, 0.45 + 0.08 * std::sin(pi * s));
        }
    }
    for (int k = 0; k < 4; ++k) // nose bridge
    {
        p.emplace_back(0.0, 0.3 - 0.12 * k);
    }
    for (int k = 0; k < 5; ++k) // nostrils
    {
        p.emplace_back(-0.2 + 0.1 * k, -0.15 - 0.03 * (2 - std::abs(k - 2)));
    }
    for (int side = -1; side <= 1; side += 2) // eyes
    {
        for (int k = 0; k < 6; ++k)
        {
            const double phi = pi - 2.0 * pi * k / 6.0;
            p.emplace_back(0.4 * side + 0.17 * std::cos(phi), 0.25 + 0.07 * std::sin(phi));
        }
    }
    for (int k = 0; k < 12; ++k) // outer lips
    {
        const double phi = pi - 2.0 * pi * k / 12.0;
        p.emplace_back(0.35 * std::cos(phi), -0.45 + 0.14 * std::sin(phi));
    }
    for (int k = 0; k < 8; ++k) // inner lips
    {
        const double phi = pi - 2.0 * pi * k / 8.0;
        p.emplace_back(0.2 * std::cos(phi), -0.45 + 0.05 * std::sin(phi));
    }
    return p;
}

/// Nearest grid vertex to each point, never reusing a vertex already taken.
inline std::vector<int> snap_to_grid(const std::vector<Eigen::Vector2d>& points, const std::vector<Eigen::Vector2d>& grid,
                                     std::vector<bool>& taken)
{
    std::vector<int> out;
    for (const auto& q : points)
    {
        int best = -1;
        double best_d = 0.0;
        for (std::size_t v = 0; v < grid.size(); ++v)
        {
            const double d = (grid[v] - q).squaredNorm();
            if (!taken[v] && (best < 0 || d < best_d))
            {
                best = static_cast<int>(v);
                best_d = d;
            }
        }
        taken[static_cast<std::size_t>(best)] = true;
        out.push_back(best);
    }
    return out;
}

/// Smooth random displacement field: a few Gaussian bumps with random 3D amplitudes.
inline Eigen::VectorXd random_field(const std::vector<Eigen::Vector2d>& grid, std::mt19937_64& rng)
{
    std::uniform_real_distribution<double> pos(-1.0, 1.0);
    std::uniform_real_distribution<double> radius(0.25, 0.6);
    std::normal_distribution<double> amp(0.0, 1.0);
    Eigen::VectorXd field = Eigen::VectorXd::Zero(3 * static_cast<Eigen::Index>(grid.size()));
    for (int b = 0; b < 6; ++b)
    {
        const Eigen::Vector2d c(pos(rng), pos(rng));
        const double r = radius(rng);
        const Eigen::Vector3d a(amp(rng), amp(rng), amp(rng));
        for (std::size_t v = 0; v < grid.size(); ++v)
        {
            const double w = std::exp(-(grid[v] - c).squaredNorm() / (2.0 * r * r));
            field.segment<3>(3 * static_cast<Eigen::Index>(v)) += w * a;
        }
    }
    return field;
}

} /* namespace detail */

/**
 * Face-like height-field mesh with random smooth identity and expression
 * bases. Every basis column has zero inner product, over the landmark
 * vertices, with the twelve 3D affine motions of the mean landmarks, so
 * shape variation never looks like a pose change at the landmarks. The
 * columns of both bases together are orthonormal.
 */
inline model::MorphableModel make_model(const ModelOptions& options = {})
{
    const int cols = options.columns;
    const int rows = options.rows;
    const int n = cols * rows;
    std::vector<Eigen::Vector2d> grid;
    model::MorphableModel m;
    m.mean_shape.resize(3 * n);
    for (int r = 0; r < rows; ++r)
    {
        for (int c = 0; c < cols; ++c)
        {
            const double u = -1.0 + 2.0 * c / (cols - 1);
            const double v = 1.0 - 2.0 * r / (rows - 1);
            grid.emplace_back(u, v);
            m.mean_shape.segment<3>(3 * (r * cols + c)) = detail::surface_point(u, v);
        }
    }
    for (int r = 0; r + 1 < rows; ++r)
    {
        for (int c = 0; c + 1 < cols; ++c)
        {
            const int a = r * cols + c;
            m.triangles.push_back({a, a + cols, a + 1});
            m.triangles.push_back({a + 1, a + cols, a + cols + 1});
        }
    }

    std::vector<bool> taken(static_cast<std::size_t>(n), false);
    m.landmark_indices = detail::snap_to_grid(detail::landmark_layout(), grid, taken);
    const double pi = std::numbers::pi;
    for (int side = -1; side <= 1; side += 2)
    {
        std::vector<Eigen::Vector2d> ring;
        for (int k = 0; k < 8; ++k)
        {
            const double phi = pi - 2.0 * pi * k / 8.0;
            ring.emplace_back(0.4 * side + 0.24 * std::cos(phi), 0.25 + 0.14 * std::sin(phi));
        }
        std::vector<bool> ring_taken(static_cast<std::size_t>(n), false);
        (side < 0 ? m.left_eye_region : m.right_eye_region) = detail::snap_to_grid(ring, grid, ring_taken);
    }

    // Affine motions of the mean face (f in {1, x, y, z} along each axis).
    Eigen::MatrixXd affine = Eigen::MatrixXd::Zero(3 * n, 12);
    for (int v = 0; v < n; ++v)
    {
        const Eigen::Vector3d x = m.mean_shape.segment<3>(3 * v);
        const double f[4] = {1.0, x.x() / 100.0, x.y() / 100.0, x.z() / 100.0};
        for (int axis = 0; axis < 3; ++axis)
        {
            for (int k = 0; k < 4; ++k)
            {
                affine(3 * v + axis, 4 * axis + k) = f[k];
            }
        }
    }
    Eigen::MatrixXd at_landmarks = Eigen::MatrixXd::Zero(3 * n, 12);
    for (int j : m.landmark_indices)
    {
        at_landmarks.middleRows(3 * j, 3) = affine.middleRows(3 * j, 3);
    }
    const Eigen::MatrixXd gram = at_landmarks.transpose() * affine;
    const auto gram_lu = gram.partialPivLu();

    std::mt19937_64 rng(options.seed);
    const int total = options.num_identity + options.num_expression;
    Eigen::MatrixXd basis(3 * n, total);
    for (int k = 0; k < total; ++k)
    {
        Eigen::VectorXd f = detail::random_field(grid, rng);
        // Remove the affine part seen at the landmarks with a smooth affine field.
        f -= affine * gram_lu.solve(at_landmarks.transpose() * f);
        for (int pass = 0; pass < 2; ++pass)
        {
            for (int j = 0; j < k; ++j)
            {
                f -= basis.col(j).dot(f) * basis.col(j);
            }
        }
        basis.col(k) = f.normalized();
    }
    m.identity_basis = basis.leftCols(options.num_identity);
    m.expression_basis = basis.rightCols(options.num_expression);
    m.identity_sigma.resize(options.num_identity);
    for (int k = 0; k < options.num_identity; ++k)
    {
        m.identity_sigma(k) = 60.0 / std::sqrt(1.0 + k);
    }
    m.expression_sigma.resize(options.num_expression);
    for (int k = 0; k < options.num_expression; ++k)
    {
        m.expression_sigma(k) = 40.0 / std::sqrt(1.0 + k);
    }
    return m;
}

struct VideoOptions
{
    int num_frames = 50;
    int width = 256;
    int height = 256;
    double noise_sigma = 0.0;        ///< Gaussian landmark noise, pixels
    double identity_sigmas = 1.0;    ///< spread of the identity draw, clipped at 2.5 sigma
    double expression_sigmas = 1.2;  ///< peak expression amplitude in sigma units
    double min_period = 60.0;        ///< frames, slowest and fastest expression oscillation
    double max_period = 150.0;
    std::uint64_t seed = 11;
};

/// Ground truth and its observations.
struct Video
{
    fitting::ShapeTrajectory truth;
    fitting::LandmarkSequence landmarks;
    std::vector<conditioning::GazeFrame> gaze;
};

inline conditioning::Polygon ring_polygon(const camera::Points2d& ring)
{
    conditioning::Polygon poly;
    for (Eigen::Index k = 0; k < ring.rows(); ++k)
    {
        poly.emplace_back(ring(k, 0), ring(k, 1));
    }
    return poly;
}

/**
 * A head turning and talking: identity drawn once, expressions as slow
 * sinusoids, smooth yaw, pitch, roll and framing. Landmarks are the exact
 * projections plus optional Gaussian noise; gaze polygons are the projected
 * eye rings with a moving iris octagon inside each.
 */
inline Video make_video(const model::MorphableModel& model, const VideoOptions& options = {})
{
    const double pi = std::numbers::pi;
    std::mt19937_64 rng(options.seed);
    std::normal_distribution<double> gauss(0.0, 1.0);
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    const int n_i = model.num_identity();
    const int n_e = model.num_expression();
    const int frames = options.num_frames;

    Video video;
    auto& truth = video.truth;
    truth.identity.resize(n_i);
    for (int k = 0; k < n_i; ++k)
    {
        truth.identity(k) = std::clamp(options.identity_sigmas * gauss(rng), -2.5, 2.5) * model.identity_sigma(k);
    }
    truth.expression.resize(frames, n_e);
    for (int k = 0; k < n_e; ++k)
    {
        const double period = options.min_period + (options.max_period - options.min_period) * unit(rng);
        const double phase = 2.0 * pi * unit(rng);
        const double amplitude = std::min(options.expression_sigmas * (0.5 + 0.5 * unit(rng)), 2.5);
        for (int t = 0; t < frames; ++t)
        {
            truth.expression(t, k) = amplitude * model.expression_sigma(k) * std::sin(2.0 * pi * t / period + phase);
        }
    }
    const double base_scale = 0.55 * std::min(options.width, options.height) / 150.0;
    const double yaw_phase = 2.0 * pi * unit(rng);
    const double pitch_phase = 2.0 * pi * unit(rng);
    const double roll_phase = 2.0 * pi * unit(rng);
    for (int t = 0; t < frames; ++t)
    {
        const double s = static_cast<double>(t);
        camera::CameraParams cam;
        const double yaw = 0.4 * std::sin(2.0 * pi * s / 70.0 + yaw_phase);
        const double pitch = 0.15 * std::sin(2.0 * pi * s / 90.0 + pitch_phase);
        const double roll = 0.12 * std::sin(2.0 * pi * s / 110.0 + roll_phase);
        cam.rotation = Eigen::AngleAxisd(roll, Eigen::Vector3d::UnitZ()) * Eigen::AngleAxisd(yaw, Eigen::Vector3d::UnitY()) *
                       Eigen::AngleAxisd(pitch, Eigen::Vector3d::UnitX());
        cam.scale = base_scale * (1.0 + 0.05 * std::sin(2.0 * pi * s / 80.0));
        cam.translation = Eigen::Vector2d(options.width * (0.5 + 0.03 * std::sin(2.0 * pi * s / 60.0)),
                                          options.height * (0.5 + 0.02 * std::cos(2.0 * pi * s / 75.0)));
        truth.cameras.push_back(cam);
    }

    for (int t = 0; t < frames; ++t)
    {
        const Eigen::VectorXd expression = truth.expression.row(t).transpose();
        const auto verts = fitting::synthesize_vertices(model, model.landmark_indices, truth.identity, expression);
        fitting::LandmarkFrame frame;
        frame.points = camera::project(verts, truth.cameras[static_cast<std::size_t>(t)]).points;
        if (options.noise_sigma > 0.0)
        {
            for (Eigen::Index j = 0; j < frame.points.rows(); ++j)
            {
                frame.points(j, 0) += options.noise_sigma * gauss(rng);
                frame.points(j, 1) += options.noise_sigma * gauss(rng);
            }
        }
        frame.confidence = Eigen::VectorXd::Ones(frame.points.rows());
        video.landmarks.frames.push_back(std::move(frame));

        conditioning::GazeFrame gaze;
        const double gx = 0.25 * std::sin(2.0 * pi * t / 40.0);
        const double gy = 0.15 * std::cos(2.0 * pi * t / 55.0);
        for (auto [ring, slot] : {std::pair{&model.left_eye_region, &gaze.left}, std::pair{&model.right_eye_region, &gaze.right}})
        {
            if (ring->size() < 3)
            {
                continue;
            }
            const auto ring_verts = fitting::synthesize_vertices(model, *ring, truth.identity, expression);
            const auto ring_2d = camera::project(ring_verts, truth.cameras[static_cast<std::size_t>(t)]).points;
            conditioning::EyePolygons eye;
            eye.eyelid = ring_polygon(ring_2d);
            const Eigen::RowVector2d centre = ring_2d.colwise().mean();
            const Eigen::RowVector2d extent = ring_2d.colwise().maxCoeff() - ring_2d.colwise().minCoeff();
            const double radius = 0.3 * std::min(extent.x(), extent.y());
            for (int k = 0; k < 8; ++k)
            {
                const double phi = 2.0 * pi * k / 8.0;
                eye.iris.emplace_back(centre.x() + gx * extent.x() + radius * std::cos(phi),
                                      centre.y() + gy * extent.y() + radius * std::sin(phi));
            }
            *slot = std::move(eye);
        }
        video.gaze.push_back(std::move(gaze));
    }
    return video;
}

/// Stacked coefficients [identity; expression rows] of a trajectory.
inline Eigen::VectorXd stacked_coefficients(const fitting::ShapeTrajectory& traj)
{
    Eigen::VectorXd out(traj.identity.size() + traj.expression.size());
    out.head(traj.identity.size()) = traj.identity;
    for (Eigen::Index t = 0; t < traj.expression.rows(); ++t)
    {
        out.segment(traj.identity.size() + t * traj.expression.cols(), traj.expression.cols()) =
            traj.expression.row(t).transpose();
    }
    return out;
}

} /* namespace synthetic */
} /* namespace morphtrack */

#endif /* MORPHTRACK_SYNTHETIC_HPP */
