/*
 * morphtrack - 3D morphable model video tracking and reenactment conditioning.
 *
 * File: include/morphtrack/camera/camera.hpp
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

#ifndef MORPHTRACK_CAMERA_CAMERA_HPP
#define MORPHTRACK_CAMERA_CAMERA_HPP

#include "morphtrack/core/errors.hpp"
#include "morphtrack/model/morphable_model.hpp"

#include "Eigen/Core"
#include "Eigen/Dense"
#include "Eigen/Geometry"

#include <array>
#include <cmath>
#include <optional>

namespace morphtrack {
namespace camera {

using Points2d = Eigen::Matrix<double, Eigen::Dynamic, 2, Eigen::RowMajor>;
using Points3d = model::Vertices;

/**
 * Scaled orthographic camera.
 *
 * A model point v maps to the image as
 *   v' = R v,  u = scale * v'_x + t_x,  w = -scale * v'_y + t_y,  depth = v'_z.
 * Image coordinates have their origin at the top-left pixel corner with y
 * pointing down, so pixel centres sit at half-integers. Larger depth is
 * nearer to the camera.
 */
struct CameraParams
{
    Eigen::Quaterniond rotation = Eigen::Quaterniond::Identity(); ///< world to camera, unit norm
    Eigen::Vector2d translation = Eigen::Vector2d::Zero();        ///< pixels
    double scale = 1.0;                                           ///< pixels per model unit
};

inline void validate(const CameraParams& cam)
{
    if (!cam.rotation.coeffs().allFinite() || std::abs(cam.rotation.norm() - 1.0) > 1e-9)
    {
        throw ValidationError("rotation", "quaternion must have unit norm");
    }
    if (!std::isfinite(cam.scale) || cam.scale <= 0.0)
    {
        throw ValidationError("scale", "must be finite and positive");
    }
    if (!cam.translation.allFinite())
    {
        throw ValidationError("translation", "must be finite");
    }
}

struct Projection
{
    Points2d points; ///< N x 2 pixel coordinates
    Eigen::VectorXd depth;
};

inline Eigen::Vector2d project_point(const Eigen::Matrix3d& rotation, const CameraParams& cam,
                                     const Eigen::Vector3d& v)
{
    const Eigen::Vector3d r = rotation * v;
    return {cam.scale * r.x() + cam.translation.x(), -cam.scale * r.y() + cam.translation.y()};
}

inline Projection project(const Points3d& vertices, const CameraParams& cam)
{
    validate(cam);
    const Eigen::Matrix3d rotation = cam.rotation.toRotationMatrix();
    Projection out;
    out.points.resize(vertices.rows(), 2);
    out.depth.resize(vertices.rows());
    for (Eigen::Index i = 0; i < vertices.rows(); ++i)
    {
        const Eigen::Vector3d r = rotation * vertices.row(i).transpose();
        out.points(i, 0) = cam.scale * r.x() + cam.translation.x();
        out.points(i, 1) = -cam.scale * r.y() + cam.translation.y();
        out.depth(i) = r.z();
    }
    return out;
}

/// Angle in radians of the relative rotation between two unit quaternions.
inline double rotation_distance(const Eigen::Quaterniond& a, const Eigen::Quaterniond& b)
{
    const Eigen::Quaterniond d = a.conjugate() * b;
    // atan2 form stays accurate for tiny angles, unlike acos(|w|).
    return 2.0 * std::atan2(d.vec().norm(), std::abs(d.w()));
}

/**
 * Closed-form scaled orthographic pose from 2D-3D correspondences.
 *
 * Both point sets are centred, the 2 x 3 affine map A minimising the
 * (optionally weighted) squared residuals is solved, and A is factored into
 * scale times the first two rows of a rotation: the scale is the mean of the
 * two row norms, the rows are Gram-Schmidt orthonormalised and the third row
 * is their cross product, so det(R) = +1. Throws DegenerateError if the 3D
 * points do not span three dimensions.
 */
inline CameraParams estimate_pose(const Points2d& image_points, const Points3d& model_points,
                                  const std::optional<Eigen::VectorXd>& weights = std::nullopt)
{
    const Eigen::Index n = image_points.rows();
    if (model_points.rows() != n)
    {
        throw DimensionError("estimate_pose: " + std::to_string(n) + " image points but " +
                             std::to_string(model_points.rows()) + " model points");
    }
    if (weights && weights->size() != n)
    {
        throw DimensionError("estimate_pose: weight count does not match point count");
    }
    if (n < 4)
    {
        throw DegenerateError("estimate_pose: need at least 4 correspondences");
    }
    const Eigen::VectorXd w = weights ? *weights : Eigen::VectorXd::Ones(n);
    const double w_sum = w.sum();
    if (!(w_sum > 0.0) || (w.array() < 0.0).any())
    {
        throw DegenerateError("estimate_pose: weights must be non-negative with a positive sum");
    }

    const Eigen::RowVector2d mean2 = (w.asDiagonal() * image_points).colwise().sum() / w_sum;
    const Eigen::RowVector3d mean3 = (w.asDiagonal() * model_points).colwise().sum() / w_sum;
    const Eigen::MatrixXd p = image_points.rowwise() - mean2; // n x 2
    const Eigen::MatrixXd x = model_points.rowwise() - mean3; // n x 3

    const Eigen::Matrix3d xx = x.transpose() * w.asDiagonal() * x;
    const Eigen::Matrix<double, 3, 2> xp = x.transpose() * w.asDiagonal() * p;
    Eigen::SelfAdjointEigenSolver<Eigen::Matrix3d> eig(xx);
    const double largest = eig.eigenvalues().maxCoeff();
    if (!(largest > 0.0) || eig.eigenvalues().minCoeff() <= 1e-12 * largest)
    {
        throw DegenerateError("estimate_pose: rank-deficient 3D landmark configuration");
    }
    const Eigen::Matrix<double, 3, 2> at = xx.ldlt().solve(xp); // columns are the rows of A

    const Eigen::Vector3d a0 = at.col(0);
    const Eigen::Vector3d a1 = -at.col(1); // undo the image y flip
    const double n0 = a0.norm();
    const double n1 = a1.norm();
    if (!(n0 > 0.0) || !(n1 > 0.0))
    {
        throw DegenerateError("estimate_pose: affine camera has a zero row");
    }

    Eigen::Matrix3d r;
    const Eigen::Vector3d r0 = a0 / n0;
    Eigen::Vector3d r1 = a1 - r0.dot(a1) * r0;
    const double r1_norm = r1.norm();
    if (!(r1_norm > 0.0))
    {
        throw DegenerateError("estimate_pose: affine camera rows are parallel");
    }
    r1 /= r1_norm;
    r.row(0) = r0.transpose();
    r.row(1) = r1.transpose();
    r.row(2) = r0.cross(r1).transpose();

    CameraParams cam;
    cam.scale = 0.5 * (n0 + n1);
    cam.rotation = Eigen::Quaterniond(r).normalized();
    if (cam.rotation.w() < 0.0)
    {
        cam.rotation.coeffs() *= -1.0;
    }
    const Eigen::Vector3d centre = r * mean3.transpose();
    cam.translation = Eigen::Vector2d(mean2.x() - cam.scale * centre.x(), mean2.y() + cam.scale * centre.y());
    return cam;
}

/**
 * Seven-value pose record used in trajectory files:
 * [axis-angle (3), translation x, y, z (z always 0), scale].
 */
using PoseRecord = std::array<double, 7>;

inline PoseRecord to_pose_record(const CameraParams& cam)
{
    Eigen::Quaterniond q = cam.rotation.normalized();
    if (q.w() < 0.0)
    {
        q.coeffs() *= -1.0;
    }
    const double sin_half = q.vec().norm();
    Eigen::Vector3d rotvec = Eigen::Vector3d::Zero();
    if (sin_half > 0.0)
    {
        rotvec = q.vec() / sin_half * (2.0 * std::atan2(sin_half, q.w()));
    }
    return {rotvec.x(), rotvec.y(), rotvec.z(), cam.translation.x(), cam.translation.y(), 0.0, cam.scale};
}

inline CameraParams from_pose_record(const PoseRecord& record)
{
    const Eigen::Vector3d rotvec(record[0], record[1], record[2]);
    const double angle = rotvec.norm();
    CameraParams cam;
    if (angle > 0.0)
    {
        cam.rotation = Eigen::Quaterniond(Eigen::AngleAxisd(angle, rotvec / angle));
    }
    cam.translation = Eigen::Vector2d(record[3], record[4]);
    cam.scale = record[6];
    return cam;
}

} /* namespace camera */
} /* namespace morphtrack */

#endif /* MORPHTRACK_CAMERA_CAMERA_HPP */
