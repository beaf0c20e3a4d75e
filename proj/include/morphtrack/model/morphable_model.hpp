/*
 * morphtrack - 3D morphable model video tracking and reenactment conditioning.
 *
 * File: include/morphtrack/model/morphable_model.hpp
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

#ifndef MORPHTRACK_MODEL_MORPHABLE_MODEL_HPP
#define MORPHTRACK_MODEL_MORPHABLE_MODEL_HPP

#include "morphtrack/core/errors.hpp"

#include "Eigen/Core"

#include <array>
#include <cmath>
#include <string>
#include <unordered_set>
#include <vector>

namespace morphtrack {
namespace model {

/// Number of sparse facial landmarks the tracker consumes per frame.
inline constexpr int num_landmarks = 68;

/// N x 3 vertex positions. Row-major, so the storage is the interleaved
/// [x1, y1, z1, ..., xN, yN, zN] layout of a shape vector.
using Vertices = Eigen::Matrix<double, Eigen::Dynamic, 3, Eigen::RowMajor>;

using Triangle = std::array<int, 3>;

/**
 * A linear 3D morphable shape model: a mean shape plus an identity and an
 * expression PCA basis,
 *
 *   x(s_id, s_exp) = mean + U_id * s_id + U_exp * s_exp.
 *
 * The mean is stored with identity and expression means already summed.
 * Coordinates are in model units (millimetres for real models).
 */
struct MorphableModel
{
    Eigen::VectorXd mean_shape;       ///< 3N
    Eigen::MatrixXd identity_basis;   ///< 3N x n_i
    Eigen::MatrixXd expression_basis; ///< 3N x n_e
    Eigen::VectorXd identity_sigma;   ///< n_i, standard deviation per identity component
    Eigen::VectorXd expression_sigma; ///< n_e
    std::vector<Triangle> triangles;
    std::vector<int> landmark_indices; ///< exactly num_landmarks entries
    std::vector<int> left_eye_region;  ///< ordered ring around the left eye socket
    std::vector<int> right_eye_region;

    int num_vertices() const { return static_cast<int>(mean_shape.size() / 3); }
    int num_identity() const { return static_cast<int>(identity_basis.cols()); }
    int num_expression() const { return static_cast<int>(expression_basis.cols()); }
    int num_triangles() const { return static_cast<int>(triangles.size()); }
};

/// Identity and expression coefficients of a single shape instance.
struct ShapeParams
{
    Eigen::VectorXd identity;
    Eigen::VectorXd expression;
};

/// Non-fatal findings from model validation.
struct ValidationReport
{
    double identity_orthonormality_error = 0.0;   ///< max |U^T U - I| entry
    double expression_orthonormality_error = 0.0;
    std::vector<std::string> warnings;
};

inline constexpr double orthonormality_tolerance = 1e-6;

namespace detail {

inline double orthonormality_error(const Eigen::MatrixXd& basis)
{
    if (basis.cols() == 0)
    {
        return 0.0;
    }
    const Eigen::MatrixXd gram = basis.transpose() * basis;
    return (gram - Eigen::MatrixXd::Identity(gram.rows(), gram.cols())).cwiseAbs().maxCoeff();
}

inline void check_index_list(const std::vector<int>& indices, int num_vertices, const char* field)
{
    for (int idx : indices)
    {
        if (idx < 0 || idx >= num_vertices)
        {
            throw ValidationError(field, "vertex index " + std::to_string(idx) + " out of range [0, " +
                                             std::to_string(num_vertices) + ")");
        }
    }
}

} /* namespace detail */

/**
 * Checks all structural invariants of a model and throws ValidationError
 * naming the first offending field. Basis orthonormality drift is only
 * reported in the returned warnings.
 *
 * Landmark indices must be distinct whenever the model has at least
 * num_landmarks vertices; toy models with fewer vertices may repeat them.
 */
inline ValidationReport validate(const MorphableModel& model)
{
    if (model.mean_shape.size() == 0 || model.mean_shape.size() % 3 != 0)
    {
        throw ValidationError("meanShape", "length must be a positive multiple of 3");
    }
    const auto rows = model.mean_shape.size();
    const int n = model.num_vertices();
    if (model.identity_basis.rows() != rows)
    {
        throw ValidationError("idBasis", "row count must equal 3N = " + std::to_string(rows));
    }
    if (model.expression_basis.rows() != rows)
    {
        throw ValidationError("expBasis", "row count must equal 3N = " + std::to_string(rows));
    }
    if (model.identity_sigma.size() != model.identity_basis.cols())
    {
        throw ValidationError("idSigma", "length must equal the identity basis column count");
    }
    if (model.expression_sigma.size() != model.expression_basis.cols())
    {
        throw ValidationError("expSigma", "length must equal the expression basis column count");
    }
    if (!model.mean_shape.allFinite())
    {
        throw ValidationError("meanShape", "non-finite entry");
    }
    if (!model.identity_basis.allFinite())
    {
        throw ValidationError("idBasis", "non-finite entry");
    }
    if (!model.expression_basis.allFinite())
    {
        throw ValidationError("expBasis", "non-finite entry");
    }
    if (!(model.identity_sigma.array() > 0.0).all() || !model.identity_sigma.allFinite())
    {
        throw ValidationError("idSigma", "entries must be finite and strictly positive");
    }
    if (!(model.expression_sigma.array() > 0.0).all() || !model.expression_sigma.allFinite())
    {
        throw ValidationError("expSigma", "entries must be finite and strictly positive");
    }
    for (const auto& tri : model.triangles)
    {
        for (int idx : tri)
        {
            if (idx < 0 || idx >= n)
            {
                throw ValidationError("triangles", "vertex index " + std::to_string(idx) +
                                                       " out of range [0, " + std::to_string(n) + ")");
            }
        }
    }
    if (static_cast<int>(model.landmark_indices.size()) != num_landmarks)
    {
        throw ValidationError("landmarkIndices", "expected exactly " + std::to_string(num_landmarks) +
                                                     " entries, got " +
                                                     std::to_string(model.landmark_indices.size()));
    }
    detail::check_index_list(model.landmark_indices, n, "landmarkIndices");
    if (n >= num_landmarks)
    {
        std::unordered_set<int> seen(model.landmark_indices.begin(), model.landmark_indices.end());
        if (static_cast<int>(seen.size()) != num_landmarks)
        {
            throw ValidationError("landmarkIndices", "entries must be distinct");
        }
    }
    detail::check_index_list(model.left_eye_region, n, "leftEyeRegion");
    detail::check_index_list(model.right_eye_region, n, "rightEyeRegion");

    ValidationReport report;
    report.identity_orthonormality_error = detail::orthonormality_error(model.identity_basis);
    report.expression_orthonormality_error = detail::orthonormality_error(model.expression_basis);
    if (report.identity_orthonormality_error > orthonormality_tolerance)
    {
        report.warnings.push_back("idBasis columns deviate from orthonormal by " +
                                  std::to_string(report.identity_orthonormality_error));
    }
    if (report.expression_orthonormality_error > orthonormality_tolerance)
    {
        report.warnings.push_back("expBasis columns deviate from orthonormal by " +
                                  std::to_string(report.expression_orthonormality_error));
    }
    return report;
}

/// Throws DimensionError unless the coefficient vectors match the model.
inline void check_params(const MorphableModel& model, const ShapeParams& params)
{
    if (params.identity.size() != model.num_identity() || params.expression.size() != model.num_expression())
    {
        throw DimensionError("shape parameters have lengths (" + std::to_string(params.identity.size()) + ", " +
                             std::to_string(params.expression.size()) + "), model expects (" +
                             std::to_string(model.num_identity()) + ", " +
                             std::to_string(model.num_expression()) + ")");
    }
}

/// Shape vector mean + U_id * s_id + U_exp * s_exp, as a flat 3N vector.
inline Eigen::VectorXd synthesize_shape_vector(const MorphableModel& model, const ShapeParams& params)
{
    check_params(model, params);
    Eigen::VectorXd shape = model.mean_shape;
    shape.noalias() += model.identity_basis * params.identity;
    shape.noalias() += model.expression_basis * params.expression;
    return shape;
}

/// The shape instance for the given coefficients, as N x 3 vertices.
inline Vertices synthesize_shape(const MorphableModel& model, const ShapeParams& params)
{
    const Eigen::VectorXd shape = synthesize_shape_vector(model, params);
    return Eigen::Map<const Vertices>(shape.data(), model.num_vertices(), 3);
}

inline Vertices mean_vertices(const MorphableModel& model)
{
    return Eigen::Map<const Vertices>(model.mean_shape.data(), model.num_vertices(), 3);
}

/// The mean face rescaled per axis into [0, 1], and each triangle's centroid
/// on it. These centroids are the colours of the NMFC encoding.
struct NormalizedMeanFace
{
    Vertices vertices;
    Eigen::Matrix<double, Eigen::Dynamic, 3, Eigen::RowMajor> triangle_colors;
};

inline NormalizedMeanFace normalized_mean_face(const MorphableModel& model)
{
    const Vertices mean = mean_vertices(model);
    const Eigen::RowVector3d lo = mean.colwise().minCoeff();
    const Eigen::RowVector3d hi = mean.colwise().maxCoeff();
    const Eigen::RowVector3d extent = hi - lo;
    for (int axis = 0; axis < 3; ++axis)
    {
        if (!(extent[axis] > 0.0))
        {
            throw DegenerateError("mean shape has zero extent along axis " + std::to_string(axis));
        }
    }

    NormalizedMeanFace face;
    face.vertices.resize(mean.rows(), 3);
    for (Eigen::Index v = 0; v < mean.rows(); ++v)
    {
        for (int axis = 0; axis < 3; ++axis)
        {
            // The extreme vertices map to exactly 0 and 1.
            face.vertices(v, axis) = mean(v, axis) == hi[axis] ? 1.0 : (mean(v, axis) - lo[axis]) / extent[axis];
        }
    }
    face.triangle_colors.resize(model.num_triangles(), 3);
    for (int m = 0; m < model.num_triangles(); ++m)
    {
        const auto& tri = model.triangles[m];
        face.triangle_colors.row(m) =
            (face.vertices.row(tri[0]) + face.vertices.row(tri[1]) + face.vertices.row(tri[2])) / 3.0;
    }
    return face;
}

} /* namespace model */
} /* namespace morphtrack */

#endif /* MORPHTRACK_MODEL_MORPHABLE_MODEL_HPP */
