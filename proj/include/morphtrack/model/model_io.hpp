/*
 * morphtrack - 3D morphable model video tracking and reenactment conditioning.
 *
 * File: include/morphtrack/model/model_io.hpp
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

#ifndef MORPHTRACK_MODEL_MODEL_IO_HPP
#define MORPHTRACK_MODEL_MODEL_IO_HPP

#include "morphtrack/core/binary_io.hpp"
#include "morphtrack/model/morphable_model.hpp"

#include <cstdint>
#include <filesystem>
#include <vector>

namespace morphtrack {
namespace model {

/**
 * Binary model container, all little-endian:
 *
 *   "H2HM"  u32 version
 *   u32 N, n_i, n_e, M
 *   f64 meanShape[3N], idBasis[3N*n_i] (column-major), expBasis[3N*n_e],
 *       idSigma[n_i], expSigma[n_e]
 *   u32 triangles[3M] (row-major), landmarkIndices[68],
 *       u32 len + leftEyeRegion[len], u32 len + rightEyeRegion[len]
 */
inline constexpr char model_magic[] = "H2HM";
inline constexpr std::uint32_t model_format_version = 1;

/// Size in bytes of a serialized model with the given dimensions.
inline std::size_t model_file_size(std::size_t n, std::size_t n_i, std::size_t n_e, std::size_t m,
                                   std::size_t left_eye, std::size_t right_eye)
{
    return 4 + 4 + 4 * 4 + 8 * (3 * n + 3 * n * n_i + 3 * n * n_e + n_i + n_e) +
           4 * (3 * m + num_landmarks + 1 + left_eye + 1 + right_eye);
}

inline std::vector<unsigned char> encode_model(const MorphableModel& model)
{
    morphtrack::detail::ByteWriter w;
    w.magic(std::string_view(model_magic, 4));
    w.u32(model_format_version);
    w.u32(static_cast<std::uint32_t>(model.num_vertices()));
    w.u32(static_cast<std::uint32_t>(model.num_identity()));
    w.u32(static_cast<std::uint32_t>(model.num_expression()));
    w.u32(static_cast<std::uint32_t>(model.num_triangles()));
    w.f64_array(model.mean_shape.data(), model.mean_shape.size());
    w.f64_array(model.identity_basis.data(), model.identity_basis.size());
    w.f64_array(model.expression_basis.data(), model.expression_basis.size());
    w.f64_array(model.identity_sigma.data(), model.identity_sigma.size());
    w.f64_array(model.expression_sigma.data(), model.expression_sigma.size());
    for (const auto& tri : model.triangles)
    {
        w.u32_range(tri);
    }
    w.u32_range(model.landmark_indices);
    w.u32(static_cast<std::uint32_t>(model.left_eye_region.size()));
    w.u32_range(model.left_eye_region);
    w.u32(static_cast<std::uint32_t>(model.right_eye_region.size()));
    w.u32_range(model.right_eye_region);
    return w.bytes();
}

/// Decodes and validates. Structural problems throw ParseError with the byte
/// offset, invariant violations throw ValidationError.
inline MorphableModel decode_model(std::vector<unsigned char> bytes, ValidationReport* report = nullptr)
{
    morphtrack::detail::ByteReader r(std::move(bytes));
    r.expect_magic(std::string_view(model_magic, 4));
    const auto version_offset = r.offset();
    if (r.u32("version") != model_format_version)
    {
        throw ParseError("unsupported model format version", version_offset);
    }
    const std::size_t n = r.u32("N");
    const std::size_t n_i = r.u32("n_i");
    const std::size_t n_e = r.u32("n_e");
    const std::size_t m = r.u32("M");
    if (n == 0)
    {
        throw ParseError("model has no vertices", r.offset() - 16);
    }

    if (n > r.remaining() / 24)
    {
        throw ParseError("unexpected end of file while reading meanShape", r.offset());
    }

    MorphableModel model;
    const auto rows = static_cast<Eigen::Index>(3 * n);
    model.mean_shape.resize(rows);
    r.f64_array(model.mean_shape.data(), 3 * n, "meanShape");
    if (n_i > r.remaining() / 8 / (3 * n))
    {
        throw ParseError("unexpected end of file while reading idBasis", r.offset());
    }
    model.identity_basis.resize(rows, static_cast<Eigen::Index>(n_i));
    r.f64_array(model.identity_basis.data(), 3 * n * n_i, "idBasis");
    if (n_e > r.remaining() / 8 / (3 * n))
    {
        throw ParseError("unexpected end of file while reading expBasis", r.offset());
    }
    model.expression_basis.resize(rows, static_cast<Eigen::Index>(n_e));
    r.f64_array(model.expression_basis.data(), 3 * n * n_e, "expBasis");
    model.identity_sigma.resize(static_cast<Eigen::Index>(n_i));
    r.f64_array(model.identity_sigma.data(), n_i, "idSigma");
    model.expression_sigma.resize(static_cast<Eigen::Index>(n_e));
    r.f64_array(model.expression_sigma.data(), n_e, "expSigma");

    const auto tris = r.u32_array(3 * m, "triangles");
    model.triangles.resize(m);
    for (std::size_t t = 0; t < m; ++t)
    {
        model.triangles[t] = {static_cast<int>(tris[3 * t]), static_cast<int>(tris[3 * t + 1]),
                              static_cast<int>(tris[3 * t + 2])};
    }
    auto to_int = [](const std::vector<std::uint32_t>& v) { return std::vector<int>(v.begin(), v.end()); };
    model.landmark_indices = to_int(r.u32_array(num_landmarks, "landmarkIndices"));
    const std::size_t left_len = r.u32("leftEyeRegion length");
    model.left_eye_region = to_int(r.u32_array(left_len, "leftEyeRegion"));
    const std::size_t right_len = r.u32("rightEyeRegion length");
    model.right_eye_region = to_int(r.u32_array(right_len, "rightEyeRegion"));
    r.expect_end();

    // u32 indices beyond INT_MAX wrap negative and are caught by validate().
    const auto findings = validate(model);
    if (report)
    {
        *report = findings;
    }
    return model;
}

inline MorphableModel load_model(const std::filesystem::path& path, ValidationReport* report = nullptr)
{
    return decode_model(morphtrack::detail::read_file_bytes(path), report);
}

inline void save_model(const MorphableModel& model, const std::filesystem::path& path)
{
    validate(model);
    morphtrack::detail::write_file_bytes(path, encode_model(model));
}

} /* namespace model */
} /* namespace morphtrack */

#endif /* MORPHTRACK_MODEL_MODEL_IO_HPP */
