/*
 * morphtrack - 3D morphable model video tracking and reenactment conditioning.
 *
 * File: include/morphtrack/fitting/trajectory_io.hpp
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

#ifndef MORPHTRACK_FITTING_TRAJECTORY_IO_HPP
#define MORPHTRACK_FITTING_TRAJECTORY_IO_HPP

#include "morphtrack/camera/camera.hpp"
#include "morphtrack/core/binary_io.hpp"
#include "morphtrack/fitting/types.hpp"

#include <filesystem>
#include <vector>

namespace morphtrack {
namespace fitting {

/*
 * Trajectory container, little-endian:
 *   "H2HT", u32 T, n_i, n_e,
 *   f64 idCoeffs[n_i], expCoeffs[T][n_e], camera records[T][7]
 * with each camera record laid out as camera::PoseRecord.
 */
inline constexpr char trajectory_magic[] = "H2HT";

inline std::vector<unsigned char> encode_trajectory(const ShapeTrajectory& traj)
{
    if (static_cast<int>(traj.cameras.size()) != traj.num_frames())
    {
        throw DimensionError("trajectory camera count does not match its frame count");
    }
    morphtrack::detail::ByteWriter w;
    w.magic(std::string_view(trajectory_magic, 4));
    w.u32(static_cast<std::uint32_t>(traj.num_frames()));
    w.u32(static_cast<std::uint32_t>(traj.identity.size()));
    w.u32(static_cast<std::uint32_t>(traj.expression.cols()));
    w.f64_array(traj.identity.data(), static_cast<std::size_t>(traj.identity.size()));
    for (Eigen::Index t = 0; t < traj.expression.rows(); ++t)
    {
        for (Eigen::Index k = 0; k < traj.expression.cols(); ++k)
        {
            w.f64(traj.expression(t, k));
        }
    }
    for (const auto& cam : traj.cameras)
    {
        const auto rec = camera::to_pose_record(cam);
        w.f64_array(rec.data(), rec.size());
    }
    return w.bytes();
}

inline ShapeTrajectory decode_trajectory(std::vector<unsigned char> bytes)
{
    morphtrack::detail::ByteReader r(std::move(bytes));
    r.expect_magic(std::string_view(trajectory_magic, 4));
    const std::size_t frames = r.u32("T");
    const std::size_t n_i = r.u32("n_i");
    const std::size_t n_e = r.u32("n_e");
    if (r.remaining() / 8 < n_i || (r.remaining() / 8 - n_i) / (n_e + 7) < frames)
    {
        throw ParseError("unexpected end of file while reading trajectory payload", r.offset());
    }
    ShapeTrajectory traj;
    traj.identity.resize(static_cast<Eigen::Index>(n_i));
    r.f64_array(traj.identity.data(), n_i, "idCoeffs");
    traj.expression.resize(static_cast<Eigen::Index>(frames), static_cast<Eigen::Index>(n_e));
    for (std::size_t t = 0; t < frames; ++t)
    {
        for (std::size_t k = 0; k < n_e; ++k)
        {
            traj.expression(static_cast<Eigen::Index>(t), static_cast<Eigen::Index>(k)) = r.f64("expCoeffs");
        }
    }
    traj.cameras.resize(frames);
    for (std::size_t t = 0; t < frames; ++t)
    {
        const auto record_offset = r.offset();
        camera::PoseRecord rec;
        r.f64_array(rec.data(), rec.size(), "camera record");
        traj.cameras[t] = camera::from_pose_record(rec);
        try
        {
            camera::validate(traj.cameras[t]);
        } catch (const ValidationError& e)
        {
            throw ParseError(std::string("invalid camera record: ") + e.what(), record_offset);
        }
    }
    r.expect_end();
    if (!traj.identity.allFinite() || !traj.expression.allFinite())
    {
        throw ValidationError("coefficients", "non-finite entry");
    }
    return traj;
}

inline ShapeTrajectory load_trajectory(const std::filesystem::path& path)
{
    if (!std::filesystem::exists(path))
    {
        throw IoError("trajectory file not found: " + path.string());
    }
    return decode_trajectory(morphtrack::detail::read_file_bytes(path));
}

inline void save_trajectory(const ShapeTrajectory& traj, const std::filesystem::path& path)
{
    morphtrack::detail::write_file_bytes(path, encode_trajectory(traj));
}

} /* namespace fitting */
} /* namespace morphtrack */

#endif /* MORPHTRACK_FITTING_TRAJECTORY_IO_HPP */
