/*
 * morphtrack - 3D morphable model video tracking and reenactment conditioning.
 *
 * File: include/morphtrack/conditioning/sequence.hpp
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

#ifndef MORPHTRACK_CONDITIONING_SEQUENCE_HPP
#define MORPHTRACK_CONDITIONING_SEQUENCE_HPP

#include "morphtrack/conditioning/gaze.hpp"
#include "morphtrack/conditioning/image.hpp"
#include "morphtrack/conditioning/nmfc.hpp"
#include "morphtrack/conditioning/rasterizer.hpp"
#include "morphtrack/core/binary_io.hpp"
#include "morphtrack/core/errors.hpp"
#include "morphtrack/core/parallel.hpp"
#include "morphtrack/fitting/types.hpp"
#include "morphtrack/model/morphable_model.hpp"

#include "json.hpp"

#include <cstdio>
#include <filesystem>
#include <string>
#include <vector>

namespace morphtrack {
namespace conditioning {

inline std::string frame_filename(const char* prefix, int t)
{
    char buffer[32];
    std::snprintf(buffer, sizeof(buffer), "%s_%06d.png", prefix, t);
    return buffer;
}

struct FramePair
{
    std::string nmfc;
    std::string gaze; ///< empty when the gaze channel is omitted
};

struct SequenceManifest
{
    int width = 0;
    int height = 0;
    int num_frames = 0;
    std::string trajectory; ///< trajectory file the frames were rendered from, may be empty
    std::vector<FramePair> frames;
    std::vector<std::string> warnings;

    nlohmann::json to_json() const
    {
        nlohmann::json pairs = nlohmann::json::array();
        for (const auto& f : frames)
        {
            pairs.push_back({{"nmfc", f.nmfc}, {"gaze", f.gaze.empty() ? nlohmann::json(nullptr) : nlohmann::json(f.gaze)}});
        }
        return {{"width", width},   {"height", height}, {"numFrames", num_frames}, {"trajectory", trajectory},
                {"frames", pairs}, {"warnings", warnings}};
    }
};

inline SequenceManifest parse_manifest(const std::string& text)
{
    SequenceManifest m;
    try
    {
        const auto j = nlohmann::json::parse(text);
        m.width = j.at("width").get<int>();
        m.height = j.at("height").get<int>();
        m.num_frames = j.at("numFrames").get<int>();
        m.trajectory = j.at("trajectory").get<std::string>();
        for (const auto& f : j.at("frames"))
        {
            m.frames.push_back({f.at("nmfc").get<std::string>(), f.at("gaze").is_null() ? "" : f.at("gaze").get<std::string>()});
        }
        m.warnings = j.value("warnings", std::vector<std::string>{});
    } catch (const nlohmann::json::exception& e)
    {
        throw ParseError(std::string("invalid manifest: ") + e.what(), 0);
    }
    return m;
}

/// NMFC image of one frame: synthesize, rasterize, colour by mean-face centroid.
inline RgbImage render_nmfc_frame(const model::MorphableModel& model, const TriangleColors& colors,
                                  const fitting::ShapeTrajectory& traj, int t, int width, int height)
{
    const auto vertices = model::synthesize_shape(model, traj.frame_params(t));
    const auto mask = rasterize(vertices, model.triangles, traj.cameras[static_cast<std::size_t>(t)], width, height);
    return encode_nmfc(mask, colors);
}

/**
 * Renders and writes the paired conditioning frames nmfc_%06d.png and
 * gaze_%06d.png for every frame of the trajectory, plus manifest.json.
 * An empty gaze list omits the gaze channel. Frames render in parallel;
 * the output bytes do not depend on the thread count.
 */
inline SequenceManifest render_conditioning_sequence(const model::MorphableModel& model,
                                                     const fitting::ShapeTrajectory& traj,
                                                     const std::vector<GazeFrame>& gaze, int width, int height,
                                                     const std::filesystem::path& out_dir, int num_threads = 1,
                                                     const std::string& trajectory_path = "")
{
    fitting::check_dimensions(model, traj);
    if (width <= 0 || height <= 0)
    {
        throw ValidationError("image size", "width and height must be positive");
    }
    const int num_frames = traj.num_frames();
    if (!gaze.empty() && static_cast<int>(gaze.size()) != num_frames)
    {
        throw DimensionError("gaze list has " + std::to_string(gaze.size()) + " frames but the trajectory has " +
                             std::to_string(num_frames));
    }
    std::error_code ec;
    std::filesystem::create_directories(out_dir, ec);
    if (ec)
    {
        throw IoError("cannot create output directory " + out_dir.string() + ": " + ec.message());
    }

    const auto face = model::normalized_mean_face(model);
    SequenceManifest manifest;
    manifest.width = width;
    manifest.height = height;
    manifest.num_frames = num_frames;
    manifest.trajectory = trajectory_path;
    manifest.frames.resize(static_cast<std::size_t>(num_frames));
    std::vector<std::vector<std::string>> frame_warnings(static_cast<std::size_t>(num_frames));

    parallel_for(static_cast<std::size_t>(num_frames), num_threads, [&](std::size_t i) {
        const int t = static_cast<int>(i);
        auto& pair = manifest.frames[i];
        pair.nmfc = frame_filename("nmfc", t);
        write_png(render_nmfc_frame(model, face.triangle_colors, traj, t, width, height), out_dir / pair.nmfc);
        if (!gaze.empty())
        {
            pair.gaze = frame_filename("gaze", t);
            std::vector<std::string> warnings;
            write_png(render_gaze(gaze[i], width, height, &warnings), out_dir / pair.gaze);
            for (const auto& w : warnings)
            {
                frame_warnings[i].push_back("frame " + std::to_string(t) + ": " + w);
            }
        }
    });
    for (auto& w : frame_warnings)
    {
        manifest.warnings.insert(manifest.warnings.end(), w.begin(), w.end());
    }
    morphtrack::detail::write_text_file(out_dir / "manifest.json", manifest.to_json().dump(2) + "\n");
    return manifest;
}

} /* namespace conditioning */
} /* namespace morphtrack */

#endif /* MORPHTRACK_CONDITIONING_SEQUENCE_HPP */
