/*
 * morphtrack - 3D morphable model video tracking and reenactment conditioning.
 *
 * File: include/morphtrack/reenactment/metrics.hpp
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

#ifndef MORPHTRACK_REENACTMENT_METRICS_HPP
#define MORPHTRACK_REENACTMENT_METRICS_HPP

#include "morphtrack/conditioning/image.hpp"
#include "morphtrack/core/errors.hpp"
#include "morphtrack/core/parallel.hpp"

#include "json.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <string>
#include <vector>

namespace morphtrack {
namespace reenactment {

/// Largest possible per-pixel error, black against white: sqrt(3 * 255^2).
inline const double max_pixel_error = std::sqrt(3.0 * 255.0 * 255.0);

struct PixelError
{
    double mean = 0.0;
    int width = 0;
    int height = 0;
    std::vector<double> heatmap; ///< row-major per-pixel RGB distance
};

/// Per-pixel Euclidean RGB distance on the 0..255 scale and its mean over all pixels.
inline PixelError per_pixel_error(const conditioning::RgbImage& a, const conditioning::RgbImage& b)
{
    if (a.width != b.width || a.height != b.height)
    {
        throw DimensionError("per_pixel_error: image sizes differ (" + std::to_string(a.width) + "x" +
                             std::to_string(a.height) + " vs " + std::to_string(b.width) + "x" +
                             std::to_string(b.height) + ")");
    }
    PixelError out;
    out.width = a.width;
    out.height = a.height;
    const std::size_t pixels = static_cast<std::size_t>(a.width) * a.height;
    out.heatmap.resize(pixels);
    for (std::size_t p = 0; p < pixels; ++p)
    {
        double sq = 0.0;
        for (std::size_t k = 0; k < 3; ++k)
        {
            const double d = double(a.data[3 * p + k]) - double(b.data[3 * p + k]);
            sq += d * d;
        }
        out.heatmap[p] = std::sqrt(sq);
    }
    out.mean = pixels == 0 ? 0.0 : pairwise_sum(out.heatmap) / static_cast<double>(pixels);
    return out;
}

/// Heatmap as 8-bit grey, 255 at the largest possible error.
inline conditioning::GrayImage heatmap_image(const PixelError& err)
{
    conditioning::GrayImage img(err.width, err.height);
    for (std::size_t p = 0; p < err.heatmap.size(); ++p)
    {
        img.data[p] = static_cast<std::uint8_t>(std::lround(std::clamp(err.heatmap[p] * 255.0 / max_pixel_error, 0.0, 255.0)));
    }
    return img;
}

/// PNG files of a directory, sorted by file name.
inline std::vector<std::filesystem::path> list_png_files(const std::filesystem::path& dir)
{
    if (!std::filesystem::is_directory(dir))
    {
        throw IoError("not a directory: " + dir.string());
    }
    std::vector<std::filesystem::path> files;
    for (const auto& entry : std::filesystem::directory_iterator(dir))
    {
        if (entry.is_regular_file() && entry.path().extension() == ".png")
        {
            files.push_back(entry.path());
        }
    }
    std::sort(files.begin(), files.end(), [](const auto& x, const auto& y) { return x.filename() < y.filename(); });
    return files;
}

struct SequenceError
{
    std::vector<std::string> frames; ///< file name pairs "a|b"
    std::vector<double> per_frame;
    double overall = 0.0;

    nlohmann::json to_json() const
    {
        return {{"perFrame", per_frame}, {"overall", overall}, {"frames", frames}};
    }
};

struct SequenceErrorOptions
{
    int num_threads = 1;
    /// When set, the heatmap of frame k is written here as heatmap_<name of frame k in dirA>.
    std::filesystem::path heatmap_dir;
};

/**
 * Per-frame mean pixel errors between the sorted PNG frames of two
 * directories and their average.
 */
inline SequenceError sequence_error(const std::filesystem::path& dir_a, const std::filesystem::path& dir_b,
                                    const SequenceErrorOptions& options = {})
{
    const auto files_a = list_png_files(dir_a);
    const auto files_b = list_png_files(dir_b);
    if (files_a.size() != files_b.size())
    {
        throw DimensionError("frame count mismatch: " + std::to_string(files_a.size()) + " in " + dir_a.string() +
                             ", " + std::to_string(files_b.size()) + " in " + dir_b.string());
    }
    if (files_a.empty())
    {
        throw ValidationError("frames", "no PNG frames found in " + dir_a.string());
    }
    if (!options.heatmap_dir.empty())
    {
        std::filesystem::create_directories(options.heatmap_dir);
    }
    SequenceError out;
    out.per_frame.resize(files_a.size());
    out.frames.resize(files_a.size());
    parallel_for(files_a.size(), options.num_threads, [&](std::size_t k) {
        const auto err = per_pixel_error(conditioning::read_png_rgb(files_a[k]), conditioning::read_png_rgb(files_b[k]));
        out.per_frame[k] = err.mean;
        out.frames[k] = files_a[k].filename().string() + "|" + files_b[k].filename().string();
        if (!options.heatmap_dir.empty())
        {
            conditioning::write_png(heatmap_image(err), options.heatmap_dir / ("heatmap_" + files_a[k].filename().string()));
        }
    });
    out.overall = pairwise_sum(out.per_frame) / static_cast<double>(out.per_frame.size());
    return out;
}

} /* namespace reenactment */
} /* namespace morphtrack */

#endif /* MORPHTRACK_REENACTMENT_METRICS_HPP */
