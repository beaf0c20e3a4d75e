/*
 * morphtrack - 3D morphable model video tracking and reenactment conditioning.
 *
 * File: include/morphtrack/conditioning/nmfc.hpp
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

#ifndef MORPHTRACK_CONDITIONING_NMFC_HPP
#define MORPHTRACK_CONDITIONING_NMFC_HPP

#include "morphtrack/conditioning/image.hpp"
#include "morphtrack/conditioning/rasterizer.hpp"
#include "morphtrack/core/errors.hpp"

#include "Eigen/Core"

#include <algorithm>
#include <cmath>

namespace morphtrack {
namespace conditioning {

using TriangleColors = Eigen::Matrix<double, Eigen::Dynamic, 3, Eigen::RowMajor>;

/// round(255 * c) per channel, c clamped to [0, 1].
inline Rgb quantize_color(const Eigen::Ref<const Eigen::RowVector3d>& c)
{
    Rgb out;
    for (int k = 0; k < 3; ++k)
    {
        out[static_cast<std::size_t>(k)] =
            static_cast<std::uint8_t>(std::lround(255.0 * std::clamp(c(k), 0.0, 1.0)));
    }
    return out;
}

/**
 * Normalised mean face coordinate image: every foreground pixel gets the
 * quantised colour of its visible triangle, background stays black.
 */
inline RgbImage encode_nmfc(const VisibilityMask& mask, const TriangleColors& triangle_colors)
{
    const auto num_colors = static_cast<std::int32_t>(triangle_colors.rows());
    for (auto id : mask.triangle_id)
    {
        if (id != VisibilityMask::background && (id < 0 || id >= num_colors))
        {
            throw DimensionError("encode_nmfc: mask references triangle " + std::to_string(id) + " but only " +
                                 std::to_string(num_colors) + " colours were given");
        }
    }
    std::vector<Rgb> palette(static_cast<std::size_t>(num_colors));
    for (std::int32_t m = 0; m < num_colors; ++m)
    {
        palette[static_cast<std::size_t>(m)] = quantize_color(triangle_colors.row(m));
    }

    RgbImage image(mask.width, mask.height);
    for (int y = 0; y < mask.height; ++y)
    {
        for (int x = 0; x < mask.width; ++x)
        {
            const auto id = mask.id(x, y);
            if (id == VisibilityMask::background)
            {
                continue;
            }
            const auto& c = palette[static_cast<std::size_t>(id)];
            std::copy(c.begin(), c.end(), image.pixel(x, y));
        }
    }
    return image;
}

} /* namespace conditioning */
} /* namespace morphtrack */

#endif /* MORPHTRACK_CONDITIONING_NMFC_HPP */
