/*
 * morphtrack - 3D morphable model video tracking and reenactment conditioning.
 *
 * File: include/morphtrack/conditioning/rasterizer.hpp
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

#ifndef MORPHTRACK_CONDITIONING_RASTERIZER_HPP
#define MORPHTRACK_CONDITIONING_RASTERIZER_HPP

#include "morphtrack/camera/camera.hpp"
#include "morphtrack/core/errors.hpp"
#include "morphtrack/model/morphable_model.hpp"

#include "Eigen/Core"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <span>
#include <vector>

namespace morphtrack {
namespace conditioning {

/**
 * Per-pixel ID of the visible triangle plus its depth. Pixels no triangle
 * covers hold `background`.
 */
struct VisibilityMask
{
    static constexpr std::int32_t background = -1;

    int width = 0;
    int height = 0;
    std::vector<std::int32_t> triangle_id; ///< row-major, width * height
    std::vector<double> depth;             ///< winning depth, -inf on background

    std::int32_t id(int x, int y) const { return triangle_id[static_cast<std::size_t>(y) * width + x]; }
};

/**
 * A screen-space triangle set up for coverage tests. The vertex order is
 * normalised so the signed area is positive, which makes the fill rule
 * independent of the original winding.
 */
struct ScreenTriangle
{
    Eigen::Vector2d p[3];
    double z[3];
    double area = 0.0;       ///< twice the signed area, > 0 unless degenerate
    bool top_left[3] = {};   ///< per edge p[k] -> p[(k+1)%3]

    static ScreenTriangle setup(const Eigen::Vector2d& a, const Eigen::Vector2d& b, const Eigen::Vector2d& c,
                                double za, double zb, double zc)
    {
        ScreenTriangle t;
        t.p[0] = a;
        t.p[1] = b;
        t.p[2] = c;
        t.z[0] = za;
        t.z[1] = zb;
        t.z[2] = zc;
        t.area = edge(a, b, c);
        if (t.area < 0.0)
        {
            std::swap(t.p[1], t.p[2]);
            std::swap(t.z[1], t.z[2]);
            t.area = -t.area;
        }
        for (int k = 0; k < 3; ++k)
        {
            // With y pointing down and positive orientation, a top edge runs
            // in +x on a horizontal line and a left edge runs upwards.
            const Eigen::Vector2d d = t.p[(k + 1) % 3] - t.p[k];
            t.top_left[k] = (d.y() == 0.0 && d.x() > 0.0) || d.y() < 0.0;
        }
        return t;
    }

    /// Edge function of q against the directed edge a -> b.
    static double edge(const Eigen::Vector2d& a, const Eigen::Vector2d& b, const Eigen::Vector2d& q)
    {
        return (b.x() - a.x()) * (q.y() - a.y()) - (b.y() - a.y()) * (q.x() - a.x());
    }

    /// Top-left fill rule: inside if every edge function is positive, or zero
    /// on a top or left edge. Writes the edge values for interpolation.
    bool covers(const Eigen::Vector2d& q, double (&w)[3]) const
    {
        if (!(area > 0.0))
        {
            return false;
        }
        for (int k = 0; k < 3; ++k)
        {
            w[k] = edge(p[k], p[(k + 1) % 3], q);
            if (w[k] < 0.0 || (w[k] == 0.0 && !top_left[k]))
            {
                return false;
            }
        }
        return true;
    }

    /// Depth at a covered point. w[k] weights the vertex opposite edge k.
    double depth_at(const double (&w)[3]) const { return (w[1] * z[0] + w[2] * z[1] + w[0] * z[2]) / area; }
};

/// Rasterizes already projected vertices (N x 2 pixels, N depths).
inline VisibilityMask rasterize_projected(const camera::Points2d& points, const Eigen::VectorXd& depth,
                                          std::span<const model::Triangle> triangles, int width, int height)
{
    if (width <= 0 || height <= 0)
    {
        throw ValidationError("image size", "width and height must be positive");
    }
    VisibilityMask mask;
    mask.width = width;
    mask.height = height;
    const std::size_t pixels = static_cast<std::size_t>(width) * height;
    mask.triangle_id.assign(pixels, VisibilityMask::background);
    mask.depth.assign(pixels, -std::numeric_limits<double>::infinity());

    for (std::size_t m = 0; m < triangles.size(); ++m)
    {
        const auto& tri = triangles[m];
        for (int v : tri)
        {
            if (v < 0 || v >= points.rows())
            {
                throw ValidationError("triangles", "vertex index out of range");
            }
        }
        const auto st = ScreenTriangle::setup(points.row(tri[0]).transpose(), points.row(tri[1]).transpose(),
                                              points.row(tri[2]).transpose(), depth(tri[0]), depth(tri[1]),
                                              depth(tri[2]));
        if (!(st.area > 0.0))
        {
            continue;
        }
        const double min_x = std::min({st.p[0].x(), st.p[1].x(), st.p[2].x()});
        const double max_x = std::max({st.p[0].x(), st.p[1].x(), st.p[2].x()});
        const double min_y = std::min({st.p[0].y(), st.p[1].y(), st.p[2].y()});
        const double max_y = std::max({st.p[0].y(), st.p[1].y(), st.p[2].y()});
        // Pixel (i, j) has its centre at (i + 0.5, j + 0.5).
        if (!std::isfinite(min_x + max_x + min_y + max_y))
        {
            continue;
        }
        auto to_index = [](double v, int limit) { return static_cast<int>(std::clamp(v, -1.0, double(limit))); };
        const int x0 = std::max(0, to_index(std::floor(min_x - 0.5), width));
        const int x1 = std::min(width - 1, to_index(std::ceil(max_x - 0.5), width));
        const int y0 = std::max(0, to_index(std::floor(min_y - 0.5), height));
        const int y1 = std::min(height - 1, to_index(std::ceil(max_y - 0.5), height));
        for (int y = y0; y <= y1; ++y)
        {
            for (int x = x0; x <= x1; ++x)
            {
                double w[3];
                if (!st.covers(Eigen::Vector2d(x + 0.5, y + 0.5), w))
                {
                    continue;
                }
                const double z = st.depth_at(w);
                const std::size_t idx = static_cast<std::size_t>(y) * width + x;
                // Strictly greater: on equal depth the lower triangle index stays.
                if (z > mask.depth[idx])
                {
                    mask.depth[idx] = z;
                    mask.triangle_id[idx] = static_cast<std::int32_t>(m);
                }
            }
        }
    }
    return mask;
}

/**
 * Visibility mask of a mesh seen through a scaled orthographic camera.
 * Coverage is sampled at pixel centres with the top-left fill rule, depth is
 * interpolated linearly and the nearest (largest depth) triangle wins.
 * Back-facing triangles are not culled.
 */
inline VisibilityMask rasterize(const model::Vertices& vertices, std::span<const model::Triangle> triangles,
                                const camera::CameraParams& cam, int width, int height)
{
    if (width <= 0 || height <= 0)
    {
        throw ValidationError("image size", "width and height must be positive");
    }
    const auto proj = camera::project(vertices, cam);
    return rasterize_projected(proj.points, proj.depth, triangles, width, height);
}

} /* namespace conditioning */
} /* namespace morphtrack */

#endif /* MORPHTRACK_CONDITIONING_RASTERIZER_HPP */
