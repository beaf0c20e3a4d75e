/*
 * morphtrack - 3D morphable model video tracking and reenactment conditioning.
 *
 * File: include/morphtrack/conditioning/gaze.hpp
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

#ifndef MORPHTRACK_CONDITIONING_GAZE_HPP
#define MORPHTRACK_CONDITIONING_GAZE_HPP

#include "morphtrack/conditioning/image.hpp"
#include "morphtrack/core/binary_io.hpp"
#include "morphtrack/core/errors.hpp"

#include "Eigen/Core"
#include "json.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

namespace morphtrack {
namespace conditioning {

using Polygon = std::vector<Eigen::Vector2d>;

struct EyePolygons
{
    Polygon eyelid;
    Polygon iris; ///< empty when no iris was tracked
};

/// Eye outlines of one frame in pixel coordinates.
struct GazeFrame
{
    std::optional<EyePolygons> left;
    std::optional<EyePolygons> right;
};

inline constexpr Rgb eyelid_color{180, 180, 180};
inline constexpr Rgb iris_color{90, 90, 90};

/**
 * x coordinates where the polygon boundary crosses the horizontal line y,
 * sorted. An edge counts when its endpoints lie on different sides of
 * "> y", which makes crossings at vertices count exactly once.
 */
inline std::vector<double> scanline_crossings(const Polygon& poly, double y)
{
    std::vector<double> xs;
    for (std::size_t k = 0; k < poly.size(); ++k)
    {
        const Eigen::Vector2d& a = poly[k];
        const Eigen::Vector2d& b = poly[(k + 1) % poly.size()];
        if ((a.y() > y) != (b.y() > y))
        {
            xs.push_back(a.x() + (y - a.y()) * (b.x() - a.x()) / (b.y() - a.y()));
        }
    }
    std::sort(xs.begin(), xs.end());
    return xs;
}

/// Even-odd scanline fill sampled at pixel centres. Returns the pixel count written.
template <int Channels, std::size_t K>
std::size_t fill_polygon(Image<Channels>& image, const Polygon& poly, const std::array<std::uint8_t, K>& color)
{
    static_assert(K == Channels);
    std::size_t filled = 0;
    if (poly.size() < 3)
    {
        return filled;
    }
    for (int j = 0; j < image.height; ++j)
    {
        const double yc = j + 0.5;
        const auto xs = scanline_crossings(poly, yc);
        for (std::size_t k = 0; k + 1 < xs.size(); k += 2)
        {
            // Pixel centres with xs[k] <= x + 0.5 < xs[k + 1].
            const double lo = std::clamp(std::ceil(xs[k] - 0.5), -1.0, double(image.width));
            const double hi = std::clamp(std::ceil(xs[k + 1] - 0.5), -1.0, double(image.width));
            int first = static_cast<int>(lo);
            int last = static_cast<int>(hi);
            while (first > 0 && first - 1 + 0.5 >= xs[k])
            {
                --first;
            }
            while (first < image.width && first + 0.5 < xs[k])
            {
                ++first;
            }
            while (last > 0 && last - 1 + 0.5 >= xs[k + 1])
            {
                --last;
            }
            while (last < image.width && last + 0.5 < xs[k + 1])
            {
                ++last;
            }
            for (int i = std::max(first, 0); i < std::min(last, image.width); ++i)
            {
                std::copy(color.begin(), color.end(), image.pixel(i, j));
                ++filled;
            }
        }
    }
    return filled;
}

/// Closed outline, one pixel wide, sampled at unit steps along each edge.
template <int Channels, std::size_t K>
void draw_outline(Image<Channels>& image, const Polygon& poly, const std::array<std::uint8_t, K>& color)
{
    static_assert(K == Channels);
    for (std::size_t k = 0; k < poly.size(); ++k)
    {
        const Eigen::Vector2d& a = poly[k];
        const Eigen::Vector2d& b = poly[(k + 1) % poly.size()];
        const Eigen::Vector2d d = b - a;
        const double span = std::max(std::abs(d.x()), std::abs(d.y()));
        const int steps = std::max(1, static_cast<int>(std::ceil(std::min(span, 1e6))));
        for (int s = 0; s <= steps; ++s)
        {
            const Eigen::Vector2d q = a + d * (static_cast<double>(s) / steps);
            const double px = std::floor(q.x());
            const double py = std::floor(q.y());
            if (px >= 0.0 && py >= 0.0 && px < image.width && py < image.height)
            {
                std::copy(color.begin(), color.end(), image.pixel(static_cast<int>(px), static_cast<int>(py)));
            }
        }
    }
}

namespace detail {

inline bool usable_polygon(const Polygon& poly, const char* what, std::vector<std::string>* warnings)
{
    if (poly.empty())
    {
        return false;
    }
    const bool finite = std::all_of(poly.begin(), poly.end(), [](const Eigen::Vector2d& p) { return p.allFinite(); });
    if (poly.size() < 3 || !finite)
    {
        if (warnings)
        {
            warnings->push_back(std::string(what) + " polygon skipped: needs at least 3 finite points");
        }
        return false;
    }
    return true;
}

} /* namespace detail */

/**
 * Gaze conditioning frame: both eyelid polygons filled and outlined in
 * eyelid_color, then the irises drawn over them in iris_color, on black.
 * Polygons with fewer than 3 points are skipped and reported in `warnings`.
 */
inline RgbImage render_gaze(const GazeFrame& gaze, int width, int height, std::vector<std::string>* warnings = nullptr)
{
    if (width <= 0 || height <= 0)
    {
        throw ValidationError("image size", "width and height must be positive");
    }
    RgbImage image(width, height);
    for (const auto* eye : {&gaze.left, &gaze.right})
    {
        if (*eye && detail::usable_polygon((*eye)->eyelid, "eyelid", warnings))
        {
            fill_polygon(image, (*eye)->eyelid, eyelid_color);
            draw_outline(image, (*eye)->eyelid, eyelid_color);
        }
    }
    for (const auto* eye : {&gaze.left, &gaze.right})
    {
        if (*eye && detail::usable_polygon((*eye)->iris, "iris", warnings))
        {
            fill_polygon(image, (*eye)->iris, iris_color);
            draw_outline(image, (*eye)->iris, iris_color);
        }
    }
    return image;
}

/*
 * Gaze files: {"frames": [{"left": {"eyelid": [[x, y], ...], "iris": [[x, y], ...]},
 *                          "right": {...}}, ...]}
 * A missing or null eye means the eye was not tracked in that frame.
 */

namespace detail {

inline Polygon polygon_from_json(const nlohmann::json& j)
{
    Polygon poly;
    for (const auto& p : j)
    {
        if (!p.is_array() || p.size() != 2)
        {
            throw ValidationError("gaze", "points must be [x, y] pairs");
        }
        poly.emplace_back(p[0].get<double>(), p[1].get<double>());
    }
    return poly;
}

inline nlohmann::json polygon_to_json(const Polygon& poly)
{
    nlohmann::json out = nlohmann::json::array();
    for (const auto& p : poly)
    {
        out.push_back({p.x(), p.y()});
    }
    return out;
}

} /* namespace detail */

inline std::vector<GazeFrame> parse_gaze_json(const std::string& text)
{
    nlohmann::json doc;
    try
    {
        doc = nlohmann::json::parse(text);
    } catch (const nlohmann::json::parse_error& e)
    {
        throw ParseError(std::string("invalid gaze JSON: ") + e.what(), e.byte);
    }
    if (!doc.is_object() || !doc.contains("frames") || !doc["frames"].is_array())
    {
        throw ParseError("gaze file needs a \"frames\" array", 0);
    }
    std::vector<GazeFrame> frames;
    try
    {
        for (const auto& f : doc["frames"])
        {
            GazeFrame frame;
            for (auto [key, slot] : {std::pair{"left", &frame.left}, std::pair{"right", &frame.right}})
            {
                if (!f.contains(key) || f[key].is_null())
                {
                    continue;
                }
                EyePolygons eye;
                eye.eyelid = detail::polygon_from_json(f[key].at("eyelid"));
                if (f[key].contains("iris") && !f[key]["iris"].is_null())
                {
                    eye.iris = detail::polygon_from_json(f[key]["iris"]);
                }
                *slot = std::move(eye);
            }
            frames.push_back(std::move(frame));
        }
    } catch (const nlohmann::json::exception& e)
    {
        throw ValidationError("gaze", e.what());
    }
    return frames;
}

inline std::vector<GazeFrame> load_gaze(const std::filesystem::path& path)
{
    if (!std::filesystem::exists(path))
    {
        throw IoError("gaze file not found: " + path.string());
    }
    return parse_gaze_json(morphtrack::detail::read_text_file(path));
}

inline void save_gaze(const std::vector<GazeFrame>& frames, const std::filesystem::path& path)
{
    nlohmann::json out = nlohmann::json::array();
    for (const auto& f : frames)
    {
        nlohmann::json jf = nlohmann::json::object();
        for (auto [key, slot] : {std::pair{"left", &f.left}, std::pair{"right", &f.right}})
        {
            if (*slot)
            {
                jf[key] = {{"eyelid", detail::polygon_to_json((*slot)->eyelid)},
                           {"iris", detail::polygon_to_json((*slot)->iris)}};
            } else
            {
                jf[key] = nullptr;
            }
        }
        out.push_back(std::move(jf));
    }
    morphtrack::detail::write_text_file(path, nlohmann::json{{"frames", out}}.dump());
}

} /* namespace conditioning */
} /* namespace morphtrack */

#endif /* MORPHTRACK_CONDITIONING_GAZE_HPP */
