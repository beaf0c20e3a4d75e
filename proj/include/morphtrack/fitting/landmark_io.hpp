/*
 * morphtrack - 3D morphable model video tracking and reenactment conditioning.
 *
 * File: include/morphtrack/fitting/landmark_io.hpp
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

#ifndef MORPHTRACK_FITTING_LANDMARK_IO_HPP
#define MORPHTRACK_FITTING_LANDMARK_IO_HPP

#include "morphtrack/core/binary_io.hpp"
#include "morphtrack/fitting/types.hpp"

#include "json.hpp"

#include <algorithm>
#include <array>
#include <charconv>
#include <filesystem>
#include <sstream>
#include <string>
#include <vector>

namespace morphtrack {
namespace fitting {

/*
 * Landmark files hold one video. CSV: one row "x,y[,confidence]" per point,
 * 68 consecutive rows per frame; blank lines and lines starting with '#' are
 * ignored, as is a non-numeric first row (header). JSON:
 *   {"frames": [[[x, y], [x, y, c], ...], ...]}
 * Confidence defaults to 1.
 */

namespace detail {

inline bool parse_double(std::string_view text, double& out)
{
    while (!text.empty() && (text.front() == ' ' || text.front() == '\t'))
    {
        text.remove_prefix(1);
    }
    while (!text.empty() && (text.back() == ' ' || text.back() == '\t' || text.back() == '\r'))
    {
        text.remove_suffix(1);
    }
    if (text.empty())
    {
        return false;
    }
    const auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), out);
    return ec == std::errc() && ptr == text.data() + text.size();
}

inline LandmarkSequence group_frames(const std::vector<std::array<double, 3>>& rows)
{
    LandmarkSequence seq;
    const std::size_t per_frame = model::num_landmarks;
    seq.frames.resize(rows.size() / per_frame);
    for (std::size_t t = 0; t < seq.frames.size(); ++t)
    {
        auto& frame = seq.frames[t];
        frame.points.resize(model::num_landmarks, 2);
        frame.confidence.resize(model::num_landmarks);
        for (int j = 0; j < model::num_landmarks; ++j)
        {
            const auto& row = rows[t * per_frame + j];
            frame.points(j, 0) = row[0];
            frame.points(j, 1) = row[1];
            frame.confidence(j) = row[2];
        }
    }
    return seq;
}

} /* namespace detail */

inline LandmarkSequence parse_landmarks_csv(const std::string& text)
{
    std::vector<std::array<double, 3>> rows;
    std::istringstream in(text);
    std::string line;
    std::size_t line_no = 0;
    bool seen_data = false;
    while (std::getline(in, line))
    {
        ++line_no;
        std::string_view view(line);
        while (!view.empty() && (view.front() == ' ' || view.front() == '\t'))
        {
            view.remove_prefix(1);
        }
        if (view.empty() || view.front() == '#' || view == "\r")
        {
            continue;
        }
        std::vector<std::string_view> fields;
        std::size_t start = 0;
        while (true)
        {
            const auto comma = view.find(',', start);
            fields.push_back(view.substr(start, comma == std::string_view::npos ? view.npos : comma - start));
            if (comma == std::string_view::npos)
            {
                break;
            }
            start = comma + 1;
        }
        std::array<double, 3> row{0.0, 0.0, 1.0};
        bool ok = fields.size() == 2 || fields.size() == 3;
        for (std::size_t k = 0; ok && k < fields.size(); ++k)
        {
            ok = detail::parse_double(fields[k], row[k]);
        }
        if (!ok)
        {
            if (!seen_data && rows.empty())
            {
                seen_data = true; // header row
                continue;
            }
            throw ParseError("expected \"x,y[,confidence]\"", line_no, true);
        }
        seen_data = true;
        rows.push_back(row);
    }
    if (rows.empty() || rows.size() % model::num_landmarks != 0)
    {
        throw ParseError("landmark row count " + std::to_string(rows.size()) + " is not a positive multiple of " +
                             std::to_string(model::num_landmarks),
                         line_no, true);
    }
    auto seq = detail::group_frames(rows);
    validate(seq);
    return seq;
}

inline LandmarkSequence parse_landmarks_json(const std::string& text)
{
    nlohmann::json doc;
    try
    {
        doc = nlohmann::json::parse(text);
    } catch (const nlohmann::json::parse_error& e)
    {
        throw ParseError(std::string("invalid JSON: ") + e.what(), e.byte);
    }
    if (!doc.is_object() || !doc.contains("frames") || !doc["frames"].is_array())
    {
        throw ParseError("expected an object with a \"frames\" array", 0);
    }
    std::vector<std::array<double, 3>> rows;
    for (const auto& frame : doc["frames"])
    {
        if (!frame.is_array() || frame.size() != static_cast<std::size_t>(model::num_landmarks))
        {
            throw ValidationError("frames", "each frame must list " + std::to_string(model::num_landmarks) +
                                                " points");
        }
        for (const auto& pt : frame)
        {
            if (!pt.is_array() || pt.size() < 2 || pt.size() > 3)
            {
                throw ValidationError("frames", "each point must be [x, y] or [x, y, confidence]");
            }
            if (!std::all_of(pt.begin(), pt.end(), [](const nlohmann::json& v) { return v.is_number(); }))
            {
                throw ValidationError("frames", "point coordinates must be numbers");
            }
            std::array<double, 3> row{pt[0].get<double>(), pt[1].get<double>(), 1.0};
            if (pt.size() == 3)
            {
                row[2] = pt[2].get<double>();
            }
            rows.push_back(row);
        }
    }
    if (rows.empty())
    {
        throw ValidationError("frames", "landmark sequence is empty");
    }
    auto seq = detail::group_frames(rows);
    validate(seq);
    return seq;
}

inline LandmarkSequence load_landmarks(const std::filesystem::path& path)
{
    if (!std::filesystem::exists(path))
    {
        throw IoError("landmark file not found: " + path.string());
    }
    const std::string text = morphtrack::detail::read_text_file(path);
    return path.extension() == ".json" ? parse_landmarks_json(text) : parse_landmarks_csv(text);
}

inline void save_landmarks(const LandmarkSequence& seq, const std::filesystem::path& path)
{
    std::ostringstream out;
    out.precision(17);
    if (path.extension() == ".json")
    {
        nlohmann::json frames = nlohmann::json::array();
        for (const auto& f : seq.frames)
        {
            nlohmann::json pts = nlohmann::json::array();
            for (Eigen::Index j = 0; j < f.points.rows(); ++j)
            {
                pts.push_back({f.points(j, 0), f.points(j, 1), f.confidence(j)});
            }
            frames.push_back(std::move(pts));
        }
        out << nlohmann::json{{"frames", frames}}.dump();
    } else
    {
        out << "x,y,confidence\n";
        for (const auto& f : seq.frames)
        {
            for (Eigen::Index j = 0; j < f.points.rows(); ++j)
            {
                out << f.points(j, 0) << ',' << f.points(j, 1) << ',' << f.confidence(j) << '\n';
            }
        }
    }
    morphtrack::detail::write_text_file(path, out.str());
}

} /* namespace fitting */
} /* namespace morphtrack */

#endif /* MORPHTRACK_FITTING_LANDMARK_IO_HPP */
