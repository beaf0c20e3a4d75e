/*
 * morphtrack - 3D morphable model video tracking and reenactment conditioning.
 *
 * File: include/morphtrack/cli/pipeline.hpp
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

#ifndef MORPHTRACK_CLI_PIPELINE_HPP
#define MORPHTRACK_CLI_PIPELINE_HPP

#include "morphtrack/conditioning/gaze.hpp"
#include "morphtrack/conditioning/sequence.hpp"
#include "morphtrack/core/binary_io.hpp"
#include "morphtrack/core/errors.hpp"
#include "morphtrack/fitting/fit_video.hpp"
#include "morphtrack/fitting/landmark_io.hpp"
#include "morphtrack/fitting/trajectory_io.hpp"
#include "morphtrack/model/model_io.hpp"
#include "morphtrack/reenactment/gaze_adapt.hpp"
#include "morphtrack/reenactment/hybrid.hpp"
#include "morphtrack/reenactment/metrics.hpp"
#include "morphtrack/synthetic.hpp"

#include "json.hpp"

#include <charconv>
#include <cstdlib>
#include <filesystem>
#include <functional>
#include <string>
#include <vector>

namespace morphtrack {
namespace cli {

/// Process exit code of an error class: 1 configuration, 2 data, 3 numerical failure.
inline int exit_code(ErrorKind kind)
{
    switch (kind)
    {
    case ErrorKind::config:
        return 1;
    case ErrorKind::data:
        return 2;
    case ErrorKind::numerical:
        return 3;
    }
    return 2;
}

/**
 * Everything a pipeline run needs besides its command arguments. Sources are
 * applied in order: defaults, config file, environment, command-line flags.
 */
struct PipelineConfig
{
    std::filesystem::path model;
    std::filesystem::path landmarks;
    std::filesystem::path gaze;
    fitting::FitConfig fit;
    int width = 256;
    int height = 256;
    std::filesystem::path output_dir = ".";
    int num_threads = 1;
    bool recenter_translation = true;
    bool emit_heatmaps = false;
};

inline constexpr int min_image_size = 16;

namespace detail {

template <typename T>
T json_value(const nlohmann::json& j, const char* key)
{
    try
    {
        return j.at(key).get<T>();
    } catch (const nlohmann::json::exception&)
    {
        throw ConfigError(std::string("config key \"") + key + "\" has the wrong type");
    }
}

inline int parse_int(const std::string& text, const char* what)
{
    int value = 0;
    const auto res = std::from_chars(text.data(), text.data() + text.size(), value);
    if (res.ec != std::errc() || res.ptr != text.data() + text.size())
    {
        throw ConfigError(std::string(what) + " must be an integer, got \"" + text + "\"");
    }
    return value;
}

} /* namespace detail */

/// Applies the keys of a JSON config object. Unknown keys are rejected.
inline void apply_json(PipelineConfig& cfg, const nlohmann::json& j)
{
    if (!j.is_object())
    {
        throw ConfigError("config must be a JSON object");
    }
    for (const auto& [key, value] : j.items())
    {
        if (key == "model")
            cfg.model = detail::json_value<std::string>(j, "model");
        else if (key == "landmarks")
            cfg.landmarks = detail::json_value<std::string>(j, "landmarks");
        else if (key == "gaze")
            cfg.gaze = detail::json_value<std::string>(j, "gaze");
        else if (key == "output")
            cfg.output_dir = detail::json_value<std::string>(j, "output");
        else if (key == "width")
            cfg.width = detail::json_value<int>(j, "width");
        else if (key == "height")
            cfg.height = detail::json_value<int>(j, "height");
        else if (key == "threads")
            cfg.num_threads = detail::json_value<int>(j, "threads");
        else if (key == "recenterTranslation")
            cfg.recenter_translation = detail::json_value<bool>(j, "recenterTranslation");
        else if (key == "emitHeatmaps")
            cfg.emit_heatmaps = detail::json_value<bool>(j, "emitHeatmaps");
        else if (key == "fit")
        {
            if (!value.is_object())
            {
                throw ConfigError("config key \"fit\" must be an object");
            }
            for (const auto& [fit_key, fit_value] : value.items())
            {
                if (fit_key == "landmarkWeight")
                    cfg.fit.landmark_weight = detail::json_value<double>(value, "landmarkWeight");
                else if (fit_key == "priorWeight")
                    cfg.fit.prior_weight = detail::json_value<double>(value, "priorWeight");
                else if (fit_key == "smoothnessWeight")
                    cfg.fit.smoothness_weight = detail::json_value<double>(value, "smoothnessWeight");
                else if (fit_key == "boundSigmas")
                    cfg.fit.bound_sigmas = detail::json_value<double>(value, "boundSigmas");
                else if (fit_key == "maxIterations")
                    cfg.fit.max_iterations = detail::json_value<int>(value, "maxIterations");
                else if (fit_key == "gradTolerance")
                    cfg.fit.grad_tolerance = detail::json_value<double>(value, "gradTolerance");
                else if (fit_key == "poseAlternations")
                    cfg.fit.pose_alternations = detail::json_value<int>(value, "poseAlternations");
                else
                    throw ConfigError("unknown fit config key \"" + fit_key + "\"");
            }
        } else
        {
            throw ConfigError("unknown config key \"" + key + "\"");
        }
    }
}

inline void apply_config_file(PipelineConfig& cfg, const std::filesystem::path& path)
{
    if (!std::filesystem::exists(path))
    {
        throw ConfigError("config file not found: " + path.string());
    }
    nlohmann::json j;
    try
    {
        j = nlohmann::json::parse(morphtrack::detail::read_text_file(path));
    } catch (const nlohmann::json::parse_error& e)
    {
        throw ConfigError("config file " + path.string() + " is not valid JSON: " + e.what());
    }
    apply_json(cfg, j);
}

/// MORPHTRACK_OUTPUT_DIR and MORPHTRACK_THREADS, when set and non-empty.
inline void apply_environment(PipelineConfig& cfg,
                              const std::function<const char*(const char*)>& getenv = [](const char* name) {
                                  return std::getenv(name);
                              })
{
    if (const char* dir = getenv("MORPHTRACK_OUTPUT_DIR"); dir && *dir)
    {
        cfg.output_dir = dir;
    }
    if (const char* threads = getenv("MORPHTRACK_THREADS"); threads && *threads)
    {
        cfg.num_threads = detail::parse_int(threads, "MORPHTRACK_THREADS");
    }
}

inline void validate(const PipelineConfig& cfg)
{
    if (cfg.width < min_image_size || cfg.height < min_image_size)
    {
        throw ConfigError("image width and height must be at least " + std::to_string(min_image_size));
    }
    if (cfg.num_threads < 1)
    {
        throw ConfigError("thread count must be at least 1");
    }
    if (cfg.output_dir.empty())
    {
        throw ConfigError("output directory is empty");
    }
    fitting::validate(cfg.fit);
}

/// A required input: unset is a configuration error, missing on disk a data error.
inline const std::filesystem::path& require_input(const std::filesystem::path& path, const char* what)
{
    if (path.empty())
    {
        throw ConfigError(std::string(what) + " path is not set");
    }
    if (!std::filesystem::exists(path))
    {
        throw IoError(std::string(what) + " not found: " + path.string());
    }
    return path;
}

inline void ensure_directory(const std::filesystem::path& dir)
{
    std::error_code ec;
    std::filesystem::create_directories(dir, ec);
    if (ec)
    {
        throw IoError("cannot create directory " + dir.string() + ": " + ec.message());
    }
}

inline nlohmann::json energy_json(const fitting::EnergyBreakdown& e)
{
    return {{"total", e.total}, {"landmarkTerm", e.landmark}, {"priorTerm", e.prior}, {"smoothnessTerm", e.smoothness}};
}

inline constexpr const char* trajectory_filename = "trajectory.h2ht";
inline constexpr const char* fit_report_filename = "fit_report.json";
inline constexpr const char* hybrid_filename = "hybrid.h2ht";
inline constexpr const char* provenance_filename = "provenance.json";
inline constexpr const char* hybrid_gaze_filename = "hybrid_gaze.json";
inline constexpr const char* metrics_filename = "metrics.json";

/// Fits the landmark video and writes trajectory.h2ht and fit_report.json. Returns the report.
inline nlohmann::json cmd_fit(const PipelineConfig& cfg)
{
    validate(cfg);
    model::ValidationReport model_report;
    const auto model = model::load_model(require_input(cfg.model, "model file"), &model_report);
    const auto landmarks = fitting::load_landmarks(require_input(cfg.landmarks, "landmark file"));
    auto fit_cfg = cfg.fit;
    fit_cfg.num_threads = cfg.num_threads;
    const auto result = fitting::fit_video(model, landmarks, fit_cfg);

    ensure_directory(cfg.output_dir);
    const auto traj_path = cfg.output_dir / trajectory_filename;
    fitting::save_trajectory(result.trajectory, traj_path);
    nlohmann::json report = {
        {"trajectory", traj_path.string()},
        {"model", cfg.model.string()},
        {"landmarks", cfg.landmarks.string()},
        {"numFrames", landmarks.num_frames()},
        {"energy", energy_json(result.energy)},
        {"weights",
         {{"landmark", fit_cfg.resolved_landmark_weight(landmarks.num_frames())},
          {"prior", fit_cfg.prior_weight},
          {"smoothness", fit_cfg.smoothness_weight}}},
        {"solverObjective", result.solver_objective},
        {"iterations", result.iterations},
        {"shapeSolves", result.shape_solves},
        {"converged", result.converged},
        {"meanReprojectionError", result.mean_reprojection_error},
        {"warnings", model_report.warnings},
    };
    morphtrack::detail::write_text_file(cfg.output_dir / fit_report_filename, report.dump(2) + "\n");
    return report;
}

/**
 * Composes the hybrid trajectory and writes hybrid.h2ht and provenance.json.
 * With a model and the source's gaze file configured, the source gaze is
 * re-anchored onto the hybrid and written as hybrid_gaze.json.
 */
inline nlohmann::json cmd_reenact(const std::filesystem::path& source_path, const std::filesystem::path& target_path,
                                  const PipelineConfig& cfg)
{
    validate(cfg);
    const auto source = fitting::load_trajectory(require_input(source_path, "source trajectory"));
    const auto target = fitting::load_trajectory(require_input(target_path, "target trajectory"));
    reenactment::Provenance provenance{source_path.string(), target_path.string(), cfg.recenter_translation};
    const auto hybrid = reenactment::compose_hybrid(source, target, {cfg.recenter_translation}, provenance);

    ensure_directory(cfg.output_dir);
    const auto hybrid_path = cfg.output_dir / hybrid_filename;
    fitting::save_trajectory(hybrid.trajectory, hybrid_path);
    nlohmann::json record = hybrid.provenance.to_json();
    record["hybrid"] = hybrid_path.string();
    record["numFrames"] = hybrid.trajectory.num_frames();
    record["gaze"] = nullptr;
    if (!cfg.gaze.empty())
    {
        const auto model = model::load_model(require_input(cfg.model, "model file"));
        const auto gaze = conditioning::load_gaze(require_input(cfg.gaze, "gaze file"));
        const auto adapted = reenactment::adapt_gaze(gaze, source, hybrid.trajectory, model, cfg.num_threads);
        const auto gaze_path = cfg.output_dir / hybrid_gaze_filename;
        conditioning::save_gaze(adapted, gaze_path);
        record["gaze"] = gaze_path.string();
        record["sourceGaze"] = cfg.gaze.string();
    }
    morphtrack::detail::write_text_file(cfg.output_dir / provenance_filename, record.dump(2) + "\n");
    return record;
}

/// Renders the conditioning frames of a trajectory into the output directory.
inline conditioning::SequenceManifest cmd_render(const std::filesystem::path& trajectory_path, const PipelineConfig& cfg)
{
    validate(cfg);
    const auto model = model::load_model(require_input(cfg.model, "model file"));
    const auto traj = fitting::load_trajectory(require_input(trajectory_path, "trajectory"));
    std::vector<conditioning::GazeFrame> gaze;
    if (!cfg.gaze.empty())
    {
        gaze = conditioning::load_gaze(require_input(cfg.gaze, "gaze file"));
    }
    return conditioning::render_conditioning_sequence(model, traj, gaze, cfg.width, cfg.height, cfg.output_dir,
                                                      cfg.num_threads, trajectory_path.string());
}

/// Pixel error between two frame directories, written as metrics.json (plus heatmaps/ when enabled).
inline reenactment::SequenceError cmd_eval(const std::filesystem::path& dir_a, const std::filesystem::path& dir_b,
                                           const PipelineConfig& cfg)
{
    validate(cfg);
    reenactment::SequenceErrorOptions options;
    options.num_threads = cfg.num_threads;
    if (cfg.emit_heatmaps)
    {
        options.heatmap_dir = cfg.output_dir / "heatmaps";
    }
    const auto result =
        reenactment::sequence_error(require_input(dir_a, "frame directory"), require_input(dir_b, "frame directory"), options);
    ensure_directory(cfg.output_dir);
    auto j = result.to_json();
    j["dirA"] = dir_a.string();
    j["dirB"] = dir_b.string();
    morphtrack::detail::write_text_file(cfg.output_dir / metrics_filename, j.dump(2) + "\n");
    return result;
}

struct FixtureOptions
{
    int num_frames = 50;
    double noise_sigma = 0.0;
    std::uint64_t seed = 1;
};

/**
 * Writes a synthetic dataset: model.h2hm and two subjects, source/ and
 * target/, each with landmarks.csv, gaze.json and the ground truth
 * truth.h2ht, plus a config.json pointing at the source subject.
 */
inline nlohmann::json cmd_synth_fixture(const PipelineConfig& cfg, const FixtureOptions& options)
{
    validate(cfg);
    if (options.num_frames < 1)
    {
        throw ConfigError("fixture needs at least one frame");
    }
    if (!(options.noise_sigma >= 0.0))
    {
        throw ConfigError("noise sigma must be non-negative");
    }
    synthetic::ModelOptions model_options;
    model_options.seed = options.seed;
    const auto model = synthetic::make_model(model_options);
    ensure_directory(cfg.output_dir);
    const auto model_path = cfg.output_dir / "model.h2hm";
    model::save_model(model, model_path);

    nlohmann::json listing = {{"model", model_path.string()}, {"numFrames", options.num_frames}};
    for (int subject = 0; subject < 2; ++subject)
    {
        const char* name = subject == 0 ? "source" : "target";
        synthetic::VideoOptions video_options;
        video_options.num_frames = options.num_frames;
        video_options.width = cfg.width;
        video_options.height = cfg.height;
        video_options.noise_sigma = options.noise_sigma;
        video_options.seed = options.seed * 1000 + static_cast<std::uint64_t>(subject) + 1;
        const auto video = synthetic::make_video(model, video_options);
        const auto dir = cfg.output_dir / name;
        ensure_directory(dir);
        fitting::save_landmarks(video.landmarks, dir / "landmarks.csv");
        conditioning::save_gaze(video.gaze, dir / "gaze.json");
        fitting::save_trajectory(video.truth, dir / "truth.h2ht");
        listing[name] = {{"landmarks", (dir / "landmarks.csv").string()},
                         {"gaze", (dir / "gaze.json").string()},
                         {"truth", (dir / "truth.h2ht").string()}};
    }
    const nlohmann::json config = {{"model", model_path.string()},
                                   {"landmarks", listing["source"]["landmarks"]},
                                   {"gaze", listing["source"]["gaze"]},
                                   {"width", cfg.width},
                                   {"height", cfg.height}};
    morphtrack::detail::write_text_file(cfg.output_dir / "config.json", config.dump(2) + "\n");
    return listing;
}

} /* namespace cli */
} /* namespace morphtrack */

#endif /* MORPHTRACK_CLI_PIPELINE_HPP */
