/*
 * morphtrack - 3D morphable model video tracking and reenactment conditioning.
 *
 * File: tools/morphtrack.cpp
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

#include "morphtrack/cli/pipeline.hpp"

#include "CLI11.hpp"

#include <iostream>
#include <optional>
#include <string>

using namespace morphtrack;

namespace {

/// Flag values; unset ones leave the config file and environment alone.
struct Flags
{
    std::string config;
    std::optional<std::string> model, landmarks, gaze, output;
    std::optional<int> width, height, threads;
    std::optional<double> landmark_weight, prior_weight, smoothness_weight, bound_sigmas, grad_tolerance;
    std::optional<int> max_iterations, pose_alternations;
    bool no_recenter = false;
    bool heatmaps = false;
};

void add_common_options(CLI::App* sub, Flags& f)
{
    sub->add_option("-c,--config", f.config, "JSON config file");
    sub->add_option("-m,--model", f.model, "Morphable model file (.h2hm)");
    sub->add_option("-o,--output", f.output, "Output directory");
    sub->add_option("-j,--threads", f.threads, "Worker threads");
    sub->add_option("--width", f.width, "Image width in pixels");
    sub->add_option("--height", f.height, "Image height in pixels");
}

void add_fit_options(CLI::App* sub, Flags& f)
{
    sub->add_option("-l,--landmarks", f.landmarks, "Landmark file (.csv or .json)");
    sub->add_option("--landmark-weight", f.landmark_weight, "w_l, default 1/(68 T)");
    sub->add_option("--prior-weight", f.prior_weight, "w_pr");
    sub->add_option("--smoothness-weight", f.smoothness_weight, "w_sm");
    sub->add_option("--bound-sigmas", f.bound_sigmas, "Box half-width in sigmas");
    sub->add_option("--max-iterations", f.max_iterations, "Solver iteration cap");
    sub->add_option("--grad-tolerance", f.grad_tolerance, "Relative gradient tolerance");
    sub->add_option("--pose-alternations", f.pose_alternations, "Pose re-estimation rounds");
}

cli::PipelineConfig resolve(const Flags& f)
{
    cli::PipelineConfig cfg;
    if (!f.config.empty())
    {
        cli::apply_config_file(cfg, f.config);
    }
    cli::apply_environment(cfg);
    if (f.model) cfg.model = *f.model;
    if (f.landmarks) cfg.landmarks = *f.landmarks;
    if (f.gaze) cfg.gaze = *f.gaze;
    if (f.output) cfg.output_dir = *f.output;
    if (f.width) cfg.width = *f.width;
    if (f.height) cfg.height = *f.height;
    if (f.threads) cfg.num_threads = *f.threads;
    if (f.landmark_weight) cfg.fit.landmark_weight = *f.landmark_weight;
    if (f.prior_weight) cfg.fit.prior_weight = *f.prior_weight;
    if (f.smoothness_weight) cfg.fit.smoothness_weight = *f.smoothness_weight;
    if (f.bound_sigmas) cfg.fit.bound_sigmas = *f.bound_sigmas;
    if (f.grad_tolerance) cfg.fit.grad_tolerance = *f.grad_tolerance;
    if (f.max_iterations) cfg.fit.max_iterations = *f.max_iterations;
    if (f.pose_alternations) cfg.fit.pose_alternations = *f.pose_alternations;
    if (f.no_recenter) cfg.recenter_translation = false;
    if (f.heatmaps) cfg.emit_heatmaps = true;
    return cfg;
}

} // namespace

int main(int argc, char** argv)
{
    CLI::App app{"morphtrack: 3D morphable model video tracking and reenactment conditioning"};
    app.require_subcommand(1);
    Flags flags;

    auto* fit = app.add_subcommand("fit", "Fit the model to a landmark video");
    add_common_options(fit, flags);
    add_fit_options(fit, flags);

    std::string source, target;
    auto* reenact = app.add_subcommand("reenact", "Compose a source performance onto a target subject");
    add_common_options(reenact, flags);
    reenact->add_option("-s,--source", source, "Source trajectory (.h2ht)")->required();
    reenact->add_option("-t,--target", target, "Target trajectory (.h2ht)")->required();
    reenact->add_option("-g,--gaze", flags.gaze, "Source gaze file to re-anchor onto the hybrid");
    reenact->add_flag("--no-recenter", flags.no_recenter, "Keep source translations");

    std::string trajectory;
    auto* render = app.add_subcommand("render", "Render NMFC and gaze conditioning frames");
    add_common_options(render, flags);
    render->add_option("-T,--trajectory", trajectory, "Trajectory file (.h2ht)")->required();
    render->add_option("-g,--gaze", flags.gaze, "Gaze file aligned with the trajectory");

    std::string dir_a, dir_b;
    auto* eval = app.add_subcommand("eval", "Per-pixel error between two frame directories");
    add_common_options(eval, flags);
    eval->add_option("dirA", dir_a, "First frame directory")->required();
    eval->add_option("dirB", dir_b, "Second frame directory")->required();
    eval->add_flag("--heatmaps", flags.heatmaps, "Write per-frame error heatmaps");

    cli::FixtureOptions fixture;
    auto* synth = app.add_subcommand("synth-fixture", "Write a synthetic model and two landmark videos");
    add_common_options(synth, flags);
    synth->add_option("--frames", fixture.num_frames, "Frames per video");
    synth->add_option("--noise", fixture.noise_sigma, "Landmark noise sigma in pixels");
    synth->add_option("--seed", fixture.seed, "Random seed");

    try
    {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e)
    {
        return app.exit(e);
    } catch (const CLI::ParseError& e)
    {
        app.exit(e);
        return 1;
    }

    try
    {
        const auto cfg = resolve(flags);
        if (fit->parsed())
        {
            const auto report = cli::cmd_fit(cfg);
            std::cout << "fit: " << report["numFrames"] << " frames, mean reprojection error "
                      << report["meanReprojectionError"].get<double>() << " px, converged "
                      << report["converged"] << "\n";
        } else if (reenact->parsed())
        {
            const auto record = cli::cmd_reenact(source, target, cfg);
            std::cout << "reenact: wrote " << record["hybrid"].get<std::string>() << "\n";
        } else if (render->parsed())
        {
            const auto manifest = cli::cmd_render(trajectory, cfg);
            for (const auto& w : manifest.warnings)
            {
                std::cerr << "warning: " << w << "\n";
            }
            std::cout << "render: " << manifest.num_frames << " frames at " << manifest.width << "x" << manifest.height
                      << "\n";
        } else if (eval->parsed())
        {
            const auto result = cli::cmd_eval(dir_a, dir_b, cfg);
            std::cout << "eval: " << result.per_frame.size() << " frames, mean error " << result.overall << "\n";
        } else if (synth->parsed())
        {
            cli::cmd_synth_fixture(cfg, fixture);
            std::cout << "synth-fixture: wrote " << cfg.output_dir.string() << "\n";
        }
    } catch (const Error& e)
    {
        std::cerr << "error: " << e.what() << "\n";
        return cli::exit_code(e.kind());
    } catch (const std::exception& e)
    {
        std::cerr << "error: " << e.what() << "\n";
        return cli::exit_code(ErrorKind::data);
    }
    return 0;
}
