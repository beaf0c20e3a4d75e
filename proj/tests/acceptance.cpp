/*
 * morphtrack - 3D morphable model video tracking and reenactment conditioning.
 *
 * File: tests/acceptance.cpp
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
/*
 * Acceptance checks. Prints one PASS or FAIL line per criterion and exits
 * non-zero if any criterion fails.
 */

#include "oracles.hpp"
#include "test_support.hpp"

#include "morphtrack/cli/pipeline.hpp"
#include "morphtrack/conditioning/sequence.hpp"
#include "morphtrack/fitting/fit_video.hpp"
#include "morphtrack/reenactment/hybrid.hpp"
#include "morphtrack/reenactment/metrics.hpp"
#include "morphtrack/synthetic.hpp"

#include <sys/wait.h>

#include <chrono>
#include <cstdio>
#include <functional>
#include <iostream>
#include <set>
#include <sstream>

using namespace morphtrack;
namespace fs = std::filesystem;

namespace {

struct Outcome
{
    bool pass = false;
    std::string detail;
};

class Report
{
public:
    std::ostringstream detail;
    bool ok = true;

    void check(bool condition, const std::string& what)
    {
        if (!condition)
        {
            ok = false;
            detail << "[failed: " << what << "] ";
        }
    }

    Outcome outcome() const { return {ok, detail.str()}; }
};

double seconds_since(std::chrono::steady_clock::time_point start)
{
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
}

double smoothness(const Eigen::MatrixXd& expression)
{
    double e = 0.0;
    for (Eigen::Index t = 1; t + 1 < expression.rows(); ++t)
    {
        e += (expression.row(t + 1) - 2.0 * expression.row(t) + expression.row(t - 1)).squaredNorm();
    }
    return e;
}

const model::MorphableModel& face_model()
{
    static const auto m = synthetic::make_model();
    return m;
}

synthetic::Video video(int frames, double noise, std::uint64_t seed = 11)
{
    synthetic::VideoOptions opts;
    opts.num_frames = frames;
    opts.noise_sigma = noise;
    opts.seed = seed;
    return synthetic::make_video(face_model(), opts);
}

Outcome synthetic_recovery()
{
    Report r;
    const auto& m = face_model();
    const auto v = video(50, 0.0);
    fitting::FitConfig cfg;
    cfg.prior_weight = 1e-8;
    cfg.smoothness_weight = 0.0;
    cfg.num_threads = 1;
    const auto start = std::chrono::steady_clock::now();
    const auto fit = fitting::fit_video(m, v.landmarks, cfg);
    const double elapsed = seconds_since(start);
    const Eigen::VectorXd truth = synthetic::stacked_coefficients(v.truth);
    const double rel = (synthetic::stacked_coefficients(fit.trajectory) - truth).norm() / truth.norm();
    r.detail << "N=" << m.num_vertices() << " n_i=" << m.num_identity() << " n_e=" << m.num_expression()
             << " T=50 reprojection=" << fit.mean_reprojection_error << "px (<=0.05) parameter error=" << rel
             << " (<=0.01) time=" << elapsed << "s (<=30) ";
    r.check(m.num_vertices() == 500 && m.num_identity() == 20 && m.num_expression() == 10, "model size");
    r.check(fit.mean_reprojection_error <= 0.05, "reprojection");
    r.check(rel <= 0.01, "parameter recovery");
    r.check(elapsed <= 30.0, "runtime");
    return r.outcome();
}

Outcome noise_robustness()
{
    Report r;
    const auto& m = face_model();
    const auto v = video(50, 1.0);
    const fitting::FitConfig cfg;
    const auto fit = fitting::fit_video(m, v.landmarks, cfg);

    // Baseline: every frame refitted on its own, so nothing couples neighbours.
    Eigen::MatrixXd per_frame(50, m.num_expression());
    for (int t = 0; t < 50; ++t)
    {
        fitting::LandmarkSequence one;
        one.frames = {v.landmarks.frames[static_cast<std::size_t>(t)]};
        per_frame.row(t) = fitting::fit_video(m, one, cfg).trajectory.expression.row(0);
    }
    const double e_fit = smoothness(fit.trajectory.expression);
    const double e_base = smoothness(per_frame);
    r.detail << "sigma=1px reprojection=" << fit.mean_reprojection_error << "px (<=2.5) E_sm fitted=" << e_fit
             << " per-frame baseline=" << e_base << " ";
    r.check(fit.mean_reprojection_error <= 2.5, "reprojection");
    r.check(e_fit < e_base, "smoothness below baseline");
    return r.outcome();
}

Outcome jacobian_correctness()
{
    Report r;
    std::mt19937_64 rng(3);
    const auto& m = face_model();
    const auto v = video(5, 1.0, 3);
    fitting::FitConfig cfg; // default weights, all three terms active
    const auto sys = fitting::assemble_linear_system(m, v.landmarks, v.truth.cameras, cfg);
    const Eigen::MatrixXd j = sys.to_dense();
    double worst = 0.0;
    for (int point = 0; point < 20; ++point)
    {
        Eigen::VectorXd theta(sys.cols());
        for (Eigen::Index k = 0; k < theta.size(); ++k)
        {
            theta(k) = std::normal_distribution<double>(0.0, 1.0)(rng) * sys.upper_bounds(k) / 3.0;
        }
        worst = std::max(worst, oracle::jacobian_fd_error(m, v.landmarks, v.truth.cameras,
                                                          cfg.resolved_landmark_weight(5), cfg.prior_weight,
                                                          cfg.smoothness_weight, j, theta));
    }
    r.detail << "20 points, " << j.rows() << "x" << j.cols() << " Jacobian, max relative error=" << worst
             << " (<=1e-6) ";
    r.check(worst <= 1e-6, "finite differences");
    return r.outcome();
}

Outcome solver_contract()
{
    Report r;
    std::mt19937_64 rng(4);
    double worst = 0.0;
    int infeasible = 0, non_monotone = 0, unconverged = 0, active = 0;
    for (int trial = 0; trial < 100; ++trial)
    {
        const int n = std::uniform_int_distribution<int>(1, 30)(rng);
        const int bounded = std::min(n, std::uniform_int_distribution<int>(1, 9)(rng));
        const auto p = oracle::random_box_problem(rng, n, bounded);
        const auto expected = oracle::enumerate_active_sets(p);
        const auto got = fitting::solve_box_lsq(p, Eigen::VectorXd::Zero(n));
        unconverged += got.converged ? 0 : 1;
        worst = std::max(worst, (got.solution - expected.solution).lpNorm<Eigen::Infinity>() /
                                    (1.0 + expected.solution.lpNorm<Eigen::Infinity>()));
        for (Eigen::Index i = 0; i < n; ++i)
        {
            infeasible += (got.solution(i) < p.lower_bounds(i) || got.solution(i) > p.upper_bounds(i)) ? 1 : 0;
            active += (got.solution(i) == p.lower_bounds(i) || got.solution(i) == p.upper_bounds(i)) ? 1 : 0;
        }
        for (std::size_t k = 1; k < got.objective_history.size(); ++k)
        {
            non_monotone += got.objective_history[k] > got.objective_history[k - 1] * (1.0 + 1e-12) ? 1 : 0;
        }
    }
    r.detail << "100 problems, max deviation from enumeration oracle=" << worst << " (<=1e-8) active bounds="
             << active << " infeasible=" << infeasible << " objective increases=" << non_monotone << " ";
    r.check(worst <= 1e-8, "oracle match");
    r.check(infeasible == 0, "bounds");
    r.check(non_monotone == 0, "monotone objective");
    r.check(unconverged == 0, "convergence");
    return r.outcome();
}

Outcome pose_initialisation()
{
    Report r;
    std::mt19937_64 rng(5);
    double scale = 0.0, translation = 0.0, rotation = 0.0;
    for (int trial = 0; trial < 1000; ++trial)
    {
        const auto truth = test::random_camera(rng);
        const camera::Points3d pts = test::random_matrix(rng, model::num_landmarks, 3, 40.0);
        const auto est = camera::estimate_pose(camera::project(pts, truth).points, pts);
        scale = std::max(scale, std::abs(est.scale - truth.scale));
        translation = std::max(translation, (est.translation - truth.translation).lpNorm<Eigen::Infinity>());
        rotation = std::max(rotation, camera::rotation_distance(est.rotation, truth.rotation));
    }
    r.detail << "1000 poses, worst scale error=" << scale << " translation error=" << translation
             << " rotation error=" << rotation << "rad (all <=1e-8) ";
    r.check(scale <= 1e-8 && translation <= 1e-8 && rotation <= 1e-8, "pose recovery");
    return r.outcome();
}

Outcome rasterizer_oracle()
{
    Report r;
    std::mt19937_64 rng(6);
    int mismatched = 0;
    for (int trial = 0; trial < 200; ++trial)
    {
        const auto mesh = oracle::random_soup(rng, 50, 64);
        const auto mask = conditioning::rasterize_projected(mesh.points, mesh.depth, mesh.triangles, 64, 64);
        mismatched += mask.triangle_id == oracle::brute_force_visibility(mesh.points, mesh.depth, mesh.triangles, 64, 64)
                          ? 0
                          : 1;
    }
    int double_claimed = 0, dropped = 0;
    for (const auto& [origin, step] : {std::pair{2.0, 4.0}, std::pair{2.5, 3.0}, std::pair{1.5, 2.5}})
    {
        const auto grid = oracle::shared_edge_grid(8, origin, step);
        const auto counts = oracle::claim_counts(grid, 40, 40);
        const double hi = origin + 8 * step;
        for (int y = 0; y < 40; ++y)
        {
            for (int x = 0; x < 40; ++x)
            {
                const int c = counts[static_cast<std::size_t>(y) * 40 + x];
                const bool inside = x + 0.5 >= origin && x + 0.5 < hi && y + 0.5 >= origin && y + 0.5 < hi;
                double_claimed += c > 1 ? 1 : 0;
                dropped += inside && c == 0 ? 1 : 0;
            }
        }
    }
    r.detail << "200 meshes, mismatching grids=" << mismatched << " double-claimed pixels=" << double_claimed
             << " dropped pixels=" << dropped << " ";
    r.check(mismatched == 0, "brute-force oracle");
    r.check(double_claimed == 0 && dropped == 0, "shared edges");
    return r.outcome();
}

Outcome nmfc_determinism()
{
    Report r;
    const auto& m = face_model();
    const auto v = video(10, 0.0, 7);
    test::TempDir one, eight, again;
    conditioning::render_conditioning_sequence(m, v.truth, v.gaze, 256, 256, one.path(), 1);
    conditioning::render_conditioning_sequence(m, v.truth, v.gaze, 256, 256, eight.path(), 8);
    conditioning::render_conditioning_sequence(m, v.truth, v.gaze, 256, 256, again.path(), 1);

    const auto face = model::normalized_mean_face(m);
    std::set<conditioning::Rgb> palette;
    for (Eigen::Index k = 0; k < face.triangle_colors.rows(); ++k)
    {
        palette.insert(conditioning::quantize_color(face.triangle_colors.row(k)));
    }
    int differing = 0, foreign = 0;
    long foreground = 0;
    for (int t = 0; t < 10; ++t)
    {
        for (const char* prefix : {"nmfc", "gaze"})
        {
            const auto name = conditioning::frame_filename(prefix, t);
            const auto bytes = morphtrack::detail::read_file_bytes(one.path() / name);
            differing += bytes == morphtrack::detail::read_file_bytes(eight.path() / name) ? 0 : 1;
            differing += bytes == morphtrack::detail::read_file_bytes(again.path() / name) ? 0 : 1;
        }
        const auto img = conditioning::read_png_rgb(one.path() / conditioning::frame_filename("nmfc", t));
        for (int y = 0; y < img.height; ++y)
        {
            for (int x = 0; x < img.width; ++x)
            {
                const auto* p = img.pixel(x, y);
                const conditioning::Rgb c{p[0], p[1], p[2]};
                if (c == conditioning::Rgb{0, 0, 0})
                {
                    continue;
                }
                ++foreground;
                foreign += palette.count(c) ? 0 : 1;
            }
        }
    }
    r.detail << "10 frames, files differing between runs=" << differing << " foreground pixels=" << foreground
             << " outside centroid palette=" << foreign << " ";
    r.check(differing == 0, "determinism");
    r.check(foreign == 0 && foreground > 0, "value set");
    return r.outcome();
}

Outcome hybrid_composition()
{
    Report r;
    const auto src = video(30, 0.0, 8).truth;
    const auto tgt = video(40, 0.0, 9).truth;
    const auto h = reenactment::compose_hybrid(src, tgt).trajectory;
    const auto self = reenactment::compose_hybrid(src, src).trajectory;
    bool rotations = true;
    for (std::size_t t = 0; t < src.cameras.size(); ++t)
    {
        rotations = rotations && self.cameras[t].rotation.coeffs() == src.cameras[t].rotation.coeffs() &&
                    h.cameras[t].rotation.coeffs() == src.cameras[t].rotation.coeffs();
    }
    const bool identity = h.identity == tgt.identity;
    const bool expression = h.expression == src.expression && self.expression == src.expression;
    r.detail << "identity preserved=" << identity << " expression preserved=" << expression
             << " rotations preserved=" << rotations << " ";
    r.check(identity && expression, "bitwise coefficients");
    r.check(rotations, "rotations");
    return r.outcome();
}

Outcome metric_correctness()
{
    Report r;
    conditioning::RgbImage black(64, 48), white(64, 48);
    std::fill(white.data.begin(), white.data.end(), 255);
    const double bw = reenactment::per_pixel_error(black, white).mean;
    const double expected = std::sqrt(3.0 * 255.0 * 255.0);
    std::mt19937_64 rng(10);
    std::uniform_int_distribution<int> byte(0, 255);
    int asymmetric = 0, zero_mismatch = 0;
    for (int trial = 0; trial < 100; ++trial)
    {
        conditioning::RgbImage a(32, 24), b(32, 24);
        for (std::size_t i = 0; i < a.data.size(); ++i)
        {
            a.data[i] = static_cast<std::uint8_t>(byte(rng));
            b.data[i] = trial % 4 == 0 ? a.data[i] : static_cast<std::uint8_t>(byte(rng));
        }
        if (trial % 8 == 4)
        {
            b = a;
            b.data[static_cast<std::size_t>(trial)] ^= 0x80;
        }
        const auto ab = reenactment::per_pixel_error(a, b);
        const auto ba = reenactment::per_pixel_error(b, a);
        asymmetric += (ab.mean == ba.mean && ab.heatmap == ba.heatmap) ? 0 : 1;
        zero_mismatch += ((ab.mean == 0.0) == (a == b)) ? 0 : 1;
        zero_mismatch += reenactment::per_pixel_error(a, a).mean == 0.0 ? 0 : 1;
    }
    r.detail << "black vs white=" << bw << " (expected " << expected << " +-1e-9) asymmetric pairs=" << asymmetric
             << " zero-iff-equal violations=" << zero_mismatch << " ";
    r.check(std::abs(bw - expected) <= 1e-9, "black vs white");
    r.check(asymmetric == 0 && zero_mismatch == 0, "metric properties");
    return r.outcome();
}

int run_cli(const std::string& args, const fs::path& log)
{
    const std::string cmd = std::string(MORPHTRACK_CLI) + " " + args + " >> '" + log.string() + "' 2>&1";
    const int status = std::system(cmd.c_str());
    return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

Outcome end_to_end()
{
    Report r;
    test::TempDir work;
    const auto d = work.path();
    const auto log = d / "log.txt";
    auto q = [](const fs::path& p) { return "'" + p.string() + "'"; };
    const auto fixture = d / "fixture";
    const auto model = q(fixture / "model.h2hm");

    const auto start = std::chrono::steady_clock::now();
    std::vector<std::pair<std::string, std::string>> steps = {
        {"synth-fixture", "synth-fixture --frames 50 -o " + q(fixture)},
        {"fit source", "fit -c " + q(fixture / "config.json") + " -o " + q(d / "source_fit")},
        {"fit target",
         "fit -m " + model + " -l " + q(fixture / "target" / "landmarks.csv") + " -o " + q(d / "target_fit")},
        {"reenact", "reenact -m " + model + " -s " + q(d / "source_fit" / "trajectory.h2ht") + " -t " +
                        q(d / "target_fit" / "trajectory.h2ht") + " -g " + q(fixture / "source" / "gaze.json") +
                        " -o " + q(d / "hybrid")},
        {"render hybrid", "render -m " + model + " -T " + q(d / "hybrid" / "hybrid.h2ht") + " -g " +
                              q(d / "hybrid" / "hybrid_gaze.json") + " -o " + q(d / "frames_hybrid")},
        {"render source", "render -m " + model + " -T " + q(d / "source_fit" / "trajectory.h2ht") + " -g " +
                              q(fixture / "source" / "gaze.json") + " -o " + q(d / "frames_source")},
        {"eval", "eval --heatmaps " + q(d / "frames_source") + " " + q(d / "frames_hybrid") + " -o " + q(d / "eval")},
    };
    bool all_zero = true;
    for (const auto& [name, args] : steps)
    {
        const int code = run_cli(args, log);
        if (code != 0)
        {
            all_zero = false;
            r.detail << name << " exited " << code << " ";
            break;
        }
    }
    const double elapsed = seconds_since(start);
    int good_frames = 0;
    bool manifest_ok = false;
    double overall = -1.0;
    if (all_zero)
    {
        const auto manifest =
            conditioning::parse_manifest(morphtrack::detail::read_text_file(d / "frames_hybrid" / "manifest.json"));
        manifest_ok = manifest.num_frames == 50 && manifest.width == 256 && manifest.height == 256 &&
                      manifest.frames.size() == 50;
        for (const auto& pair : manifest.frames)
        {
            const auto nmfc = conditioning::read_png_rgb(d / "frames_hybrid" / pair.nmfc);
            const auto gaze = conditioning::read_png_rgb(d / "frames_hybrid" / pair.gaze);
            good_frames += (nmfc.width == 256 && nmfc.height == 256 && gaze.width == 256 && gaze.height == 256) ? 1 : 0;
        }
        overall = nlohmann::json::parse(morphtrack::detail::read_text_file(d / "eval" / "metrics.json"))["overall"];
    }
    r.detail << "exit codes all 0=" << all_zero << " paired 256x256 frames=" << good_frames << "/50 manifest valid="
             << manifest_ok << " eval overall=" << overall << " time=" << elapsed << "s (<=120) ";
    r.check(all_zero, "exit codes");
    r.check(good_frames == 50 && manifest_ok, "frames and manifest");
    r.check(elapsed <= 120.0, "runtime");
    return r.outcome();
}

} // namespace

int main()
{
    const std::vector<std::pair<const char*, std::function<Outcome()>>> criteria = {
        {"synthetic recovery", synthetic_recovery},
        {"noise robustness", noise_robustness},
        {"jacobian correctness", jacobian_correctness},
        {"solver contract", solver_contract},
        {"pose initialisation", pose_initialisation},
        {"rasterizer oracle", rasterizer_oracle},
        {"nmfc determinism and range", nmfc_determinism},
        {"hybrid composition", hybrid_composition},
        {"metric correctness", metric_correctness},
        {"end to end", end_to_end},
    };
    int failures = 0;
    for (std::size_t i = 0; i < criteria.size(); ++i)
    {
        Outcome o;
        try
        {
            o = criteria[i].second();
        } catch (const std::exception& e)
        {
            o = {false, std::string("exception: ") + e.what()};
        }
        failures += o.pass ? 0 : 1;
        std::cout << (o.pass ? "PASS" : "FAIL") << " criterion " << (i + 1) << " (" << criteria[i].first
                  << "): " << o.detail << std::endl;
    }
    std::cout << (criteria.size() - static_cast<std::size_t>(failures)) << "/" << criteria.size()
              << " criteria passed" << std::endl;
    return failures == 0 ? 0 : 1;
}
