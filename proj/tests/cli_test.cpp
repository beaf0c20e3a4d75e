/*
 * morphtrack - 3D morphable model video tracking and reenactment conditioning.
 *
 * File: tests/cli_test.cpp
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
#include "test_support.hpp"

#include "morphtrack/cli/pipeline.hpp"

#include <gtest/gtest.h>

#include <sys/wait.h>

#include <map>

using namespace morphtrack;
namespace fs = std::filesystem;

namespace {

struct Run
{
    int code = -1;
    std::string out;
    std::string err;
};

/// Runs the command-line tool with the given arguments and extra environment.
Run run(const fs::path& work, const std::string& args, const std::string& env = "")
{
    const auto out = work / "stdout.txt";
    const auto err = work / "stderr.txt";
    const std::string cmd = "env -u MORPHTRACK_OUTPUT_DIR -u MORPHTRACK_THREADS " + env + " " + MORPHTRACK_CLI + " " +
                            args + " > '" + out.string() + "' 2> '" + err.string() + "'";
    const int status = std::system(cmd.c_str());
    Run r;
    r.code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
    r.out = morphtrack::detail::read_text_file(out);
    r.err = morphtrack::detail::read_text_file(err);
    return r;
}

std::string q(const fs::path& p)
{
    return "'" + p.string() + "'";
}

nlohmann::json read_json(const fs::path& p)
{
    return nlohmann::json::parse(morphtrack::detail::read_text_file(p));
}

std::map<std::string, std::vector<unsigned char>> snapshot(const fs::path& dir)
{
    std::map<std::string, std::vector<unsigned char>> files;
    for (const auto& e : fs::directory_iterator(dir))
    {
        if (e.is_regular_file() && e.path().extension() == ".png")
        {
            files[e.path().filename().string()] = morphtrack::detail::read_file_bytes(e.path());
        }
    }
    return files;
}

class Cli : public ::testing::Test
{
protected:
    static constexpr int frames = 12;

    static void SetUpTestSuite()
    {
        root_ = new test::TempDir();
        const auto r = run(root_->path(), "synth-fixture --frames " + std::to_string(frames) + " -o " + q(fixture()));
        ASSERT_EQ(r.code, 0) << r.err;
        const auto fit = run(root_->path(), "fit -m " + q(fixture() / "model.h2hm") + " -l " +
                                                q(fixture() / "source" / "landmarks.csv") + " -o " + q(source_fit()));
        ASSERT_EQ(fit.code, 0) << fit.err;
    }

    static void TearDownTestSuite()
    {
        delete root_;
        root_ = nullptr;
    }

    static fs::path fixture() { return root_->path() / "fixture"; }
    static fs::path source_fit() { return root_->path() / "source_fit"; }
    static fs::path model() { return fixture() / "model.h2hm"; }

    test::TempDir work_;

private:
    static test::TempDir* root_;
};

test::TempDir* Cli::root_ = nullptr;

} // namespace

TEST_F(Cli, SynthFixtureLayout)
{
    for (const char* f : {"model.h2hm", "config.json", "source/landmarks.csv", "source/gaze.json", "source/truth.h2ht",
                          "target/landmarks.csv", "target/gaze.json", "target/truth.h2ht"})
    {
        EXPECT_TRUE(fs::exists(fixture() / f)) << f;
    }
    const auto cfg = read_json(fixture() / "config.json");
    EXPECT_EQ(cfg["width"], 256);
    EXPECT_EQ(fitting::load_landmarks(fixture() / "source" / "landmarks.csv").num_frames(), frames);
}

TEST_F(Cli, FitRecoversFixture)
{
    const auto out = work_.path() / "fit";
    const auto r = run(work_.path(), "fit -c " + q(fixture() / "config.json") +
                                         " --prior-weight 1e-8 --smoothness-weight 0 -o " + q(out));
    ASSERT_EQ(r.code, 0) << r.err;
    const auto report = read_json(out / "fit_report.json");
    EXPECT_LE(report["meanReprojectionError"].get<double>(), 0.05);
    EXPECT_TRUE(report["converged"].get<bool>());
    EXPECT_EQ(report["numFrames"], frames);
    const auto e = report["energy"];
    EXPECT_NEAR(e["total"].get<double>(), report["solverObjective"].get<double>(),
                1e-9 * (1.0 + report["solverObjective"].get<double>()));

    const auto traj = fitting::load_trajectory(out / "trajectory.h2ht");
    const auto truth = fitting::load_trajectory(fixture() / "source" / "truth.h2ht");
    EXPECT_LE((traj.expression - truth.expression).norm() / truth.expression.norm(), 1e-3);
}

TEST_F(Cli, FitWithDefaultWeights)
{
    const auto report = read_json(source_fit() / "fit_report.json");
    EXPECT_LE(report["meanReprojectionError"].get<double>(), 1.0);
    EXPECT_EQ(report["weights"]["prior"], 1e-3);
    EXPECT_EQ(report["weights"]["smoothness"], 0.1);
    EXPECT_DOUBLE_EQ(report["weights"]["landmark"].get<double>(), 1.0 / (68.0 * frames));
}

TEST_F(Cli, MissingLandmarkFileIsDataError)
{
    const auto missing = work_.path() / "nowhere" / "lm.csv";
    const auto r = run(work_.path(), "fit -m " + q(model()) + " -l " + q(missing) + " -o " + q(work_.path()));
    EXPECT_EQ(r.code, 2);
    EXPECT_NE(r.err.find(missing.string()), std::string::npos) << r.err;
}

TEST_F(Cli, ZeroIterationBudgetIsNotAnError)
{
    const auto out = work_.path() / "fit";
    const auto r = run(work_.path(), "fit -c " + q(fixture() / "config.json") + " --max-iterations 0 -o " + q(out));
    ASSERT_EQ(r.code, 0) << r.err;
    EXPECT_FALSE(read_json(out / "fit_report.json")["converged"].get<bool>());
}

TEST_F(Cli, DegenerateLandmarksAreNumericalError)
{
    fitting::LandmarkSequence seq;
    seq.frames.resize(2);
    for (auto& f : seq.frames)
    {
        f.points = camera::Points2d::Constant(model::num_landmarks, 2, 50.0);
        f.confidence = Eigen::VectorXd::Ones(model::num_landmarks);
    }
    fitting::save_landmarks(seq, work_.path() / "flat.csv");
    const auto r = run(work_.path(), "fit -m " + q(model()) + " -l " + q(work_.path() / "flat.csv") + " -o " +
                                         q(work_.path() / "out"));
    EXPECT_EQ(r.code, 3) << r.err;
}

TEST_F(Cli, MalformedInputsAreDataErrors)
{
    morphtrack::detail::write_text_file(work_.path() / "bad.csv", "x,y\n1,2\nfoo,3\n");
    auto r = run(work_.path(), "fit -m " + q(model()) + " -l " + q(work_.path() / "bad.csv") + " -o " + q(work_.path()));
    EXPECT_EQ(r.code, 2);
    EXPECT_NE(r.err.find("line 3"), std::string::npos) << r.err;

    morphtrack::detail::write_text_file(work_.path() / "bad.h2hm", "H2HM");
    r = run(work_.path(), "fit -m " + q(work_.path() / "bad.h2hm") + " -l " +
                              q(fixture() / "source" / "landmarks.csv") + " -o " + q(work_.path()));
    EXPECT_EQ(r.code, 2);
}

TEST_F(Cli, ConfigurationErrors)
{
    const auto lm = q(fixture() / "source" / "landmarks.csv");
    EXPECT_EQ(run(work_.path(), "fit -m " + q(model()) + " -l " + lm + " --width 8").code, 1);
    EXPECT_EQ(run(work_.path(), "fit -m " + q(model()) + " -l " + lm + " -j 0").code, 1);
    EXPECT_EQ(run(work_.path(), "fit -m " + q(model()) + " -l " + lm + " --prior-weight -1").code, 1);
    EXPECT_EQ(run(work_.path(), "fit -l " + lm).code, 1);
    EXPECT_EQ(run(work_.path(), "fit -c " + q(work_.path() / "absent.json")).code, 1);
    EXPECT_EQ(run(work_.path(), "fit --no-such-flag").code, 1);
    EXPECT_EQ(run(work_.path(), "").code, 1);
    EXPECT_EQ(run(work_.path(), "render").code, 1);

    morphtrack::detail::write_text_file(work_.path() / "c.json", R"({"model": "m", "colour": 1})");
    const auto r = run(work_.path(), "fit -c " + q(work_.path() / "c.json"));
    EXPECT_EQ(r.code, 1);
    EXPECT_NE(r.err.find("colour"), std::string::npos);
    morphtrack::detail::write_text_file(work_.path() / "c.json", R"({"fit": {"priorWeight": "x"}})");
    EXPECT_EQ(run(work_.path(), "fit -c " + q(work_.path() / "c.json")).code, 1);
    morphtrack::detail::write_text_file(work_.path() / "c.json", "{");
    EXPECT_EQ(run(work_.path(), "fit -c " + q(work_.path() / "c.json")).code, 1);
}

TEST_F(Cli, EnvironmentAndFlagPrecedence)
{
    const auto env_dir = work_.path() / "from_env";
    const auto flag_dir = work_.path() / "from_flag";
    const std::string base = "fit -c " + q(fixture() / "config.json") + " --max-iterations 0";
    auto r = run(work_.path(), base, "MORPHTRACK_OUTPUT_DIR=" + q(env_dir) + " MORPHTRACK_THREADS=2");
    ASSERT_EQ(r.code, 0) << r.err;
    EXPECT_TRUE(fs::exists(env_dir / "trajectory.h2ht"));

    r = run(work_.path(), base + " -o " + q(flag_dir), "MORPHTRACK_OUTPUT_DIR=" + q(env_dir / "unused"));
    ASSERT_EQ(r.code, 0) << r.err;
    EXPECT_TRUE(fs::exists(flag_dir / "trajectory.h2ht"));
    EXPECT_FALSE(fs::exists(env_dir / "unused"));

    // The environment overrides the config file.
    morphtrack::detail::write_text_file(work_.path() / "c.json",
                                        nlohmann::json{{"model", model().string()},
                                                       {"landmarks", (fixture() / "source" / "landmarks.csv").string()},
                                                       {"output", (work_.path() / "from_file").string()},
                                                       {"fit", {{"maxIterations", 0}}}}
                                            .dump());
    r = run(work_.path(), "fit -c " + q(work_.path() / "c.json"), "MORPHTRACK_OUTPUT_DIR=" + q(env_dir / "won"));
    ASSERT_EQ(r.code, 0) << r.err;
    EXPECT_TRUE(fs::exists(env_dir / "won" / "trajectory.h2ht"));
    EXPECT_FALSE(fs::exists(work_.path() / "from_file"));

    EXPECT_EQ(run(work_.path(), base, "MORPHTRACK_THREADS=many").code, 1);
    EXPECT_EQ(run(work_.path(), base, "MORPHTRACK_THREADS=0").code, 1);
}

TEST_F(Cli, SelfReenactmentRoundTrip)
{
    const auto src = source_fit() / "trajectory.h2ht";
    const auto out = work_.path() / "hybrid";
    const auto r = run(work_.path(), "reenact -s " + q(src) + " -t " + q(src) + " -m " + q(model()) + " -g " +
                                         q(fixture() / "source" / "gaze.json") + " -o " + q(out));
    ASSERT_EQ(r.code, 0) << r.err;
    const auto original = fitting::load_trajectory(src);
    const auto hybrid = fitting::load_trajectory(out / "hybrid.h2ht");
    EXPECT_EQ(hybrid.expression, original.expression);
    EXPECT_EQ(hybrid.identity, original.identity);

    const auto prov = read_json(out / "provenance.json");
    EXPECT_EQ(prov["source"], src.string());
    EXPECT_EQ(prov["target"], src.string());
    EXPECT_EQ(prov["recenterTranslation"], true);
    EXPECT_EQ(prov["numFrames"], frames);

    const auto gaze = conditioning::load_gaze(out / "hybrid_gaze.json");
    const auto source_gaze = conditioning::load_gaze(fixture() / "source" / "gaze.json");
    ASSERT_EQ(gaze.size(), source_gaze.size());
}

TEST_F(Cli, ReenactNamesBothInputs)
{
    const auto tgt_fit = work_.path() / "target_fit";
    ASSERT_EQ(run(work_.path(), "fit -m " + q(model()) + " -l " + q(fixture() / "target" / "landmarks.csv") + " -o " +
                                    q(tgt_fit))
                  .code,
              0);
    const auto src = source_fit() / "trajectory.h2ht";
    const auto tgt = tgt_fit / "trajectory.h2ht";
    const auto out = work_.path() / "hybrid";
    const auto r = run(work_.path(), "reenact --no-recenter -s " + q(src) + " -t " + q(tgt) + " -o " + q(out));
    ASSERT_EQ(r.code, 0) << r.err;
    const auto prov = read_json(out / "provenance.json");
    EXPECT_EQ(prov["source"], src.string());
    EXPECT_EQ(prov["target"], tgt.string());
    EXPECT_EQ(prov["recenterTranslation"], false);
    EXPECT_TRUE(prov["gaze"].is_null());
    const auto hybrid = fitting::load_trajectory(out / "hybrid.h2ht");
    EXPECT_EQ(hybrid.identity, fitting::load_trajectory(tgt).identity);
    EXPECT_EQ(hybrid.expression, fitting::load_trajectory(src).expression);
}

TEST_F(Cli, ReenactDimensionMismatch)
{
    auto other = fitting::load_trajectory(source_fit() / "trajectory.h2ht");
    other.expression.conservativeResize(Eigen::NoChange, other.expression.cols() - 2);
    fitting::save_trajectory(other, work_.path() / "small.h2ht");
    const auto r = run(work_.path(), "reenact -s " + q(source_fit() / "trajectory.h2ht") + " -t " +
                                         q(work_.path() / "small.h2ht") + " -o " + q(work_.path()));
    EXPECT_EQ(r.code, 2);
    EXPECT_EQ(run(work_.path(), "reenact -s " + q(work_.path() / "none.h2ht") + " -t " +
                                    q(work_.path() / "small.h2ht") + " -o " + q(work_.path()))
                  .code,
              2);
}

TEST_F(Cli, RenderIsDeterministic)
{
    const auto traj = q(source_fit() / "trajectory.h2ht");
    const auto gaze = q(fixture() / "source" / "gaze.json");
    const auto a = work_.path() / "a", b = work_.path() / "b", c = work_.path() / "c";
    ASSERT_EQ(run(work_.path(), "render -m " + q(model()) + " -T " + traj + " -g " + gaze + " -o " + q(a)).code, 0);
    ASSERT_EQ(run(work_.path(), "render -m " + q(model()) + " -T " + traj + " -g " + gaze + " -o " + q(b)).code, 0);
    ASSERT_EQ(run(work_.path(), "render -j 4 -m " + q(model()) + " -T " + traj + " -g " + gaze + " -o " + q(c)).code,
              0);
    const auto files = snapshot(a);
    EXPECT_EQ(files.size(), 2u * frames);
    EXPECT_EQ(files, snapshot(b));
    EXPECT_EQ(files, snapshot(c));
    const auto nmfc = conditioning::read_png_rgb(a / "nmfc_000000.png");
    EXPECT_EQ(nmfc.width, 256);
    EXPECT_EQ(nmfc.height, 256);
    const auto manifest = read_json(a / "manifest.json");
    EXPECT_EQ(manifest["numFrames"], frames);
    EXPECT_EQ(manifest["frames"].size(), static_cast<std::size_t>(frames));
}

TEST_F(Cli, RenderWithoutGazeAndCustomSize)
{
    const auto out = work_.path() / "r";
    const auto r = run(work_.path(), "render --width 96 --height 64 -m " + q(model()) + " -T " +
                                         q(source_fit() / "trajectory.h2ht") + " -o " + q(out));
    ASSERT_EQ(r.code, 0) << r.err;
    EXPECT_EQ(snapshot(out).size(), static_cast<std::size_t>(frames));
    const auto img = conditioning::read_png_rgb(out / "nmfc_000003.png");
    EXPECT_EQ(img.width, 96);
    EXPECT_EQ(img.height, 64);

    // A gaze file for a different frame count does not fit the trajectory.
    std::vector<conditioning::GazeFrame> short_gaze(3);
    conditioning::save_gaze(short_gaze, work_.path() / "short.json");
    EXPECT_EQ(run(work_.path(), "render -m " + q(model()) + " -T " + q(source_fit() / "trajectory.h2ht") + " -g " +
                                    q(work_.path() / "short.json") + " -o " + q(out))
                  .code,
              2);
}

TEST_F(Cli, Eval)
{
    const auto traj = q(source_fit() / "trajectory.h2ht");
    const auto truth = q(fixture() / "source" / "truth.h2ht");
    const auto a = work_.path() / "a", b = work_.path() / "b";
    ASSERT_EQ(run(work_.path(), "render -m " + q(model()) + " -T " + traj + " -o " + q(a)).code, 0);
    ASSERT_EQ(run(work_.path(), "render -m " + q(model()) + " -T " + truth + " -o " + q(b)).code, 0);

    auto r = run(work_.path(), "eval " + q(a) + " " + q(a) + " -o " + q(work_.path() / "same"));
    ASSERT_EQ(r.code, 0) << r.err;
    EXPECT_EQ(read_json(work_.path() / "same" / "metrics.json")["overall"].get<double>(), 0.0);

    r = run(work_.path(), "eval --heatmaps " + q(a) + " " + q(b) + " -o " + q(work_.path() / "diff"));
    ASSERT_EQ(r.code, 0) << r.err;
    const auto metrics = read_json(work_.path() / "diff" / "metrics.json");
    const auto expected = reenactment::sequence_error(a, b);
    EXPECT_EQ(metrics["overall"].get<double>(), expected.overall);
    EXPECT_EQ(metrics["perFrame"].get<std::vector<double>>(), expected.per_frame);
    EXPECT_EQ(snapshot(work_.path() / "diff" / "heatmaps").size(), static_cast<std::size_t>(frames));

    fs::remove(b / "nmfc_000004.png");
    EXPECT_EQ(run(work_.path(), "eval " + q(a) + " " + q(b) + " -o " + q(work_.path())).code, 2);
    EXPECT_EQ(run(work_.path(), "eval " + q(a) + " " + q(work_.path() / "missing") + " -o " + q(work_.path())).code,
              2);
}

TEST(CliConfig, ExitCodes)
{
    EXPECT_EQ(cli::exit_code(ErrorKind::config), 1);
    EXPECT_EQ(cli::exit_code(ErrorKind::data), 2);
    EXPECT_EQ(cli::exit_code(ErrorKind::numerical), 3);
}

TEST(CliConfig, JsonKeys)
{
    cli::PipelineConfig cfg;
    cli::apply_json(cfg, nlohmann::json::parse(R"({
        "model": "m.h2hm", "landmarks": "l.csv", "gaze": "g.json", "output": "out",
        "width": 128, "height": 96, "threads": 3, "recenterTranslation": false, "emitHeatmaps": true,
        "fit": {"landmarkWeight": 2.0, "priorWeight": 0.5, "smoothnessWeight": 4.0, "boundSigmas": 2.0,
                "maxIterations": 7, "gradTolerance": 1e-6, "poseAlternations": 1}})"));
    EXPECT_EQ(cfg.model, "m.h2hm");
    EXPECT_EQ(cfg.landmarks, "l.csv");
    EXPECT_EQ(cfg.gaze, "g.json");
    EXPECT_EQ(cfg.output_dir, "out");
    EXPECT_EQ(cfg.width, 128);
    EXPECT_EQ(cfg.height, 96);
    EXPECT_EQ(cfg.num_threads, 3);
    EXPECT_FALSE(cfg.recenter_translation);
    EXPECT_TRUE(cfg.emit_heatmaps);
    EXPECT_EQ(cfg.fit.landmark_weight, 2.0);
    EXPECT_EQ(cfg.fit.prior_weight, 0.5);
    EXPECT_EQ(cfg.fit.smoothness_weight, 4.0);
    EXPECT_EQ(cfg.fit.bound_sigmas, 2.0);
    EXPECT_EQ(cfg.fit.max_iterations, 7);
    EXPECT_EQ(cfg.fit.grad_tolerance, 1e-6);
    EXPECT_EQ(cfg.fit.pose_alternations, 1);
    EXPECT_NO_THROW(cli::validate(cfg));

    EXPECT_THROW(cli::apply_json(cfg, nlohmann::json::parse(R"({"fit": {"bogus": 1}})")), ConfigError);
    EXPECT_THROW(cli::apply_json(cfg, nlohmann::json::parse(R"([1])")), ConfigError);
}

TEST(CliConfig, DefaultsAndEnvironment)
{
    cli::PipelineConfig cfg;
    EXPECT_EQ(cfg.width, 256);
    EXPECT_EQ(cfg.height, 256);
    EXPECT_TRUE(cfg.recenter_translation);
    std::map<std::string, std::string> env{{"MORPHTRACK_OUTPUT_DIR", "/tmp/x"}, {"MORPHTRACK_THREADS", "6"}};
    cli::apply_environment(cfg, [&](const char* name) -> const char* {
        const auto it = env.find(name);
        return it == env.end() ? nullptr : it->second.c_str();
    });
    EXPECT_EQ(cfg.output_dir, "/tmp/x");
    EXPECT_EQ(cfg.num_threads, 6);
    env["MORPHTRACK_THREADS"] = "";
    env["MORPHTRACK_OUTPUT_DIR"] = "";
    cli::apply_environment(cfg, [&](const char* name) -> const char* { return env[name].c_str(); });
    EXPECT_EQ(cfg.num_threads, 6);
    cfg.height = 15;
    EXPECT_THROW(cli::validate(cfg), ConfigError);
}
