// Copyright 2026 The rtbeam Authors
// License: Apache 2.0 (http://www.apache.org/licenses/LICENSE-2.0)

#include <filesystem>
#include <fstream>
#include <sstream>

#include <gtest/gtest.h>

#include "rtbeam/audio_io.hpp"
#include "rtbeam/cli.hpp"
#include "rtbeam/mask_net.hpp"

namespace rtbeam::cli {
namespace {

namespace fs = std::filesystem;

struct Result {
  int code;
  std::string out, err;
};

Result Call(std::vector<std::string> args) {
  std::ostringstream out, err;
  const int code = Run(args, out, err);
  return {code, out.str(), err.str()};
}

class CliTest : public ::testing::Test {
 protected:
  void SetUp() override {
    dir_ = fs::temp_directory_path() / ("rtbeam_cli_" + std::to_string(::getpid()));
    fs::create_directories(dir_);
    std::ofstream(dir_ / "scene.txt") << "n_mics = 3\nrt60 = 0.3\nduration = 0.5\n"
                                         "source = 5.5, 3.0, synthetic:1\n"
                                         "source = 4.0, 4.5, synthetic:2\n";
  }
  void TearDown() override { fs::remove_all(dir_); }
  std::string P(const std::string& name) const { return (dir_ / name).string(); }
  fs::path dir_;
};

TEST(Cli, NoArgumentsIsUsageError) {
  const auto r = Call({});
  EXPECT_EQ(r.code, kExitUsage);
  EXPECT_NE(r.err.find("simulate"), std::string::npos);
}

TEST(Cli, UnknownSubcommandIsUsageError) {
  EXPECT_EQ(Call({"bogus"}).code, kExitUsage);
}

TEST(Cli, HelpShowsUnits) {
  const auto r = Call({"enhance", "--help"});
  EXPECT_EQ(r.code, kExitOk);
  EXPECT_NE(r.out.find("(deg)"), std::string::npos);
}

TEST(Cli, BadChoiceIsUsageError) {
  EXPECT_EQ(Call({"enhance", "--in", "x", "--doa", "0", "--params", "p", "--out", "o",
                  "--beamformer", "gsc"}).code,
            kExitUsage);
}

TEST_F(CliTest, MissingInputIsRuntimeOrUsageError) {
  const auto r = Call({"dereverb", "--in", P("none.wav"), "--out", P("o.wav")});
  EXPECT_NE(r.code, kExitOk);
  EXPECT_FALSE(r.err.empty());
}

TEST_F(CliTest, SimulateDereverbDoaEnhance) {
  ASSERT_EQ(Call({"simulate", "--scene", P("scene.txt"), "--out-dir", P("sim")}).code, kExitOk);
  for (const char* f : {"mixture.wav", "image_0.wav", "image_1.wav", "reference_0.wav", "doas.txt", "scene.txt"}) {
    EXPECT_TRUE(fs::exists(dir_ / "sim" / f)) << f;
  }
  const TimeSignal mix = ReadWav(dir_ / "sim" / "mixture.wav");
  EXPECT_EQ(mix.num_channels(), 3);

  ASSERT_EQ(Call({"dereverb", "--in", P("sim/mixture.wav"), "--out", P("dry.wav"), "--taps", "6"}).code, kExitOk);
  EXPECT_EQ(ReadWav(dir_ / "dry.wav").num_samples(), mix.num_samples());

  const auto doa = Call({"doa", "--in", P("sim/mixture.wav"), "--sources", "2"});
  ASSERT_EQ(doa.code, kExitOk);
  std::istringstream lines(doa.out);
  double d0 = 0, d1 = 0;
  EXPECT_TRUE(static_cast<bool>(lines >> d0 >> d1));

  SaveMaskNet(InitMaskNet(3, 4, 0, 1), dir_ / "p.bin");
  for (const char* bf : {"mpdr", "wpd"}) {
    const auto r = Call({"enhance", "--in", P("sim/mixture.wav"), "--doa", "0", "--params", P("p.bin"),
                         "--beamformer", bf, "--out", P(std::string(bf) + ".wav")});
    ASSERT_EQ(r.code, kExitOk) << r.err;
    const TimeSignal y = ReadWav(dir_ / (std::string(bf) + ".wav"));
    EXPECT_EQ(y.num_channels(), 1);
    EXPECT_EQ(y.num_samples(), mix.num_samples());
  }
}

TEST_F(CliTest, ChannelMismatchIsRuntimeError) {
  ASSERT_EQ(Call({"simulate", "--scene", P("scene.txt"), "--out-dir", P("sim")}).code, kExitOk);
  SaveMaskNet(InitMaskNet(4, 4, 0, 1), dir_ / "p4.bin");
  EXPECT_EQ(Call({"enhance", "--in", P("sim/mixture.wav"), "--doa", "0", "--params", P("p4.bin"),
                  "--out", P("o.wav")}).code,
            kExitRuntime);
}

TEST_F(CliTest, ConfigFileSuppliesDefaultsAndFlagsOverride) {
  ASSERT_EQ(Call({"simulate", "--scene", P("scene.txt"), "--out-dir", P("sim")}).code, kExitOk);
  std::ofstream(dir_ / "cfg.ini") << "[doa]\nsources = 1\n";
  const auto one = Call({"--config", P("cfg.ini"), "doa", "--in", P("sim/mixture.wav")});
  ASSERT_EQ(one.code, kExitOk) << one.err;
  EXPECT_EQ(std::count(one.out.begin(), one.out.end(), '\n'), 1);
  const auto two = Call({"--config", P("cfg.ini"), "doa", "--in", P("sim/mixture.wav"), "--sources", "2"});
  EXPECT_EQ(std::count(two.out.begin(), two.out.end(), '\n'), 2);
}

TEST_F(CliTest, SeparateWritesSources) {
  ASSERT_EQ(Call({"simulate", "--scene", P("scene.txt"), "--out-dir", P("sim")}).code, kExitOk);
  const auto r = Call({"separate", "--in", P("sim/mixture.wav"), "--out-dir", P("sep"), "--iters", "3"});
  ASSERT_EQ(r.code, kExitOk) << r.err;
  EXPECT_TRUE(fs::exists(dir_ / "sep" / "source_0.wav"));
  EXPECT_TRUE(fs::exists(dir_ / "sep" / "source_1.wav"));
}

TEST_F(CliTest, AdaptWithOracleScorerAndReplay) {
  ASSERT_EQ(Call({"simulate", "--scene", P("scene.txt"), "--out-dir", P("sim")}).code, kExitOk);
  SaveMaskNet(InitMaskNet(3, 4, 0, 1), dir_ / "p.bin");
  const auto r = Call({"--seed", "3", "adapt", "--in", P("sim/mixture.wav"), "--params", P("p.bin"),
                       "--out-params", P("q.bin"), "--scorer", "oracle", "--refs", P("sim"), "--alpha", "-100",
                       "--window", "0.5", "--steps", "2", "--batch", "2", "--mnmf-iters", "3",
                       "--replay", P("sim")});
  ASSERT_EQ(r.code, kExitOk) << r.err;
  EXPECT_TRUE(fs::exists(dir_ / "q.bin"));
  EXPECT_EQ(LoadMaskNet(dir_ / "q.bin").num_channels(), 3);
}

TEST_F(CliTest, OracleScorerWithoutRefsIsUsageError) {
  ASSERT_EQ(Call({"simulate", "--scene", P("scene.txt"), "--out-dir", P("sim")}).code, kExitOk);
  SaveMaskNet(InitMaskNet(3, 4, 0, 1), dir_ / "p.bin");
  EXPECT_EQ(Call({"adapt", "--in", P("sim/mixture.wav"), "--params", P("p.bin"), "--out-params", P("q.bin"),
                  "--scorer", "oracle"}).code,
            kExitUsage);
}

TEST(Cli, GradCheckPasses) {
  const auto r = Call({"gradcheck", "--count", "10"});
  EXPECT_EQ(r.code, kExitOk) << r.out;
  EXPECT_NE(r.out.find("PASS"), std::string::npos);
}

}  // namespace
}  // namespace rtbeam::cli
