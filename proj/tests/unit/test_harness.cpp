#include <gtest/gtest.h>

#include <filesystem>
#include <fstream>
#include <string>

#include "pamlab/error.hpp"
#include "pamlab/harness.hpp"

using namespace pamlab;
namespace fs = std::filesystem;

namespace {

fs::path scratch(const std::string& name) {
  const auto p = fs::temp_directory_path() / ("pamlab-harness-" + name);
  fs::remove_all(p);
  return p;
}

ExperimentConfig make(const std::string& text, const fs::path& out) {
  auto m = ConfigMap::parse(text);
  m.set("output.dir", out.string());
  return ExperimentConfig::from_map(m);
}

std::string first_line(const fs::path& p) {
  std::ifstream f(p);
  std::string line;
  std::getline(f, line);
  return line;
}

const char* kFk = R"(
kind = fk-moments
seed = 5
t = 0.5
m = 2
replicas = 2000
[covariance]
kind = gaussian-bump
[fk]
steps = 32
)";

}  // namespace

TEST(Harness, HartreeDeltaHeadline) {
  const auto out = scratch("hartree");
  const auto c = make("kind = hartree\nseed = 1\n[covariance]\nkind = delta\n", out);
  const auto r = run(c);
  ASSERT_TRUE(r.headline("value"));
  EXPECT_NEAR(*r.headline("value"), 1.0 / 12.0, 0.01 / 12.0);
  EXPECT_LT(*r.headline("residual"), 1e-5);
  EXPECT_TRUE(fs::exists(out / "record.json"));
  EXPECT_TRUE(fs::exists(out / "maximizer.csv"));
  EXPECT_EQ(r.status, "ok");
}

TEST(Harness, SimulateZeroNoiseMatchesHeat) {
  const auto out = scratch("zero");
  const auto c = make(R"(
kind = simulate
seed = 3
t = 0.5
zero_noise = true
[grid]
points = 256
spacing = 0.05
dt = 0.005
)", out);
  const auto r = run(c);
  EXPECT_LT(*r.headline("max_abs_dev_from_heat"), 1e-8);
  EXPECT_EQ(*r.headline("zero_noise_pass"), 1.0);
}

TEST(Harness, RerunIsBitIdentical) {
  const auto a = run(make(kFk, scratch("det-a")));
  const auto b = run(make(kFk, scratch("det-b")));
  EXPECT_EQ(a.headline_digest(), b.headline_digest());
  ASSERT_EQ(a.outputs.size(), b.outputs.size());
  for (std::size_t i = 0; i < a.outputs.size(); ++i) EXPECT_EQ(a.outputs[i].digest, b.outputs[i].digest);
  EXPECT_EQ(*a.headline("value"), *b.headline("value"));
}

TEST(Harness, WorkerCountDoesNotChangeNumbers) {
  auto c1 = make(kFk, scratch("w1"));
  auto c3 = make(kFk, scratch("w3"));
  c1.workers = 1;
  c3.workers = 3;
  EXPECT_EQ(c1.hash(), c3.hash());
  EXPECT_EQ(run(c1).headline_digest(), run(c3).headline_digest());
}

TEST(Harness, HashIgnoresLayout) {
  const auto a = ExperimentConfig::from_map(ConfigMap::parse("kind = theta\nseed = 2\nm = 3\n[covariance]\nkind = gaussian-bump\n"));
  const auto b = ExperimentConfig::from_map(
      ConfigMap::parse("covariance.kind   =  gaussian-bump\n  m=3\n# comment\nseed=2\nkind=theta\nworkers = 4\n"));
  EXPECT_EQ(a.hash(), b.hash());
  const auto c = ExperimentConfig::from_map(ConfigMap::parse("kind = theta\nseed = 3\nm = 3\n"));
  EXPECT_NE(a.hash(), c.hash());
}

TEST(Harness, ConfigValidation) {
  auto bad = [](const std::string& text) {
    try {
      ExperimentConfig::from_map(ConfigMap::parse(text));
    } catch (const Error& e) {
      return e.kind();
    }
    return ErrorKind::InvalidArgument;
  };
  EXPECT_EQ(bad("kind = hartree\n"), ErrorKind::ConfigInvalid);                   // no seed
  EXPECT_EQ(bad("kind = nope\nseed = 1\n"), ErrorKind::ConfigInvalid);
  EXPECT_EQ(bad("kind = hartree\nseed = 1\ncolour = red\n"), ErrorKind::ConfigInvalid);
  EXPECT_EQ(bad("kind = simulate\nseed = 1\nt = -1\n"), ErrorKind::ConfigInvalid);
  EXPECT_EQ(bad("kind = simulate\nseed = 1\n[grid]\npoints = 8\n"), ErrorKind::ConfigInvalid);
  EXPECT_EQ(bad("kind = fk-moments\nseed = 1\nm = 2\n[fk]\ntargets = 0\n"), ErrorKind::ConfigInvalid);
  EXPECT_EQ(bad("kind = me-check\nseed = 1\n[covariance]\nkind = gaussian-bump\n"), ErrorKind::ConfigInvalid);
  EXPECT_EQ(bad("kind = girsanov\nseed = 1\n[girsanov]\nfunctionals = bogus\n"), ErrorKind::ConfigInvalid);
}

TEST(Harness, ModuleErrorsAreWrapped) {
  const auto out = scratch("wrap");
  // huge amplitude blows the solver up
  const auto c = make(R"(
kind = simulate
seed = 1
t = 1
[covariance]
kind = white
amplitude = 1e10
[grid]
points = 128
spacing = 0.1
dt = 0.01
)", out);
  try {
    run(c);
    FAIL() << "expected a module error";
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::ModuleError);
    EXPECT_EQ(error_cause(e), "UnstableRun");
    EXPECT_EQ(exit_code(e.kind()), 4);
  }
  EXPECT_TRUE(fs::exists(out / "record.json"));
  EXPECT_EQ(exit_code(ErrorKind::ConfigInvalid), 2);
  EXPECT_EQ(exit_code(ErrorKind::OutputUnwritable), 3);
}

TEST(Harness, UnwritableOutput) {
  auto c = make(kFk, "/proc/pamlab-cannot-write");
  try {
    run(c);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::OutputUnwritable);
  }
}

TEST(Harness, ArtifactsStayInOutputDirAndCarryStreams) {
  const auto out = scratch("confined");
  const auto r = run(make(kFk, out));
  std::size_t files = 0;
  for (const auto& e : fs::directory_iterator(out)) {
    ++files;
    if (e.path().extension() == ".csv") {
      const auto h = first_line(e.path());
      EXPECT_EQ(h.substr(h.rfind(',') + 1), "stream") << e.path();
    }
  }
  EXPECT_EQ(files, r.outputs.size() + 2);  // plus record.json and config.txt
}

TEST(Harness, SweepOverM) {
  const auto out = scratch("sweep-m");
  const auto base = make("kind = theta\nseed = 4\nt = 0.5\nreplicas = 400\n[fk]\nsteps = 32\n", out);
  const std::vector<std::string> values{"2", "3", "4", "5"};
  const auto res = sweep(base, "m", values);
  ASSERT_EQ(res.records.size(), 4u);
  std::ifstream f(res.table);
  std::string line;
  int rows = -1;
  while (std::getline(f, line)) ++rows;
  EXPECT_EQ(rows, 4);
  ASSERT_TRUE(res.moment_growth.has_value());
  EXPECT_GT(res.moment_growth->p, 1.0);
  // sub-seeds differ per value
  EXPECT_NE(res.records[0].seed, res.records[1].seed);
  EXPECT_THROW(sweep(base, "nonsense", values), Error);
}

TEST(Harness, TimeStepSweepShrinksNegativity) {
  const auto out = scratch("sweep-dt");
  const auto base = make(R"(
kind = simulate
seed = 7
t = 0.4
replicas = 40
[covariance]
kind = white
amplitude = 4
[grid]
points = 1024
spacing = 0.02
dt = 0.02
)", out);
  const std::vector<std::string> values{"0.02", "0.01", "0.005"};
  const auto res = sweep(base, "grid.dt", values);
  const double f0 = *res.records[0].headline("mean_negativity");
  const double f1 = *res.records[1].headline("mean_negativity");
  const double f2 = *res.records[2].headline("mean_negativity");
  EXPECT_GT(f0, f1);
  EXPECT_GT(f1, f2);
}

// At t = 0.5 the mollifier width 4 eps is comparable to the bridge variance for
// eps >= 0.1, so there the estimates rise with roughly equal gaps; the gaps
// shrink once 4 eps is well below it.
TEST(Harness, EpsilonSweep) {
  const auto out = scratch("sweep-eps");
  const auto base = make(R"(
kind = fk-moments
seed = 9
t = 0.5
m = 2
replicas = 20000
[covariance]
kind = riesz
eta = 0.5
[fk]
steps = 256
)", out);
  const std::vector<std::string> coarse{"0.4", "0.2", "0.1"};
  const auto a = sweep(base, "covariance.epsilon", coarse);
  EXPECT_LT(*a.records[0].headline("value"), *a.records[1].headline("value"));
  EXPECT_LT(*a.records[1].headline("value"), *a.records[2].headline("value"));
  const std::vector<std::string> fine{"0.1", "0.025", "0.00625"};
  const auto b = sweep(base, "covariance.epsilon", fine);
  const double v0 = *b.records[0].headline("value");
  const double v1 = *b.records[1].headline("value");
  const double v2 = *b.records[2].headline("value");
  EXPECT_LT(v0, v1);
  EXPECT_LT(v1, v2);
  EXPECT_LT(v2 - v1, v1 - v0);
}
