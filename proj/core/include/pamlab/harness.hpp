#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "pamlab/asymptotics.hpp"
#include "pamlab/config.hpp"
#include "pamlab/error.hpp"
#include "pamlab/kernels.hpp"
#include "pamlab/measure.hpp"
#include "pamlab/noise.hpp"

namespace pamlab {

enum class ExperimentKind { Simulate, FkMoments, Theta, Hartree, MeCheck, Peaks, Holder, Girsanov, NoiseCheck };

std::string to_string(ExperimentKind kind);
ExperimentKind experiment_kind_from_string(const std::string& name);  // ConfigInvalid
std::vector<std::string> experiment_kind_names();

// Typed view of a flat config (see README for the keys). `entries` keeps the
// validated map; everything else is derived from it at load.
struct ExperimentConfig {
  ExperimentKind kind = ExperimentKind::Simulate;
  ConfigMap entries;
  CovarianceSpec spec;
  SpaceTimeGrid grid;
  Measure u0;
  double t = 1.0;
  int m = 2;
  std::size_t replicas = 1;
  std::uint64_t seed = 0;
  int workers = 1;
  bool zero_noise = false;
  std::string output_dir;

  // schema and cross-field checks; every failure is ConfigInvalid
  static ExperimentConfig from_map(const ConfigMap& map);
  static ExperimentConfig load(const std::string& path);

  // FNV-1a of the canonical text without output.dir and workers, which do
  // not change any number
  std::string hash() const;
};

struct OutputFile {
  std::string path;    // relative to the output directory
  std::string digest;  // FNV-1a 64 of the bytes
};

struct RunRecord {
  std::string kind;
  std::string config_hash;
  std::string code_version;
  std::string started;
  std::string finished;
  std::uint64_t seed = 0;
  std::string status = "ok";  // or the error class
  std::string error_cause;    // wrapped module error class
  std::string message;
  std::vector<OutputFile> outputs;
  std::vector<std::pair<std::string, double>> headlines;

  std::optional<double> headline(const std::string& name) const;
  // digest of the headline names and values only
  std::string headline_digest() const;
  std::string to_json() const;
};

std::string code_version();

// Runs the pipeline for config.kind, writes its CSV artifacts plus
// record.json and config.txt into config.output_dir. Module failures come back
// as ModuleError with the original class in the message prefix; an error
// record is still written when the directory is usable.
RunRecord run(const ExperimentConfig& config);

struct SweepOutcome {
  std::vector<RunRecord> records;
  std::string table;  // sweep.csv under the base output directory
  std::optional<MomentGrowthFit> moment_growth;  // theta over m
};

// Value i runs with seed mix64(base seed + i + 1) in <out>/<axis>=<value>.
SweepOutcome sweep(const ExperimentConfig& base, const std::string& axis, std::span<const std::string> values);

// 0 ok, 2 ConfigInvalid, 3 OutputUnwritable, 4 everything else
int exit_code(ErrorKind kind);

// Cause class carried by a wrapped ModuleError, or the kind itself.
std::string error_cause(const Error& e);

}  // namespace pamlab
