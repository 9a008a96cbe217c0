#pragma once

#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

#include "ains/cases.hpp"
#include "ains/montecarlo.hpp"

namespace ains::app {

/// Everything a subcommand needs.  Built from an INI file; every key is
/// optional and unknown sections or keys are rejected.
struct RunConfig {
  std::uint64_t seed = 1;
  TrajectorySpec traj;
  SceneSpec scene;
  SensorSuite sensors;
  NoiseParams imu_noise;
  InitSigmas init;
  FilterKind filter = FilterKind::Slam;
  std::vector<LinearizationMode> modes{LinearizationMode::Standard, LinearizationMode::Ideal};
  std::size_t window = 10;
  /// Case names, empty for all lemma and global cases.
  std::vector<std::string> cases;
  std::string rank_case = "single_plane";
  double tol = kDefaultRelTol;
  double residual_tol = 1e-8;
  int runs = 50;
  bool noise = true;
};

/// Throws Error(InvalidConfig) naming the offending key.
RunConfig parse_config(std::istream& in);
RunConfig load_config(const std::string& path);

McConfig mc_config(const RunConfig& rc, int jobs);

/// Each command writes into `out_dir` and returns the process exit code.
int cmd_observability(const RunConfig& rc, const std::string& out_dir, std::ostream& log);
int cmd_degenerate(const RunConfig& rc, const std::string& out_dir, std::ostream& log);
int cmd_mc(const RunConfig& rc, const std::string& out_dir, int jobs, std::ostream& log);
int cmd_simulate(const RunConfig& rc, const std::string& out_dir, std::ostream& log);

/// Full command line: 0 success, 1 failed check, 2 usage or config error.
int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

}  // namespace ains::app
