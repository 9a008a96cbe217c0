#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "ains/observability.hpp"

namespace ains {

/// Feature configuration checked on the generic trajectory.
struct ObsCase {
  std::string name;
  SceneSpec scene;
  LineModel line_model = LineModel::Projective;
  std::vector<GlobalMeasModel> globals;
  NullCase analytic = NullCase::Points;
  int expected_dim = 0;
};

struct ObsCaseResult {
  std::string name;
  int dim = 0;
  int expected_dim = 0;
  int analytic_cols = 0;
  double residual = 0.0;
  double span = 0.0;
  /// Smallest singular value counted as non-null, relative to the largest.
  double weakest = 0.0;
  /// |M N_yaw| relative residual of the baseline yaw column (global cases).
  double yaw_residual = 0.0;
  std::vector<std::pair<double, int>> rank;
};

/// Null-space dimension cases on the default sinusoid.
std::vector<ObsCase> lemma_cases();
/// Point + line + plane with global sensors added.
std::vector<ObsCase> global_cases();

/// Deterministic per-case generator: the stream depends on (seed, salt) only.
std::mt19937_64 case_rng(std::uint64_t seed, std::uint64_t salt);

ObsCaseResult run_obs_case(const ObsCase& c, const GeneratedTrajectory& traj, const SensorSuite& base,
                           std::uint64_t seed, std::uint64_t salt, double rel_tol = kDefaultRelTol);

struct DegenerateProblem {
  MotionKind motion = MotionKind::PureTranslation;
  /// Feature counts; regions are chosen per motion.
  SceneSpec scene;
  NullCase base_case = NullCase::PointLine;
  NullCase extra_case = NullCase::PureTranslation;
  int expected_extra = 0;
  /// Only a lower bound on the extra dimension is claimed.
  bool at_least = false;
};

std::vector<DegenerateProblem> degenerate_problems();

/// Trajectory and scene for a degenerate motion.  The scene satisfies the
/// motion's geometric premise (target point on the travel axis, line parallel
/// to the travel direction); the target feature index is returned in `target`.
Scene degenerate_scene(const DegenerateProblem& p, const GeneratedTrajectory& traj,
                       const SensorSuite& sensors, std::mt19937_64& rng, int& target);

struct DegenerateResult {
  MotionKind motion = MotionKind::PureTranslation;
  int base_dim = 0;
  int degen_dim = 0;
  int expected_extra = 0;
  bool at_least = false;
  double residual = 0.0;
  bool pass = false;
};

DegenerateResult run_degenerate(const DegenerateProblem& p, const SensorSuite& sensors,
                                std::uint64_t seed, std::uint64_t salt,
                                double rel_tol = kDefaultRelTol);

}  // namespace ains
