#pragma once

#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "ains/simulation.hpp"

namespace ains {

enum class FilterKind { Slam, Msckf };

const char* filter_kind_name(FilterKind k);
FilterKind filter_kind_from_name(const std::string& name);

/// Initial standard deviations of the estimate and of feature priors.
struct InitSigmas {
  double theta = 0.005;
  double bg = 1e-4;
  double vel = 0.02;
  double ba = 1e-3;
  double pos = 0.02;
  double point = 0.1;
  /// Rotation of the line's orthonormal frame, rad.
  double line_angle = 0.005;
  /// Distance of the line from the origin, m.
  double line_dist = 0.05;
  double plane = 0.05;
};

struct FilterConfig {
  FilterKind kind = FilterKind::Slam;
  LinearizationMode mode = LinearizationMode::Standard;
  std::size_t window = 10;
  NoiseParams imu_noise;
  InitSigmas init;
};

/// Error history of one filter run, one entry per exteroceptive instant.
struct RunHistory {
  std::vector<double> t;
  std::vector<Vec3> theta_err;
  std::vector<Vec3> pos_err;
  std::vector<double> ori_nees;
  std::vector<double> pos_nees;
  bool failed = false;
  std::string failure;
};

/// Initial covariance of the IMU block and of each feature.
MatX initial_imu_covariance(const InitSigmas& s);
MatX initial_feature_covariance(const Feature& f, const InitSigmas& s);

/// Truth perturbed by a draw from the given covariance.
ImuState perturb_imu(const ImuState& x, const MatX& P, std::mt19937_64& rng);
Feature perturb_feature(const Feature& f, const MatX& P, std::mt19937_64& rng);

struct FilterInit {
  ImuState imu;
  /// Feature estimates (VI-SLAM state, MSCKF line/plane initial guesses).
  std::vector<Feature> features;
};

FilterInit draw_initial_estimate(const SimulatedData& data, const Scene& scene,
                                 const InitSigmas& s, std::mt19937_64& rng);

/// Runs one filter over the data.  Filter failures are recorded in the
/// history rather than thrown.
RunHistory run_filter(const SimulatedData& data, const Scene& scene, const SensorSuite& sensors,
                      const FilterConfig& cfg, const FilterInit& init);

struct McConfig {
  TrajectorySpec traj;
  SceneSpec scene;
  SensorSuite sensors;
  NoiseParams imu_noise;
  InitSigmas init;
  FilterKind filter = FilterKind::Slam;
  std::vector<LinearizationMode> modes{LinearizationMode::Standard, LinearizationMode::Ideal};
  std::size_t window = 10;
  /// With noise off the data are exact and the filters start at the truth.
  bool noise = true;
  int runs = 50;
  std::uint64_t seed = 1;
  int jobs = 1;
};

struct McSeries {
  LinearizationMode mode = LinearizationMode::Standard;
  std::vector<double> t;
  std::vector<double> ori_rmse_deg;
  std::vector<double> pos_rmse_m;
  std::vector<double> ori_nees;
  std::vector<double> pos_nees;
  /// Time averages of the run-averaged NEES.
  double ori_nees_mean = 0.0;
  double pos_nees_mean = 0.0;
  int failures = 0;
};

struct McReport {
  int runs = 0;
  std::uint64_t seed = 0;
  std::vector<McSeries> series;

  const McSeries& of(LinearizationMode m) const;
};

/// Random stream of Monte-Carlo run `run`; independent of scheduling.
std::mt19937_64 run_rng(std::uint64_t seed, int run);

/// The scene shared by all runs of a configuration.
Scene mc_scene(const McConfig& cfg, const GeneratedTrajectory& traj);

/// Each run draws from its own stream seeded by (seed, run), so results do
/// not depend on `jobs`.  Failed runs are counted and excluded from averages.
McReport run_monte_carlo(const McConfig& cfg);

/// Two-sided 95% bounds of the average of `runs` independent chi-square(dof)
/// variables, the acceptance interval of a run-averaged NEES.
std::pair<double, double> nees_interval(int dof, int runs);

}  // namespace ains
