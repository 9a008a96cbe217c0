#pragma once

#include <random>
#include <vector>

#include "ains/imu.hpp"
#include "ains/measurements.hpp"
#include "ains/state.hpp"

namespace ains {

enum class MotionKind {
  Sinusoid3D,
  PureTranslation,
  ConstantLocalAccel,
  PureRotation,
  TowardPoint,
  ParallelToLine
};

const char* motion_kind_name(MotionKind k);
MotionKind motion_kind_from_name(const std::string& name);

struct TrajectorySpec {
  MotionKind kind = MotionKind::Sinusoid3D;
  double duration = 30.0;
  double imu_rate = 200.0;
  double cam_rate = 10.0;

  // Circle around `center` with the sensor z axis facing inwards.
  Vec3 center = Vec3(5.0, 5.0, 2.5);
  double radius = 3.0;
  double yaw_rate = 0.2;
  // Positional wobble per global axis.
  Vec3 wobble_amp = Vec3(0.3, 0.3, 0.4);
  Vec3 wobble_freq = Vec3(0.7, 0.9, 0.5);
  // Attitude wobble (roll, pitch, yaw) about the facing direction.
  Vec3 att_amp = Vec3(0.1, 0.1, 0.15);
  Vec3 att_freq = Vec3(0.6, 0.8, 0.4);

  // Degenerate motions: direction of travel (TowardPoint / ParallelToLine,
  // normalized internally) and excursion along it.
  Vec3 direction = Vec3(1.0, 0.3, 0.2);
  double travel_offset = 2.0;
  double travel_amp = 1.0;
  double travel_freq = 0.5;
};

/// Analytic kinematics at one instant.
struct Kinematics {
  Mat3 R_IG = Mat3::Identity();
  Vec3 p = Vec3::Zero();
  Vec3 v = Vec3::Zero();
  Vec3 a_G = Vec3::Zero();
  Vec3 omega = Vec3::Zero();
};

Kinematics evaluate_motion(const TrajectorySpec& spec, double t);
void validate(const TrajectorySpec& spec);

struct GeneratedTrajectory {
  /// Truth on the IMU grid with exact, noise-free inertial samples and zero biases.
  Trajectory truth;
  /// Indices into `truth` of the exteroceptive sampling instants.
  std::vector<std::size_t> cam_index;
  double imu_dt = 0.0;
};

GeneratedTrajectory generate_trajectory(const TrajectorySpec& spec);
std::vector<ImuSample> imu_samples(const Trajectory& traj);

// ---------------------------------------------------------------- scenes

struct SceneSpec {
  int points = 0;
  int lines = 0;
  int planes = 0;
  bool spherical_points = false;
  bool hesse_planes = false;
  bool parallel_lines = false;
  bool line_parallel_plane = false;
  /// Region holding points and line anchors; by default a box around the
  /// trajectory center.
  Vec3 region_lo = Vec3(3.8, 3.8, 1.6);
  Vec3 region_hi = Vec3(6.2, 6.2, 3.4);
  double plane_distance = 4.0;
  double min_line_angle_deg = 1.0;
  double min_visible_fraction = 0.8;
  int max_tries = 2000;
};

struct Scene {
  std::vector<Feature> features;
  /// Two 3D points on each line (zero for non-line features).
  std::vector<LineAnchors> anchors;
};

Scene sample_scene(const SceneSpec& spec, const GeneratedTrajectory& traj, const SensorSuite& sensors,
                   std::mt19937_64& rng);

/// Fraction of exteroceptive instants at which the feature is measurable.
double visible_fraction(const GeneratedTrajectory& traj, const SensorSuite& sensors,
                        const Feature& f, const LineAnchors& anchors);

}  // namespace ains
