#pragma once

#include <optional>
#include <string>
#include <vector>

#include "ains/imu.hpp"
#include "ains/measurements.hpp"
#include "ains/state.hpp"

namespace ains {

enum class LinearizationMode { Standard, Ideal };

const char* mode_name(LinearizationMode m);
LinearizationMode mode_from_name(const std::string& name);

/// Stochastic clone of a past IMU pose; error coordinates (dtheta, dp).
struct Clone {
  int id = 0;
  double t = 0.0;
  UnitQuaternion q_IG;
  Vec3 p = Vec3::Zero();

  ImuState as_imu() const;
};

/// Error-state layout: [IMU 15 | clones 6 each | features].
struct HybridState {
  ImuState imu;
  std::vector<Clone> clones;
  std::vector<Feature> features;
  /// Scene index of each feature in the state.
  std::vector<int> feature_ids;
  MatX P;

  int dim() const;
  int clone_offset(std::size_t i) const { return kImuDim + 6 * static_cast<int>(i); }
  int features_begin() const { return clone_offset(clones.size()); }
  int feature_offset(std::size_t i) const;
  /// Position of scene feature `id` in `features`, or -1.
  int find_feature(int id) const;
  int find_clone(int id) const;
};

/// Symmetrizes P and throws CovarianceNotPSD when its smallest eigenvalue is
/// below -1e-9.
void enforce_psd(MatX& P);

/// Ground truth used for Ideal-mode linearization.  For propagation the
/// truth segment must carry the true biases and bias-corrupted, noise-free
/// inputs on the same grid as the measured samples.
struct TruthView {
  const Trajectory* traj = nullptr;
  const std::vector<Feature>* features = nullptr;
};

/// Propagates mean and covariance from grid index `first` to `last` of the
/// measured samples.  Clones and features are static.
void ekf_propagate(HybridState& s, const std::vector<ImuSample>& samples, std::size_t first,
                   std::size_t last, const NoiseParams& noise, LinearizationMode mode,
                   const TruthView& truth = {});

/// Observation of scene feature `feature` (FeatureMeasurement::feature).
using FeatureObservations = std::vector<FeatureMeasurement>;

/// Measurement residual with the angle component of Hesse planes wrapped.
VecX measurement_residual(const SensorSuite& sensors, const ImuState& x, const Feature& f,
                          const FeatureMeasurement& m);

/// Joseph-form Kalman update with an already stacked linear system; applies
/// the correction through each block's boxplus.  Throws SingularInnovation.
void kalman_update(HybridState& s, const MatX& H, const VecX& r, const MatX& R);

/// Stacked update with every observation of a feature held in the state.
/// Observations of features not in the state are ignored.  `truth_imu` is
/// required in Ideal mode.
void ekf_update(HybridState& s, const FeatureObservations& obs, const SensorSuite& sensors,
                LinearizationMode mode, const ImuState* truth_imu = nullptr,
                const TruthView& truth = {});

/// Appends a clone of the current pose; when more than `window` clones
/// exist the oldest is marginalized.
void msckf_augment(HybridState& s, int id, double t, std::size_t window = 10);
/// Removes clone i and its rows/columns.
void marginalize_clone(HybridState& s, std::size_t i);

struct TrackObservation {
  int clone_id = 0;
  FeatureMeasurement m;
};

struct ProjectedSystem {
  MatX H;
  VecX r;
  MatX R;
  /// Orthonormal left annihilator of the feature Jacobian (columns).
  MatX A;
};

/// Projects (r, H_x, H_f, R) onto the left null space of H_f.  Throws
/// RankDeficientHf when H_f has rank below its column count.
ProjectedSystem nullspace_project(const MatX& Hx, const MatX& Hf, const VecX& r, const MatX& R);

/// Linear plus Gauss-Newton multi-view triangulation of a point from
/// normalized image coordinates observed at the given poses.
Vec3 triangulate_point(const std::vector<ImuState>& poses, const std::vector<Vec2>& uv);

struct TrackSystem {
  MatX Hx;
  MatX Hf;
  VecX r;
  MatX R;
};

/// Stacks the residuals and Jacobians of one feature track.  `f_hat` is the
/// feature estimate used in the residual; Jacobians use the estimate in
/// Standard mode and `f_true` with the true clone poses in Ideal mode.
TrackSystem stack_track(const HybridState& s, const std::vector<TrackObservation>& track,
                        const Feature& f_hat, const SensorSuite& sensors, LinearizationMode mode,
                        const Feature* f_true = nullptr, const Trajectory* truth = nullptr);

/// Null-space projected update for one track (>= 3 clones).  Returns the
/// number of projected rows.
int msckf_update_track(HybridState& s, const std::vector<TrackObservation>& track,
                       const Feature& f_hat, const SensorSuite& sensors, LinearizationMode mode,
                       const Feature* f_true = nullptr, const Trajectory* truth = nullptr);

}  // namespace ains
