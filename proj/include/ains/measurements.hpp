#pragma once

#include <optional>
#include <random>

#include <Eigen/Core>

#include "ains/features.hpp"
#include "ains/imu.hpp"
#include "ains/state.hpp"

namespace ains {

/// Measurement Jacobian split into IMU (15 columns) and feature columns.
struct MeasJacobian {
  MatX H_imu;
  MatX H_feat;

  int rows() const { return static_cast<int>(H_imu.rows()); }
  /// Places both blocks into a row block of width n; feature columns at offset.
  MatX full(int n, int feat_offset) const;
};

// ---------------------------------------------------------------- points

enum class PointModel { Range, Mono, RangeBearing, Stereo };

struct PointSensorModel {
  PointModel kind = PointModel::Mono;
  double baseline = 0.1;
};

int point_meas_dim(const PointSensorModel& model);
const char* point_model_name(PointModel m);

Vec3 point_transform(const ImuState& state, const Vec3& p_G);
/// Noise-free measurement of a point given in the sensor frame.
VecX point_measure(const PointSensorModel& model, const Vec3& p_local);
/// Measurement with additive Gaussian noise of per-row standard deviation.
VecX point_measure(const PointSensorModel& model, const Vec3& p_local, const VecX& sigma,
                   std::mt19937_64& rng);
/// d z / d p_local.
MatX point_projection_jacobian(const PointSensorModel& model, const Vec3& p_local);
MeasJacobian point_jacobian(const PointSensorModel& model, const ImuState& state,
                            const Vec3& p_G);
MeasJacobian point_jacobian_spherical(const PointSensorModel& model, const ImuState& state,
                                      const PointSpherical& s);
/// Rows are the two unit vectors orthogonal to the bearing b.
Eigen::Matrix<double, 2, 3> bearing_perp_rows(const Vec3& b);
/// Noise shaping of the universal bearing residual: z_f [b1 b2]^T [I2; 0].
Eigen::Matrix2d mono_noise_shaping(const Vec3& p_local);

// ---------------------------------------------------------------- lines

struct CameraIntrinsics {
  double f1 = 460.0;
  double f2 = 460.0;
  double c1 = 320.0;
  double c2 = 240.0;
};

struct LineObservation {
  Vec3 xs = Vec3(0.0, 0.0, 1.0);
  Vec3 xe = Vec3(1.0, 0.0, 1.0);
};

Mat3 line_projection_matrix(const CameraIntrinsics& cam);
/// Homogeneous pixel [u, v, 1] of a point in the sensor frame.
Vec3 project_pixel(const CameraIntrinsics& cam, const Vec3& p_local);
PluckerLine line_transform_to_local(const ImuState& state, const PluckerLine& L_G);
Vec2 line_project_and_measure(const Mat3& K, const PluckerLine& L_local,
                              const LineObservation& obs);
/// d z / d l' for the endpoint-to-line distances.
Eigen::Matrix<double, 2, 3> line_residual_jacobian(const Vec3& l_prime,
                                                   const LineObservation& obs);
MeasJacobian line_jacobian(const ImuState& state, const PluckerLine& L_G,
                           const CameraIntrinsics& cam, const LineObservation& obs);

/// Direct 3D line measurement [skew(v_m) Iv ; |In| / |Iv|].
Vec4 line_direct_measure(const ImuState& state, const PluckerLine& L_G, const Vec3& v_m);
MeasJacobian line_direct_jacobian(const ImuState& state, const PluckerLine& L_G,
                                  const Vec3& v_m);

// ---------------------------------------------------------------- planes

CpPlane plane_transform_to_local(const ImuState& state, const CpPlane& Pi_G);
MeasJacobian plane_jacobian_cp(const ImuState& state, const CpPlane& Pi_G);
Vec3 plane_measure_hesse(const ImuState& state, const HessePlane& plane);
MeasJacobian plane_jacobian_hesse(const ImuState& state, const HessePlane& plane);

// ---------------------------------------------------------------- global

enum class GlobalKind { PosX, PosY, PosZ, Orientation };

struct GlobalMeasModel {
  GlobalKind kind = GlobalKind::PosX;
  Vec3 N_n = Vec3::UnitX();
};

VecX global_measure(const GlobalMeasModel& model, const ImuState& state);
MeasJacobian global_jacobian(const GlobalMeasModel& model, const ImuState& state);

// ---------------------------------------------------------------- dispatch

enum class LineModel { Projective, Direct };

struct SensorNoise {
  double range_sigma = 0.02;
  double pixel_sigma = 1.0;
  double plane_sigma = 0.01;
  double plane_angle_sigma = 0.005;
  double line_dir_sigma = 0.01;
  double line_dist_sigma = 0.02;
};

struct SensorSuite {
  PointSensorModel point;
  LineModel line = LineModel::Projective;
  CameraIntrinsics cam;
  SensorNoise noise;
  double fov_half_angle = 1.2;
  double min_depth = 0.1;
};

/// Two 3D points spanning a line, used to synthesize image endpoints.
struct LineAnchors {
  Vec3 a = Vec3::Zero();
  Vec3 b = Vec3::Zero();
};

/// A single feature observation.  For projective lines `obs` carries the
/// measured endpoints and z is zero; for direct lines `v_m` is the measured
/// direction and z holds the projected residual target.
struct FeatureMeasurement {
  int feature = -1;
  VecX z;
  LineObservation obs;
  Vec3 v_m = Vec3::UnitX();
};

int meas_dim(const SensorSuite& s, const Feature& f);
VecX predict_measurement(const SensorSuite& s, const ImuState& x, const Feature& f,
                         const FeatureMeasurement& aux);
MeasJacobian measurement_jacobian(const SensorSuite& s, const ImuState& x, const Feature& f,
                                  const FeatureMeasurement& aux);
/// Measurement noise covariance for the feature given the current estimate.
MatX measurement_noise(const SensorSuite& s, const Feature& f);

/// Synthesizes one observation of a feature from the true state.  Returns
/// nullopt when the feature is not visible.  rng == nullptr yields noise-free
/// data.
std::optional<FeatureMeasurement> simulate_feature_measurement(
    const SensorSuite& s, const ImuState& truth, const Feature& f_truth,
    const LineAnchors& anchors, std::mt19937_64* rng);

}  // namespace ains
