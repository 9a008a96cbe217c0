#pragma once

#include <cstdint>
#include <vector>

#include <Eigen/Core>

#include "ains/geometry.hpp"

namespace ains {

constexpr int kImuDim = 15;
// Error-state block offsets: (dtheta, b_g, v, b_a, p).
constexpr int kTh = 0;
constexpr int kBg = 3;
constexpr int kVel = 6;
constexpr int kBa = 9;
constexpr int kPos = 12;

using Mat15 = Eigen::Matrix<double, 15, 15>;
using Vec15 = Eigen::Matrix<double, 15, 1>;

struct ImuState {
  UnitQuaternion q_IG;
  Vec3 b_g = Vec3::Zero();
  Vec3 v = Vec3::Zero();
  Vec3 b_a = Vec3::Zero();
  Vec3 p = Vec3::Zero();

  /// Global-to-local rotation.
  Mat3 R() const { return q_IG.rotation(); }
  ImuState boxplus(const Vec15& dx) const;
};

/// Error of `truth` relative to `estimate` in the filter's error convention.
Vec15 imu_error(const ImuState& truth, const ImuState& estimate);

struct ImuSample {
  double t = 0.0;
  Vec3 omega = Vec3::Zero();
  Vec3 accel = Vec3::Zero();
};

struct NoiseParams {
  double sigma_g = 1e-3;
  double sigma_wg = 1e-5;
  double sigma_a = 1e-2;
  double sigma_wa = 1e-4;
};

/// Integrates the kinematics with RK4 from samples[first] to samples[last]
/// (clamped to the end of the sequence).  Inputs at the half step come from
/// cubic interpolation through the four nearest samples (fewer when the
/// sequence is short).
ImuState propagate_mean(const ImuState& state, const std::vector<ImuSample>& samples,
                        std::size_t first = 0, std::size_t last = SIZE_MAX);

/// Linearization point at one instant of the IMU grid.
struct TrajPoint {
  double t = 0.0;
  ImuState x;
  ImuSample u;
};
using Trajectory = std::vector<TrajPoint>;

enum class Quadrature { Trapezoid, EndCorrected };

/// Named blocks of the discrete transition Phi(k, 1).
struct PhiBlocks {
  Mat3 P11, P12, P31, P32, P34, P51, P52, P53, P54;
  double dt = 0.0;
};

struct StateTransition {
  PhiBlocks blocks;
  MatX Phi;
};

/// Sweeps the IMU grid forward from a start index and accumulates the
/// quadrature integrals so Phi(t_j, t_start) is available at every grid point.
class PhiIntegrator {
 public:
  PhiIntegrator(const Trajectory& traj, std::size_t start,
                Quadrature quad = Quadrature::EndCorrected);

  std::size_t index() const { return j_; }
  /// Advances one grid interval.
  void step();
  PhiBlocks blocks() const;
  Mat15 phi15() const;

 private:
  Mat3 C(std::size_t j) const;
  Mat3 Cdot(std::size_t j) const;
  Vec3 fG(std::size_t j) const;
  Vec3 fG_dot(std::size_t j) const;

  const Trajectory& traj_;
  Quadrature quad_;
  std::size_t start_, j_;
  Mat3 S1_, D1_, F32_, F52_;
};

Mat15 phi_from_blocks(const PhiBlocks& b);

/// Phi(tk, t1) with identity feature block of size m_feat.
StateTransition compute_phi(const Trajectory& traj, double t1, double tk, int m_feat = 0,
                            Quadrature quad = Quadrature::EndCorrected);

/// Continuous noise input matrix G at one linearization point (15x12).
Eigen::Matrix<double, 15, 12> noise_input(const ImuState& x);

/// Discrete noise covariance over [tk, tk1] (15x15).
Mat15 compute_qk(const Trajectory& traj, double tk, double tk1, const NoiseParams& noise,
                 Quadrature quad = Quadrature::EndCorrected);

/// Same as compute_qk for the single grid interval starting at index j.
Mat15 compute_qk_step(const Trajectory& traj, std::size_t j, const NoiseParams& noise);

/// Locates t on the grid; throws IntervalNotCovered when absent.
std::size_t traj_index(const Trajectory& traj, double t);

}  // namespace ains
