#pragma once

#include <functional>
#include <random>

#include "ains/geometry.hpp"
#include "ains/imu.hpp"
#include "ains/state.hpp"

namespace ains::test {

inline Vec3 randn3(std::mt19937_64& rng, double s = 1.0) {
  std::normal_distribution<double> nd(0.0, s);
  return Vec3(nd(rng), nd(rng), nd(rng));
}

inline double uniform(std::mt19937_64& rng, double a, double b) {
  return std::uniform_real_distribution<double>(a, b)(rng);
}

inline Mat3 random_rotation(std::mt19937_64& rng) {
  return so3_exp(randn3(rng, 1.5));
}

inline ImuState random_state(std::mt19937_64& rng) {
  ImuState x;
  x.q_IG = UnitQuaternion::from_rotation(random_rotation(rng));
  x.b_g = randn3(rng, 0.01);
  x.v = randn3(rng);
  x.b_a = randn3(rng, 0.1);
  x.p = randn3(rng, 2.0);
  return x;
}

/// Global position of a point given in the sensor frame.
inline Vec3 to_global(const ImuState& x, const Vec3& p_local) {
  return x.R().transpose() * p_local + x.p;
}

inline double rel_err(const MatX& A, const MatX& B) {
  const double n = std::max(A.norm(), B.norm());
  return n == 0.0 ? 0.0 : (A - B).norm() / n;
}

/// Central differences of f(x boxplus dx, f boxplus df) over the IMU and
/// feature error coordinates.  `wrap` optionally post-processes each
/// difference (used for angle rows).
inline MatX numeric_jacobian(
    const ImuState& x, const Feature& f,
    const std::function<VecX(const ImuState&, const Feature&)>& h, double step = 1e-6,
    const std::function<VecX(const VecX&)>& wrap = nullptr) {
  const int nf = feature_dim(f);
  const int rows = static_cast<int>(h(x, f).size());
  MatX J(rows, kImuDim + nf);
  for (int i = 0; i < kImuDim + nf; ++i) {
    VecX dp, dm;
    if (i < kImuDim) {
      Vec15 d = Vec15::Zero();
      d(i) = step;
      dp = h(x.boxplus(d), f);
      dm = h(x.boxplus(-d), f);
    } else {
      VecX d = VecX::Zero(nf);
      d(i - kImuDim) = step;
      dp = h(x, feature_boxplus(f, d));
      dm = h(x, feature_boxplus(f, -d));
    }
    VecX diff = dp - dm;
    if (wrap) diff = wrap(diff);
    J.col(i) = diff / (2.0 * step);
  }
  return J;
}

}  // namespace ains::test
