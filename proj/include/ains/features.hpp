#pragma once

#include <Eigen/Core>

#include "ains/geometry.hpp"

namespace ains {

constexpr double kPlaneEpsilon = 1e-6;
constexpr double kLineEpsilon = 1e-9;
constexpr double kElevationEpsilon = 1e-9;

struct PointEuclidean {
  Vec3 p = Vec3::Zero();
};

struct PointSpherical {
  double r = 1.0;
  double theta = 0.0;
  double phi = 0.0;

  Vec3 bearing() const;
  Vec3 position() const { return r * bearing(); }
  /// Horizontal and elevation tangent directions of the bearing.
  Vec3 perp1() const;
  Vec3 perp2() const;
  /// d position / d (r, theta, phi).
  Mat3 jacobian() const;
};

PointSpherical spherical_from_euclidean(const Vec3& p);
Vec3 euclidean_from_spherical(const PointSpherical& s);

/// Pluecker line with normal n = P1 x P2 and direction v = P2 - P1.
struct PluckerLine {
  Vec3 n = Vec3::UnitZ();
  Vec3 v = Vec3::UnitY();
};

struct LineOrthonormal {
  Mat3 R_L = Mat3::Identity();
  Eigen::Matrix2d W_L = Eigen::Matrix2d::Identity();
  double w1 = 1.0;
  double w2 = 1.0;
  double eta = 1.0 / std::sqrt(2.0);

  double phi() const;
};

PluckerLine line_from_endpoints(const Vec3& P1, const Vec3& P2);
LineOrthonormal line_orthonormal(const PluckerLine& L);
PluckerLine line_from_orthonormal(const Mat3& R_L, double w1, double w2);
/// R_L <- exp(-skew(dtheta)) R_L and phi <- phi + dphi, keeping 1/eta.
PluckerLine line_boxplus(const PluckerLine& L, const Vec3& dtheta, double dphi);
/// d(n, v) / d(dtheta, dphi), 6x4.
Eigen::Matrix<double, 6, 4> line_error_jacobian(const PluckerLine& L);
/// Closest point of the line to the origin.
Vec3 line_closest_point(const PluckerLine& L);
void line_check(const PluckerLine& L);

/// Closest-point plane Pi = d n.
struct CpPlane {
  Vec3 Pi = Vec3(0.0, 0.0, 1.0);

  double d() const { return Pi.norm(); }
  Vec3 normal() const { return Pi / Pi.norm(); }
};

/// Hesse plane with unit normal and distance; error state (theta, phi, d).
struct HessePlane {
  Vec3 n = Vec3::UnitX();
  double d = 1.0;

  double theta() const;
  double phi() const;
  Vec3 perp1() const;
  Vec3 perp2() const;
  static HessePlane from_angles(double theta, double phi, double d);
  HessePlane boxplus(const Vec3& delta) const;
};

CpPlane cp_from_hesse(const Vec3& n, double d);
HessePlane hesse_from_cp(const CpPlane& Pi);
/// Rejects planes with |d| <= kPlaneEpsilon.
void plane_check(double d);

}  // namespace ains
