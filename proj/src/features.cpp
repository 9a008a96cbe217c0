#include "ains/features.hpp"

#include <cmath>

#include "ains/errors.hpp"

namespace ains {

Vec3 PointSpherical::bearing() const {
  return Vec3(std::cos(theta) * std::cos(phi), std::sin(theta) * std::cos(phi),
              std::sin(phi));
}

Vec3 PointSpherical::perp1() const { return Vec3(-std::sin(theta), std::cos(theta), 0.0); }

Vec3 PointSpherical::perp2() const {
  return Vec3(-std::cos(theta) * std::sin(phi), -std::sin(theta) * std::sin(phi),
              std::cos(phi));
}

Mat3 PointSpherical::jacobian() const {
  Mat3 J;
  J.col(0) = bearing();
  J.col(1) = r * std::cos(phi) * perp1();
  J.col(2) = r * perp2();
  return J;
}

PointSpherical spherical_from_euclidean(const Vec3& p) {
  const double r = p.norm();
  const double rho = std::hypot(p(0), p(1));
  if (r <= 0.0 || rho <= kElevationEpsilon * r) {
    throw Error(ErrorCode::SingularElevation, "elevation at +-pi/2 or zero range");
  }
  PointSpherical s;
  s.r = r;
  s.theta = std::atan2(p(1), p(0));
  s.phi = std::atan2(p(2), rho);
  return s;
}

Vec3 euclidean_from_spherical(const PointSpherical& s) { return s.position(); }

double LineOrthonormal::phi() const { return std::atan2(w2, w1); }

void line_check(const PluckerLine& L) {
  if (!(L.n.norm() > kLineEpsilon) || !(L.v.norm() > kLineEpsilon)) {
    throw Error(ErrorCode::DegenerateLine, "line normal or direction vanishes");
  }
}

PluckerLine line_from_endpoints(const Vec3& P1, const Vec3& P2) {
  PluckerLine L;
  L.n = P1.cross(P2);
  L.v = P2 - P1;
  line_check(L);
  return L;
}

LineOrthonormal line_orthonormal(const PluckerLine& L) {
  line_check(L);
  LineOrthonormal o;
  o.w1 = L.n.norm();
  o.w2 = L.v.norm();
  const Vec3 ne = L.n / o.w1;
  const Vec3 ve = L.v / o.w2;
  const Vec3 c = L.n.cross(L.v);
  o.R_L.col(0) = ne;
  o.R_L.col(1) = ve;
  o.R_L.col(2) = c / c.norm();
  const double s = std::sqrt(o.w1 * o.w1 + o.w2 * o.w2);
  o.eta = 1.0 / s;
  o.W_L << o.w1, -o.w2, o.w2, o.w1;
  o.W_L /= s;
  return o;
}

PluckerLine line_from_orthonormal(const Mat3& R_L, double w1, double w2) {
  PluckerLine L;
  L.n = w1 * R_L.col(0);
  L.v = w2 * R_L.col(1);
  return L;
}

PluckerLine line_boxplus(const PluckerLine& L, const Vec3& dtheta, double dphi) {
  const LineOrthonormal o = line_orthonormal(L);
  if (dtheta.isZero(0.0) && dphi == 0.0) return L;
  const Mat3 R = so3_exp(-dtheta) * o.R_L;
  const double scale = 1.0 / o.eta;
  const double phi = o.phi() + dphi;
  return line_from_orthonormal(R, scale * std::cos(phi), scale * std::sin(phi));
}

Eigen::Matrix<double, 6, 4> line_error_jacobian(const PluckerLine& L) {
  const double w1 = L.n.norm(), w2 = L.v.norm();
  Eigen::Matrix<double, 6, 4> J;
  J.block<3, 3>(0, 0) = skew(L.n);
  J.block<3, 3>(3, 0) = skew(L.v);
  J.block<3, 1>(0, 3) = -(w2 / w1) * L.n;
  J.block<3, 1>(3, 3) = (w1 / w2) * L.v;
  return J;
}

Vec3 line_closest_point(const PluckerLine& L) { return L.v.cross(L.n) / L.v.squaredNorm(); }

double HessePlane::theta() const { return std::atan2(n(1), n(0)); }

double HessePlane::phi() const { return std::atan2(n(2), std::hypot(n(0), n(1))); }

Vec3 HessePlane::perp1() const {
  const double th = theta();
  return Vec3(-std::sin(th), std::cos(th), 0.0);
}

Vec3 HessePlane::perp2() const {
  const double th = theta(), ph = phi();
  return Vec3(-std::cos(th) * std::sin(ph), -std::sin(th) * std::sin(ph), std::cos(ph));
}

HessePlane HessePlane::from_angles(double theta, double phi, double d) {
  HessePlane h;
  h.n = Vec3(std::cos(theta) * std::cos(phi), std::sin(theta) * std::cos(phi), std::sin(phi));
  h.d = d;
  return h;
}

HessePlane HessePlane::boxplus(const Vec3& delta) const {
  if (std::hypot(n(0), n(1)) <= kElevationEpsilon) {
    throw Error(ErrorCode::SingularElevation, "Hesse normal parallel to z");
  }
  return from_angles(theta() + delta(0), phi() + delta(1), d + delta(2));
}

void plane_check(double d) {
  if (!(std::abs(d) > kPlaneEpsilon)) {
    throw Error(ErrorCode::DegeneratePlane, "plane passes through the origin");
  }
}

CpPlane cp_from_hesse(const Vec3& n, double d) {
  plane_check(d);
  CpPlane p;
  p.Pi = d * n.normalized();
  return p;
}

HessePlane hesse_from_cp(const CpPlane& Pi) {
  const double d = Pi.Pi.norm();
  plane_check(d);
  HessePlane h;
  h.n = Pi.Pi / d;
  h.d = d;
  return h;
}

}  // namespace ains
