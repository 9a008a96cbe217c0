#include "ains/geometry.hpp"

#include <Eigen/SVD>
#include <cmath>

namespace ains {

Mat3 skew(const Vec3& v) {
  Mat3 S;
  S << 0.0, -v(2), v(1),
       v(2), 0.0, -v(0),
      -v(1), v(0), 0.0;
  return S;
}

Vec3 vee(const Mat3& S) {
  return Vec3(0.5 * (S(2, 1) - S(1, 2)), 0.5 * (S(0, 2) - S(2, 0)),
              0.5 * (S(1, 0) - S(0, 1)));
}

Mat3 so3_exp(const Vec3& phi) {
  const double th = phi.norm();
  const Mat3 W = skew(phi);
  if (th < 1e-8) {
    return Mat3::Identity() + W + 0.5 * W * W;
  }
  return Mat3::Identity() + std::sin(th) / th * W +
         (1.0 - std::cos(th)) / (th * th) * W * W;
}

Vec3 so3_log(const Mat3& R) {
  Eigen::AngleAxisd aa(R);
  return aa.angle() * aa.axis();
}

Mat3 orthonormalize(const Mat3& R) {
  Eigen::JacobiSVD<Mat3> svd(R, Eigen::ComputeFullU | Eigen::ComputeFullV);
  Mat3 out = svd.matrixU() * svd.matrixV().transpose();
  if (out.determinant() < 0) {
    Mat3 U = svd.matrixU();
    U.col(2) *= -1.0;
    out = U * svd.matrixV().transpose();
  }
  return out;
}

UnitQuaternion::UnitQuaternion() : q_(0.0, 0.0, 0.0, 1.0) {}

UnitQuaternion::UnitQuaternion(double x, double y, double z, double w) : q_(x, y, z, w) {
  normalize();
}

UnitQuaternion::UnitQuaternion(const Vec4& xyzw) : q_(xyzw) { normalize(); }

void UnitQuaternion::normalize() {
  q_ /= q_.norm();
  if (q_(3) < 0) q_ = -q_;
}

UnitQuaternion UnitQuaternion::from_rotation(const Mat3& R) {
  // The JPL quaternion of R has the same coefficients as the Hamilton
  // quaternion of R^T.
  Eigen::Quaterniond h(Mat3(R.transpose()));
  return UnitQuaternion(h.x(), h.y(), h.z(), h.w());
}

UnitQuaternion UnitQuaternion::from_error(const Vec3& dtheta) {
  const double th = dtheta.norm();
  if (th < 1e-12) {
    return UnitQuaternion(0.5 * dtheta(0), 0.5 * dtheta(1), 0.5 * dtheta(2), 1.0);
  }
  const Vec3 ax = dtheta / th;
  const double s = std::sin(0.5 * th);
  return UnitQuaternion(s * ax(0), s * ax(1), s * ax(2), std::cos(0.5 * th));
}

Mat3 UnitQuaternion::rotation() const {
  const Vec3 v = q_.head<3>();
  const double w = q_(3);
  return (2.0 * w * w - 1.0) * Mat3::Identity() - 2.0 * w * skew(v) +
         2.0 * v * v.transpose();
}

UnitQuaternion UnitQuaternion::operator*(const UnitQuaternion& p) const {
  const Vec3 qv = q_.head<3>();
  const Vec3 pv = p.q_.head<3>();
  const double qw = q_(3), pw = p.q_(3);
  Vec4 out;
  out.head<3>() = qw * pv + pw * qv - qv.cross(pv);
  out(3) = qw * pw - qv.dot(pv);
  return UnitQuaternion(out);
}

UnitQuaternion UnitQuaternion::inverse() const {
  return UnitQuaternion(-q_(0), -q_(1), -q_(2), q_(3));
}

UnitQuaternion UnitQuaternion::boxplus(const Vec3& dtheta) const {
  return from_error(dtheta) * (*this);
}

void perp_basis(const Vec3& b, Vec3& b1, Vec3& b2) {
  const Vec3 u = b.normalized();
  int k = 0;
  for (int i = 1; i < 3; ++i) {
    if (std::abs(u(i)) < std::abs(u(k))) k = i;
  }
  b1 = u.cross(Vec3::Unit(k)).normalized();
  b2 = u.cross(b1);
}

Mat3 rot_x(double a) {
  Mat3 R;
  const double c = std::cos(a), s = std::sin(a);
  R << 1, 0, 0, 0, c, -s, 0, s, c;
  return R;
}

Mat3 rot_y(double a) {
  Mat3 R;
  const double c = std::cos(a), s = std::sin(a);
  R << c, 0, s, 0, 1, 0, -s, 0, c;
  return R;
}

Mat3 rot_z(double a) {
  Mat3 R;
  const double c = std::cos(a), s = std::sin(a);
  R << c, -s, 0, s, c, 0, 0, 0, 1;
  return R;
}

double wrap_angle(double a) {
  const double w = std::fmod(a + M_PI, 2.0 * M_PI);
  return (w < 0.0 ? w + 2.0 * M_PI : w) - M_PI;
}

}  // namespace ains
