#pragma once

#include <Eigen/Core>
#include <Eigen/Geometry>

namespace ains {

using Vec2 = Eigen::Vector2d;
using Vec3 = Eigen::Vector3d;
using Vec4 = Eigen::Vector4d;
using Mat3 = Eigen::Matrix3d;
using VecX = Eigen::VectorXd;
using MatX = Eigen::MatrixXd;

constexpr double kGravity = 9.81;

/// Gravity expressed in the global frame, z axis up.
inline Vec3 gravity() { return Vec3(0.0, 0.0, -kGravity); }

Mat3 skew(const Vec3& v);
Vec3 vee(const Mat3& S);

/// Rodrigues exponential exp(skew(phi)).
Mat3 so3_exp(const Vec3& phi);
Vec3 so3_log(const Mat3& R);

/// Wraps an angle into [-pi, pi).
double wrap_angle(double a);

/// Projects a nearly orthogonal matrix back onto SO(3).
Mat3 orthonormalize(const Mat3& R);

/// Unit quaternion in JPL convention: scalar last, rotation() maps global
/// coordinates into the local frame.
class UnitQuaternion {
 public:
  UnitQuaternion();
  UnitQuaternion(double x, double y, double z, double w);
  explicit UnitQuaternion(const Vec4& xyzw);

  static UnitQuaternion identity() { return UnitQuaternion(); }
  static UnitQuaternion from_rotation(const Mat3& R);
  /// Quaternion whose rotation matrix is exp(-skew(dtheta)).
  static UnitQuaternion from_error(const Vec3& dtheta);

  double x() const { return q_(0); }
  double y() const { return q_(1); }
  double z() const { return q_(2); }
  double w() const { return q_(3); }
  const Vec4& coeffs() const { return q_; }

  Mat3 rotation() const;
  UnitQuaternion operator*(const UnitQuaternion& p) const;
  UnitQuaternion inverse() const;
  /// Left error update: R <- exp(-skew(dtheta)) R.
  UnitQuaternion boxplus(const Vec3& dtheta) const;

 private:
  void normalize();
  Vec4 q_;
};

/// Orthonormal completion of a direction.  The first vector is b crossed with
/// the canonical axis of smallest |b_i|, the second is b x b1.
void perp_basis(const Vec3& b, Vec3& b1, Vec3& b2);

/// Rotation about a single axis, body-to-parent sense.
Mat3 rot_x(double a);
Mat3 rot_y(double a);
Mat3 rot_z(double a);

}  // namespace ains
