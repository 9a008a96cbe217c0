#include "ains/measurements.hpp"

#include <cmath>

#include "ains/errors.hpp"

namespace ains {

MatX MeasJacobian::full(int n, int feat_offset) const {
  MatX H = MatX::Zero(H_imu.rows(), n);
  H.leftCols(kImuDim) = H_imu;
  if (H_feat.cols() > 0) H.middleCols(feat_offset, H_feat.cols()) = H_feat;
  return H;
}

// ---------------------------------------------------------------- points

int point_meas_dim(const PointSensorModel& model) {
  switch (model.kind) {
    case PointModel::Range: return 1;
    case PointModel::Mono: return 2;
    case PointModel::RangeBearing: return 3;
    case PointModel::Stereo: return 3;
  }
  return 0;
}

const char* point_model_name(PointModel m) {
  switch (m) {
    case PointModel::Range: return "range";
    case PointModel::Mono: return "mono";
    case PointModel::RangeBearing: return "range_bearing";
    case PointModel::Stereo: return "stereo";
  }
  return "unknown";
}

Vec3 point_transform(const ImuState& state, const Vec3& p_G) {
  return state.R() * (p_G - state.p);
}

namespace {

void check_point(const PointSensorModel& model, const Vec3& p) {
  if (model.kind == PointModel::Range) {
    if (!(p.norm() > 0.0)) throw Error(ErrorCode::ZeroRange, "point at the sensor origin");
  } else if (!(p(2) > 0.0)) {
    throw Error(ErrorCode::BehindCamera, "point depth is not positive");
  }
}

}  // namespace

VecX point_measure(const PointSensorModel& model, const Vec3& p) {
  check_point(model, p);
  VecX z(point_meas_dim(model));
  switch (model.kind) {
    case PointModel::Range:
      z(0) = std::sqrt(p.dot(p));
      break;
    case PointModel::Mono:
      z << p(0) / p(2), p(1) / p(2);
      break;
    case PointModel::RangeBearing:
      z << p.norm(), p(0) / p(2), p(1) / p(2);
      break;
    case PointModel::Stereo:
      z << p(0) / p(2), (p(0) - model.baseline) / p(2), p(1) / p(2);
      break;
  }
  return z;
}

VecX point_measure(const PointSensorModel& model, const Vec3& p, const VecX& sigma,
                   std::mt19937_64& rng) {
  VecX z = point_measure(model, p);
  std::normal_distribution<double> nd(0.0, 1.0);
  for (int i = 0; i < z.size(); ++i) z(i) += sigma(i) * nd(rng);
  return z;
}

MatX point_projection_jacobian(const PointSensorModel& model, const Vec3& p) {
  check_point(model, p);
  const double x = p(0), y = p(1), zz = p(2);
  Eigen::Matrix<double, 2, 3> Hb;
  if (model.kind != PointModel::Range) {
    Hb << 1.0 / zz, 0.0, -x / (zz * zz), 0.0, 1.0 / zz, -y / (zz * zz);
  }
  MatX H(point_meas_dim(model), 3);
  switch (model.kind) {
    case PointModel::Range:
      H = p.transpose() / p.norm();
      break;
    case PointModel::Mono:
      H = Hb;
      break;
    case PointModel::RangeBearing:
      H.row(0) = p.transpose() / p.norm();
      H.bottomRows(2) = Hb;
      break;
    case PointModel::Stereo:
      H.row(0) = Hb.row(0);
      H.row(1) << 1.0 / zz, 0.0, -(x - model.baseline) / (zz * zz);
      H.row(2) = Hb.row(1);
      break;
  }
  return H;
}

MeasJacobian point_jacobian(const PointSensorModel& model, const ImuState& state,
                            const Vec3& p_G) {
  const Mat3 R = state.R();
  const Vec3 pl = R * (p_G - state.p);
  const MatX Hp = point_projection_jacobian(model, pl);
  MeasJacobian J;
  J.H_imu = MatX::Zero(Hp.rows(), kImuDim);
  J.H_imu.middleCols<3>(kTh) = Hp * skew(pl);
  J.H_imu.middleCols<3>(kPos) = -Hp * R;
  J.H_feat = Hp * R;
  return J;
}

MeasJacobian point_jacobian_spherical(const PointSensorModel& model, const ImuState& state,
                                      const PointSpherical& s) {
  MeasJacobian J = point_jacobian(model, state, s.position());
  J.H_feat = J.H_feat * s.jacobian();
  return J;
}

Eigen::Matrix<double, 2, 3> bearing_perp_rows(const Vec3& b) {
  Vec3 b1, b2;
  perp_basis(b, b1, b2);
  Eigen::Matrix<double, 2, 3> B;
  B.row(0) = b1.transpose();
  B.row(1) = b2.transpose();
  return B;
}

Eigen::Matrix2d mono_noise_shaping(const Vec3& p_local) {
  const Eigen::Matrix<double, 2, 3> B = bearing_perp_rows(p_local);
  return p_local(2) * B.leftCols<2>();
}

// ---------------------------------------------------------------- lines

Mat3 line_projection_matrix(const CameraIntrinsics& c) {
  Mat3 K;
  K << c.f2, 0.0, 0.0, 0.0, c.f1, 0.0, -c.f2 * c.c1, -c.f1 * c.c2, c.f1 * c.f2;
  return K;
}

Vec3 project_pixel(const CameraIntrinsics& c, const Vec3& p) {
  if (!(std::abs(p(2)) > 1e-12)) {
    throw Error(ErrorCode::DegenerateProjection, "point on the image plane at infinity");
  }
  return Vec3(c.f1 * p(0) / p(2) + c.c1, c.f2 * p(1) / p(2) + c.c2, 1.0);
}

PluckerLine line_transform_to_local(const ImuState& state, const PluckerLine& L) {
  const Mat3 R = state.R();
  PluckerLine out;
  out.n = R * (L.n - state.p.cross(L.v));
  out.v = R * L.v;
  return out;
}

namespace {

double line_norm(const Vec3& l) {
  const double ln2 = l(0) * l(0) + l(1) * l(1);
  if (!(ln2 > 1e-24 * std::max(1.0, l.squaredNorm()))) {
    throw Error(ErrorCode::DegenerateProjection, "projected line has no direction");
  }
  return std::sqrt(ln2);
}

}  // namespace

Vec2 line_project_and_measure(const Mat3& K, const PluckerLine& L_local,
                              const LineObservation& obs) {
  const Vec3 l = K * L_local.n;
  const double ln = line_norm(l);
  return Vec2(obs.xs.dot(l), obs.xe.dot(l)) / ln;
}

Eigen::Matrix<double, 2, 3> line_residual_jacobian(const Vec3& l, const LineObservation& obs) {
  const double ln = line_norm(l);
  const double ln2 = ln * ln;
  const double e1 = obs.xs.dot(l), e2 = obs.xe.dot(l);
  Eigen::Matrix<double, 2, 3> H;
  H << obs.xs(0) - l(0) * e1 / ln2, obs.xs(1) - l(1) * e1 / ln2, 1.0,
       obs.xe(0) - l(0) * e2 / ln2, obs.xe(1) - l(1) * e2 / ln2, 1.0;
  return H / ln;
}

namespace {

// d In / d x and d Iv / d x in blocks (dtheta, p, line error).
struct LineLocalJac {
  Mat3 n_th, n_p, v_th;
  Eigen::Matrix<double, 3, 4> n_f, v_f;
  Vec3 In, Iv;
};

LineLocalJac line_local_jacobian(const ImuState& state, const PluckerLine& L) {
  line_check(L);
  const Mat3 R = state.R();
  const Vec3& P = state.p;
  const double w1 = L.n.norm(), w2 = L.v.norm();
  LineLocalJac J;
  J.In = R * (L.n - P.cross(L.v));
  J.Iv = R * L.v;
  J.n_th = skew(J.In);
  J.n_p = R * skew(L.v);
  J.v_th = skew(J.Iv);
  J.n_f.leftCols<3>() = R * (skew(L.n) - skew(P) * skew(L.v));
  J.n_f.col(3) = -R * ((w2 / w1) * L.n + (w1 / w2) * P.cross(L.v));
  J.v_f.leftCols<3>() = R * skew(L.v);
  J.v_f.col(3) = R * ((w1 / w2) * L.v);
  return J;
}

}  // namespace

MeasJacobian line_jacobian(const ImuState& state, const PluckerLine& L_G,
                           const CameraIntrinsics& cam, const LineObservation& obs) {
  const LineLocalJac J = line_local_jacobian(state, L_G);
  const Mat3 K = line_projection_matrix(cam);
  const Eigen::Matrix<double, 2, 3> HlK = line_residual_jacobian(K * J.In, obs) * K;
  MeasJacobian out;
  out.H_imu = MatX::Zero(2, kImuDim);
  out.H_imu.middleCols<3>(kTh) = HlK * J.n_th;
  out.H_imu.middleCols<3>(kPos) = HlK * J.n_p;
  out.H_feat = HlK * J.n_f;
  return out;
}

Vec4 line_direct_measure(const ImuState& state, const PluckerLine& L_G, const Vec3& v_m) {
  line_check(L_G);
  const PluckerLine Ll = line_transform_to_local(state, L_G);
  Vec4 z;
  z.head<3>() = v_m.cross(Ll.v);
  z(3) = Ll.n.norm() / Ll.v.norm();
  return z;
}

MeasJacobian line_direct_jacobian(const ImuState& state, const PluckerLine& L_G,
                                  const Vec3& v_m) {
  const LineLocalJac J = line_local_jacobian(state, L_G);
  const double nn = J.In.norm(), nv = J.Iv.norm();
  const Mat3 Sv = skew(v_m);
  const Eigen::RowVector3d dd_n = J.In.transpose() / (nn * nv);
  const Eigen::RowVector3d dd_v = -nn / (nv * nv * nv) * J.Iv.transpose();
  MeasJacobian out;
  out.H_imu = MatX::Zero(4, kImuDim);
  out.H_imu.block<3, 3>(0, kTh) = Sv * J.v_th;
  out.H_imu.block<1, 3>(3, kTh) = dd_n * J.n_th + dd_v * J.v_th;
  out.H_imu.block<1, 3>(3, kPos) = dd_n * J.n_p;
  out.H_feat = MatX::Zero(4, 4);
  out.H_feat.topRows<3>() = Sv * J.v_f;
  out.H_feat.row(3) = dd_n * J.n_f + dd_v * J.v_f;
  return out;
}

// ---------------------------------------------------------------- planes

CpPlane plane_transform_to_local(const ImuState& state, const CpPlane& Pi_G) {
  const double d = Pi_G.d();
  plane_check(d);
  const Vec3 n = Pi_G.Pi / d;
  const double dl = d - state.p.dot(n);
  plane_check(dl);
  CpPlane out;
  out.Pi = dl * (state.R() * n);
  return out;
}

MeasJacobian plane_jacobian_cp(const ImuState& state, const CpPlane& Pi_G) {
  const double d = Pi_G.d();
  plane_check(d);
  const Vec3 n = Pi_G.Pi / d;
  const Vec3& P = state.p;
  const double s = d - n.dot(P);
  plane_check(s);
  const Mat3 R = state.R();
  MeasJacobian J;
  J.H_imu = MatX::Zero(3, kImuDim);
  J.H_imu.middleCols<3>(kTh) = s * skew(R * n);
  J.H_imu.middleCols<3>(kPos) = -R * n * n.transpose();
  J.H_feat = R *
             (s * Mat3::Identity() - n * P.transpose() + 2.0 * n.dot(P) * n * n.transpose()) /
             d;
  return J;
}

namespace {

Eigen::Matrix<double, 3, 4> hesse_angle_jacobian(const Vec3& n) {
  const double r2 = n(0) * n(0) + n(1) * n(1);
  if (!(r2 > 1e-12)) {
    throw Error(ErrorCode::SingularElevation, "local plane normal parallel to z");
  }
  const double r = std::sqrt(r2);
  Eigen::Matrix<double, 3, 4> H;
  H << -n(1) / r2, n(0) / r2, 0.0, 0.0,
       -n(0) * n(2) / r, -n(1) * n(2) / r, r, 0.0,
       0.0, 0.0, 0.0, 1.0;
  return H;
}

void check_hesse_global(const HessePlane& plane) {
  if (!(std::hypot(plane.n(0), plane.n(1)) > 1e-6)) {
    throw Error(ErrorCode::SingularElevation, "global plane normal parallel to z");
  }
}

}  // namespace

Vec3 plane_measure_hesse(const ImuState& state, const HessePlane& plane) {
  check_hesse_global(plane);
  const Vec3 n = state.R() * plane.n;
  const double dl = plane.d - plane.n.dot(state.p);
  plane_check(dl);
  hesse_angle_jacobian(n);
  return Vec3(std::atan2(n(1), n(0)), std::atan2(n(2), std::hypot(n(0), n(1))), dl);
}

MeasJacobian plane_jacobian_hesse(const ImuState& state, const HessePlane& plane) {
  check_hesse_global(plane);
  const Mat3 R = state.R();
  const Vec3 In = R * plane.n;
  plane_check(plane.d - plane.n.dot(state.p));
  const Eigen::Matrix<double, 3, 4> HP = hesse_angle_jacobian(In);
  const double cphi = std::cos(plane.phi());
  const Vec3 t1 = plane.perp1() * cphi, t2 = plane.perp2();
  Eigen::Matrix<double, 4, 15> dl = Eigen::Matrix<double, 4, 15>::Zero();
  dl.block<3, 3>(0, kTh) = skew(In);
  dl.block<1, 3>(3, kPos) = -plane.n.transpose();
  Eigen::Matrix<double, 4, 3> df = Eigen::Matrix<double, 4, 3>::Zero();
  df.block<3, 1>(0, 0) = R * t1;
  df.block<3, 1>(0, 1) = R * t2;
  df(3, 0) = -state.p.dot(t1);
  df(3, 1) = -state.p.dot(t2);
  df(3, 2) = 1.0;
  MeasJacobian J;
  J.H_imu = HP * dl;
  J.H_feat = HP * df;
  return J;
}

// ---------------------------------------------------------------- global

VecX global_measure(const GlobalMeasModel& model, const ImuState& state) {
  switch (model.kind) {
    case GlobalKind::PosX: return state.p.segment<1>(0);
    case GlobalKind::PosY: return state.p.segment<1>(1);
    case GlobalKind::PosZ: return state.p.segment<1>(2);
    case GlobalKind::Orientation: return state.R() * model.N_n;
  }
  return VecX();
}

MeasJacobian global_jacobian(const GlobalMeasModel& model, const ImuState& state) {
  MeasJacobian J;
  if (model.kind == GlobalKind::Orientation) {
    J.H_imu = MatX::Zero(3, kImuDim);
    J.H_imu.middleCols<3>(kTh) = skew(state.R() * model.N_n);
  } else {
    const int axis = model.kind == GlobalKind::PosX ? 0 : model.kind == GlobalKind::PosY ? 1 : 2;
    J.H_imu = MatX::Zero(1, kImuDim);
    J.H_imu(0, kPos + axis) = 1.0;
  }
  J.H_feat = MatX::Zero(J.H_imu.rows(), 0);
  return J;
}

// ---------------------------------------------------------------- dispatch

int meas_dim(const SensorSuite& s, const Feature& f) {
  switch (feature_kind(f)) {
    case FeatureKind::Point:
    case FeatureKind::SphericalPoint:
      return point_meas_dim(s.point);
    case FeatureKind::Line:
      return s.line == LineModel::Projective ? 2 : 3;
    case FeatureKind::CpPlane:
    case FeatureKind::HessePlane:
      return 3;
  }
  return 0;
}

namespace {

// Direct line residual reduced to the two directions orthogonal to v_m plus
// the distance row, which keeps the noise covariance non-singular.
Eigen::Matrix<double, 3, 4> direct_reduction(const Vec3& v_m) {
  Eigen::Matrix<double, 3, 4> T = Eigen::Matrix<double, 3, 4>::Zero();
  T.block<2, 3>(0, 0) = bearing_perp_rows(v_m);
  T(2, 3) = 1.0;
  return T;
}

}  // namespace

VecX predict_measurement(const SensorSuite& s, const ImuState& x, const Feature& f,
                         const FeatureMeasurement& aux) {
  switch (feature_kind(f)) {
    case FeatureKind::Point:
    case FeatureKind::SphericalPoint:
      return point_measure(s.point, point_transform(x, point_position(f)));
    case FeatureKind::Line: {
      const auto& L = std::get<PluckerLine>(f);
      if (s.line == LineModel::Projective) {
        return line_project_and_measure(line_projection_matrix(s.cam),
                                        line_transform_to_local(x, L), aux.obs);
      }
      return direct_reduction(aux.v_m) * line_direct_measure(x, L, aux.v_m);
    }
    case FeatureKind::CpPlane:
      return plane_transform_to_local(x, std::get<CpPlane>(f)).Pi;
    case FeatureKind::HessePlane:
      return plane_measure_hesse(x, std::get<HessePlane>(f));
  }
  return VecX();
}

MeasJacobian measurement_jacobian(const SensorSuite& s, const ImuState& x, const Feature& f,
                                  const FeatureMeasurement& aux) {
  switch (feature_kind(f)) {
    case FeatureKind::Point:
      return point_jacobian(s.point, x, std::get<PointEuclidean>(f).p);
    case FeatureKind::SphericalPoint:
      return point_jacobian_spherical(s.point, x, std::get<PointSpherical>(f));
    case FeatureKind::Line: {
      const auto& L = std::get<PluckerLine>(f);
      if (s.line == LineModel::Projective) return line_jacobian(x, L, s.cam, aux.obs);
      MeasJacobian J = line_direct_jacobian(x, L, aux.v_m);
      const auto T = direct_reduction(aux.v_m);
      J.H_imu = T * J.H_imu;
      J.H_feat = T * J.H_feat;
      return J;
    }
    case FeatureKind::CpPlane:
      return plane_jacobian_cp(x, std::get<CpPlane>(f));
    case FeatureKind::HessePlane:
      return plane_jacobian_hesse(x, std::get<HessePlane>(f));
  }
  return MeasJacobian();
}

namespace {

VecX point_sigmas(const SensorSuite& s) {
  const double sb = s.noise.pixel_sigma / s.cam.f1;
  switch (s.point.kind) {
    case PointModel::Range: return VecX::Constant(1, s.noise.range_sigma);
    case PointModel::Mono: return VecX::Constant(2, sb);
    case PointModel::RangeBearing: return Vec3(s.noise.range_sigma, sb, sb);
    case PointModel::Stereo: return VecX::Constant(3, sb);
  }
  return VecX();
}

}  // namespace

MatX measurement_noise(const SensorSuite& s, const Feature& f) {
  switch (feature_kind(f)) {
    case FeatureKind::Point:
    case FeatureKind::SphericalPoint: {
      const VecX sg = point_sigmas(s);
      return sg.array().square().matrix().asDiagonal();
    }
    case FeatureKind::Line: {
      if (s.line == LineModel::Projective) {
        return Eigen::Matrix2d::Identity() * s.noise.pixel_sigma * s.noise.pixel_sigma;
      }
      const double w2 = std::get<PluckerLine>(f).v.norm();
      const double sd = w2 * s.noise.line_dir_sigma;
      return Vec3(sd * sd, sd * sd, s.noise.line_dist_sigma * s.noise.line_dist_sigma)
          .asDiagonal();
    }
    case FeatureKind::CpPlane:
      return Mat3::Identity() * s.noise.plane_sigma * s.noise.plane_sigma;
    case FeatureKind::HessePlane: {
      const double a = s.noise.plane_angle_sigma, d = s.noise.plane_sigma;
      return Vec3(a * a, a * a, d * d).asDiagonal();
    }
  }
  return MatX();
}

std::optional<FeatureMeasurement> simulate_feature_measurement(const SensorSuite& s,
                                                               const ImuState& truth,
                                                               const Feature& f,
                                                               const LineAnchors& anchors,
                                                               std::mt19937_64* rng) {
  std::normal_distribution<double> nd(0.0, 1.0);
  auto gauss = [&](double sigma) { return rng ? sigma * nd(*rng) : 0.0; };
  const double tan_fov = std::tan(s.fov_half_angle);
  auto in_view = [&](const Vec3& p) {
    return p(2) > s.min_depth && std::abs(p(0)) < tan_fov * p(2) &&
           std::abs(p(1)) < tan_fov * p(2);
  };
  FeatureMeasurement m;
  switch (feature_kind(f)) {
    case FeatureKind::Point:
    case FeatureKind::SphericalPoint: {
      const Vec3 pl = point_transform(truth, point_position(f));
      if (!in_view(pl)) return std::nullopt;
      const VecX sg = point_sigmas(s);
      m.z = point_measure(s.point, pl);
      for (int i = 0; i < m.z.size(); ++i) m.z(i) += gauss(sg(i));
      return m;
    }
    case FeatureKind::Line: {
      const auto& L = std::get<PluckerLine>(f);
      if (s.line == LineModel::Projective) {
        const Vec3 a = point_transform(truth, anchors.a);
        const Vec3 b = point_transform(truth, anchors.b);
        if (!in_view(a) || !in_view(b)) return std::nullopt;
        m.obs.xs = project_pixel(s.cam, a);
        m.obs.xe = project_pixel(s.cam, b);
        if ((m.obs.xs - m.obs.xe).head<2>().norm() < 5.0) return std::nullopt;
        for (int i = 0; i < 2; ++i) {
          m.obs.xs(i) += gauss(s.noise.pixel_sigma);
          m.obs.xe(i) += gauss(s.noise.pixel_sigma);
        }
        m.z = Vec2::Zero();
        return m;
      }
      const PluckerLine Ll = line_transform_to_local(truth, L);
      Vec3 b1, b2;
      const Vec3 ve = Ll.v.normalized();
      perp_basis(ve, b1, b2);
      m.v_m = (ve + gauss(s.noise.line_dir_sigma) * b1 + gauss(s.noise.line_dir_sigma) * b2)
                  .normalized();
      m.z = Vec3(0.0, 0.0, Ll.n.norm() / Ll.v.norm() + gauss(s.noise.line_dist_sigma));
      return m;
    }
    case FeatureKind::CpPlane: {
      const auto& P = std::get<CpPlane>(f);
      const double dl = P.d() - truth.p.dot(P.normal());
      if (std::abs(dl) < s.min_depth) return std::nullopt;
      m.z = plane_transform_to_local(truth, P).Pi;
      for (int i = 0; i < 3; ++i) m.z(i) += gauss(s.noise.plane_sigma);
      return m;
    }
    case FeatureKind::HessePlane: {
      const auto& P = std::get<HessePlane>(f);
      const double dl = P.d - truth.p.dot(P.n);
      if (std::abs(dl) < s.min_depth) return std::nullopt;
      const Vec3 In = truth.R() * P.n;
      if (std::hypot(In(0), In(1)) < 1e-3) return std::nullopt;
      m.z = plane_measure_hesse(truth, P);
      m.z(0) += gauss(s.noise.plane_angle_sigma);
      m.z(1) += gauss(s.noise.plane_angle_sigma);
      m.z(2) += gauss(s.noise.plane_sigma);
      return m;
    }
  }
  return std::nullopt;
}

}  // namespace ains
