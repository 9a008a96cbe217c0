#include "ains/filter.hpp"

#include <cmath>

#include <Eigen/Cholesky>
#include <Eigen/Eigenvalues>
#include <Eigen/QR>

#include "ains/errors.hpp"

namespace ains {

const char* mode_name(LinearizationMode m) {
  return m == LinearizationMode::Standard ? "standard" : "ideal";
}

LinearizationMode mode_from_name(const std::string& name) {
  if (name == "standard") return LinearizationMode::Standard;
  if (name == "ideal") return LinearizationMode::Ideal;
  throw Error(ErrorCode::InvalidConfig, "unknown filter mode '" + name + "'");
}

ImuState Clone::as_imu() const {
  ImuState x;
  x.q_IG = q_IG;
  x.p = p;
  return x;
}

int HybridState::dim() const { return features_begin() + features_dim(features); }

int HybridState::feature_offset(std::size_t i) const {
  int off = features_begin();
  for (std::size_t j = 0; j < i; ++j) off += feature_dim(features[j]);
  return off;
}

int HybridState::find_feature(int id) const {
  for (std::size_t i = 0; i < feature_ids.size(); ++i) {
    if (feature_ids[i] == id) return static_cast<int>(i);
  }
  return -1;
}

int HybridState::find_clone(int id) const {
  for (std::size_t i = 0; i < clones.size(); ++i) {
    if (clones[i].id == id) return static_cast<int>(i);
  }
  return -1;
}

void enforce_psd(MatX& P) {
  P = (0.5 * (P + P.transpose())).eval();
  if (P.size() == 0) return;
  Eigen::SelfAdjointEigenSolver<MatX> es(P, Eigen::EigenvaluesOnly);
  const double lo = es.eigenvalues().minCoeff();
  if (!std::isfinite(lo) || lo < -1e-9) {
    throw Error(ErrorCode::CovarianceNotPSD, "covariance min eigenvalue " + std::to_string(lo));
  }
}

// ---------------------------------------------------------------- propagation

void ekf_propagate(HybridState& s, const std::vector<ImuSample>& samples, std::size_t first,
                   std::size_t last, const NoiseParams& noise, LinearizationMode mode,
                   const TruthView& truth) {
  if (last >= samples.size() || last < first) {
    throw Error(ErrorCode::IntervalNotCovered, "propagation interval outside the samples");
  }
  if (last == first) return;
  Trajectory seg;
  seg.reserve(last - first + 1);
  ImuState x = s.imu;
  if (mode == LinearizationMode::Standard) {
    for (std::size_t j = first; j <= last; ++j) {
      seg.push_back({samples[j].t, x, samples[j]});
      if (j < last) x = propagate_mean(x, samples, j, j + 1);
    }
  } else {
    if (!truth.traj || truth.traj->size() <= last) {
      throw Error(ErrorCode::IntervalNotCovered, "ideal mode needs the true trajectory");
    }
    for (std::size_t j = first; j <= last; ++j) seg.push_back((*truth.traj)[j]);
    x = propagate_mean(x, samples, first, last);
  }

  PhiIntegrator integ(seg, 0);
  while (integ.index() + 1 < seg.size()) integ.step();
  const Mat15 Phi = integ.phi15();
  const Mat15 Q = compute_qk(seg, seg.front().t, seg.back().t, noise);

  const int n = s.dim();
  MatX& P = s.P;
  P.topLeftCorner<kImuDim, kImuDim>() =
      Phi * P.topLeftCorner<kImuDim, kImuDim>() * Phi.transpose() + Q;
  if (n > kImuDim) {
    const MatX cross = Phi * P.topRightCorner(kImuDim, n - kImuDim);
    P.topRightCorner(kImuDim, n - kImuDim) = cross;
    P.bottomLeftCorner(n - kImuDim, kImuDim) = cross.transpose();
  }
  enforce_psd(P);
  s.imu = x;
}

// ---------------------------------------------------------------- update

VecX measurement_residual(const SensorSuite& sensors, const ImuState& x, const Feature& f,
                          const FeatureMeasurement& m) {
  VecX r = m.z - predict_measurement(sensors, x, f, m);
  if (feature_kind(f) == FeatureKind::HessePlane) r(0) = wrap_angle(r(0));
  return r;
}

namespace {

void apply_correction(HybridState& s, const VecX& dx) {
  s.imu = s.imu.boxplus(dx.head<kImuDim>());
  for (std::size_t i = 0; i < s.clones.size(); ++i) {
    const int o = s.clone_offset(i);
    s.clones[i].q_IG = s.clones[i].q_IG.boxplus(dx.segment<3>(o));
    s.clones[i].p += dx.segment<3>(o + 3);
  }
  int o = s.features_begin();
  for (auto& f : s.features) {
    const int d = feature_dim(f);
    f = feature_boxplus(f, dx.segment(o, d));
    o += d;
  }
}

}  // namespace

void kalman_update(HybridState& s, const MatX& H, const VecX& r, const MatX& R) {
  if (r.size() == 0) return;
  const int n = s.dim();
  if (H.cols() != n || H.rows() != r.size() || R.rows() != r.size()) {
    throw Error(ErrorCode::DimensionMismatch, "update system does not match the state");
  }
  const MatX PHt = s.P * H.transpose();
  MatX S = H * PHt + R;
  S = (0.5 * (S + S.transpose())).eval();
  Eigen::LLT<MatX> llt(S);
  if (llt.info() != Eigen::Success || !S.allFinite()) {
    throw Error(ErrorCode::SingularInnovation, "innovation covariance not positive definite");
  }
  const MatX K = llt.solve(PHt.transpose()).transpose();
  const MatX IKH = MatX::Identity(n, n) - K * H;
  s.P = IKH * s.P * IKH.transpose() + K * R * K.transpose();
  enforce_psd(s.P);
  apply_correction(s, K * r);
}

void ekf_update(HybridState& s, const FeatureObservations& obs, const SensorSuite& sensors,
                LinearizationMode mode, const ImuState* truth_imu, const TruthView& truth) {
  const bool ideal = mode == LinearizationMode::Ideal;
  if (ideal && (!truth_imu || !truth.features)) {
    throw Error(ErrorCode::InvalidSpec, "ideal update needs the true state");
  }
  const int n = s.dim();
  struct Row {
    MatX H;
    VecX r;
    MatX R;
  };
  std::vector<Row> rows;
  int total = 0;
  for (const FeatureMeasurement& m : obs) {
    const int i = s.find_feature(m.feature);
    if (i < 0) continue;
    const Feature& f_lin = ideal ? (*truth.features)[m.feature] : s.features[i];
    const ImuState& x_lin = ideal ? *truth_imu : s.imu;
    Row row;
    try {
      row.r = measurement_residual(sensors, s.imu, s.features[i], m);
      const MeasJacobian J = measurement_jacobian(sensors, x_lin, f_lin, m);
      row.H = J.full(n, s.feature_offset(i));
      row.R = measurement_noise(sensors, f_lin);
    } catch (const Error&) {
      continue;  // not predictable from the current estimate
    }
    total += static_cast<int>(row.r.size());
    rows.push_back(std::move(row));
  }
  if (total == 0) return;
  MatX H(total, n);
  VecX r(total);
  MatX R = MatX::Zero(total, total);
  int at = 0;
  for (const Row& row : rows) {
    const auto k = row.r.size();
    H.middleRows(at, k) = row.H;
    r.segment(at, k) = row.r;
    R.block(at, at, k, k) = row.R;
    at += static_cast<int>(k);
  }
  kalman_update(s, H, r, R);
}

// ---------------------------------------------------------------- MSCKF

void msckf_augment(HybridState& s, int id, double t, std::size_t window) {
  const int n = s.dim();
  const int at = s.features_begin();
  MatX J = MatX::Zero(6, n);
  J.block<3, 3>(0, kTh).setIdentity();
  J.block<3, 3>(3, kPos).setIdentity();
  MatX Pa(n + 6, n + 6);
  const MatX JP = J * s.P;
  Pa.topLeftCorner(n, n) = s.P;
  Pa.topRightCorner(n, 6) = JP.transpose();
  Pa.bottomLeftCorner(6, n) = JP;
  Pa.bottomRightCorner(6, 6) = JP * J.transpose();
  // Move the new block in front of the features.
  std::vector<int> order;
  order.reserve(n + 6);
  for (int i = 0; i < at; ++i) order.push_back(i);
  for (int i = 0; i < 6; ++i) order.push_back(n + i);
  for (int i = at; i < n; ++i) order.push_back(i);
  s.P = Pa(order, order);
  s.clones.push_back({id, t, s.imu.q_IG, s.imu.p});
  while (s.clones.size() > window) marginalize_clone(s, 0);
}

void marginalize_clone(HybridState& s, std::size_t i) {
  if (i >= s.clones.size()) throw Error(ErrorCode::DimensionMismatch, "no such clone");
  const int n = s.dim();
  const int o = s.clone_offset(i);
  std::vector<int> keep;
  keep.reserve(n - 6);
  for (int k = 0; k < n; ++k) {
    if (k < o || k >= o + 6) keep.push_back(k);
  }
  s.P = MatX(s.P(keep, keep));
  s.clones.erase(s.clones.begin() + static_cast<std::ptrdiff_t>(i));
}

ProjectedSystem nullspace_project(const MatX& Hx, const MatX& Hf, const VecX& r, const MatX& R) {
  const auto m = Hf.rows(), k = Hf.cols();
  if (m <= k) throw Error(ErrorCode::RankDeficientHf, "track too short for its feature");
  Eigen::ColPivHouseholderQR<MatX> qr(Hf);
  qr.setThreshold(1e-9);
  if (qr.rank() < k) {
    throw Error(ErrorCode::RankDeficientHf,
                "feature Jacobian rank " + std::to_string(qr.rank()) + " < " + std::to_string(k));
  }
  const MatX Q = qr.householderQ() * MatX::Identity(m, m);
  ProjectedSystem out;
  out.A = Q.rightCols(m - k);
  out.H = out.A.transpose() * Hx;
  out.r = out.A.transpose() * r;
  out.R = out.A.transpose() * R * out.A;
  out.R = (0.5 * (out.R + out.R.transpose())).eval();
  return out;
}

Vec3 triangulate_point(const std::vector<ImuState>& poses, const std::vector<Vec2>& uv) {
  if (poses.size() != uv.size() || poses.size() < 2) {
    throw Error(ErrorCode::RankDeficientHf, "triangulation needs two views");
  }
  Mat3 A = Mat3::Zero();
  Vec3 b = Vec3::Zero();
  for (std::size_t i = 0; i < poses.size(); ++i) {
    const Vec3 d = (poses[i].R().transpose() * Vec3(uv[i](0), uv[i](1), 1.0)).normalized();
    const Mat3 Pp = Mat3::Identity() - d * d.transpose();
    A += Pp;
    b += Pp * poses[i].p;
  }
  Eigen::FullPivLU<Mat3> lu(A);
  lu.setThreshold(1e-9);
  if (lu.rank() < 3) throw Error(ErrorCode::RankDeficientHf, "views have no parallax");
  Vec3 P = lu.solve(b);

  // Gauss-Newton on the normalized image residual.
  for (int it = 0; it < 10; ++it) {
    Mat3 JtJ = Mat3::Zero();
    Vec3 Jtr = Vec3::Zero();
    for (std::size_t i = 0; i < poses.size(); ++i) {
      const Mat3 R = poses[i].R();
      const Vec3 pl = R * (P - poses[i].p);
      if (pl(2) <= 0.0) throw Error(ErrorCode::BehindCamera, "triangulated point behind a view");
      Eigen::Matrix<double, 2, 3> Hp;
      Hp << 1.0 / pl(2), 0.0, -pl(0) / (pl(2) * pl(2)), 0.0, 1.0 / pl(2), -pl(1) / (pl(2) * pl(2));
      const Eigen::Matrix<double, 2, 3> J = Hp * R;
      const Vec2 res = uv[i] - Vec2(pl(0) / pl(2), pl(1) / pl(2));
      JtJ += J.transpose() * J;
      Jtr += J.transpose() * res;
    }
    const Vec3 dP = JtJ.ldlt().solve(Jtr);
    P += dP;
    if (dP.norm() < 1e-12 * (1.0 + P.norm())) break;
  }
  return P;
}

TrackSystem stack_track(const HybridState& s, const std::vector<TrackObservation>& track,
                        const Feature& f_hat, const SensorSuite& sensors, LinearizationMode mode,
                        const Feature* f_true, const Trajectory* truth) {
  const bool ideal = mode == LinearizationMode::Ideal;
  if (ideal && (!f_true || !truth)) {
    throw Error(ErrorCode::InvalidSpec, "ideal track update needs the truth");
  }
  const Feature& f_lin = ideal ? *f_true : f_hat;
  const int n = s.dim();
  const int md = meas_dim(sensors, f_hat);
  const int rows = md * static_cast<int>(track.size());
  TrackSystem sys;
  sys.Hx = MatX::Zero(rows, n);
  sys.Hf = MatX::Zero(rows, feature_dim(f_hat));
  sys.r = VecX::Zero(rows);
  sys.R = MatX::Zero(rows, rows);
  const MatX Rm = measurement_noise(sensors, f_lin);
  int at = 0;
  for (const TrackObservation& o : track) {
    const int ci = s.find_clone(o.clone_id);
    if (ci < 0) throw Error(ErrorCode::DimensionMismatch, "observation of a dropped clone");
    const Clone& c = s.clones[ci];
    const ImuState pose_hat = c.as_imu();
    const ImuState pose_lin = ideal ? (*truth)[traj_index(*truth, c.t)].x : pose_hat;
    const MeasJacobian J = measurement_jacobian(sensors, pose_lin, f_lin, o.m);
    const int off = s.clone_offset(ci);
    sys.Hx.block(at, off, md, 3) = J.H_imu.middleCols<3>(kTh);
    sys.Hx.block(at, off + 3, md, 3) = J.H_imu.middleCols<3>(kPos);
    sys.Hf.middleRows(at, md) = J.H_feat;
    sys.r.segment(at, md) = measurement_residual(sensors, pose_hat, f_hat, o.m);
    sys.R.block(at, at, md, md) = Rm;
    at += md;
  }
  return sys;
}

int msckf_update_track(HybridState& s, const std::vector<TrackObservation>& track,
                       const Feature& f_hat, const SensorSuite& sensors, LinearizationMode mode,
                       const Feature* f_true, const Trajectory* truth) {
  if (track.size() < 3) throw Error(ErrorCode::InvalidSpec, "track shorter than three clones");
  const TrackSystem sys = stack_track(s, track, f_hat, sensors, mode, f_true, truth);
  const ProjectedSystem p = nullspace_project(sys.Hx, sys.Hf, sys.r, sys.R);
  kalman_update(s, p.H, p.r, p.R);
  return static_cast<int>(p.r.size());
}

}  // namespace ains
