#include "ains/observability.hpp"

#include <algorithm>
#include <cmath>

#include <Eigen/QR>
#include <Eigen/SVD>

#include "ains/errors.hpp"

namespace ains {

ObservabilityMatrix build_observability_matrix(const GeneratedTrajectory& traj,
                                               const Scene& scene, const ObsSetup& setup,
                                               int k_steps) {
  if (traj.cam_index.size() < 2) {
    throw Error(ErrorCode::InvalidSpec, "observability needs at least two instants");
  }
  const auto& feats = scene.features;
  const std::vector<int> off = feature_offsets(feats);
  const int n = kImuDim + features_dim(feats);
  const std::size_t steps =
      k_steps < 0 ? traj.cam_index.size()
                  : std::min<std::size_t>(traj.cam_index.size(), static_cast<std::size_t>(k_steps));

  std::vector<MatX> blocks;
  ObservabilityMatrix out;
  int rows = 0;
  PhiIntegrator integ(traj.truth, traj.cam_index.front(), setup.quad);
  for (std::size_t k = 0; k < steps; ++k) {
    const std::size_t idx = traj.cam_index[k];
    while (integ.index() < idx) integ.step();
    const Mat15 Phi = integ.phi15();
    const ImuState& x = traj.truth[idx].x;
    auto push = [&](const MeasJacobian& J, int feat_off, int tag, const VecX& sigma) {
      MatX B = MatX::Zero(J.rows(), n);
      B.leftCols<kImuDim>() = J.H_imu * Phi;
      if (J.H_feat.cols() > 0) B.middleCols(feat_off, J.H_feat.cols()) = J.H_feat;
      if (setup.whiten) B = sigma.cwiseInverse().asDiagonal() * B;
      for (int r = 0; r < J.rows(); ++r) out.tags.push_back({static_cast<int>(k), tag});
      rows += J.rows();
      blocks.push_back(std::move(B));
    };
    for (std::size_t i = 0; i < feats.size(); ++i) {
      try {
        const auto aux =
            simulate_feature_measurement(setup.sensors, x, feats[i], scene.anchors[i], nullptr);
        if (!aux) continue;
        const VecX sigma = measurement_noise(setup.sensors, feats[i]).diagonal().cwiseSqrt();
        push(measurement_jacobian(setup.sensors, x, feats[i], *aux), off[i], static_cast<int>(i),
             sigma);
      } catch (const Error&) {
        // Not measurable at this instant.
      }
    }
    for (std::size_t g = 0; g < setup.globals.size(); ++g) {
      const MeasJacobian J = global_jacobian(setup.globals[g], x);
      push(J, 0, -1 - static_cast<int>(g), VecX::Constant(J.rows(), setup.global_sigma));
    }
    out.step_time.push_back(traj.truth[idx].t);
    out.step_row_end.push_back(rows);
  }
  out.M.resize(rows, n);
  int r = 0;
  for (const MatX& B : blocks) {
    out.M.middleRows(r, B.rows()) = B;
    r += static_cast<int>(B.rows());
  }
  return out;
}

NullSpace numeric_nullspace(const MatX& M, double rel_tol) {
  NullSpace ns;
  const int n = static_cast<int>(M.cols());
  if (M.rows() == 0) {
    ns.dim = n;
    ns.basis = MatX::Identity(n, n);
    return ns;
  }
  Eigen::JacobiSVD<MatX> svd(M, Eigen::ComputeFullV);
  ns.singular_values = svd.singularValues();
  const double smax = ns.singular_values.size() ? ns.singular_values(0) : 0.0;
  int rank = 0;
  for (int i = 0; i < ns.singular_values.size(); ++i) {
    if (ns.singular_values(i) > rel_tol * smax) ++rank;
  }
  ns.dim = n - rank;
  ns.basis = svd.matrixV().rightCols(ns.dim);
  return ns;
}

double verify_nullspace(const MatX& M, const MatX& N) {
  if (M.cols() != N.rows()) {
    throw Error(ErrorCode::DimensionMismatch,
                "M has " + std::to_string(M.cols()) + " columns, N has " +
                    std::to_string(N.rows()) + " rows");
  }
  const double den = M.norm() * N.norm();
  return den == 0.0 ? 0.0 : (M * N).norm() / den;
}

double span_residual(const MatX& basis, const MatX& N) {
  if (basis.rows() != N.rows()) throw Error(ErrorCode::DimensionMismatch, "span residual");
  double worst = 0.0;
  for (int j = 0; j < N.cols(); ++j) {
    const VecX c = N.col(j);
    const VecX r = c - basis * (basis.transpose() * c);
    worst = std::max(worst, r.norm() / c.norm());
  }
  return worst;
}

std::vector<std::pair<double, int>> rank_over_time(const ObservabilityMatrix& obs,
                                                   double rel_tol) {
  const int n = static_cast<int>(obs.M.cols());
  std::vector<std::pair<double, int>> out;
  MatX R(0, n);
  int start = 0;
  for (std::size_t k = 0; k < obs.step_time.size(); ++k) {
    const int end = obs.step_row_end[k];
    MatX S(R.rows() + (end - start), n);
    S << R, obs.M.middleRows(start, end - start);
    start = end;
    if (S.rows() > n) {
      Eigen::HouseholderQR<MatX> qr(S);
      R = qr.matrixQR().topRows(n).triangularView<Eigen::Upper>();
    } else {
      R = S;
    }
    out.emplace_back(obs.step_time[k], numeric_nullspace(R, rel_tol).dim);
  }
  return out;
}

// ---------------------------------------------------------------- analytic bases

const char* null_case_name(NullCase c) {
  switch (c) {
    case NullCase::Points: return "points";
    case NullCase::SphericalPoints: return "spherical_points";
    case NullCase::SingleLine: return "single_line";
    case NullCase::MultipleLines: return "multiple_lines";
    case NullCase::SinglePlane: return "single_plane";
    case NullCase::MultiplePlanes: return "multiple_planes";
    case NullCase::PointLine: return "point_line";
    case NullCase::PointPlane: return "point_plane";
    case NullCase::LinePlane: return "line_plane";
    case NullCase::PointLinePlane: return "point_line_plane";
    case NullCase::GlobalX: return "global_x";
    case NullCase::GlobalY: return "global_y";
    case NullCase::GlobalZ: return "global_z";
    case NullCase::GlobalXYZ: return "global_xyz";
    case NullCase::GlobalOrientation: return "global_orientation";
    case NullCase::PureTranslation: return "pure_translation";
    case NullCase::ConstantLocalAccel: return "constant_local_accel";
    case NullCase::PureRotation: return "pure_rotation";
    case NullCase::TowardPoint: return "toward_point";
    case NullCase::ParallelToLine: return "parallel_to_line";
  }
  return "unknown";
}

NullCase null_case_from_name(const std::string& name) {
  for (int i = 0; i <= static_cast<int>(NullCase::ParallelToLine); ++i) {
    const auto c = static_cast<NullCase>(i);
    if (name == null_case_name(c)) return c;
  }
  throw Error(ErrorCode::InvalidConfig, "unknown null-space case '" + name + "'");
}

namespace {

Mat3 spherical_inverse_jacobian(const PointSpherical& s) {
  Mat3 Ji;
  Ji.row(0) = s.bearing().transpose();
  Ji.row(1) = s.perp1().transpose() / (s.r * std::cos(s.phi));
  Ji.row(2) = s.perp2().transpose() / s.r;
  return Ji;
}

// Maps a global change of the Hesse normal to (theta, phi) increments.
Eigen::Matrix<double, 2, 3> hesse_angle_inverse(const HessePlane& h) {
  Eigen::Matrix<double, 2, 3> A;
  A.row(0) = h.perp1().transpose() / std::cos(h.phi());
  A.row(1) = h.perp2().transpose();
  return A;
}

Eigen::Matrix<double, 4, 3> line_translation_rows(const PluckerLine& L) {
  const LineOrthonormal o = line_orthonormal(L);
  const Vec3 ve = L.v.normalized();
  Eigen::Matrix<double, 4, 3> T;
  T.topRows<3>() = (o.w2 / o.w1) * ve * o.R_L.col(0).transpose();
  T.row(3) = o.eta * o.eta * o.w2 * o.w2 * o.R_L.col(2).transpose();
  return T;
}

void require(bool ok, NullCase c, const std::string& why) {
  if (!ok) {
    throw Error(ErrorCode::CaseMismatch, std::string(null_case_name(c)) + ": " + why);
  }
}

struct Census {
  int points = 0, spherical = 0, lines = 0, planes = 0;
  std::vector<int> line_idx, plane_idx;
};

Census census(const std::vector<Feature>& f) {
  Census c;
  for (std::size_t i = 0; i < f.size(); ++i) {
    switch (feature_kind(f[i])) {
      case FeatureKind::Point: ++c.points; break;
      case FeatureKind::SphericalPoint: ++c.spherical; break;
      case FeatureKind::Line:
        ++c.lines;
        c.line_idx.push_back(static_cast<int>(i));
        break;
      case FeatureKind::CpPlane:
      case FeatureKind::HessePlane:
        ++c.planes;
        c.plane_idx.push_back(static_cast<int>(i));
        break;
    }
  }
  return c;
}

Vec3 plane_normal(const Feature& f) {
  if (const auto* c = std::get_if<CpPlane>(&f)) return c->normal();
  return std::get<HessePlane>(f).n;
}

bool parallel(const Vec3& a, const Vec3& b, double tol = 1e-9) {
  return a.normalized().cross(b.normalized()).norm() < tol;
}

Mat3 plane_frame(const Vec3& n) {
  Vec3 b1, b2;
  perp_basis(n, b1, b2);
  Mat3 R;
  R << b1, b2, n;
  return R;
}

MatX hcat(std::initializer_list<MatX> parts) {
  Eigen::Index rows = 0, cols = 0;
  for (const MatX& p : parts) {
    rows = std::max(rows, p.rows());
    cols += p.cols();
  }
  MatX out(rows, cols);
  Eigen::Index c = 0;
  for (const MatX& p : parts) {
    if (p.cols() == 0) continue;
    out.middleCols(c, p.cols()) = p;
    c += p.cols();
  }
  return out;
}

}  // namespace

MatX rotation_block(const ImuState& x1, const std::vector<Feature>& features, const MatX& W) {
  const int n = kImuDim + features_dim(features);
  const auto k = W.cols();
  MatX N = MatX::Zero(n, k);
  const Mat3 R1 = x1.R();
  N.middleRows<3>(kTh) = R1 * W;
  N.middleRows<3>(kVel) = -skew(x1.v) * W;
  N.middleRows<3>(kBa) = R1 * skew(gravity()) * W;
  N.middleRows<3>(kPos) = -skew(x1.p) * W;
  const std::vector<int> off = feature_offsets(features);
  for (std::size_t i = 0; i < features.size(); ++i) {
    const Feature& f = features[i];
    switch (feature_kind(f)) {
      case FeatureKind::Point:
        N.middleRows<3>(off[i]) = -skew(std::get<PointEuclidean>(f).p) * W;
        break;
      case FeatureKind::SphericalPoint: {
        const auto& s = std::get<PointSpherical>(f);
        N.middleRows<3>(off[i]) = -spherical_inverse_jacobian(s) * skew(s.position()) * W;
        break;
      }
      case FeatureKind::Line:
        N.middleRows<3>(off[i]) = -W;
        break;
      case FeatureKind::CpPlane:
        N.middleRows<3>(off[i]) = -skew(std::get<CpPlane>(f).Pi) * W;
        break;
      case FeatureKind::HessePlane: {
        const auto& h = std::get<HessePlane>(f);
        N.middleRows<2>(off[i]) = -hesse_angle_inverse(h) * skew(h.n) * W;
        break;
      }
    }
  }
  return N;
}

MatX translation_block(const std::vector<Feature>& features, const MatX& T) {
  const int n = kImuDim + features_dim(features);
  MatX N = MatX::Zero(n, T.cols());
  N.middleRows<3>(kPos) = T;
  const std::vector<int> off = feature_offsets(features);
  for (std::size_t i = 0; i < features.size(); ++i) {
    const Feature& f = features[i];
    switch (feature_kind(f)) {
      case FeatureKind::Point:
        N.middleRows<3>(off[i]) = T;
        break;
      case FeatureKind::SphericalPoint:
        N.middleRows<3>(off[i]) = spherical_inverse_jacobian(std::get<PointSpherical>(f)) * T;
        break;
      case FeatureKind::Line:
        N.middleRows<4>(off[i]) = line_translation_rows(std::get<PluckerLine>(f)) * T;
        break;
      case FeatureKind::CpPlane: {
        const Vec3 nn = std::get<CpPlane>(f).normal();
        N.middleRows<3>(off[i]) = nn * nn.transpose() * T;
        break;
      }
      case FeatureKind::HessePlane:
        N.row(off[i] + 2) = std::get<HessePlane>(f).n.transpose() * T;
        break;
    }
  }
  return N;
}

MatX velocity_block(int n, const MatX& D) {
  MatX N = MatX::Zero(n, D.cols());
  N.middleRows<3>(kVel) = D;
  return N;
}

NullBasis analytic_nullspace(NullCase c, const TrajPoint& first,
                             const std::vector<Feature>& features, int target) {
  const ImuState& x1 = first.x;
  const Census cs = census(features);
  const int n = kImuDim + features_dim(features);
  const MatX g = gravity();
  const MatX I3 = Mat3::Identity();
  require(!features.empty(), c, "no features");
  NullBasis out;
  out.label = null_case_name(c);

  auto yaw = [&]() { return rotation_block(x1, features, g); };
  auto all_lines_parallel = [&]() {
    for (int i : cs.line_idx) {
      if (!parallel(std::get<PluckerLine>(features[i]).v,
                    std::get<PluckerLine>(features[cs.line_idx.front()]).v)) {
        return false;
      }
    }
    return true;
  };

  switch (c) {
    case NullCase::Points:
      require(cs.points == static_cast<int>(features.size()), c, "all features must be points");
      out.N = hcat({yaw(), translation_block(features, I3)});
      break;
    case NullCase::SphericalPoints:
      require(cs.spherical == static_cast<int>(features.size()), c,
              "all features must be spherical points");
      out.N = hcat({yaw(), translation_block(features, I3)});
      break;
    case NullCase::SingleLine: {
      require(cs.lines == 1 && features.size() == 1, c, "exactly one line");
      const auto& L = std::get<PluckerLine>(features.front());
      out.N = hcat({yaw(), translation_block(features, line_orthonormal(L).R_L),
                    velocity_block(n, L.v.normalized())});
      break;
    }
    case NullCase::MultipleLines: {
      require(cs.lines >= 2 && cs.lines == static_cast<int>(features.size()), c,
              "two or more lines only");
      require(!all_lines_parallel(), c, "all lines are parallel");
      const auto& L = std::get<PluckerLine>(features.front());
      out.N = hcat({yaw(), translation_block(features, line_orthonormal(L).R_L)});
      break;
    }
    case NullCase::SinglePlane: {
      require(cs.planes == 1 && features.size() == 1, c, "exactly one plane");
      const Vec3 nn = plane_normal(features.front());
      const Mat3 Rp = plane_frame(nn);
      MatX extra = velocity_block(n, Rp.leftCols<2>());
      MatX rot = MatX::Zero(n, 1);
      rot.middleRows<3>(kTh) = x1.R() * nn;
      out.N = hcat({yaw(), translation_block(features, Rp), extra, rot});
      break;
    }
    case NullCase::MultiplePlanes: {
      require(cs.planes >= 2 && cs.planes == static_cast<int>(features.size()), c,
              "two or more planes only");
      const Vec3 n1 = plane_normal(features[cs.plane_idx[0]]);
      const Vec3 n2 = plane_normal(features[cs.plane_idx[1]]);
      require(!parallel(n1, n2, 1e-6), c, "parallel planes");
      const Vec3 dir = n1.cross(n2).normalized();
      bool common = true;
      for (int i : cs.plane_idx) common = common && std::abs(plane_normal(features[i]).dot(dir)) < 1e-9;
      out.N = hcat({yaw(), translation_block(features, I3)});
      if (common) out.N = hcat({out.N, velocity_block(n, dir)});
      break;
    }
    case NullCase::PointLine:
      require(cs.points + cs.spherical >= 1 && cs.lines >= 1 && cs.planes == 0, c,
              "points and lines only");
      out.N = hcat({yaw(), translation_block(features, I3)});
      break;
    case NullCase::PointPlane:
      require(cs.points + cs.spherical >= 1 && cs.planes >= 1 && cs.lines == 0, c,
              "points and planes only");
      out.N = hcat({yaw(), translation_block(features, I3)});
      break;
    case NullCase::LinePlane: {
      require(cs.lines == 1 && cs.planes == 1 && features.size() == 2, c,
              "one line and one plane");
      const Vec3 v = std::get<PluckerLine>(features[cs.line_idx[0]]).v.normalized();
      const Vec3 nn = plane_normal(features[cs.plane_idx[0]]);
      out.N = hcat({yaw(), translation_block(features, I3)});
      if (std::abs(v.dot(nn)) < 1e-9) {
        out.N = hcat({out.N, velocity_block(n, v)});
        out.label += "_parallel";
      }
      break;
    }
    case NullCase::PointLinePlane:
      require(cs.points + cs.spherical >= 1 && cs.lines >= 1 && cs.planes >= 1, c,
              "needs a point, a line and a plane");
      out.N = hcat({yaw(), translation_block(features, I3)});
      break;
    case NullCase::GlobalX: {
      Eigen::Matrix<double, 3, 2> A;
      A << 0, 0, 1, 0, 0, 1;
      out.N = translation_block(features, A);
      break;
    }
    case NullCase::GlobalY: {
      Eigen::Matrix<double, 3, 2> A;
      A << 1, 0, 0, 0, 0, 1;
      out.N = translation_block(features, A);
      break;
    }
    case NullCase::GlobalZ: {
      Eigen::Matrix<double, 3, 2> A;
      A << 1, 0, 0, 1, 0, 0;
      out.N = hcat({yaw(), translation_block(features, A)});
      break;
    }
    case NullCase::GlobalXYZ:
      out.N = MatX::Zero(n, 0);
      break;
    case NullCase::GlobalOrientation:
      out.N = translation_block(features, I3);
      break;
    case NullCase::PureTranslation:
      out.N = rotation_block(x1, features, I3);
      break;
    case NullCase::ConstantLocalAccel: {
      MatX N = MatX::Zero(n, 1);
      N.middleRows<3>(kVel) = x1.v;
      N.middleRows<3>(kBa) = -(first.u.accel - x1.b_a + x1.R() * gravity());
      N.middleRows<3>(kPos) = x1.p;
      const std::vector<int> off = feature_offsets(features);
      for (std::size_t i = 0; i < features.size(); ++i) {
        const Feature& f = features[i];
        switch (feature_kind(f)) {
          case FeatureKind::Point: N.middleRows<3>(off[i]) = std::get<PointEuclidean>(f).p; break;
          case FeatureKind::SphericalPoint: N(off[i]) = std::get<PointSpherical>(f).r; break;
          case FeatureKind::Line: {
            const LineOrthonormal o = line_orthonormal(std::get<PluckerLine>(f));
            N(off[i] + 3) = -o.eta * o.eta * o.w1 * o.w2;
            break;
          }
          case FeatureKind::CpPlane: N.middleRows<3>(off[i]) = std::get<CpPlane>(f).Pi; break;
          case FeatureKind::HessePlane: N(off[i] + 2) = std::get<HessePlane>(f).d; break;
        }
      }
      out.N = N;
      break;
    }
    case NullCase::PureRotation: {
      require(cs.planes == 0 && cs.points + cs.spherical + cs.lines >= 1, c,
              "points and lines only");
      const std::vector<int> off = feature_offsets(features);
      MatX N = MatX::Zero(n, static_cast<Eigen::Index>(features.size()));
      for (std::size_t i = 0; i < features.size(); ++i) {
        const Feature& f = features[i];
        switch (feature_kind(f)) {
          case FeatureKind::Point:
            N.block<3, 1>(off[i], i) = std::get<PointEuclidean>(f).p.normalized();
            break;
          case FeatureKind::SphericalPoint: N(off[i], i) = 1.0; break;
          case FeatureKind::Line: N(off[i] + 3, i) = 1.0; break;
          default: break;
        }
      }
      out.N = N;
      break;
    }
    case NullCase::TowardPoint: {
      require(target >= 0 && target < static_cast<int>(features.size()) &&
                  is_point(features[target]),
              c, "target is not a point");
      const std::vector<int> off = feature_offsets(features);
      MatX N = MatX::Zero(n, 1);
      if (std::holds_alternative<PointSpherical>(features[target])) {
        N(off[target]) = 1.0;
      } else {
        N.middleRows<3>(off[target]) = std::get<PointEuclidean>(features[target]).p.normalized();
      }
      out.N = N;
      break;
    }
    case NullCase::ParallelToLine: {
      require(target >= 0 && target < static_cast<int>(features.size()) &&
                  is_line(features[target]),
              c, "target is not a line");
      const std::vector<int> off = feature_offsets(features);
      MatX N = MatX::Zero(n, 1);
      N(off[target] + 3) = 1.0;
      out.N = N;
      break;
    }
  }
  return out;
}

}  // namespace ains
