#include <gtest/gtest.h>

#include <cmath>
#include <random>

#include "ains/errors.hpp"
#include "ains/measurements.hpp"
#include "support.hpp"

using namespace ains;
using ains::test::numeric_jacobian;
using ains::test::randn3;
using ains::test::rel_err;
using ains::test::uniform;

namespace {

constexpr int kConfigs = 100;
constexpr double kTol = 1e-5;

Vec3 random_in_front(std::mt19937_64& rng) {
  return Vec3(uniform(rng, -1.5, 1.5), uniform(rng, -1.5, 1.5), uniform(rng, 1.0, 6.0));
}

MatX full(const MeasJacobian& J) {
  MatX H(J.rows(), kImuDim + J.H_feat.cols());
  H << J.H_imu, J.H_feat;
  return H;
}

void expect_zero_bias_velocity_columns(const MeasJacobian& J) {
  EXPECT_TRUE(J.H_imu.middleCols<3>(kBg).isZero(0.0));
  EXPECT_TRUE(J.H_imu.middleCols<3>(kVel).isZero(0.0));
  EXPECT_TRUE(J.H_imu.middleCols<3>(kBa).isZero(0.0));
}

}  // namespace

TEST(PointTransform, Examples) {
  ImuState x;
  EXPECT_EQ(point_transform(x, Vec3(1, 2, 3)), Vec3(1, 2, 3));
  x.p = Vec3(0, 0, 1);
  EXPECT_TRUE(point_transform(x, Vec3(0, 0, 1)).isZero(0.0));
  std::mt19937_64 rng(1);
  for (int i = 0; i < 20; ++i) {
    const ImuState s = ains::test::random_state(rng);
    const Vec3 p = randn3(rng, 3);
    EXPECT_LT((ains::test::to_global(s, point_transform(s, p)) - p).norm(), 1e-12);
  }
}

TEST(PointMeasure, Examples) {
  PointSensorModel m;
  m.kind = PointModel::Range;
  EXPECT_DOUBLE_EQ(point_measure(m, Vec3(3, 4, 0))(0), 5.0);
  m.kind = PointModel::Mono;
  EXPECT_TRUE(point_measure(m, Vec3(1, 2, 2)).isApprox(Vec2(0.5, 1.0)));
  m.kind = PointModel::Stereo;
  m.baseline = 0.1;
  EXPECT_LT((point_measure(m, Vec3(0.1, 0, 1)) - Vec3(0.1, 0, 0)).norm(), 1e-15);
}

TEST(PointMeasure, Errors) {
  PointSensorModel m;
  m.kind = PointModel::Mono;
  try {
    point_measure(m, Vec3(0, 0, -1));
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::BehindCamera);
  }
  m.kind = PointModel::Range;
  try {
    point_measure(m, Vec3::Zero());
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::ZeroRange);
  }
}

TEST(PointJacobian, RangeAtIdentity) {
  PointSensorModel m;
  m.kind = PointModel::Range;
  const MeasJacobian J = point_jacobian(m, ImuState(), Vec3(0, 0, 1));
  EXPECT_TRUE(J.H_feat.isApprox(Eigen::RowVector3d(0, 0, 1)));
}

TEST(PointJacobian, BearingRowsAnnihilateBearing) {
  std::mt19937_64 rng(2);
  for (int i = 0; i < 20; ++i) {
    const Vec3 b = randn3(rng).normalized();
    EXPECT_LT((bearing_perp_rows(b) * b).norm(), 1e-12);
  }
  PointSensorModel m;
  m.kind = PointModel::Mono;
  const Vec3 p(0.3, -0.2, 2.0);
  EXPECT_LT((point_projection_jacobian(m, p) * p).norm(), 1e-12);
}

class PointFd : public ::testing::TestWithParam<PointModel> {};

TEST_P(PointFd, MatchesFiniteDifferences) {
  PointSensorModel m;
  m.kind = GetParam();
  std::mt19937_64 rng(100 + static_cast<int>(GetParam()));
  for (int i = 0; i < kConfigs; ++i) {
    const ImuState x = ains::test::random_state(rng);
    const Vec3 pg = ains::test::to_global(x, random_in_front(rng));
    for (const Feature f : {Feature(PointEuclidean{pg}), Feature(spherical_from_euclidean(pg))}) {
      const MeasJacobian J = measurement_jacobian(SensorSuite{m}, x, f, {});
      const MatX Hn = numeric_jacobian(x, f, [&](const ImuState& s, const Feature& g) {
        return point_measure(m, point_transform(s, point_position(g)));
      });
      EXPECT_LT(rel_err(full(J), Hn), kTol);
      expect_zero_bias_velocity_columns(J);
    }
  }
}

INSTANTIATE_TEST_SUITE_P(AllModels, PointFd,
                         ::testing::Values(PointModel::Range, PointModel::Mono,
                                           PointModel::RangeBearing, PointModel::Stereo));

namespace {

struct LineCase {
  ImuState x;
  PluckerLine L;
  Vec3 a, b;
};

LineCase random_line(std::mt19937_64& rng) {
  LineCase c;
  c.x = ains::test::random_state(rng);
  c.a = ains::test::to_global(c.x, random_in_front(rng));
  c.b = ains::test::to_global(c.x, random_in_front(rng));
  c.L = line_from_endpoints(c.a, c.b);
  return c;
}

}  // namespace

TEST(LineTransform, Examples) {
  const PluckerLine L = line_from_endpoints(Vec3(1, 2, 3), Vec3(0, 1, 1));
  const PluckerLine same = line_transform_to_local(ImuState(), L);
  EXPECT_EQ(same.n, L.n);
  EXPECT_EQ(same.v, L.v);
  std::mt19937_64 rng(3);
  for (int i = 0; i < 50; ++i) {
    const LineCase c = random_line(rng);
    const PluckerLine Ll = line_transform_to_local(c.x, c.L);
    const PluckerLine ref =
        line_from_endpoints(point_transform(c.x, c.a), point_transform(c.x, c.b));
    EXPECT_LT((Ll.n - ref.n).norm(), 1e-10 * (1 + ref.n.norm()));
    EXPECT_LT((Ll.v - ref.v).norm(), 1e-10 * (1 + ref.v.norm()));
  }
  ImuState r;
  r.q_IG = UnitQuaternion::from_rotation(rot_z(0.7));
  EXPECT_EQ(line_transform_to_local(r, L).v, r.R() * L.v);
}

TEST(LineProjection, Examples) {
  CameraIntrinsics unit{1.0, 1.0, 0.0, 0.0};
  EXPECT_TRUE(line_projection_matrix(unit).isIdentity(0.0));
  std::mt19937_64 rng(4);
  const CameraIntrinsics cam;
  const Mat3 K = line_projection_matrix(cam);
  for (int i = 0; i < 50; ++i) {
    const Vec3 p1 = random_in_front(rng), p2 = random_in_front(rng);
    const PluckerLine Ll = line_from_endpoints(p1, p2);
    LineObservation obs{project_pixel(cam, p1), project_pixel(cam, p2)};
    EXPECT_LT(line_project_and_measure(K, Ll, obs).norm(), 1e-9);
    // l' is proportional to the line through the two projected endpoints.
    const Vec3 l = K * Ll.n;
    const Vec3 ref = obs.xs.cross(obs.xe);
    EXPECT_LT(l.normalized().cross(ref.normalized()).norm(), 1e-9);
    // Invariance to positive scaling of l'.
    obs.xs(0) += 3.0;
    PluckerLine scaled = Ll;
    scaled.n *= 10.0;
    EXPECT_LT((line_project_and_measure(K, scaled, obs) - line_project_and_measure(K, Ll, obs))
                  .norm(),
              1e-10);
  }
}

TEST(LineJacobian, MatchesFiniteDifferences) {
  std::mt19937_64 rng(5);
  const CameraIntrinsics cam;
  const Mat3 K = line_projection_matrix(cam);
  std::normal_distribution<double> px(0.0, 2.0);
  for (int i = 0; i < kConfigs; ++i) {
    const LineCase c = random_line(rng);
    LineObservation obs{project_pixel(cam, point_transform(c.x, c.a)),
                        project_pixel(cam, point_transform(c.x, c.b))};
    obs.xs.head<2>() += Vec2(px(rng), px(rng));
    obs.xe.head<2>() += Vec2(px(rng), px(rng));
    const MeasJacobian J = line_jacobian(c.x, c.L, cam, obs);
    const MatX Hn = numeric_jacobian(c.x, Feature(c.L), [&](const ImuState& s, const Feature& g) {
      return VecX(line_project_and_measure(K, line_transform_to_local(s, std::get<PluckerLine>(g)),
                                           obs));
    });
    EXPECT_LT(rel_err(full(J), Hn), kTol);
    expect_zero_bias_velocity_columns(J);
  }
}

TEST(LineJacobian, ResidualJacobianAnnihilatesProjection) {
  std::mt19937_64 rng(6);
  const CameraIntrinsics cam;
  const Mat3 K = line_projection_matrix(cam);
  for (int i = 0; i < 50; ++i) {
    const Vec3 p1 = random_in_front(rng), p2 = random_in_front(rng);
    const PluckerLine Ll = line_from_endpoints(p1, p2);
    const LineObservation obs{project_pixel(cam, p1), project_pixel(cam, p2)};
    const Vec3 l = K * Ll.n;
    EXPECT_LT((line_residual_jacobian(l, obs) * l).norm(), 1e-10);
  }
}

TEST(LineDirect, Examples) {
  const PluckerLine L = line_from_endpoints(Vec3(1, 0, 0), Vec3(1, 1, 0));
  const Vec4 z = line_direct_measure(ImuState(), L, Vec3(0, 1, 0));
  EXPECT_TRUE(z.head<3>().isZero(0.0));
  EXPECT_DOUBLE_EQ(z(3), 1.0);
}

TEST(LineDirect, MatchesFiniteDifferences) {
  std::mt19937_64 rng(7);
  for (int i = 0; i < kConfigs; ++i) {
    const LineCase c = random_line(rng);
    const Vec3 vm = (c.x.R() * c.L.v.normalized() + randn3(rng, 0.05)).normalized();
    const MeasJacobian J = line_direct_jacobian(c.x, c.L, vm);
    const MatX Hn = numeric_jacobian(c.x, Feature(c.L), [&](const ImuState& s, const Feature& g) {
      return VecX(line_direct_measure(s, std::get<PluckerLine>(g), vm));
    });
    EXPECT_LT(rel_err(full(J), Hn), kTol);
    expect_zero_bias_velocity_columns(J);

    SensorSuite suite;
    suite.line = LineModel::Direct;
    FeatureMeasurement aux;
    aux.v_m = vm;
    const MeasJacobian Jr = measurement_jacobian(suite, c.x, c.L, aux);
    const MatX Hr = numeric_jacobian(c.x, Feature(c.L), [&](const ImuState& s, const Feature& g) {
      return predict_measurement(suite, s, g, aux);
    });
    EXPECT_LT(rel_err(full(Jr), Hr), kTol);
  }
}

TEST(PlaneCp, Examples) {
  CpPlane P;
  P.Pi = Vec3(0, 0, 2);
  EXPECT_EQ(plane_transform_to_local(ImuState(), P).Pi, P.Pi);
  ImuState x;
  x.p = Vec3(0, 0, 1);
  EXPECT_TRUE(plane_transform_to_local(x, P).Pi.isApprox(Vec3(0, 0, 1)));
  x.p = Vec3(3, 1, 2);
  try {
    plane_transform_to_local(x, P);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::DegeneratePlane);
  }
  const MeasJacobian J = plane_jacobian_cp(ImuState(), P);
  EXPECT_TRUE(J.H_feat.isApprox(Mat3::Identity()));
  Mat3 e3 = Mat3::Zero();
  e3(2, 2) = -1.0;
  EXPECT_TRUE(J.H_imu.middleCols<3>(kPos).isApprox(e3));
}

TEST(PlaneCp, MatchesFiniteDifferences) {
  std::mt19937_64 rng(8);
  for (int i = 0; i < kConfigs; ++i) {
    const ImuState x = ains::test::random_state(rng);
    CpPlane P;
    P.Pi = randn3(rng).normalized() * uniform(rng, 1.0, 8.0);
    if (std::abs(P.d() - P.normal().dot(x.p)) < 0.2) {
      --i;
      continue;
    }
    const MeasJacobian J = plane_jacobian_cp(x, P);
    const MatX Hn = numeric_jacobian(x, Feature(P), [&](const ImuState& s, const Feature& g) {
      return VecX(plane_transform_to_local(s, std::get<CpPlane>(g)).Pi);
    });
    EXPECT_LT(rel_err(full(J), Hn), kTol);
    expect_zero_bias_velocity_columns(J);
    const Vec3 In = x.R() * P.normal();
    EXPECT_LT((In.transpose() * J.H_imu.middleCols<3>(kTh)).norm(), 1e-10 * (1 + J.H_imu.norm()));
  }
}

TEST(PlaneHesse, Examples) {
  HessePlane h;
  h.n = Vec3(1, 0, 0);
  h.d = 1.0;
  EXPECT_TRUE(plane_measure_hesse(ImuState(), h).isApprox(Vec3(0, 0, 1)));
  h.n = Vec3(0, 0, 1);
  try {
    plane_measure_hesse(ImuState(), h);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::SingularElevation);
  }
}

TEST(PlaneHesse, MatchesFiniteDifferences) {
  std::mt19937_64 rng(9);
  auto wrap = [](const VecX& d) {
    VecX o = d;
    o(0) = std::remainder(o(0), 2.0 * M_PI);
    return o;
  };
  for (int i = 0; i < kConfigs; ++i) {
    const ImuState x = ains::test::random_state(rng);
    const HessePlane h =
        HessePlane::from_angles(uniform(rng, -3.1, 3.1), uniform(rng, -1.2, 1.2), uniform(rng, 1, 8));
    const Vec3 In = x.R() * h.n;
    if (std::abs(h.d - h.n.dot(x.p)) < 0.2 || std::hypot(In(0), In(1)) < 0.1) {
      --i;
      continue;
    }
    const MeasJacobian J = plane_jacobian_hesse(x, h);
    const MatX Hn = numeric_jacobian(
        x, Feature(h),
        [&](const ImuState& s, const Feature& g) {
          return VecX(plane_measure_hesse(s, std::get<HessePlane>(g)));
        },
        1e-6, wrap);
    EXPECT_LT(rel_err(full(J), Hn), kTol);
    expect_zero_bias_velocity_columns(J);
  }
}

TEST(Global, Examples) {
  ImuState x;
  x.p = Vec3(1, 2, 3);
  GlobalMeasModel m;
  m.kind = GlobalKind::PosZ;
  EXPECT_DOUBLE_EQ(global_measure(m, x)(0), 3.0);
  const MeasJacobian J = global_jacobian(m, x);
  EXPECT_EQ(J.H_imu.cols(), kImuDim);
  for (int c = 0; c < kImuDim; ++c) EXPECT_EQ(J.H_imu(0, c), c == kPos + 2 ? 1.0 : 0.0);
  m.kind = GlobalKind::Orientation;
  m.N_n = Vec3(1, 0, 0);
  EXPECT_TRUE(global_measure(m, ImuState()).isApprox(Vec3(1, 0, 0)));
}

TEST(Global, MatchesFiniteDifferences) {
  std::mt19937_64 rng(10);
  const Feature none = PointEuclidean{};
  for (GlobalKind k : {GlobalKind::PosX, GlobalKind::PosY, GlobalKind::PosZ, GlobalKind::Orientation}) {
    for (int i = 0; i < kConfigs; ++i) {
      const ImuState x = ains::test::random_state(rng);
      GlobalMeasModel m{k, randn3(rng).normalized()};
      const MeasJacobian J = global_jacobian(m, x);
      const MatX Hn = numeric_jacobian(x, none, [&](const ImuState& s, const Feature&) {
        return global_measure(m, s);
      }).leftCols(kImuDim);
      EXPECT_LT(rel_err(J.H_imu, Hn), kTol);
    }
  }
}

TEST(Simulated, ZeroNoiseResidualIsZero) {
  std::mt19937_64 rng(11);
  SensorSuite s;
  for (int i = 0; i < 30; ++i) {
    const LineCase c = random_line(rng);
    for (LineModel lm : {LineModel::Projective, LineModel::Direct}) {
      s.line = lm;
      const auto m = simulate_feature_measurement(s, c.x, c.L, {c.a, c.b}, nullptr);
      if (!m) continue;
      EXPECT_LT((m->z - predict_measurement(s, c.x, c.L, *m)).norm(), 1e-10);
    }
    const Feature p = PointEuclidean{c.a};
    const auto mp = simulate_feature_measurement(s, c.x, p, {}, nullptr);
    ASSERT_TRUE(mp.has_value());
    EXPECT_LT((mp->z - predict_measurement(s, c.x, p, *mp)).norm(), 1e-12);
  }
}
