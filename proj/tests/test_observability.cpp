#include <gtest/gtest.h>

#include <Eigen/SVD>

#include "ains/cases.hpp"
#include "ains/errors.hpp"
#include "ains/observability.hpp"
#include "support.hpp"

using namespace ains;

namespace {

const GeneratedTrajectory& generic_traj() {
  static const GeneratedTrajectory traj = generate_trajectory(TrajectorySpec{});
  return traj;
}

// A point at the circle center is in view for the whole trajectory.
Scene center_point_scene() {
  Scene s;
  s.features.push_back(PointEuclidean{Vec3(5.0, 5.0, 2.5)});
  s.anchors.push_back({});
  return s;
}

ObsSetup range_bearing_setup(bool whiten) {
  ObsSetup setup;
  setup.sensors.point.kind = PointModel::RangeBearing;
  setup.whiten = whiten;
  return setup;
}

int matrix_rank(const MatX& A, double rel = 1e-10) {
  Eigen::JacobiSVD<MatX> svd(A);
  const auto& sv = svd.singularValues();
  int r = 0;
  for (int i = 0; i < sv.size(); ++i) r += sv(i) > rel * sv(0);
  return r;
}

}  // namespace

TEST(ObservabilityMatrix, SinglePointBookkeeping) {
  const auto obs =
      build_observability_matrix(generic_traj(), center_point_scene(), range_bearing_setup(true), 20);
  EXPECT_EQ(obs.M.rows(), 60);
  EXPECT_EQ(obs.M.cols(), 18);
  EXPECT_EQ(obs.tags.size(), 60u);
  ASSERT_EQ(obs.step_time.size(), 20u);
  EXPECT_EQ(obs.step_row_end.back(), 60);
  EXPECT_TRUE(obs.M.allFinite());
}

TEST(ObservabilityMatrix, FirstBlockIsMeasurementJacobian) {
  const auto& traj = generic_traj();
  const Scene scene = center_point_scene();
  const ObsSetup setup = range_bearing_setup(false);
  const auto obs = build_observability_matrix(traj, scene, setup, 1);
  const ImuState& x1 = traj.truth[traj.cam_index[0]].x;
  const auto aux = simulate_feature_measurement(setup.sensors, x1, scene.features[0], {}, nullptr);
  ASSERT_TRUE(aux.has_value());
  const MeasJacobian J = measurement_jacobian(setup.sensors, x1, scene.features[0], *aux);
  const MatX H1 = J.full(18, kImuDim);
  EXPECT_LT((obs.M - H1).norm(), 1e-14 * H1.norm());
}

// Each column of a block row is the sensitivity of the k-th measurement to an
// initial error; re-propagating a perturbed initial state is an independent
// oracle for the Phi product, in particular for the accelerometer-bias paths.
TEST(ObservabilityMatrix, ColumnsMatchPerturbedPropagation) {
  const auto& traj = generic_traj();
  const Scene scene = center_point_scene();
  const ObsSetup setup = range_bearing_setup(false);
  const int k = 15;
  const auto obs = build_observability_matrix(traj, scene, setup, k + 1);
  const std::size_t i1 = traj.cam_index[0], ik = traj.cam_index[k];
  std::vector<ImuSample> samples;
  for (std::size_t j = i1; j <= ik; ++j) samples.push_back(traj.truth[j].u);
  const Vec3 pf = std::get<PointEuclidean>(scene.features[0]).p;
  auto z_of = [&](const Vec15& d) {
    const ImuState xk = propagate_mean(traj.truth[i1].x.boxplus(d), samples);
    return point_measure(setup.sensors.point, point_transform(xk, pf));
  };
  const MatX block = obs.M.block(3 * k, 0, 3, kImuDim);
  const double h = 1e-5;
  MatX fd(3, kImuDim);
  for (int c = 0; c < kImuDim; ++c) {
    Vec15 d = Vec15::Zero();
    d(c) = h;
    fd.col(c) = (z_of(d) - z_of(-d)) / (2 * h);
  }
  EXPECT_LT(test::rel_err(fd.middleCols<3>(kBa), block.middleCols<3>(kBa)), 1e-5);
  EXPECT_LT(test::rel_err(fd, block), 1e-5);
}

TEST(ObservabilityMatrix, RejectsSingleInstant) {
  GeneratedTrajectory t = generic_traj();
  t.cam_index.resize(1);
  EXPECT_THROW(
      {
        try {
          build_observability_matrix(t, center_point_scene(), ObsSetup{});
        } catch (const Error& e) {
          EXPECT_EQ(e.code(), ErrorCode::InvalidSpec);
          throw;
        }
      },
      Error);
}

TEST(NumericNullspace, SinglePointDimFour) {
  const auto obs =
      build_observability_matrix(generic_traj(), center_point_scene(), range_bearing_setup(true));
  const NullSpace ns = numeric_nullspace(obs.M);
  EXPECT_EQ(ns.dim, 4);
  EXPECT_EQ(ns.basis.cols(), 4);
  EXPECT_LT((obs.M * ns.basis).norm() / obs.M.norm(), 1e-8);
}

TEST(NumericNullspace, EmptyMatrixIsAllNull) {
  const NullSpace ns = numeric_nullspace(MatX(0, 5));
  EXPECT_EQ(ns.dim, 5);
}

TEST(VerifyNullspace, RandomMatrixIsNotNull) {
  const auto obs =
      build_observability_matrix(generic_traj(), center_point_scene(), range_bearing_setup(true));
  std::mt19937_64 rng(3);
  std::normal_distribution<double> nd;
  MatX N(obs.M.cols(), 4);
  for (int i = 0; i < N.size(); ++i) N.data()[i] = nd(rng);
  EXPECT_GT(verify_nullspace(obs.M, N), 1e-3);
}

TEST(VerifyNullspace, DimensionMismatch) {
  EXPECT_THROW(
      {
        try {
          verify_nullspace(MatX::Zero(3, 18), MatX::Zero(17, 2));
        } catch (const Error& e) {
          EXPECT_EQ(e.code(), ErrorCode::DimensionMismatch);
          throw;
        }
      },
      Error);
}

TEST(RankOverTime, MonotoneAndBoundedByFirstBlock) {
  const Scene scene = center_point_scene();
  const ObsSetup setup = range_bearing_setup(true);
  const auto obs = build_observability_matrix(generic_traj(), scene, setup);
  const auto seq = rank_over_time(obs);
  ASSERT_EQ(seq.size(), obs.step_time.size());
  const MatX H1 = obs.M.topRows(obs.step_row_end[0]);
  EXPECT_EQ(seq.front().second, 18 - matrix_rank(H1));
  for (std::size_t i = 1; i < seq.size(); ++i) {
    EXPECT_LE(seq[i].second, seq[i - 1].second);
    EXPECT_GT(seq[i].first, seq[i - 1].first);
  }
  EXPECT_EQ(seq.back().second, 4);
}

TEST(RankOverTime, SettlesAtTableValues) {
  const auto& traj = generic_traj();
  const SensorSuite s;
  std::uint64_t salt = 100;
  for (const ObsCase& c : lemma_cases()) {
    if (c.name != "single_point" && c.name != "single_line" && c.name != "single_plane") continue;
    const ObsCaseResult r = run_obs_case(c, traj, s, 7, salt++);
    EXPECT_EQ(r.rank.back().second, c.expected_dim) << c.name;
  }
}

TEST(AnalyticNullspace, CaseNamesRoundTrip) {
  for (int i = 0; i <= static_cast<int>(NullCase::ParallelToLine); ++i) {
    const auto c = static_cast<NullCase>(i);
    EXPECT_EQ(null_case_from_name(null_case_name(c)), c);
  }
  EXPECT_THROW(null_case_from_name("no_such_case"), Error);
}

TEST(AnalyticNullspace, SinglePointTranslationBlock) {
  const auto& traj = generic_traj();
  const TrajPoint& first = traj.truth[traj.cam_index[0]];
  const Scene scene = center_point_scene();
  const NullBasis nb = analytic_nullspace(NullCase::Points, first, scene.features);
  ASSERT_EQ(nb.N.cols(), 4);
  const Vec3 g = gravity();
  EXPECT_LT((nb.N.block(kPos, 0, 3, 1) + skew(first.x.p) * g).norm(), 1e-12);
  EXPECT_LT((nb.N.block(kPos, 1, 3, 3) - Mat3::Identity()).norm(), 1e-15);
  EXPECT_LT((nb.N.block(kTh, 0, 3, 1) - first.x.R() * g).norm(), 1e-12);
  EXPECT_LT((nb.N.block(15, 1, 3, 3) - Mat3::Identity()).norm(), 1e-15);
}

TEST(AnalyticNullspace, CaseMismatch) {
  const auto& traj = generic_traj();
  const TrajPoint& first = traj.truth[traj.cam_index[0]];
  const Feature L1 = line_from_endpoints(Vec3(4, 4, 2), Vec3(5, 4, 2));
  const Feature L2 = line_from_endpoints(Vec3(4, 5, 3), Vec3(6, 5, 3));
  const Feature P = PointEuclidean{Vec3(5, 5, 2.5)};
  const Feature Pi = CpPlane{Vec3(0, 0, 4)};
  auto expect_mismatch = [&](NullCase c, const std::vector<Feature>& f) {
    try {
      analytic_nullspace(c, first, f);
      ADD_FAILURE() << null_case_name(c);
    } catch (const Error& e) {
      EXPECT_EQ(e.code(), ErrorCode::CaseMismatch) << null_case_name(c);
    }
  };
  expect_mismatch(NullCase::MultipleLines, {L1, L2});
  expect_mismatch(NullCase::SingleLine, {L1, L2});
  expect_mismatch(NullCase::Points, {P, L1});
  expect_mismatch(NullCase::SinglePlane, {Pi, Pi});
  expect_mismatch(NullCase::MultiplePlanes, {Pi, Pi});
  expect_mismatch(NullCase::PureRotation, {P, Pi});
  expect_mismatch(NullCase::TowardPoint, {L1});
  expect_mismatch(NullCase::PointLine, {});
}

// ---------------------------------------------------------------- case catalog

class LemmaCase : public ::testing::TestWithParam<int> {};

TEST_P(LemmaCase, DimensionResidualAndSpan) {
  const ObsCase c = lemma_cases()[GetParam()];
  const ObsCaseResult r = run_obs_case(c, generic_traj(), SensorSuite{}, 42, GetParam());
  EXPECT_EQ(r.dim, c.expected_dim);
  EXPECT_EQ(r.analytic_cols, c.expected_dim);
  EXPECT_LT(r.residual, 1e-8);
  EXPECT_LT(r.span, 1e-6);
  for (std::size_t i = 1; i < r.rank.size(); ++i) EXPECT_LE(r.rank[i].second, r.rank[i - 1].second);
}

INSTANTIATE_TEST_SUITE_P(All, LemmaCase,
                         ::testing::Range(0, static_cast<int>(lemma_cases().size())),
                         [](const auto& info) { return lemma_cases()[info.param].name; });

TEST(AnalyticNullspace, ColumnsIndependent) {
  const auto& traj = generic_traj();
  const TrajPoint& first = traj.truth[traj.cam_index[0]];
  std::uint64_t salt = 0;
  for (const ObsCase& c : lemma_cases()) {
    SensorSuite s;
    s.line = c.line_model;
    std::mt19937_64 rng = case_rng(11, salt++);
    const Scene scene = sample_scene(c.scene, traj, s, rng);
    const NullBasis nb = analytic_nullspace(c.analytic, first, scene.features);
    EXPECT_EQ(matrix_rank(nb.N), nb.N.cols()) << c.name;
  }
}

class GlobalCase : public ::testing::TestWithParam<int> {};

TEST_P(GlobalCase, DimensionAndYawColumn) {
  const ObsCase c = global_cases()[GetParam()];
  const ObsCaseResult r = run_obs_case(c, generic_traj(), SensorSuite{}, 42, 1000 + GetParam());
  EXPECT_EQ(r.dim, c.expected_dim);
  EXPECT_LT(r.residual, 1e-8);
  if (c.name == "global_z") {
    EXPECT_LT(r.yaw_residual, 1e-8);
  } else {
    EXPECT_GT(r.yaw_residual, 1e-8);
  }
}

INSTANTIATE_TEST_SUITE_P(All, GlobalCase,
                         ::testing::Range(0, static_cast<int>(global_cases().size())),
                         [](const auto& info) { return global_cases()[info.param].name; });

// ---------------------------------------------------------------- degenerate motions

class Degenerate : public ::testing::TestWithParam<int> {};

TEST_P(Degenerate, ExtraDirections) {
  const DegenerateProblem p = degenerate_problems()[GetParam()];
  const DegenerateResult r = run_degenerate(p, SensorSuite{}, 42, GetParam());
  EXPECT_LT(r.residual, 1e-8);
  EXPECT_EQ(r.base_dim, 4);
  if (p.at_least) {
    EXPECT_GE(r.degen_dim, r.base_dim + p.expected_extra);
  } else {
    EXPECT_EQ(r.degen_dim, r.base_dim + p.expected_extra);
  }
}

TEST_P(Degenerate, NumericDimCoversAnalyticColumns) {
  const DegenerateProblem p = degenerate_problems()[GetParam()];
  TrajectorySpec ts;
  ts.kind = p.motion;
  const GeneratedTrajectory traj = generate_trajectory(ts);
  const SensorSuite s;
  std::mt19937_64 rng = case_rng(5, GetParam());
  int target = 0;
  const Scene scene = degenerate_scene(p, traj, s, rng, target);
  ObsSetup setup;
  setup.sensors = s;
  const auto obs = build_observability_matrix(traj, scene, setup);
  const TrajPoint& first = traj.truth[traj.cam_index[0]];
  const NullBasis base = analytic_nullspace(p.base_case, first, scene.features);
  const NullBasis extra = analytic_nullspace(p.extra_case, first, scene.features, target);
  MatX all(base.N.rows(), base.N.cols() + extra.N.cols());
  all << base.N, extra.N;
  const NullSpace ns = numeric_nullspace(obs.M);
  EXPECT_GE(ns.dim, matrix_rank(all));
  EXPECT_LT(span_residual(ns.basis, all), 1e-6);
}

INSTANTIATE_TEST_SUITE_P(All, Degenerate,
                         ::testing::Range(0, static_cast<int>(degenerate_problems().size())),
                         [](const auto& info) {
                           return std::string(motion_kind_name(degenerate_problems()[info.param].motion));
                         });
