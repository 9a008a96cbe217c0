#include "ains/cases.hpp"

#include <Eigen/QR>

#include "ains/errors.hpp"

namespace ains {

namespace {

SceneSpec counts(int points, int lines, int planes) {
  SceneSpec s;
  s.points = points;
  s.lines = lines;
  s.planes = planes;
  return s;
}

ObsCase make(std::string name, SceneSpec s, NullCase nc, int dim,
             LineModel lm = LineModel::Projective) {
  ObsCase c;
  c.name = std::move(name);
  c.scene = s;
  c.analytic = nc;
  c.expected_dim = dim;
  c.line_model = lm;
  return c;
}

double weakest_nonnull(const NullSpace& ns) {
  const auto& sv = ns.singular_values;
  const int r = static_cast<int>(sv.size()) - ns.dim;
  if (r <= 0 || sv.size() == 0) return 0.0;
  return sv(r - 1) / sv(0);
}

}  // namespace

std::vector<ObsCase> lemma_cases() {
  std::vector<ObsCase> out;
  out.push_back(make("single_point", counts(1, 0, 0), NullCase::Points, 4));
  out.push_back(make("multiple_points", counts(3, 0, 0), NullCase::Points, 4));
  SceneSpec sph = counts(2, 0, 0);
  sph.spherical_points = true;
  out.push_back(make("spherical_points", sph, NullCase::SphericalPoints, 4));
  out.push_back(make("single_line", counts(0, 1, 0), NullCase::SingleLine, 5));
  out.push_back(
      make("single_line_direct", counts(0, 1, 0), NullCase::SingleLine, 5, LineModel::Direct));
  out.push_back(make("multiple_lines", counts(0, 2, 0), NullCase::MultipleLines, 4));
  out.push_back(make("multiple_lines_direct", counts(0, 2, 0), NullCase::MultipleLines, 4,
                     LineModel::Direct));
  out.push_back(make("single_plane", counts(0, 0, 1), NullCase::SinglePlane, 7));
  SceneSpec hesse = counts(0, 0, 1);
  hesse.hesse_planes = true;
  out.push_back(make("single_plane_hesse", hesse, NullCase::SinglePlane, 7));
  out.push_back(make("two_planes", counts(0, 0, 2), NullCase::MultiplePlanes, 5));
  out.push_back(make("three_planes", counts(0, 0, 3), NullCase::MultiplePlanes, 4));
  hesse.planes = 3;
  out.push_back(make("three_planes_hesse", hesse, NullCase::MultiplePlanes, 4));
  out.push_back(make("point_line", counts(1, 1, 0), NullCase::PointLine, 4));
  out.push_back(make("point_plane", counts(1, 0, 1), NullCase::PointPlane, 4));
  out.push_back(make("point_line_plane", counts(1, 1, 1), NullCase::PointLinePlane, 4));
  SceneSpec par = counts(0, 1, 1);
  par.line_parallel_plane = true;
  out.push_back(make("line_parallel_plane", par, NullCase::LinePlane, 5));
  out.push_back(
      make("line_parallel_plane_direct", par, NullCase::LinePlane, 5, LineModel::Direct));
  out.push_back(make("line_plane", counts(0, 1, 1), NullCase::LinePlane, 4));
  return out;
}

std::vector<ObsCase> global_cases() {
  const SceneSpec s = counts(1, 1, 1);
  const GlobalMeasModel X{GlobalKind::PosX, Vec3::UnitX()};
  const GlobalMeasModel Y{GlobalKind::PosY, Vec3::UnitX()};
  const GlobalMeasModel Z{GlobalKind::PosZ, Vec3::UnitX()};
  const GlobalMeasModel O{GlobalKind::Orientation, Vec3(1.0, 0.5, 0.3).normalized()};
  std::vector<ObsCase> out;
  auto add = [&](const char* name, std::vector<GlobalMeasModel> g, NullCase nc, int dim) {
    ObsCase c = make(name, s, nc, dim);
    c.globals = std::move(g);
    out.push_back(std::move(c));
  };
  add("global_x", {X}, NullCase::GlobalX, 2);
  add("global_y", {Y}, NullCase::GlobalY, 2);
  add("global_z", {Z}, NullCase::GlobalZ, 3);
  add("global_orientation", {O}, NullCase::GlobalOrientation, 3);
  add("global_xyz", {X, Y, Z}, NullCase::GlobalXYZ, 0);
  return out;
}

std::mt19937_64 case_rng(std::uint64_t seed, std::uint64_t salt) {
  std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                    static_cast<std::uint32_t>(salt), static_cast<std::uint32_t>(salt >> 32)};
  return std::mt19937_64(seq);
}

ObsCaseResult run_obs_case(const ObsCase& c, const GeneratedTrajectory& traj, const SensorSuite& base,
                           std::uint64_t seed, std::uint64_t salt, double rel_tol) {
  SensorSuite sensors = base;
  sensors.line = c.line_model;
  std::mt19937_64 rng = case_rng(seed, salt);
  const Scene scene = sample_scene(c.scene, traj, sensors, rng);
  ObsSetup setup;
  setup.sensors = sensors;
  setup.globals = c.globals;
  const ObservabilityMatrix obs = build_observability_matrix(traj, scene, setup);
  const NullSpace ns = numeric_nullspace(obs.M, rel_tol);
  const TrajPoint& first = traj.truth[traj.cam_index.front()];
  const NullBasis nb = analytic_nullspace(c.analytic, first, scene.features);

  ObsCaseResult r;
  r.name = c.name;
  r.dim = ns.dim;
  r.expected_dim = c.expected_dim;
  r.analytic_cols = static_cast<int>(nb.N.cols());
  r.residual = nb.N.cols() ? verify_nullspace(obs.M, nb.N) : 0.0;
  r.span = nb.N.cols() && ns.dim ? span_residual(ns.basis, nb.N) : (nb.N.cols() ? 1.0 : 0.0);
  r.weakest = weakest_nonnull(ns);
  if (!c.globals.empty()) {
    const NullBasis yaw = analytic_nullspace(NullCase::PointLinePlane, first, scene.features);
    r.yaw_residual = verify_nullspace(obs.M, yaw.N.col(0));
  }
  r.rank = rank_over_time(obs, rel_tol);
  return r;
}

// ---------------------------------------------------------------- degenerate motions

std::vector<DegenerateProblem> degenerate_problems() {
  std::vector<DegenerateProblem> out;
  auto add = [&](MotionKind m, SceneSpec s, NullCase base, NullCase extra, int k, bool at_least) {
    s.spherical_points = true;
    out.push_back({m, s, base, extra, k, at_least});
  };
  add(MotionKind::PureTranslation, counts(1, 1, 1), NullCase::PointLinePlane,
      NullCase::PureTranslation, 2, true);
  add(MotionKind::ConstantLocalAccel, counts(1, 1, 0), NullCase::PointLine,
      NullCase::ConstantLocalAccel, 1, false);
  add(MotionKind::PureRotation, counts(1, 1, 0), NullCase::PointLine, NullCase::PureRotation, 2,
      false);
  add(MotionKind::TowardPoint, counts(1, 1, 0), NullCase::PointLine, NullCase::TowardPoint, 1,
      false);
  add(MotionKind::ParallelToLine, counts(1, 1, 0), NullCase::PointLine, NullCase::ParallelToLine,
      1, false);
  return out;
}

Scene degenerate_scene(const DegenerateProblem& p, const GeneratedTrajectory& traj,
                       const SensorSuite& sensors, std::mt19937_64& rng, int& target) {
  SceneSpec s = p.scene;
  target = 0;
  const TrajectorySpec defaults;
  const Vec3 b = defaults.direction.normalized();
  const Vec3 ahead = 6.0 * b;
  switch (p.motion) {
    case MotionKind::Sinusoid3D:
    case MotionKind::ConstantLocalAccel:
      return sample_scene(s, traj, sensors, rng);
    case MotionKind::PureTranslation:
      // The sensor sits on the +x side of the circle center looking towards -x.
      s.region_lo = Vec3(3.0, 3.8, 1.6);
      s.region_hi = Vec3(5.0, 6.2, 3.4);
      return sample_scene(s, traj, sensors, rng);
    case MotionKind::PureRotation:
      s.region_lo = Vec3(3.0, -1.5, -1.5);
      s.region_hi = Vec3(6.0, 1.5, 1.5);
      return sample_scene(s, traj, sensors, rng);
    case MotionKind::TowardPoint: {
      if (s.points < 1) throw Error(ErrorCode::InvalidSpec, "toward_point needs a point");
      s.points -= 1;
      s.region_lo = ahead - Vec3::Ones();
      s.region_hi = ahead + Vec3::Ones();
      Scene scene = sample_scene(s, traj, sensors, rng);
      const Vec3 pf = 8.0 * b;
      const Feature f = p.scene.spherical_points ? Feature(spherical_from_euclidean(pf))
                                                 : Feature(PointEuclidean{pf});
      scene.features.insert(scene.features.begin(), f);
      scene.anchors.insert(scene.anchors.begin(), LineAnchors{});
      return scene;
    }
    case MotionKind::ParallelToLine: {
      if (s.lines < 1) throw Error(ErrorCode::InvalidSpec, "parallel_to_line needs a line");
      s.lines -= 1;
      s.region_lo = ahead - Vec3::Ones();
      s.region_hi = ahead + Vec3::Ones();
      Scene scene = sample_scene(s, traj, sensors, rng);
      Vec3 b1, b2;
      perp_basis(b, b1, b2);
      const Vec3 o = 1.2 * b1 + 0.5 * b2;
      const LineAnchors an{o + 6.0 * b, o + 9.0 * b};
      // Lines follow points in the scene order.
      const auto at = scene.features.begin() + s.points;
      target = s.points;
      scene.features.insert(at, line_from_endpoints(an.a, an.b));
      scene.anchors.insert(scene.anchors.begin() + s.points, an);
      return scene;
    }
  }
  throw Error(ErrorCode::InvalidSpec, "unknown motion");
}

DegenerateResult run_degenerate(const DegenerateProblem& p, const SensorSuite& sensors,
                                std::uint64_t seed, std::uint64_t salt, double rel_tol) {
  DegenerateResult r;
  r.motion = p.motion;
  r.expected_extra = p.expected_extra;
  r.at_least = p.at_least;
  ObsSetup setup;
  setup.sensors = sensors;

  // Baseline: the same feature types on the generic trajectory.
  {
    const GeneratedTrajectory traj = generate_trajectory(TrajectorySpec{});
    std::mt19937_64 rng = case_rng(seed, 2 * salt);
    const Scene scene = sample_scene(p.scene, traj, sensors, rng);
    r.base_dim = numeric_nullspace(build_observability_matrix(traj, scene, setup).M, rel_tol).dim;
  }

  TrajectorySpec ts;
  ts.kind = p.motion;
  const GeneratedTrajectory traj = generate_trajectory(ts);
  std::mt19937_64 rng = case_rng(seed, 2 * salt + 1);
  int target = 0;
  const Scene scene = degenerate_scene(p, traj, sensors, rng, target);
  const ObservabilityMatrix obs = build_observability_matrix(traj, scene, setup);
  r.degen_dim = numeric_nullspace(obs.M, rel_tol).dim;
  const NullBasis nb =
      analytic_nullspace(p.extra_case, traj.truth[traj.cam_index.front()], scene.features, target);
  r.residual = verify_nullspace(obs.M, nb.N);
  const int extra = r.degen_dim - r.base_dim;
  const bool dim_ok = p.at_least ? extra >= p.expected_extra : extra == p.expected_extra;
  r.pass = dim_ok && r.residual < 1e-8;
  return r;
}

}  // namespace ains
