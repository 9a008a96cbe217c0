#include "ains/trajectory.hpp"

#include <cmath>
#include <string>

#include "ains/errors.hpp"

namespace ains {

const char* motion_kind_name(MotionKind k) {
  switch (k) {
    case MotionKind::Sinusoid3D: return "sinusoid";
    case MotionKind::PureTranslation: return "pure_translation";
    case MotionKind::ConstantLocalAccel: return "constant_local_accel";
    case MotionKind::PureRotation: return "pure_rotation";
    case MotionKind::TowardPoint: return "toward_point";
    case MotionKind::ParallelToLine: return "parallel_to_line";
  }
  return "unknown";
}

MotionKind motion_kind_from_name(const std::string& name) {
  for (MotionKind k : {MotionKind::Sinusoid3D, MotionKind::PureTranslation,
                       MotionKind::ConstantLocalAccel, MotionKind::PureRotation,
                       MotionKind::TowardPoint, MotionKind::ParallelToLine}) {
    if (name == motion_kind_name(k)) return k;
  }
  throw Error(ErrorCode::InvalidSpec, "unknown motion '" + name + "'");
}

void validate(const TrajectorySpec& s) {
  if (!(s.duration > 0.0) || !(s.imu_rate > 0.0) || !(s.cam_rate > 0.0)) {
    throw Error(ErrorCode::InvalidSpec, "duration and rates must be positive");
  }
  const double ratio = s.imu_rate / s.cam_rate;
  if (std::abs(ratio - std::round(ratio)) > 1e-9 || ratio < 1.0) {
    throw Error(ErrorCode::InvalidSpec, "imu_rate must be an integer multiple of cam_rate");
  }
  if (!(s.direction.norm() > 0.0)) throw Error(ErrorCode::InvalidSpec, "zero travel direction");
}

namespace {

// Sensor z axis to global x, sensor y to global -z.
Mat3 base_mount() {
  Mat3 R0;
  R0 << 0, 0, 1, -1, 0, 0, 0, -1, 0;
  return R0;
}

struct Angles {
  Vec3 a = Vec3::Zero();   // roll, pitch, yaw
  Vec3 da = Vec3::Zero();
};

struct Sinus {
  double v, d, dd;
};

Sinus sinus(double amp, double w, double phase, double t) {
  const double s = std::sin(w * t + phase), c = std::cos(w * t + phase);
  return {amp * s, amp * w * c, -amp * w * w * s};
}

Angles wobble_angles(const Vec3& amp, const Vec3& freq, double t) {
  Angles A;
  const Vec3 phase(0.0, 0.5, 1.0);
  for (int i = 0; i < 3; ++i) {
    const Sinus s = sinus(amp(i), freq(i), phase(i), t);
    A.a(i) = s.v;
    A.da(i) = s.d;
  }
  return A;
}

void add_wobble(const Vec3& amp, const Vec3& freq, double t, Kinematics& k) {
  const Vec3 phase(0.0, 1.0, 2.0);
  for (int i = 0; i < 3; ++i) {
    const Sinus s = sinus(amp(i), freq(i), phase(i), t);
    k.p(i) += s.v;
    k.v(i) += s.d;
    k.a_G(i) += s.dd;
  }
}

// R_bg = R_pre Rz(yaw) Ry(pitch) Rx(roll) R0, with the matching body rate.
void set_attitude(const Mat3& R_pre, const Angles& A, Kinematics& k) {
  const Mat3 Rx = rot_x(A.a(0)), Ry = rot_y(A.a(1)), Rz = rot_z(A.a(2));
  const Mat3 R0 = base_mount();
  const Mat3 R_bg = R_pre * Rz * Ry * Rx * R0;
  k.R_IG = R_bg.transpose();
  const Vec3 w = Rx.transpose() * Ry.transpose() * Vec3::UnitZ() * A.da(2) +
                 Rx.transpose() * Vec3::UnitY() * A.da(1) + Vec3::UnitX() * A.da(0);
  k.omega = R0.transpose() * w;
}

Mat3 facing(const Vec3& dir) {
  const Vec3 b = dir.normalized();
  return rot_z(std::atan2(b(1), b(0))) * rot_y(-std::asin(b(2)));
}

}  // namespace

Kinematics evaluate_motion(const TrajectorySpec& s, double t) {
  Kinematics k;
  switch (s.kind) {
    case MotionKind::Sinusoid3D:
    case MotionKind::ConstantLocalAccel: {
      const double W = s.yaw_rate, c = std::cos(W * t), sn = std::sin(W * t);
      k.p = s.center + s.radius * Vec3(c, sn, 0.0);
      k.v = s.radius * W * Vec3(-sn, c, 0.0);
      k.a_G = -s.radius * W * W * Vec3(c, sn, 0.0);
      Angles A;
      if (s.kind == MotionKind::Sinusoid3D) {
        add_wobble(s.wobble_amp, s.wobble_freq, t, k);
        A = wobble_angles(s.att_amp, s.att_freq, t);
      }
      A.a(2) += W * t + M_PI;
      A.da(2) += W;
      set_attitude(Mat3::Identity(), A, k);
      break;
    }
    case MotionKind::PureTranslation: {
      k.p = s.center + Vec3(0.6 * s.radius, 0.0, 0.0);
      add_wobble(2.5 * s.wobble_amp, s.wobble_freq, t, k);
      set_attitude(rot_z(M_PI), Angles{}, k);
      k.omega.setZero();
      break;
    }
    case MotionKind::PureRotation: {
      set_attitude(Mat3::Identity(), wobble_angles(3.0 * s.att_amp, s.att_freq, t), k);
      break;
    }
    case MotionKind::TowardPoint:
    case MotionKind::ParallelToLine: {
      const Vec3 b = s.direction.normalized();
      const Sinus a = sinus(s.travel_amp, s.travel_freq, 0.0, t);
      k.p = (s.travel_offset + a.v) * b;
      k.v = a.d * b;
      k.a_G = a.dd * b;
      set_attitude(facing(b), wobble_angles(s.att_amp, s.att_freq, t), k);
      break;
    }
  }
  return k;
}

GeneratedTrajectory generate_trajectory(const TrajectorySpec& spec) {
  validate(spec);
  GeneratedTrajectory out;
  out.imu_dt = 1.0 / spec.imu_rate;
  const auto n = static_cast<std::size_t>(std::llround(spec.duration * spec.imu_rate));
  const auto stride = static_cast<std::size_t>(std::llround(spec.imu_rate / spec.cam_rate));
  out.truth.reserve(n + 1);
  for (std::size_t i = 0; i <= n; ++i) {
    const double t = static_cast<double>(i) / spec.imu_rate;
    const Kinematics k = evaluate_motion(spec, t);
    TrajPoint tp;
    tp.t = t;
    tp.x.q_IG = UnitQuaternion::from_rotation(k.R_IG);
    tp.x.v = k.v;
    tp.x.p = k.p;
    tp.u.t = t;
    tp.u.omega = k.omega;
    tp.u.accel = k.R_IG * (k.a_G - gravity());
    out.truth.push_back(tp);
    if (i % stride == 0) out.cam_index.push_back(i);
  }
  return out;
}

std::vector<ImuSample> imu_samples(const Trajectory& traj) {
  std::vector<ImuSample> s;
  s.reserve(traj.size());
  for (const auto& p : traj) s.push_back(p.u);
  return s;
}

// ---------------------------------------------------------------- scenes

double visible_fraction(const GeneratedTrajectory& traj, const SensorSuite& sensors,
                        const Feature& f, const LineAnchors& anchors) {
  if (traj.cam_index.empty()) return 0.0;
  int seen = 0;
  for (std::size_t i : traj.cam_index) {
    try {
      if (simulate_feature_measurement(sensors, traj.truth[i].x, f, anchors, nullptr)) ++seen;
    } catch (const Error&) {
    }
  }
  return static_cast<double>(seen) / static_cast<double>(traj.cam_index.size());
}

namespace {

double angle_deg(const Vec3& a, const Vec3& b) {
  const double c = std::abs(a.normalized().dot(b.normalized()));
  return std::acos(std::min(1.0, c)) * 180.0 / M_PI;
}

Vec3 uniform_in(const Vec3& lo, const Vec3& hi, std::mt19937_64& rng) {
  std::uniform_real_distribution<double> u(0.0, 1.0);
  return lo + Vec3(u(rng), u(rng), u(rng)).cwiseProduct(hi - lo);
}

// Unit normal tilted 15..50 degrees from vertical, random azimuth and sign.
Vec3 random_plane_normal(std::mt19937_64& rng) {
  std::uniform_real_distribution<double> u(0.0, 1.0);
  const double tilt = (15.0 + 35.0 * u(rng)) * M_PI / 180.0;
  const double az = 2.0 * M_PI * u(rng);
  Vec3 n(std::sin(tilt) * std::cos(az), std::sin(tilt) * std::sin(az), std::cos(tilt));
  return u(rng) < 0.5 ? Vec3(-n) : n;
}

}  // namespace

Scene sample_scene(const SceneSpec& spec, const GeneratedTrajectory& traj, const SensorSuite& sensors,
                   std::mt19937_64& rng) {
  if (spec.points < 0 || spec.lines < 0 || spec.planes < 0) {
    throw Error(ErrorCode::InvalidSpec, "negative feature count");
  }
  if (spec.parallel_lines && spec.lines < 2) {
    throw Error(ErrorCode::InvalidSpec, "parallel_lines needs at least two lines");
  }
  if (spec.line_parallel_plane && (spec.lines < 1 || spec.planes < 1)) {
    throw Error(ErrorCode::InvalidSpec, "line_parallel_plane needs a line and a plane");
  }
  Scene scene;
  const Vec3 mid = 0.5 * (spec.region_lo + spec.region_hi);
  auto fail = [](const std::string& what) {
    throw Error(ErrorCode::PlacementFailure, "could not place " + what);
  };

  std::vector<Vec3> normals;
  std::vector<Feature> planes;
  for (int i = 0; i < spec.planes; ++i) {
    bool ok = false;
    for (int tries = 0; tries < spec.max_tries && !ok; ++tries) {
      Vec3 n = random_plane_normal(rng);
      double d = n.dot(mid) + spec.plane_distance;
      if (d < 0.0) {
        n = -n;
        d = -d;
      }
      if (d < 0.5) continue;
      bool generic = true;
      for (const Vec3& m : normals) generic = generic && angle_deg(n, m) > 10.0;
      for (std::size_t a = 0; a < normals.size() && generic; ++a) {
        for (std::size_t b = a + 1; b < normals.size() && generic; ++b) {
          generic = angle_deg(n.cross(normals[a]), normals[a].cross(normals[b])) > 10.0 &&
                    angle_deg(n.cross(normals[b]), normals[a].cross(normals[b])) > 10.0;
        }
      }
      if (!generic) continue;
      Feature f = spec.hesse_planes ? Feature(HessePlane{n, d}) : Feature(cp_from_hesse(n, d));
      if (visible_fraction(traj, sensors, f, {}) < 1.0) continue;
      normals.push_back(n);
      planes.push_back(f);
      ok = true;
    }
    if (!ok) fail("plane");
  }

  std::vector<Feature> points;
  for (int i = 0; i < spec.points; ++i) {
    bool ok = false;
    for (int tries = 0; tries < spec.max_tries && !ok; ++tries) {
      const Vec3 p = uniform_in(spec.region_lo, spec.region_hi, rng);
      Feature f = PointEuclidean{p};
      if (spec.spherical_points) {
        try {
          f = spherical_from_euclidean(p);
        } catch (const Error&) {
          continue;
        }
      }
      if (visible_fraction(traj, sensors, f, {}) < spec.min_visible_fraction) continue;
      points.push_back(f);
      ok = true;
    }
    if (!ok) fail("point");
  }

  std::vector<Feature> lines;
  std::vector<LineAnchors> line_anchors;
  std::vector<Vec3> dirs;
  std::uniform_real_distribution<double> len(1.0, 2.0);
  for (int i = 0; i < spec.lines; ++i) {
    bool ok = false;
    for (int tries = 0; tries < spec.max_tries && !ok; ++tries) {
      const Vec3 a = uniform_in(spec.region_lo, spec.region_hi, rng);
      Vec3 dir;
      if (spec.parallel_lines && !dirs.empty()) {
        dir = dirs.front();
      } else {
        dir = Vec3(std::normal_distribution<double>()(rng), std::normal_distribution<double>()(rng),
                   std::normal_distribution<double>()(rng));
        if (spec.line_parallel_plane) dir -= normals.front() * normals.front().dot(dir);
        if (dir.norm() < 1e-3) continue;
        dir.normalize();
        bool generic = true;
        for (const Vec3& e : dirs) generic = generic && angle_deg(dir, e) > spec.min_line_angle_deg;
        if (!generic) continue;
      }
      const LineAnchors an{a, a + len(rng) * dir};
      PluckerLine L;
      try {
        L = line_from_endpoints(an.a, an.b);
      } catch (const Error&) {
        continue;
      }
      if (visible_fraction(traj, sensors, L, an) < spec.min_visible_fraction) continue;
      dirs.push_back(dir);
      lines.push_back(L);
      line_anchors.push_back(an);
      ok = true;
    }
    if (!ok) fail("line");
  }

  for (auto& f : points) {
    scene.features.push_back(f);
    scene.anchors.push_back({});
  }
  for (std::size_t i = 0; i < lines.size(); ++i) {
    scene.features.push_back(lines[i]);
    scene.anchors.push_back(line_anchors[i]);
  }
  for (auto& f : planes) {
    scene.features.push_back(f);
    scene.anchors.push_back({});
  }
  return scene;
}

}  // namespace ains
