// Acceptance run: one PASS/FAIL line per criterion, exit code 0 iff all pass.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <map>
#include <numbers>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include "ains/cases.hpp"
#include "ains/montecarlo.hpp"
#include "app.hpp"
#include "support.hpp"

using namespace ains;
namespace fs = std::filesystem;

namespace {

// Pinned tolerances.
constexpr double kRelTol = 1e-8;          // SVD null threshold
constexpr double kResidualTol = 1e-8;     // |M N| / (|M| |N|)
constexpr double kJacobianTol = 1e-5;     // FD relative error
constexpr int kJacobianConfigs = 100;
constexpr double kPhi54Tol = 1e-8;
constexpr double kSemigroupTol = 1e-6;
constexpr double kMinRk4Order = 3.5;
constexpr int kMcRuns = 50;
constexpr double kCrit1Seconds = 120.0;
constexpr double kCrit5Seconds = 60.0;
constexpr double kCrit7Seconds = 1200.0;
constexpr std::uint64_t kSeed = 42;

struct Outcome {
  bool pass = true;
  std::string detail;
};

double seconds_since(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

std::string fmt(const char* f, double x) {
  char b[64];
  std::snprintf(b, sizeof b, f, x);
  return b;
}

const GeneratedTrajectory& generic_traj() {
  static const GeneratedTrajectory t = generate_trajectory(TrajectorySpec{});
  return t;
}

std::vector<ObsCaseResult>& lemma_results() {
  static std::vector<ObsCaseResult> r = [] {
    std::vector<ObsCaseResult> out;
    std::uint64_t salt = 0;
    for (const ObsCase& c : lemma_cases()) {
      out.push_back(run_obs_case(c, generic_traj(), SensorSuite{}, kSeed, ++salt, kRelTol));
    }
    return out;
  }();
  return r;
}

std::vector<ObsCaseResult>& global_results() {
  static std::vector<ObsCaseResult> r = [] {
    std::vector<ObsCaseResult> out;
    std::uint64_t salt = 100;
    for (const ObsCase& c : global_cases()) {
      out.push_back(run_obs_case(c, generic_traj(), SensorSuite{}, kSeed, ++salt, kRelTol));
    }
    return out;
  }();
  return r;
}

std::vector<DegenerateResult>& degenerate_results() {
  static std::vector<DegenerateResult> r = [] {
    std::vector<DegenerateResult> out;
    std::uint64_t salt = 0;
    for (const DegenerateProblem& p : degenerate_problems()) {
      out.push_back(run_degenerate(p, SensorSuite{}, kSeed, salt++, kRelTol));
    }
    return out;
  }();
  return r;
}

// ---------------------------------------------------------------- 1

Outcome criterion1() {
  const auto t0 = std::chrono::steady_clock::now();
  const auto cases = lemma_cases();
  const auto& res = lemma_results();
  Outcome o;
  int n = 0;
  for (std::size_t i = 0; i < cases.size(); ++i) {
    ++n;
    if (res[i].dim != cases[i].expected_dim) {
      o.pass = false;
      o.detail += " " + cases[i].name + "=" + std::to_string(res[i].dim) + "(want " +
                  std::to_string(cases[i].expected_dim) + ")";
    }
  }
  const double s = seconds_since(t0);
  if (s > kCrit1Seconds) o.pass = false;
  if (generic_traj().cam_index.size() < 20) o.pass = false;
  o.detail = std::to_string(n) + " cases, " + std::to_string(generic_traj().cam_index.size()) +
             " steps, " + fmt("%.1f s", s) + o.detail;
  return o;
}

// ---------------------------------------------------------------- 2

Outcome criterion2() {
  Outcome o;
  double worst = 0.0;
  int n = 0;
  auto check = [&](const std::string& name, double r) {
    ++n;
    worst = std::max(worst, r);
    if (!(r < kResidualTol)) {
      o.pass = false;
      o.detail += " " + name + "=" + fmt("%.2e", r);
    }
  };
  const auto lc = lemma_cases();
  for (std::size_t i = 0; i < lc.size(); ++i) check(lc[i].name, lemma_results()[i].residual);
  const auto gc = global_cases();
  for (std::size_t i = 0; i < gc.size(); ++i) check(gc[i].name, global_results()[i].residual);
  for (const DegenerateResult& r : degenerate_results()) check(motion_kind_name(r.motion), r.residual);
  o.detail = std::to_string(n) + " cases, worst " + fmt("%.2e", worst) + o.detail;
  return o;
}

// ---------------------------------------------------------------- 3

Outcome criterion3() {
  Outcome o;
  const auto gc = global_cases();
  for (std::size_t i = 0; i < gc.size(); ++i) {
    const int d = global_results()[i].dim;
    o.detail += gc[i].name + "=" + std::to_string(d) + " ";
    if (d != gc[i].expected_dim) o.pass = false;
  }
  return o;
}

// ---------------------------------------------------------------- 4

Outcome criterion4() {
  Outcome o;
  const auto ps = degenerate_problems();
  for (std::size_t i = 0; i < ps.size(); ++i) {
    const DegenerateResult& r = degenerate_results()[i];
    const int extra = r.degen_dim - r.base_dim;
    const bool ok = r.pass;
    o.pass = o.pass && ok;
    o.detail += std::string(motion_kind_name(ps[i].motion)) + " +" + std::to_string(extra) +
                " (want " + (ps[i].at_least ? ">=" : "") + std::to_string(ps[i].expected_extra) +
                (ok ? ") " : ", FAIL) ");
  }
  return o;
}

// ---------------------------------------------------------------- 5

Vec3 random_in_front(std::mt19937_64& rng) {
  return Vec3(test::uniform(rng, -1.5, 1.5), test::uniform(rng, -1.5, 1.5),
              test::uniform(rng, 1.0, 6.0));
}

MatX full(const MeasJacobian& J) {
  MatX H(J.rows(), kImuDim + J.H_feat.cols());
  H << J.H_imu, J.H_feat;
  return H;
}

Outcome criterion5() {
  const auto t0 = std::chrono::steady_clock::now();
  std::map<std::string, double> worst;
  std::mt19937_64 rng(kSeed);
  auto record = [&](const std::string& suite, double e) {
    worst[suite] = std::max(worst[suite], e);
  };
  for (PointModel pm : {PointModel::Range, PointModel::Mono, PointModel::RangeBearing,
                        PointModel::Stereo}) {
    SensorSuite s;
    s.point.kind = pm;
    for (int i = 0; i < kJacobianConfigs; ++i) {
      const ImuState x = test::random_state(rng);
      const Vec3 pg = test::to_global(x, random_in_front(rng));
      for (const Feature f : {Feature(PointEuclidean{pg}), Feature(spherical_from_euclidean(pg))}) {
        const MatX Hn = test::numeric_jacobian(x, f, [&](const ImuState& y, const Feature& g) {
          return predict_measurement(s, y, g, {});
        });
        record(std::string("point_") + point_model_name(pm) + (is_point(f) ? "" : "_spherical"),
               test::rel_err(full(measurement_jacobian(s, x, f, {})), Hn));
      }
    }
  }
  const CameraIntrinsics cam;
  std::normal_distribution<double> px(0.0, 2.0);
  for (int i = 0; i < kJacobianConfigs; ++i) {
    const ImuState x = test::random_state(rng);
    const Vec3 a = test::to_global(x, random_in_front(rng));
    const Vec3 b = test::to_global(x, random_in_front(rng));
    const Feature L = line_from_endpoints(a, b);
    SensorSuite s;
    FeatureMeasurement m;
    m.z = Vec2::Zero();
    m.obs.xs = project_pixel(cam, point_transform(x, a));
    m.obs.xe = project_pixel(cam, point_transform(x, b));
    m.obs.xs.head<2>() += Vec2(px(rng), px(rng));
    m.obs.xe.head<2>() += Vec2(px(rng), px(rng));
    auto h = [&](const ImuState& y, const Feature& g) { return predict_measurement(s, y, g, m); };
    record("line_projective",
           test::rel_err(full(measurement_jacobian(s, x, L, m)), test::numeric_jacobian(x, L, h)));
    s.line = LineModel::Direct;
    m.v_m = (x.R() * std::get<PluckerLine>(L).v.normalized() + test::randn3(rng, 0.05)).normalized();
    record("line_direct",
           test::rel_err(full(measurement_jacobian(s, x, L, m)), test::numeric_jacobian(x, L, h)));
  }
  for (int i = 0; i < kJacobianConfigs; ++i) {
    const ImuState x = test::random_state(rng);
    CpPlane P;
    P.Pi = test::randn3(rng).normalized() * test::uniform(rng, 1.0, 8.0);
    if (std::abs(P.d() - P.normal().dot(x.p)) < 0.2) {
      --i;
      continue;
    }
    const SensorSuite s;
    auto h = [&](const ImuState& y, const Feature& g) { return predict_measurement(s, y, g, {}); };
    record("plane_cp", test::rel_err(full(measurement_jacobian(s, x, P, {})),
                                     test::numeric_jacobian(x, P, h)));
  }
  auto wrap = [](const VecX& d) {
    VecX o = d;
    o(0) = std::remainder(o(0), 2.0 * std::numbers::pi);
    return o;
  };
  for (int i = 0; i < kJacobianConfigs; ++i) {
    const ImuState x = test::random_state(rng);
    const HessePlane hp = HessePlane::from_angles(
        test::uniform(rng, -3.1, 3.1), test::uniform(rng, -1.2, 1.2), test::uniform(rng, 1, 8));
    const Vec3 In = x.R() * hp.n;
    if (std::abs(hp.d - hp.n.dot(x.p)) < 0.2 || std::hypot(In(0), In(1)) < 0.1) {
      --i;
      continue;
    }
    const SensorSuite s;
    auto h = [&](const ImuState& y, const Feature& g) { return predict_measurement(s, y, g, {}); };
    record("plane_hesse", test::rel_err(full(measurement_jacobian(s, x, hp, {})),
                                        test::numeric_jacobian(x, hp, h, 1e-6, wrap)));
  }
  const Feature none = PointEuclidean{};
  for (GlobalKind k :
       {GlobalKind::PosX, GlobalKind::PosY, GlobalKind::PosZ, GlobalKind::Orientation}) {
    for (int i = 0; i < kJacobianConfigs; ++i) {
      const ImuState x = test::random_state(rng);
      const GlobalMeasModel gm{k, test::randn3(rng).normalized()};
      const MatX Hn = test::numeric_jacobian(x, none, [&](const ImuState& y, const Feature&) {
                        return global_measure(gm, y);
                      }).leftCols(kImuDim);
      record("global", test::rel_err(global_jacobian(gm, x).H_imu, Hn));
    }
  }
  Outcome o;
  double w = 0.0;
  for (const auto& [name, e] : worst) {
    w = std::max(w, e);
    if (!(e < kJacobianTol)) {
      o.pass = false;
      o.detail += " " + name + "=" + fmt("%.2e", e);
    }
  }
  const double s = seconds_since(t0);
  if (s > kCrit5Seconds) o.pass = false;
  o.detail = std::to_string(worst.size()) + " suites x " + std::to_string(kJacobianConfigs) +
             " configs, worst " + fmt("%.2e", w) + ", " + fmt("%.1f s", s) + o.detail;
  return o;
}

// ---------------------------------------------------------------- 6

Outcome criterion6() {
  TrajectorySpec ts;
  ts.kind = MotionKind::PureTranslation;
  ts.duration = 3.0;
  const GeneratedTrajectory pt = generate_trajectory(ts);
  double e54 = 0.0;
  for (double tk : {0.5, 1.7, 3.0}) {
    const StateTransition st = compute_phi(pt.truth, 0.0, tk);
    const Mat3 C1 = pt.truth.front().x.R().transpose();
    e54 = std::max(e54, (st.blocks.P54 - (-0.5 * C1 * tk * tk)).norm());
  }
  TrajectorySpec gs;
  gs.duration = 10.0;
  const GeneratedTrajectory g = generate_trajectory(gs);
  std::mt19937_64 rng(kSeed);
  double semi = 0.0;
  for (int trial = 0; trial < 10; ++trial) {
    const int a = static_cast<int>(test::uniform(rng, 0, 600));
    const int b = a + static_cast<int>(test::uniform(rng, 1, 600));
    const int c = b + static_cast<int>(test::uniform(rng, 1, 600));
    const double ta = g.truth[a].t, tb = g.truth[b].t, tc = g.truth[c].t;
    const MatX direct = compute_phi(g.truth, ta, tc).Phi;
    const MatX composed = compute_phi(g.truth, tb, tc).Phi * compute_phi(g.truth, ta, tb).Phi;
    semi = std::max(semi, test::rel_err(direct, composed));
  }
  double err[2];
  const double rates[2] = {50.0, 100.0};
  for (int k = 0; k < 2; ++k) {
    TrajectorySpec s;
    s.duration = 5.0;
    s.imu_rate = rates[k];
    const GeneratedTrajectory gk = generate_trajectory(s);
    const ImuState y = propagate_mean(gk.truth.front().x, imu_samples(gk.truth));
    err[k] = (y.p - gk.truth.back().x.p).norm();
  }
  const double order = std::log2(err[0] / err[1]);
  Outcome o;
  o.pass = e54 < kPhi54Tol && semi < kSemigroupTol && order >= kMinRk4Order;
  o.detail = "Phi54 " + fmt("%.2e", e54) + ", semigroup " + fmt("%.2e", semi) + ", RK4 order " +
             fmt("%.2f", order);
  return o;
}

// ---------------------------------------------------------------- 7

McConfig mc_base(int points, int lines, int planes, int jobs) {
  McConfig c;
  c.scene.points = points;
  c.scene.lines = lines;
  c.scene.planes = planes;
  c.runs = kMcRuns;
  c.seed = kSeed;
  c.jobs = jobs;
  return c;
}

Outcome criterion7(int jobs) {
  const auto t0 = std::chrono::steady_clock::now();
  struct Config {
    const char* name;
    int points, lines, planes;
  };
  const Config configs[] = {{"pt", 8, 0, 0},       {"line", 0, 4, 0},      {"plane", 0, 0, 3},
                            {"pt+line", 8, 4, 0},  {"pt+plane", 8, 0, 3},  {"line+plane", 0, 4, 3},
                            {"all", 8, 4, 3}};
  const auto [lo, hi] = nees_interval(3, kMcRuns);
  Outcome o;
  for (const Config& c : configs) {
    const McReport r = run_monte_carlo(mc_base(c.points, c.lines, c.planes, jobs));
    const McSeries& st = r.of(LinearizationMode::Standard);
    const McSeries& id = r.of(LinearizationMode::Ideal);
    const bool ran = st.failures == 0 && id.failures == 0;
    const bool in = ran && id.ori_nees_mean >= lo && id.ori_nees_mean <= hi;
    const bool ord = ran && st.ori_nees.back() >= id.ori_nees.back();
    std::printf("  slam %-10s ideal avg ori NEES %.3f [%.2f, %.2f] %s; final ori NEES std %.3f "
                "ideal %.3f %s; failures %d/%d\n",
                c.name, id.ori_nees_mean, lo, hi, in ? "in" : "OUT", ran ? st.ori_nees.back() : 0.0,
                ran ? id.ori_nees.back() : 0.0, ord ? ">=" : "<", st.failures, id.failures);
    if (!in || !ord) {
      o.pass = false;
      o.detail += std::string(" ") + c.name + (in ? "" : ":interval") + (ord ? "" : ":ordering");
    }
  }
  McConfig m = mc_base(8, 0, 0, jobs);
  m.filter = FilterKind::Msckf;
  const McReport r = run_monte_carlo(m);
  const McSeries& st = r.of(LinearizationMode::Standard);
  const McSeries& id = r.of(LinearizationMode::Ideal);
  const bool ran = st.failures == 0 && id.failures == 0;
  const bool ord = ran && st.pos_nees.back() >= id.pos_nees.back();
  std::printf("  msckf pt        final pos NEES std %.3f ideal %.3f %s; failures %d/%d\n",
              ran ? st.pos_nees.back() : 0.0, ran ? id.pos_nees.back() : 0.0, ord ? ">=" : "<",
              st.failures, id.failures);
  if (!ord) {
    o.pass = false;
    o.detail += " msckf:ordering";
  }
  const double s = seconds_since(t0);
  if (s > kCrit7Seconds) o.pass = false;
  o.detail = "7 SLAM configs + MSCKF pt, " + std::to_string(kMcRuns) + " runs, " +
             fmt("%.0f s", s) + o.detail;
  return o;
}

// ---------------------------------------------------------------- 8

std::map<std::string, std::string> read_dir(const fs::path& d) {
  std::map<std::string, std::string> out;
  for (const auto& e : fs::directory_iterator(d)) {
    std::ifstream f(e.path(), std::ios::binary);
    std::stringstream ss;
    ss << f.rdbuf();
    out[e.path().filename().string()] = ss.str();
  }
  return out;
}

Outcome criterion8() {
  const fs::path root = fs::temp_directory_path() / "ains_acceptance_determinism";
  fs::remove_all(root);
  fs::create_directories(root);
  const fs::path cfg = root / "c.ini";
  std::ofstream(cfg) << "[general]\nseed = 9\n[trajectory]\nduration = 4\n"
                        "[scene]\npoints = 4\nlines = 1\nplanes = 1\n[mc]\nruns = 6\n"
                        "[observability]\ncases = point_line_plane, single_line\n";
  std::ostringstream sink;
  auto run = [&](const std::string& cmd, const std::string& out, const std::string& jobs) {
    const std::string c = cfg.string(), o = (root / out).string();
    const char* argv[] = {"ains", "--config", c.c_str(), "--out", o.c_str(), "--jobs", jobs.c_str(),
                          cmd.c_str()};
    return app::run_cli(8, argv, sink, sink);
  };
  Outcome o;
  int files = 0;
  for (const std::string cmd : {"mc", "simulate", "observability"}) {
    run(cmd, cmd + "_a", "1");
    run(cmd, cmd + "_b", "1");
    run(cmd, cmd + "_c", "4");
    const auto a = read_dir(root / (cmd + "_a"));
    const bool same = !a.empty() && a == read_dir(root / (cmd + "_b")) &&
                      a == read_dir(root / (cmd + "_c"));
    files += static_cast<int>(a.size());
    if (!same) {
      o.pass = false;
      o.detail += " " + cmd + " differs";
    }
  }
  fs::remove_all(root);
  o.detail = std::to_string(files) + " files compared across repeat and --jobs 1/4" + o.detail;
  return o;
}

}  // namespace

int main(int argc, char** argv) {
  int jobs = static_cast<int>(std::max(1u, std::thread::hardware_concurrency()));
  if (argc > 2 && std::string(argv[1]) == "--jobs") jobs = std::max(1, std::atoi(argv[2]));
  const std::vector<std::pair<const char*, std::function<Outcome()>>> criteria = {
      {"null-space dimensions", criterion1},
      {"analytic null-space residuals", criterion2},
      {"global measurements", criterion3},
      {"degenerate motions", criterion4},
      {"measurement Jacobians", criterion5},
      {"propagation", criterion6},
      {"Monte-Carlo consistency", [jobs] { return criterion7(jobs); }},
      {"determinism", criterion8},
  };
  bool all = true;
  for (std::size_t i = 0; i < criteria.size(); ++i) {
    Outcome o;
    try {
      o = criteria[i].second();
    } catch (const std::exception& e) {
      o.pass = false;
      o.detail = std::string("exception: ") + e.what();
    }
    all = all && o.pass;
    while (!o.detail.empty() && o.detail.back() == ' ') o.detail.pop_back();
    std::printf("%s criterion %zu (%s): %s\n", o.pass ? "PASS" : "FAIL", i + 1, criteria[i].first,
                o.detail.c_str());
    std::fflush(stdout);
  }
  return all ? 0 : 1;
}
