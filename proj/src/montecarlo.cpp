#include "ains/montecarlo.hpp"

#include <atomic>
#include <cmath>
#include <map>
#include <numbers>
#include <thread>

#include <boost/math/distributions/chi_squared.hpp>
#include <Eigen/Cholesky>

#include "ains/cases.hpp"
#include "ains/errors.hpp"

namespace ains {

const char* filter_kind_name(FilterKind k) { return k == FilterKind::Slam ? "slam" : "msckf"; }

FilterKind filter_kind_from_name(const std::string& name) {
  if (name == "slam") return FilterKind::Slam;
  if (name == "msckf") return FilterKind::Msckf;
  throw Error(ErrorCode::InvalidConfig, "unknown filter '" + name + "'");
}

MatX initial_imu_covariance(const InitSigmas& s) {
  VecX d(kImuDim);
  d << Vec3::Constant(s.theta), Vec3::Constant(s.bg), Vec3::Constant(s.vel), Vec3::Constant(s.ba),
      Vec3::Constant(s.pos);
  return d.array().square().matrix().asDiagonal();
}

MatX initial_feature_covariance(const Feature& f, const InitSigmas& s) {
  VecX d;
  switch (feature_kind(f)) {
    case FeatureKind::Point:
    case FeatureKind::SphericalPoint:
      d = Vec3::Constant(s.point);
      break;
    case FeatureKind::Line: {
      // The distance to the origin is cot(phi), so d dist / d phi = -(1 + dist^2).
      const auto& L = std::get<PluckerLine>(f);
      const double dist = L.n.norm() / L.v.norm();
      d = Vec4(s.line_angle, s.line_angle, s.line_angle, s.line_dist / (1.0 + dist * dist));
      break;
    }
    case FeatureKind::CpPlane:
    case FeatureKind::HessePlane:
      d = Vec3::Constant(s.plane);
      break;
  }
  return d.array().square().matrix().asDiagonal();
}

namespace {

VecX draw(const MatX& P, std::mt19937_64& rng) {
  std::normal_distribution<double> nd(0.0, 1.0);
  VecX n(P.rows());
  for (int i = 0; i < n.size(); ++i) n(i) = nd(rng);
  const Eigen::LLT<MatX> llt(P);
  if (llt.info() != Eigen::Success) throw Error(ErrorCode::CovarianceNotPSD, "prior not PD");
  return llt.matrixL() * n;
}

}  // namespace

ImuState perturb_imu(const ImuState& x, const MatX& P, std::mt19937_64& rng) {
  return x.boxplus(draw(P, rng));
}

Feature perturb_feature(const Feature& f, const MatX& P, std::mt19937_64& rng) {
  return feature_boxplus(f, draw(P, rng));
}

FilterInit draw_initial_estimate(const SimulatedData& data, const Scene& scene,
                                 const InitSigmas& s, std::mt19937_64& rng) {
  FilterInit init;
  init.imu = perturb_imu(data.truth[data.cam_index.front()].x, initial_imu_covariance(s), rng);
  for (const Feature& f : scene.features) {
    init.features.push_back(perturb_feature(f, initial_feature_covariance(f, s), rng));
  }
  return init;
}

// ---------------------------------------------------------------- one run

namespace {

double block_nees(const Vec3& e, const MatX& P, int off) {
  const Mat3 B = P.block<3, 3>(off, off);
  return e.dot(B.ldlt().solve(e));
}

/// Feature estimate for one MSCKF track.
std::optional<Feature> track_feature(const HybridState& s, const std::vector<TrackObservation>& tr,
                                     const SensorSuite& sensors, const Feature& prior) {
  if (!is_point(prior)) return prior;
  if (sensors.point.kind != PointModel::Mono && sensors.point.kind != PointModel::RangeBearing) {
    return prior;
  }
  const int c = sensors.point.kind == PointModel::Mono ? 0 : 1;
  std::vector<ImuState> poses;
  std::vector<Vec2> uv;
  for (const TrackObservation& o : tr) {
    poses.push_back(s.clones[s.find_clone(o.clone_id)].as_imu());
    uv.push_back(o.m.z.segment<2>(c));
  }
  try {
    return Feature(PointEuclidean{triangulate_point(poses, uv)});
  } catch (const Error&) {
    return std::nullopt;
  }
}

}  // namespace

RunHistory run_filter(const SimulatedData& data, const Scene& scene, const SensorSuite& sensors,
                      const FilterConfig& cfg, const FilterInit& init) {
  RunHistory h;
  const TruthView truth{&data.truth, &scene.features};
  const bool slam = cfg.kind == FilterKind::Slam;
  HybridState s;
  s.imu = init.imu;
  s.P = initial_imu_covariance(cfg.init);
  if (slam) {
    s.features = init.features;
    const int n = kImuDim + features_dim(s.features);
    MatX P = MatX::Zero(n, n);
    P.topLeftCorner<kImuDim, kImuDim>() = s.P;
    int o = kImuDim;
    for (std::size_t i = 0; i < s.features.size(); ++i) {
      const int d = feature_dim(s.features[i]);
      P.block(o, o, d, d) = initial_feature_covariance(s.features[i], cfg.init);
      s.feature_ids.push_back(static_cast<int>(i));
      o += d;
    }
    s.P = P;
  }

  std::map<int, std::vector<TrackObservation>> tracks;
  try {
    for (std::size_t k = 0; k < data.frames.size(); ++k) {
      const MeasurementFrame& fr = data.frames[k];
      if (k > 0) {
        ekf_propagate(s, data.imu, data.frames[k - 1].index, fr.index, cfg.imu_noise, cfg.mode,
                      truth);
      }
      const ImuState& xt = data.truth[fr.index].x;
      if (slam) {
        ekf_update(s, fr.obs, sensors, cfg.mode, &xt, truth);
      } else {
        const int id = static_cast<int>(k);
        msckf_augment(s, id, fr.t, cfg.window);
        std::vector<char> seen(scene.features.size(), 0);
        for (const FeatureMeasurement& m : fr.obs) {
          tracks[m.feature].push_back({id, m});
          seen[m.feature] = 1;
        }
        for (auto it = tracks.begin(); it != tracks.end();) {
          const bool full = it->second.size() >= cfg.window;
          if (seen[it->first] && !full) {
            ++it;
            continue;
          }
          if (it->second.size() >= 3) {
            const Feature& f_true = scene.features[it->first];
            if (const auto f_hat = track_feature(s, it->second, sensors, init.features[it->first])) {
              try {
                msckf_update_track(s, it->second, *f_hat, sensors, cfg.mode, &f_true, &data.truth);
              } catch (const Error& e) {
                if (e.code() != ErrorCode::RankDeficientHf && e.code() != ErrorCode::BehindCamera) {
                  throw;
                }
              }
            }
          }
          it = tracks.erase(it);
        }
      }
      const Vec15 e = imu_error(xt, s.imu);
      const Vec3 eth = e.segment<3>(kTh), ep = e.segment<3>(kPos);
      h.t.push_back(fr.t);
      h.theta_err.push_back(eth);
      h.pos_err.push_back(ep);
      h.ori_nees.push_back(block_nees(eth, s.P, kTh));
      h.pos_nees.push_back(block_nees(ep, s.P, kPos));
    }
  } catch (const Error& e) {
    h.failed = true;
    h.failure = e.what();
  }
  return h;
}

// ---------------------------------------------------------------- Monte Carlo

const McSeries& McReport::of(LinearizationMode m) const {
  for (const McSeries& s : series) {
    if (s.mode == m) return s;
  }
  throw Error(ErrorCode::InvalidConfig, std::string("mode not in report: ") + mode_name(m));
}

std::mt19937_64 run_rng(std::uint64_t seed, int run) {
  std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                    static_cast<std::uint32_t>(run)};
  return std::mt19937_64(seq);
}

Scene mc_scene(const McConfig& cfg, const GeneratedTrajectory& traj) {
  std::mt19937_64 rng = case_rng(cfg.seed, 0x5ce);
  return sample_scene(cfg.scene, traj, cfg.sensors, rng);
}

McReport run_monte_carlo(const McConfig& cfg) {
  if (cfg.runs < 1 || cfg.jobs < 1 || cfg.modes.empty()) {
    throw Error(ErrorCode::InvalidConfig, "runs, jobs and modes must be positive");
  }
  const GeneratedTrajectory traj = generate_trajectory(cfg.traj);
  const Scene scene = mc_scene(cfg, traj);
  const std::size_t nm = cfg.modes.size();
  std::vector<std::vector<RunHistory>> hist(static_cast<std::size_t>(cfg.runs));

  auto one_run = [&](int r) {
    std::mt19937_64 rng = run_rng(cfg.seed, r);
    const SimulatedData data = simulate_data(traj, scene, cfg.sensors, cfg.imu_noise, cfg.noise, rng);
    FilterInit init;
    if (cfg.noise) {
      init = draw_initial_estimate(data, scene, cfg.init, rng);
    } else {
      init.imu = data.truth[data.cam_index.front()].x;
      init.features = scene.features;
    }
    auto& out = hist[static_cast<std::size_t>(r)];
    for (LinearizationMode m : cfg.modes) {
      FilterConfig fc;
      fc.kind = cfg.filter;
      fc.mode = m;
      fc.window = cfg.window;
      fc.imu_noise = cfg.imu_noise;
      fc.init = cfg.init;
      out.push_back(run_filter(data, scene, cfg.sensors, fc, init));
    }
  };

  std::atomic<int> next{0};
  auto worker = [&] {
    for (int r; (r = next.fetch_add(1)) < cfg.runs;) one_run(r);
  };
  const int nt = std::min(cfg.jobs, cfg.runs);
  std::vector<std::thread> pool;
  for (int i = 1; i < nt; ++i) pool.emplace_back(worker);
  worker();
  for (auto& t : pool) t.join();

  // Sequential reduction in run order.
  McReport rep;
  rep.runs = cfg.runs;
  rep.seed = cfg.seed;
  const std::size_t nk = traj.cam_index.size();
  for (std::size_t mi = 0; mi < nm; ++mi) {
    McSeries s;
    s.mode = cfg.modes[mi];
    s.t.assign(nk, 0.0);
    std::vector<double> th2(nk, 0.0), p2(nk, 0.0), on(nk, 0.0), pn(nk, 0.0);
    int good = 0;
    for (const auto& runs : hist) {
      const RunHistory& h = runs[mi];
      if (h.failed || h.t.size() != nk) {
        ++s.failures;
        continue;
      }
      ++good;
      for (std::size_t k = 0; k < nk; ++k) {
        s.t[k] = h.t[k];
        th2[k] += h.theta_err[k].squaredNorm();
        p2[k] += h.pos_err[k].squaredNorm();
        on[k] += h.ori_nees[k];
        pn[k] += h.pos_nees[k];
      }
    }
    if (good > 0) {
      const double g = good;
      for (std::size_t k = 0; k < nk; ++k) {
        s.ori_rmse_deg.push_back(std::sqrt(th2[k] / g) * 180.0 / std::numbers::pi);
        s.pos_rmse_m.push_back(std::sqrt(p2[k] / g));
        s.ori_nees.push_back(on[k] / g);
        s.pos_nees.push_back(pn[k] / g);
        s.ori_nees_mean += s.ori_nees.back() / static_cast<double>(nk);
        s.pos_nees_mean += s.pos_nees.back() / static_cast<double>(nk);
      }
    } else {
      for (std::size_t k = 0; k < nk; ++k) s.t[k] = traj.truth[traj.cam_index[k]].t;
    }
    rep.series.push_back(std::move(s));
  }
  return rep;
}

std::pair<double, double> nees_interval(int dof, int runs) {
  const boost::math::chi_squared dist(static_cast<double>(dof) * runs);
  return {boost::math::quantile(dist, 0.025) / runs, boost::math::quantile(dist, 0.975) / runs};
}

}  // namespace ains
