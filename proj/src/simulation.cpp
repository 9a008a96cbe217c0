#include "ains/simulation.hpp"

#include <cmath>

#include "ains/errors.hpp"

namespace ains {

std::vector<MeasurementFrame> simulate_measurements(const Trajectory& truth,
                                                    const std::vector<std::size_t>& cam_index,
                                                    const Scene& scene, const SensorSuite& sensors,
                                                    std::mt19937_64* rng) {
  std::vector<MeasurementFrame> frames;
  frames.reserve(cam_index.size());
  for (std::size_t idx : cam_index) {
    MeasurementFrame fr;
    fr.index = idx;
    fr.t = truth[idx].t;
    for (std::size_t i = 0; i < scene.features.size(); ++i) {
      std::optional<FeatureMeasurement> m;
      try {
        m = simulate_feature_measurement(sensors, truth[idx].x, scene.features[i],
                                         scene.anchors[i], rng);
      } catch (const Error&) {
        continue;
      }
      if (!m) continue;
      m->feature = static_cast<int>(i);
      fr.obs.push_back(std::move(*m));
    }
    frames.push_back(std::move(fr));
  }
  return frames;
}

SimulatedData simulate_data(const GeneratedTrajectory& traj, const Scene& scene,
                            const SensorSuite& sensors, const NoiseParams& n, bool noisy,
                            std::mt19937_64& rng) {
  SimulatedData d;
  d.truth = traj.truth;
  d.cam_index = traj.cam_index;
  d.imu.reserve(d.truth.size());
  std::normal_distribution<double> nd(0.0, 1.0);
  auto gauss3 = [&](double s) { return Vec3(s * nd(rng), s * nd(rng), s * nd(rng)); };
  Vec3 bg = Vec3::Zero(), ba = Vec3::Zero();
  for (std::size_t j = 0; j < d.truth.size(); ++j) {
    TrajPoint& p = d.truth[j];
    if (noisy && j > 0) {
      const double dt = p.t - d.truth[j - 1].t;
      bg += gauss3(n.sigma_wg * std::sqrt(dt));
      ba += gauss3(n.sigma_wa * std::sqrt(dt));
    }
    p.x.b_g = bg;
    p.x.b_a = ba;
    p.u.omega += bg;
    p.u.accel += ba;
    ImuSample m = p.u;
    if (noisy) {
      const double dt = traj.imu_dt;
      m.omega += gauss3(n.sigma_g / std::sqrt(dt));
      m.accel += gauss3(n.sigma_a / std::sqrt(dt));
    }
    d.imu.push_back(m);
  }
  d.frames = simulate_measurements(d.truth, d.cam_index, scene, sensors, noisy ? &rng : nullptr);
  return d;
}

}  // namespace ains
