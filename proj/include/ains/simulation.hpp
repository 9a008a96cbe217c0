#pragma once

#include <cstdint>
#include <random>
#include <vector>

#include "ains/filter.hpp"
#include "ains/trajectory.hpp"

namespace ains {

/// Observations of one exteroceptive instant.
struct MeasurementFrame {
  double t = 0.0;
  /// Index into the IMU grid.
  std::size_t index = 0;
  FeatureObservations obs;
};

/// Synthesizes the measurement stream at every exteroceptive instant.  Known
/// data association: FeatureMeasurement::feature is the scene index.
/// rng == nullptr gives noise-free measurements.
std::vector<MeasurementFrame> simulate_measurements(const Trajectory& truth,
                                                    const std::vector<std::size_t>& cam_index,
                                                    const Scene& scene, const SensorSuite& sensors,
                                                    std::mt19937_64* rng);

struct SimulatedData {
  /// True states with the true (random-walk) biases; inputs are the noise-free
  /// readings a perfect IMU with those biases would produce.
  Trajectory truth;
  /// Measured IMU samples (truth inputs plus white noise).
  std::vector<ImuSample> imu;
  std::vector<std::size_t> cam_index;
  std::vector<MeasurementFrame> frames;
};

/// Adds bias random walks and sensor noise to a generated trajectory.  With
/// `noisy` false the biases stay zero and all data are exact.
SimulatedData simulate_data(const GeneratedTrajectory& traj, const Scene& scene,
                            const SensorSuite& sensors, const NoiseParams& imu_noise, bool noisy,
                            std::mt19937_64& rng);

}  // namespace ains
