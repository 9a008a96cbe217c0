#pragma once

#include <string>
#include <utility>
#include <vector>

#include "ains/imu.hpp"
#include "ains/measurements.hpp"
#include "ains/state.hpp"
#include "ains/trajectory.hpp"

namespace ains {

/// Source of one row of the observability matrix.  Global measurements carry
/// feature = -1 - (index into the global model list).
struct ObsRowTag {
  int step = 0;
  int feature = 0;
};

struct ObservabilityMatrix {
  MatX M;
  std::vector<ObsRowTag> tags;
  std::vector<double> step_time;
  /// One past the last row contributed by each step.
  std::vector<int> step_row_end;
};

struct ObsSetup {
  SensorSuite sensors;
  std::vector<GlobalMeasModel> globals;
  Quadrature quad = Quadrature::EndCorrected;
  /// Scale each block by the inverse square root of its noise covariance.
  /// Row scaling leaves the null space untouched but keeps sensors with
  /// different units comparable under a relative singular-value threshold.
  bool whiten = true;
  double global_sigma = 0.05;
};

/// Stacks H_k Phi(k,1) over the exteroceptive instants of the trajectory,
/// linearized at the true states.  Features that are not measurable at an
/// instant contribute no rows there.  k_steps < 0 uses every instant.
ObservabilityMatrix build_observability_matrix(const GeneratedTrajectory& traj,
                                               const Scene& scene, const ObsSetup& setup,
                                               int k_steps = -1);

struct NullSpace {
  int dim = 0;
  MatX basis;
  VecX singular_values;
};

constexpr double kDefaultRelTol = 1e-8;

NullSpace numeric_nullspace(const MatX& M, double rel_tol = kDefaultRelTol);
/// |M N|_F / (|M|_F |N|_F).
double verify_nullspace(const MatX& M, const MatX& N);
/// Largest residual of projecting the columns of N onto span(basis), relative
/// to each column's norm.
double span_residual(const MatX& basis, const MatX& N);
/// Null dimension after each appended step.
std::vector<std::pair<double, int>> rank_over_time(const ObservabilityMatrix& obs,
                                                   double rel_tol = kDefaultRelTol);

enum class NullCase {
  Points,
  SphericalPoints,
  SingleLine,
  MultipleLines,
  SinglePlane,
  MultiplePlanes,
  PointLine,
  PointPlane,
  LinePlane,
  PointLinePlane,
  GlobalX,
  GlobalY,
  GlobalZ,
  GlobalXYZ,
  GlobalOrientation,
  PureTranslation,
  ConstantLocalAccel,
  PureRotation,
  TowardPoint,
  ParallelToLine
};

const char* null_case_name(NullCase c);
NullCase null_case_from_name(const std::string& name);

struct NullBasis {
  MatX N;
  std::string label;
};

/// Closed-form unobservable directions evaluated at the first linearization
/// point.  Degenerate-motion cases return only their extra directions.
/// `target` selects the feature for TowardPoint / ParallelToLine.
NullBasis analytic_nullspace(NullCase c, const TrajPoint& first,
                             const std::vector<Feature>& features, int target = 0);

// Building blocks, each (15 + m) x k.

/// Global rotation of the whole system about the axes in W (3 x k).
MatX rotation_block(const ImuState& x1, const std::vector<Feature>& features, const MatX& W);
/// Global translation along the columns of T (3 x k).
MatX translation_block(const std::vector<Feature>& features, const MatX& T);
/// Velocity perturbation along the columns of D (3 x k), nothing else.
MatX velocity_block(int n, const MatX& D);

}  // namespace ains
