#pragma once

#include <variant>
#include <vector>

#include "ains/features.hpp"
#include "ains/imu.hpp"

namespace ains {

using Feature = std::variant<PointEuclidean, PointSpherical, PluckerLine, CpPlane, HessePlane>;

enum class FeatureKind { Point, SphericalPoint, Line, CpPlane, HessePlane };

FeatureKind feature_kind(const Feature& f);
const char* feature_kind_name(FeatureKind k);
/// Error-state dimension: point 3, line 4, planes 3.
int feature_dim(const Feature& f);
Feature feature_boxplus(const Feature& f, const VecX& delta);
/// Error of `truth` relative to `estimate` in the feature's error coordinates.
VecX feature_error(const Feature& truth, const Feature& estimate);

/// Column offsets of each feature in a state whose features start at `base`.
std::vector<int> feature_offsets(const std::vector<Feature>& features, int base = kImuDim);
int features_dim(const std::vector<Feature>& features);

/// Global position of a point feature in either parameterization.
Vec3 point_position(const Feature& f);
/// Stored parameters: point p (3), spherical (r, theta, phi), line (n, v) (6),
/// CP plane Pi (3), Hesse plane (n, d) (4).
VecX feature_params(const Feature& f);

bool is_point(const Feature& f);
bool is_line(const Feature& f);
bool is_plane(const Feature& f);

}  // namespace ains
