#include "ains/state.hpp"

#include <cmath>

#include "ains/errors.hpp"

namespace ains {

FeatureKind feature_kind(const Feature& f) {
  switch (f.index()) {
    case 0: return FeatureKind::Point;
    case 1: return FeatureKind::SphericalPoint;
    case 2: return FeatureKind::Line;
    case 3: return FeatureKind::CpPlane;
    default: return FeatureKind::HessePlane;
  }
}

const char* feature_kind_name(FeatureKind k) {
  switch (k) {
    case FeatureKind::Point: return "point";
    case FeatureKind::SphericalPoint: return "spherical_point";
    case FeatureKind::Line: return "line";
    case FeatureKind::CpPlane: return "cp_plane";
    case FeatureKind::HessePlane: return "hesse_plane";
  }
  return "unknown";
}

int feature_dim(const Feature& f) { return feature_kind(f) == FeatureKind::Line ? 4 : 3; }

Feature feature_boxplus(const Feature& f, const VecX& d) {
  if (d.size() != feature_dim(f)) {
    throw Error(ErrorCode::DimensionMismatch, "feature perturbation size");
  }
  switch (feature_kind(f)) {
    case FeatureKind::Point: {
      PointEuclidean p = std::get<PointEuclidean>(f);
      p.p += d.head<3>();
      return p;
    }
    case FeatureKind::SphericalPoint: {
      PointSpherical s = std::get<PointSpherical>(f);
      s.r += d(0);
      s.theta += d(1);
      s.phi += d(2);
      return s;
    }
    case FeatureKind::Line:
      return line_boxplus(std::get<PluckerLine>(f), d.head<3>(), d(3));
    case FeatureKind::CpPlane: {
      CpPlane c = std::get<CpPlane>(f);
      c.Pi += d.head<3>();
      return c;
    }
    case FeatureKind::HessePlane:
      return std::get<HessePlane>(f).boxplus(d.head<3>());
  }
  return f;
}

VecX feature_error(const Feature& truth, const Feature& est) {
  if (truth.index() != est.index()) {
    throw Error(ErrorCode::DimensionMismatch, "feature kinds differ");
  }
  switch (feature_kind(truth)) {
    case FeatureKind::Point:
      return std::get<PointEuclidean>(truth).p - std::get<PointEuclidean>(est).p;
    case FeatureKind::SphericalPoint: {
      const auto& a = std::get<PointSpherical>(truth);
      const auto& b = std::get<PointSpherical>(est);
      return Vec3(a.r - b.r, a.theta - b.theta, a.phi - b.phi);
    }
    case FeatureKind::Line: {
      const LineOrthonormal a = line_orthonormal(std::get<PluckerLine>(truth));
      const LineOrthonormal b = line_orthonormal(std::get<PluckerLine>(est));
      VecX e(4);
      e.head<3>() = -so3_log(a.R_L * b.R_L.transpose());
      e(3) = a.phi() - b.phi();
      return e;
    }
    case FeatureKind::CpPlane:
      return std::get<CpPlane>(truth).Pi - std::get<CpPlane>(est).Pi;
    case FeatureKind::HessePlane: {
      const auto& a = std::get<HessePlane>(truth);
      const auto& b = std::get<HessePlane>(est);
      double dth = a.theta() - b.theta();
      dth = std::remainder(dth, 2.0 * M_PI);
      return Vec3(dth, a.phi() - b.phi(), a.d - b.d);
    }
  }
  return VecX();
}

std::vector<int> feature_offsets(const std::vector<Feature>& features, int base) {
  std::vector<int> off;
  off.reserve(features.size());
  int c = base;
  for (const auto& f : features) {
    off.push_back(c);
    c += feature_dim(f);
  }
  return off;
}

int features_dim(const std::vector<Feature>& features) {
  int m = 0;
  for (const auto& f : features) m += feature_dim(f);
  return m;
}

Vec3 point_position(const Feature& f) {
  if (const auto* p = std::get_if<PointEuclidean>(&f)) return p->p;
  if (const auto* s = std::get_if<PointSpherical>(&f)) return s->position();
  throw Error(ErrorCode::DimensionMismatch, "feature is not a point");
}

VecX feature_params(const Feature& f) {
  return std::visit(
      [](const auto& v) -> VecX {
        using T = std::decay_t<decltype(v)>;
        VecX out;
        if constexpr (std::is_same_v<T, PointEuclidean>) {
          out = v.p;
        } else if constexpr (std::is_same_v<T, PointSpherical>) {
          out = Vec3(v.r, v.theta, v.phi);
        } else if constexpr (std::is_same_v<T, PluckerLine>) {
          out.resize(6);
          out << v.n, v.v;
        } else if constexpr (std::is_same_v<T, CpPlane>) {
          out = v.Pi;
        } else {
          out.resize(4);
          out << v.n, v.d;
        }
        return out;
      },
      f);
}

bool is_point(const Feature& f) {
  const auto k = feature_kind(f);
  return k == FeatureKind::Point || k == FeatureKind::SphericalPoint;
}

bool is_line(const Feature& f) { return feature_kind(f) == FeatureKind::Line; }

bool is_plane(const Feature& f) {
  const auto k = feature_kind(f);
  return k == FeatureKind::CpPlane || k == FeatureKind::HessePlane;
}

}  // namespace ains
