#include "ains/imu.hpp"

#include <algorithm>
#include <array>
#include <cmath>

#include "ains/errors.hpp"

namespace ains {

ImuState ImuState::boxplus(const Vec15& dx) const {
  ImuState out = *this;
  out.q_IG = q_IG.boxplus(dx.segment<3>(kTh));
  out.b_g += dx.segment<3>(kBg);
  out.v += dx.segment<3>(kVel);
  out.b_a += dx.segment<3>(kBa);
  out.p += dx.segment<3>(kPos);
  return out;
}

Vec15 imu_error(const ImuState& truth, const ImuState& estimate) {
  Vec15 e;
  e.segment<3>(kTh) = -so3_log(truth.R() * estimate.R().transpose());
  e.segment<3>(kBg) = truth.b_g - estimate.b_g;
  e.segment<3>(kVel) = truth.v - estimate.v;
  e.segment<3>(kBa) = truth.b_a - estimate.b_a;
  e.segment<3>(kPos) = truth.p - estimate.p;
  return e;
}

namespace {

struct Kin {
  Vec4 q;
  Vec3 v, p;
};

Kin derivative(const Kin& s, const Vec3& w, const Vec3& a) {
  Eigen::Matrix4d Om = Eigen::Matrix4d::Zero();
  Om.block<3, 3>(0, 0) = -skew(w);
  Om.block<3, 1>(0, 3) = w;
  Om.block<1, 3>(3, 0) = -w.transpose();
  Kin d;
  d.q = 0.5 * Om * s.q;
  const Mat3 R = UnitQuaternion(s.q).rotation();
  d.v = R.transpose() * a + gravity();
  d.p = s.v;
  return d;
}

Kin axpy(const Kin& s, double h, const Kin& d) {
  return Kin{s.q + h * d.q, s.v + h * d.v, s.p + h * d.p};
}

// Lagrange interpolation of omega/accel at time t through nodes [lo, hi].
void interpolate(const std::vector<ImuSample>& s, std::size_t lo, std::size_t hi, double t,
                 Vec3& w, Vec3& a) {
  w.setZero();
  a.setZero();
  for (std::size_t i = lo; i <= hi; ++i) {
    double L = 1.0;
    for (std::size_t k = lo; k <= hi; ++k) {
      if (k != i) L *= (t - s[k].t) / (s[i].t - s[k].t);
    }
    w += L * s[i].omega;
    a += L * s[i].accel;
  }
}

}  // namespace

ImuState propagate_mean(const ImuState& state, const std::vector<ImuSample>& samples,
                        std::size_t first, std::size_t last) {
  if (samples.empty() || first >= samples.size()) {
    throw Error(ErrorCode::EmptySampleSeq, "no IMU samples to integrate");
  }
  ImuState out = state;
  Kin s{state.q_IG.coeffs(), state.v, state.p};
  const std::size_t n = samples.size();
  for (std::size_t j = first; j + 1 < n && j < last; ++j) {
    const double h = samples[j + 1].t - samples[j].t;
    // Four-node stencil around the interval, shifted backwards near the end.
    std::size_t lo = j > 0 ? j - 1 : 0;
    std::size_t hi = std::min(n - 1, lo + 3);
    if (hi - lo < 3) lo = hi >= 3 ? hi - 3 : 0;
    Vec3 wm, am;
    interpolate(samples, lo, hi, samples[j].t + 0.5 * h, wm, am);
    const Vec3 w0 = samples[j].omega - state.b_g, a0 = samples[j].accel - state.b_a;
    const Vec3 w1 = samples[j + 1].omega - state.b_g, a1 = samples[j + 1].accel - state.b_a;
    wm -= state.b_g;
    am -= state.b_a;
    const Kin k1 = derivative(s, w0, a0);
    const Kin k2 = derivative(axpy(s, 0.5 * h, k1), wm, am);
    const Kin k3 = derivative(axpy(s, 0.5 * h, k2), wm, am);
    const Kin k4 = derivative(axpy(s, h, k3), w1, a1);
    s.q += h / 6.0 * (k1.q + 2.0 * k2.q + 2.0 * k3.q + k4.q);
    s.v += h / 6.0 * (k1.v + 2.0 * k2.v + 2.0 * k3.v + k4.v);
    s.p += h / 6.0 * (k1.p + 2.0 * k2.p + 2.0 * k3.p + k4.p);
    s.q.normalize();
  }
  out.q_IG = UnitQuaternion(s.q);
  out.v = s.v;
  out.p = s.p;
  return out;
}

PhiIntegrator::PhiIntegrator(const Trajectory& traj, std::size_t start, Quadrature quad)
    : traj_(traj), quad_(quad), start_(start), j_(start) {
  if (start >= traj.size()) {
    throw Error(ErrorCode::IntervalNotCovered, "start index outside trajectory");
  }
  S1_.setZero();
  D1_.setZero();
  F32_.setZero();
  F52_.setZero();
}

Mat3 PhiIntegrator::C(std::size_t j) const { return traj_[j].x.R().transpose(); }

Mat3 PhiIntegrator::Cdot(std::size_t j) const {
  return C(j) * skew(traj_[j].u.omega - traj_[j].x.b_g);
}

Vec3 PhiIntegrator::fG(std::size_t j) const {
  return C(j) * (traj_[j].u.accel - traj_[j].x.b_a);
}

Vec3 PhiIntegrator::fG_dot(std::size_t j) const {
  const std::size_t n = traj_.size();
  const std::size_t a = j > 0 ? j - 1 : j;
  const std::size_t b = j + 1 < n ? j + 1 : j;
  if (a == b) return Vec3::Zero();
  return (fG(b) - fG(a)) / (traj_[b].t - traj_[a].t);
}

void PhiIntegrator::step() {
  if (j_ + 1 >= traj_.size()) {
    throw Error(ErrorCode::IntervalNotCovered, "trajectory ends before requested time");
  }
  const std::size_t a = j_, b = j_ + 1;
  const double h = traj_[b].t - traj_[a].t;
  const double c = quad_ == Quadrature::EndCorrected ? h * h / 12.0 : 0.0;
  const Mat3 Ca = C(a), Cb = C(b);
  const Mat3 S1a = S1_;
  S1_ += 0.5 * h * (Ca + Cb);
  if (c != 0.0) S1_ += c * (Cdot(a) - Cdot(b));
  D1_ += 0.5 * h * (S1a + S1_) + c * (Ca - Cb);

  const Vec3 fa = fG(a), fb = fG(b);
  const Mat3 ga = skew(fa) * S1a, gb = skew(fb) * S1_;
  const Mat3 F32a = F32_;
  F32_ += 0.5 * h * (ga + gb);
  if (c != 0.0) {
    const Mat3 dga = skew(fG_dot(a)) * S1a + skew(fa) * Ca;
    const Mat3 dgb = skew(fG_dot(b)) * S1_ + skew(fb) * Cb;
    F32_ += c * (dga - dgb);
  }
  F52_ += 0.5 * h * (F32a + F32_) + c * (ga - gb);
  j_ = b;
}

PhiBlocks PhiIntegrator::blocks() const {
  const TrajPoint& p1 = traj_[start_];
  const TrajPoint& pk = traj_[j_];
  const double dt = pk.t - p1.t;
  const Mat3 R1 = p1.x.R(), Rk = pk.x.R();
  const Mat3 C1 = R1.transpose();
  const Vec3 g = gravity();
  PhiBlocks b;
  b.dt = dt;
  b.P11 = j_ == start_ ? Mat3::Identity() : Mat3(Rk * R1.transpose());
  b.P12 = -Rk * S1_;
  b.P31 = -skew(pk.x.v - p1.x.v - g * dt) * C1;
  b.P32 = F32_;
  b.P34 = -S1_;
  b.P51 = skew(p1.x.p + p1.x.v * dt + 0.5 * g * dt * dt - pk.x.p) * C1;
  b.P52 = F52_;
  b.P53 = dt * Mat3::Identity();
  b.P54 = -D1_;
  return b;
}

Mat15 PhiIntegrator::phi15() const { return phi_from_blocks(blocks()); }

Mat15 phi_from_blocks(const PhiBlocks& b) {
  Mat15 P = Mat15::Identity();
  P.block<3, 3>(kTh, kTh) = b.P11;
  P.block<3, 3>(kTh, kBg) = b.P12;
  P.block<3, 3>(kVel, kTh) = b.P31;
  P.block<3, 3>(kVel, kBg) = b.P32;
  P.block<3, 3>(kVel, kBa) = b.P34;
  P.block<3, 3>(kPos, kTh) = b.P51;
  P.block<3, 3>(kPos, kBg) = b.P52;
  P.block<3, 3>(kPos, kVel) = b.P53;
  P.block<3, 3>(kPos, kBa) = b.P54;
  return P;
}

std::size_t traj_index(const Trajectory& traj, double t) {
  if (traj.empty()) throw Error(ErrorCode::IntervalNotCovered, "empty trajectory");
  const double tol = 1e-9;
  auto it = std::lower_bound(traj.begin(), traj.end(), t - tol,
                             [](const TrajPoint& p, double v) { return p.t < v; });
  if (it == traj.end() || std::abs(it->t - t) > tol) {
    throw Error(ErrorCode::IntervalNotCovered, "time not on the trajectory grid");
  }
  return static_cast<std::size_t>(it - traj.begin());
}

StateTransition compute_phi(const Trajectory& traj, double t1, double tk, int m_feat,
                            Quadrature quad) {
  const std::size_t i1 = traj_index(traj, t1);
  const std::size_t ik = traj_index(traj, tk);
  if (ik < i1) throw Error(ErrorCode::IntervalNotCovered, "tk precedes t1");
  PhiIntegrator integ(traj, i1, quad);
  while (integ.index() < ik) integ.step();
  StateTransition st;
  st.blocks = integ.blocks();
  st.Phi = MatX::Identity(kImuDim + m_feat, kImuDim + m_feat);
  st.Phi.topLeftCorner<kImuDim, kImuDim>() = phi_from_blocks(st.blocks);
  return st;
}

Eigen::Matrix<double, 15, 12> noise_input(const ImuState& x) {
  Eigen::Matrix<double, 15, 12> G = Eigen::Matrix<double, 15, 12>::Zero();
  G.block<3, 3>(kTh, 0) = -Mat3::Identity();
  G.block<3, 3>(kBg, 3) = Mat3::Identity();
  G.block<3, 3>(kVel, 6) = -x.R().transpose();
  G.block<3, 3>(kBa, 9) = Mat3::Identity();
  return G;
}

namespace {

Eigen::Matrix<double, 12, 12> continuous_noise(const NoiseParams& n) {
  Eigen::Matrix<double, 12, 1> d;
  d << Vec3::Constant(n.sigma_g * n.sigma_g), Vec3::Constant(n.sigma_wg * n.sigma_wg),
      Vec3::Constant(n.sigma_a * n.sigma_a), Vec3::Constant(n.sigma_wa * n.sigma_wa);
  return d.asDiagonal();
}

}  // namespace

Mat15 compute_qk(const Trajectory& traj, double tk, double tk1, const NoiseParams& noise,
                 Quadrature quad) {
  const std::size_t a = traj_index(traj, tk);
  const std::size_t b = traj_index(traj, tk1);
  if (b < a) throw Error(ErrorCode::IntervalNotCovered, "interval reversed");
  const auto Qc = continuous_noise(noise);
  std::vector<Mat15> integrand;
  integrand.reserve(b - a + 1);
  for (std::size_t j = a; j <= b; ++j) {
    PhiIntegrator integ(traj, j, quad);
    while (integ.index() < b) integ.step();
    const Mat15 Phi = integ.phi15();
    const auto G = noise_input(traj[j].x);
    integrand.push_back(Phi * G * Qc * G.transpose() * Phi.transpose());
  }
  Mat15 Q = Mat15::Zero();
  for (std::size_t j = a; j < b; ++j) {
    const double h = traj[j + 1].t - traj[j].t;
    Q += 0.5 * h * (integrand[j - a] + integrand[j + 1 - a]);
  }
  return 0.5 * (Q + Q.transpose());
}

Mat15 compute_qk_step(const Trajectory& traj, std::size_t j, const NoiseParams& noise) {
  if (j + 1 >= traj.size()) throw Error(ErrorCode::IntervalNotCovered, "no next sample");
  const auto Qc = continuous_noise(noise);
  PhiIntegrator integ(traj, j);
  integ.step();
  const Mat15 Phi = integ.phi15();
  const auto Ga = noise_input(traj[j].x);
  const auto Gb = noise_input(traj[j + 1].x);
  const double h = traj[j + 1].t - traj[j].t;
  Mat15 Q = 0.5 * h * (Phi * Ga * Qc * Ga.transpose() * Phi.transpose() +
                       Gb * Qc * Gb.transpose());
  return 0.5 * (Q + Q.transpose());
}

}  // namespace ains
