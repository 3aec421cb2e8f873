#include "hkwave/dynamics.hpp"

#include <cmath>
#include <stdexcept>

namespace hkwave {

int MorseSpec::bound_state_count() const {
  // n <= floor(1/(2 chi) - 1/2)
  return static_cast<int>(std::floor(1.0 / (2.0 * chi) - 0.5)) + 1;
}

Potential::Potential(HarmonicPotential h, int dim) : kind_(h), dim_(dim) {
  if (dim < 1 || dim > kMaxDim) throw std::invalid_argument("Potential: dimension must be in [1, 8]");
  if (!(h.mass > 0.0) || !(h.omega > 0.0)) throw std::invalid_argument("Potential: mass and omega must be positive");
}

Potential::Potential(MorsePotential m) : kind_(m), dim_(1) {
  if (!(m.mass > 0.0) || !(m.d_e > 0.0) || !(m.a > 0.0))
    throw std::invalid_argument("Potential: Morse mass, d_e and a must be positive");
}

Potential::Potential(CustomPotential c) : kind_(std::move(c)), dim_(std::get<CustomPotential>(kind_).dim) {
  const auto& cp = std::get<CustomPotential>(kind_);
  if (dim_ < 1 || dim_ > kMaxDim) throw std::invalid_argument("Potential: dimension must be in [1, 8]");
  if (!cp.value || !cp.gradient || !cp.hessian)
    throw std::invalid_argument("Potential: custom potential needs value, gradient and Hessian");
}

double Potential::mass() const {
  return std::visit([](const auto& k) { return k.mass; }, kind_);
}

void Potential::evaluate_1d(double q, double& v, double& grad, double& hess) const {
  if (const auto* h = std::get_if<HarmonicPotential>(&kind_)) {
    const double k = h->mass * h->omega * h->omega;
    v = 0.5 * k * q * q;
    grad = k * q;
    hess = k;
  } else if (const auto* m = std::get_if<MorsePotential>(&kind_)) {
    const double e = std::exp(-m->a * (q - m->q_eq));
    const double one_minus = 1.0 - e;
    v = m->v_eq + m->d_e * one_minus * one_minus;
    grad = 2.0 * m->d_e * m->a * e * one_minus;
    hess = 2.0 * m->d_e * m->a * m->a * e * (2.0 * e - 1.0);
  } else {
    SmallVec qv(1);
    qv[0] = q;
    SmallVec g(1);
    SmallMat h(1, 1);
    evaluate(qv, v, g, h);
    grad = g[0];
    hess = h(0, 0);
  }
}

void Potential::evaluate(const SmallVec& q, double& v, SmallVec& grad, SmallMat& hess) const {
  const int d = dim_;
  grad.resize(d);
  hess.resize(d, d);
  if (const auto* c = std::get_if<CustomPotential>(&kind_)) {
    v = c->value(q);
    grad = c->gradient(q);
    hess = c->hessian(q);
    return;
  }
  if (d == 1) {
    evaluate_1d(q[0], v, grad[0], hess(0, 0));
    return;
  }
  const auto& h = std::get<HarmonicPotential>(kind_);
  const double k = h.mass * h.omega * h.omega;
  v = 0.5 * k * q.squaredNorm();
  grad = k * q;
  hess.setIdentity();
  hess *= k;
}

double Potential::value(const SmallVec& q) const {
  double v;
  SmallVec g;
  SmallMat h;
  evaluate(q, v, g, h);
  return v;
}

Trajectory::Trajectory(int dim, std::span<const double> z0) : dim_(dim) {
  if (dim < 1 || dim > kMaxDim) throw std::invalid_argument("Trajectory: dimension must be in [1, 8]");
  if (z0.size() != 2 * static_cast<std::size_t>(dim)) throw std::invalid_argument("Trajectory: z0 must have length 2D");
  const auto d = static_cast<std::size_t>(dim);
  data_.assign(2 * d + 4 * d * d + d + d * d, 0.0);
  std::copy(z0.begin(), z0.end(), data_.begin());
  for (std::size_t i = 0; i < 2 * d; ++i) data_[2 * d + i * (2 * d) + i] = 1.0;
}

void Trajectory::assign(std::span<const double> z, const Eigen::Ref<const Eigen::MatrixXd>& m, double action,
                        double t) {
  const int n = 2 * dim_;
  std::copy(z.begin(), z.begin() + n, data_.begin());
  Eigen::Map<Eigen::MatrixXd>(data_.data() + n, n, n) = m;
  action_ = action;
  time_ = t;
  force_cached_ = false;
}

double energy(const Trajectory& traj, const Potential& pot) {
  const int d = traj.dim();
  SmallVec q(d);
  double kinetic = 0.0;
  for (int i = 0; i < d; ++i) {
    q[i] = traj.q(i);
    kinetic += traj.p(i) * traj.p(i);
  }
  return kinetic / (2.0 * pot.mass()) + pot.value(q);
}

namespace {

void advance_1d(double* data, double& v_cached, bool& force_cached, double& action, const Potential& pot,
                double dt) {
  double& q = data[0];
  double& p = data[1];
  // Column-major 2x2: [M_qq, M_pq, M_qp, M_pp]
  double& mqq = data[2];
  double& mpq = data[3];
  double& mqp = data[4];
  double& mpp = data[5];
  double& grad = data[6];
  double& hess = data[7];
  if (!force_cached) {
    pot.evaluate_1d(q, v_cached, grad, hess);
    force_cached = true;
  }
  const double inv_m = 1.0 / pot.mass();
  const double half = 0.5 * dt;
  const double lagrangian0 = 0.5 * p * p * inv_m - v_cached;

  p -= half * grad;
  mpq -= half * hess * mqq;
  mpp -= half * hess * mqp;

  q += dt * inv_m * p;
  mqq += dt * inv_m * mpq;
  mqp += dt * inv_m * mpp;

  pot.evaluate_1d(q, v_cached, grad, hess);
  p -= half * grad;
  mpq -= half * hess * mqq;
  mpp -= half * hess * mqp;

  const double lagrangian1 = 0.5 * p * p * inv_m - v_cached;
  action += half * (lagrangian0 + lagrangian1);
}

}  // namespace

void advance(Trajectory& traj, const Potential& pot, double dt) {
  if (!traj.valid_) return;
  if (pot.dim() != traj.dim_) throw std::invalid_argument("advance: potential and trajectory dimensions differ");
  const int d = traj.dim_;
  double* data = traj.data_.data();

  if (d == 1) {
    advance_1d(data, traj.v_cached_, traj.force_cached_, traj.action_, pot, dt);
  } else {
    Eigen::Map<Eigen::VectorXd> q(data, d), p(data + d, d);
    Eigen::Map<Eigen::MatrixXd> m(data + 2 * d, 2 * d, 2 * d);
    Eigen::Map<Eigen::VectorXd> grad_store(data + 2 * d + 4 * d * d, d);
    Eigen::Map<Eigen::MatrixXd> hess_store(data + 3 * d + 4 * d * d, d, d);

    SmallVec grad(d), qv(d);
    SmallMat hess(d, d);
    if (!traj.force_cached_) {
      qv = q;
      pot.evaluate(qv, traj.v_cached_, grad, hess);
      grad_store = grad;
      hess_store = hess;
      traj.force_cached_ = true;
    } else {
      grad = grad_store;
      hess = hess_store;
    }
    const double inv_m = 1.0 / pot.mass();
    const double half = 0.5 * dt;
    const double lagrangian0 = 0.5 * p.squaredNorm() * inv_m - traj.v_cached_;

    Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, 0, kMaxDim, 2 * kMaxDim> tmp(d, 2 * d);
    p -= half * grad;
    tmp.noalias() = hess * m.topRows(d);
    m.bottomRows(d) -= half * tmp;

    q += (dt * inv_m) * p;
    m.topRows(d) += (dt * inv_m) * m.bottomRows(d);

    qv = q;
    pot.evaluate(qv, traj.v_cached_, grad, hess);
    grad_store = grad;
    hess_store = hess;
    p -= half * grad;
    tmp.noalias() = hess * m.topRows(d);
    m.bottomRows(d) -= half * tmp;

    const double lagrangian1 = 0.5 * p.squaredNorm() * inv_m - traj.v_cached_;
    traj.action_ += half * (lagrangian0 + lagrangian1);
  }
  traj.time_ += dt;

  bool finite = std::isfinite(traj.action_) && std::isfinite(traj.v_cached_);
  for (std::size_t i = 0; finite && i < 2 * static_cast<std::size_t>(d) * (1 + 2 * d); ++i)
    finite = std::isfinite(data[i]);
  if (!finite) traj.valid_ = false;
}

Trajectory step(Trajectory traj, const Potential& pot, double dt) {
  if (!(dt > 0.0)) throw std::invalid_argument("step: dt must be positive");
  advance(traj, pot, dt);
  return traj;
}

Trajectory propagate(std::span<const double> z0, const Potential& pot, double dt, std::size_t n_steps) {
  if (!(dt > 0.0)) throw std::invalid_argument("propagate: dt must be positive");
  Trajectory traj(pot.dim(), z0);
  for (std::size_t k = 0; k < n_steps; ++k) advance(traj, pot, dt);
  return traj;
}

std::vector<Trajectory> propagate_history(std::span<const double> z0, const Potential& pot, double dt,
                                          std::size_t n_steps) {
  if (!(dt > 0.0)) throw std::invalid_argument("propagate: dt must be positive");
  std::vector<Trajectory> out;
  out.reserve(n_steps + 1);
  out.emplace_back(pot.dim(), z0);
  for (std::size_t k = 0; k < n_steps; ++k) {
    Trajectory next = out.back();
    advance(next, pot, dt);
    out.push_back(std::move(next));
  }
  return out;
}

Trajectory harmonic_flow(std::span<const double> z0, const HarmonicPotential& osc, double t) {
  const int d = static_cast<int>(z0.size() / 2);
  const double b = osc.b();
  const double c = std::cos(osc.omega * t), s = std::sin(osc.omega * t);
  std::vector<double> z(2 * d);
  double qp0 = 0.0, qpt = 0.0;
  for (int i = 0; i < d; ++i) {
    const double q0 = z0[i], p0 = z0[d + i];
    z[i] = q0 * c + p0 / b * s;
    z[d + i] = p0 * c - b * q0 * s;
    qp0 += q0 * p0;
    qpt += z[i] * z[d + i];
  }
  Eigen::MatrixXd m = Eigen::MatrixXd::Zero(2 * d, 2 * d);
  m.topLeftCorner(d, d).diagonal().setConstant(c);
  m.topRightCorner(d, d).diagonal().setConstant(s / b);
  m.bottomLeftCorner(d, d).diagonal().setConstant(-b * s);
  m.bottomRightCorner(d, d).diagonal().setConstant(c);
  Trajectory traj(d, z0);
  // For quadratic potentials d/dt (q p / 2) = T - V, so S = (q_t p_t - q_0 p_0) / 2.
  traj.assign(z, m, 0.5 * (qpt - qp0), t);
  return traj;
}

std::vector<double> morse_levels(const MorseSpec& spec, int n_max) {
  if (n_max < 0) throw std::out_of_range("morse_levels: n_max must be non-negative");
  if (n_max >= spec.bound_state_count())
    throw std::out_of_range("morse_levels: n_max exceeds the number of bound states");
  std::vector<double> levels(static_cast<std::size_t>(n_max) + 1);
  for (int n = 0; n <= n_max; ++n) {
    const double x = n + 0.5;
    levels[static_cast<std::size_t>(n)] = spec.hbar * spec.omega_eq * (x - spec.chi * x * x);
  }
  return levels;
}

}  // namespace hkwave
