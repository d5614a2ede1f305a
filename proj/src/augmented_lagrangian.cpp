#include "avgmpc/augmented_lagrangian.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace avgmpc {

double max_violation(const NlpEvaluation& ev) {
  double v = 0.0;
  if (ev.ineq.size() > 0) v = std::max(v, ev.ineq.maxCoeff());
  if (ev.eq.size() > 0) v = std::max(v, ev.eq.cwiseAbs().maxCoeff());
  return v;
}

namespace {

struct Multipliers {
  Vector ineq;
  Vector eq;
  double rho = 1.0;
};

struct Merit {
  double value = 0.0;
  Vector grad;
  Vector ineq_hat;  // max(0, y + rho g)
  Vector eq_hat;    // mu + rho c
};

Merit merit(const NlpEvaluation& ev, const Multipliers& mp) {
  Merit m;
  m.ineq_hat = (mp.ineq + mp.rho * ev.ineq).cwiseMax(0.0);
  m.eq_hat = mp.eq + mp.rho * ev.eq;
  m.value = ev.objective + (m.ineq_hat.squaredNorm() - mp.ineq.squaredNorm()) / (2.0 * mp.rho) +
            mp.eq.dot(ev.eq) + 0.5 * mp.rho * ev.eq.squaredNorm();
  m.grad = ev.gradient;
  if (ev.ineq.size() > 0) m.grad.noalias() += ev.ineq_jac.transpose() * m.ineq_hat;
  if (ev.eq.size() > 0) m.grad.noalias() += ev.eq_jac.transpose() * m.eq_hat;
  return m;
}

double projected_gradient_norm(const Vector& z, const Vector& grad, const Box& box) {
  if (z.size() == 0) return 0.0;
  return (box.project(z - grad) - z).cwiseAbs().maxCoeff();
}

Vector lagrangian_gradient(const NlpEvaluation& ev, const Vector& ineq_mult, const Vector& eq_mult) {
  Vector g = ev.gradient;
  if (ev.ineq.size() > 0) g.noalias() += ev.ineq_jac.transpose() * ineq_mult;
  if (ev.eq.size() > 0) g.noalias() += ev.eq_jac.transpose() * eq_mult;
  return g;
}

class InnerSolver {
 public:
  InnerSolver(const NlpEvaluator& evaluate, const Box& box, const AlOptions& opt)
      : evaluate_(evaluate), box_(box), opt_(opt) {}

  // Minimizes psi(.; mp) starting from (z, ev); updates both in place.
  // Returns the number of iterations taken.
  int run(Vector& z, NlpEvaluation& ev, const Multipliers& mp, Matrix& hess, bool& hess_fresh) {
    const Eigen::Index dim = z.size();
    mp_ = &mp;
    Merit m = merit(ev, mp);
    int it = 0;
    for (; it < opt_.max_inner; ++it) {
      if (projected_gradient_norm(z, m.grad, box_) <= opt_.stationarity_tol) break;

      std::vector<Eigen::Index> free;
      free.reserve(static_cast<std::size_t>(dim));
      for (Eigen::Index i = 0; i < dim; ++i) {
        const bool at_lower = z[i] <= box_.lower()[i] && m.grad[i] > 0.0;
        const bool at_upper = z[i] >= box_.upper()[i] && m.grad[i] < 0.0;
        if (!at_lower && !at_upper) free.push_back(i);
      }
      if (free.empty()) break;

      Vector dir = newton_direction(ev, mp, m, hess, free);
      double slope = m.grad.dot(dir);
      bool used_gradient = false;
      if (!(slope < -1e-300)) {
        dir = gradient_direction(m, free);
        slope = m.grad.dot(dir);
        used_gradient = true;
      }

      Vector z_new;
      NlpEvaluation ev_new;
      Merit m_new;
      bool accepted = line_search(z, m, dir, z_new, ev_new, m_new);
      if (!accepted && !used_gradient) {
        dir = gradient_direction(m, free);
        accepted = line_search(z, m, dir, z_new, ev_new, m_new);
        hess = Matrix::Identity(dim, dim);
        hess_fresh = true;
      }
      if (!accepted) break;

      update_hessian(z_new - z, ev, ev_new, m_new, hess, hess_fresh);
      z = std::move(z_new);
      ev = std::move(ev_new);
      m = std::move(m_new);
    }
    return it;
  }

 private:
  Vector newton_direction(const NlpEvaluation& ev, const Multipliers& mp, const Merit& m,
                          const Matrix& hess, const std::vector<Eigen::Index>& free) const {
    const Eigen::Index dim = m.grad.size();
    Matrix model = hess;
    for (Eigen::Index i = 0; i < ev.ineq.size(); ++i) {
      if (m.ineq_hat[i] > 0.0)
        model.noalias() += mp.rho * ev.ineq_jac.row(i).transpose() * ev.ineq_jac.row(i);
    }
    if (ev.eq.size() > 0) model.noalias() += mp.rho * ev.eq_jac.transpose() * ev.eq_jac;

    const auto nf = static_cast<Eigen::Index>(free.size());
    Matrix reduced(nf, nf);
    Vector rhs(nf);
    for (Eigen::Index a = 0; a < nf; ++a) {
      rhs[a] = -m.grad[free[a]];
      for (Eigen::Index b = 0; b < nf; ++b) reduced(a, b) = model(free[a], free[b]);
    }
    Eigen::LDLT<Matrix> ldlt(reduced);
    Vector dir = Vector::Zero(dim);
    if (ldlt.info() != Eigen::Success || !ldlt.isPositive()) return dir;
    const Vector step = ldlt.solve(rhs);
    if (!step.allFinite()) return dir;
    for (Eigen::Index a = 0; a < nf; ++a) dir[free[a]] = step[a];
    return dir;
  }

  static Vector gradient_direction(const Merit& m, const std::vector<Eigen::Index>& free) {
    Vector dir = Vector::Zero(m.grad.size());
    const double scale = 1.0 / std::max(1.0, m.grad.cwiseAbs().maxCoeff());
    for (Eigen::Index i : free) dir[i] = -scale * m.grad[i];
    return dir;
  }

  bool line_search(const Vector& z, const Merit& m, const Vector& dir, Vector& z_new,
                   NlpEvaluation& ev_new, Merit& m_new) const {
    constexpr double kArmijo = 1e-4;
    double t = 1.0;
    for (int k = 0; k < 60; ++k, t *= 0.5) {
      z_new = box_.project(z + t * dir);
      const Vector step = z_new - z;
      if (step.cwiseAbs().maxCoeff() <= 1e-16 * (1.0 + z.cwiseAbs().maxCoeff())) return false;
      evaluate_(z_new, ev_new);
      m_new = merit(ev_new, *mp_);
      if (!std::isfinite(m_new.value)) continue;
      if (m_new.value <= m.value + kArmijo * m.grad.dot(step)) return true;
    }
    return false;
  }

  // Damped BFGS on the Lagrangian with multipliers frozen at the new point.
  void update_hessian(const Vector& s, const NlpEvaluation& ev_old, const NlpEvaluation& ev_new,
                      const Merit& m_new, Matrix& hess, bool& fresh) const {
    const Vector yv = lagrangian_gradient(ev_new, m_new.ineq_hat, m_new.eq_hat) -
                      lagrangian_gradient(ev_old, m_new.ineq_hat, m_new.eq_hat);
    const double sy = s.dot(yv);
    if (fresh && sy > 0.0) {
      hess = (yv.squaredNorm() / sy) * Matrix::Identity(s.size(), s.size());
      fresh = false;
    }
    const Vector bs = hess * s;
    const double sbs = s.dot(bs);
    if (!(sbs > 1e-300)) return;
    Vector r = yv;
    if (sy < 0.2 * sbs) {
      const double theta = 0.8 * sbs / (sbs - sy);
      r = theta * yv + (1.0 - theta) * bs;
    }
    const double sr = s.dot(r);
    if (!(sr > 1e-300)) return;
    hess.noalias() += r * r.transpose() / sr;
    hess.noalias() -= bs * bs.transpose() / sbs;
  }

 private:
  const Multipliers* mp_ = nullptr;
  const NlpEvaluator& evaluate_;
  const Box& box_;
  const AlOptions& opt_;
};

}  // namespace

AlResult minimize_augmented_lagrangian(const NlpEvaluator& evaluate, const Box& bounds,
                                       const Vector& z0, const AlOptions& options) {
  if (z0.size() != bounds.dim()) throw DomainError("starting point has wrong dimension");
  const Eigen::Index dim = z0.size();

  Vector z = bounds.project(z0);
  NlpEvaluation ev;
  evaluate(z, ev);

  Multipliers mp;
  mp.ineq = Vector::Zero(ev.ineq.size());
  mp.eq = Vector::Zero(ev.eq.size());
  mp.rho = options.initial_penalty;

  Matrix hess = Matrix::Identity(dim, dim);
  bool hess_fresh = true;

  InnerSolver inner(evaluate, bounds, options);

  AlResult result;
  double prev_violation = max_violation(ev);
  bool have_accepted = false;

  for (int outer = 0; outer < options.max_outer; ++outer) {
    result.inner_iterations += inner.run(z, ev, mp, hess, hess_fresh);
    ++result.outer_iterations;

    const double violation = max_violation(ev);
    const Merit m = merit(ev, mp);
    const double stationarity = projected_gradient_norm(z, m.grad, bounds);
    mp.ineq = m.ineq_hat;
    mp.eq = m.eq_hat;

    const bool converged =
        violation <= options.feasibility_tol && stationarity <= options.stationarity_tol;
    const bool accept = !have_accepted || violation <= result.max_violation || converged;
    if (accept) {
      have_accepted = true;
      result.z = z;
      result.objective = ev.objective;
      result.max_violation = violation;
      result.stationarity = stationarity;
      result.ineq_multipliers = mp.ineq;
      result.eq_multipliers = mp.eq;
      result.accepted_violations.push_back(violation);
    }
    if (converged) {
      result.converged = true;
      break;
    }
    if (violation > 0.1 * prev_violation)
      mp.rho = std::min(mp.rho * options.penalty_growth, options.max_penalty);
    prev_violation = violation;
  }
  return result;
}

}  // namespace avgmpc
