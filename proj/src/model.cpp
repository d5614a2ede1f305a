#include "avgmpc/model.hpp"

#include "avgmpc/augmented_lagrangian.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

namespace avgmpc {

Box::Box(Vector lower, Vector upper) : lower_(std::move(lower)), upper_(std::move(upper)) {
  if (lower_.size() != upper_.size()) throw ConfigError("box bounds have different dimensions");
  if (!lower_.allFinite() || !upper_.allFinite()) throw ConfigError("box bounds must be finite");
  if ((lower_.array() > upper_.array()).any())
    throw ConfigError("box is empty: a lower bound exceeds its upper bound");
}

bool Box::contains(const Vector& v, double tol) const {
  if (v.size() != lower_.size()) return false;
  return (v.array() >= lower_.array() - tol).all() && (v.array() <= upper_.array() + tol).all();
}

Vector Box::project(const Vector& v) const { return v.cwiseMax(lower_).cwiseMin(upper_); }

namespace {

double fd_step(double v) { return 1e-6 * std::max(1.0, std::abs(v)); }

// Calls fn(point, flat_index) for every point of a uniform grid with
// `points` nodes per dimension, last coordinate varying fastest.
template <typename Fn>
void for_each_grid_point(const Vector& lower, const Vector& upper, int points, Fn&& fn) {
  const Eigen::Index d = lower.size();
  std::vector<int> idx(static_cast<std::size_t>(d), 0);
  Vector z(d);
  const auto node = [&](Eigen::Index i, int k) {
    if (points == 1) return 0.5 * (lower[i] + upper[i]);
    if (k == points - 1) return upper[i];
    return lower[i] + (upper[i] - lower[i]) * k / (points - 1);
  };
  long flat = 0;
  while (true) {
    for (Eigen::Index i = 0; i < d; ++i) z[i] = node(i, idx[static_cast<std::size_t>(i)]);
    fn(static_cast<const Vector&>(z), flat++);
    Eigen::Index i = d - 1;
    while (i >= 0 && ++idx[static_cast<std::size_t>(i)] == points) {
      idx[static_cast<std::size_t>(i)] = 0;
      --i;
    }
    if (i < 0) break;
  }
}

int capped_density(int requested, Eigen::Index dims, long max_total) {
  int g = std::max(requested, 2);
  while (g > 2 && std::pow(static_cast<double>(g), static_cast<double>(dims)) > max_total) --g;
  return g;
}

Vector stack(const Vector& x, const Vector& u) {
  Vector z(x.size() + u.size());
  z << x, u;
  return z;
}

}  // namespace

SystemModel::SystemModel(int n, int m, int p, Functions functions, Box state_box, Box input_box)
    : n_(n), m_(m), p_(p), fns_(std::move(functions)), state_box_(std::move(state_box)),
      input_box_(std::move(input_box)) {
  if (n < 1 || m < 1 || p < 1) throw ConfigError("dimensions n, m, p must be positive");
  if (state_box_.dim() != n) throw ConfigError("state box dimension differs from n");
  if (input_box_.dim() != m) throw ConfigError("input box dimension differs from m");
  if (!fns_.dynamics || !fns_.stage_cost || !fns_.output)
    throw ConfigError("dynamics, stage cost and output must all be given");
}

SystemModel SystemModel::from_expressions(int n, int m, int p, const std::vector<std::string>& f,
                                          const std::string& ell,
                                          const std::vector<std::string>& h, Box state_box,
                                          Box input_box) {
  if (static_cast<int>(f.size()) != n) throw ConfigError("need one dynamics expression per state");
  if (static_cast<int>(h.size()) != p) throw ConfigError("need one output expression per output");
  std::vector<expr::Expr> fe, he;
  for (const auto& s : f) fe.push_back(expr::Expr::parse(s, n, m));
  for (const auto& s : h) he.push_back(expr::Expr::parse(s, n, m));
  const expr::Expr le = expr::Expr::parse(ell, n, m);

  Functions fns;
  fns.dynamics = [fe](const Vector& x, const Vector& u) {
    Vector out(static_cast<Eigen::Index>(fe.size()));
    for (std::size_t i = 0; i < fe.size(); ++i) out[static_cast<Eigen::Index>(i)] = fe[i].eval(x, u);
    return out;
  };
  fns.stage_cost = [le](const Vector& x, const Vector& u) { return le.eval(x, u); };
  fns.output = [he](const Vector& x, const Vector& u) {
    Vector out(static_cast<Eigen::Index>(he.size()));
    for (std::size_t i = 0; i < he.size(); ++i) out[static_cast<Eigen::Index>(i)] = he[i].eval(x, u);
    return out;
  };
  fns.linearize = [fe, he, le, n, m, p](const Vector& x, const Vector& u) {
    StageLinearization s;
    Vector g(n + m);
    s.f.resize(n);
    s.f_x.resize(n, n);
    s.f_u.resize(n, m);
    for (int i = 0; i < n; ++i) {
      s.f[i] = fe[static_cast<std::size_t>(i)].eval_grad(x, u, g);
      s.f_x.row(i) = g.head(n).transpose();
      s.f_u.row(i) = g.tail(m).transpose();
    }
    s.ell = le.eval_grad(x, u, g);
    s.ell_x = g.head(n);
    s.ell_u = g.tail(m);
    s.h.resize(p);
    s.h_x.resize(p, n);
    s.h_u.resize(p, m);
    for (int i = 0; i < p; ++i) {
      s.h[i] = he[static_cast<std::size_t>(i)].eval_grad(x, u, g);
      s.h_x.row(i) = g.head(n).transpose();
      s.h_u.row(i) = g.tail(m).transpose();
    }
    return s;
  };
  return SystemModel(n, m, p, std::move(fns), std::move(state_box), std::move(input_box));
}

StageLinearization SystemModel::linearize(const Vector& x, const Vector& u) const {
  if (fns_.linearize) return fns_.linearize(x, u);
  StageLinearization s;
  s.f = f(x, u);
  s.ell = ell(x, u);
  s.h = h(x, u);
  s.f_x.resize(n_, n_);
  s.f_u.resize(n_, m_);
  s.h_x.resize(p_, n_);
  s.h_u.resize(p_, m_);
  s.ell_x.resize(n_);
  s.ell_u.resize(m_);
  for (int j = 0; j < n_ + m_; ++j) {
    Vector xp = x, xm = x, up = u, um = u;
    double step;
    if (j < n_) {
      step = fd_step(x[j]);
      xp[j] += step;
      xm[j] -= step;
    } else {
      step = fd_step(u[j - n_]);
      up[j - n_] += step;
      um[j - n_] -= step;
    }
    const Vector df = (f(xp, up) - f(xm, um)) / (2 * step);
    const Vector dh = (h(xp, up) - h(xm, um)) / (2 * step);
    const double dl = (ell(xp, up) - ell(xm, um)) / (2 * step);
    if (j < n_) {
      s.f_x.col(j) = df;
      s.h_x.col(j) = dh;
      s.ell_x[j] = dl;
    } else {
      s.f_u.col(j - n_) = df;
      s.h_u.col(j - n_) = dh;
      s.ell_u[j - n_] = dl;
    }
  }
  return s;
}

void SystemModel::require_in_z(const Vector& x, const Vector& u, double tol) const {
  if (x.size() != n_ || u.size() != m_) throw DomainError("state or input has wrong dimension");
  if (!in_z(x, u, tol)) throw DomainError("point (x, u) lies outside Z");
}

StorageFunction::StorageFunction(int n, std::function<double(const Vector&)> value,
                                 std::function<Vector(const Vector&)> gradient)
    : n_(n), value_(std::move(value)), gradient_(std::move(gradient)) {
  if (n < 1) throw ConfigError("storage function needs a positive state dimension");
  if (!value_) throw ConfigError("storage function value is empty");
}

StorageFunction StorageFunction::from_expression(int n, const std::string& source) {
  const expr::Expr e = expr::Expr::parse(source, n, 0);
  const Vector none(0);
  return StorageFunction(
      n, [e, none](const Vector& x) { return e.eval(x, none); },
      [e, none, n](const Vector& x) {
        Vector g(n);
        e.eval_grad(x, none, g);
        return g;
      });
}

Vector StorageFunction::gradient(const Vector& x) const {
  if (gradient_) return gradient_(x);
  Vector g(n_);
  for (int i = 0; i < n_; ++i) {
    Vector xp = x, xm = x;
    const double step = fd_step(x[i]);
    xp[i] += step;
    xm[i] -= step;
    g[i] = (value_(xp) - value_(xm)) / (2 * step);
  }
  return g;
}

StorageFunction StorageFunction::normalized_at(const Vector& x_s) const {
  StorageFunction out = *this;
  out.offset_ = value_(x_s);
  return out;
}

DissipativityCertificate::DissipativityCertificate(StorageFunction storage, Vector multiplier,
                                                   double a, double omega, double lipschitz_h)
    : storage_(std::move(storage)), multiplier_(std::move(multiplier)), a_(a), omega_(omega),
      lipschitz_h_(lipschitz_h) {
  if (multiplier_.size() == 0) throw ConfigError("multiplier lambda_bar is empty");
  if ((multiplier_.array() < 0.0).any()) throw ConfigError("multiplier lambda_bar must be >= 0");
  if (!(a_ > 0.0) || !(omega_ > 0.0)) throw ConfigError("a and omega must be positive");
  if (!(lipschitz_h_ > 0.0)) throw ConfigError("Lipschitz constant L_h must be positive");
}

double DissipativityCertificate::rho(double r) const { return a_ * std::pow(r, omega_); }

DissipativityCertificate DissipativityCertificate::with_storage(StorageFunction s) const {
  DissipativityCertificate out = *this;
  out.storage_ = std::move(s);
  return out;
}

namespace {

double steady_residual(const SystemModel& model, const Vector& x, const Vector& u, bool use_h) {
  double r = (model.f(x, u) - x).cwiseAbs().maxCoeff();
  if (use_h) r = std::max(r, model.h(x, u).maxCoeff());
  return std::max(r, 0.0);
}

struct Refined {
  Vector x, u;
  double ell;
  double violation;
};

Refined refine_steady_state(const SystemModel& model, const Vector& z0, bool use_h, double tol) {
  const int n = model.n(), m = model.m(), p = model.p();
  const Box bounds(stack(model.state_box().lower(), model.input_box().lower()),
                   stack(model.state_box().upper(), model.input_box().upper()));
  const NlpEvaluator eval = [&](const Vector& z, NlpEvaluation& out) {
    const Vector x = z.head(n), u = z.tail(m);
    const StageLinearization s = model.linearize(x, u);
    out.objective = s.ell;
    out.gradient = stack(s.ell_x, s.ell_u);
    out.eq = s.f - x;
    out.eq_jac.resize(n, n + m);
    out.eq_jac << s.f_x - Matrix::Identity(n, n), s.f_u;
    if (use_h) {
      out.ineq = s.h;
      out.ineq_jac.resize(p, n + m);
      out.ineq_jac << s.h_x, s.h_u;
    } else {
      out.ineq.resize(0);
      out.ineq_jac.resize(0, n + m);
    }
  };
  AlOptions opt;
  opt.max_outer = 30;
  opt.feasibility_tol = std::min(tol, 1e-14);
  opt.stationarity_tol = 1e-12;
  const AlResult r = minimize_augmented_lagrangian(eval, bounds, z0, opt);
  const Vector x = r.z.head(n), u = r.z.tail(m);
  return {x, u, model.ell(x, u), steady_residual(model, x, u, use_h)};
}

}  // namespace

SteadyState solve_steady_state(const SystemModel& model, const SteadyStateOptions& options) {
  const int n = model.n(), m = model.m();
  const Eigen::Index d = n + m;
  const Vector lo = stack(model.state_box().lower(), model.input_box().lower());
  const Vector hi = stack(model.state_box().upper(), model.input_box().upper());
  const int g = capped_density(options.grid_points, d, options.max_grid_total);
  const bool use_h = options.enforce_output_constraint;

  long total = 1;
  for (Eigen::Index i = 0; i < d; ++i) total *= g;
  std::vector<double> residual(static_cast<std::size_t>(total));
  std::vector<double> cost(static_cast<std::size_t>(total));
  for_each_grid_point(lo, hi, g, [&](const Vector& z, long k) {
    const Vector x = z.head(n), u = z.tail(m);
    residual[static_cast<std::size_t>(k)] = steady_residual(model, x, u, use_h);
    cost[static_cast<std::size_t>(k)] = model.ell(x, u);
  });

  // A grid point is a candidate when the residual could reach zero within one
  // grid cell, judged by the residual variation towards its axis neighbours.
  std::vector<long> stride(static_cast<std::size_t>(d), 1);
  for (Eigen::Index i = d - 2; i >= 0; --i)
    stride[static_cast<std::size_t>(i)] = stride[static_cast<std::size_t>(i + 1)] * g;
  std::vector<long> candidates;
  for (long k = 0; k < total; ++k) {
    const double r = residual[static_cast<std::size_t>(k)];
    if (r <= options.feasibility_tol) {
      candidates.push_back(k);
      continue;
    }
    double variation = 0.0;
    for (Eigen::Index i = 0; i < d; ++i) {
      const long s = stride[static_cast<std::size_t>(i)];
      const long coord = (k / s) % g;
      if (coord > 0) variation = std::max(variation, std::abs(residual[static_cast<std::size_t>(k - s)] - r));
      if (coord < g - 1)
        variation = std::max(variation, std::abs(residual[static_cast<std::size_t>(k + s)] - r));
    }
    if (r <= variation) candidates.push_back(k);
  }
  if (candidates.empty())
    throw InfeasibleError("no feasible steady state on the grid",
                          *std::min_element(residual.begin(), residual.end()));

  std::stable_sort(candidates.begin(), candidates.end(), [&](long a, long b) {
    return cost[static_cast<std::size_t>(a)] < cost[static_cast<std::size_t>(b)];
  });

  const auto grid_point = [&](long k) {
    Vector z(d);
    for (Eigen::Index i = 0; i < d; ++i) {
      const long c = (k / stride[static_cast<std::size_t>(i)]) % g;
      z[i] = c == g - 1 ? hi[i] : lo[i] + (hi[i] - lo[i]) * static_cast<double>(c) / (g - 1);
    }
    return z;
  };

  bool found = false;
  SteadyState best;
  double best_violation = std::numeric_limits<double>::infinity();
  const auto consider = [&](const Vector& x, const Vector& u, double ell, double violation) {
    best_violation = std::min(best_violation, violation);
    if (violation > options.feasibility_tol) return;
    if (found && !(ell < best.ell - 1e-12)) return;
    found = true;
    best.x = x;
    best.u = u;
    best.ell = ell;
  };

  const std::size_t count =
      std::min(candidates.size(), static_cast<std::size_t>(std::max(options.refine_candidates, 1)));
  for (std::size_t c = 0; c < count; ++c) {
    const Vector z = grid_point(candidates[c]);
    const Vector x = z.head(n), u = z.tail(m);
    consider(x, u, cost[static_cast<std::size_t>(candidates[c])],
             residual[static_cast<std::size_t>(candidates[c])]);
    const Refined r = refine_steady_state(model, z, use_h, options.feasibility_tol);
    consider(r.x, r.u, r.ell, r.violation);
  }
  if (!found) throw InfeasibleError("steady-state refinement found no feasible point", best_violation);
  best.h = model.h(best.x, best.u);
  return best;
}

double eval_rotated_stage_cost(const SystemModel& model, const DissipativityCertificate& cert,
                               const SteadyState& ss, const Vector& x, const Vector& u) {
  model.require_in_z(x, u);
  const StorageFunction& lambda = cert.storage();
  return model.ell(x, u) - ss.ell + lambda(x) - lambda(model.f(x, u)) +
         cert.multiplier().dot(model.h(x, u));
}

double check_dissipativity_grid(const SystemModel& model, const DissipativityCertificate& cert,
                                const SteadyState& ss, int grid_density) {
  if (grid_density < 2) throw DomainError("grid density must be at least 2");
  const int n = model.n(), m = model.m();
  const Vector lo = stack(model.state_box().lower(), model.input_box().lower());
  const Vector hi = stack(model.state_box().upper(), model.input_box().upper());
  const Vector zs = stack(ss.x, ss.u);
  const StorageFunction& lambda = cert.storage();
  double worst = std::numeric_limits<double>::infinity();
  for_each_grid_point(lo, hi, grid_density, [&](const Vector& z, long) {
    const Vector x = z.head(n), u = z.tail(m);
    const double margin = model.ell(x, u) - ss.ell + cert.multiplier().dot(model.h(x, u)) -
                          cert.rho((z - zs).norm()) - lambda(model.f(x, u)) + lambda(x);
    worst = std::min(worst, margin);
  });
  return worst;
}

OutputExtremes output_extremes(const SystemModel& model, const DissipativityCertificate& cert,
                               int grid_density) {
  const int n = model.n(), m = model.m(), p = model.p();
  const Eigen::Index d = n + m;
  const Vector lo = stack(model.state_box().lower(), model.input_box().lower());
  const Vector hi = stack(model.state_box().upper(), model.input_box().upper());
  const Vector& lb = cert.multiplier();
  if (lb.size() != p) throw ConfigError("multiplier dimension differs from p");

  // Targets: lambda_bar^T h, then each h_i. Track the arg-min and arg-max of each.
  const Eigen::Index targets = 1 + p;
  Vector low = Vector::Constant(targets, std::numeric_limits<double>::infinity());
  Vector high = Vector::Constant(targets, -std::numeric_limits<double>::infinity());
  std::vector<Vector> arg_low(static_cast<std::size_t>(targets)), arg_high(static_cast<std::size_t>(targets));
  const auto visit = [&](const Vector& z) {
    const Vector hv = model.h(z.head(n), z.tail(m));
    Vector t(targets);
    t << lb.dot(hv), hv;
    for (Eigen::Index i = 0; i < targets; ++i) {
      if (t[i] < low[i]) {
        low[i] = t[i];
        arg_low[static_cast<std::size_t>(i)] = z;
      }
      if (t[i] > high[i]) {
        high[i] = t[i];
        arg_high[static_cast<std::size_t>(i)] = z;
      }
    }
  };
  for_each_grid_point(lo, hi, std::max(grid_density, 2), [&](const Vector& z, long) { visit(z); });
  if (d <= 20) {
    for (long mask = 0; mask < (1L << d); ++mask) {
      Vector z(d);
      for (Eigen::Index i = 0; i < d; ++i) z[i] = (mask >> i) & 1 ? hi[i] : lo[i];
      visit(z);
    }
  }

  const Box bounds(lo, hi);
  AlOptions opt;
  opt.max_outer = 1;
  opt.stationarity_tol = 1e-10;
  for (Eigen::Index i = 0; i < targets; ++i) {
    for (double sign : {1.0, -1.0}) {
      const NlpEvaluator eval = [&](const Vector& z, NlpEvaluation& out) {
        const StageLinearization s = model.linearize(z.head(n), z.tail(m));
        Vector grad(d);
        if (i == 0) {
          out.objective = lb.dot(s.h);
          grad << s.h_x.transpose() * lb, s.h_u.transpose() * lb;
        } else {
          out.objective = s.h[i - 1];
          grad << s.h_x.row(i - 1).transpose(), s.h_u.row(i - 1).transpose();
        }
        out.objective *= sign;
        out.gradient = sign * grad;
        out.ineq.resize(0);
        out.ineq_jac.resize(0, d);
        out.eq.resize(0);
        out.eq_jac.resize(0, d);
      };
      const Vector& start = sign > 0 ? arg_low[static_cast<std::size_t>(i)] : arg_high[static_cast<std::size_t>(i)];
      const AlResult r = minimize_augmented_lagrangian(eval, bounds, start, opt);
      visit(r.z);
    }
  }

  OutputExtremes e;
  e.theta_low = low[0];
  e.theta_high = high[0];
  e.h_low = low.tail(p);
  e.h_high = high.tail(p);
  return e;
}

double storage_sup_abs(const SystemModel& model, const DissipativityCertificate& cert,
                       int grid_density) {
  double sup = 0.0;
  for_each_grid_point(model.state_box().lower(), model.state_box().upper(), std::max(grid_density, 2),
                      [&](const Vector& x, long) { sup = std::max(sup, std::abs(cert.storage()(x))); });
  return sup;
}

std::shared_ptr<const EconomicSetup> EconomicSetup::create(SystemModel model,
                                                           DissipativityCertificate cert,
                                                           const SetupOptions& options) {
  SteadyState ss = solve_steady_state(model, options.steady_state);
  return create(std::move(model), std::move(cert), std::move(ss), options);
}

std::shared_ptr<const EconomicSetup> EconomicSetup::create(SystemModel model,
                                                           DissipativityCertificate cert,
                                                           SteadyState ss,
                                                           const SetupOptions& options) {
  if (cert.multiplier().size() != model.p())
    throw ConfigError("multiplier lambda_bar must have dimension p");
  if (ss.x.size() != model.n() || ss.u.size() != model.m())
    throw ConfigError("steady state has wrong dimension");
  ss.h = model.h(ss.x, ss.u);
  ss.ell = model.ell(ss.x, ss.u);
  const double complementarity = cert.multiplier().dot(ss.h);
  if (std::abs(complementarity) > options.complementarity_tol)
    throw ConfigError("certificate violates lambda_bar^T h_s = 0 (value " +
                      std::to_string(complementarity) + ")");
  DissipativityCertificate normalized = cert.with_storage(cert.storage().normalized_at(ss.x));
  std::shared_ptr<EconomicSetup> setup(
      new EconomicSetup(std::move(model), std::move(normalized), std::move(ss)));
  setup->extremes_ = output_extremes(setup->model_, setup->cert_, options.extremes_grid);
  setup->storage_bound_ = 2.0 * storage_sup_abs(setup->model_, setup->cert_, options.storage_grid);
  return setup;
}

}  // namespace avgmpc
