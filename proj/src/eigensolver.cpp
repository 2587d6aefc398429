#include "conclab/eigensolver.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include <Eigen/SparseLU>

namespace conclab {

namespace {

void require_perron_structure(const SparseOperator& op) {
  if (op.rows() == 0) throw SolverError("empty operator");
  if (!op.is_metzler()) {
    throw SolverError("operator has negative off-diagonal entries (not Metzler)");
  }
  if (!op.is_irreducible()) throw SolverError("operator is reducible");
}

std::vector<double> initial_vector(std::size_t n, std::span<const double> start) {
  if (start.empty()) return std::vector<double>(n, 1.0);
  if (start.size() != n) throw SolverError("start vector length mismatch");
  std::vector<double> x(start.begin(), start.end());
  for (double v : x) {
    if (!(v > 0.0)) return std::vector<double>(n, 1.0);
  }
  return x;
}

double dot(std::span<const double> a, std::span<const double> b) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
  return s;
}

double max_abs(std::span<const double> a) {
  double m = 0.0;
  for (double v : a) m = std::max(m, std::abs(v));
  return m;
}

struct Rayleigh {
  double lambda;
  double residual;
};

Rayleigh rayleigh(std::span<const double> x, std::span<const double> ax) {
  double lambda = dot(x, ax) / dot(x, x);
  double r = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) r = std::max(r, std::abs(ax[i] - lambda * x[i]));
  return {lambda, r / max_abs(x)};
}

void normalize_l2(std::vector<double>& u, double cell_volume) {
  double s = 0.0;
  for (double v : u) s += v * v;
  double scale = 1.0 / std::sqrt(s * cell_volume);
  for (double& v : u) v *= scale;
}

EigenPair finish(std::vector<double> x, const SparseOperator& op, long iterations, double tol,
                 int workers) {
  EigenPair p;
  normalize_l2(x, op.info().cell_volume());
  auto ax = op.apply(x, workers);
  auto r = rayleigh(x, ax);
  p.lambda = r.lambda;
  p.residual = r.residual;
  p.iterations = iterations;
  bool positive = std::all_of(x.begin(), x.end(), [](double v) { return v > 0.0; });
  p.certified = positive && std::isfinite(r.residual) && r.residual <= tol;
  p.u = std::move(x);
  return p;
}

/// Collatz-Wielandt bounds min/max (Ax)_i / x_i of the Perron root; valid for
/// strictly positive x.
std::pair<double, double> collatz_wielandt(std::span<const double> x, std::span<const double> ax) {
  double lo = std::numeric_limits<double>::infinity();
  double hi = -std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < x.size(); ++i) {
    double q = ax[i] / x[i];
    lo = std::min(lo, q);
    hi = std::max(hi, q);
  }
  return {lo, hi};
}

}  // namespace

std::string to_string(SolverMethod m) {
  return m == SolverMethod::Power ? "power" : "shift-invert";
}

SolverMethod solver_method_from_string(const std::string& s) {
  if (s == "power") return SolverMethod::Power;
  if (s == "shift-invert") return SolverMethod::ShiftInvert;
  throw SolverError("unknown solver method '" + s + "'");
}

EigenPair principal_eigenpair(const SparseOperator& op, double tol, long max_iter,
                              std::span<const double> start, int workers) {
  if (!(tol > 0.0)) throw SolverError("tolerance must be positive");
  require_perron_structure(op);
  const std::size_t n = op.rows();

  double dmin = std::numeric_limits<double>::infinity();
  double dmax = -std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < n; ++i) {
    dmin = std::min(dmin, op.diagonal(i));
    dmax = std::max(dmax, op.diagonal(i));
  }
  const double shift = dmin - 1.0;
  const double tau = 0.9 / (dmax - shift);

  auto x = initial_vector(n, start);
  std::vector<double> ax(n);
  long it = 0;
  for (;; ++it) {
    op.apply(x, ax, workers);
    auto r = rayleigh(x, ax);
    if (r.residual <= tol || it >= max_iter) break;
    // x <- B x, then rescale by the max entry.
    double m = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      x[i] += tau * (ax[i] - shift * x[i]);
      m = std::max(m, x[i]);
    }
    for (double& v : x) v /= m;
  }
  return finish(std::move(x), op, it, tol, workers);
}

EigenPair principal_eigenpair_shift_invert(const SparseOperator& op, double tol, long max_iter,
                                           std::span<const double> start, int workers) {
  if (!(tol > 0.0)) throw SolverError("tolerance must be positive");
  require_perron_structure(op);
  const std::size_t n = op.rows();
  constexpr int kMaxFactorizations = 40;

  double scale = 1.0;
  for (std::size_t i = 0; i < n; ++i) scale = std::max(scale, std::abs(op.diagonal(i)));
  // Keeps sigma strictly above the Perron root despite rounding in the bound.
  const double margin = 1e-9 * scale;

  Eigen::SparseMatrix<double> A = op.to_eigen();
  Eigen::SparseMatrix<double> I(n, n);
  I.setIdentity();
  // sigma I - A is a nonsingular M-matrix for sigma above the Perron root.
  // Diagonal pivoting keeps every elimination and substitution step free of
  // cancellation, so solves of positive right-hand sides stay positive.
  Eigen::SparseLU<Eigen::SparseMatrix<double>, Eigen::COLAMDOrdering<int>> lu;
  lu.setPivotThreshold(0.0);
  bool analyzed = false;
  int factorizations = 0;
  auto factor = [&](double sigma) {
    Eigen::SparseMatrix<double> M = sigma * I - A;
    M.makeCompressed();
    if (!analyzed) {
      lu.analyzePattern(M);
      analyzed = true;
    }
    lu.factorize(M);
    ++factorizations;
    if (lu.info() != Eigen::Success) throw SolverError("sparse LU factorization failed");
  };

  auto x = initial_vector(n, start);
  std::vector<double> ax(n);
  op.apply(x, ax, workers);
  auto [lo, hi] = collatz_wielandt(x, ax);
  double sigma = hi + margin;
  factor(sigma);

  Eigen::VectorXd rhs(n);
  long it = 0;
  while (it < max_iter) {
    auto r = rayleigh(x, ax);
    if (r.residual <= tol) break;
    for (std::size_t i = 0; i < n; ++i) rhs[i] = x[i];
    Eigen::VectorXd y = lu.solve(rhs);
    ++it;
    double m = y.maxCoeff();
    if (!(m > 0.0) || !std::isfinite(m)) throw SolverError("inverse iteration broke down");
    for (std::size_t i = 0; i < n; ++i) x[i] = y[i] / m;
    op.apply(x, ax, workers);
    if (std::all_of(x.begin(), x.end(), [](double v) { return v > 0.0; })) {
      std::tie(lo, hi) = collatz_wielandt(x, ax);
      double next = hi + margin;
      if (next - lo < 0.25 * (sigma - lo) && factorizations < kMaxFactorizations) {
        sigma = next;
        factor(sigma);
      }
    }
  }
  return finish(std::move(x), op, it, tol, workers);
}

EigenPair solve_principal(const SparseOperator& op, const SolverOptions& opts,
                          std::span<const double> start) {
  if (opts.method == SolverMethod::Power) {
    return principal_eigenpair(op, opts.tol, opts.max_iter, start, opts.workers);
  }
  return principal_eigenpair_shift_invert(op, opts.tol, opts.max_iter, start, opts.workers);
}

void attach_gauge_image(EigenPair& pair, const Scenario& scenario, const Grid& grid,
                        double epsilon) {
  auto L = grid.sample([&](std::span<const double> x) { return scenario.L().eval(x); });
  double Lmin = *std::min_element(L.begin(), L.end());
  std::vector<double> v(pair.u.size());
  for (std::size_t i = 0; i < v.size(); ++i) {
    v[i] = std::exp(-(L[i] - Lmin) / (2.0 * epsilon)) * pair.u[i];
  }
  normalize_l2(v, grid.cell_volume());
  pair.v = std::move(v);
}

std::vector<SweepEntry> eigen_sweep(const Scenario& scenario, int n,
                                    std::span<const double> epsilons, const SweepOptions& opts) {
  for (std::size_t k = 0; k < epsilons.size(); ++k) {
    if (!(epsilons[k] > 0.0)) throw SolverError("epsilon values must be positive");
    if (k > 0 && !(epsilons[k] < epsilons[k - 1])) {
      throw SolverError("epsilon list must be strictly decreasing");
    }
  }
  Grid grid(scenario.dim(), n);
  std::vector<SweepEntry> out;
  std::vector<double> previous;
  for (double eps : epsilons) {
    SweepEntry e;
    e.epsilon = eps;
    try {
      auto op = assemble(scenario, grid, eps, opts.assembly);
      std::span<const double> start;
      if (opts.warm_start && !previous.empty()) start = previous;
      e.pair = solve_principal(op, opts.solver, start);
      attach_gauge_image(e.pair, scenario, grid, eps);
      e.lambda = e.pair.lambda;
      if (!e.pair.certified) e.error = "solver did not reach the residual tolerance";
      previous = e.pair.u;
    } catch (const std::exception& ex) {
      e.error = ex.what();
      e.lambda = std::numeric_limits<double>::quiet_NaN();
    }
    out.push_back(std::move(e));
  }
  return out;
}

Extrapolation extrapolate_limit(std::span<const double> eps, std::span<const double> lam) {
  if (eps.size() != lam.size()) throw SolverError("extrapolation: length mismatch");
  if (eps.size() < 3) throw SolverError("extrapolation needs at least three entries");
  const double ratio0 = eps[0] / eps[1];
  for (std::size_t k = 0; k + 1 < eps.size(); ++k) {
    double r = eps[k] / eps[k + 1];
    if (!(r > 1.0) || std::abs(r / ratio0 - 1.0) > 0.01) {
      throw SolverError("extrapolation needs a geometric, decreasing epsilon schedule");
    }
  }
  const std::size_t m = lam.size();
  const double l1 = lam[m - 3], l2 = lam[m - 2], l3 = lam[m - 1];
  const double rho = eps[m - 2] / eps[m - 1];
  const double d1 = l2 - l1, d2 = l3 - l2;

  Extrapolation ex;
  if (d1 == 0.0 && d2 == 0.0) {
    ex.lambda0 = l3;
    ex.error = 0.0;
    ex.order = 0.0;
    ex.order_fitted = false;
    return ex;
  }
  double p = 1.0;
  if (d2 != 0.0 && d1 / d2 > 1.0) {
    p = std::log(d1 / d2) / std::log(rho);
  } else {
    ex.order_fitted = false;
  }
  double correction = d2 / (std::pow(rho, p) - 1.0);
  ex.lambda0 = l3 + correction;
  ex.error = std::abs(correction);
  ex.order = p;
  return ex;
}

}  // namespace conclab
