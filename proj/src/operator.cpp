#include "conclab/operator.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>
#include <ostream>
#include <queue>

#include "conclab/parallel.hpp"

namespace conclab {

Grid::Grid(int dim, int n) : dim_(dim), n_(n) {
  if (dim < 1 || dim > kMaxDim) throw AssemblyError("grid dim must be 1, 2 or 3");
  if (n < 8) throw AssemblyError("grid needs n >= 8");
  stride_.assign(dim, 1);
  size_ = 1;
  for (int d = dim - 1; d >= 0; --d) {
    stride_[d] = size_;
    size_ *= static_cast<std::size_t>(n);
  }
}

double Grid::cell_volume() const { return std::pow(h(), dim_); }

std::size_t Grid::index(std::span<const int> multi) const {
  std::size_t idx = 0;
  for (int d = 0; d < dim_; ++d) {
    int m = ((multi[d] % n_) + n_) % n_;
    idx += static_cast<std::size_t>(m) * stride_[d];
  }
  return idx;
}

std::vector<int> Grid::multi_index(std::size_t idx) const {
  std::vector<int> m(dim_);
  for (int d = 0; d < dim_; ++d) {
    m[d] = static_cast<int>((idx / stride_[d]) % n_);
  }
  return m;
}

std::vector<double> Grid::coords(std::size_t idx) const {
  std::vector<double> x(dim_);
  for (int d = 0; d < dim_; ++d) x[d] = static_cast<double>((idx / stride_[d]) % n_) * h();
  return x;
}

std::size_t Grid::neighbor(std::size_t idx, int axis, int step) const {
  int m = static_cast<int>((idx / stride_[axis]) % n_);
  int mm = ((m + step) % n_ + n_) % n_;
  return idx + (static_cast<std::ptrdiff_t>(mm) - m) * static_cast<std::ptrdiff_t>(stride_[axis]);
}

double OperatorInfo::cell_volume() const {
  return n > 0 ? std::pow(kTwoPi / n, dim) : 1.0;
}

std::string to_string(Scheme s) { return s == Scheme::Upwind ? "upwind" : "centered"; }

Scheme scheme_from_string(const std::string& s) {
  if (s == "upwind") return Scheme::Upwind;
  if (s == "centered") return Scheme::Centered;
  throw AssemblyError("unknown scheme '" + s + "'");
}

// ---------------------------------------------------------------------------

SparseOperator::SparseOperator(std::size_t n, std::vector<std::size_t> row_ptr,
                               std::vector<std::size_t> cols, std::vector<double> values,
                               OperatorInfo info)
    : n_(n),
      row_ptr_(std::move(row_ptr)),
      cols_(std::move(cols)),
      values_(std::move(values)),
      info_(std::move(info)) {
  if (row_ptr_.size() != n_ + 1 || cols_.size() != values_.size() ||
      row_ptr_.back() != values_.size()) {
    throw AssemblyError("inconsistent row-compressed storage");
  }
}

SparseOperator SparseOperator::from_triplets(std::size_t n, std::vector<Triplet> triplets,
                                             OperatorInfo info) {
  std::sort(triplets.begin(), triplets.end(), [](const Triplet& a, const Triplet& b) {
    return a.row != b.row ? a.row < b.row : a.col < b.col;
  });
  std::vector<std::size_t> row_ptr(n + 1, 0);
  std::vector<std::size_t> cols;
  std::vector<double> vals;
  std::size_t prev_row = n;
  for (const auto& t : triplets) {
    if (t.row >= n || t.col >= n) throw AssemblyError("triplet index out of range");
    if (t.row == prev_row && cols.back() == t.col) {
      vals.back() += t.value;
    } else {
      cols.push_back(t.col);
      vals.push_back(t.value);
    }
    prev_row = t.row;
    row_ptr[t.row + 1] = vals.size();
  }
  for (std::size_t i = 1; i <= n; ++i) row_ptr[i] = std::max(row_ptr[i], row_ptr[i - 1]);
  return SparseOperator(n, std::move(row_ptr), std::move(cols), std::move(vals), std::move(info));
}

void SparseOperator::apply(std::span<const double> x, std::span<double> y, int workers) const {
  if (x.size() != n_ || y.size() != n_) throw std::invalid_argument("apply: length mismatch");
  parallel_for(n_, workers, [&](std::size_t begin, std::size_t end) {
    for (std::size_t i = begin; i < end; ++i) {
      double s = 0.0;
      for (std::size_t k = row_ptr_[i]; k < row_ptr_[i + 1]; ++k) s += values_[k] * x[cols_[k]];
      y[i] = s;
    }
  });
}

std::vector<double> SparseOperator::apply(std::span<const double> x, int workers) const {
  std::vector<double> y(n_);
  apply(x, y, workers);
  return y;
}

double SparseOperator::diagonal(std::size_t row) const {
  for (std::size_t k = row_ptr_[row]; k < row_ptr_[row + 1]; ++k)
    if (cols_[k] == row) return values_[k];
  return 0.0;
}

double SparseOperator::row_sum(std::size_t row) const {
  double s = 0.0;
  for (std::size_t k = row_ptr_[row]; k < row_ptr_[row + 1]; ++k) s += values_[k];
  return s;
}

double SparseOperator::min_off_diagonal() const {
  double m = std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < n_; ++i)
    for (std::size_t k = row_ptr_[i]; k < row_ptr_[i + 1]; ++k)
      if (cols_[k] != i) m = std::min(m, values_[k]);
  return m;
}

bool SparseOperator::is_irreducible() const {
  if (n_ <= 1) return true;
  // Forward reachability from 0 on the graph and on its transpose.
  std::vector<std::vector<std::size_t>> rev(n_);
  for (std::size_t i = 0; i < n_; ++i)
    for (std::size_t k = row_ptr_[i]; k < row_ptr_[i + 1]; ++k)
      if (cols_[k] != i && values_[k] != 0.0) rev[cols_[k]].push_back(i);

  auto reach_all = [&](auto&& neighbors) {
    std::vector<char> seen(n_, 0);
    std::queue<std::size_t> q;
    q.push(0);
    seen[0] = 1;
    std::size_t count = 1;
    while (!q.empty()) {
      std::size_t i = q.front();
      q.pop();
      neighbors(i, [&](std::size_t j) {
        if (!seen[j]) {
          seen[j] = 1;
          ++count;
          q.push(j);
        }
      });
    }
    return count == n_;
  };
  bool fwd = reach_all([&](std::size_t i, auto&& visit) {
    for (std::size_t k = row_ptr_[i]; k < row_ptr_[i + 1]; ++k)
      if (cols_[k] != i && values_[k] != 0.0) visit(cols_[k]);
  });
  if (!fwd) return false;
  return reach_all([&](std::size_t i, auto&& visit) {
    for (std::size_t j : rev[i]) visit(j);
  });
}

Eigen::MatrixXd SparseOperator::to_dense() const {
  Eigen::MatrixXd A = Eigen::MatrixXd::Zero(n_, n_);
  for (std::size_t i = 0; i < n_; ++i)
    for (std::size_t k = row_ptr_[i]; k < row_ptr_[i + 1]; ++k) A(i, cols_[k]) += values_[k];
  return A;
}

Eigen::SparseMatrix<double> SparseOperator::to_eigen() const {
  std::vector<Eigen::Triplet<double>> trips;
  trips.reserve(values_.size());
  for (std::size_t i = 0; i < n_; ++i)
    for (std::size_t k = row_ptr_[i]; k < row_ptr_[i + 1]; ++k)
      trips.emplace_back(static_cast<int>(i), static_cast<int>(cols_[k]), values_[k]);
  Eigen::SparseMatrix<double> m(n_, n_);
  m.setFromTriplets(trips.begin(), trips.end());
  return m;
}

void SparseOperator::dump(std::ostream& os) const {
  char buf[96];
  for (std::size_t i = 0; i < n_; ++i) {
    for (std::size_t k = row_ptr_[i]; k < row_ptr_[i + 1]; ++k) {
      std::snprintf(buf, sizeof buf, "%zu %zu %.17g\n", i, cols_[k], values_[k]);
      os << buf;
    }
  }
}

// ---------------------------------------------------------------------------

namespace {

struct RowCoefficients {
  std::vector<double> drift;
  double potential = 0.0;
};

/// diffusion * D2 + U(drift) D1 + diag(potential), drift/potential from `coef`.
template <class CoefFn>
SparseOperator assemble_generic(const Grid& grid, double diffusion, CoefFn&& coef,
                                const AssemblyOptions& opts, OperatorInfo info) {
  if (grid.size() > kMaxGridPoints && !opts.allow_large_grid) {
    throw AssemblyError("grid has " + std::to_string(grid.size()) +
                        " points, above the 2^24 limit (needs explicit override)");
  }
  const std::size_t N = grid.size();
  const int dim = grid.dim();
  const std::size_t per_row = 2 * dim + 1;
  const double h = grid.h();
  const double lap = diffusion / (h * h);

  std::vector<std::size_t> row_ptr(N + 1);
  for (std::size_t i = 0; i <= N; ++i) row_ptr[i] = i * per_row;
  std::vector<std::size_t> cols(N * per_row);
  std::vector<double> vals(N * per_row);

  parallel_for(N, opts.workers, [&](std::size_t begin, std::size_t end) {
    std::vector<std::pair<std::size_t, double>> row(per_row);
    for (std::size_t i = begin; i < end; ++i) {
      auto x = grid.coords(i);
      RowCoefficients rc = coef(std::span<const double>(x));
      double diag = rc.potential - 2.0 * dim * lap;
      std::size_t r = 0;
      for (int d = 0; d < dim; ++d) {
        double fwd = lap, bwd = lap;
        double v = rc.drift[d];
        if (opts.scheme == Scheme::Upwind) {
          if (v > 0) {
            fwd += v / h;
            diag -= v / h;
          } else {
            bwd -= v / h;
            diag += v / h;
          }
        } else {
          fwd += v / (2 * h);
          bwd -= v / (2 * h);
        }
        row[r++] = {grid.neighbor(i, d, +1), fwd};
        row[r++] = {grid.neighbor(i, d, -1), bwd};
      }
      row[r++] = {i, diag};
      std::sort(row.begin(), row.end());
      for (std::size_t k = 0; k < per_row; ++k) {
        cols[i * per_row + k] = row[k].first;
        vals[i * per_row + k] = row[k].second;
      }
    }
  });
  return SparseOperator(N, std::move(row_ptr), std::move(cols), std::move(vals), std::move(info));
}

void check_compatible(const Scenario& s, const Grid& g, double eps) {
  if (!(eps > 0.0)) throw AssemblyError("epsilon must be positive");
  if (s.dim() != g.dim()) throw AssemblyError("grid and scenario dimensions differ");
}

}  // namespace

SparseOperator assemble(const Scenario& s, const Grid& grid, double epsilon,
                        const AssemblyOptions& opts) {
  check_compatible(s, grid, epsilon);
  OperatorInfo info{epsilon, s.name(), opts.scheme, false, grid.dim(), grid.n()};
  return assemble_generic(
      grid, epsilon,
      [&](std::span<const double> x) { return RowCoefficients{s.drift(x), s.c().eval(x)}; },
      opts, std::move(info));
}

GaugeFields gauge_fields(const Scenario& s, std::span<const double> x, double epsilon) {
  GaugeFields g;
  auto b = s.drift(x);
  double grad2 = 0.0, bgrad = 0.0;
  g.omega.resize(s.dim());
  for (int d = 0; d < s.dim(); ++d) {
    double gl = s.grad_L()[d].eval(x);
    g.omega[d] = b[d] + gl;
    grad2 += gl * gl;
    bgrad += gl * b[d];
  }
  g.psi = 0.25 * (grad2 + 2.0 * bgrad);
  g.c_eps = epsilon * (s.c().eval(x) + 0.5 * s.lap_L().eval(x)) + g.psi;
  return g;
}

SparseOperator assemble_gauged(const Scenario& s, const Grid& grid, double epsilon,
                               const AssemblyOptions& opts) {
  check_compatible(s, grid, epsilon);
  OperatorInfo info{epsilon, s.name(), opts.scheme, true, grid.dim(), grid.n()};
  return assemble_generic(
      grid, epsilon * epsilon,
      [&](std::span<const double> x) {
        auto g = gauge_fields(s, x, epsilon);
        for (double& w : g.omega) w *= epsilon;
        return RowCoefficients{std::move(g.omega), g.c_eps};
      },
      opts, std::move(info));
}

double gauge_identity_residual(const Scenario& s, const Grid& grid, double epsilon,
                               const TrigExpr& w, const AssemblyOptions& opts) {
  auto A = assemble(s, grid, epsilon, opts);
  auto G = assemble_gauged(s, grid, epsilon, opts);
  auto L = grid.sample([&](std::span<const double> x) { return s.L().eval(x); });
  auto wv = grid.sample([&](std::span<const double> x) { return w.eval(x); });
  std::vector<double> u(grid.size());
  for (std::size_t i = 0; i < u.size(); ++i) u[i] = std::exp(L[i] / (2.0 * epsilon)) * wv[i];
  auto Au = A.apply(u, opts.workers);
  auto Gw = G.apply(wv, opts.workers);
  double worst = 0.0;
  for (std::size_t i = 0; i < u.size(); ++i) {
    double lhs = std::exp(-L[i] / (2.0 * epsilon)) * epsilon * Au[i];
    worst = std::max(worst, std::abs(lhs - Gw[i]));
  }
  return worst;
}

int recommended_resolution(double epsilon) {
  return static_cast<int>(std::ceil(8.0 * kTwoPi / std::sqrt(epsilon)));
}

}  // namespace conclab
