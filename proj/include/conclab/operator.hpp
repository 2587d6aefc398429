#pragma once

#include <cstdint>
#include <iosfwd>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include <Eigen/Dense>
#include <Eigen/SparseCore>

#include "conclab/scenario.hpp"

namespace conclab {

/// Uniform periodic grid with n points per axis, x = i h, h = 2 pi / n.
/// Flat index is row-major (first axis slowest).
class Grid {
 public:
  Grid(int dim, int n);

  int dim() const { return dim_; }
  int n() const { return n_; }
  double h() const { return kTwoPi / n_; }
  std::size_t size() const { return size_; }
  /// h^dim, the volume of one cell.
  double cell_volume() const;

  std::size_t index(std::span<const int> multi) const;
  std::vector<int> multi_index(std::size_t idx) const;
  std::vector<double> coords(std::size_t idx) const;
  /// Flat index of the neighbour `step` cells away along `axis` (periodic).
  std::size_t neighbor(std::size_t idx, int axis, int step) const;

  /// Samples f at every grid point.
  template <class Fn>
  std::vector<double> sample(Fn&& f) const {
    std::vector<double> out(size_);
    for (std::size_t i = 0; i < size_; ++i) out[i] = f(std::span<const double>(coords(i)));
    return out;
  }

  bool operator==(const Grid&) const = default;

 private:
  int dim_;
  int n_;
  std::size_t size_;
  std::vector<std::size_t> stride_;
};

enum class Scheme { Upwind, Centered };

std::string to_string(Scheme s);
Scheme scheme_from_string(const std::string& s);

class AssemblyError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct OperatorInfo {
  double epsilon = 0.0;
  std::string scenario;
  Scheme scheme = Scheme::Upwind;
  bool gauged = false;
  int dim = 0;  // grid shape; 0 for operators not built on a grid
  int n = 0;

  /// h^dim of the underlying grid, 1 without one.
  double cell_volume() const;
};

/// Square sparse matrix in row-compressed storage, columns ascending in each
/// row. Immutable after construction.
class SparseOperator {
 public:
  struct Triplet {
    std::size_t row;
    std::size_t col;
    double value;
  };

  SparseOperator() = default;
  SparseOperator(std::size_t n, std::vector<std::size_t> row_ptr, std::vector<std::size_t> cols,
                 std::vector<double> values, OperatorInfo info = {});
  /// Builds from unordered triplets; duplicates are summed.
  static SparseOperator from_triplets(std::size_t n, std::vector<Triplet> triplets,
                                      OperatorInfo info = {});

  std::size_t rows() const { return n_; }
  std::size_t nnz() const { return values_.size(); }
  const OperatorInfo& info() const { return info_; }
  const std::vector<std::size_t>& row_ptr() const { return row_ptr_; }
  const std::vector<std::size_t>& cols() const { return cols_; }
  const std::vector<double>& values() const { return values_; }

  /// y = A x. Rows are split across `workers`; each row sums in ascending
  /// column order, so the result is bitwise independent of `workers`.
  void apply(std::span<const double> x, std::span<double> y, int workers = 1) const;
  std::vector<double> apply(std::span<const double> x, int workers = 1) const;

  double diagonal(std::size_t row) const;
  double row_sum(std::size_t row) const;
  double min_off_diagonal() const;
  bool is_metzler() const { return min_off_diagonal() >= 0.0; }
  /// Strong connectivity of the graph of nonzero off-diagonal entries.
  bool is_irreducible() const;

  Eigen::MatrixXd to_dense() const;
  Eigen::SparseMatrix<double> to_eigen() const;

  /// "row col value" triplets, lexicographic, one per line.
  void dump(std::ostream& os) const;

 private:
  std::size_t n_ = 0;
  std::vector<std::size_t> row_ptr_{0};
  std::vector<std::size_t> cols_;
  std::vector<double> values_;
  OperatorInfo info_;
};

struct AssemblyOptions {
  Scheme scheme = Scheme::Upwind;
  bool allow_large_grid = false;
  int workers = 1;
};

inline constexpr std::size_t kMaxGridPoints = std::size_t{1} << 24;

/// A = eps D2 + U(b) D1 + diag(c).
SparseOperator assemble(const Scenario& scenario, const Grid& grid, double epsilon,
                        const AssemblyOptions& opts = {});

/// Lyapunov-gauged operator eps^2 D2 + eps U(Omega) D1 + diag(c_eps), the
/// discretization of w -> eps e^{-L/2eps} A (e^{L/2eps} w).
SparseOperator assemble_gauged(const Scenario& scenario, const Grid& grid, double epsilon,
                               const AssemblyOptions& opts = {});

/// Coefficients of the gauged operator at one point.
struct GaugeFields {
  std::vector<double> omega;  // Omega = b + grad L
  double psi = 0.0;           // 1/4 (|grad L|^2 + 2 (grad L, b))
  double c_eps = 0.0;         // eps (c + lap L / 2) + psi
};

GaugeFields gauge_fields(const Scenario& scenario, std::span<const double> x, double epsilon);

/// sup_i |eps e^{-L/2eps} (A (e^{L/2eps} w))_i - (A_gauged w)_i| for the
/// sampled test function w: the discrete defect of the gauge identity.
double gauge_identity_residual(const Scenario& scenario, const Grid& grid, double epsilon,
                               const TrigExpr& w, const AssemblyOptions& opts = {});

/// Recommended minimum resolution n >= 8 (2 pi) / sqrt(eps).
int recommended_resolution(double epsilon);

}  // namespace conclab
