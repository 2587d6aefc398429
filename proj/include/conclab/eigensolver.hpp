#pragma once

#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "conclab/operator.hpp"

namespace conclab {

class SolverError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Principal eigenpair of a Metzler operator.
struct EigenPair {
  double lambda = 0.0;
  /// Strictly positive, sum u_i^2 h^dim = 1.
  std::vector<double> u;
  /// ||A u - lambda u||_inf / ||u||_inf
  double residual = 0.0;
  long iterations = 0;
  bool certified = false;
  /// Gauge image e^{-L/2eps} u, renormalized like u.
  std::optional<std::vector<double>> v;
};

enum class SolverMethod {
  /// Power iteration on I + tau (A - s I).
  Power,
  /// Inverse iteration on (sigma I - A) with sigma a Collatz-Wielandt upper
  /// bound of the Perron root; positivity-preserving sparse LU.
  ShiftInvert,
};

std::string to_string(SolverMethod m);
SolverMethod solver_method_from_string(const std::string& s);

struct SolverOptions {
  double tol = 1e-8;
  long max_iter = 200000;
  SolverMethod method = SolverMethod::ShiftInvert;
  int workers = 1;
};

/// Power iteration on B = I + tau (A - s I), s = min A_ii - 1,
/// tau = 0.9 / max(A_ii - s), from the constant vector (or `start`).
/// Throws SolverError when A is not Metzler or not irreducible.
EigenPair principal_eigenpair(const SparseOperator& op, double tol = 1e-8,
                              long max_iter = 200000,
                              std::span<const double> start = {}, int workers = 1);

/// Same contract as principal_eigenpair, by shifted inverse iteration.
EigenPair principal_eigenpair_shift_invert(const SparseOperator& op, double tol = 1e-8,
                                           long max_iter = 200000,
                                           std::span<const double> start = {},
                                           int workers = 1);

EigenPair solve_principal(const SparseOperator& op, const SolverOptions& opts,
                          std::span<const double> start = {});

/// Fills pair.v = e^{-(L - min L)/2eps} u renormalized to sum v^2 h^dim = 1.
void attach_gauge_image(EigenPair& pair, const Scenario& scenario, const Grid& grid,
                        double epsilon);

struct SweepEntry {
  double epsilon = 0.0;
  double lambda = 0.0;
  EigenPair pair;
  /// Non-empty when this entry's solve failed; the sweep continues.
  std::string error;
};

struct SweepOptions {
  SolverOptions solver;
  AssemblyOptions assembly;
  bool warm_start = true;
};

/// One certified eigenpair per epsilon (strictly decreasing list).
std::vector<SweepEntry> eigen_sweep(const Scenario& scenario, int n,
                                    std::span<const double> epsilons,
                                    const SweepOptions& opts = {});

struct Extrapolation {
  double lambda0 = 0.0;
  double error = 0.0;
  double order = 0.0;  // fitted p
  /// False when the last differences did not have a consistent sign and the
  /// order fell back to p = 1.
  bool order_fitted = true;
};

/// Richardson extrapolation of lambda_eps = lambda0 + a eps^p on a geometric
/// schedule, p fitted from the last three entries.
Extrapolation extrapolate_limit(std::span<const double> epsilons,
                                std::span<const double> lambdas);

}  // namespace conclab
