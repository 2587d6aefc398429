#pragma once

#include <array>
#include <complex>
#include <cstddef>
#include <map>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace conclab {

inline constexpr int kMaxDim = 3;

using Freq = std::array<int, kMaxDim>;

/// Raised by parse_expr; carries the byte offset of the offending character.
class ParseError : public std::runtime_error {
 public:
  ParseError(const std::string& what, std::size_t offset)
      : std::runtime_error(what + " at byte " + std::to_string(offset)),
        offset_(offset) {}
  std::size_t offset() const noexcept { return offset_; }

 private:
  std::size_t offset_;
};

enum class TrigKind { Sin, Cos };

/// sin(k.x + phase) or cos(k.x + phase), k integer.
struct TrigFactor {
  TrigKind kind = TrigKind::Cos;
  Freq freq{0, 0, 0};
  double phase = 0.0;

  double eval(std::span<const double> x) const;
  bool operator==(const TrigFactor&) const = default;
};

struct TrigTerm {
  double coeff = 0.0;
  std::vector<TrigFactor> factors;  // empty product = constant

  double eval(std::span<const double> x) const;
  bool operator==(const TrigTerm&) const = default;
};

/// Finite sum of coefficient-times-product-of-trig terms. Periodic in every
/// coordinate by construction and closed under differentiation.
class TrigExpr {
 public:
  TrigExpr() = default;
  explicit TrigExpr(std::vector<TrigTerm> terms);

  static TrigExpr constant(double value);

  double eval(std::span<const double> x) const;
  double operator()(std::span<const double> x) const { return eval(x); }

  /// Exact partial derivative with respect to coordinate `axis` (0-based).
  TrigExpr derivative(int axis) const;

  /// Exact complex Fourier coefficients: expr = sum_m c_m exp(i m.x).
  std::map<Freq, std::complex<double>> fourier() const;

  /// Largest |k_i| appearing in any factor.
  int max_frequency() const;
  /// Highest coordinate index used plus one (0 for constants).
  int min_dim() const;

  const std::vector<TrigTerm>& terms() const { return terms_; }
  bool is_zero() const { return terms_.empty(); }

  std::string str() const;

  TrigExpr operator+(const TrigExpr& rhs) const;
  TrigExpr operator-(const TrigExpr& rhs) const;
  TrigExpr operator*(const TrigExpr& rhs) const;
  TrigExpr operator*(double s) const;

 private:
  void normalize();
  std::vector<TrigTerm> terms_;
};

/// Parses the expression grammar (sums of products of numbers and
/// sin/cos of integer-linear forms in x1..x3). Throws ParseError.
TrigExpr parse_expr(std::string_view text);

}  // namespace conclab
