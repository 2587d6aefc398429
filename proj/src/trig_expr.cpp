#include "conclab/trig_expr.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <cstdlib>

namespace conclab {

namespace {

double dot(const Freq& k, std::span<const double> x) {
  double s = 0.0;
  for (std::size_t i = 0; i < x.size() && i < k.size(); ++i) {
    if (k[i] != 0) s += k[i] * x[i];
  }
  return s;
}

bool is_zero_freq(const Freq& k) {
  return k[0] == 0 && k[1] == 0 && k[2] == 0;
}

std::string fmt_number(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

std::string factor_str(const TrigFactor& f) {
  std::string s = f.kind == TrigKind::Sin ? "sin(" : "cos(";
  bool first = true;
  for (int i = 0; i < kMaxDim; ++i) {
    int k = f.freq[i];
    if (k == 0) continue;
    if (first) {
      if (k < 0) s += "-";
    } else {
      s += k < 0 ? " - " : " + ";
    }
    if (std::abs(k) != 1) s += std::to_string(std::abs(k)) + "*";
    s += "x" + std::to_string(i + 1);
    first = false;
  }
  if (f.phase != 0.0) {
    s += f.phase < 0 ? " - " : " + ";
    s += fmt_number(std::abs(f.phase));
  }
  s += ")";
  return s;
}

class Parser {
 public:
  explicit Parser(std::string_view text) : text_(text) {}

  TrigExpr parse() {
    std::vector<TrigTerm> terms;
    skip_ws();
    double sign = 1.0;
    if (peek() == '-' || peek() == '+') {
      sign = peek() == '-' ? -1.0 : 1.0;
      ++pos_;
    }
    terms.push_back(term(sign));
    for (;;) {
      skip_ws();
      if (at_end()) break;
      char op = peek();
      if (op != '+' && op != '-') fail("expected '+', '-' or end of input");
      ++pos_;
      terms.push_back(term(op == '-' ? -1.0 : 1.0));
    }
    return TrigExpr(std::move(terms));
  }

 private:
  TrigTerm term(double sign) {
    TrigTerm t;
    t.coeff = sign;
    factor(t);
    for (;;) {
      skip_ws();
      if (peek() != '*') break;
      ++pos_;
      factor(t);
    }
    return t;
  }

  void factor(TrigTerm& t) {
    skip_ws();
    if (match("sin")) {
      t.factors.push_back(trig(TrigKind::Sin));
    } else if (match("cos")) {
      t.factors.push_back(trig(TrigKind::Cos));
    } else if (is_number_start()) {
      t.coeff *= number();
    } else {
      fail("expected number, 'sin' or 'cos'");
    }
  }

  TrigFactor trig(TrigKind kind) {
    skip_ws();
    if (peek() != '(') fail("expected '('");
    ++pos_;
    TrigFactor f;
    f.kind = kind;
    bool has_var = false;
    bool first = true;
    for (;;) {
      skip_ws();
      double sign = 1.0;
      if (peek() == '+' || peek() == '-') {
        sign = peek() == '-' ? -1.0 : 1.0;
        ++pos_;
        skip_ws();
      } else if (!first) {
        break;
      }
      first = false;
      std::size_t item_start = pos_;
      double value = 1.0;
      bool has_number = false;
      bool has_star = false;
      if (is_number_start()) {
        value = number();
        has_number = true;
        skip_ws();
        if (peek() == '*') {
          ++pos_;
          has_star = true;
          skip_ws();
        }
      }
      if (peek() == 'x') {
        int axis = var();
        double k = sign * value;
        if (k != std::round(k) || std::abs(k) > 1e6) {
          throw ParseError("non-integer frequency (periodicity violation)", item_start);
        }
        f.freq[axis] += static_cast<int>(std::lround(k));
        has_var = true;
      } else if (has_number && !has_star) {
        f.phase += sign * value;
      } else {
        fail("expected number or variable");
      }
    }
    if (!has_var) fail("trigonometric argument has no variable");
    if (peek() != ')') fail("expected ')'");
    ++pos_;
    return f;
  }

  int var() {
    std::size_t start = pos_;
    ++pos_;  // 'x'
    if (at_end() || peek() < '1' || peek() > '3') {
      throw ParseError("expected variable x1, x2 or x3", start);
    }
    int axis = peek() - '1';
    ++pos_;
    return axis;
  }

  double number() {
    double v = 0.0;
    auto [ptr, ec] = std::from_chars(text_.data() + pos_, text_.data() + text_.size(), v);
    if (ec != std::errc()) fail("malformed number");
    pos_ = static_cast<std::size_t>(ptr - text_.data());
    return v;
  }

  bool is_number_start() const {
    char c = peek();
    return (c >= '0' && c <= '9') || c == '.';
  }

  bool match(std::string_view word) {
    if (text_.substr(pos_, word.size()) == word) {
      pos_ += word.size();
      return true;
    }
    return false;
  }

  void skip_ws() {
    while (!at_end() && (text_[pos_] == ' ' || text_[pos_] == '\t' || text_[pos_] == '\n')) ++pos_;
  }

  bool at_end() const { return pos_ >= text_.size(); }
  char peek() const { return at_end() ? '\0' : text_[pos_]; }
  [[noreturn]] void fail(const std::string& what) const { throw ParseError(what, pos_); }

  std::string_view text_;
  std::size_t pos_ = 0;
};

}  // namespace

double TrigFactor::eval(std::span<const double> x) const {
  double arg = dot(freq, x) + phase;
  return kind == TrigKind::Sin ? std::sin(arg) : std::cos(arg);
}

double TrigTerm::eval(std::span<const double> x) const {
  double v = coeff;
  for (const auto& f : factors) v *= f.eval(x);
  return v;
}

TrigExpr::TrigExpr(std::vector<TrigTerm> terms) : terms_(std::move(terms)) { normalize(); }

TrigExpr TrigExpr::constant(double value) {
  return TrigExpr({TrigTerm{value, {}}});
}

void TrigExpr::normalize() {
  std::vector<TrigTerm> out;
  out.reserve(terms_.size());
  for (auto& t : terms_) {
    std::vector<TrigFactor> kept;
    for (const auto& f : t.factors) {
      if (is_zero_freq(f.freq)) {
        t.coeff *= f.kind == TrigKind::Sin ? std::sin(f.phase) : std::cos(f.phase);
      } else {
        kept.push_back(f);
      }
    }
    t.factors = std::move(kept);
    // Merge with an earlier term over the same factor list.
    auto same = std::find_if(out.begin(), out.end(),
                             [&](const TrigTerm& o) { return o.factors == t.factors; });
    if (same != out.end()) same->coeff += t.coeff;
    else out.push_back(std::move(t));
  }
  std::erase_if(out, [](const TrigTerm& t) { return t.coeff == 0.0; });
  terms_ = std::move(out);
}

double TrigExpr::eval(std::span<const double> x) const {
  double s = 0.0;
  for (const auto& t : terms_) s += t.eval(x);
  return s;
}

TrigExpr TrigExpr::derivative(int axis) const {
  std::vector<TrigTerm> out;
  for (const auto& t : terms_) {
    for (std::size_t j = 0; j < t.factors.size(); ++j) {
      int k = t.factors[j].freq[axis];
      if (k == 0) continue;
      TrigTerm d = t;
      TrigFactor& f = d.factors[j];
      if (f.kind == TrigKind::Sin) {
        f.kind = TrigKind::Cos;
        d.coeff *= k;
      } else {
        f.kind = TrigKind::Sin;
        d.coeff *= -k;
      }
      out.push_back(std::move(d));
    }
  }
  return TrigExpr(std::move(out));
}

std::map<Freq, std::complex<double>> TrigExpr::fourier() const {
  using cplx = std::complex<double>;
  std::map<Freq, cplx> total;
  for (const auto& t : terms_) {
    std::map<Freq, cplx> acc{{Freq{0, 0, 0}, cplx(t.coeff, 0.0)}};
    for (const auto& f : t.factors) {
      cplx ep = std::polar(1.0, f.phase);
      cplx em = std::conj(ep);
      cplx cp, cm;
      if (f.kind == TrigKind::Cos) {
        cp = 0.5 * ep;
        cm = 0.5 * em;
      } else {
        cp = ep / cplx(0.0, 2.0);
        cm = -em / cplx(0.0, 2.0);
      }
      std::map<Freq, cplx> next;
      for (const auto& [m, v] : acc) {
        Freq plus = m, minus = m;
        for (int i = 0; i < kMaxDim; ++i) {
          plus[i] += f.freq[i];
          minus[i] -= f.freq[i];
        }
        next[plus] += v * cp;
        next[minus] += v * cm;
      }
      acc = std::move(next);
    }
    for (const auto& [m, v] : acc) total[m] += v;
  }
  std::erase_if(total, [](const auto& kv) { return kv.second == std::complex<double>(0.0, 0.0); });
  return total;
}

int TrigExpr::max_frequency() const {
  int m = 0;
  for (const auto& t : terms_)
    for (const auto& f : t.factors)
      for (int k : f.freq) m = std::max(m, std::abs(k));
  return m;
}

int TrigExpr::min_dim() const {
  int d = 0;
  for (const auto& t : terms_)
    for (const auto& f : t.factors)
      for (int i = 0; i < kMaxDim; ++i)
        if (f.freq[i] != 0) d = std::max(d, i + 1);
  return d;
}

std::string TrigExpr::str() const {
  if (terms_.empty()) return "0";
  std::string s;
  for (std::size_t i = 0; i < terms_.size(); ++i) {
    const auto& t = terms_[i];
    double c = t.coeff;
    if (i == 0) {
      if (c < 0) s += "-";
    } else {
      s += c < 0 ? " - " : " + ";
    }
    double a = std::abs(c);
    if (t.factors.empty()) {
      s += fmt_number(a);
      continue;
    }
    if (a != 1.0) s += fmt_number(a) + "*";
    for (std::size_t j = 0; j < t.factors.size(); ++j) {
      if (j) s += "*";
      s += factor_str(t.factors[j]);
    }
  }
  return s;
}

TrigExpr TrigExpr::operator+(const TrigExpr& rhs) const {
  auto terms = terms_;
  terms.insert(terms.end(), rhs.terms_.begin(), rhs.terms_.end());
  return TrigExpr(std::move(terms));
}

TrigExpr TrigExpr::operator-(const TrigExpr& rhs) const { return *this + rhs * -1.0; }

TrigExpr TrigExpr::operator*(const TrigExpr& rhs) const {
  std::vector<TrigTerm> out;
  for (const auto& a : terms_) {
    for (const auto& b : rhs.terms_) {
      TrigTerm t{a.coeff * b.coeff, a.factors};
      t.factors.insert(t.factors.end(), b.factors.begin(), b.factors.end());
      out.push_back(std::move(t));
    }
  }
  return TrigExpr(std::move(out));
}

TrigExpr TrigExpr::operator*(double s) const {
  auto terms = terms_;
  for (auto& t : terms) t.coeff *= s;
  return TrigExpr(std::move(terms));
}

TrigExpr parse_expr(std::string_view text) { return Parser(text).parse(); }

}  // namespace conclab
