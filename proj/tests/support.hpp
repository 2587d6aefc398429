#pragma once

#include <random>
#include <vector>

#include "conclab/trig_expr.hpp"

namespace conclab::testing {

/// Random real trig polynomial: `terms` single-factor terms a*cos(k.x + phi)
/// or a*sin(k.x + phi) with |k_i| <= max_freq on the first `dim` axes, plus a
/// constant.
inline TrigExpr random_trig(std::mt19937& rng, int dim, int max_freq, int terms) {
  std::uniform_real_distribution<double> coeff(-1.0, 1.0);
  std::uniform_real_distribution<double> phase(0.0, 6.283185307179586);
  std::uniform_int_distribution<int> freq(-max_freq, max_freq);
  std::vector<TrigTerm> out{{coeff(rng), {}}};
  for (int t = 0; t < terms; ++t) {
    TrigFactor f;
    f.kind = rng() % 2 ? TrigKind::Sin : TrigKind::Cos;
    bool nonzero = false;
    while (!nonzero) {
      for (int d = 0; d < dim; ++d) {
        f.freq[d] = freq(rng);
        nonzero = nonzero || f.freq[d] != 0;
      }
    }
    f.phase = phase(rng);
    out.push_back({coeff(rng), {f}});
  }
  return TrigExpr(std::move(out));
}

/// Grid-free sample points in [0, 2 pi)^3.
inline std::vector<std::vector<double>> random_points(std::mt19937& rng, int count) {
  std::uniform_real_distribution<double> u(0.0, 6.283185307179586);
  std::vector<std::vector<double>> pts;
  for (int i = 0; i < count; ++i) pts.push_back({u(rng), u(rng), u(rng)});
  return pts;
}

}  // namespace conclab::testing
