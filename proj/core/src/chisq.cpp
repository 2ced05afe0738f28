#include "gelkit/chisq.hpp"

#include "gelkit/errors.hpp"

#include <cmath>
#include <limits>

namespace gelkit {

namespace {

constexpr int kMaxTerms = 10000;
constexpr double kEps = 1e-16;

// Series for P(a, x); converges quickly for x < a + 1.
double lower_series(double a, double x) {
  double term = 1.0 / a;
  double sum = term;
  for (int k = 1; k < kMaxTerms; ++k) {
    term *= x / (a + k);
    sum += term;
    if (std::abs(term) < std::abs(sum) * kEps) break;
  }
  return sum * std::exp(-x + a * std::log(x) - std::lgamma(a));
}

// Modified Lentz continued fraction for Q(a, x); converges for x >= a + 1.
double upper_fraction(double a, double x) {
  constexpr double tiny = std::numeric_limits<double>::min() / kEps;
  double b = x + 1.0 - a;
  double c = 1.0 / tiny;
  double d = 1.0 / b;
  double h = d;
  for (int i = 1; i < kMaxTerms; ++i) {
    const double an = -i * (i - a);
    b += 2.0;
    d = an * d + b;
    if (std::abs(d) < tiny) d = tiny;
    c = b + an / c;
    if (std::abs(c) < tiny) c = tiny;
    d = 1.0 / d;
    const double delta = d * c;
    h *= delta;
    if (std::abs(delta - 1.0) < kEps) break;
  }
  return std::exp(-x + a * std::log(x) - std::lgamma(a)) * h;
}

}  // namespace

double gamma_p(double a, double x) {
  if (!(a > 0.0) || x < 0.0) throw ArgumentError("gamma_p: need a > 0 and x >= 0");
  if (x == 0.0) return 0.0;
  if (std::isinf(x)) return 1.0;
  return x < a + 1.0 ? lower_series(a, x) : 1.0 - upper_fraction(a, x);
}

double gamma_q(double a, double x) {
  if (!(a > 0.0) || x < 0.0) throw ArgumentError("gamma_q: need a > 0 and x >= 0");
  if (x == 0.0) return 1.0;
  if (std::isinf(x)) return 0.0;
  return x < a + 1.0 ? 1.0 - lower_series(a, x) : upper_fraction(a, x);
}

double chisq_sf(double x, int df) {
  if (df < 1) throw ArgumentError("chisq_sf: df must be >= 1");
  if (std::isnan(x) || x < 0.0) throw ArgumentError("chisq_sf: x must be >= 0");
  return gamma_q(0.5 * df, 0.5 * x);
}

double chisq_quantile(double prob, int df) {
  if (!(prob > 0.0 && prob < 1.0)) throw ArgumentError("chisq_quantile: prob must be in (0, 1)");
  if (df < 1) throw ArgumentError("chisq_quantile: df must be >= 1");
  const double target = 1.0 - prob;
  double lo = 0.0;
  double hi = std::max(1.0, static_cast<double>(df));
  while (chisq_sf(hi, df) > target) hi *= 2.0;
  for (int it = 0; it < 200 && hi - lo > 1e-14 * hi; ++it) {
    const double mid = 0.5 * (lo + hi);
    (chisq_sf(mid, df) > target ? lo : hi) = mid;
  }
  return 0.5 * (lo + hi);
}

}  // namespace gelkit
