#include "layermp/harmonics.hpp"

#include <cmath>
#include <numbers>

#include "layermp/error.hpp"

namespace layermp {

double legendre_p(int n, double x) {
  if (!(std::abs(x) <= 1.0)) throw DomainError("legendre_p requires |x| <= 1");
  if (n < 0) throw DomainError("legendre_p requires n >= 0");
  double prev = 1.0, cur = x;
  if (n == 0) return prev;
  for (int k = 1; k < n; ++k) {
    const double next = ((2 * k + 1) * x * cur - k * prev) / (k + 1);
    prev = cur;
    cur = next;
  }
  return cur;
}

namespace {

// Extended precision keeps the high-degree recurrence within a few ulps.
std::vector<double> legendre_columns(int nmax, long double x, long double s) {
  using real = long double;
  std::vector<double> out(harmonic_count(nmax), 0.0);
  real diag = 1 / std::sqrt(4 * std::numbers::pi_v<real>);
  std::vector<real> col(nmax + 1);
  for (int m = 0; m <= nmax; ++m) {
    if (m > 0) diag *= std::sqrt((2 * real(m) + 1) / (2 * real(m))) * s;
    col[m] = diag;
    if (m + 1 <= nmax) col[m + 1] = std::sqrt(2 * real(m) + 3) * x * diag;
    for (int n = m + 2; n <= nmax; ++n) {
      const real nn = n, mm = m;
      const real a = std::sqrt((4 * nn * nn - 1) / (nn * nn - mm * mm));
      const real b = std::sqrt(((nn - 1) * (nn - 1) - mm * mm) / (4 * (nn - 1) * (nn - 1) - 1));
      col[n] = a * (x * col[n - 1] - b * col[n - 2]);
    }
    for (int n = m; n <= nmax; ++n) out[harmonic_index(n, m)] = static_cast<double>(col[n]);
  }
  for (int n = 1; n <= nmax; ++n)
    for (int m = 1; m <= n; ++m) out[harmonic_index(n, -m)] = sign_pow(m) * out[harmonic_index(n, m)];
  return out;
}

std::vector<double> legendre_at_angle(int nmax, double theta) {
  const long double t = theta;
  return legendre_columns(nmax, std::cos(t), std::abs(std::sin(t)));
}

}  // namespace

std::vector<double> normalized_legendre_table(int nmax, double x) {
  if (!(std::abs(x) <= 1.0)) throw DomainError("associated Legendre requires |x| <= 1");
  const long double xl = x;
  return legendre_columns(nmax, xl, std::sqrt(std::max(0.0L, (1 - xl) * (1 + xl))));
}

cplx sph_harm(int n, int m, double theta, double phi) {
  if (n < 0 || std::abs(m) > n) return 0.0;
  const auto table = legendre_at_angle(n, theta);
  return table[harmonic_index(n, m)] * std::polar(1.0, m * phi);
}

std::vector<cplx> sph_harm_table(int nmax, double theta, double phi) {
  const auto leg = legendre_at_angle(nmax, theta);
  std::vector<cplx> out(leg.size());
  for (int m = 0; m <= nmax; ++m) {
    const cplx rot = std::polar(1.0, m * phi);
    for (int n = m; n <= nmax; ++n) {
      out[harmonic_index(n, m)] = leg[harmonic_index(n, m)] * rot;
      if (m > 0) out[harmonic_index(n, -m)] = leg[harmonic_index(n, -m)] * std::conj(rot);
    }
  }
  return out;
}

cplx ipow(int k) {
  switch (((k % 4) + 4) % 4) {
    case 0: return {1.0, 0.0};
    case 1: return {0.0, 1.0};
    case 2: return {-1.0, 0.0};
    default: return {0.0, -1.0};
  }
}

HarmonicConstants::HarmonicConstants(int p_max) : p_max_(p_max) {
  if (p_max < 0) throw DomainError("p_max must be nonnegative");
  if (p_max > max_order) throw Overflow("harmonic constants limited to order " + std::to_string(max_order));
  c_.resize(p_max + 1);
  A_.assign(harmonic_count(p_max), 0.0);
  C_.assign(harmonic_count(p_max), 0.0);
  const double four_pi = 4.0 * std::numbers::pi;
  for (int n = 0; n <= p_max; ++n) {
    c_[n] = std::sqrt((2.0 * n + 1.0) / four_pi);
    for (int m = -n; m <= n; ++m) {
      const double log_fact = std::lgamma(n - m + 1.0) + std::lgamma(n + m + 1.0);
      A_[harmonic_index(n, m)] = sign_pow(n) * c_[n] * std::exp(-0.5 * log_fact);
      C_[harmonic_index(n, m)] =
          ipow(2 * n - m) * std::exp(0.5 * (std::log(four_pi / (2.0 * n + 1.0)) - log_fact));
    }
  }
}

double HarmonicConstants::A(int n, int m) const {
  if (n < 0 || std::abs(m) > n) return 0.0;
  if (n > p_max_) throw IndexOutOfRange("constant order beyond table");
  return A_[harmonic_index(n, m)];
}

cplx HarmonicConstants::C(int n, int m) const {
  if (n < 0 || std::abs(m) > n) return 0.0;
  if (n > p_max_) throw IndexOutOfRange("constant order beyond table");
  return C_[harmonic_index(n, m)];
}

const HarmonicConstants& constants(int p_max) {
  if (p_max > HarmonicConstants::max_order)
    throw Overflow("harmonic constants limited to order " + std::to_string(HarmonicConstants::max_order));
  static const HarmonicConstants table(HarmonicConstants::max_order);
  if (p_max < 0) throw DomainError("p_max must be nonnegative");
  return table;
}

}  // namespace layermp
