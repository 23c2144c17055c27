#pragma once

#include <complex>
#include <vector>

#include "layermp/vec3.hpp"

namespace layermp {

using cplx = std::complex<double>;

//! Position of (n, m) in a dense triangular table with |m| <= n.
constexpr int harmonic_index(int n, int m) { return n * n + n + m; }
constexpr int harmonic_count(int p) { return (p + 1) * (p + 1); }

//! Legendre polynomial by the three-term recurrence. Throws DomainError for |x| > 1.
double legendre_p(int n, double x);

//! Normalized associated Legendre values for 0 <= m <= n <= nmax, stored at
//! harmonic_index(n, m). Scaled so that Y_n^m = value * exp(i m phi); no
//! Condon-Shortley phase for m >= 0 and value(n, -m) = (-1)^m value(n, m).
std::vector<double> normalized_legendre_table(int nmax, double x);

//! Scaled spherical harmonic; zero when |m| > n.
cplx sph_harm(int n, int m, double theta, double phi);

//! All Y_n^m for n <= nmax at one direction, indexed by harmonic_index.
std::vector<cplx> sph_harm_table(int nmax, double theta, double phi);

//! Translation constants up to order p_max.
class HarmonicConstants {
 public:
  static constexpr int max_order = 60;

  explicit HarmonicConstants(int p_max);

  int p_max() const { return p_max_; }
  //! sqrt((2n+1)/(4 pi)).
  double c(int n) const { return c_[n]; }
  //! (-1)^n c_n / sqrt((n-m)!(n+m)!); zero for |m| > n.
  double A(int n, int m) const;
  //! i^(2n-m) sqrt(4 pi / ((2n+1)(n+m)!(n-m)!)); zero for |m| > n.
  cplx C(int n, int m) const;

 private:
  int p_max_;
  std::vector<double> c_;
  std::vector<double> A_;
  std::vector<cplx> C_;
};

//! Shared immutable table covering at least p_max. Throws Overflow beyond max_order.
const HarmonicConstants& constants(int p_max);

//! i^k for any integer k.
cplx ipow(int k);

//! (-1)^k for any integer k.
constexpr double sign_pow(int k) { return (k % 2 == 0) ? 1.0 : -1.0; }

}  // namespace layermp
