#include "layermp/sommerfeld.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

#include "layermp/densities.hpp"
#include "layermp/error.hpp"
#include "layermp/harmonics.hpp"
#include "layermp/quadrature.hpp"

namespace layermp {

namespace {

constexpr double kPi = std::numbers::pi;

// Ascending series; used where no cancellation occurs (x <= 1).
void series_sequence(int max_order, double x, double* out) {
  const double h = 0.5 * x;
  const double h2 = h * h;
  double lead = 1.0;
  for (int m = 0; m <= max_order; ++m) {
    if (m > 0) lead *= h / m;
    double term = lead;
    double sum = term;
    for (int k = 1; k < 200 && std::abs(term) > 1e-18 * std::abs(sum); ++k) {
      term *= -h2 / (k * static_cast<double>(k + m));
      sum += term;
    }
    out[m] = sum;
  }
}

// Backward recurrence normalized by J_0 + 2 sum J_2k = 1.
void miller_sequence(int max_order, double x, double* out) {
  const double top = std::max(static_cast<double>(max_order), x);
  int start = static_cast<int>(top + 20.0 + std::sqrt(60.0 * top));
  start += start % 2;
  double next = 0.0, cur = 1e-300, norm = 0.0;
  for (int k = start; k >= 1; --k) {
    const double prev = 2.0 * k / x * cur - next;
    next = cur;
    cur = prev;
    // cur now holds the unnormalized J_{k-1}
    if (k - 1 <= max_order) out[k - 1] = cur;
    if ((k - 1) % 2 == 0) norm += (k - 1 == 0 ? 1.0 : 2.0) * cur;
    if (std::abs(cur) > 1e250) {
      const double s = 1e-250;
      cur *= s;
      next *= s;
      norm *= s;
      for (int j = std::max(0, k - 1); j <= max_order; ++j) out[j] *= s;
    }
  }
  for (int j = 0; j <= max_order; ++j) out[j] /= norm;
}

// Hankel asymptotic expansion for J_0 and J_1, accurate for x >= 25.
void asymptotic_j01(double x, double& j0, double& j1) {
  auto pq = [x](double nu, double& p, double& q) {
    const double mu = 4.0 * nu * nu;
    double t = 1.0, prev = 2.0;
    p = 1.0;
    q = 0.0;
    for (int k = 1; k < 60; ++k) {
      t *= (mu - (2.0 * k - 1.0) * (2.0 * k - 1.0)) / (k * 8.0 * x);
      if (std::abs(t) > std::abs(prev) || std::abs(t) < 1e-18) break;
      prev = t;
      const int r = k % 4;
      if (r == 1) q += t;
      else if (r == 2) p -= t;
      else if (r == 3) q -= t;
      else p += t;
    }
  };
  double p0, q0, p1, q1;
  pq(0.0, p0, q0);
  pq(1.0, p1, q1);
  const double c = std::cos(x), s = std::sin(x);
  const double amp = std::sqrt(2.0 / (kPi * x)) / std::numbers::sqrt2;
  // cos/sin of x - pi/4 and x - 3pi/4 expanded in cos x, sin x
  j0 = amp * (p0 * (c + s) - q0 * (s - c));
  j1 = amp * (p1 * (s - c) + q1 * (s + c));
}

}  // namespace

void bessel_j_sequence(int max_order, double x, double* out) {
  if (max_order < 0) return;
  if (x < 0.0) throw DomainError("bessel_j requires x >= 0");
  if (x == 0.0) {
    out[0] = 1.0;
    std::fill(out + 1, out + max_order + 1, 0.0);
    return;
  }
  if (x <= 1.0) return series_sequence(max_order, x, out);
  if (x >= 25.0 && x >= max_order) {
    double j0, j1;
    asymptotic_j01(x, j0, j1);
    out[0] = j0;
    if (max_order >= 1) out[1] = j1;
    for (int m = 1; m < max_order; ++m) out[m + 1] = 2.0 * m / x * out[m] - out[m - 1];
    return;
  }
  miller_sequence(max_order, x, out);
}

double bessel_j(int m, double x) {
  if (m < 0) throw DomainError("bessel_j requires m >= 0");
  std::vector<double> seq(m + 1);
  bessel_j_sequence(m, x, seq.data());
  return seq[m];
}

SpectralDensity component_density(const LayeredMedium& medium, const Component& c) {
  require_component(medium, c);
  return [&medium, c](double k) { return reaction_density(medium, c, k); };
}

cplx RadialTable::operator()(int order, int power) const {
  if (power < 0 || power > max_power_ || order < 0)
    throw IndexOutOfRange("radial table index out of range");
  if (order > power) throw IndexOutOfRange("radial table stores order <= power only");
  return values_[index(order, power)];
}

double radial_cutoff(int power, double rho, double zeta, double tol, double density_bound) {
  double K = std::max(60.0 / zeta, 200.0 / std::max(rho, zeta));
  const double bound = std::max(density_bound, 0.0);
  while (bound * upper_gamma_q(power, K * zeta) >= 0.1 * tol) K *= 1.2;
  return K;
}

RadialTable radial_table(const SpectralDensity& density, int max_power, double rho, double zeta,
                         double tol, double density_bound) {
  if (!(zeta > 0.0)) throw DomainError("radial integrals require a positive decay depth");
  if (rho < 0.0 || max_power < 0) throw DomainError("invalid radial integral parameters");
  if (!(tol >= 1e-13)) throw DomainError("quadrature tolerance must be at least 1e-13");

  const int dim = RadialTable::size(max_power);
  std::vector<double> envelope(max_power + 1), abs_tol(dim);
  for (int n = 0; n <= max_power; ++n) {
    envelope[n] = std::exp(std::lgamma(n + 1.0) - (n + 1.0) * std::log(zeta));
    for (int o = 0; o <= n; ++o) abs_tol[RadialTable::index(o, n)] = tol * envelope[n];
  }

  const double K = radial_cutoff(max_power, rho, zeta, tol, density_bound);
  AdaptiveOptions options;
  options.panel_width = 1.0 / zeta;
  if (rho > 0.0) options.panel_width = std::min(options.panel_width, kPi / rho);

  std::vector<double> bessel(max_power + 1);
  auto integrand = [&](double k, cplx* out) {
    const cplx w = density(k) * std::exp(-k * zeta);
    if (rho > 0.0) {
      bessel_j_sequence(max_power, k * rho, bessel.data());
    } else {
      std::fill(bessel.begin(), bessel.end(), 0.0);
      bessel[0] = 1.0;
    }
    cplx kp = w;
    for (int n = 0; n <= max_power; ++n) {
      for (int o = 0; o <= n; ++o) out[RadialTable::index(o, n)] = bessel[o] * kp;
      kp *= k;
    }
  };
  AdaptiveResult res = integrate_adaptive(integrand, dim, 0.0, K, abs_tol, options);

  QuadratureStats stats;
  stats.k_max = K;
  stats.panels = res.panels;
  stats.evaluations = res.evaluations;
  for (int n = 0; n <= max_power; ++n)
    for (int o = 0; o <= n; ++o)
      stats.relative_error =
          std::max(stats.relative_error, res.error[RadialTable::index(o, n)] / envelope[n]);
  stats.relative_error += density_bound * upper_gamma_q(max_power, K * zeta);
  if (!res.converged)
    throw ToleranceNotMet("radial quadrature did not converge", stats.relative_error);
  return RadialTable(max_power, std::move(res.value), stats);
}

RadialResult radial_integral(const RadialIntegralSpec& spec, double tol) {
  if (spec.order < 0 || spec.power < 0) throw DomainError("order and power must be nonnegative");
  if (!(spec.zeta > 0.0)) throw DomainError("radial integrals require a positive decay depth");
  if (!(spec.rho >= 0.0)) throw DomainError("transverse distance must be nonnegative");
  if (!(tol >= 1e-13)) throw DomainError("quadrature tolerance must be at least 1e-13");
  const double envelope =
      std::exp(std::lgamma(spec.power + 1.0) - (spec.power + 1.0) * std::log(spec.zeta));
  const double K = radial_cutoff(spec.power, spec.rho, spec.zeta, tol, spec.density_bound);
  AdaptiveOptions options;
  options.panel_width = 1.0 / spec.zeta;
  if (spec.rho > 0.0) options.panel_width = std::min(options.panel_width, kPi / spec.rho);

  std::vector<double> bessel(spec.order + 1);
  auto integrand = [&](double k, cplx* o) {
    bessel_j_sequence(spec.order, k * spec.rho, bessel.data());
    o[0] = bessel[spec.order] * std::pow(k, spec.power) * spec.density(k) * std::exp(-k * spec.zeta);
  };
  AdaptiveResult res = integrate_adaptive(integrand, 1, 0.0, K, {tol * envelope}, options);

  RadialResult out;
  out.value = res.value[0];
  out.stats.k_max = K;
  out.stats.panels = res.panels;
  out.stats.evaluations = res.evaluations;
  out.stats.relative_error =
      res.error[0] / envelope + spec.density_bound * upper_gamma_q(spec.power, K * spec.zeta);
  out.error_estimate = out.stats.relative_error * envelope;
  if (!res.converged) throw ToleranceNotMet("radial quadrature did not converge", out.stats.relative_error);
  return out;
}

GreenValue eval_reaction_green(const LayeredMedium& medium, const Component& c, const LayerPoint& r,
                               const LayerPoint& rp, double tol, double density_bound) {
  require_component(medium, c);
  if (r.layer() != c.target_layer || rp.layer() != c.source_layer)
    throw LayerMismatch("points do not lie in the component's layers");
  const Vec3 tau = tau_map(medium, c, r.position(), rp.position());
  RadialIntegralSpec spec;
  spec.rho = transverse_norm(tau);
  spec.zeta = tau.z;
  spec.density = component_density(medium, c);
  spec.density_bound = density_bound;
  const RadialResult res = radial_integral(spec, tol);
  return {res.value.real() / (4.0 * kPi), res.error_estimate / (4.0 * kPi)};
}

namespace {

struct Geometry {
  double rho, zeta, phi;
};

Geometry geometry_of(const Vec3& offset) {
  if (!(offset.z > 0.0))
    throw CenterOnWrongSide("expansion geometry requires a positive decay depth");
  return {transverse_norm(offset), offset.z, azimuth(offset.x, offset.y)};
}

std::vector<cplx> basis_from_table(const RadialTable& table, int p, double phi, bool sign_by_degree) {
  const auto& k = constants(p);
  std::vector<cplx> out(harmonic_count(p));
  for (int n = 0; n <= p; ++n) {
    const double cn2 = k.c(n) * k.c(n);
    for (int m = -n; m <= n; ++m) {
      const double sign = sign_by_degree ? sign_pow(n) : sign_pow(m);
      const int am = std::abs(m);
      out[harmonic_index(n, m)] =
          sign * cn2 * k.C(n, m) * ipow(am) * std::polar(1.0, m * phi) * table(am, n);
    }
  }
  return out;
}

}  // namespace

std::vector<cplx> me_basis_table(const LayeredMedium& medium, const Component& c, int p, const Vec3& r,
                                 const Vec3& center, double tol, double density_bound,
                                 QuadratureStats* stats) {
  require_component(medium, c);
  const Geometry g = geometry_of(polarization_offset(c, r, center));
  const RadialTable table = radial_table(component_density(medium, c), p, g.rho, g.zeta, tol, density_bound);
  if (stats) *stats = table.stats();
  return basis_from_table(table, p, g.phi, c.target_side == Side::lower);
}

cplx eval_me_basis(const LayeredMedium& medium, const Component& c, int n, int m, const Vec3& r,
                   const Vec3& center, double tol) {
  if (n < 0 || std::abs(m) > n) return 0.0;
  return me_basis_table(medium, c, n, r, center, tol)[harmonic_index(n, m)];
}

std::vector<cplx> direct_me_basis_table(const LayeredMedium& medium, const Component& c, int p,
                                        const Vec3& r, const Vec3& source_center, double tol,
                                        double density_bound) {
  const Geometry g = geometry_of(tau_map(medium, c, r, source_center));
  const RadialTable table = radial_table(component_density(medium, c), p, g.rho, g.zeta, tol, density_bound);
  return basis_from_table(table, p, g.phi, c.source_side == Side::upper);
}

std::vector<cplx> reaction_le_coeff_table(const LayeredMedium& medium, const Component& c, int p,
                                          const Vec3& target_center, const Vec3& source_point,
                                          double tol, double density_bound) {
  const Vec3 image = polarization_source(medium, c, source_point);
  const Geometry g = geometry_of(polarization_offset(c, target_center, image));
  const RadialTable table = radial_table(component_density(medium, c), p, g.rho, g.zeta, tol, density_bound);
  const auto& k = constants(p);
  const bool lower = c.target_side == Side::lower;
  std::vector<cplx> out(harmonic_count(p));
  for (int n = 0; n <= p; ++n)
    for (int m = -n; m <= n; ++m) {
      const double sign = lower ? 1.0 : sign_pow(n + m);
      const int am = std::abs(m);
      out[harmonic_index(n, m)] = sign * k.C(n, m) / (4.0 * kPi) * ipow(am) *
                                  std::polar(1.0, -m * g.phi) * table(am, n);
    }
  return out;
}

cplx eval_reaction_le_coeff(const LayeredMedium& medium, const Component& c, int n, int m,
                            const Vec3& target_center, const Vec3& source_point, double tol) {
  if (n < 0 || std::abs(m) > n) return 0.0;
  return reaction_le_coeff_table(medium, c, n, target_center, source_point, tol)[harmonic_index(n, m)];
}

namespace {

cplx m2l_entry(const HarmonicConstants& k, const RadialTable& table, double phi, bool lower, int n, int m,
               int np, int mp) {
  const double sign = lower ? sign_pow(np) : sign_pow(n + m + mp);
  const double d = sign * k.c(np) * k.c(np);
  const int dm = mp - m;
  return d * k.C(n, m) * k.C(np, mp) * ipow(std::abs(dm)) * std::polar(1.0, dm * phi) *
         table(std::abs(dm), n + np);
}

}  // namespace

std::vector<cplx> reaction_m2l_matrix(const LayeredMedium& medium, const Component& c, int p,
                                      const Vec3& target_center, const Vec3& source_center, double tol,
                                      double density_bound) {
  require_component(medium, c);
  const Geometry g = geometry_of(polarization_offset(c, target_center, source_center));
  const RadialTable table =
      radial_table(component_density(medium, c), 2 * p, g.rho, g.zeta, tol, density_bound);
  const auto& k = constants(2 * p);
  const bool lower = c.target_side == Side::lower;
  const int size = harmonic_count(p);
  std::vector<cplx> out(static_cast<std::size_t>(size) * size);
  for (int n = 0; n <= p; ++n)
    for (int m = -n; m <= n; ++m)
      for (int np = 0; np <= p; ++np)
        for (int mp = -np; mp <= np; ++mp)
          out[static_cast<std::size_t>(harmonic_index(n, m)) * size + harmonic_index(np, mp)] =
              m2l_entry(k, table, g.phi, lower, n, m, np, mp);
  return out;
}

cplx eval_reaction_m2l_entry(const LayeredMedium& medium, const Component& c, int n, int m, int np,
                             int mp, const Vec3& target_center, const Vec3& source_center, double tol) {
  require_component(medium, c);
  if (n < 0 || np < 0 || std::abs(m) > n || std::abs(mp) > np) return 0.0;
  const Geometry g = geometry_of(polarization_offset(c, target_center, source_center));
  const RadialTable table = radial_table(component_density(medium, c), n + np, g.rho, g.zeta, tol);
  return m2l_entry(constants(n + np), table, g.phi, c.target_side == Side::lower, n, m, np, mp);
}

cplx branch_sqrt(cplx z) {
  // sign(0) read as +1; otherwise the negative real axis would map to 0.
  const double sign = z.imag() < 0.0 ? -1.0 : 1.0;
  const double a = std::abs(z);
  if (a == 0.0) return 0.0;
  // The smaller part comes from z2 / (2 * larger) to avoid cancellation.
  if (z.real() >= 0.0) {
    const double re = std::sqrt(0.5 * (a + z.real()));
    return {re, z.imag() / (2.0 * re)};
  }
  const double im = std::sqrt(0.5 * (a - z.real()));
  return {std::abs(z.imag()) / (2.0 * im), sign * im};
}

const char* to_string(CagniardFunction f) {
  switch (f) {
    case CagniardFunction::one: return "1";
    case CagniardFunction::linear: return "xi";
    case CagniardFunction::quadratic: return "xi^2";
    case CagniardFunction::exponential: return "exp(i xi)";
  }
  return "?";
}

CagniardResult cagniard_identity_check(CagniardFunction f, double rho, double z, double eta, double tol) {
  if (!(z > 0.0) || !(rho >= 0.0) || !(eta > 0.0))
    throw DomainError("identity check requires z > 0, rho >= 0, eta > 0");
  auto fn = [f](cplx xi) -> cplx {
    switch (f) {
      case CagniardFunction::one: return 1.0;
      case CagniardFunction::linear: return xi;
      case CagniardFunction::quadratic: return xi * xi;
      case CagniardFunction::exponential: return std::exp(cplx(0.0, 1.0) * xi);
    }
    return 0.0;
  };
  const cplx I(0.0, 1.0);
  CagniardResult out;

  // Real-axis side, truncated where the integrand envelope (1 + xi^2) e^{-|xi| z} is negligible.
  double X = 10.0 / z;
  auto tail = [z](double x) {
    return 2.0 * std::exp(-x * z) * ((1.0 + x * x) / z + 2.0 * x / (z * z) + 2.0 / (z * z * z));
  };
  while (tail(X) >= 0.05 * tol) X *= 1.2;
  const double phase = rho + (f == CagniardFunction::exponential ? 1.0 : 0.0);
  AdaptiveOptions real_opts;
  real_opts.panel_width = std::min(1.0 / z, eta);
  if (phase > 0.0) real_opts.panel_width = std::min(real_opts.panel_width, kPi / phase);
  auto lhs_integrand = [&](double xi, cplx* o) {
    const cplx root = branch_sqrt(cplx(eta * eta + xi * xi, 0.0));
    o[0] = fn(xi) * std::exp(I * xi * rho - root * z);
  };
  AdaptiveResult lhs = integrate_adaptive(lhs_integrand, 1, -X, X, {0.25 * tol}, real_opts);

  // Contour side in s with t = cosh s, which absorbs dt / sqrt(t^2 - 1).
  const double r = std::hypot(rho, z);
  double T = 2.0;
  auto contour_tail = [&](double t) {
    return 20.0 * (1.0 + eta * eta * t * t) * eta * t * std::exp(-eta * r * t) / (eta * r);
  };
  while (contour_tail(T) >= 0.05 * tol) T *= 1.2;
  const double S = std::acosh(T);
  auto rhs_integrand = [&](double s, cplx* o) {
    const double t = std::cosh(s), st = std::sinh(s);
    const double scale = eta / r;
    const cplx xi_p = scale * cplx(z * st, rho * t);
    const cplx xi_m = scale * cplx(-z * st, rho * t);
    const cplx lam_p = scale * cplx(rho * st, -z * t);
    const cplx lam_m = scale * cplx(rho * st, z * t);
    o[0] = I * (fn(xi_p) * lam_p - fn(xi_m) * lam_m) * std::exp(-eta * r * t);
  };
  AdaptiveOptions contour_opts;
  contour_opts.panel_width = 0.25;
  AdaptiveResult rhs = integrate_adaptive(rhs_integrand, 1, 0.0, S, {0.25 * tol}, contour_opts);

  if (!lhs.converged || !rhs.converged)
    throw ToleranceNotMet("identity quadrature did not converge", std::max(lhs.error[0], rhs.error[0]));
  out.lhs = lhs.value[0];
  out.rhs = rhs.value[0];
  out.lhs_error = lhs.error[0] + tail(X);
  out.rhs_error = rhs.error[0] + contour_tail(T);
  return out;
}

}  // namespace layermp
