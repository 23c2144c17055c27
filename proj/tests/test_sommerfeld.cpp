#include <cmath>
#include <numbers>

#include <boost/math/special_functions/bessel.hpp>

#include "doctest.h"
#include "layermp/densities.hpp"
#include "layermp/error.hpp"
#include "layermp/harmonics.hpp"
#include "layermp/quadrature.hpp"
#include "layermp/sommerfeld.hpp"
#include "oracles.hpp"
#include "test_support.hpp"

using namespace layermp;
using std::numbers::pi;

namespace {

#include "bessel_reference.inc"

RadialIntegralSpec unit_spec(int order, int power, double rho, double zeta) {
  RadialIntegralSpec s;
  s.order = order;
  s.power = power;
  s.rho = rho;
  s.zeta = zeta;
  s.density = [](double) { return cplx(1.0); };
  return s;
}

}  // namespace

TEST_CASE("Bessel values at the origin and the first zero") {
  CHECK(bessel_j(0, 0.0) == 1.0);
  CHECK(bessel_j(1, 0.0) == 0.0);
  CHECK(bessel_j(7, 0.0) == 0.0);
  CHECK(std::abs(bessel_j(0, 2.4048255577)) < 1e-9);
  CHECK(std::abs(bessel_j(0, kFirstZeroJ0)) < 1e-15);
}

TEST_CASE("Bessel against frozen high-precision values") {
  for (const BesselSample& s : kBesselReference) {
    const double v = bessel_j(s.m, s.x);
    // Relative to the oscillation envelope past the turning point.
    const double scale = s.x > s.m ? std::max(std::abs(s.value), std::sqrt(2.0 / (pi * s.x))) : std::abs(s.value);
    CAPTURE(s.m);
    CAPTURE(s.x);
    CHECK(std::abs(v - s.value) <= 1e-13 * scale);
  }
}

TEST_CASE("Bessel sequence agrees with single-order calls and an extended-precision reference") {
  std::vector<double> seq(41);
  for (double x : {0.3, 1.0, 1.0001, 9.0, 24.99, 25.0, 33.0, 300.0}) {
    bessel_j_sequence(40, x, seq.data());
    for (int m = 0; m <= 40; ++m) {
      const double scale = std::max(std::abs(seq[m]), x > m ? 1.0 / std::sqrt(x) : 0.0);
      CHECK(std::abs(seq[m] - bessel_j(m, x)) <= 1e-14 * scale);
      const double ref = static_cast<double>(boost::math::cyl_bessel_j<long double>(m, x));
      CHECK(std::abs(seq[m] - ref) <= 1e-13 * scale);
    }
  }
}

TEST_CASE("Lipschitz integrals") {
  testing_support::Rng rng(21);
  for (int trial = 0; trial < 40; ++trial) {
    const double rho = trial == 0 ? 0.0 : rng.uniform(0.0, 4.0);
    const double zeta = rng.uniform(0.2, 3.0);
    const double R = std::hypot(rho, zeta);
    CHECK(std::abs(radial_integral(unit_spec(0, 0, rho, zeta), 1e-13).value - 1.0 / R) < 1e-11 / zeta);
    CHECK(std::abs(radial_integral(unit_spec(0, 1, rho, zeta), 1e-13).value - zeta / (R * R * R)) <
          1e-11 / (zeta * zeta));
    CHECK(std::abs(radial_integral(unit_spec(1, 1, rho, zeta), 1e-13).value - rho / (R * R * R)) <
          1e-11 / (zeta * zeta));
    const double j1_k0 = rho > 0.0 ? (1.0 - zeta / R) / rho : 0.0;
    CHECK(std::abs(radial_integral(unit_spec(1, 0, rho, zeta), 1e-13).value - j1_k0) < 1e-11 / zeta);
  }
}

TEST_CASE("order-one Lipschitz integral against a brute-force sum") {
  const double rho = 1.3, zeta = 0.8;
  const double brute = oracle::simpson([&](double k) { return std::cyl_bessel_j(1.0, k * rho) * k * std::exp(-k * zeta); },
                                       0.0, 80.0, 400000);
  CHECK(std::abs(radial_integral(unit_spec(1, 1, rho, zeta), 1e-12).value - brute) < 1e-10);
}

TEST_CASE("vectorized table matches single integrals") {
  const auto density = [](double k) { return cplx(1.0 / (1.0 + k), 0.0); };
  const RadialTable table = radial_table(density, 6, 0.9, 0.7, 1e-12);
  for (int n = 0; n <= 6; ++n)
    for (int o = 0; o <= n; ++o) {
      RadialIntegralSpec s = unit_spec(o, n, 0.9, 0.7);
      s.density = density;
      const cplx single = radial_integral(s, 1e-12).value;
      const double env = std::tgamma(n + 1.0) / std::pow(0.7, n + 1);
      CHECK(std::abs(table(o, n) - single) < 2e-12 * env);
    }
  CHECK_THROWS_AS(table(3, 2), IndexOutOfRange);
  CHECK(table.stats().relative_error < 1e-12);
}

TEST_CASE("integrals are linear in the density") {
  const LayeredMedium m({0.5, -0.5}, {1, 1, 1}, {1, 3, 2});
  const Component c{Side::lower, Side::lower, 0, 0};
  RadialIntegralSpec s = unit_spec(2, 3, 0.7, 1.1);
  const SpectralDensity base = component_density(m, c);
  s.density = base;
  const cplx once = radial_integral(s, 1e-12).value;
  s.density = [&](double k) { return 2.0 * base(k); };
  s.density_bound = 2.0;
  CHECK(std::abs(radial_integral(s, 1e-12).value - 2.0 * once) < 1e-14 * std::abs(once) + 1e-15);
}

TEST_CASE("half-space reaction matches the image charge") {
  const double e0 = 1.0, e1 = 4.0;
  const LayeredMedium m = LayeredMedium::dielectric({0.0}, {e0, e1});
  const Component c{Side::lower, Side::lower, 0, 0};
  testing_support::Rng rng(17);
  for (int trial = 0; trial < 30; ++trial) {
    const Vec3 rp{rng.uniform(-1, 1), rng.uniform(-1, 1), rng.uniform(0.2, 2.0)};
    const Vec3 r{rng.uniform(-2, 2), rng.uniform(-2, 2), rng.uniform(0.2, 2.0)};
    const GreenValue g = eval_reaction_green(m, c, LayerPoint(m, r), LayerPoint(m, rp), 1e-12);
    CHECK(std::abs(g.value - oracle::half_space_reflection(e0, e1, 0.0, r, rp)) < 1e-10);
    CHECK(g.error_estimate < 1e-10);
  }
}

TEST_CASE("reaction field is invariant under rotation about the source axis") {
  const LayeredMedium m({1.0, 0.0, -1.0}, {1, 2, 1, 1}, {2, 1, 5, 3});
  testing_support::Rng rng(18);
  const Vec3 rp{0.3, -0.2, 0.5};
  const Vec3 r{1.1, 0.4, -0.6};
  for (const Component& c : all_components(2, 1)) {
    if (!component_exists(m, c)) continue;
    const double ref = eval_reaction_green(m, c, LayerPoint(m, r), LayerPoint(m, rp), 1e-12).value;
    for (int i = 0; i < 10; ++i) {
      const double a = rng.uniform(0, 2 * pi);
      const Vec3 d = r - rp;
      const Vec3 rot{rp.x + std::cos(a) * d.x - std::sin(a) * d.y, rp.y + std::sin(a) * d.x + std::cos(a) * d.y,
                     r.z};
      const double v = eval_reaction_green(m, c, LayerPoint(m, rot), LayerPoint(m, rp), 1e-12).value;
      CHECK(std::abs(v - ref) < 1e-11);
    }
  }
}

TEST_CASE("doubling the cutoff leaves the green function unchanged") {
  const LayeredMedium m({0.0}, {1, 1}, {1, 6});
  const Component c{Side::lower, Side::lower, 0, 0};
  const SpectralDensity density = component_density(m, c);
  testing_support::Rng rng(19);
  for (int trial = 0; trial < 20; ++trial) {
    const Vec3 r{rng.uniform(-1, 1), rng.uniform(-1, 1), rng.uniform(0.1, 1.0)};
    const Vec3 rp{0.0, 0.0, rng.uniform(0.1, 1.0)};
    const Vec3 tau = tau_map(m, c, r, rp);
    const double rho = transverse_norm(tau), zeta = tau.z;
    const double K = radial_cutoff(0, rho, zeta, 1e-12, 1.0);
    AdaptiveOptions opts;
    opts.panel_width = std::min(1.0 / zeta, rho > 0 ? pi / rho : 1.0 / zeta);
    const auto extra = integrate_adaptive(
        [&](double k, cplx* o) { o[0] = std::cyl_bessel_j(0.0, k * rho) * density(k) * std::exp(-k * zeta); },
        1, K, 2.0 * K, {1e-16}, opts);
    CHECK(std::abs(extra.value[0]) < 1e-12 / zeta);
  }
}

TEST_CASE("multipole basis symmetries and the monopole term") {
  const LayeredMedium m({0.5, -0.5}, {1, 1, 1}, {2, 1, 4});
  const Component c{Side::upper, Side::lower, 1, 0};
  const Vec3 rp{0.1, 0.2, 1.2};
  const Vec3 r{-0.3, 0.4, 0.2};
  const Vec3 image = polarization_source(m, c, rp);
  const auto table = me_basis_table(m, c, 8, r, image, 1e-12);
  for (int n = 0; n <= 8; ++n)
    for (int mm = 0; mm <= n; ++mm)
      CHECK(std::abs(table[harmonic_index(n, -mm)] - sign_pow(mm) * std::conj(table[harmonic_index(n, mm)])) <
            1e-12 * (1.0 + std::abs(table[harmonic_index(n, mm)])));
  CHECK(eval_me_basis(m, c, 2, 3, r, image, 1e-12) == cplx(0.0));
  const double u = eval_reaction_green(m, c, LayerPoint(m, r), LayerPoint(m, rp), 1e-12).value;
  CHECK(std::abs(table[0] / std::sqrt(4 * pi) - u) < 1e-12);
  CHECK(std::abs(eval_me_basis(m, c, 3, -2, r, image, 1e-12) - table[harmonic_index(3, -2)]) < 1e-13);
}

TEST_CASE("local coefficient at the target center gives the potential there") {
  const LayeredMedium m({0.5, -0.5}, {1, 1, 1}, {2, 1, 4});
  for (const Component& c : {Component{Side::upper, Side::lower, 1, 0}, Component{Side::lower, Side::lower, 1, 0},
                             Component{Side::lower, Side::upper, 1, 2}}) {
    const Vec3 rp = c.source_layer == 0 ? Vec3{0.1, 0.2, 1.2} : Vec3{0.1, 0.2, -1.3};
    const Vec3 center{-0.2, 0.3, 0.1};
    const cplx L00 = eval_reaction_le_coeff(m, c, 0, 0, center, rp, 1e-12);
    const double u = eval_reaction_green(m, c, LayerPoint(m, center), LayerPoint(m, rp), 1e-12).value;
    CHECK(std::abs(L00.real() / std::sqrt(4 * pi) - u) < 1e-12);
    CHECK(std::abs(L00.imag()) < 1e-14);
  }
}

TEST_CASE("translation entries obey the conjugation symmetry") {
  const LayeredMedium m({0.5, -0.5}, {1, 1, 1}, {2, 1, 4});
  const Component c{Side::lower, Side::lower, 0, 0};
  const Vec3 target{0.1, 0.0, 1.5};
  const Vec3 source{-0.4, 0.3, -0.8};
  const int p = 5;
  const auto T = reaction_m2l_matrix(m, c, p, target, source, 1e-12);
  const int size = harmonic_count(p);
  for (int n = 0; n <= p; ++n)
    for (int mm = -n; mm <= n; ++mm)
      for (int np = 0; np <= p; ++np)
        for (int mp = -np; mp <= np; ++mp) {
          const cplx a = T[harmonic_index(n, mm) * size + harmonic_index(np, mp)];
          const cplx b = T[harmonic_index(n, -mm) * size + harmonic_index(np, -mp)];
          CHECK(std::abs(a - sign_pow(mm + mp) * std::conj(b)) < 1e-10 * (1.0 + std::abs(a)));
        }
  const cplx entry = eval_reaction_m2l_entry(m, c, 2, 1, 3, -2, target, source, 1e-12);
  CHECK(std::abs(entry - T[harmonic_index(2, 1) * size + harmonic_index(3, -2)]) < 1e-10 * (1.0 + std::abs(entry)));
}

TEST_CASE("positive decay depth is enforced") {
  const LayeredMedium m({0.0}, {1, 1}, {1, 2});
  const Component c{Side::lower, Side::lower, 0, 0};
  CHECK_THROWS_AS(me_basis_table(m, c, 3, {0, 0, 1}, {0, 0, 2}, 1e-12), CenterOnWrongSide);
  CHECK_THROWS_AS(radial_integral(unit_spec(0, 0, 1.0, 0.0), 1e-12), DomainError);
  CHECK_THROWS_AS(radial_integral(unit_spec(0, 0, 1.0, 1.0), 1e-15), DomainError);
}

TEST_CASE("contour identity examples") {
  for (auto [rho, z, eta] : {std::tuple{0.0, 1.0, 1.0}, std::tuple{1.0, 2.0, 0.5}}) {
    const CagniardResult r = cagniard_identity_check(CagniardFunction::one, rho, z, eta, 1e-10);
    CHECK(std::abs(r.lhs - r.rhs) < 1e-8);
  }
  // Independent brute force for the first case.
  const double brute = 2.0 * oracle::simpson([](double x) { return std::exp(-std::sqrt(1.0 + x * x)); }, 0.0, 60.0, 200000);
  CHECK(std::abs(cagniard_identity_check(CagniardFunction::one, 0.0, 1.0, 1.0, 1e-10).lhs - brute) < 1e-9);
}

TEST_CASE("contour identity over the function catalog") {
  double worst = 0.0;
  for (CagniardFunction f : {CagniardFunction::one, CagniardFunction::linear, CagniardFunction::quadratic,
                             CagniardFunction::exponential})
    for (double rho : {0.0, 0.7, 2.0})
      for (double z : {0.5, 1.0, 2.5})
        for (double eta : {0.3, 1.0, 2.0}) {
          const CagniardResult r = cagniard_identity_check(f, rho, z, eta, 1e-10);
          worst = std::max(worst, std::abs(r.lhs - r.rhs));
        }
  CHECK(worst < 1e-8);
}

TEST_CASE("square root branch") {
  testing_support::Rng rng(23);
  for (int i = 0; i < 10000; ++i) {
    const cplx z(rng.uniform(-100, 100), rng.uniform(-100, 100));
    const cplx s = branch_sqrt(z);
    CHECK(s.real() >= 0.0);
    CHECK(std::abs(s * s - z) < 1e-13 * std::abs(z));
  }
  CHECK(branch_sqrt(cplx(-4.0, 0.0)) == cplx(0.0, 2.0));
  CHECK(branch_sqrt(cplx(9.0, 0.0)) == cplx(3.0, 0.0));
}
