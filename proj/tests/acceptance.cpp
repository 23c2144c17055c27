// Acceptance run: one PASS/FAIL line per criterion, nonzero exit on any failure.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <numbers>
#include <string>
#include <vector>

#include <boost/math/special_functions/spherical_harmonic.hpp>

#include "layermp/densities.hpp"
#include "layermp/error.hpp"
#include "layermp/expansions.hpp"
#include "layermp/harmonics.hpp"
#include "layermp/lab.hpp"
#include "layermp/sommerfeld.hpp"
#include "oracles.hpp"
#include "test_support.hpp"

using namespace layermp;
using std::numbers::pi;
using testing_support::Rng;

namespace {

#include "bessel_reference.inc"

struct Outcome {
  bool passed = true;
  std::string detail;

  void require(bool ok, const std::string& what) {
    if (!ok) passed = false;
    if (!detail.empty()) detail += "; ";
    detail += what + (ok ? "" : " [violated]");
  }
};

std::string sci(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.2e", v);
  return buf;
}

const LayeredMedium& three_layer() {
  static const LayeredMedium m({0.0, -1.0}, {1, 1, 1}, {1, 4, 2});
  return m;
}

lab::ExperimentConfig sweep(lab::ExperimentKind kind, int p_max) {
  lab::ExperimentConfig c;
  c.kind = kind;
  c.p_min = 1;
  c.p_max = p_max;
  return c;
}

void require_report(Outcome& out, const lab::ConvergenceReport& r, const std::string& label) {
  double worst_ratio = INFINITY;
  for (const auto& row : r.rows)
    if (row.max_error > row.floor) worst_ratio = std::min(worst_ratio, row.bound / row.max_error);
  out.require(r.passed(), label + " min bound/error " + sci(worst_ratio));
}

// 1. Two-layer densities are constant and reproduce the image charge.
Outcome two_layer() {
  Outcome out;
  Rng rng(1001);
  double deviation = 0.0, image = 0.0;
  for (double eps : {2.0, 10.0, 80.0}) {
    const LayeredMedium m = LayeredMedium::dielectric({0.0}, {1.0, eps});
    const Component c{Side::lower, Side::lower, 0, 0};
    const cplx at_zero = reaction_density(m, c, 0.0);
    for (int i = 0; i <= 2000; ++i) deviation = std::max(deviation, std::abs(reaction_density(m, c, 0.05 * i) - at_zero));
    for (int i = 0; i < 50; ++i) {
      const Vec3 r{rng.uniform(-2, 2), rng.uniform(-2, 2), rng.uniform(0.05, 2)};
      const Vec3 rp{rng.uniform(-2, 2), rng.uniform(-2, 2), rng.uniform(0.05, 2)};
      const double want = oracle::half_space_reflection(1.0, eps, 0.0, r, rp);
      const double got = eval_reaction_green(m, c, LayerPoint(m, r), LayerPoint(m, rp), 1e-13).value;
      image = std::max(image, std::abs(got - want) / std::abs(want));
    }
  }
  out.require(deviation < 1e-12, "density deviation " + sci(deviation));
  out.require(image < 1e-10, "image-charge relative error " + sci(image));
  return out;
}

// 2. Without material contrast nothing is reflected.
Outcome homogeneous() {
  Outcome out;
  Rng rng(1002);
  const double tol = 1e-12;
  double same_layer = 0.0, through = 0.0, potential = 0.0, expansion = 0.0, free_field = 0.0;
  bool single_layer_empty = true;
  int potentials = 0;
  for (int trial = 0; trial < 11; ++trial) {
    const int L = trial % 5;
    const double a = std::exp(rng.uniform(std::log(0.1), std::log(10.0)));
    const double b = std::exp(rng.uniform(std::log(0.1), std::log(10.0)));
    std::vector<double> d(L);
    double z = 0.5;
    for (int i = 0; i < L; ++i, z -= rng.uniform(0.5, 1.5)) d[i] = z;
    const LayeredMedium m(d, std::vector<double>(L + 1, a), std::vector<double>(L + 1, b));
    if (L == 0) {
      for (const Component& c : all_components(0, 0)) single_layer_empty = single_layer_empty && !component_exists(m, c);
      continue;
    }
    for (int tl = 0; tl <= L; ++tl)
      for (int sl = 0; sl <= L; ++sl) {
        for (int i = 0; i < 20; ++i) {
          const cplx k(rng.uniform(0, 20), rng.uniform(-20, 20));
          const ReactionDensitySet set = reaction_densities(m, tl, sl, k);
          for (const Component& c : all_components(tl, sl)) {
            if (!component_exists(m, c)) continue;
            if (tl == sl)
              same_layer = std::max(same_layer, std::abs(set.value(c)));
            else
              through = std::max(through, std::abs(set.value(c) - matched_density(m, c, k)));
          }
        }
        // Quadratures dominate the runtime, so potentials use a subset of the pairs.
        if (rng.integer(0, tl == sl ? 1 : 3) != 0) continue;
        const LayerPoint r(m, {rng.uniform(-1, 1), rng.uniform(-1, 1), testing_support::height_in_layer(rng, m, tl, 0.2)});
        const LayerPoint rp(m, {rng.uniform(-1, 1), rng.uniform(-1, 1), testing_support::height_in_layer(rng, m, sl, 0.2)});
        double total = 0.0;
        for (const Component& c : all_components(tl, sl)) {
          if (!component_exists(m, c)) continue;
          const double u = eval_reaction_green(m, c, r, rp, tol).value;
          ++potentials;
          total += u;
          if (matched_density(m, c, 1.0) == cplx(0.0)) potential = std::max(potential, std::abs(u));
        }
        if (tl != sl) free_field = std::max(free_field, std::abs(total - 1.0 / (4 * pi * norm(r.position() - rp.position()))));
      }
    // Expansions of a same-layer component.
    if (trial % 3 == 1) {
      const int layer = rng.integer(0, L);
      const Component c{layer == L ? Side::upper : Side::lower, layer == L ? Side::upper : Side::lower, layer, layer};
      const Vec3 center{0, 0, testing_support::height_in_layer(rng, m, layer, 0.45)};
      ChargeSystem sys;
      sys.charges.push_back({0.7, LayerPoint(m, center + Vec3{0.01, 0.02, 0.0})});
      const Vec3 image = polarization_source(m, c, center);
      const HarmonicExpansion me = reaction_me_from_charges(sys, m, c, {image, 0.05}, 6);
      const Vec3 target = center + Vec3{0.3, 0.0, 0.0};
      expansion = std::max(expansion, std::abs(eval_reaction_me(me, m, LayerPoint(m, target), {tol, 1.0}).value));
      const HarmonicExpansion le = reaction_le_from_charges(sys, m, c, {target, 0.05}, 6, {tol, 1.0});
      expansion = std::max(expansion, std::abs(eval_expansion(le, target).value));
    }
  }
  auto cfg = sweep(lab::ExperimentKind::reaction_me, 4);
  cfg.targets = 16;
  cfg.medium = LayeredMedium({0.5, -0.5}, {2, 2, 2}, {3, 3, 3});
  cfg.target_layer = 1;
  cfg.source = {{0, 0, 0.1}, 0.2};
  cfg.eval_radius = 1.5;
  cfg.charges = 3;
  const lab::ConvergenceReport r = lab::run_experiment(cfg);
  out.require(single_layer_empty, "single layer has no components");
  out.require(same_layer < 1e-13, "same-layer densities " + sci(same_layer));
  out.require(through < 1e-13, "cross-layer densities minus free transmission " + sci(through));
  out.require(potentials > 0 && potential < tol, std::to_string(potentials) + " potentials, reflected part " + sci(potential));
  out.require(free_field < 1e-11, "cross-layer total minus free field " + sci(free_field));
  out.require(expansion < tol, "expansions " + sci(expansion));
  out.require(r.degenerate && r.passed(), "lab report flagged degenerate");
  return out;
}

// 3. Second-row inequality over random media and spectral arguments.
Outcome lemma() {
  Outcome out;
  Rng rng(1003);
  long violations = 0;
  double worst = INFINITY;
  for (int i = 0; i < 10000; ++i) {
    const LayeredMedium m = testing_support::random_medium(rng, 5);
    const double mag = std::exp(rng.uniform(std::log(1e-3), std::log(1e2)));
    const cplx k = std::polar(mag, rng.uniform(-pi / 2, pi / 2));
    try {
      worst = std::min(worst, second_row_margin(interface_matrices(m, k)));
    } catch (const LemmaViolation&) {
      ++violations;
    }
  }
  out.require(violations == 0, std::to_string(violations) + " violations, smallest slack " + sci(worst));
  return out;
}

// 4. Free-space multipole bound and decay rate.
Outcome free_me() {
  Outcome out;
  for (double r : {2.0, 4.0, 8.0}) {
    auto c = sweep(lab::ExperimentKind::me, 20);
    c.eval_radius = r;
    c.seed = 1;
    const lab::ConvergenceReport rep = lab::run_experiment(c);
    require_report(out, rep, "r=" + std::to_string(static_cast<int>(r)));
    const double rel = std::abs(rep.rate_fit / rep.rate_theory - 1.0);
    out.require(rel < 0.1, "rate " + sci(rep.rate_fit) + " vs ln(r/a) " + sci(rep.rate_theory));
  }
  return out;
}

// 5. Free-space local bound and exact shifts.
Outcome free_le() {
  Outcome out;
  auto c = sweep(lab::ExperimentKind::le, 20);
  c.source = {{4, 0, 0}, 1.0};
  c.target_center = Vec3{0, 0, 0};
  c.eval_radius = 1.0;
  c.seed = 2;
  require_report(out, lab::run_experiment(c), "le");

  auto m = sweep(lab::ExperimentKind::m2m, 20);
  m.source = {{0, 0, 0}, 0.5};
  m.shift = {0.3, -0.2, 0.1};
  m.eval_radius = 3.0;
  m.seed = 3;
  const auto rm = lab::run_experiment(m);
  require_report(out, rm, "m2m");
  out.require(rm.exactness_residual < 1e-12, "m2m recomputation " + sci(rm.exactness_residual));

  auto l = sweep(lab::ExperimentKind::l2l, 20);
  l.source = {{5, 1, 0}, 1.0};
  l.target_center = Vec3{0, 0, 0};
  l.shift = {0.4, -0.3, 0.2};
  l.eval_radius = 0.5;
  l.seed = 4;
  const auto rl = lab::run_experiment(l);
  require_report(out, rl, "l2l");
  out.require(rl.exactness_residual < 1e-12, "l2l pointwise " + sci(rl.exactness_residual));
  return out;
}

// 6. Free-space translation bound.
Outcome free_m2l() {
  Outcome out;
  for (double sep : {2.0, 3.0}) {
    auto c = sweep(lab::ExperimentKind::m2l, 20);
    c.separation = sep;
    c.seed = 5;
    require_report(out, lab::run_experiment(c), "c=" + std::to_string(static_cast<int>(sep)));
  }
  return out;
}

// 7. Reaction multipole with polarization sources, three layers.
Outcome reaction_me() {
  Outcome out;
  for (const char* label : {"11", "12"}) {
    auto c = sweep(lab::ExperimentKind::reaction_me, 15);
    c.medium = three_layer();
    c.component = label;
    c.target_layer = 0;
    c.source = {{0.2, -0.1, label[1] == '1' ? 1.5 : -0.5}, label[1] == '1' ? 0.5 : 0.3};
    c.eval_radius = 3.0;
    c.charges = 10;
    c.seed = 7;
    const auto r = lab::run_experiment(c);
    require_report(out, r, std::string(label) + " M=" + sci(r.density_bound));
    out.require(r.rate_rows >= 2 && r.rate_fit > 0.5 * r.rate_theory,
                "decay rate " + sci(r.rate_fit) + " vs " + sci(r.rate_theory));
  }
  return out;
}

// 8. Reaction local expansion and translation.
Outcome reaction_le_m2l() {
  Outcome out;
  auto le = sweep(lab::ExperimentKind::reaction_le, 15);
  le.medium = three_layer();
  le.source = {{1.5, 0, 1.2}, 0.3};
  le.target_center = Vec3{0, 0, 0.8};
  le.eval_radius = 0.6;
  le.charges = 10;
  le.seed = 8;
  require_report(out, lab::run_experiment(le), "le");

  auto m2l = sweep(lab::ExperimentKind::reaction_m2l, 15);
  m2l.medium = three_layer();
  m2l.target_layer = 0;
  m2l.source = {{0, 0, 0.7}, 0.3};
  m2l.target_radius = 0.3;
  m2l.direction = {0.3, 0, 0.954};
  m2l.separation = 3.0;
  m2l.charges = 10;
  m2l.seed = 9;
  const auto rm = lab::run_experiment(m2l);
  require_report(out, rm, "m2l c=" + sci(rm.separation));

  // Single charge over a dielectric half-space, p = 15, c = 3.
  const LayeredMedium half = LayeredMedium::dielectric({0.0}, {1.0, 4.0});
  const Component comp{Side::lower, Side::lower, 0, 0};
  const Box source{{0, 0, 0.7}, 0.3};
  const ChargeSystem one = lab::generate_charges(11, 1, source, half);
  const Vec3 image = polarization_source(half, comp, source.center);
  const Vec3 dir = (1.0 / norm(Vec3{0.3, 0, 0.954})) * Vec3{0.3, 0, 0.954};
  const Box target{image + (0.3 + 3.0 * 0.3) * dir, 0.3};
  const HarmonicExpansion me = reaction_me_from_charges(one, half, comp, {image, 0.3}, 15);
  const HarmonicExpansion local = m2l_reaction(me, half, target, 15, {1e-13, 1.0});
  double worst = 0.0;
  for (const Vec3& r : lab::fibonacci_sphere(target.center, target.radius, 64)) {
    const double want = one.charges[0].q *
                        eval_reaction_green(half, comp, LayerPoint(half, r), one.charges[0].point, 1e-13).value;
    worst = std::max(worst, std::abs(eval_expansion(local, r).value - want));
  }
  out.require(worst < 1e-8, "single-charge p=15 error " + sci(worst));
  return out;
}

// 9. Direct and polarization multipoles describe the same field.
Outcome equivalence() {
  Outcome out;
  const LayeredMedium& m = three_layer();
  Rng rng(1009);
  const double tol = 1e-12;
  double worst = 0.0;
  int compared = 0;
  struct Case {
    int target_layer;
    Vec3 center;
  };
  for (const Case& cs : {Case{0, {0, 0, -0.5}}, Case{1, {0.1, 0, 0.6}}, Case{1, {0, 0.1, -1.6}}, Case{2, {0, 0, 0.8}}}) {
    const int sl = m.layer_of(cs.center.z);
    const ChargeSystem sys = testing_support::charge_cloud(rng, m, cs.center, 0.2, 6);
    const HarmonicExpansion free_me = me_from_charges(sys, {cs.center, 0.2}, 10);
    for (const Component& c : all_components(cs.target_layer, sl)) {
      if (!component_exists(m, c)) continue;
      const Vec3 image = polarization_source(m, c, cs.center);
      const HarmonicExpansion pol = reaction_me_from_charges(sys, m, c, {image, 0.2}, 10);
      for (int i = 0; i < 4; ++i) {
        const double z = testing_support::height_in_layer(rng, m, cs.target_layer, 0.3);
        const Vec3 x{rng.uniform(-0.5, 0.5), rng.uniform(-0.5, 0.5), z};
        if (norm(x - image) < 0.5 || norm(reflect_z(x) - reflect_z(image)) < 0.5) continue;
        const LayerPoint r(m, x);
        cplx a = 0.0, b = 0.0;
        for (const cplx& t : reaction_degree_terms(pol, m, r, {tol, 1.0})) a += t;
        for (const cplx& t : direct_reaction_degree_terms(free_me, m, c, r, {tol, 1.0})) b += t;
        worst = std::max(worst, std::abs(a - b));
        ++compared;
      }
    }
  }
  out.require(compared > 0 && worst < 10 * tol, std::to_string(compared) + " points, worst " + sci(worst));
  return out;
}

// 10. Harmonic identities and special-function accuracy.
Outcome harmonics() {
  Outcome out;
  const lab::SuiteSummary s = lab::run_property_suite(lab::ExperimentKind::addition_theorems);
  double identities = 0.0;
  for (const auto& c : s.checks) identities = std::max(identities, c.worst);
  out.require(s.passed() && identities < 1e-12, "identity residual " + sci(identities));

  Rng rng(1010);
  double legendre = 0.0;
  for (int trial = 0; trial < 100; ++trial) {
    const double theta = rng.uniform(0.0, pi), phi = rng.uniform(0.0, 2 * pi);
    const auto table = sph_harm_table(40, theta, phi);
    for (int n = 0; n <= 40; ++n)
      for (int mm = -n; mm <= n; ++mm) {
        const auto ref = boost::math::spherical_harmonic<long double>(n, mm, theta, phi);
        const cplx want = sign_pow(mm) * cplx(static_cast<double>(ref.real()), static_cast<double>(ref.imag()));
        legendre = std::max(legendre, std::abs(table[harmonic_index(n, mm)] - want));
      }
  }
  out.require(legendre < 1e-13, "Legendre vs extended precision " + sci(legendre));

  double bessel = 0.0;
  for (const BesselSample& b : kBesselReference) {
    const double scale =
        b.x > b.m ? std::max(std::abs(b.value), std::sqrt(2.0 / (pi * b.x))) : std::abs(b.value);
    bessel = std::max(bessel, std::abs(bessel_j(b.m, b.x) - b.value) / scale);
  }
  out.require(bessel < 1e-13, "Bessel vs 20-digit reference " + sci(bessel));
  return out;
}

// 11. Contour deformation identity and square-root branch.
Outcome cagniard() {
  Outcome out;
  const lab::SuiteSummary s = lab::run_property_suite(lab::ExperimentKind::cagniard);
  for (const auto& c : s.checks) out.require(c.passed, c.name + " " + sci(c.worst) + " over " + std::to_string(c.samples));
  return out;
}

struct Criterion {
  int id;
  const char* name;
  double budget_seconds;
  std::function<Outcome()> run;
};

}  // namespace

int main() {
  const std::vector<Criterion> criteria = {
      {1, "two-layer density and image charge", 10, two_layer},
      {2, "homogeneous media reflect nothing", 5, homogeneous},
      {3, "second-row inequality", 10, lemma},
      {4, "free-space multipole bound and rate", 30, free_me},
      {5, "free-space local bound, m2m and l2l exactness", 30, free_le},
      {6, "free-space m2l bound", 60, free_m2l},
      {7, "reaction multipole bound, three layers", 300, reaction_me},
      {8, "reaction local and m2l bounds", 600, reaction_le_m2l},
      {9, "direct and polarization multipoles agree", 120, equivalence},
      {10, "harmonic identities and reference accuracy", 10, harmonics},
      {11, "contour identity and branch", 30, cagniard},
  };
  int failures = 0;
  for (const auto& c : criteria) {
    const auto start = std::chrono::steady_clock::now();
    Outcome o;
    try {
      o = c.run();
    } catch (const std::exception& e) {
      o.passed = false;
      o.detail = std::string("exception: ") + e.what();
    }
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    const bool in_time = secs < c.budget_seconds;
    const bool ok = o.passed && in_time;
    failures += ok ? 0 : 1;
    std::printf("%s criterion %2d: %s (%.1f s of %.0f s) %s\n", ok ? "PASS" : "FAIL", c.id, c.name, secs,
                c.budget_seconds, o.detail.c_str());
    std::fflush(stdout);
  }
  std::printf("%d of %zu criteria passed\n", static_cast<int>(criteria.size()) - failures, criteria.size());
  return failures == 0 ? 0 : 1;
}
