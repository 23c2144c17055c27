#include "layermp/lab.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>
#include <numbers>
#include <random>
#include <sstream>

#include "json.hpp"
#include "layermp/densities.hpp"
#include "layermp/error.hpp"
#include "layermp/harmonics.hpp"
#include "layermp/sommerfeld.hpp"

namespace layermp::lab {

namespace {

using nlohmann::json;
using std::numbers::pi;

constexpr double kEps = std::numeric_limits<double>::epsilon();
constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

// Highest orders accepted by the sweeps; reaction work pays one quadrature per basis table.
constexpr int kMaxFreeOrder = 40;
constexpr int kMaxReactionOrder = 25;

struct KindName {
  ExperimentKind kind;
  const char* name;
};

constexpr KindName kKindNames[] = {
    {ExperimentKind::me, "me"},
    {ExperimentKind::le, "le"},
    {ExperimentKind::m2m, "m2m"},
    {ExperimentKind::l2l, "l2l"},
    {ExperimentKind::m2l, "m2l"},
    {ExperimentKind::reaction_me, "reaction_me"},
    {ExperimentKind::reaction_le, "reaction_le"},
    {ExperimentKind::reaction_m2l, "reaction_m2l"},
    {ExperimentKind::density_props, "density_props"},
    {ExperimentKind::cagniard, "cagniard"},
    {ExperimentKind::addition_theorems, "addition_theorems"},
};

//! Same draw sequence on every platform: 53 high bits of mt19937_64.
class Uniform {
 public:
  explicit Uniform(std::uint64_t seed) : engine_(seed) {}
  double operator()(double lo, double hi) {
    return lo + (hi - lo) * (static_cast<double>(engine_() >> 11) * 0x1.0p-53);
  }
  int integer(int lo, int hi) { return std::min(hi, lo + static_cast<int>((*this)(0.0, 1.0) * (hi - lo + 1))); }
  double log_uniform(double lo, double hi) { return std::exp((*this)(std::log(lo), std::log(hi))); }

 private:
  std::mt19937_64 engine_;
};

std::string read_file(const std::filesystem::path& file) {
  std::ifstream in(file);
  if (!in) throw ConfigError("cannot open " + file.string());
  std::ostringstream s;
  s << in.rdbuf();
  return s.str();
}

Vec3 vec_from_json(const json& j, const char* what) {
  if (!j.is_array() || j.size() != 3) throw ConfigError(std::string(what) + " must be [x, y, z]");
  return {j[0].get<double>(), j[1].get<double>(), j[2].get<double>()};
}

json vec_to_json(const Vec3& v) { return json::array({v.x, v.y, v.z}); }

LayeredMedium medium_from_json(const json& j) {
  try {
    const auto interfaces = j.at("interfaces").get<std::vector<double>>();
    if (j.contains("permittivity"))
      return LayeredMedium::dielectric(interfaces, j.at("permittivity").get<std::vector<double>>());
    return LayeredMedium(interfaces, j.at("potential_weights").get<std::vector<double>>(),
                         j.at("flux_weights").get<std::vector<double>>());
  } catch (const json::exception& e) {
    throw ConfigError(std::string("medium: ") + e.what());
  }
}

json medium_to_json(const LayeredMedium& m) {
  return {{"interfaces", m.interfaces()},
          {"potential_weights", m.potential_weights()},
          {"flux_weights", m.flux_weights()}};
}

std::string fmt(double v) {
  if (std::isnan(v)) return "nan";
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

double ratio(double bound, double error) {
  if (error == 0.0) return std::numeric_limits<double>::infinity();
  return bound / error;
}

Vec3 unit(const Vec3& v) {
  const double n = norm(v);
  if (n == 0.0) throw ConfigError("direction must be nonzero");
  return (1.0 / n) * v;
}

// ---------------------------------------------------------------------------
// Derived geometry shared by validation and the sweeps.

struct Geometry {
  int source_layer = 0;
  int target_layer = 0;
  Component component;
  Vec3 image_center;   // source center, or its polarization image
  Vec3 target_center;  // target (or child, or parent) center
  Vec3 eval_center;    // center of the target sphere
  double eval_radius = 0.0;
  double inner = 0.0;  // a in the bound
  double outer = 0.0;  // r in the bound
  double separation = 0.0;
};

Geometry derive_geometry(const ExperimentConfig& cfg) {
  Geometry g;
  const double as = cfg.source.radius;
  if (is_reaction(cfg.kind)) {
    const LayeredMedium& m = *cfg.medium;
    g.source_layer = m.layer_of(cfg.source.center.z);
    if (cfg.target_layer) {
      g.target_layer = *cfg.target_layer;
    } else if (cfg.target_center) {
      g.target_layer = m.layer_of(cfg.target_center->z);
    } else {
      throw ConfigError("reaction experiments need a target layer or a target center");
    }
    m.check_layer(g.target_layer);
    g.component = parse_component(cfg.component, g.target_layer, g.source_layer);
    g.image_center = polarization_source(m, g.component, cfg.source.center);
  } else {
    g.image_center = cfg.source.center;
  }

  switch (cfg.kind) {
    case ExperimentKind::me:
    case ExperimentKind::reaction_me:
      g.eval_center = g.image_center;
      g.eval_radius = cfg.eval_radius;
      g.inner = as;
      g.outer = cfg.eval_radius;
      break;
    case ExperimentKind::m2m:
      g.target_center = cfg.source.center + cfg.shift;
      g.eval_center = g.target_center;
      g.eval_radius = cfg.eval_radius;
      g.inner = as + norm(cfg.shift);
      g.outer = cfg.eval_radius;
      break;
    case ExperimentKind::le:
    case ExperimentKind::reaction_le:
    case ExperimentKind::l2l:
      if (!cfg.target_center) throw ConfigError("local experiments need a target center");
      g.target_center = *cfg.target_center;
      g.eval_center = g.target_center;
      if (cfg.kind == ExperimentKind::l2l) g.eval_center = g.target_center + cfg.shift;
      g.eval_radius = cfg.eval_radius;
      g.inner = norm(g.image_center - g.target_center) - as;
      g.outer = cfg.eval_radius + (cfg.kind == ExperimentKind::l2l ? norm(cfg.shift) : 0.0);
      break;
    case ExperimentKind::m2l:
    case ExperimentKind::reaction_m2l:
      g.target_center = cfg.target_center
                            ? *cfg.target_center
                            : g.image_center + (as + cfg.separation * cfg.target_radius) * unit(cfg.direction);
      g.eval_center = g.target_center;
      g.eval_radius = cfg.target_radius;
      g.inner = as;
      g.outer = cfg.target_radius;
      g.separation = (norm(g.target_center - g.image_center) - as) / cfg.target_radius;
      break;
    default:
      throw ConfigError(std::string(to_string(cfg.kind)) + " is a property suite, not a sweep");
  }
  return g;
}

// ---------------------------------------------------------------------------
// Error bounds of the truncated expansions.

double bound_for(const ExperimentConfig& cfg, const Geometry& g, double Q, double M, int p) {
  const double a = g.inner, r = g.outer;
  switch (cfg.kind) {
    case ExperimentKind::me:
    case ExperimentKind::m2m:
      return Q / (4 * pi * (r - a)) * std::pow(a / r, p + 1);
    case ExperimentKind::le:
    case ExperimentKind::l2l:
      return Q / (4 * pi * (a - r)) * std::pow(r / a, p + 1);
    case ExperimentKind::m2l: {
      const double c = g.separation;
      return Q / (4 * pi * (c - 1) * r) * std::pow((a + r) / (a + c * r), p + 1);
    }
    case ExperimentKind::reaction_me:
      return Q * M / (4 * pi * (r - a)) * std::pow(a / r, p + 1);
    case ExperimentKind::reaction_le:
      return Q * M / (4 * pi * (a - r)) * std::pow(r / a, p + 1);
    case ExperimentKind::reaction_m2l: {
      const double c = g.separation;
      return Q * M / (2 * pi * (c - 1) * r) * std::pow((a + r) / (a + c * r), p + 1);
    }
    default:
      return kNaN;
  }
}

double theoretical_rate(const ExperimentConfig& cfg, const Geometry& g) {
  switch (cfg.kind) {
    case ExperimentKind::me:
    case ExperimentKind::m2m:
    case ExperimentKind::reaction_me:
      return std::log(g.outer / g.inner);
    case ExperimentKind::le:
    case ExperimentKind::l2l:
    case ExperimentKind::reaction_le:
      return std::log(g.inner / g.outer);
    case ExperimentKind::m2l:
    case ExperimentKind::reaction_m2l:
      return std::log((g.inner + g.separation * g.outer) / (g.inner + g.outer));
    default:
      return kNaN;
  }
}

// ---------------------------------------------------------------------------
// Per-target errors of every partial sum.

struct Sweep {
  // error[i][t]: order index i, target t
  std::vector<std::vector<double>> error;
  std::vector<double> noise;  // per order
  double oracle_error = 0.0;
  double exactness = kNaN;
};

double coulomb_sum(const ChargeSystem& sys, const Vec3& r, double* magnitude) {
  double v = 0.0, mag = 0.0;
  for (const auto& c : sys.charges) {
    const double t = c.q / (4 * pi * norm(r - c.point.position()));
    v += t;
    mag += std::abs(t);
  }
  if (magnitude) *magnitude = mag;
  return v;
}

double coeff_scale(const HarmonicExpansion& e) {
  double s = 0.0;
  for (const auto& x : e.coeff) s = std::max(s, std::abs(x));
  return s;
}

//! Accumulates partial sums of per-degree terms and records |partial - reference| for each order.
void record_partials(const std::vector<cplx>& terms, double reference, int p_min, int p_max, int target,
                     Sweep& sweep) {
  cplx partial = 0.0;
  double scale = 0.0;
  for (int n = 0; n <= p_max; ++n) {
    partial += terms[n];
    scale += std::abs(terms[n]);
    if (n >= p_min) sweep.error[n - p_min][target] = std::abs(partial.real() - reference);
  }
  finish_evaluation(partial, scale, true);
}

Sweep free_sweep(const ExperimentConfig& cfg, const Geometry& g, const ChargeSystem& sys,
                 const std::vector<Vec3>& targets) {
  const int P = cfg.p_max, p0 = cfg.p_min, rows = P - p0 + 1;
  Sweep s;
  s.error.assign(rows, std::vector<double>(targets.size(), 0.0));
  s.noise.assign(rows, 0.0);
  double worst_scale = 0.0;

  auto per_degree = [&](auto&& terms_at) {
    for (std::size_t t = 0; t < targets.size(); ++t) {
      double mag = 0.0;
      const double ref = coulomb_sum(sys, targets[t], &mag);
      const auto terms = terms_at(targets[t]);
      double scale = mag;
      for (const auto& x : terms) scale += std::abs(x);
      worst_scale = std::max(worst_scale, scale);
      record_partials(terms, ref, p0, P, static_cast<int>(t), s);
    }
  };

  switch (cfg.kind) {
    case ExperimentKind::me: {
      const HarmonicExpansion me = me_from_charges(sys, cfg.source, P);
      per_degree([&](const Vec3& r) { return degree_terms(me, r); });
      break;
    }
    case ExperimentKind::m2m: {
      const HarmonicExpansion child = me_from_charges(sys, cfg.source, P);
      const HarmonicExpansion parent = m2m(child, g.target_center);
      const HarmonicExpansion direct = me_from_charges(sys, {g.target_center, g.inner}, P);
      double diff = 0.0;
      for (std::size_t i = 0; i < direct.coeff.size(); ++i)
        diff = std::max(diff, std::abs(parent.coeff[i] - direct.coeff[i]));
      s.exactness = diff / coeff_scale(direct);
      per_degree([&](const Vec3& r) { return degree_terms(parent, r); });
      break;
    }
    case ExperimentKind::le: {
      const HarmonicExpansion le = le_from_charges(sys, {g.target_center, g.eval_radius}, P);
      per_degree([&](const Vec3& r) { return degree_terms(le, r); });
      break;
    }
    case ExperimentKind::l2l: {
      const HarmonicExpansion parent = le_from_charges(sys, {g.target_center, g.outer}, P);
      const HarmonicExpansion child = l2l(parent, g.eval_center);
      double diff = 0.0, scale = 0.0;
      for (const Vec3& r : targets) {
        const double a = eval_expansion(parent, r).value;
        diff = std::max(diff, std::abs(eval_expansion(child, r).value - a));
        scale = std::max(scale, std::abs(a));
      }
      s.exactness = diff / scale;
      // Shifting a truncated local expansion mixes every retained degree, so each order is shifted on its own.
      for (int p = p0; p <= P; ++p) {
        const HarmonicExpansion moved = l2l(truncated(parent, p), g.eval_center);
        for (std::size_t t = 0; t < targets.size(); ++t) {
          double mag = 0.0;
          const double ref = coulomb_sum(sys, targets[t], &mag);
          const Evaluation e = eval_expansion(moved, targets[t]);
          worst_scale = std::max(worst_scale, e.scale + mag);
          s.error[p - p0][t] = std::abs(e.value - ref);
        }
      }
      break;
    }
    case ExperimentKind::m2l: {
      const HarmonicExpansion me = me_from_charges(sys, cfg.source, P);
      for (int p = p0; p <= P; ++p) {
        const HarmonicExpansion le = m2l_free(truncated(me, p), {g.target_center, g.eval_radius}, p);
        for (std::size_t t = 0; t < targets.size(); ++t) {
          double mag = 0.0;
          const double ref = coulomb_sum(sys, targets[t], &mag);
          const Evaluation e = eval_expansion(le, targets[t]);
          worst_scale = std::max(worst_scale, e.scale + mag);
          s.error[p - p0][t] = std::abs(e.value - ref);
        }
      }
      break;
    }
    default:
      throw ConfigError("not a free-space sweep");
  }
  std::fill(s.noise.begin(), s.noise.end(), 64 * kEps * worst_scale);
  return s;
}

Sweep reaction_sweep(const ExperimentConfig& cfg, const Geometry& g, const ChargeSystem& sys,
                     const std::vector<Vec3>& targets, double M) {
  const LayeredMedium& medium = *cfg.medium;
  const int P = cfg.p_max, p0 = cfg.p_min, rows = P - p0 + 1;
  const ReactionOptions options{cfg.tol, M};
  Sweep s;
  s.error.assign(rows, std::vector<double>(targets.size(), 0.0));
  s.noise.assign(rows, 100 * cfg.tol);

  std::vector<double> reference(targets.size(), 0.0);
  for (std::size_t t = 0; t < targets.size(); ++t) {
    const LayerPoint r(medium, targets[t], g.target_layer);
    double err = 0.0;
    for (const auto& q : sys.charges) {
      const GreenValue v = eval_reaction_green(medium, g.component, r, q.point, cfg.tol, M);
      reference[t] += q.q * v.value;
      err += std::abs(q.q) * v.error_estimate;
    }
    s.oracle_error = std::max(s.oracle_error, err);
  }

  switch (cfg.kind) {
    case ExperimentKind::reaction_me: {
      const HarmonicExpansion me =
          reaction_me_from_charges(sys, medium, g.component, {g.image_center, cfg.source.radius}, P);
      for (std::size_t t = 0; t < targets.size(); ++t) {
        const auto terms =
            reaction_degree_terms(me, medium, LayerPoint(medium, targets[t], g.target_layer), options);
        record_partials(terms, reference[t], p0, P, static_cast<int>(t), s);
      }
      break;
    }
    case ExperimentKind::reaction_le: {
      const HarmonicExpansion le =
          reaction_le_from_charges(sys, medium, g.component, {g.target_center, g.eval_radius}, P, options);
      for (std::size_t t = 0; t < targets.size(); ++t)
        record_partials(degree_terms(le, targets[t]), reference[t], p0, P, static_cast<int>(t), s);
      break;
    }
    case ExperimentKind::reaction_m2l: {
      const HarmonicExpansion me =
          reaction_me_from_charges(sys, medium, g.component, {g.image_center, cfg.source.radius}, P);
      const Box target{g.target_center, g.eval_radius};
      // Validates the geometry once; lower orders reuse the leading block of the full matrix.
      m2l_reaction(truncated(me, 0), medium, target, 0, options);
      const auto matrix = reaction_m2l_matrix(medium, g.component, P, g.target_center, g.image_center, cfg.tol, M);
      for (int p = p0; p <= P; ++p) {
        const HarmonicExpansion le = apply_reaction_m2l(matrix, P, truncated(me, p), target, p);
        for (std::size_t t = 0; t < targets.size(); ++t)
          s.error[p - p0][t] = std::abs(eval_expansion(le, targets[t]).value - reference[t]);
      }
      break;
    }
    default:
      throw ConfigError("not a reaction sweep");
  }
  return s;
}

// ---------------------------------------------------------------------------
// Property suites.

SuiteCheck make_check(std::string name, long samples, double worst, double threshold) {
  return {std::move(name), samples, worst, threshold, worst <= threshold};
}

LayeredMedium random_medium(Uniform& u, int max_interfaces, bool homogeneous) {
  const int L = u.integer(1, max_interfaces);
  std::vector<double> d(L), a(L + 1), b(L + 1);
  double z = u(-1.0, 1.0);
  for (int i = 0; i < L; ++i) {
    d[i] = z;
    z -= u(0.3, 2.0);
  }
  const double a0 = u.log_uniform(0.1, 10.0), b0 = u.log_uniform(0.1, 10.0);
  for (int i = 0; i <= L; ++i) {
    a[i] = homogeneous ? a0 : u.log_uniform(0.1, 10.0);
    b[i] = homogeneous ? b0 : u.log_uniform(0.1, 10.0);
  }
  return LayeredMedium(d, a, b);
}

// Spectral argument in the closed right half plane, both axes included.
cplx random_spectral_argument(Uniform& u) {
  const double mag = u.log_uniform(1e-3, 1e2);
  const int which = u.integer(0, 9);
  if (which == 0) return {mag, 0.0};
  if (which == 1) return {0.0, u(0.0, 1.0) < 0.5 ? mag : -mag};
  return std::polar(mag, u(-pi / 2, pi / 2));
}

double height_in(Uniform& u, const LayeredMedium& m, int layer) {
  const int L = m.num_interfaces();
  const double top = layer == 0 ? m.interface(0) + 3.0 : m.interface(layer - 1);
  const double bottom = layer == L ? m.interface(L - 1) - 3.0 : m.interface(layer);
  const double pad = 0.05 * (top - bottom);
  return u(bottom + pad, top - pad);
}

std::vector<SuiteCheck> density_suite() {
  std::vector<SuiteCheck> out;
  {
    Uniform u(101);
    double worst = 0.0;
    const long samples = 10000;
    for (long i = 0; i < samples; ++i) {
      const LayeredMedium m = random_medium(u, 5, false);
      const cplx k = random_spectral_argument(u);
      try {
        worst = std::max(worst, -second_row_margin(interface_matrices(m, k)));
      } catch (const LemmaViolation&) {
        worst = std::numeric_limits<double>::infinity();
      }
    }
    out.push_back(make_check("lemma_second_row", samples, std::max(0.0, worst), 1e-10));
  }
  {
    double worst = 0.0;
    long samples = 0;
    for (double eps : {2.0, 10.0, 80.0}) {
      const LayeredMedium m = LayeredMedium::dielectric({0.0}, {1.0, eps});
      const Component c{Side::lower, Side::lower, 0, 0};
      const cplx at_zero = reaction_density(m, c, 0.0);
      for (int i = 0; i <= 1000; ++i, ++samples)
        worst = std::max(worst, std::abs(reaction_density(m, c, 0.1 * i) - at_zero));
    }
    out.push_back(make_check("two_layer_constant_density", samples, worst, 1e-12));
  }
  {
    Uniform u(102);
    double worst = 0.0;
    long samples = 0;
    for (double eps : {2.0, 10.0, 80.0}) {
      const LayeredMedium m = LayeredMedium::dielectric({0.0}, {1.0, eps});
      const Component c{Side::lower, Side::lower, 0, 0};
      const double kappa = (1.0 - eps) / (1.0 + eps);
      for (int i = 0; i < 50; ++i, ++samples) {
        const Vec3 r{u(-2, 2), u(-2, 2), u(0.05, 2.0)};
        const Vec3 rp{u(-2, 2), u(-2, 2), u(0.05, 2.0)};
        const double want = kappa / (4 * pi * norm(r - Vec3{rp.x, rp.y, -rp.z}));
        const double got = eval_reaction_green(m, c, LayerPoint(m, r), LayerPoint(m, rp), 1e-13).value;
        worst = std::max(worst, std::abs(got - want) / std::abs(want));
      }
    }
    out.push_back(make_check("two_layer_image_charge", samples, worst, 1e-10));
  }
  {
    // Without contrast only the free field remains; it is carried by the
    // through-transmission component when source and target layers differ.
    Uniform u(103);
    double worst_density = 0.0, worst_field = 0.0;
    long densities = 0, fields = 0;
    for (int trial = 0; trial < 200; ++trial) {
      const LayeredMedium m = random_medium(u, 4, true);
      const int L = m.num_interfaces();
      const int tl = u.integer(0, L), sl = u.integer(0, L);
      const cplx k = random_spectral_argument(u);
      const ReactionDensitySet set = reaction_densities(m, tl, sl, k);
      for (const Component& c : all_components(tl, sl)) {
        if (!component_exists(m, c)) continue;
        ++densities;
        worst_density = std::max(worst_density, std::abs(set.value(c) - matched_density(m, c, k)));
      }
      if (trial % 10 == 0) {
        const LayerPoint r(m, {u(-1, 1), u(-1, 1), height_in(u, m, tl)});
        const LayerPoint rp(m, {u(-1, 1), u(-1, 1), height_in(u, m, sl)});
        double total = 0.0;
        for (const Component& c : all_components(tl, sl))
          if (component_exists(m, c)) total += eval_reaction_green(m, c, r, rp, 1e-12).value;
        const double free_field = tl == sl ? 0.0 : 1.0 / (4 * pi * norm(r.position() - rp.position()));
        worst_field = std::max(worst_field, std::abs(total - free_field));
        ++fields;
      }
    }
    out.push_back(make_check("homogeneous_reflection_vanishes", densities, worst_density, 1e-13));
    out.push_back(make_check("homogeneous_field_is_free", fields, worst_field, 1e-11));
  }
  return out;
}

std::vector<SuiteCheck> cagniard_suite() {
  std::vector<SuiteCheck> out;
  double worst = 0.0;
  long samples = 0;
  for (CagniardFunction f :
       {CagniardFunction::one, CagniardFunction::linear, CagniardFunction::quadratic, CagniardFunction::exponential})
    for (double rho : {0.0, 0.7, 2.0})
      for (double z : {0.5, 1.0, 2.5})
        for (double eta : {0.3, 1.0, 2.0}) {
          const CagniardResult r = cagniard_identity_check(f, rho, z, eta, 1e-10);
          worst = std::max(worst, std::abs(r.lhs - r.rhs));
          ++samples;
        }
  out.push_back(make_check("cagniard_identity", samples, worst, 1e-8));

  Uniform u(104);
  double negative = 0.0, residual = 0.0;
  const long n = 10000;
  for (long i = 0; i < n; ++i) {
    const cplx z(u(-100, 100), u(-100, 100));
    const cplx s = branch_sqrt(z);
    negative = std::max(negative, -s.real());
    residual = std::max(residual, std::abs(s * s - z) / std::abs(z));
  }
  out.push_back(make_check("branch_nonnegative_real_part", n, std::max(0.0, negative), 0.0));
  out.push_back(make_check("branch_square_residual", n, residual, 1e-13));
  return out;
}

Vec3 random_direction(Uniform& u, double radius) {
  const double z = u(-1.0, 1.0), phi = u(0.0, 2 * pi), s = std::sqrt(1.0 - z * z);
  return radius * Vec3{s * std::cos(phi), s * std::sin(phi), z};
}

// All harmonics up to nmax at one direction.
struct HarmonicTable {
  std::vector<cplx> y;
  HarmonicTable(int nmax, const SphericalCoord& s) : y(sph_harm_table(nmax, s.theta, s.phi)) {}
  cplx operator()(int n, int m) const { return y[harmonic_index(n, m)]; }
};

std::vector<SuiteCheck> addition_suite() {
  const HarmonicConstants& k = constants(40);
  std::vector<SuiteCheck> out;
  {
    Uniform u(105);
    double worst = 0.0;
    const int trials = 200;
    for (int t = 0; t < trials; ++t) {
      const SphericalCoord p = to_spherical(random_direction(u, 1.0));
      const SphericalCoord q = to_spherical(random_direction(u, 1.0));
      const HarmonicTable yp(12, p), yq(12, q);
      const double cos_gamma = std::clamp(dot(to_cartesian(p), to_cartesian(q)), -1.0, 1.0);
      for (int n = 0; n <= 12; ++n) {
        cplx sum = 0.0;
        for (int m = -n; m <= n; ++m) sum += std::conj(yq(n, m)) * yp(n, m);
        worst = std::max(worst, std::abs(4 * pi / (2 * n + 1) * sum - legendre_p(n, cos_gamma)));
      }
    }
    out.push_back(make_check("legendre_addition", trials, worst, 1e-12));
  }
  const int trunc = 24;
  {
    // Outer harmonic about a shifted origin, |shift| / |point| = 0.2.
    Uniform u(106);
    double worst = 0.0;
    const int trials = 30;
    for (int t = 0; t < trials; ++t) {
      const Vec3 Q = random_direction(u, 0.2), P = random_direction(u, 1.0);
      const SphericalCoord sq = to_spherical(Q), sp = to_spherical(P), sd = to_spherical(P - Q);
      const HarmonicTable yq(trunc + 8, sq), yp(trunc + 8, sp), yd(8, sd);
      for (int np = 0; np <= 4; ++np)
        for (int mp = -np; mp <= np; ++mp) {
          const cplx lhs = yd(np, mp) / std::pow(sd.r, np + 1);
          cplx rhs = 0.0;
          for (int n = 0; n <= trunc; ++n)
            for (int m = -n; m <= n; ++m)
              rhs += sign_pow(std::abs(m + mp) - std::abs(mp)) * k.A(n, m) * k.A(np, mp) * std::pow(sq.r, n) *
                     yq(n, -m) / (k.c(n) * k.c(n) * k.A(n + np, m + mp)) *
                     yp(n + np, m + mp) / std::pow(sp.r, n + np + 1);
          worst = std::max(worst, std::abs(lhs - rhs) * std::pow(sd.r, np + 1));
        }
    }
    out.push_back(make_check("outer_to_outer", trials, worst, 1e-12));
  }
  {
    Uniform u(107);
    double worst = 0.0;
    const int trials = 30;
    for (int t = 0; t < trials; ++t) {
      const Vec3 Q = random_direction(u, 1.0), P = random_direction(u, 0.2);
      const SphericalCoord sq = to_spherical(Q), sp = to_spherical(P), sd = to_spherical(P - Q);
      const HarmonicTable yq(trunc + 8, sq), yp(trunc + 8, sp), yd(8, sd);
      for (int np = 0; np <= 4; ++np)
        for (int mp = -np; mp <= np; ++mp) {
          const cplx lhs = yd(np, mp) / std::pow(sd.r, np + 1);
          cplx rhs = 0.0;
          for (int n = 0; n <= trunc; ++n)
            for (int m = -n; m <= n; ++m) {
              if (std::abs(mp - m) > n + np) continue;
              rhs += sign_pow(np + std::abs(m)) * k.A(n, m) * k.A(np, mp) * yq(n + np, mp - m) /
                     (k.c(n) * k.c(n) * k.A(n + np, mp - m) * std::pow(sq.r, n + np + 1)) * std::pow(sp.r, n) *
                     yp(n, m);
            }
          worst = std::max(worst, std::abs(lhs - rhs) * std::pow(sd.r, np + 1));
        }
    }
    out.push_back(make_check("outer_to_inner", trials, worst, 1e-12));
  }
  {
    Uniform u(108);
    double worst = 0.0;
    const int trials = 50;
    for (int t = 0; t < trials; ++t) {
      const Vec3 Q = random_direction(u, u(0.1, 1.5)), P = random_direction(u, u(0.1, 1.5));
      const SphericalCoord sq = to_spherical(Q), sp = to_spherical(P), sd = to_spherical(P - Q);
      const HarmonicTable yq(trunc + 8, sq), yp(trunc + 8, sp), yd(8, sd);
      for (int np = 0; np <= 8; ++np)
        for (int mp = -np; mp <= np; ++mp) {
          const cplx lhs = std::pow(sd.r, np) * yd(np, mp);
          cplx rhs = 0.0;
          for (int n = 0; n <= np; ++n)
            for (int m = -n; m <= n; ++m) {
              if (std::abs(mp - m) > np - n) continue;
              const int e = n - std::abs(m) + std::abs(mp) - std::abs(mp - m);
              rhs += sign_pow(e) * k.c(np) * k.c(np) * k.A(n, m) * k.A(np - n, mp - m) * std::pow(sq.r, n) *
                     yq(n, m) / (k.c(n) * k.c(n) * k.c(np - n) * k.c(np - n) * k.A(np, mp)) *
                     std::pow(sp.r, np - n) * yp(np - n, mp - m);
            }
          worst = std::max(worst, std::abs(lhs - rhs) / std::pow(norm(Q) + norm(P), np));
        }
    }
    out.push_back(make_check("inner_to_inner", trials, worst, 1e-12));
  }
  {
    // Power of a complex plane-wave phase expanded in harmonics.
    Uniform u(109);
    double worst = 0.0;
    const int trials = 200;
    for (int t = 0; t < trials; ++t) {
      const double alpha = u(0.0, 2 * pi);
      const SphericalCoord s = to_spherical(random_direction(u, 1.0));
      const Vec3 dir = to_cartesian({1.0, s.theta, s.phi});
      const cplx phase = std::cos(alpha) * dir.x + std::sin(alpha) * dir.y + cplx(0, 1) * dir.z;
      const auto leg = normalized_legendre_table(15, std::cos(s.theta));
      cplx power = 1.0;
      double fact = 1.0;
      for (int n = 0; n <= 15; ++n) {
        if (n > 0) {
          power *= cplx(0, 1) * phase;
          fact *= n;
        }
        cplx sum = 0.0;
        for (int m = -n; m <= n; ++m) {
          const double lp = (m < 0 ? sign_pow(m) : 1.0) * leg[harmonic_index(n, std::abs(m))];
          sum += k.C(n, m) * lp * std::polar(1.0, m * (alpha - s.phi));
        }
        worst = std::max(worst, std::abs(power / fact - sum));
      }
    }
    out.push_back(make_check("plane_wave_power", trials, worst, 1e-12));
  }
  return out;
}

}  // namespace

// ---------------------------------------------------------------------------

const char* to_string(ExperimentKind kind) {
  for (const auto& k : kKindNames)
    if (k.kind == kind) return k.name;
  return "unknown";
}

ExperimentKind parse_kind(const std::string& name) {
  for (const auto& k : kKindNames)
    if (name == k.name) return k.kind;
  throw ConfigError("unknown experiment kind '" + name + "'");
}

bool is_property_suite(ExperimentKind kind) {
  return kind == ExperimentKind::density_props || kind == ExperimentKind::cagniard ||
         kind == ExperimentKind::addition_theorems;
}

bool is_reaction(ExperimentKind kind) {
  return kind == ExperimentKind::reaction_me || kind == ExperimentKind::reaction_le ||
         kind == ExperimentKind::reaction_m2l;
}

void ExperimentConfig::validate() const {
  if (is_property_suite(kind)) return;
  if (p_min < 0 || p_max < p_min) throw ConfigError("p range must satisfy 0 <= min <= max");
  const int limit = is_reaction(kind) ? kMaxReactionOrder : kMaxFreeOrder;
  if (p_max > limit) throw ConfigError("p max exceeds " + std::to_string(limit) + " for this kind");
  if ((kind == ExperimentKind::m2l || kind == ExperimentKind::reaction_m2l) && 2 * p_max > HarmonicConstants::max_order)
    throw ConfigError("translations need p max <= " + std::to_string(HarmonicConstants::max_order / 2));
  if (!(source.radius > 0) || !(target_radius > 0) || !(eval_radius > 0)) throw ConfigError("radii must be positive");
  if (charges < 0) throw ConfigError("charge count must be nonnegative");
  if (targets < 1) throw ConfigError("need at least one target");
  if (!(tol > 0)) throw ConfigError("tolerance must be positive");
  if (is_reaction(kind) && !medium) throw ConfigError("reaction experiments need a medium");

  const Geometry g = derive_geometry(*this);
  switch (kind) {
    case ExperimentKind::me:
    case ExperimentKind::m2m:
    case ExperimentKind::reaction_me:
      if (!(g.outer > g.inner)) throw ConfigError("targets must lie outside the source ball");
      break;
    case ExperimentKind::le:
    case ExperimentKind::l2l:
    case ExperimentKind::reaction_le:
      if (!(g.inner > g.outer)) throw ConfigError("sources must lie outside the target ball");
      break;
    case ExperimentKind::m2l:
    case ExperimentKind::reaction_m2l:
      if (!(g.separation > 1.0)) throw ConfigError("translation needs separation ratio c > 1");
      break;
    default:
      break;
  }
  if (is_reaction(kind)) {
    if (component_exists(*medium, g.component) && !image_center_admissible(*medium, g.component, g.image_center))
      throw ConfigError("polarization image lies on the wrong side of the target layer");
    const bool local = kind == ExperimentKind::reaction_le || kind == ExperimentKind::reaction_m2l;
    if (local && !medium->contains(g.target_layer, g.target_center.z))
      throw ConfigError("target center is not inside the target layer");
  }
}


ExperimentConfig parse_config(const std::string& json_text, const std::filesystem::path& base_dir) {
  static const char* const known[] = {"kind",      "medium",     "component", "target_layer", "source",
                                      "target",    "eval_radius", "shift",    "direction",    "separation",
                                      "p",         "charges",    "seed",      "tol",          "targets"};
  ExperimentConfig cfg;
  try {
    const json j = json::parse(json_text);
    if (!j.is_object()) throw ConfigError("config must be a JSON object");
    for (const auto& [key, value] : j.items())
      if (std::find(std::begin(known), std::end(known), key) == std::end(known))
        throw ConfigError("unknown config key '" + key + "'");
    cfg.kind = parse_kind(j.at("kind").get<std::string>());
    if (j.contains("medium")) {
      const json& m = j["medium"];
      if (m.is_string()) {
        std::filesystem::path file = m.get<std::string>();
        if (file.is_relative() && !base_dir.empty()) file = base_dir / file;
        cfg.medium = load_medium(file);
        cfg.medium_source = m.get<std::string>();
      } else {
        cfg.medium = medium_from_json(m);
        cfg.medium_source = "inline";
      }
    }
    if (j.contains("component")) cfg.component = j["component"].get<std::string>();
    if (j.contains("target_layer")) cfg.target_layer = j["target_layer"].get<int>();
    if (j.contains("source")) {
      cfg.source.center = vec_from_json(j["source"].at("center"), "source.center");
      cfg.source.radius = j["source"].value("radius", cfg.source.radius);
    }
    if (j.contains("target")) {
      if (j["target"].contains("center")) cfg.target_center = vec_from_json(j["target"]["center"], "target.center");
      cfg.target_radius = j["target"].value("radius", cfg.target_radius);
    }
    cfg.eval_radius = j.value("eval_radius", cfg.eval_radius);
    if (j.contains("shift")) cfg.shift = vec_from_json(j["shift"], "shift");
    if (j.contains("direction")) cfg.direction = vec_from_json(j["direction"], "direction");
    cfg.separation = j.value("separation", cfg.separation);
    if (j.contains("p")) {
      const json& p = j["p"];
      if (p.is_array() && p.size() == 2) {
        cfg.p_min = p[0].get<int>();
        cfg.p_max = p[1].get<int>();
      } else if (p.is_number_integer()) {
        cfg.p_min = cfg.p_max = p.get<int>();
      } else {
        throw ConfigError("p must be [min, max] or an integer");
      }
    }
    cfg.charges = j.value("charges", cfg.charges);
    cfg.seed = j.value("seed", cfg.seed);
    cfg.tol = j.value("tol", cfg.tol);
    cfg.targets = j.value("targets", cfg.targets);
  } catch (const json::exception& e) {
    throw ConfigError(std::string("config: ") + e.what());
  } catch (const InvalidMedium& e) {
    throw ConfigError(std::string("config medium: ") + e.what());
  }
  cfg.validate();
  return cfg;
}

ExperimentConfig load_config(const std::filesystem::path& file) {
  return parse_config(read_file(file), file.parent_path());
}

LayeredMedium parse_medium(const std::string& json_text) {
  try {
    return medium_from_json(json::parse(json_text));
  } catch (const json::exception& e) {
    throw ConfigError(std::string("medium: ") + e.what());
  }
}

LayeredMedium load_medium(const std::filesystem::path& file) { return parse_medium(read_file(file)); }

ChargeSystem generate_charges(std::uint64_t seed, int count, const Box& box) {
  static const LayeredMedium free_space({}, {1.0}, {1.0});
  return generate_charges(seed, count, box, free_space);
}

ChargeSystem generate_charges(std::uint64_t seed, int count, const Box& box, const LayeredMedium& medium) {
  if (count < 0) throw ConfigError("charge count must be nonnegative");
  const int layer = medium.layer_of(box.center.z);
  const double top = box.center.z + box.radius, bottom = box.center.z - box.radius;
  if (!medium.contains(layer, top) || !medium.contains(layer, bottom))
    throw BoxCrossesInterface("charge ball meets an interface");
  Uniform u(seed);
  ChargeSystem sys;
  sys.box = box;
  sys.charges.reserve(count);
  for (int i = 0; i < count; ++i) {
    Vec3 offset;
    do {
      offset = {u(-1, 1), u(-1, 1), u(-1, 1)};
    } while (dot(offset, offset) > 1.0);
    const double q = u(-1, 1);
    sys.charges.push_back({q, LayerPoint(medium, box.center + box.radius * offset, layer)});
  }
  return sys;
}

std::vector<Vec3> fibonacci_sphere(const Vec3& center, double radius, int count) {
  const double golden = pi * (3.0 - std::sqrt(5.0));
  std::vector<Vec3> out;
  out.reserve(count);
  for (int i = 0; i < count; ++i) {
    const double z = 1.0 - (2.0 * i + 1.0) / count;
    const double s = std::sqrt(1.0 - z * z);
    out.push_back(center + radius * Vec3{s * std::cos(golden * i), s * std::sin(golden * i), z});
  }
  return out;
}

double fit_decay_rate(const std::vector<int>& p, const std::vector<double>& error) {
  const std::size_t n = p.size();
  if (n < 2 || error.size() != n) return kNaN;
  double mx = 0.0, my = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    mx += p[i];
    my += std::log(error[i]);
  }
  mx /= n;
  my /= n;
  double sxy = 0.0, sxx = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    sxy += (p[i] - mx) * (std::log(error[i]) - my);
    sxx += (p[i] - mx) * (p[i] - mx);
  }
  return -sxy / sxx;
}

bool ConvergenceReport::passed() const {
  return std::all_of(rows.begin(), rows.end(), [](const ReportRow& r) { return r.passed; });
}

ConvergenceReport run_experiment(const ExperimentConfig& config) {
  config.validate();
  const Geometry g = derive_geometry(config);
  ConvergenceReport report;
  report.config = config;
  report.inner_radius = g.inner;
  report.outer_radius = g.outer;
  report.separation = g.separation;
  report.rate_theory = theoretical_rate(config, g);
  report.exactness_residual = kNaN;

  const ChargeSystem sys = is_reaction(config.kind)
                               ? generate_charges(config.seed, config.charges, config.source, *config.medium)
                               : generate_charges(config.seed, config.charges, config.source);
  report.total_charge = sys.total_abs_charge();

  std::vector<Vec3> targets = fibonacci_sphere(g.eval_center, g.eval_radius, config.targets);
  if (is_reaction(config.kind)) {
    const LayeredMedium& m = *config.medium;
    std::erase_if(targets, [&](const Vec3& r) { return !m.contains(g.target_layer, r.z); });
    if (targets.empty()) throw ConfigError("no target on the sphere lies inside the target layer");
  }
  report.targets_used = static_cast<int>(targets.size());

  double M = 0.0;
  Sweep sweep;
  if (is_reaction(config.kind)) {
    const LayeredMedium& m = *config.medium;
    if (!component_exists(m, g.component)) {
      report.degenerate = true;
      report.note = "degenerate: zero field (component absent)";
      const int rows = config.p_max - config.p_min + 1;
      sweep.error.assign(rows, std::vector<double>(targets.size(), 0.0));
      sweep.noise.assign(rows, config.tol);
    } else {
      const DensityBound db = density_bound(m, g.component);
      report.degenerate = db.sampled_sup < 1e-13;
      M = report.degenerate ? 0.0 : db.value;
      if (report.degenerate) report.note = "degenerate: zero field";
      sweep = reaction_sweep(config, g, sys, targets, std::max(M, 1.0));
      if (report.degenerate) std::fill(sweep.noise.begin(), sweep.noise.end(), config.tol);
    }
  } else {
    sweep = free_sweep(config, g, sys, targets);
  }
  report.density_bound = M;
  report.oracle_error = sweep.oracle_error;
  report.exactness_residual = sweep.exactness;

  std::vector<int> fit_p;
  std::vector<double> fit_err;
  for (int p = config.p_min; p <= config.p_max; ++p) {
    const auto& errs = sweep.error[p - config.p_min];
    ReportRow row;
    row.p = p;
    row.max_error = errs.empty() ? 0.0 : *std::max_element(errs.begin(), errs.end());
    row.bound = report.degenerate ? 0.0 : bound_for(config, g, report.total_charge, M, p);
    row.floor = sweep.noise[p - config.p_min];
    row.passed = row.max_error <= row.bound + row.floor;
    report.rows.push_back(row);
    if (row.max_error > 100 * config.tol) {
      fit_p.push_back(p);
      fit_err.push_back(row.max_error);
    }
  }
  // Fit on the largest-p half of the rows above the noise level.
  const std::size_t keep = (fit_p.size() + 1) / 2;
  fit_p.erase(fit_p.begin(), fit_p.end() - keep);
  fit_err.erase(fit_err.begin(), fit_err.end() - keep);
  report.rate_rows = static_cast<int>(fit_p.size());
  report.rate_fit = fit_decay_rate(fit_p, fit_err);
  return report;
}

std::string report_csv(const ConvergenceReport& report) {
  std::string out = "# schema=1\np,max_error,bound,ratio,rate_fit,rate_theory\n";
  for (const auto& r : report.rows)
    out += std::to_string(r.p) + "," + fmt(r.max_error) + "," + fmt(r.bound) + "," + fmt(ratio(r.bound, r.max_error)) +
           "," + fmt(report.rate_fit) + "," + fmt(report.rate_theory) + "\n";
  return out;
}

namespace {

json number(double v) {
  if (std::isfinite(v)) return v;
  return fmt(v);
}

json config_json(const ExperimentConfig& c) {
  json j = {{"kind", to_string(c.kind)},
            {"source", {{"center", vec_to_json(c.source.center)}, {"radius", c.source.radius}}},
            {"eval_radius", c.eval_radius},
            {"p", json::array({c.p_min, c.p_max})},
            {"charges", c.charges},
            {"seed", c.seed},
            {"tol", c.tol},
            {"targets", c.targets}};
  json target = {{"radius", c.target_radius}};
  if (c.target_center) target["center"] = vec_to_json(*c.target_center);
  j["target"] = target;
  if (c.kind == ExperimentKind::m2m || c.kind == ExperimentKind::l2l) j["shift"] = vec_to_json(c.shift);
  if (c.kind == ExperimentKind::m2l || c.kind == ExperimentKind::reaction_m2l) {
    j["separation"] = c.separation;
    j["direction"] = vec_to_json(c.direction);
  }
  if (is_reaction(c.kind)) {
    j["component"] = c.component;
    if (c.target_layer) j["target_layer"] = *c.target_layer;
  }
  if (c.medium) {
    j["medium"] = medium_to_json(*c.medium);
    j["medium_source"] = c.medium_source;
  }
  return j;
}

}  // namespace

std::string report_json(const ConvergenceReport& report) {
  json rows = json::array();
  for (const auto& r : report.rows)
    rows.push_back({{"p", r.p},
                    {"max_error", number(r.max_error)},
                    {"bound", number(r.bound)},
                    {"floor", number(r.floor)},
                    {"ratio", number(ratio(r.bound, r.max_error))},
                    {"passed", r.passed}});
  const json j = {{"schema", 1},
                  {"config", config_json(report.config)},
                  {"rows", rows},
                  {"rate_fit", number(report.rate_fit)},
                  {"rate_rows", report.rate_rows},
                  {"rate_theory", number(report.rate_theory)},
                  {"total_charge", report.total_charge},
                  {"density_bound", report.density_bound},
                  {"targets_used", report.targets_used},
                  {"inner_radius", report.inner_radius},
                  {"outer_radius", report.outer_radius},
                  {"separation", report.separation},
                  {"exactness_residual", number(report.exactness_residual)},
                  {"oracle_error", report.oracle_error},
                  {"degenerate", report.degenerate},
                  {"note", report.note},
                  {"passed", report.passed()}};
  return j.dump(2) + "\n";
}

bool SuiteSummary::passed() const {
  return std::all_of(checks.begin(), checks.end(), [](const SuiteCheck& c) { return c.passed; });
}

SuiteSummary run_property_suite(std::optional<ExperimentKind> kind) {
  if (kind && !is_property_suite(*kind)) throw ConfigError(std::string(to_string(*kind)) + " is not a property suite");
  SuiteSummary out;
  auto add = [&](std::vector<SuiteCheck> checks) {
    out.checks.insert(out.checks.end(), checks.begin(), checks.end());
  };
  if (!kind || *kind == ExperimentKind::density_props) add(density_suite());
  if (!kind || *kind == ExperimentKind::cagniard) add(cagniard_suite());
  if (!kind || *kind == ExperimentKind::addition_theorems) add(addition_suite());
  return out;
}

std::string suite_csv(const SuiteSummary& summary) {
  std::string out = "# schema=1\ncheck,samples,worst,threshold,passed\n";
  for (const auto& c : summary.checks)
    out += c.name + "," + std::to_string(c.samples) + "," + fmt(c.worst) + "," + fmt(c.threshold) + "," +
           (c.passed ? "1" : "0") + "\n";
  return out;
}

std::string suite_json(const SuiteSummary& summary) {
  json checks = json::array();
  for (const auto& c : summary.checks)
    checks.push_back({{"name", c.name},
                      {"samples", c.samples},
                      {"worst", number(c.worst)},
                      {"threshold", c.threshold},
                      {"passed", c.passed}});
  return json({{"schema", 1}, {"checks", checks}, {"passed", summary.passed()}}).dump(2) + "\n";
}

}  // namespace layermp::lab
