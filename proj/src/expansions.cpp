#include "layermp/expansions.hpp"

#include <cmath>
#include <numbers>

#include "layermp/error.hpp"

namespace layermp {

namespace {

constexpr double kFourPi = 4.0 * std::numbers::pi;

// Relative slack when testing membership of a ball boundary.
constexpr double kRadiusSlack = 1e-12;

cplx harmonic_or_zero(const std::vector<cplx>& table, int n, int m) {
  if (n < 0 || std::abs(m) > n) return 0.0;
  return table[harmonic_index(n, m)];
}

void check_order(int p) {
  if (p < 0) throw DomainError("expansion order must be nonnegative");
  if (p > HarmonicConstants::max_order)
    throw Overflow("expansion order limited to " + std::to_string(HarmonicConstants::max_order));
}

void accumulate_multipole(HarmonicExpansion& exp, double q, const Vec3& offset) {
  const auto& k = constants(exp.p);
  const SphericalCoord s = to_spherical(offset);
  const auto Y = sph_harm_table(exp.p, s.theta, s.phi);
  double rn = 1.0;
  for (int n = 0; n <= exp.p; ++n) {
    const double w = q * rn / (kFourPi * k.c(n) * k.c(n));
    for (int m = -n; m <= n; ++m) exp.at(n, m) += w * std::conj(Y[harmonic_index(n, m)]);
    rn *= s.r;
  }
}

}  // namespace

double ChargeSystem::total_abs_charge() const {
  double sum = 0.0;
  for (const auto& c : charges) sum += std::abs(c.q);
  return sum;
}

ChargeSystem ChargeSystem::merged(const ChargeSystem& other) const {
  ChargeSystem out;
  out.charges = charges;
  out.charges.insert(out.charges.end(), other.charges.begin(), other.charges.end());
  return out;
}

HarmonicExpansion::HarmonicExpansion(ExpansionKind kind_, const Vec3& center_, int p_, double radius_)
    : kind(kind_), center(center_), p(p_), radius(radius_), coeff(harmonic_count(p_), 0.0) {}

HarmonicExpansion truncated(const HarmonicExpansion& exp, int p) {
  if (p > exp.p) throw DomainError("cannot truncate to a higher order");
  HarmonicExpansion out = exp;
  out.p = p;
  out.coeff.resize(harmonic_count(p));
  return out;
}

Evaluation finish_evaluation(cplx sum, double scale, bool in_region) {
  const double re = sum.real(), im = sum.imag();
  if (std::abs(im) > 1e-10 * std::abs(re) && std::abs(im) > 1e-12 * scale)
    throw ImaginaryResidue("imaginary part " + std::to_string(im) + " of real potential " +
                           std::to_string(re));
  return {re, im, scale, in_region};
}

HarmonicExpansion me_from_charges(const ChargeSystem& system, const Box& source, int p) {
  check_order(p);
  HarmonicExpansion exp(ExpansionKind::multipole, source.center, p, source.radius);
  for (const auto& c : system.charges) {
    const Vec3 offset = c.point.position() - source.center;
    if (norm(offset) > source.radius * (1.0 + kRadiusSlack))
      throw ChargeOutsideBox("charge lies outside the source ball");
    accumulate_multipole(exp, c.q, offset);
  }
  return exp;
}

HarmonicExpansion le_from_charges(const ChargeSystem& system, const Box& target, int p) {
  check_order(p);
  const auto& k = constants(p);
  HarmonicExpansion exp(ExpansionKind::local, target.center, p, target.radius);
  for (const auto& c : system.charges) {
    const SphericalCoord s = to_spherical(c.point.position() - target.center);
    if (!(s.r > target.radius)) throw ChargeInsideBox("charge lies inside the target ball");
    const auto Y = sph_harm_table(p, s.theta, s.phi);
    double inv = 1.0 / s.r;
    for (int n = 0; n <= p; ++n) {
      const double w = c.q * inv / (kFourPi * k.c(n) * k.c(n));
      for (int m = -n; m <= n; ++m) exp.at(n, m) += w * std::conj(Y[harmonic_index(n, m)]);
      inv /= s.r;
    }
  }
  return exp;
}

HarmonicExpansion m2m(const HarmonicExpansion& exp, const Vec3& new_center) {
  if (exp.kind == ExpansionKind::local) throw DomainError("m2m expects a multipole expansion");
  const int p = exp.p;
  const auto& k = constants(p);
  const Vec3 shift = exp.center - new_center;
  const SphericalCoord s = to_spherical(shift);
  const auto Y = sph_harm_table(p, s.theta, s.phi);
  std::vector<double> rpow(p + 1, 1.0);
  for (int i = 1; i <= p; ++i) rpow[i] = rpow[i - 1] * s.r;

  HarmonicExpansion out(exp.kind, new_center, p, exp.radius + s.r);
  out.component = exp.component;
  for (int n = 0; n <= p; ++n)
    for (int m = -n; m <= n; ++m) {
      cplx sum = 0.0;
      for (int nu = 0; nu <= n; ++nu) {
        const int d = n - nu;
        for (int mu = -nu; mu <= nu; ++mu) {
          const double a = k.A(d, m - mu);
          if (a == 0.0) continue;
          sum += sign_pow(std::abs(m) - std::abs(mu)) * a * k.A(nu, mu) * rpow[d] *
                 harmonic_or_zero(Y, d, mu - m) / (k.c(d) * k.c(d)) * exp.at(nu, mu);
        }
      }
      out.at(n, m) = sum / k.A(n, m);
    }
  return out;
}

HarmonicExpansion l2l(const HarmonicExpansion& exp, const Vec3& new_center) {
  if (exp.kind != ExpansionKind::local) throw DomainError("l2l expects a local expansion");
  const int p = exp.p;
  const auto& k = constants(p);
  const Vec3 shift = exp.center - new_center;
  const SphericalCoord s = to_spherical(shift);
  const auto Y = sph_harm_table(p, s.theta, s.phi);
  std::vector<double> rpow(p + 1, 1.0);
  for (int i = 1; i <= p; ++i) rpow[i] = rpow[i - 1] * s.r;

  HarmonicExpansion out(ExpansionKind::local, new_center, p, std::max(0.0, exp.radius - s.r));
  out.component = exp.component;
  for (int n = 0; n <= p; ++n)
    for (int m = -n; m <= n; ++m) {
      cplx sum = 0.0;
      for (int nu = n; nu <= p; ++nu) {
        const int d = nu - n;
        for (int mu = -nu; mu <= nu; ++mu) {
          const double a = k.A(d, mu - m);
          if (a == 0.0) continue;
          const int e = nu - n - std::abs(mu - m) + std::abs(mu) - std::abs(m);
          sum += sign_pow(e) * k.c(nu) * k.c(nu) * a * k.A(n, m) * rpow[d] * harmonic_or_zero(Y, d, mu - m) /
                 (k.c(d) * k.c(d) * k.c(n) * k.c(n) * k.A(nu, mu)) * exp.at(nu, mu);
        }
      }
      out.at(n, m) = sum;
    }
  return out;
}

HarmonicExpansion m2l_free(const HarmonicExpansion& exp, const Box& target, int p) {
  if (exp.kind != ExpansionKind::multipole) throw DomainError("m2l_free expects a free multipole expansion");
  check_order(p);
  if (2 * p > HarmonicConstants::max_order)
    throw Overflow("translation needs constants up to order 2p");
  const Vec3 sep = exp.center - target.center;
  const SphericalCoord s = to_spherical(sep);
  if (!(s.r > exp.radius + target.radius)) throw BoxesNotSeparated("source and target balls are not separated");
  const int src = std::min(p, exp.p);
  const auto& k = constants(2 * p);
  const auto Y = sph_harm_table(p + src, s.theta, s.phi);
  std::vector<double> inv(p + src + 2, 1.0 / s.r);
  for (std::size_t i = 1; i < inv.size(); ++i) inv[i] = inv[i - 1] / s.r;  // inv[i] = r^-(i+1)

  HarmonicExpansion out(ExpansionKind::local, target.center, p, target.radius);
  for (int n = 0; n <= p; ++n)
    for (int m = -n; m <= n; ++m) {
      cplx sum = 0.0;
      for (int nu = 0; nu <= src; ++nu)
        for (int mu = -nu; mu <= nu; ++mu) {
          sum += sign_pow(nu + std::abs(m)) * k.A(nu, mu) * k.A(n, m) * harmonic_or_zero(Y, n + nu, mu - m) /
                 (k.c(n) * k.c(n) * k.A(n + nu, mu - m)) * inv[n + nu] * exp.at(nu, mu);
        }
      out.at(n, m) = sum;
    }
  return out;
}

std::vector<cplx> degree_terms(const HarmonicExpansion& exp, const Vec3& r) {
  if (exp.kind == ExpansionKind::reaction_multipole)
    throw DomainError("reaction multipoles need a medium; use reaction_degree_terms");
  const SphericalCoord s = to_spherical(r - exp.center);
  const auto Y = sph_harm_table(exp.p, s.theta, s.phi);
  std::vector<cplx> terms(exp.p + 1, 0.0);
  const bool multipole = exp.kind == ExpansionKind::multipole;
  if (multipole && s.r == 0.0) throw DomainError("multipole evaluated at its center");
  double radial = multipole ? 1.0 / s.r : 1.0;
  for (int n = 0; n <= exp.p; ++n) {
    cplx sum = 0.0;
    for (int m = -n; m <= n; ++m) sum += exp.at(n, m) * Y[harmonic_index(n, m)];
    terms[n] = sum * radial;
    radial = multipole ? radial / s.r : radial * s.r;
  }
  return terms;
}

Evaluation eval_expansion(const HarmonicExpansion& exp, const Vec3& r) {
  const auto terms = degree_terms(exp, r);
  cplx sum = 0.0;
  double scale = 0.0;
  for (const auto& t : terms) {
    sum += t;
    scale += std::abs(t);
  }
  const double dist = norm(r - exp.center);
  const bool in_region = exp.kind == ExpansionKind::multipole ? dist > exp.radius : dist <= exp.radius;
  return finish_evaluation(sum, scale, in_region);
}

HarmonicExpansion reaction_me_from_charges(const ChargeSystem& system, const LayeredMedium& medium,
                                           const Component& c, const Box& image_box, int p) {
  check_order(p);
  require_component(medium, c);
  if (!image_center_admissible(medium, c, image_box.center))
    throw CenterOnWrongSide("polarization center on the wrong side of the target layer");
  HarmonicExpansion exp(ExpansionKind::reaction_multipole, image_box.center, p, image_box.radius);
  exp.component = c;
  for (const auto& q : system.charges) {
    if (q.point.layer() != c.source_layer) throw LayerMismatch("charge is not in the source layer");
    const Vec3 offset = polarization_source(medium, c, q.point.position()) - image_box.center;
    if (norm(offset) > image_box.radius * (1.0 + kRadiusSlack))
      throw ChargeOutsideBox("polarization image lies outside the image ball");
    accumulate_multipole(exp, q.q, offset);
  }
  return exp;
}

namespace {

std::vector<cplx> contract(const HarmonicExpansion& exp, const std::vector<cplx>& basis) {
  std::vector<cplx> terms(exp.p + 1, 0.0);
  for (int n = 0; n <= exp.p; ++n)
    for (int m = -n; m <= n; ++m) terms[n] += exp.at(n, m) * basis[harmonic_index(n, m)];
  return terms;
}

const Component& reaction_component(const HarmonicExpansion& exp) {
  if (exp.kind != ExpansionKind::reaction_multipole || !exp.component)
    throw DomainError("expected a reaction multipole expansion");
  return *exp.component;
}

}  // namespace

std::vector<cplx> reaction_degree_terms(const HarmonicExpansion& exp, const LayeredMedium& medium,
                                        const LayerPoint& r, const ReactionOptions& options) {
  const Component& c = reaction_component(exp);
  if (r.layer() != c.target_layer) throw LayerMismatch("target is not in the component's target layer");
  const auto basis =
      me_basis_table(medium, c, exp.p, r.position(), exp.center, options.tol, options.density_bound);
  return contract(exp, basis);
}

Evaluation eval_reaction_me(const HarmonicExpansion& exp, const LayeredMedium& medium, const LayerPoint& r,
                            const ReactionOptions& options) {
  const auto terms = reaction_degree_terms(exp, medium, r, options);
  cplx sum = 0.0;
  double scale = 0.0;
  for (const auto& t : terms) {
    sum += t;
    scale += std::abs(t);
  }
  return finish_evaluation(sum, scale, norm(r.position() - exp.center) > exp.radius);
}

std::vector<cplx> direct_reaction_degree_terms(const HarmonicExpansion& exp, const LayeredMedium& medium,
                                               const Component& c, const LayerPoint& r,
                                               const ReactionOptions& options) {
  if (exp.kind != ExpansionKind::multipole) throw DomainError("direct form expects a free multipole");
  if (r.layer() != c.target_layer) throw LayerMismatch("target is not in the component's target layer");
  const auto basis =
      direct_me_basis_table(medium, c, exp.p, r.position(), exp.center, options.tol, options.density_bound);
  return contract(exp, basis);
}

HarmonicExpansion reaction_le_from_charges(const ChargeSystem& system, const LayeredMedium& medium,
                                           const Component& c, const Box& target, int p,
                                           const ReactionOptions& options) {
  check_order(p);
  require_component(medium, c);
  if (!medium.contains(c.target_layer, target.center.z))
    throw LayerMismatch("target center is not in the target layer");
  HarmonicExpansion exp(ExpansionKind::local, target.center, p, target.radius);
  exp.component = c;
  for (const auto& q : system.charges) {
    if (q.point.layer() != c.source_layer) throw LayerMismatch("charge is not in the source layer");
    const Vec3 image = polarization_source(medium, c, q.point.position());
    if (!(norm(image - target.center) > target.radius))
      throw ChargeInsideBox("polarization image lies inside the target ball");
    const auto table = reaction_le_coeff_table(medium, c, p, target.center, q.point.position(), options.tol,
                                               options.density_bound);
    for (std::size_t i = 0; i < table.size(); ++i) exp.coeff[i] += q.q * table[i];
  }
  return exp;
}

const std::vector<cplx>& M2LOperatorCache::get(const LayeredMedium& medium, const Component& c, int p,
                                               const Vec3& target, const Vec3& source,
                                               const ReactionOptions& options) {
  const Key key{&medium, static_cast<int>(c.target_side), static_cast<int>(c.source_side), c.target_layer,
                c.source_layer, p, options.tol, options.density_bound, target.x, target.y, target.z,
                source.x, source.y, source.z};
  {
    std::lock_guard lock(mutex_);
    auto it = entries_.find(key);
    if (it != entries_.end()) return it->second;
  }
  auto matrix = reaction_m2l_matrix(medium, c, p, target, source, options.tol, options.density_bound);
  std::lock_guard lock(mutex_);
  return entries_.emplace(key, std::move(matrix)).first->second;
}

std::size_t M2LOperatorCache::size() const {
  std::lock_guard lock(mutex_);
  return entries_.size();
}

HarmonicExpansion m2l_reaction(const HarmonicExpansion& exp, const LayeredMedium& medium, const Box& target,
                               int p, const ReactionOptions& options, M2LOperatorCache* cache) {
  const Component& c = reaction_component(exp);
  check_order(p);
  if (2 * p > HarmonicConstants::max_order) throw Overflow("translation needs constants up to order 2p");
  if (!medium.contains(c.target_layer, target.center.z))
    throw LayerMismatch("target center is not in the target layer");
  if (!(norm(target.center - exp.center) > exp.radius + target.radius))
    throw BoxesNotSeparated("image ball and target ball are not separated");

  std::vector<cplx> local_matrix;
  const std::vector<cplx>* matrix = nullptr;
  if (cache) {
    matrix = &cache->get(medium, c, p, target.center, exp.center, options);
  } else {
    local_matrix = reaction_m2l_matrix(medium, c, p, target.center, exp.center, options.tol, options.density_bound);
    matrix = &local_matrix;
  }
  return apply_reaction_m2l(*matrix, p, exp, target, p);
}

HarmonicExpansion apply_reaction_m2l(const std::vector<cplx>& matrix, int matrix_p, const HarmonicExpansion& exp,
                                     const Box& target, int p) {
  const Component& c = reaction_component(exp);
  if (p > matrix_p) throw DomainError("translation matrix is smaller than the requested order");
  const int stride = harmonic_count(matrix_p);
  const int src = std::min(p, exp.p);
  HarmonicExpansion out(ExpansionKind::local, target.center, p, target.radius);
  out.component = c;
  for (int row = 0; row < harmonic_count(p); ++row) {
    cplx sum = 0.0;
    for (int col = 0; col < harmonic_count(src); ++col)
      sum += matrix[static_cast<std::size_t>(row) * stride + col] * exp.coeff[col];
    out.coeff[row] = sum;
  }
  return out;
}

}  // namespace layermp
