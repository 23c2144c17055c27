#include "layermp/densities.hpp"

#include <algorithm>
#include <cmath>

#include "layermp/error.hpp"

namespace layermp {

cplx InterfaceMatrices::scale_ratio(int lo, int hi) const {
  const int n = num_interfaces() + 1;
  if (lo < 0 || hi >= n || lo > hi) throw IndexOutOfRange("scale ratio indices out of range");
  return ratio_table[lo * n + hi];
}

InterfaceMatrices interface_matrices(const LayeredMedium& medium, cplx k) {
  if (k.real() < 0.0 || !std::isfinite(k.real()) || !std::isfinite(k.imag()))
    throw InvalidSpectralArgument("spectral argument must have nonnegative real part");
  const int L = medium.num_interfaces();
  InterfaceMatrices m;
  m.k = k;
  m.decay.resize(L + 1, 1.0);
  m.gamma_sum.assign(L + 1, 0.0);
  m.gamma_diff.assign(L + 1, 0.0);
  m.transfer.assign(L + 1, Mat2::identity());
  m.source.resize(L + 1);
  m.cumulative.assign(L + 1, Mat2::identity());

  for (int l = 0; l <= L; ++l) {
    const double D = L == 0 ? 0.0 : medium.thickness(l);
    m.decay[l] = D == 0.0 ? cplx(1.0) : std::exp(-k * D);
    const double a = medium.potential_weight(l);
    const double b = medium.flux_weight(l);
    m.source[l] = {m.decay[l] / a, m.decay[l] / b, 1.0 / a, -1.0 / b};
  }
  for (int l = 1; l <= L; ++l) {
    const double ra = medium.potential_weight(l) / medium.potential_weight(l - 1);
    const double rb = medium.flux_weight(l) / medium.flux_weight(l - 1);
    m.gamma_sum[l] = ra + rb;
    m.gamma_diff[l] = ra - rb;
    const cplx eu = m.decay[l - 1];
    const cplx el = m.decay[l];
    m.transfer[l] = {m.gamma_sum[l] * eu * el, m.gamma_diff[l] * eu, m.gamma_diff[l] * el,
                     m.gamma_sum[l]};
    m.cumulative[l] = m.cumulative[l - 1] * m.transfer[l];
  }

  const int n = L + 1;
  m.ratio_table.assign(n * n, 0.0);
  for (int lo = 0; lo < n; ++lo) {
    cplx acc = 1.0;
    m.ratio_table[lo * n + lo] = acc;
    for (int hi = lo + 1; hi < n; ++hi) {
      acc *= 2.0 * m.decay[hi - 1];
      m.ratio_table[lo * n + hi] = acc;
    }
  }

  if (L > 0 && second_row_margin(m) < -1e-10)
    throw LemmaViolation("second-row inequality violated");
  return m;
}

double second_row_margin(const InterfaceMatrices& m) {
  double margin = std::numeric_limits<double>::infinity();
  double product = 1.0;
  for (int l = 1; l <= m.num_interfaces(); ++l) {
    product *= m.gamma_sum[l] * m.gamma_sum[l] - m.gamma_diff[l] * m.gamma_diff[l];
    const Mat2& c = m.cumulative[l];
    const double scale = std::norm(c.a22) + std::norm(c.a21);
    const double lhs = std::norm(c.a22) - std::norm(c.a21);
    margin = std::min(margin, (lhs - product) / std::max(product, scale));
  }
  return margin;
}

cplx ReactionDensitySet::value(Side a, Side b) const {
  const auto& v = slot(a, b);
  if (!v)
    throw ComponentAbsent("density " + std::to_string(static_cast<int>(a)) +
                          std::to_string(static_cast<int>(b)) + " absent for layers (" +
                          std::to_string(target_) + "," + std::to_string(source_) + ")");
  return *v;
}

namespace {

// Second row of cumulative[l] applied to source[s] * (x, y).
cplx seed_term(const InterfaceMatrices& m, int l, int s, double x, double y) {
  const Mat2& c = m.cumulative[l];
  const Mat2& src = m.source[s];
  const cplx v1 = src.a11 * x + src.a12 * y;
  const cplx v2 = src.a21 * x + src.a22 * y;
  return c.a21 * v1 + c.a22 * v2;
}

cplx checked_inverse(cplx denom) {
  if (std::abs(denom) < 1e-300) throw DegenerateDenominator("vanishing cumulative transfer entry");
  return 1.0 / denom;
}

}  // namespace

ReactionDensitySet reaction_densities(const LayeredMedium& medium, int target_layer, int source_layer,
                                      cplx k) {
  medium.check_layer(target_layer);
  medium.check_layer(source_layer);
  ReactionDensitySet out(target_layer, source_layer);
  const int L = medium.num_interfaces();
  if (L == 0) {
    if (k.real() < 0.0) throw InvalidSpectralArgument("spectral argument must have nonnegative real part");
    return out;
  }
  const InterfaceMatrices m = interface_matrices(medium, k);
  const int s = source_layer;
  const bool lower = s < L;  // source field anchored at the lower interface of layer s
  const bool upper = s > 0;  // source field anchored at the upper interface of layer s
  const double as = medium.potential_weight(s);
  const double bs = medium.flux_weight(s);

  std::vector<cplx> up_low(L + 1, 0.0), up_upp(L + 1, 0.0), dn_low(L + 1, 0.0), dn_upp(L + 1, 0.0);
  // Source contributions propagated through the stack, reused at every layer.
  const cplx lower_src = lower ? seed_term(m, s, s, -as, bs) : 0.0;
  const cplx upper_src = upper ? seed_term(m, s - 1, s - 1, as, bs) : 0.0;

  const cplx inv_bottom = checked_inverse(m.cumulative[L].a22);
  if (lower) dn_low[L] = -m.scale_ratio(s + 1, L) * inv_bottom * lower_src;
  if (upper) dn_upp[L] = -m.scale_ratio(s, L) * inv_bottom * upper_src;

  for (int l = L - 1; l >= target_layer; --l) {
    const cplx t11 = 0.5 * m.gamma_sum[l + 1] * m.decay[l + 1];
    const double t12 = 0.5 * m.gamma_diff[l + 1];
    if (lower) {
      up_low[l] = t11 * up_low[l + 1] + t12 * dn_low[l + 1];
      // The direct source term -as/(2as) + bs/(2bs) vanishes identically at l == s.
    }
    if (upper) {
      up_upp[l] = t11 * up_upp[l + 1] + t12 * dn_upp[l + 1];
      if (l == s - 1)
        up_upp[l] += 0.5 * (as / medium.potential_weight(l) + bs / medium.flux_weight(l));
    }
    if (l == 0) break;
    const Mat2& c = m.cumulative[l];
    const cplx inv = checked_inverse(c.a22);
    if (lower) {
      dn_low[l] = l > s ? -inv * (m.scale_ratio(s + 1, l) * lower_src + c.a21 * up_low[l])
                        : -c.a21 * up_low[l] * inv;
    }
    if (upper) {
      dn_upp[l] = l > s - 1 ? -inv * (m.scale_ratio(s, l) * upper_src + c.a21 * up_upp[l])
                            : -c.a21 * up_upp[l] * inv;
    }
  }

  const int t = target_layer;
  if (t < L) {
    if (lower) out.set(Side::lower, Side::lower, up_low[t]);
    if (upper) out.set(Side::lower, Side::upper, up_upp[t]);
  }
  if (t > 0) {
    if (lower) out.set(Side::upper, Side::lower, dn_low[t]);
    if (upper) out.set(Side::upper, Side::upper, dn_upp[t]);
  }
  return out;
}

cplx reaction_density(const LayeredMedium& medium, const Component& c, cplx k) {
  require_component(medium, c);
  return reaction_densities(medium, c.target_layer, c.source_layer, k).value(c);
}

namespace {

struct Sampler {
  const LayeredMedium& medium;
  const Component& c;
  double best = 0.0;
  cplx argmax = 0.0;
  int count = 0;

  double operator()(cplx k) {
    const double v = std::abs(reaction_density(medium, c, k));
    ++count;
    if (v > best) {
      best = v;
      argmax = k;
    }
    return v;
  }
};

}  // namespace

cplx matched_density(const LayeredMedium& medium, const Component& c, cplx k) {
  const int tl = c.target_layer, sl = c.source_layer;
  if (tl < sl && c.target_side == Side::lower && c.source_side == Side::upper)
    return std::exp(-k * (medium.interface(tl) - medium.interface(sl - 1)));
  if (tl > sl && c.target_side == Side::upper && c.source_side == Side::lower)
    return std::exp(-k * (medium.interface(sl) - medium.interface(tl - 1)));
  return 0.0;
}

DensityBound density_bound(const LayeredMedium& medium, const Component& c,
                           const DensityBoundOptions& options) {
  require_component(medium, c);
  Sampler sample{medium, c};
  const double K = options.k_max;

  // Geometric grids on both rays resolve the behaviour near the origin.
  const double k_min = 1e-6;
  sample(0.0);
  for (int i = 0; i < options.geometric_points; ++i) {
    const double k = k_min * std::pow(K / k_min, static_cast<double>(i) / (options.geometric_points - 1));
    sample(k);
    sample(cplx(0.0, k));
    sample(cplx(0.0, -k));
  }

  // On the imaginary axis the decay factors are unimodular; sample their
  // oscillation uniformly.
  double thickest = 0.0;
  for (int l = 0; l <= medium.num_interfaces(); ++l) thickest = std::max(thickest, medium.thickness(l));
  double h = 0.0;
  if (thickest > 0.0) {
    h = 2.0 * std::numbers::pi / (thickest * options.samples_per_period);
    const long n = static_cast<long>(std::ceil(K / h));
    for (long i = 1; i <= n; ++i) {
      const double y = i * h;
      sample(cplx(0.0, y));
      sample(cplx(0.0, -y));
    }
  }
  const double sampled = sample.best;

  // Golden-section refinement along whichever ray holds the sampled max.
  const cplx at = sample.argmax;
  const bool imaginary = at.imag() != 0.0;
  const double centre = imaginary ? at.imag() : at.real();
  const double width = std::max(h, std::abs(centre) * 0.05 + 1e-6);
  auto value_at = [&](double t) {
    if (!imaginary && t < 0.0) t = 0.0;
    return sample(imaginary ? cplx(0.0, t) : cplx(t, 0.0));
  };
  double lo = centre - width, hi = centre + width;
  const double g = 0.5 * (std::sqrt(5.0) - 1.0);
  double x1 = hi - g * (hi - lo), x2 = lo + g * (hi - lo);
  double f1 = value_at(x1), f2 = value_at(x2);
  for (int it = 0; it < 60; ++it) {
    if (f1 > f2) {
      hi = x2;
      x2 = x1;
      f2 = f1;
      x1 = hi - g * (hi - lo);
      f1 = value_at(x1);
    } else {
      lo = x1;
      x1 = x2;
      f1 = f2;
      x2 = lo + g * (hi - lo);
      f2 = value_at(x2);
    }
  }

  DensityBound out;
  out.sampled_sup = sampled;
  out.value = options.safety * sample.best;
  out.argmax = sample.argmax;
  out.samples = sample.count;
  out.options = options;
  return out;
}

}  // namespace layermp
