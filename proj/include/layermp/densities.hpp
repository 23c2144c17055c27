#pragma once

#include <array>
#include <complex>
#include <optional>
#include <vector>

#include "layermp/medium.hpp"

namespace layermp {

using cplx = std::complex<double>;

struct Mat2 {
  cplx a11, a12, a21, a22;

  friend Mat2 operator*(const Mat2& x, const Mat2& y) {
    return {x.a11 * y.a11 + x.a12 * y.a21, x.a11 * y.a12 + x.a12 * y.a22,
            x.a21 * y.a11 + x.a22 * y.a21, x.a21 * y.a12 + x.a22 * y.a22};
  }
  static Mat2 identity() { return {1.0, 0.0, 0.0, 1.0}; }
};

//! Rescaled transfer quantities of a medium at one spectral argument. Only
//! decaying exponentials exp(-k * thickness) ever appear.
struct InterfaceMatrices {
  cplx k;
  std::vector<cplx> decay;        //!< exp(-k * thickness(l)), l = 0..L
  std::vector<double> gamma_sum;  //!< a_l/a_{l-1} + b_l/b_{l-1}, index l = 1..L (slot 0 unused)
  std::vector<double> gamma_diff; //!< a_l/a_{l-1} - b_l/b_{l-1}
  std::vector<Mat2> transfer;     //!< rescaled transfer matrix across interface l-1, index l = 1..L (slot 0 identity)
  std::vector<Mat2> source;       //!< 2 exp(-k D_l) times the source matrix of layer l
  std::vector<Mat2> cumulative;   //!< products transfer[1] ... transfer[l]; cumulative[0] = I
  std::vector<cplx> ratio_table;  //!< (L+1)^2 cached scale ratios

  int num_interfaces() const { return static_cast<int>(decay.size()) - 1; }
  //! Ratio of scale factors for layers lo <= hi: prod_{j=lo}^{hi-1} 2 exp(-k D_j).
  cplx scale_ratio(int lo, int hi) const;
};

//! Throws InvalidSpectralArgument for Re k < 0 and LemmaViolation when the
//! second-row norm inequality fails.
InterfaceMatrices interface_matrices(const LayeredMedium& medium, cplx k);

//! Slack min_l (|c22|^2 - |c21|^2 - P_l) / max(P_l, |c22|^2 + |c21|^2) of the
//! cumulative second-row inequality, with P_l the product of (g+)^2 - (g-)^2.
//! Normalizing by the larger term keeps high-contrast rounding out of it.
double second_row_margin(const InterfaceMatrices& m);

//! The four reaction densities for one (target, source) layer pair.
class ReactionDensitySet {
 public:
  ReactionDensitySet(int target_layer, int source_layer) : target_(target_layer), source_(source_layer) {}

  int target_layer() const { return target_; }
  int source_layer() const { return source_; }

  bool has(Side target_side, Side source_side) const { return slot(target_side, source_side).has_value(); }
  //! Throws ComponentAbsent for vanishing components.
  cplx value(Side target_side, Side source_side) const;
  cplx value(const Component& c) const { return value(c.target_side, c.source_side); }
  void set(Side target_side, Side source_side, cplx v) { slot(target_side, source_side) = v; }

 private:
  std::optional<cplx>& slot(Side a, Side b) { return values_[index(a, b)]; }
  const std::optional<cplx>& slot(Side a, Side b) const { return values_[index(a, b)]; }
  static int index(Side a, Side b) { return 2 * (static_cast<int>(a) - 1) + static_cast<int>(b) - 1; }

  int target_;
  int source_;
  std::array<std::optional<cplx>, 4> values_;
};

ReactionDensitySet reaction_densities(const LayeredMedium& medium, int target_layer, int source_layer, cplx k);

//! Single component; throws ComponentAbsent when it vanishes.
cplx reaction_density(const LayeredMedium& medium, const Component& c, cplx k);

//! Density a matched (contrast-free) stack keeps: exp(-k * gap) for the
//! component carrying the free field between distinct layers, zero otherwise.
cplx matched_density(const LayeredMedium& medium, const Component& c, cplx k);

struct DensityBoundOptions {
  double k_max = 1e3;
  int geometric_points = 200;
  int samples_per_period = 16;
  double safety = 1.05;
};

struct DensityBound {
  double value = 0.0;        //!< safety * sampled supremum
  double sampled_sup = 0.0;  //!< before refinement and safety factor
  cplx argmax = 0.0;
  int samples = 0;
  DensityBoundOptions options;
};

//! Estimate of sup |density| over the closed right half plane from samples
//! on the positive real axis and on the imaginary axis.
DensityBound density_bound(const LayeredMedium& medium, const Component& c,
                           const DensityBoundOptions& options = {});

}  // namespace layermp
