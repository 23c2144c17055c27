#pragma once

#include <complex>
#include <functional>
#include <vector>

namespace layermp {

using cplx = std::complex<double>;

//! Gauss-Legendre rule on [-1, 1].
struct GaussRule {
  std::vector<double> nodes;
  std::vector<double> weights;
};

//! Cached rule with n points (Newton iteration on P_n).
const GaussRule& gauss_legendre(int n);

//! Writes dim integrand values at x into out.
using VectorIntegrand = std::function<void(double x, cplx* out)>;

struct AdaptiveOptions {
  double panel_width = 1.0;  //!< width of the initial uniform panels
  int max_depth = 24;        //!< bisection levels below an initial panel
  int rule_points = 32;
};

struct AdaptiveResult {
  std::vector<cplx> value;
  std::vector<double> error;  //!< accumulated |coarse - refined| per component
  int panels = 0;
  int evaluations = 0;
  bool converged = true;
};

//! Composite Gauss-Legendre on [a, b] with bisection of any panel whose
//! coarse and two-half estimates disagree by more than its share of abs_tol.
//! Panels are visited left to right so results are reproducible.
AdaptiveResult integrate_adaptive(const VectorIntegrand& f, int dim, double a, double b,
                                  const std::vector<double>& abs_tol, const AdaptiveOptions& options);

//! Regularized upper incomplete gamma Q(n + 1, x) = exp(-x) sum_{k<=n} x^k / k!.
double upper_gamma_q(int n, double x);

}  // namespace layermp
