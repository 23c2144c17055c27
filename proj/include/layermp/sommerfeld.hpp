#pragma once

#include <complex>
#include <functional>
#include <vector>

#include "layermp/medium.hpp"

namespace layermp {

using cplx = std::complex<double>;

//! Bessel function of the first kind, integer order m >= 0, x >= 0.
double bessel_j(int m, double x);

//! J_0(x) ... J_{max_order}(x) written to out.
void bessel_j_sequence(int max_order, double x, double* out);

//! Spectral weight evaluated on the positive real axis.
using SpectralDensity = std::function<cplx(double k)>;

SpectralDensity component_density(const LayeredMedium& medium, const Component& c);

//! Parameters of the integral of J_order(k rho) exp(-k zeta) density(k) k^power over k > 0.
struct RadialIntegralSpec {
  int order = 0;
  int power = 0;
  double rho = 0.0;
  double zeta = 1.0;
  SpectralDensity density;
  double density_bound = 1.0;  //!< bound on |density|, used for the tail estimate
};

struct QuadratureStats {
  double k_max = 0.0;
  int panels = 0;
  int evaluations = 0;
  //! Estimated absolute error divided by power! / zeta^(power+1), maximized
  //! over the components of a table.
  double relative_error = 0.0;
};

struct RadialResult {
  cplx value;
  double error_estimate = 0.0;  //!< absolute
  QuadratureStats stats;
};

//! Adaptive composite Gauss-Legendre. The tolerance is relative to the
//! kernel envelope power! / zeta^(power+1); for power 0 and unit depth it is
//! absolute. Throws ToleranceNotMet when refinement is exhausted.
RadialResult radial_integral(const RadialIntegralSpec& spec, double tol);

//! All radial integrals with order <= power <= max_power sharing one
//! (rho, zeta, density), computed in a single quadrature pass.
class RadialTable {
 public:
  RadialTable() = default;
  RadialTable(int max_power, std::vector<cplx> values, QuadratureStats stats)
      : max_power_(max_power), values_(std::move(values)), stats_(stats) {}

  static int index(int order, int power) { return power * (power + 1) / 2 + order; }
  static int size(int max_power) { return index(max_power, max_power) + 1; }

  int max_power() const { return max_power_; }
  //! Zero when order > power is requested outside the stored triangle.
  cplx operator()(int order, int power) const;
  const QuadratureStats& stats() const { return stats_; }

 private:
  int max_power_ = -1;
  std::vector<cplx> values_;
  QuadratureStats stats_;
};

RadialTable radial_table(const SpectralDensity& density, int max_power, double rho, double zeta,
                         double tol, double density_bound = 1.0);

//! Integration cutoff satisfying density_bound * Q(power + 1, K zeta) < tol / 10.
double radial_cutoff(int power, double rho, double zeta, double tol, double density_bound);

struct GreenValue {
  double value = 0.0;
  double error_estimate = 0.0;
};

//! Reaction component of the layered Green's function for a source at rp and
//! a target at r. This is the reference every expansion is checked against.
GreenValue eval_reaction_green(const LayeredMedium& medium, const Component& c, const LayerPoint& r,
                               const LayerPoint& rp, double tol, double density_bound = 1.0);

//! Multipole basis function attached to a polarization center.
cplx eval_me_basis(const LayeredMedium& medium, const Component& c, int n, int m, const Vec3& r,
                   const Vec3& center, double tol);

//! All multipole basis functions of order <= p at r, indexed by harmonic_index.
std::vector<cplx> me_basis_table(const LayeredMedium& medium, const Component& c, int p, const Vec3& r,
                                 const Vec3& center, double tol, double density_bound = 1.0,
                                 QuadratureStats* stats = nullptr);

//! Basis of the direct expansion about a physical source center; the kernel
//! uses the coordinate map from that center.
std::vector<cplx> direct_me_basis_table(const LayeredMedium& medium, const Component& c, int p,
                                        const Vec3& r, const Vec3& source_center, double tol,
                                        double density_bound = 1.0);

//! Local coefficient of one unit source at physical position source_point.
cplx eval_reaction_le_coeff(const LayeredMedium& medium, const Component& c, int n, int m,
                            const Vec3& target_center, const Vec3& source_point, double tol);

std::vector<cplx> reaction_le_coeff_table(const LayeredMedium& medium, const Component& c, int p,
                                          const Vec3& target_center, const Vec3& source_point,
                                          double tol, double density_bound = 1.0);

//! Entry of the multipole-to-local operator between a polarization center and a target center.
cplx eval_reaction_m2l_entry(const LayeredMedium& medium, const Component& c, int n, int m, int np,
                             int mp, const Vec3& target_center, const Vec3& source_center, double tol);

//! Dense operator indexed [harmonic_index(n, m) * harmonic_count(p) + harmonic_index(n', m')].
std::vector<cplx> reaction_m2l_matrix(const LayeredMedium& medium, const Component& c, int p,
                                      const Vec3& target_center, const Vec3& source_center, double tol,
                                      double density_bound = 1.0);

//! Principal square root with nonnegative real part, written out explicitly.
cplx branch_sqrt(cplx z);

enum class CagniardFunction { one, linear, quadratic, exponential };
const char* to_string(CagniardFunction f);

struct CagniardResult {
  cplx lhs;
  cplx rhs;
  double lhs_error = 0.0;
  double rhs_error = 0.0;
};

//! Both sides of the contour-deformation identity: the real-axis integral of
//! f(xi) exp(i xi rho - sqrt(eta^2 + xi^2) z) and its hyperbolic-contour form.
CagniardResult cagniard_identity_check(CagniardFunction f, double rho, double z, double eta, double tol);

}  // namespace layermp
