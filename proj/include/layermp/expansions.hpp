#pragma once

#include <complex>
#include <map>
#include <mutex>
#include <optional>
#include <tuple>
#include <vector>

#include "layermp/harmonics.hpp"
#include "layermp/medium.hpp"
#include "layermp/sommerfeld.hpp"

namespace layermp {

//! Ball described by its center and circumscribed radius.
struct Box {
  Vec3 center;
  double radius = 0.0;
};

struct Charge {
  double q;
  LayerPoint point;
};

struct ChargeSystem {
  std::vector<Charge> charges;
  std::optional<Box> box;

  //! Sum of |q|.
  double total_abs_charge() const;
  ChargeSystem merged(const ChargeSystem& other) const;
};

enum class ExpansionKind { multipole, local, reaction_multipole };

struct HarmonicExpansion {
  ExpansionKind kind = ExpansionKind::multipole;
  Vec3 center;
  int p = 0;
  double radius = 0.0;  //!< source radius for multipoles, target radius for locals
  std::optional<Component> component;
  std::vector<cplx> coeff;

  HarmonicExpansion() = default;
  HarmonicExpansion(ExpansionKind kind, const Vec3& center, int p, double radius);

  cplx& at(int n, int m) { return coeff[harmonic_index(n, m)]; }
  cplx at(int n, int m) const { return coeff[harmonic_index(n, m)]; }
};

//! Copy keeping only degrees <= p.
HarmonicExpansion truncated(const HarmonicExpansion& exp, int p);

struct Evaluation {
  double value = 0.0;
  double imaginary = 0.0;  //!< discarded imaginary part
  double scale = 0.0;      //!< sum of term magnitudes
  bool in_region = true;
};

//! Throws ImaginaryResidue when the imaginary part of a sum of real sources
//! is not negligible.
Evaluation finish_evaluation(cplx sum, double scale, bool in_region);

HarmonicExpansion me_from_charges(const ChargeSystem& system, const Box& source, int p);
HarmonicExpansion le_from_charges(const ChargeSystem& system, const Box& target, int p);

HarmonicExpansion m2m(const HarmonicExpansion& exp, const Vec3& new_center);
HarmonicExpansion l2l(const HarmonicExpansion& exp, const Vec3& new_center);
//! Truncated multipole-to-local translation into a target ball.
HarmonicExpansion m2l_free(const HarmonicExpansion& exp, const Box& target, int p);

//! Free-space multipole or local expansion evaluated at r.
Evaluation eval_expansion(const HarmonicExpansion& exp, const Vec3& r);

//! Per-degree contributions, so partial sums for every p <= exp.p come from one pass.
std::vector<cplx> degree_terms(const HarmonicExpansion& exp, const Vec3& r);

//! Multipole over polarization images of the charges, centered at the image box center.
HarmonicExpansion reaction_me_from_charges(const ChargeSystem& system, const LayeredMedium& medium,
                                           const Component& c, const Box& image_box, int p);

struct ReactionOptions {
  double tol = 1e-12;
  double density_bound = 1.0;
};

Evaluation eval_reaction_me(const HarmonicExpansion& exp, const LayeredMedium& medium, const LayerPoint& r,
                            const ReactionOptions& options);

std::vector<cplx> reaction_degree_terms(const HarmonicExpansion& exp, const LayeredMedium& medium,
                                        const LayerPoint& r, const ReactionOptions& options);

//! Direct multipole about the physical source center, evaluated with the
//! coordinate-map basis. exp must be a free multipole of the source charges.
std::vector<cplx> direct_reaction_degree_terms(const HarmonicExpansion& exp, const LayeredMedium& medium,
                                               const Component& c, const LayerPoint& r,
                                               const ReactionOptions& options);

//! Local expansion of the reaction field of charges outside the target ball.
HarmonicExpansion reaction_le_from_charges(const ChargeSystem& system, const LayeredMedium& medium,
                                           const Component& c, const Box& target, int p,
                                           const ReactionOptions& options);

//! Cache of reaction translation matrices keyed by medium, component, centers and order.
class M2LOperatorCache {
 public:
  const std::vector<cplx>& get(const LayeredMedium& medium, const Component& c, int p, const Vec3& target,
                               const Vec3& source, const ReactionOptions& options);
  std::size_t size() const;

 private:
  using Key = std::tuple<const LayeredMedium*, int, int, int, int, int, double, double, double, double, double,
                         double, double, double>;
  mutable std::mutex mutex_;
  std::map<Key, std::vector<cplx>> entries_;
};

//! Reaction multipole to free-space-basis local expansion.
HarmonicExpansion m2l_reaction(const HarmonicExpansion& exp, const LayeredMedium& medium, const Box& target,
                               int p, const ReactionOptions& options, M2LOperatorCache* cache = nullptr);

//! Applies the leading block of a translation matrix of order matrix_p >= p.
//! Rows and columns of a lower order are a sub-block, so one matrix serves a sweep over p.
HarmonicExpansion apply_reaction_m2l(const std::vector<cplx>& matrix, int matrix_p, const HarmonicExpansion& exp,
                                     const Box& target, int p);

}  // namespace layermp
