#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "layermp/expansions.hpp"
#include "layermp/medium.hpp"

namespace layermp::lab {

enum class ExperimentKind {
  me,
  le,
  m2m,
  l2l,
  m2l,
  reaction_me,
  reaction_le,
  reaction_m2l,
  density_props,
  cagniard,
  addition_theorems,
};

const char* to_string(ExperimentKind kind);
//! Throws ConfigError for unknown names.
ExperimentKind parse_kind(const std::string& name);
bool is_property_suite(ExperimentKind kind);
bool is_reaction(ExperimentKind kind);

//! One convergence sweep. Free-space kinds ignore the medium.
struct ExperimentConfig {
  ExperimentKind kind = ExperimentKind::me;
  std::optional<LayeredMedium> medium;
  std::string medium_source;  //!< file name or "inline", echoed in reports
  std::string component = "11";
  std::optional<int> target_layer;  //!< defaults to the layer of the target center
  Box source{{0, 0, 0}, 1.0};
  std::optional<Vec3> target_center;
  double target_radius = 1.0;
  //! Radius of the target sphere: around the source (or image) center for
  //! multipoles, around the target center for locals.
  double eval_radius = 4.0;
  Vec3 shift{0.5, 0.0, 0.0};  //!< m2m: child to parent center; l2l: parent to child center
  Vec3 direction{0.6, 0.0, 0.8};  //!< m2l: unit direction from source to target when no target center is given
  double separation = 3.0;
  int p_min = 1;
  int p_max = 20;
  int charges = 20;
  std::uint64_t seed = 0;
  double tol = 1e-12;
  int targets = 64;

  //! Throws ConfigError when the geometry breaks the hypotheses of the bound.
  void validate() const;
};

//! Relative paths for a medium file resolve against base_dir.
ExperimentConfig parse_config(const std::string& json_text, const std::filesystem::path& base_dir = {});
ExperimentConfig load_config(const std::filesystem::path& file);

//! Accepts {"interfaces", "potential_weights", "flux_weights"} or
//! {"interfaces", "permittivity"}.
LayeredMedium parse_medium(const std::string& json_text);
LayeredMedium load_medium(const std::filesystem::path& file);

//! Charges uniform in the ball, q uniform in [-1, 1]. Throws
//! BoxCrossesInterface when the ball meets an interface.
ChargeSystem generate_charges(std::uint64_t seed, int count, const Box& box, const LayeredMedium& medium);
ChargeSystem generate_charges(std::uint64_t seed, int count, const Box& box);

//! Deterministic quasi-uniform points on a sphere.
std::vector<Vec3> fibonacci_sphere(const Vec3& center, double radius, int count);

struct ReportRow {
  int p = 0;
  double max_error = 0.0;
  double bound = 0.0;
  double floor = 0.0;  //!< noise level added to the bound when checking
  bool passed = true;
};

struct ConvergenceReport {
  ExperimentConfig config;
  std::vector<ReportRow> rows;
  double rate_fit = 0.0;  //!< NaN when fewer than two rows clear the noise level
  int rate_rows = 0;
  double rate_theory = 0.0;
  double total_charge = 0.0;
  double density_bound = 0.0;  //!< M used in the reaction bounds
  int targets_used = 0;
  //! Geometry entering the bound: source-side and target-side radii, and
  //! the separation ratio for translations.
  double inner_radius = 0.0;
  double outer_radius = 0.0;
  double separation = 0.0;
  //! m2m coefficient agreement or l2l pointwise agreement, relative; NaN otherwise.
  double exactness_residual = 0.0;
  double oracle_error = 0.0;  //!< largest quadrature error estimate of the reference values
  bool degenerate = false;
  std::string note;
  bool passed() const;
};

ConvergenceReport run_experiment(const ExperimentConfig& config);

//! CSV with a "# schema=1" line; identical configs give identical bytes.
std::string report_csv(const ConvergenceReport& report);
std::string report_json(const ConvergenceReport& report);

struct SuiteCheck {
  std::string name;
  long samples = 0;
  double worst = 0.0;
  double threshold = 0.0;
  bool passed = false;
};

struct SuiteSummary {
  std::vector<SuiteCheck> checks;
  bool passed() const;
};

//! kind is density_props, cagniard, addition_theorems, or empty for all three.
SuiteSummary run_property_suite(std::optional<ExperimentKind> kind = std::nullopt);
std::string suite_csv(const SuiteSummary& summary);
std::string suite_json(const SuiteSummary& summary);

//! Least-squares slope of -log(error) against p.
double fit_decay_rate(const std::vector<int>& p, const std::vector<double>& error);

}  // namespace layermp::lab
