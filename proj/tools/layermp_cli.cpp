#include <cmath>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <numbers>
#include <sstream>

#include "CLI11.hpp"
#include "json.hpp"
#include "layermp/densities.hpp"
#include "layermp/error.hpp"
#include "layermp/expansions.hpp"
#include "layermp/lab.hpp"
#include "layermp/sommerfeld.hpp"

using namespace layermp;
using nlohmann::json;

namespace {

Vec3 parse_point(const std::string& text) {
  std::stringstream in(text);
  std::string part;
  std::vector<double> v;
  while (std::getline(in, part, ',')) v.push_back(std::stod(part));
  if (v.size() != 3) throw ConfigError("expected x,y,z but got '" + text + "'");
  return {v[0], v[1], v[2]};
}

json read_json(const std::string& file) {
  std::ifstream in(file);
  if (!in) throw ConfigError("cannot open " + file);
  return json::parse(in);
}

Vec3 json_point(const json& j) { return {j.at(0).get<double>(), j.at(1).get<double>(), j.at(2).get<double>()}; }

void write_text(const std::string& file, const std::string& text) {
  if (file.empty() || file == "-") {
    std::cout << text;
    return;
  }
  std::ofstream out(file, std::ios::binary);
  if (!out) throw ConfigError("cannot write " + file);
  out << text;
}

std::string number(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

int run_lab(const std::string& config_file, const std::string& out, const std::string& json_out) {
  const lab::ExperimentConfig cfg = lab::load_config(config_file);
  if (lab::is_property_suite(cfg.kind)) {
    const lab::SuiteSummary s = lab::run_property_suite(cfg.kind);
    write_text(out, lab::suite_csv(s));
    if (!json_out.empty()) write_text(json_out, lab::suite_json(s));
    return s.passed() ? 0 : 1;
  }
  const lab::ConvergenceReport r = lab::run_experiment(cfg);
  write_text(out, lab::report_csv(r));
  if (!json_out.empty()) write_text(json_out, lab::report_json(r));
  if (!r.note.empty()) std::cerr << r.note << "\n";
  return r.passed() ? 0 : 1;
}

int run_suite(const std::string& kind, const std::string& out, const std::string& json_out) {
  std::optional<lab::ExperimentKind> k;
  if (kind != "all") k = lab::parse_kind(kind);
  const lab::SuiteSummary s = lab::run_property_suite(k);
  write_text(out, lab::suite_csv(s));
  if (!json_out.empty()) write_text(json_out, lab::suite_json(s));
  return s.passed() ? 0 : 1;
}

int run_green(const std::string& medium_file, const std::string& label, const std::string& source,
              const std::string& target, double tol) {
  const LayeredMedium m = lab::load_medium(medium_file);
  const LayerPoint rs(m, parse_point(source)), rt(m, parse_point(target));
  const Component c = parse_component(label, rt.layer(), rs.layer());
  const GreenValue g = eval_reaction_green(m, c, rt, rs, tol);
  std::cout << "value," << number(g.value) << "\nerror_estimate," << number(g.error_estimate) << "\n";
  return 0;
}

int run_me(const std::string& medium_file, const std::string& charges_file, const std::string& label,
           const std::string& center_text, int p, const std::string& targets_file, double tol) {
  const bool free_space = label == "free";
  const LayeredMedium m = free_space || medium_file.empty() ? LayeredMedium({}, {1.0}, {1.0})
                                                            : lab::load_medium(medium_file);
  if (!free_space && medium_file.empty()) throw ConfigError("reaction components need --medium");
  const Vec3 center = parse_point(center_text);

  ChargeSystem sys;
  double radius = 0.0;
  for (const auto& c : read_json(charges_file)) {
    const Vec3 x = json_point(c.at("position"));
    sys.charges.push_back({c.at("q").get<double>(), LayerPoint(m, x)});
    radius = std::max(radius, norm(x - center));
  }
  radius = std::max(radius, 1e-300);
  std::vector<Vec3> targets;
  for (const auto& t : read_json(targets_file)) targets.push_back(json_point(t));
  if (targets.empty()) throw ConfigError("no targets");

  const double Q = sys.total_abs_charge();
  constexpr double four_pi = 4 * std::numbers::pi;
  bool ok = true;
  std::cout << "target,x,y,z,expansion,oracle,abs_error,bound\n";
  auto emit = [&](std::size_t i, const Vec3& x, double value, double reference, double bound, double floor) {
    const double err = std::abs(value - reference);
    ok = ok && err <= bound + floor;
    std::cout << i << "," << number(x.x) << "," << number(x.y) << "," << number(x.z) << "," << number(value) << ","
              << number(reference) << "," << number(err) << "," << number(bound) << "\n";
  };

  if (free_space) {
    const HarmonicExpansion me = me_from_charges(sys, {center, radius}, p);
    for (std::size_t i = 0; i < targets.size(); ++i) {
      double ref = 0.0;
      for (const auto& c : sys.charges) ref += c.q / (four_pi * norm(targets[i] - c.point.position()));
      const double r = norm(targets[i] - center);
      const Evaluation e = eval_expansion(me, targets[i]);
      emit(i, targets[i], e.value, ref, Q / (four_pi * (r - radius)) * std::pow(radius / r, p + 1),
           64 * 2.2e-16 * e.scale);
    }
    return ok ? 0 : 1;
  }

  const int source_layer = m.layer_of(center.z);
  const int target_layer = m.layer_of(targets.front().z);
  const Component comp = parse_component(label, target_layer, source_layer);
  const Vec3 image = polarization_source(m, comp, center);
  const double M = density_bound(m, comp).value;
  const HarmonicExpansion me = reaction_me_from_charges(sys, m, comp, {image, radius}, p);
  for (std::size_t i = 0; i < targets.size(); ++i) {
    const LayerPoint rt(m, targets[i]);
    if (rt.layer() != target_layer) throw ConfigError("all targets must share one layer");
    double ref = 0.0;
    for (const auto& c : sys.charges) ref += c.q * eval_reaction_green(m, comp, rt, c.point, tol, M).value;
    const double r = norm(targets[i] - image);
    const Evaluation e = eval_reaction_me(me, m, rt, {tol, M});
    emit(i, targets[i], e.value, ref, Q * M / (four_pi * (r - radius)) * std::pow(radius / r, p + 1), 100 * tol);
  }
  return ok ? 0 : 1;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Multipole and local expansions of layered-media Green's functions"};
  app.require_subcommand(1);

  auto* lab_cmd = app.add_subcommand("lab", "Convergence experiments and property suites");
  lab_cmd->require_subcommand(1);
  std::string config, out, json_out;
  auto* run = lab_cmd->add_subcommand("run", "Sweep the truncation order of one experiment");
  run->add_option("--config", config, "Experiment JSON")->required()->check(CLI::ExistingFile);
  run->add_option("--out", out, "CSV report (stdout when omitted)");
  run->add_option("--json", json_out, "JSON report");
  std::string kind = "all";
  auto* suite = lab_cmd->add_subcommand("suite", "Run the property suites");
  suite->add_option("--kind", kind, "all, density_props, cagniard or addition_theorems");
  suite->add_option("--out", out, "CSV summary (stdout when omitted)");
  suite->add_option("--json", json_out, "JSON summary");

  std::string medium, label = "11", source, target, charges, center, targets;
  double tol = 1e-10;
  int p = 8;
  auto* green = app.add_subcommand("green", "Reaction component of the Green's function");
  green->add_option("--medium", medium, "Medium JSON")->required()->check(CLI::ExistingFile);
  green->add_option("--component", label, "11, 12, 21 or 22");
  green->add_option("--source", source, "x,y,z")->required();
  green->add_option("--target", target, "x,y,z")->required();
  green->add_option("--tol", tol, "Quadrature tolerance");

  auto* me = app.add_subcommand("me", "Multipole expansion of a charge set checked against the direct sum");
  me->add_option("--medium", medium, "Medium JSON (omit for free space)");
  me->add_option("--charges", charges, "JSON list of {q, position}")->required()->check(CLI::ExistingFile);
  me->add_option("--component", label, "11, 12, 21, 22 or free");
  me->add_option("--center", center, "Expansion center x,y,z of the physical sources")->required();
  me->add_option("--p", p, "Truncation order");
  me->add_option("--targets", targets, "JSON list of [x, y, z]")->required()->check(CLI::ExistingFile);
  me->add_option("--tol", tol, "Quadrature tolerance");

  CLI11_PARSE(app, argc, argv);
  try {
    if (run->parsed()) return run_lab(config, out, json_out);
    if (suite->parsed()) return run_suite(kind, out, json_out);
    if (green->parsed()) return run_green(medium, label, source, target, tol);
    if (me->parsed()) return run_me(medium, charges, label, center, p, targets, tol);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  }
  return 2;
}
