#include "layermp/quadrature.hpp"

#include <cmath>
#include <map>
#include <mutex>
#include <numbers>

namespace layermp {

const GaussRule& gauss_legendre(int n) {
  static std::mutex mutex;
  static std::map<int, GaussRule> cache;
  std::lock_guard lock(mutex);
  auto it = cache.find(n);
  if (it != cache.end()) return it->second;
  GaussRule rule;
  rule.nodes.resize(n);
  rule.weights.resize(n);
  for (int i = 0; i < (n + 1) / 2; ++i) {
    double x = std::cos(std::numbers::pi * (i + 0.75) / (n + 0.5));
    double dp = 0.0;
    for (int it = 0; it < 100; ++it) {
      double p0 = 1.0, p1 = x;
      for (int k = 2; k <= n; ++k) {
        const double p2 = ((2.0 * k - 1.0) * x * p1 - (k - 1.0) * p0) / k;
        p0 = p1;
        p1 = p2;
      }
      dp = n * (x * p1 - p0) / (x * x - 1.0);
      const double dx = p1 / dp;
      x -= dx;
      if (std::abs(dx) < 1e-16) break;
    }
    const double w = 2.0 / ((1.0 - x * x) * dp * dp);
    rule.nodes[i] = -x;
    rule.nodes[n - 1 - i] = x;
    rule.weights[i] = w;
    rule.weights[n - 1 - i] = w;
  }
  return cache.emplace(n, std::move(rule)).first->second;
}

namespace {

struct Panel {
  double a, b;
  std::vector<cplx> estimate;
  int depth;
};

void apply_rule(const GaussRule& rule, const VectorIntegrand& f, int dim, double a, double b,
                std::vector<cplx>& out, std::vector<cplx>& scratch, int& evaluations) {
  std::fill(out.begin(), out.end(), cplx(0.0));
  const double half = 0.5 * (b - a);
  const double mid = 0.5 * (a + b);
  for (std::size_t i = 0; i < rule.nodes.size(); ++i) {
    f(mid + half * rule.nodes[i], scratch.data());
    const double w = half * rule.weights[i];
    for (int d = 0; d < dim; ++d) out[d] += w * scratch[d];
  }
  evaluations += static_cast<int>(rule.nodes.size());
}

}  // namespace

AdaptiveResult integrate_adaptive(const VectorIntegrand& f, int dim, double a, double b,
                                  const std::vector<double>& abs_tol, const AdaptiveOptions& options) {
  AdaptiveResult result;
  result.value.assign(dim, 0.0);
  result.error.assign(dim, 0.0);
  if (!(b > a)) return result;
  const GaussRule& rule = gauss_legendre(options.rule_points);
  std::vector<cplx> scratch(dim), left(dim), right(dim);
  const double length = b - a;
  const int initial = std::max(1, static_cast<int>(std::ceil(length / options.panel_width)));

  for (int p = 0; p < initial; ++p) {
    const double pa = a + length * p / initial;
    const double pb = p + 1 == initial ? b : a + length * (p + 1) / initial;
    std::vector<Panel> stack;
    Panel root{pa, pb, std::vector<cplx>(dim), 0};
    apply_rule(rule, f, dim, pa, pb, root.estimate, scratch, result.evaluations);
    stack.push_back(std::move(root));
    while (!stack.empty()) {
      Panel panel = std::move(stack.back());
      stack.pop_back();
      const double mid = 0.5 * (panel.a + panel.b);
      apply_rule(rule, f, dim, panel.a, mid, left, scratch, result.evaluations);
      apply_rule(rule, f, dim, mid, panel.b, right, scratch, result.evaluations);
      const double share = (panel.b - panel.a) / length;
      bool ok = true;
      for (int d = 0; d < dim && ok; ++d)
        ok = std::abs(left[d] + right[d] - panel.estimate[d]) <= abs_tol[d] * share;
      if (ok || panel.depth >= options.max_depth) {
        if (!ok) result.converged = false;
        for (int d = 0; d < dim; ++d) {
          result.value[d] += left[d] + right[d];
          result.error[d] += std::abs(left[d] + right[d] - panel.estimate[d]);
        }
        ++result.panels;
        continue;
      }
      // Right half pushed first so the left half is finished first.
      stack.push_back({mid, panel.b, right, panel.depth + 1});
      stack.push_back({panel.a, mid, left, panel.depth + 1});
    }
  }
  return result;
}

double upper_gamma_q(int n, double x) {
  if (x <= 0.0) return 1.0;
  double term = 1.0, sum = 1.0;
  for (int k = 1; k <= n; ++k) {
    term *= x / k;
    sum += term;
  }
  return std::exp(-x + std::log(sum));
}

}  // namespace layermp
