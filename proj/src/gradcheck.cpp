#include "homnet/gradcheck.hpp"

#include <algorithm>
#include <cmath>
#include <map>

namespace homnet {

namespace {

struct Probe {
  double value;
  std::uint64_t signature;
};

Probe evaluate(const ScalarGraphFn& f, const ParamStore<double>& params) {
  ad::Graph<double> g;
  g.set_track_kinks(true);
  const ad::Var root = f(g, params);
  return {g.value(root).data.at(0), g.kink_signature()};
}

}  // namespace

GradCheckReport grad_check(const ScalarGraphFn& f, ParamStore<double>& params, double h, double tol) {
  std::map<std::string, Tensor<double>> analytic;
  std::uint64_t base_signature = 0;
  {
    ad::Graph<double> g;
    g.set_track_kinks(true);
    const ad::Var root = f(g, params);
    g.backward(root);
    base_signature = g.kink_signature();
    for (const auto& [name, v] : g.params()) analytic[name] = g.grad(v);
  }

  GradCheckReport report;
  for (auto& [name, tensor] : params.entries()) {
    const auto it = analytic.find(name);
    for (std::size_t i = 0; i < tensor.size(); ++i) {
      const double a = it == analytic.end() ? 0.0 : it->second.data[i];
      const double original = tensor.data[i];
      tensor.data[i] = original + h;
      const Probe plus = evaluate(f, params);
      tensor.data[i] = original - h;
      const Probe minus = evaluate(f, params);
      tensor.data[i] = original;
      if (plus.signature != base_signature || minus.signature != base_signature) {
        ++report.skipped;
        continue;
      }
      const double numeric = (plus.value - minus.value) / (2.0 * h);
      const double err = std::abs(a - numeric) / std::max({1.0, std::abs(a), std::abs(numeric)});
      ++report.checked;
      report.max_rel_error = std::max(report.max_rel_error, err);
      if (err > tol) report.failures.push_back({name, i, a, numeric, err});
    }
  }
  return report;
}

}  // namespace homnet
