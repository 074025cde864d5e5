#include "tpgcn/gradcheck.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

namespace tpgcn {

bool GradCheckReport::passed() const {
  return std::all_of(entries.begin(), entries.end(), [](const auto& e) { return e.passed; });
}

double GradCheckReport::worst() const {
  double w = 0.0;
  for (const auto& e : entries) w = std::max(w, e.max_rel_error);
  return w;
}

std::string GradCheckReport::summary() const {
  std::ostringstream os;
  for (const auto& e : entries) {
    os << (e.passed ? "ok   " : "FAIL ") << e.name << " max_rel_err=" << e.max_rel_error << " checked=" << e.checked
       << '\n';
  }
  return os.str();
}

GradCheckReport grad_check(const std::function<Var<double>()>& fn, const std::vector<Parameter<double>*>& params,
                           GradCheckOptions options) {
  for (auto* p : params) p->zero_grad();
  {
    Tape<double> tape;
    Var<double> loss = fn();
    tape.backward(loss);
  }
  std::vector<Tensor<double>> analytic;
  analytic.reserve(params.size());
  for (auto* p : params) analytic.push_back(p->grad());

  auto evaluate = [&fn]() {
    Var<double> out = fn();
    if (out.value().numel() != 1) fail(ErrorCode::ShapeMismatch, "grad_check needs a scalar function");
    return out.value()[0];
  };

  GradCheckReport report;
  report.tolerance = options.tolerance;
  for (std::size_t pi = 0; pi < params.size(); ++pi) {
    Parameter<double>& p = *params[pi];
    GradCheckEntry entry{p.name(), 0.0, 0, true};
    const std::int64_t n = p.numel();
    std::int64_t stride = 1;
    if (options.max_checks_per_parameter > 0 && n > options.max_checks_per_parameter) {
      stride = (n + options.max_checks_per_parameter - 1) / options.max_checks_per_parameter;
    }
    for (std::int64_t i = 0; i < n; i += stride) {
      const double saved = p.value()[i];
      p.value()[i] = saved + options.step;
      const double up = evaluate();
      p.value()[i] = saved - options.step;
      const double down = evaluate();
      p.value()[i] = saved;
      const double numeric = (up - down) / (2.0 * options.step);
      const double err = std::abs(analytic[pi][i] - numeric) / std::max(1.0, std::abs(numeric));
      entry.max_rel_error = std::max(entry.max_rel_error, err);
      ++entry.checked;
    }
    entry.passed = entry.max_rel_error < options.tolerance;
    report.entries.push_back(entry);
  }
  return report;
}

}  // namespace tpgcn
