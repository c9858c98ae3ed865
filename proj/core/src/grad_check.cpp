#include "fn/grad_check.hpp"

#include <cmath>
#include <stdexcept>

namespace fn::ad {

namespace {

double eval_scalar(const ScalarFn& f, const std::vector<Tensor>& inputs) {
  Tape tape;
  std::vector<Var> vars;
  vars.reserve(inputs.size());
  for (const auto& t : inputs) vars.push_back(tape.leaf(t, false));
  const Var y = f(tape, vars);
  if (tape.val(y).numel() != 1) throw std::invalid_argument("grad_check: function output must be scalar");
  return tape.val(y).v[0];
}

}  // namespace

GradCheckReport grad_check(const ScalarFn& f, const std::vector<Tensor>& inputs, double h, double tol) {
  std::vector<Tensor> analytic;
  {
    Tape tape;
    std::vector<Var> vars;
    vars.reserve(inputs.size());
    for (const auto& t : inputs) vars.push_back(tape.leaf(t, true));
    const Var y = f(tape, vars);
    if (tape.val(y).numel() != 1) throw std::invalid_argument("grad_check: function output must be scalar");
    tape.backward(y);
    for (const Var v : vars) analytic.push_back(tape.grad(v));
  }

  GradCheckReport report;
  std::vector<Tensor> work = inputs;
  for (std::size_t i = 0; i < inputs.size(); ++i) {
    for (std::size_t k = 0; k < inputs[i].v.size(); ++k) {
      const double orig = work[i].v[k];
      work[i].v[k] = orig + h;
      const double fp = eval_scalar(f, work);
      work[i].v[k] = orig - h;
      const double fm = eval_scalar(f, work);
      work[i].v[k] = orig;
      const double fd = (fp - fm) / (2.0 * h);
      const double g = analytic[i].v[k];
      const double denom = std::max({1.0, std::abs(g), std::abs(fd)});
      const double err = std::abs(g - fd) / denom;
      if (err > report.max_rel_error) {
        report.max_rel_error = err;
        report.worst_input = static_cast<int>(i);
        report.worst_coord = static_cast<std::int64_t>(k);
      }
    }
  }
  report.passed = report.max_rel_error < tol;
  return report;
}

}  // namespace fn::ad
