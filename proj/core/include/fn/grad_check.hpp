#pragma once

#include <cstdint>
#include <functional>
#include <vector>

#include "fn/autodiff.hpp"

namespace fn::ad {

struct GradCheckReport {
  double max_rel_error = 0.0;
  int worst_input = -1;
  std::int64_t worst_coord = -1;
  bool passed = false;
};

using ScalarFn = std::function<Var(Tape&, const std::vector<Var>&)>;

// Central finite differences per coordinate against the tape gradient.
// Errors are relative once values leave the unit scale:
// |g - fd| / max(1, |g|, |fd|).
GradCheckReport grad_check(const ScalarFn& f, const std::vector<Tensor>& inputs,
                           double h = 1e-5, double tol = 1e-4);

}  // namespace fn::ad
