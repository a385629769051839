#pragma once

#include <functional>
#include <string>
#include <utility>
#include <vector>

#include "gbdnet/tensor.hpp"

namespace gbd {

struct GradCheckReport {
  double max_rel_err = 0.0;
  std::string worst;  // "<name>[flat index]"
  std::int64_t checked = 0;
};

/// Central-difference check of d(f())/d(input) for every element of every
/// listed input. f must rebuild its graph from the inputs' current values on
/// each call and return a single-element tensor. Relative error is
/// |a - n| / max(|a|, |n|), taken as 0 when both magnitudes are below 1e-7.
GradCheckReport grad_check(const std::function<Tensor()>& f,
                           const std::vector<std::pair<std::string, Tensor>>& inputs,
                           double eps = 1e-6);

}  // namespace gbd
