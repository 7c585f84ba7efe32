#pragma once

#include <string>
#include <vector>

#include "tve/material.hpp"

namespace tve {

struct CheckResult {
  std::string name;
  bool passed = false;
  std::string detail;
};

// Invariant suite behind `tve check-material`: parameter constraints, then
// sampled structural checks (frame indifference, coercivity, derivative
// consistency, heat capacity bounds) when the parameters are admissible.
std::vector<CheckResult> run_material_suite(const MaterialParams& params, unsigned seed = 2024);

}  // namespace tve
