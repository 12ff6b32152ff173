#pragma once

#include <string>

#include "funcdet/problem.hpp"

namespace problems {

using funcdet::ProblemSpec;

inline ProblemSpec unit(const std::string& r, const std::string& metric = "1") {
  return ProblemSpec::from_strings(1, 0, 1, metric, {r});
}

// Two-component operator on [-l/2, l/2] with the e^{2 i mu x} coupling;
// `shift` is added to both diagonal entries.
inline ProblemSpec twisted_system(double shift = 0.0, double mu = 0.5, double l = 4.0) {
  const std::string m = "(" + std::to_string(mu) + ")";
  const std::string d = "1-2*" + m + "^2+(" + std::to_string(shift) + ")";
  const std::string c = "(1-" + m + "^2)";
  return ProblemSpec::from_strings(2, -l / 2, l / 2, "1",
                                   {d, c + "*cos(2*" + m + "*x)", c + "*cos(2*" + m + "*x)", d},
                                   {"0", c + "*sin(2*" + m + "*x)", "-" + c + "*sin(2*" + m + "*x)", "0"});
}

}  // namespace problems
