// Norm budget describing the bounded-parameter function class: per-block norm
// ceilings plus the conjugate exponent pair (p, q) used by every norm in the
// class definition and in the perturbation bounds.
#pragma once

#include <cmath>
#include <stdexcept>

#include "setrl/matrix.hpp"

namespace setrl {

struct NormBudget {
  double B_a = 2.0;
  double B_b = 2.0;
  double B_QK = 2.0;
  double B_V = 2.0;
  double B_w = 2.0;
  double p = 2.0;
  double q = 2.0;

  // All ceilings must exceed 1 (the class is vacuous otherwise) and (p, q)
  // must be Hoelder conjugates.  Throws std::domain_error on violation.
  void validate() const {
    if (!(B_a > 1.0 && B_b > 1.0 && B_QK > 1.0 && B_V > 1.0 && B_w > 1.0))
      throw std::domain_error("NormBudget: all budget entries must be > 1");
    if (p < 1.0 || q < 1.0) throw std::domain_error("NormBudget: p, q must be >= 1");
    const double ip = std::isinf(p) ? 0.0 : 1.0 / p;
    const double iq = std::isinf(q) ? 0.0 : 1.0 / q;
    if (std::abs(ip + iq - 1.0) > 1e-12)
      throw std::domain_error("NormBudget: p and q must be conjugate (1/p + 1/q = 1)");
  }
};

}  // namespace setrl
