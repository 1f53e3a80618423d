#pragma once

#include <vector>

#include "flowhom/common.hpp"

namespace flowhom {

// Multivariate polynomial as a list of (coefficient, exponent vector) terms.
// Config files declare constraints and scalar fields in this form.
struct Polynomial {
  struct Term {
    double coeff;
    std::vector<int> exponents;  // one entry per ambient coordinate
  };
  std::vector<Term> terms;
  int dim = 0;

  double operator()(const Vec& x) const {
    double acc = 0.0;
    for (const auto& t : terms) {
      double m = t.coeff;
      for (int i = 0; i < dim; ++i)
        for (int e = 0; e < t.exponents[i]; ++e) m *= x[i];
      acc += m;
    }
    return acc;
  }
};

inline ScalarField as_field(Polynomial p) {
  return [p = std::move(p)](const Vec& x) { return p(x); };
}

}  // namespace flowhom
