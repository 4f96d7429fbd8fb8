#pragma once

// One-dimensional rules on [0, 1] and the helpers built on them.

#include <functional>
#include <vector>

namespace strataquad {

struct Rule1D {
  std::vector<double> nodes;
  std::vector<double> weights;

  std::size_t size() const { return nodes.size(); }
};

// Gauss-Legendre rule with `order` nodes mapped to [0, 1].
const Rule1D& gauss_legendre(int order);

// Composite Gauss-Legendre on the dyadic shells [2^-(k+1), 2^-k],
// k = 0..shells-1, plus a final panel [0, 2^-shells]. Integrands with an
// algebraic singularity at 0 converge at the per-shell rate.
Rule1D graded_rule(int order, int shells);

// Neumaier compensated summation.
class CompensatedSum {
 public:
  void add(double x);
  double value() const { return sum_ + compensation_; }

 private:
  double sum_ = 0.0;
  double compensation_ = 0.0;
};

struct ShellIntegral {
  double value = 0.0;
  // Ratio of the two innermost shell contributions; close to 2^-(theta+1)
  // for an integrand behaving like t^theta at the origin.
  double tail_ratio = 0.0;
  bool integrable = true;
};

// Integral of f over [0, b] for f possibly singular at 0. Dyadic shells down
// to b 2^-shells; the remaining panel is replaced by the geometric tail
// implied by the innermost shells. integrable == false when that ratio
// indicates a divergent integral.
ShellIntegral integrate_toward_origin(const std::function<double(double)>& f,
                                      double b, int order = 16, int shells = 48);

}  // namespace strataquad
