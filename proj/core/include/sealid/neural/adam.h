#ifndef SEALID_NEURAL_ADAM_H_
#define SEALID_NEURAL_ADAM_H_

#include <vector>

#include "sealid/neural/layers.h"

namespace sealid::nn {

struct AdamState {
  std::vector<Matrix> m;
  std::vector<Matrix> v;
  long timestep = 0;
};

// Adam with bias-corrected moments. beta1 = 0.9, beta2 = 0.999, eps = 1e-8.
class Adam {
 public:
  static constexpr double kBeta1 = 0.9;
  static constexpr double kBeta2 = 0.999;
  static constexpr double kEps = 1e-8;

  explicit Adam(double learning_rate) : lr_(learning_rate) {}

  // `params` must be the same list, in the same order, on every call.
  void step(const std::vector<Param*>& params);

  double learning_rate() const { return lr_; }
  const AdamState& state() const { return state_; }

 private:
  double lr_;
  AdamState state_;
};

// One Adam update of `value` given `grad`; the free-function form used by
// the input-space optimizer.
void adam_update(Matrix& value, const Matrix& grad, Matrix& m, Matrix& v, long timestep,
                 double lr);

}  // namespace sealid::nn

#endif  // SEALID_NEURAL_ADAM_H_
