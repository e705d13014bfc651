#include "sealid/neural/adam.h"

#include <cmath>

#include "sealid/error.h"

namespace sealid::nn {

void adam_update(Matrix& value, const Matrix& grad, Matrix& m, Matrix& v, long timestep,
                 double lr) {
  m = Adam::kBeta1 * m + (1.0 - Adam::kBeta1) * grad;
  v = Adam::kBeta2 * v + (1.0 - Adam::kBeta2) * grad.cwiseProduct(grad);
  const double c1 = 1.0 - std::pow(Adam::kBeta1, static_cast<double>(timestep));
  const double c2 = 1.0 - std::pow(Adam::kBeta2, static_cast<double>(timestep));
  value.array() -= lr * (m.array() / c1) / ((v.array() / c2).sqrt() + Adam::kEps);
}

void Adam::step(const std::vector<Param*>& params) {
  if (state_.m.empty()) {
    for (const Param* p : params) {
      state_.m.push_back(Matrix::Zero(p->value.rows(), p->value.cols()));
      state_.v.push_back(Matrix::Zero(p->value.rows(), p->value.cols()));
    }
  }
  if (state_.m.size() != params.size()) {
    throw Error(ErrorCode::kShapeMismatch, "Adam parameter list changed between steps");
  }
  ++state_.timestep;
  for (std::size_t i = 0; i < params.size(); ++i) {
    adam_update(params[i]->value, params[i]->grad, state_.m[i], state_.v[i], state_.timestep,
                lr_);
  }
}

}  // namespace sealid::nn
