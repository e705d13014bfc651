#ifndef SEALID_NEURAL_LOSS_H_
#define SEALID_NEURAL_LOSS_H_

#include <string_view>

#include "sealid/matrix.h"

namespace sealid::nn {

inline constexpr double kProbClip = 1e-7;

enum class LossKind { kMse, kBce, kCe, kComposite };

std::string_view loss_kind_name(LossKind kind);
LossKind parse_loss_kind(std::string_view name);

struct LossResult {
  double value = 0.0;
  Matrix grad;  // d(value)/d(pred)
};

// (1/n) sum (pred - target)^2 over all n entries.
LossResult mse(const Matrix& pred, const Matrix& target);

// Mean over entries of -[y ln p + (1-y) ln(1-p)], p clipped to [eps, 1-eps].
LossResult bce(const Matrix& pred, const Matrix& target);

// -(1/m) sum_rows sum_k y_k ln p_k over m rows, p clipped to [eps, 1].
LossResult ce(const Matrix& pred, const Matrix& target);

// Gradient with respect to the logits feeding a sigmoid (bce) or softmax
// (ce) head: (p - y) / n and (p - y) / m respectively.
Matrix bce_logit_grad(const Matrix& prob, const Matrix& target);
Matrix ce_logit_grad(const Matrix& prob, const Matrix& target);

}  // namespace sealid::nn

#endif  // SEALID_NEURAL_LOSS_H_
