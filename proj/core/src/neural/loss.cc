#include "sealid/neural/loss.h"

#include <algorithm>
#include <cmath>
#include <string>

#include "sealid/error.h"

namespace sealid::nn {

std::string_view loss_kind_name(LossKind kind) {
  switch (kind) {
    case LossKind::kMse: return "mse";
    case LossKind::kBce: return "bce";
    case LossKind::kCe: return "ce";
    case LossKind::kComposite: return "composite";
  }
  return "?";
}

LossKind parse_loss_kind(std::string_view name) {
  if (name == "mse") return LossKind::kMse;
  if (name == "bce") return LossKind::kBce;
  if (name == "ce") return LossKind::kCe;
  if (name == "composite") return LossKind::kComposite;
  throw Error(ErrorCode::kSchemaMismatch, "unknown loss kind '" + std::string(name) + "'");
}

namespace {

void same_shape(const Matrix& a, const Matrix& b, const char* what) {
  if (a.rows() != b.rows() || a.cols() != b.cols()) {
    throw Error(ErrorCode::kShapeMismatch, std::string(what) + ": prediction and target differ");
  }
  if (a.size() == 0) throw Error(ErrorCode::kShapeMismatch, std::string(what) + ": empty batch");
}

}  // namespace

LossResult mse(const Matrix& pred, const Matrix& target) {
  same_shape(pred, target, "mse");
  const double n = static_cast<double>(pred.size());
  const Matrix diff = pred - target;
  return {diff.squaredNorm() / n, (2.0 / n) * diff};
}

LossResult bce(const Matrix& pred, const Matrix& target) {
  same_shape(pred, target, "bce");
  const double n = static_cast<double>(pred.size());
  LossResult out;
  out.grad.resize(pred.rows(), pred.cols());
  double sum = 0.0;
  for (Eigen::Index i = 0; i < pred.size(); ++i) {
    const double p = std::clamp(pred.data()[i], kProbClip, 1.0 - kProbClip);
    const double y = target.data()[i];
    sum -= y * std::log(p) + (1.0 - y) * std::log(1.0 - p);
    out.grad.data()[i] = (p - y) / (p * (1.0 - p)) / n;
  }
  out.value = sum / n;
  return out;
}

LossResult ce(const Matrix& pred, const Matrix& target) {
  same_shape(pred, target, "ce");
  const double m = static_cast<double>(pred.rows());
  LossResult out;
  out.grad.resize(pred.rows(), pred.cols());
  double sum = 0.0;
  for (Eigen::Index i = 0; i < pred.size(); ++i) {
    const double p = std::max(pred.data()[i], kProbClip);
    const double y = target.data()[i];
    sum -= y * std::log(p);
    out.grad.data()[i] = -y / p / m;
  }
  out.value = sum / m;
  return out;
}

Matrix bce_logit_grad(const Matrix& prob, const Matrix& target) {
  same_shape(prob, target, "bce");
  return (prob - target) / static_cast<double>(prob.size());
}

Matrix ce_logit_grad(const Matrix& prob, const Matrix& target) {
  same_shape(prob, target, "ce");
  return (prob - target) / static_cast<double>(prob.rows());
}

}  // namespace sealid::nn
