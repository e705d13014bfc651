#include "sealid/neural/layers.h"

#include <cmath>

#include "sealid/error.h"

namespace sealid::nn {

std::string_view layer_kind_name(LayerKind kind) {
  switch (kind) {
    case LayerKind::kDense: return "dense";
    case LayerKind::kRelu: return "relu";
    case LayerKind::kSigmoid: return "sigmoid";
    case LayerKind::kSoftmax: return "softmax";
    case LayerKind::kConv2d: return "conv2d";
    case LayerKind::kMaxPool2d: return "maxpool2d";
    case LayerKind::kFlatten: return "flatten";
  }
  return "?";
}

void Layer::check_input(const Matrix& x) const {
  if (x.cols() != input_shape().size()) {
    throw Error(ErrorCode::kShapeMismatch,
                std::string(layer_kind_name(kind())) + " expects " +
                    std::to_string(input_shape().size()) + " features, got " +
                    std::to_string(x.cols()));
  }
}

namespace {

[[noreturn]] void no_cache(LayerKind kind) {
  throw Error(ErrorCode::kNoCachedActivations,
              std::string(layer_kind_name(kind)) + ": backward without forward_train");
}

void check_grad(const Matrix& grad, Eigen::Index rows, int cols, LayerKind kind) {
  if (grad.rows() != rows || grad.cols() != cols) {
    throw Error(ErrorCode::kShapeMismatch,
                std::string(layer_kind_name(kind)) + ": gradient shape differs from output");
  }
}

nlohmann::ordered_json shape_json(Shape3 s) {
  return {{"channels", s.channels}, {"height", s.height}, {"width", s.width}};
}

}  // namespace

// ------------------------------------------------------------------ Dense

Dense::Dense(int in, int out) : in_(in), out_(out) {
  params_.resize(2);
  params_[0].value = Matrix::Zero(in, out);
  params_[0].grad = Matrix::Zero(in, out);
  params_[1].value = Matrix::Zero(1, out);
  params_[1].grad = Matrix::Zero(1, out);
}

void Dense::init(Rng& rng) {
  const double limit = std::sqrt(6.0 / static_cast<double>(in_ + out_));
  Matrix& w = weights();
  for (Eigen::Index r = 0; r < w.rows(); ++r) {
    for (Eigen::Index c = 0; c < w.cols(); ++c) w(r, c) = rng.uniform(-limit, limit);
  }
  bias().setZero();
}

Matrix Dense::forward(const Matrix& x) const {
  check_input(x);
  Matrix y = x * params_[0].value;
  y.rowwise() += params_[1].value.row(0);
  return y;
}

Matrix Dense::forward_train(const Matrix& x) {
  Matrix y = forward(x);
  input_ = x;
  return y;
}

Matrix Dense::backward(const Matrix& grad_out) {
  if (input_.size() == 0) no_cache(kind());
  check_grad(grad_out, input_.rows(), out_, kind());
  if (!frozen()) {
    params_[0].grad.noalias() = input_.transpose() * grad_out;
    params_[1].grad = grad_out.colwise().sum();
  }
  return grad_out * params_[0].value.transpose();
}

nlohmann::ordered_json Dense::spec() const {
  return {{"kind", "dense"}, {"in", in_}, {"out", out_}};
}

// ------------------------------------------------------------------ Relu

Matrix Relu::forward(const Matrix& x) const {
  check_input(x);
  return x.cwiseMax(0.0);
}

Matrix Relu::forward_train(const Matrix& x) {
  Matrix y = forward(x);
  input_ = x;
  return y;
}

Matrix Relu::backward(const Matrix& grad_out) {
  if (input_.size() == 0) no_cache(kind());
  check_grad(grad_out, input_.rows(), shape_.size(), kind());
  return (input_.array() > 0.0).select(grad_out.array(), 0.0).matrix();
}

nlohmann::ordered_json Relu::spec() const {
  return {{"kind", "relu"}, {"shape", shape_json(shape_)}};
}

// ------------------------------------------------------------------ Sigmoid

Matrix Sigmoid::forward(const Matrix& x) const {
  check_input(x);
  return x.unaryExpr([](double v) {
    // Split by sign so exp never overflows.
    if (v >= 0.0) return 1.0 / (1.0 + std::exp(-v));
    const double e = std::exp(v);
    return e / (1.0 + e);
  });
}

Matrix Sigmoid::forward_train(const Matrix& x) {
  output_ = forward(x);
  return output_;
}

Matrix Sigmoid::backward(const Matrix& grad_out) {
  if (output_.size() == 0) no_cache(kind());
  check_grad(grad_out, output_.rows(), shape_.size(), kind());
  return (grad_out.array() * output_.array() * (1.0 - output_.array())).matrix();
}

nlohmann::ordered_json Sigmoid::spec() const {
  return {{"kind", "sigmoid"}, {"shape", shape_json(shape_)}};
}

// ------------------------------------------------------------------ Softmax

Matrix Softmax::forward(const Matrix& x) const {
  check_input(x);
  Matrix y(x.rows(), x.cols());
  for (Eigen::Index r = 0; r < x.rows(); ++r) {
    const double m = x.row(r).maxCoeff();
    y.row(r) = (x.row(r).array() - m).exp();
    y.row(r) /= y.row(r).sum();
  }
  return y;
}

Matrix Softmax::forward_train(const Matrix& x) {
  output_ = forward(x);
  return output_;
}

Matrix Softmax::backward(const Matrix& grad_out) {
  if (output_.size() == 0) no_cache(kind());
  check_grad(grad_out, output_.rows(), size_, kind());
  Matrix dx(grad_out.rows(), grad_out.cols());
  for (Eigen::Index r = 0; r < grad_out.rows(); ++r) {
    const double dot = grad_out.row(r).dot(output_.row(r));
    dx.row(r) = output_.row(r).array() * (grad_out.row(r).array() - dot);
  }
  return dx;
}

nlohmann::ordered_json Softmax::spec() const {
  return {{"kind", "softmax"}, {"size", size_}};
}

// ------------------------------------------------------------------ Conv2d

Conv2d::Conv2d(int in_channels, int out_channels, int height, int width)
    : in_ch_(in_channels), out_ch_(out_channels), height_(height), width_(width) {
  const int fan_in = in_ch_ * kKernel * kKernel;
  params_.resize(2);
  params_[0].value = Matrix::Zero(out_ch_, fan_in);
  params_[0].grad = Matrix::Zero(out_ch_, fan_in);
  params_[1].value = Matrix::Zero(1, out_ch_);
  params_[1].grad = Matrix::Zero(1, out_ch_);
}

void Conv2d::init(Rng& rng) {
  const double limit = std::sqrt(6.0 / static_cast<double>(in_ch_ * kKernel * kKernel));
  Matrix& w = weights();
  for (Eigen::Index r = 0; r < w.rows(); ++r) {
    for (Eigen::Index c = 0; c < w.cols(); ++c) w(r, c) = rng.uniform(-limit, limit);
  }
  bias().setZero();
}

void Conv2d::im2col(const double* sample, Matrix& cols) const {
  const int hw = height_ * width_;
  cols.resize(in_ch_ * kKernel * kKernel, hw);
  for (int ci = 0; ci < in_ch_; ++ci) {
    const double* plane = sample + static_cast<std::ptrdiff_t>(ci) * hw;
    for (int ky = 0; ky < kKernel; ++ky) {
      for (int kx = 0; kx < kKernel; ++kx) {
        double* dst = cols.row((ci * kKernel + ky) * kKernel + kx).data();
        for (int oy = 0; oy < height_; ++oy) {
          const int iy = oy + ky - 1;
          for (int ox = 0; ox < width_; ++ox) {
            const int ix = ox + kx - 1;
            dst[oy * width_ + ox] = (iy >= 0 && iy < height_ && ix >= 0 && ix < width_)
                                        ? plane[iy * width_ + ix]
                                        : 0.0;
          }
        }
      }
    }
  }
}

void Conv2d::col2im(const Matrix& cols, double* sample) const {
  const int hw = height_ * width_;
  std::fill(sample, sample + static_cast<std::ptrdiff_t>(in_ch_) * hw, 0.0);
  for (int ci = 0; ci < in_ch_; ++ci) {
    double* plane = sample + static_cast<std::ptrdiff_t>(ci) * hw;
    for (int ky = 0; ky < kKernel; ++ky) {
      for (int kx = 0; kx < kKernel; ++kx) {
        const double* src = cols.row((ci * kKernel + ky) * kKernel + kx).data();
        for (int oy = 0; oy < height_; ++oy) {
          const int iy = oy + ky - 1;
          if (iy < 0 || iy >= height_) continue;
          for (int ox = 0; ox < width_; ++ox) {
            const int ix = ox + kx - 1;
            if (ix < 0 || ix >= width_) continue;
            plane[iy * width_ + ix] += src[oy * width_ + ox];
          }
        }
      }
    }
  }
}

Matrix Conv2d::forward(const Matrix& x) const {
  check_input(x);
  const int hw = height_ * width_;
  Matrix y(x.rows(), out_ch_ * hw);
  Matrix cols;
  Matrix out(out_ch_, hw);
  for (Eigen::Index n = 0; n < x.rows(); ++n) {
    im2col(x.row(n).data(), cols);
    out.noalias() = params_[0].value * cols;
    out.colwise() += params_[1].value.row(0).transpose();
    y.row(n) = Eigen::Map<const RowVector>(out.data(), out.size());
  }
  return y;
}

Matrix Conv2d::forward_train(const Matrix& x) {
  Matrix y = forward(x);
  input_ = x;
  return y;
}

Matrix Conv2d::backward(const Matrix& grad_out) {
  if (input_.size() == 0) no_cache(kind());
  const int hw = height_ * width_;
  check_grad(grad_out, input_.rows(), out_ch_ * hw, kind());
  Matrix dx(input_.rows(), input_.cols());
  Matrix cols;
  Matrix dcols;
  if (!frozen()) {
    params_[0].grad.setZero();
    params_[1].grad.setZero();
  }
  for (Eigen::Index n = 0; n < input_.rows(); ++n) {
    Eigen::Map<const Matrix> g(grad_out.row(n).data(), out_ch_, hw);
    im2col(input_.row(n).data(), cols);
    if (!frozen()) {
      params_[0].grad.noalias() += g * cols.transpose();
      params_[1].grad.row(0) += g.rowwise().sum().transpose();
    }
    dcols.noalias() = params_[0].value.transpose() * g;
    col2im(dcols, dx.row(n).data());
  }
  return dx;
}

nlohmann::ordered_json Conv2d::spec() const {
  return {{"kind", "conv2d"},         {"in_channels", in_ch_}, {"out_channels", out_ch_},
          {"height", height_},        {"width", width_},       {"kernel", kKernel},
          {"stride", 1},              {"padding", 1}};
}

// ------------------------------------------------------------------ MaxPool2d

MaxPool2d::MaxPool2d(int channels, int height, int width)
    : channels_(channels), height_(height), width_(width) {
  if (height < 2 || width < 2) {
    throw Error(ErrorCode::kShapeMismatch, "maxpool2d needs at least a 2x2 input");
  }
}

Matrix MaxPool2d::pool(const Matrix& x, std::vector<int>* argmax) const {
  check_input(x);
  const int oh = height_ / 2, ow = width_ / 2;
  const int out_size = channels_ * oh * ow;
  Matrix y(x.rows(), out_size);
  if (argmax) argmax->assign(static_cast<std::size_t>(x.rows()) * out_size, 0);
  for (Eigen::Index n = 0; n < x.rows(); ++n) {
    const double* in = x.row(n).data();
    for (int c = 0; c < channels_; ++c) {
      for (int oy = 0; oy < oh; ++oy) {
        for (int ox = 0; ox < ow; ++ox) {
          int best = (c * height_ + 2 * oy) * width_ + 2 * ox;
          for (int dy = 0; dy < 2; ++dy) {
            for (int dx = 0; dx < 2; ++dx) {
              const int idx = (c * height_ + 2 * oy + dy) * width_ + 2 * ox + dx;
              if (in[idx] > in[best]) best = idx;
            }
          }
          const int o = (c * oh + oy) * ow + ox;
          y(n, o) = in[best];
          if (argmax) (*argmax)[static_cast<std::size_t>(n) * out_size + o] = best;
        }
      }
    }
  }
  return y;
}

Matrix MaxPool2d::forward(const Matrix& x) const { return pool(x, nullptr); }

Matrix MaxPool2d::forward_train(const Matrix& x) {
  Matrix y = pool(x, &argmax_);
  cached_rows_ = x.rows();
  return y;
}

Matrix MaxPool2d::backward(const Matrix& grad_out) {
  if (argmax_.empty()) no_cache(kind());
  const int out_size = output_shape().size();
  check_grad(grad_out, cached_rows_, out_size, kind());
  Matrix dx = Matrix::Zero(cached_rows_, input_shape().size());
  for (Eigen::Index n = 0; n < cached_rows_; ++n) {
    for (int o = 0; o < out_size; ++o) {
      dx(n, argmax_[static_cast<std::size_t>(n) * out_size + o]) += grad_out(n, o);
    }
  }
  return dx;
}

nlohmann::ordered_json MaxPool2d::spec() const {
  return {{"kind", "maxpool2d"}, {"channels", channels_}, {"height", height_}, {"width", width_}};
}

// ------------------------------------------------------------------ Flatten

Matrix Flatten::forward(const Matrix& x) const {
  check_input(x);
  return x;
}

Matrix Flatten::forward_train(const Matrix& x) {
  cached_ = true;
  return forward(x);
}

Matrix Flatten::backward(const Matrix& grad_out) {
  if (!cached_) no_cache(kind());
  return grad_out;
}

nlohmann::ordered_json Flatten::spec() const {
  return {{"kind", "flatten"}, {"shape", shape_json(in_)}};
}

}  // namespace sealid::nn
