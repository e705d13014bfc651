#ifndef SEALID_NEURAL_LAYERS_H_
#define SEALID_NEURAL_LAYERS_H_

#include <memory>
#include <span>
#include <string_view>
#include <vector>

#include "json.hpp"
#include "sealid/matrix.h"
#include "sealid/rng.h"

namespace sealid::nn {

enum class LayerKind { kDense, kRelu, kSigmoid, kSoftmax, kConv2d, kMaxPool2d, kFlatten };

std::string_view layer_kind_name(LayerKind kind);

// Feature-map shape of one sample. Vectors are (n, 1, 1).
struct Shape3 {
  int channels = 0;
  int height = 1;
  int width = 1;

  int size() const { return channels * height * width; }
  bool operator==(const Shape3&) const = default;
};

struct Param {
  Matrix value;
  Matrix grad;
};

// A differentiable layer over row-major batches. Image activations are stored
// one sample per row in channel-major (c, h, w) order.
//
// forward() is const and caches nothing, so an immutable layer can serve
// concurrent callers. forward_train() caches what backward() needs.
// backward() returns d(loss)/d(input); when the layer is frozen its parameter
// gradients are left at zero.
class Layer {
 public:
  virtual ~Layer() = default;

  virtual LayerKind kind() const = 0;
  virtual Shape3 input_shape() const = 0;
  virtual Shape3 output_shape() const = 0;

  virtual Matrix forward(const Matrix& x) const = 0;
  virtual Matrix forward_train(const Matrix& x) = 0;
  virtual Matrix backward(const Matrix& grad_out) = 0;

  virtual std::span<Param> params() { return {}; }
  virtual std::span<const Param> params() const { return {}; }

  virtual std::unique_ptr<Layer> clone() const = 0;
  // Kind and shape fields (no weights).
  virtual nlohmann::ordered_json spec() const = 0;
  virtual void clear_cache() = 0;

  bool frozen() const { return frozen_; }
  void set_frozen(bool f) { frozen_ = f; }

 protected:
  void check_input(const Matrix& x) const;

 private:
  bool frozen_ = false;
};

class Dense final : public Layer {
 public:
  Dense(int in, int out);

  LayerKind kind() const override { return LayerKind::kDense; }
  Shape3 input_shape() const override { return {in_, 1, 1}; }
  Shape3 output_shape() const override { return {out_, 1, 1}; }
  Matrix forward(const Matrix& x) const override;
  Matrix forward_train(const Matrix& x) override;
  Matrix backward(const Matrix& grad_out) override;
  std::span<Param> params() override { return params_; }
  std::span<const Param> params() const override { return params_; }
  std::unique_ptr<Layer> clone() const override { return std::make_unique<Dense>(*this); }
  nlohmann::ordered_json spec() const override;
  void clear_cache() override { input_.resize(0, 0); }

  // Glorot-uniform weights, zero bias.
  void init(Rng& rng);

  Matrix& weights() { return params_[0].value; }  // in x out
  Matrix& bias() { return params_[1].value; }     // 1 x out
  const Matrix& weights() const { return params_[0].value; }
  const Matrix& bias() const { return params_[1].value; }

 private:
  int in_;
  int out_;
  std::vector<Param> params_;
  Matrix input_;
};

// Element-wise activations; `shape` only records the feature layout.
class Relu final : public Layer {
 public:
  explicit Relu(Shape3 shape) : shape_(shape) {}
  LayerKind kind() const override { return LayerKind::kRelu; }
  Shape3 input_shape() const override { return shape_; }
  Shape3 output_shape() const override { return shape_; }
  Matrix forward(const Matrix& x) const override;
  Matrix forward_train(const Matrix& x) override;
  Matrix backward(const Matrix& grad_out) override;
  std::unique_ptr<Layer> clone() const override { return std::make_unique<Relu>(*this); }
  nlohmann::ordered_json spec() const override;
  void clear_cache() override { input_.resize(0, 0); }

 private:
  Shape3 shape_;
  Matrix input_;
};

class Sigmoid final : public Layer {
 public:
  explicit Sigmoid(Shape3 shape) : shape_(shape) {}
  LayerKind kind() const override { return LayerKind::kSigmoid; }
  Shape3 input_shape() const override { return shape_; }
  Shape3 output_shape() const override { return shape_; }
  Matrix forward(const Matrix& x) const override;
  Matrix forward_train(const Matrix& x) override;
  Matrix backward(const Matrix& grad_out) override;
  std::unique_ptr<Layer> clone() const override { return std::make_unique<Sigmoid>(*this); }
  nlohmann::ordered_json spec() const override;
  void clear_cache() override { output_.resize(0, 0); }

 private:
  Shape3 shape_;
  Matrix output_;
};

// Row-wise softmax over a flat feature vector.
class Softmax final : public Layer {
 public:
  explicit Softmax(int size) : size_(size) {}
  LayerKind kind() const override { return LayerKind::kSoftmax; }
  Shape3 input_shape() const override { return {size_, 1, 1}; }
  Shape3 output_shape() const override { return {size_, 1, 1}; }
  Matrix forward(const Matrix& x) const override;
  Matrix forward_train(const Matrix& x) override;
  Matrix backward(const Matrix& grad_out) override;
  std::unique_ptr<Layer> clone() const override { return std::make_unique<Softmax>(*this); }
  nlohmann::ordered_json spec() const override;
  void clear_cache() override { output_.resize(0, 0); }

 private:
  int size_;
  Matrix output_;
};

// 3x3 convolution, stride 1, zero padding 1 (spatial size preserved).
class Conv2d final : public Layer {
 public:
  static constexpr int kKernel = 3;

  Conv2d(int in_channels, int out_channels, int height, int width);

  LayerKind kind() const override { return LayerKind::kConv2d; }
  Shape3 input_shape() const override { return {in_ch_, height_, width_}; }
  Shape3 output_shape() const override { return {out_ch_, height_, width_}; }
  Matrix forward(const Matrix& x) const override;
  Matrix forward_train(const Matrix& x) override;
  Matrix backward(const Matrix& grad_out) override;
  std::span<Param> params() override { return params_; }
  std::span<const Param> params() const override { return params_; }
  std::unique_ptr<Layer> clone() const override { return std::make_unique<Conv2d>(*this); }
  nlohmann::ordered_json spec() const override;
  void clear_cache() override { input_.resize(0, 0); }

  // He-uniform weights, zero bias.
  void init(Rng& rng);

  // out_channels x (in_channels * 9), column index ci*9 + ky*3 + kx.
  Matrix& weights() { return params_[0].value; }
  Matrix& bias() { return params_[1].value; }  // 1 x out_channels

 private:
  void im2col(const double* sample, Matrix& cols) const;
  void col2im(const Matrix& cols, double* sample) const;

  int in_ch_;
  int out_ch_;
  int height_;
  int width_;
  std::vector<Param> params_;
  Matrix input_;
};

// 2x2 max pooling, stride 2; odd trailing rows/columns are dropped.
class MaxPool2d final : public Layer {
 public:
  MaxPool2d(int channels, int height, int width);

  LayerKind kind() const override { return LayerKind::kMaxPool2d; }
  Shape3 input_shape() const override { return {channels_, height_, width_}; }
  Shape3 output_shape() const override { return {channels_, height_ / 2, width_ / 2}; }
  Matrix forward(const Matrix& x) const override;
  Matrix forward_train(const Matrix& x) override;
  Matrix backward(const Matrix& grad_out) override;
  std::unique_ptr<Layer> clone() const override { return std::make_unique<MaxPool2d>(*this); }
  nlohmann::ordered_json spec() const override;
  void clear_cache() override { argmax_.clear(); }

 private:
  Matrix pool(const Matrix& x, std::vector<int>* argmax) const;

  int channels_;
  int height_;
  int width_;
  std::vector<int> argmax_;  // flat input index per (sample, output) cell
  Eigen::Index cached_rows_ = 0;
};

// (c, h, w) -> (c*h*w, 1, 1); the row data is already flat.
class Flatten final : public Layer {
 public:
  explicit Flatten(Shape3 in) : in_(in) {}
  LayerKind kind() const override { return LayerKind::kFlatten; }
  Shape3 input_shape() const override { return in_; }
  Shape3 output_shape() const override { return {in_.size(), 1, 1}; }
  Matrix forward(const Matrix& x) const override;
  Matrix forward_train(const Matrix& x) override;
  Matrix backward(const Matrix& grad_out) override;
  std::unique_ptr<Layer> clone() const override { return std::make_unique<Flatten>(*this); }
  nlohmann::ordered_json spec() const override;
  void clear_cache() override { cached_ = false; }

 private:
  Shape3 in_;
  bool cached_ = false;
};

}  // namespace sealid::nn

#endif  // SEALID_NEURAL_LAYERS_H_
