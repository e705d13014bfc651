#ifndef SEALID_NEURAL_STACK_H_
#define SEALID_NEURAL_STACK_H_

#include <memory>
#include <vector>

#include "json.hpp"
#include "sealid/neural/layers.h"

namespace sealid::nn {

enum class Activation { kNone, kRelu, kSigmoid, kSoftmax };

// Ordered layers; the unit of training, freezing and serialization.
// Copying deep-copies every layer.
class LayerStack {
 public:
  LayerStack() = default;
  LayerStack(const LayerStack& other);
  LayerStack& operator=(const LayerStack& other);
  LayerStack(LayerStack&&) noexcept = default;
  LayerStack& operator=(LayerStack&&) noexcept = default;

  // Throws kShapeMismatch when the layer input does not match the current
  // output shape.
  void add(std::unique_ptr<Layer> layer);

  template <typename L, typename... Args>
  L& emplace(Args&&... args) {
    auto layer = std::make_unique<L>(std::forward<Args>(args)...);
    L& ref = *layer;
    add(std::move(layer));
    return ref;
  }

  std::size_t size() const { return layers_.size(); }
  bool empty() const { return layers_.empty(); }
  Layer& layer(std::size_t i) { return *layers_.at(i); }
  const Layer& layer(std::size_t i) const { return *layers_.at(i); }

  Shape3 input_shape() const;
  Shape3 output_shape() const;
  int input_size() const { return input_shape().size(); }
  int output_size() const { return output_shape().size(); }

  Matrix forward(const Matrix& x) const;
  Matrix forward_train(const Matrix& x);
  // Propagates d(loss)/d(output) to d(loss)/d(input), filling parameter
  // gradients of unfrozen layers. With skip_last the gradient is taken to be
  // with respect to the input of the final layer (fused sigmoid/softmax
  // losses).
  Matrix backward(const Matrix& grad_out, bool skip_last = false);

  void set_frozen(bool frozen);
  bool all_frozen() const;

  // Parameters of unfrozen layers, in layer order.
  std::vector<Param*> trainable_params();
  std::size_t parameter_count() const;
  void zero_grad();
  void clear_cache();

  // Glorot-uniform dense and He-uniform conv weights, zero biases, drawn in
  // layer order.
  void init(Rng& rng);

  // {"layers": [{spec..., "frozen": b, "weights": [...], "bias": [...]}]}
  // with row-major weight arrays.
  nlohmann::ordered_json to_json() const;
  // Throws kSchemaMismatch for malformed documents and kShapeMismatch for
  // weight arrays of the wrong length.
  static LayerStack from_json(const nlohmann::ordered_json& j);

 private:
  std::vector<std::unique_ptr<Layer>> layers_;
};

// Dense chain sizes[0] -> ... -> sizes.back(), `hidden` after every
// non-final dense layer and `head` after the last one.
LayerStack make_mlp(const std::vector<int>& sizes, Activation hidden, Activation head);

void append_activation(LayerStack& stack, Activation act);

}  // namespace sealid::nn

#endif  // SEALID_NEURAL_STACK_H_
