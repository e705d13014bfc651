#include "sealid/neural/stack.h"

#include "sealid/error.h"

namespace sealid::nn {

LayerStack::LayerStack(const LayerStack& other) {
  layers_.reserve(other.layers_.size());
  for (const auto& l : other.layers_) layers_.push_back(l->clone());
}

LayerStack& LayerStack::operator=(const LayerStack& other) {
  if (this != &other) {
    LayerStack copy(other);
    layers_ = std::move(copy.layers_);
  }
  return *this;
}

void LayerStack::add(std::unique_ptr<Layer> layer) {
  if (!layers_.empty() && layers_.back()->output_shape().size() != layer->input_shape().size()) {
    throw Error(ErrorCode::kShapeMismatch,
                std::string(layer_kind_name(layer->kind())) + " input " +
                    std::to_string(layer->input_shape().size()) + " does not follow output " +
                    std::to_string(layers_.back()->output_shape().size()));
  }
  layers_.push_back(std::move(layer));
}

Shape3 LayerStack::input_shape() const {
  if (layers_.empty()) throw Error(ErrorCode::kShapeMismatch, "empty layer stack");
  return layers_.front()->input_shape();
}

Shape3 LayerStack::output_shape() const {
  if (layers_.empty()) throw Error(ErrorCode::kShapeMismatch, "empty layer stack");
  return layers_.back()->output_shape();
}

Matrix LayerStack::forward(const Matrix& x) const {
  if (layers_.empty()) throw Error(ErrorCode::kShapeMismatch, "empty layer stack");
  Matrix h = layers_.front()->forward(x);
  for (std::size_t i = 1; i < layers_.size(); ++i) h = layers_[i]->forward(h);
  return h;
}

Matrix LayerStack::forward_train(const Matrix& x) {
  if (layers_.empty()) throw Error(ErrorCode::kShapeMismatch, "empty layer stack");
  Matrix h = layers_.front()->forward_train(x);
  for (std::size_t i = 1; i < layers_.size(); ++i) h = layers_[i]->forward_train(h);
  return h;
}

Matrix LayerStack::backward(const Matrix& grad_out, bool skip_last) {
  if (layers_.empty()) throw Error(ErrorCode::kShapeMismatch, "empty layer stack");
  std::size_t top = layers_.size();
  if (skip_last) --top;
  Matrix g = grad_out;
  for (std::size_t i = top; i-- > 0;) g = layers_[i]->backward(g);
  return g;
}

void LayerStack::set_frozen(bool frozen) {
  for (auto& l : layers_) l->set_frozen(frozen);
}

bool LayerStack::all_frozen() const {
  for (const auto& l : layers_) {
    if (!l->frozen()) return false;
  }
  return true;
}

std::vector<Param*> LayerStack::trainable_params() {
  std::vector<Param*> out;
  for (auto& l : layers_) {
    if (l->frozen()) continue;
    for (auto& p : l->params()) out.push_back(&p);
  }
  return out;
}

std::size_t LayerStack::parameter_count() const {
  std::size_t n = 0;
  for (const auto& l : layers_) {
    for (const auto& p : l->params()) n += static_cast<std::size_t>(p.value.size());
  }
  return n;
}

void LayerStack::zero_grad() {
  for (auto& l : layers_) {
    for (auto& p : l->params()) p.grad.setZero();
  }
}

void LayerStack::clear_cache() {
  for (auto& l : layers_) l->clear_cache();
}

void LayerStack::init(Rng& rng) {
  for (auto& l : layers_) {
    if (auto* d = dynamic_cast<Dense*>(l.get())) {
      d->init(rng);
    } else if (auto* c = dynamic_cast<Conv2d*>(l.get())) {
      c->init(rng);
    }
  }
}

namespace {

std::vector<double> flat(const Matrix& m) {
  return std::vector<double>(m.data(), m.data() + m.size());
}

Shape3 read_shape(const nlohmann::ordered_json& j) {
  return {j.at("channels").get<int>(), j.at("height").get<int>(), j.at("width").get<int>()};
}

void read_param(const nlohmann::ordered_json& j, const char* key, Param& p) {
  const auto v = j.at(key).get<std::vector<double>>();
  if (v.size() != static_cast<std::size_t>(p.value.size())) {
    throw Error(ErrorCode::kShapeMismatch, std::string(key) + " has " + std::to_string(v.size()) +
                                               " values, expected " +
                                               std::to_string(p.value.size()));
  }
  std::copy(v.begin(), v.end(), p.value.data());
  p.grad.setZero();
}

std::unique_ptr<Layer> layer_from_json(const nlohmann::ordered_json& j) {
  const auto kind = j.at("kind").get<std::string>();
  std::unique_ptr<Layer> layer;
  if (kind == "dense") {
    layer = std::make_unique<Dense>(j.at("in").get<int>(), j.at("out").get<int>());
  } else if (kind == "relu") {
    layer = std::make_unique<Relu>(read_shape(j.at("shape")));
  } else if (kind == "sigmoid") {
    layer = std::make_unique<Sigmoid>(read_shape(j.at("shape")));
  } else if (kind == "softmax") {
    layer = std::make_unique<Softmax>(j.at("size").get<int>());
  } else if (kind == "conv2d") {
    if (j.at("kernel").get<int>() != Conv2d::kKernel) {
      throw Error(ErrorCode::kSchemaMismatch, "only 3x3 conv2d kernels are supported");
    }
    layer = std::make_unique<Conv2d>(j.at("in_channels").get<int>(),
                                     j.at("out_channels").get<int>(), j.at("height").get<int>(),
                                     j.at("width").get<int>());
  } else if (kind == "maxpool2d") {
    layer = std::make_unique<MaxPool2d>(j.at("channels").get<int>(), j.at("height").get<int>(),
                                        j.at("width").get<int>());
  } else if (kind == "flatten") {
    layer = std::make_unique<Flatten>(read_shape(j.at("shape")));
  } else {
    throw Error(ErrorCode::kSchemaMismatch, "unknown layer kind '" + kind + "'");
  }
  auto params = layer->params();
  if (!params.empty()) {
    read_param(j, "weights", params[0]);
    read_param(j, "bias", params[1]);
  }
  layer->set_frozen(j.at("frozen").get<bool>());
  return layer;
}

}  // namespace

nlohmann::ordered_json LayerStack::to_json() const {
  nlohmann::ordered_json arr = nlohmann::ordered_json::array();
  for (const auto& l : layers_) {
    nlohmann::ordered_json j = l->spec();
    j["frozen"] = l->frozen();
    const auto params = l->params();
    if (!params.empty()) {
      j["weights"] = flat(params[0].value);
      j["bias"] = flat(params[1].value);
    }
    arr.push_back(std::move(j));
  }
  return {{"layers", std::move(arr)}};
}

LayerStack LayerStack::from_json(const nlohmann::ordered_json& j) {
  LayerStack stack;
  try {
    for (const auto& lj : j.at("layers")) stack.add(layer_from_json(lj));
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::kSchemaMismatch, std::string("layer stack: ") + e.what());
  }
  if (stack.empty()) throw Error(ErrorCode::kSchemaMismatch, "layer stack has no layers");
  return stack;
}

void append_activation(LayerStack& stack, Activation act) {
  const Shape3 shape = stack.output_shape();
  switch (act) {
    case Activation::kNone:
      break;
    case Activation::kRelu:
      stack.emplace<Relu>(shape);
      break;
    case Activation::kSigmoid:
      stack.emplace<Sigmoid>(shape);
      break;
    case Activation::kSoftmax:
      stack.emplace<Softmax>(shape.size());
      break;
  }
}

LayerStack make_mlp(const std::vector<int>& sizes, Activation hidden, Activation head) {
  if (sizes.size() < 2) throw Error(ErrorCode::kInvalidArgument, "mlp needs >= 2 sizes");
  LayerStack stack;
  for (std::size_t i = 0; i + 1 < sizes.size(); ++i) {
    stack.emplace<Dense>(sizes[i], sizes[i + 1]);
    append_activation(stack, i + 2 < sizes.size() ? hidden : head);
  }
  return stack;
}

}  // namespace sealid::nn
