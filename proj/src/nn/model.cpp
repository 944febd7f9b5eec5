#include "nn/model.hpp"

#include <random>

namespace gaitfuse::nn {

ArchSpec lenet4() {
  return {"lenet4",
          kSpectrogramInput,
          {LayerSpec::conv2d(32, 5, 5, 2), LayerSpec::relu(), LayerSpec::maxpool(2),
           LayerSpec::conv2d(64, 5, 5), LayerSpec::relu(), LayerSpec::maxpool(2),
           LayerSpec::conv2d(32, 3, 3), LayerSpec::relu(), LayerSpec::flatten(),
           LayerSpec::dense(128)}};
}

ArchSpec vgg8() {
  std::vector<LayerSpec> l;
  auto block = [&l](std::size_t channels, int convs) {
    for (int i = 0; i < convs; ++i) {
      l.push_back(LayerSpec::conv2d(channels, 3, 3, 1));
      l.push_back(LayerSpec::relu());
    }
    l.push_back(LayerSpec::maxpool(2));
  };
  block(64, 2);
  block(128, 2);
  block(128, 3);
  l.push_back(LayerSpec::flatten());
  l.push_back(LayerSpec::dense(128));
  return {"vgg8", kSpectrogramInput, std::move(l)};
}

ArchSpec arch_by_name(const std::string& name) {
  if (name == "lenet4") return lenet4();
  if (name == "vgg8") return vgg8();
  fail(ErrorCode::InvalidArgument, "unknown architecture '" + name + "'");
}

Model::Model(Shape input_shape, std::vector<LayerSpec> specs, std::uint64_t seed)
    : input_shape_(std::move(input_shape)), seed_(seed) {
  Shape cur = input_shape_;
  layers_.reserve(specs.size());
  for (std::size_t i = 0; i < specs.size(); ++i) {
    Layer layer;
    layer.spec = specs[i];
    layer.in_shape = cur;
    try {
      layer.out_shape = infer_output_shape(layer.spec, cur);
    } catch (const Error& e) {
      const std::string prev =
          i == 0 ? std::string("model input") : "layer " + std::to_string(i - 1) +
                                                    " " + specs[i - 1].describe();
      fail(ErrorCode::ShapeMismatch, prev + " -> layer " + std::to_string(i) +
                                         ": " + e.what());
    }
    if (layer.spec.kind == LayerKind::Conv2d) {
      layer.weight = Tensor({layer.spec.out_channels, cur[0], layer.spec.kernel_h,
                             layer.spec.kernel_w});
      layer.bias = Tensor({layer.spec.out_channels});
    } else if (layer.spec.kind == LayerKind::Dense) {
      layer.weight = Tensor({layer.spec.units, cur[0]});
      layer.bias = Tensor({layer.spec.units});
    }
    cur = layer.out_shape;
    layers_.push_back(std::move(layer));
  }
}

void Model::initialize() {
  std::mt19937_64 rng(seed_);
  for (std::size_t i = 0; i < layers_.size(); ++i) {
    Layer& l = layers_[i];
    if (!l.spec.has_weights()) continue;
    const double fan_in = static_cast<double>(l.weight.size() / l.weight.shape()[0]);
    // He-style range when a ReLU follows, LeCun-style otherwise.
    const bool relu_next =
        i + 1 < layers_.size() && layers_[i + 1].spec.kind == LayerKind::Relu;
    const double limit = std::sqrt((relu_next ? 6.0 : 3.0) / fan_in);
    std::uniform_real_distribution<double> dist(-limit, limit);
    for (double& w : l.weight.values()) w = dist(rng);
    l.bias.fill(0.0);
  }
}

std::size_t Model::param_count() const noexcept {
  std::size_t n = 0;
  for (const Layer& l : layers_) n += l.param_count();
  return n;
}

std::vector<std::size_t> Model::weight_layer_indices() const {
  std::vector<std::size_t> idx;
  for (std::size_t i = 0; i < layers_.size(); ++i)
    if (layers_[i].spec.has_weights()) idx.push_back(i);
  return idx;
}

std::size_t Model::first_trainable_layer() const noexcept {
  for (std::size_t i = 0; i < layers_.size(); ++i)
    if (layers_[i].spec.has_weights() && layers_[i].spec.trainable) return i;
  return layers_.size();
}

std::uint64_t Model::structure_signature() const noexcept {
  // FNV-1a over kinds and shapes.
  std::uint64_t h = 1469598103934665603ULL;
  auto mix = [&h](std::uint64_t v) {
    h ^= v;
    h *= 1099511628211ULL;
  };
  for (std::size_t d : input_shape_) mix(d);
  for (const Layer& l : layers_) {
    mix(static_cast<std::uint64_t>(l.spec.kind));
    for (std::size_t d : l.out_shape) mix(d);
    mix(l.weight.size());
  }
  return h;
}

bool Model::operator==(const Model& o) const {
  if (input_shape_ != o.input_shape_ || seed_ != o.seed_ ||
      layers_.size() != o.layers_.size())
    return false;
  for (std::size_t i = 0; i < layers_.size(); ++i) {
    const Layer& a = layers_[i];
    const Layer& b = o.layers_[i];
    if (!a.spec.same_structure(b.spec) || a.spec.trainable != b.spec.trainable ||
        a.in_shape != b.in_shape || a.out_shape != b.out_shape ||
        !(a.weight == b.weight) || !(a.bias == b.bias))
      return false;
  }
  return true;
}

Model build_model(const ArchSpec& arch, std::uint64_t seed) {
  Model m(arch.input_shape, arch.layers, seed);
  m.initialize();
  return m;
}

Tensor forward_range(const Model& model, const Tensor& input, std::size_t begin,
                     std::size_t end, ForwardCache* cache) {
  const auto& layers = model.layers();
  end = std::min(end, layers.size());
  require(begin <= end, ErrorCode::InvalidArgument, "forward range is reversed");
  const Shape& expected = begin < layers.size() ? layers[begin].in_shape
                                                : model.output_shape();
  require(input.shape() == expected, ErrorCode::ShapeMismatch,
          "forward input " + shape_str(input.shape()) + " does not match " +
              shape_str(expected));
  if (cache) {
    cache->begin = begin;
    cache->end = end;
    cache->signature = model.structure_signature();
    cache->inputs.assign(end - begin, Tensor{});
    cache->scratch.assign(end - begin, LayerScratch{});
  }
  Tensor cur = input;
  for (std::size_t i = begin; i < end; ++i) {
    Tensor out;
    layer_forward(layers[i], cur, out, cache ? &cache->scratch[i - begin] : nullptr);
    if (cache) cache->inputs[i - begin] = std::move(cur);
    cur = std::move(out);
  }
  return cur;
}

ForwardResult forward(const Model& model, const Tensor& input) {
  ForwardResult r;
  r.output = forward_range(model, input, 0, kAllLayers, &r.cache);
  return r;
}

Gradients Gradients::zeros_like(const Model& model) {
  Gradients g;
  for (const Layer& l : model.layers()) {
    g.weight.emplace_back(l.weight.shape());
    g.bias.emplace_back(l.bias.shape());
  }
  return g;
}

void Gradients::add(const Gradients& other) {
  require(other.weight.size() == weight.size(), ErrorCode::ShapeMismatch,
          "gradient layer counts differ");
  for (std::size_t i = 0; i < weight.size(); ++i) {
    require(weight[i].shape() == other.weight[i].shape() &&
                bias[i].shape() == other.bias[i].shape(),
            ErrorCode::ShapeMismatch, "gradient shapes differ");
    for (std::size_t j = 0; j < weight[i].size(); ++j) weight[i][j] += other.weight[i][j];
    for (std::size_t j = 0; j < bias[i].size(); ++j) bias[i][j] += other.bias[i][j];
  }
}

void Gradients::scale(double factor) {
  for (auto* group : {&weight, &bias})
    for (Tensor& t : *group)
      for (double& v : t.values()) v *= factor;
}

bool Gradients::all_zero() const {
  for (const auto* group : {&weight, &bias})
    for (const Tensor& t : *group)
      for (double v : t.values())
        if (v != 0.0) return false;
  return true;
}

bool Gradients::all_finite() const {
  for (const auto* group : {&weight, &bias})
    for (const Tensor& t : *group)
      if (!t.all_finite()) return false;
  return true;
}

void backward_accumulate(const Model& model, const ForwardCache& cache,
                         const Tensor& output_grad, Gradients& into,
                         Tensor* input_grad) {
  const auto& layers = model.layers();
  require(cache.signature == model.structure_signature() &&
              cache.end <= layers.size() &&
              cache.inputs.size() == cache.end - cache.begin,
          ErrorCode::StructureMismatch, "forward cache was not produced by this model");
  require(into.weight.size() == layers.size(), ErrorCode::ShapeMismatch,
          "gradient buffer does not match model");
  const Shape& out_shape =
      cache.end == cache.begin
          ? (cache.begin < layers.size() ? layers[cache.begin].in_shape
                                         : model.output_shape())
          : layers[cache.end - 1].out_shape;
  require(output_grad.shape() == out_shape, ErrorCode::ShapeMismatch,
          "output gradient " + shape_str(output_grad.shape()) + " expected " +
              shape_str(out_shape));

  // Below this index no layer needs a gradient, so propagation can stop.
  const std::size_t stop =
      input_grad ? cache.begin : std::max(cache.begin, model.first_trainable_layer());

  Tensor grad = output_grad;
  for (std::size_t i = cache.end; i-- > cache.begin;) {
    if (i < stop) break;
    const Layer& l = layers[i];
    const bool train = l.spec.has_weights() && l.spec.trainable;
    const bool need_din = i > stop || (input_grad && i == cache.begin);
    Tensor din;
    layer_backward(l, cache.inputs[i - cache.begin], cache.scratch[i - cache.begin], grad,
                   train ? &into.weight[i] : nullptr, train ? &into.bias[i] : nullptr,
                   need_din ? &din : nullptr);
    if (!need_din) break;
    grad = std::move(din);
  }
  if (input_grad) {
    if (cache.end == cache.begin) *input_grad = output_grad;
    else *input_grad = std::move(grad);
  }
}

Gradients backward(const Model& model, const ForwardCache& cache,
                   const Tensor& output_grad) {
  Gradients g = Gradients::zeros_like(model);
  backward_accumulate(model, cache, output_grad, g);
  return g;
}

void sgd_step(Model& model, const Gradients& grads, double lr) {
  auto& layers = model.layers();
  require(lr >= 0.0 && std::isfinite(lr), ErrorCode::InvalidArgument,
          "learning rate must be finite and non-negative");
  require(grads.weight.size() == layers.size() && grads.bias.size() == layers.size(),
          ErrorCode::ShapeMismatch, "gradients do not match model");
  for (std::size_t i = 0; i < layers.size(); ++i) {
    require(grads.weight[i].shape() == layers[i].weight.shape() &&
                grads.bias[i].shape() == layers[i].bias.shape(),
            ErrorCode::ShapeMismatch, "gradient shape mismatch at layer " + std::to_string(i));
    if (layers[i].spec.trainable &&
        !(grads.weight[i].all_finite() && grads.bias[i].all_finite()))
      fail(ErrorCode::NumericDivergence,
           "non-finite gradient at layer " + std::to_string(i));
  }
  for (std::size_t i = 0; i < layers.size(); ++i) {
    Layer& l = layers[i];
    if (!l.spec.has_weights() || !l.spec.trainable) continue;
    for (std::size_t j = 0; j < l.weight.size(); ++j) l.weight[j] -= lr * grads.weight[i][j];
    for (std::size_t j = 0; j < l.bias.size(); ++j) l.bias[j] -= lr * grads.bias[i][j];
  }
}

void set_trainable(Model& model, std::size_t first_k_frozen) {
  const auto idx = model.weight_layer_indices();
  require(first_k_frozen <= idx.size(), ErrorCode::InvalidArgument,
          "cannot freeze " + std::to_string(first_k_frozen) + " of " +
              std::to_string(idx.size()) + " weight layers");
  for (Layer& l : model.layers()) l.spec.trainable = true;
  for (std::size_t j = 0; j < first_k_frozen; ++j)
    model.layers()[idx[j]].spec.trainable = false;
}

}  // namespace gaitfuse::nn
