#pragma once

#include <cstdint>
#include <limits>
#include <string>
#include <vector>

#include "nn/layers.hpp"

namespace gaitfuse::nn {

struct ArchSpec {
  std::string name;
  Shape input_shape;
  std::vector<LayerSpec> layers;
};

// Spectrogram input shared by the built-in trunks.
inline const Shape kSpectrogramInput{1, 33, 42};

// conv(32,5x5,same) relu pool conv(64,5x5) relu pool conv(32,3x3) relu
// flatten dense(128). The last dense layer is the linear embedding.
ArchSpec lenet4();
// Three VGG blocks (2, 2 and 3 same-padded 3x3 convs) and dense(128).
ArchSpec vgg8();
// Resolves "lenet4" / "vgg8"; anything else is an InvalidArgument error.
ArchSpec arch_by_name(const std::string& name);

class Model {
 public:
  Model() = default;

  // Resolves shapes for `specs` against `input_shape`. Parameters are
  // allocated zeroed; call initialize() for random weights.
  Model(Shape input_shape, std::vector<LayerSpec> specs, std::uint64_t seed);

  // Fan-in-scaled uniform weights, zero biases; a pure function of seed().
  void initialize();

  const std::vector<Layer>& layers() const noexcept { return layers_; }
  std::vector<Layer>& layers() noexcept { return layers_; }
  const Shape& input_shape() const noexcept { return input_shape_; }
  Shape output_shape() const {
    return layers_.empty() ? input_shape_ : layers_.back().out_shape;
  }
  std::uint64_t seed() const noexcept { return seed_; }

  std::size_t param_count() const noexcept;
  std::vector<std::size_t> weight_layer_indices() const;

  // Index of the first layer that must run during training: the first
  // trainable weight layer, or layers().size() when everything is frozen.
  std::size_t first_trainable_layer() const noexcept;

  // Hash of kinds and shapes (not values); ties a forward cache to a model.
  std::uint64_t structure_signature() const noexcept;

  bool operator==(const Model& o) const;

 private:
  Shape input_shape_;
  std::vector<Layer> layers_;
  std::uint64_t seed_ = 0;
};

Model build_model(const ArchSpec& arch, std::uint64_t seed);

struct ForwardCache {
  std::size_t begin = 0;
  std::size_t end = 0;
  std::uint64_t signature = 0;
  std::vector<Tensor> inputs;  // inputs[i - begin] feeds layer i
  std::vector<LayerScratch> scratch;
};

struct ForwardResult {
  Tensor output;
  ForwardCache cache;
};

ForwardResult forward(const Model& model, const Tensor& input);

// Runs layers [begin, end) on `input`, which must have layer `begin`'s input
// shape. When `cache` is non-null it is filled for a later backward call.
Tensor forward_range(const Model& model, const Tensor& input, std::size_t begin,
                     std::size_t end, ForwardCache* cache);

inline constexpr std::size_t kAllLayers = std::numeric_limits<std::size_t>::max();

struct Gradients {
  std::vector<Tensor> weight;
  std::vector<Tensor> bias;

  static Gradients zeros_like(const Model& model);
  void add(const Gradients& other);
  void scale(double factor);
  bool all_zero() const;
  bool all_finite() const;
};

// Gradient of the output with respect to every parameter. Frozen layers get
// zeros; the signal still flows through them to trainable layers below.
Gradients backward(const Model& model, const ForwardCache& cache,
                   const Tensor& output_grad);

// Accumulating form used by the trainer. When `input_grad` is non-null it
// receives the gradient with respect to the cached input of layer cache.begin.
void backward_accumulate(const Model& model, const ForwardCache& cache,
                         const Tensor& output_grad, Gradients& into,
                         Tensor* input_grad = nullptr);

// p <- p - lr * g for trainable layers. Throws NumericDivergence (leaving the
// model untouched) if any gradient entry is not finite.
void sgd_step(Model& model, const Gradients& grads, double lr);

// Freezes the first k weight-bearing layers and unfreezes the rest.
void set_trainable(Model& model, std::size_t first_k_frozen);

}  // namespace gaitfuse::nn
