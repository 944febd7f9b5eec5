#pragma once

#include <cstdint>
#include <string>

#include "nn/tensor.hpp"

namespace gaitfuse::nn {

enum class LayerKind : std::uint8_t {
  Conv2d = 1,
  MaxPool = 2,
  Dense = 3,
  Relu = 4,
  Sigmoid = 5,
  Flatten = 6,
};

const char* to_string(LayerKind kind) noexcept;

struct LayerSpec {
  LayerKind kind = LayerKind::Relu;
  std::size_t out_channels = 0;  // conv2d
  std::size_t kernel_h = 0;      // conv2d
  std::size_t kernel_w = 0;      // conv2d
  std::size_t stride = 1;        // conv2d stride, maxpool window (= stride)
  std::size_t pad = 0;           // conv2d zero padding on every side
  std::size_t units = 0;         // dense
  bool trainable = true;

  static LayerSpec conv2d(std::size_t out_channels, std::size_t kh,
                          std::size_t kw, std::size_t pad = 0,
                          std::size_t stride = 1);
  static LayerSpec maxpool(std::size_t window = 2);
  static LayerSpec dense(std::size_t units);
  static LayerSpec relu() { return {LayerKind::Relu}; }
  static LayerSpec sigmoid() { return {LayerKind::Sigmoid}; }
  static LayerSpec flatten() { return {LayerKind::Flatten}; }

  bool has_weights() const noexcept {
    return kind == LayerKind::Conv2d || kind == LayerKind::Dense;
  }

  // Equality of everything except the trainable flag.
  bool same_structure(const LayerSpec& o) const noexcept;

  std::string describe() const;
};

// A materialized layer: spec, resolved shapes and (for conv/dense) parameters.
// Conv weights are [out, in, kh, kw]; dense weights are [units, fan_in].
struct Layer {
  LayerSpec spec;
  Shape in_shape;
  Shape out_shape;
  Tensor weight;
  Tensor bias;

  std::size_t param_count() const noexcept { return weight.size() + bias.size(); }
};

// Output shape of `spec` applied to `in`; throws ShapeMismatch with a
// description of the incompatibility.
Shape infer_output_shape(const LayerSpec& spec, const Shape& in);

// Per-layer kernels. `scratch` receives the im2col matrix (conv) or argmax
// indices (maxpool) needed by the matching backward call.
struct LayerScratch {
  std::vector<double> cols;
  std::vector<std::uint32_t> argmax;
};

void layer_forward(const Layer& layer, const Tensor& in, Tensor& out,
                   LayerScratch* scratch);

// Accumulates parameter gradients into dweight/dbias when they are non-null
// and writes the input gradient into `din` when it is non-null.
void layer_backward(const Layer& layer, const Tensor& in,
                    const LayerScratch& scratch, const Tensor& dout,
                    Tensor* dweight, Tensor* dbias, Tensor* din);

}  // namespace gaitfuse::nn
