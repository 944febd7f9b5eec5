#include "nn/layers.hpp"

#include <Eigen/Dense>
#include <algorithm>
#include <sstream>

namespace gaitfuse::nn {

namespace {

using RowMat = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using MapMat = Eigen::Map<RowMat>;
using CMapMat = Eigen::Map<const RowMat>;
using MapVec = Eigen::Map<Eigen::VectorXd>;
using CMapVec = Eigen::Map<const Eigen::VectorXd>;

struct ConvGeom {
  std::size_t cin, h, w, cout, kh, kw, stride, pad, ho, wo;
  std::size_t k() const { return cin * kh * kw; }
  std::size_t p() const { return ho * wo; }
};

ConvGeom conv_geom(const Layer& l) {
  return {l.in_shape[0], l.in_shape[1], l.in_shape[2], l.spec.out_channels,
          l.spec.kernel_h, l.spec.kernel_w, l.spec.stride, l.spec.pad,
          l.out_shape[1], l.out_shape[2]};
}

void im2col(const ConvGeom& g, const double* in, double* cols) {
  const std::size_t p = g.p();
  for (std::size_t c = 0; c < g.cin; ++c) {
    for (std::size_t ki = 0; ki < g.kh; ++ki) {
      for (std::size_t kj = 0; kj < g.kw; ++kj) {
        double* row = cols + ((c * g.kh + ki) * g.kw + kj) * p;
        for (std::size_t oy = 0; oy < g.ho; ++oy) {
          const auto iy = static_cast<std::ptrdiff_t>(oy * g.stride + ki) -
                          static_cast<std::ptrdiff_t>(g.pad);
          double* dst = row + oy * g.wo;
          if (iy < 0 || iy >= static_cast<std::ptrdiff_t>(g.h)) {
            std::fill(dst, dst + g.wo, 0.0);
            continue;
          }
          const double* src = in + (c * g.h + static_cast<std::size_t>(iy)) * g.w;
          for (std::size_t ox = 0; ox < g.wo; ++ox) {
            const auto ix = static_cast<std::ptrdiff_t>(ox * g.stride + kj) -
                            static_cast<std::ptrdiff_t>(g.pad);
            dst[ox] = (ix < 0 || ix >= static_cast<std::ptrdiff_t>(g.w))
                          ? 0.0
                          : src[ix];
          }
        }
      }
    }
  }
}

void col2im_add(const ConvGeom& g, const double* cols, double* din) {
  const std::size_t p = g.p();
  for (std::size_t c = 0; c < g.cin; ++c) {
    for (std::size_t ki = 0; ki < g.kh; ++ki) {
      for (std::size_t kj = 0; kj < g.kw; ++kj) {
        const double* row = cols + ((c * g.kh + ki) * g.kw + kj) * p;
        for (std::size_t oy = 0; oy < g.ho; ++oy) {
          const auto iy = static_cast<std::ptrdiff_t>(oy * g.stride + ki) -
                          static_cast<std::ptrdiff_t>(g.pad);
          if (iy < 0 || iy >= static_cast<std::ptrdiff_t>(g.h)) continue;
          double* dst = din + (c * g.h + static_cast<std::size_t>(iy)) * g.w;
          const double* src = row + oy * g.wo;
          for (std::size_t ox = 0; ox < g.wo; ++ox) {
            const auto ix = static_cast<std::ptrdiff_t>(ox * g.stride + kj) -
                            static_cast<std::ptrdiff_t>(g.pad);
            if (ix >= 0 && ix < static_cast<std::ptrdiff_t>(g.w)) dst[ix] += src[ox];
          }
        }
      }
    }
  }
}

void conv_forward(const Layer& l, const Tensor& in, Tensor& out,
                  std::vector<double>& cols) {
  const ConvGeom g = conv_geom(l);
  cols.resize(g.k() * g.p());
  im2col(g, in.data(), cols.data());
  CMapMat w(l.weight.data(), static_cast<Eigen::Index>(g.cout),
            static_cast<Eigen::Index>(g.k()));
  CMapMat c(cols.data(), static_cast<Eigen::Index>(g.k()),
            static_cast<Eigen::Index>(g.p()));
  MapMat o(out.data(), static_cast<Eigen::Index>(g.cout),
           static_cast<Eigen::Index>(g.p()));
  o.noalias() = w * c;
  o.colwise() += CMapVec(l.bias.data(), static_cast<Eigen::Index>(g.cout));
}

void conv_backward(const Layer& l, const std::vector<double>& cols,
                   const Tensor& dout, Tensor* dweight, Tensor* dbias,
                   Tensor* din) {
  const ConvGeom g = conv_geom(l);
  const auto cout = static_cast<Eigen::Index>(g.cout);
  const auto k = static_cast<Eigen::Index>(g.k());
  const auto p = static_cast<Eigen::Index>(g.p());
  CMapMat d(dout.data(), cout, p);
  if (dweight) {
    CMapMat c(cols.data(), k, p);
    MapMat dw(dweight->data(), cout, k);
    dw.noalias() += d * c.transpose();
  }
  // Plain loops for reductions: Eigen's vectorized versions peel by pointer
  // alignment, which would make results depend on heap addresses.
  if (dbias) {
    const std::size_t np = g.p();
    for (std::size_t o = 0; o < g.cout; ++o) {
      const double* row = dout.data() + o * np;
      double acc = 0.0;
      for (std::size_t i = 0; i < np; ++i) acc += row[i];
      (*dbias)[o] += acc;
    }
  }
  if (din) {
    CMapMat w(l.weight.data(), cout, k);
    RowMat dcols(k, p);
    dcols.noalias() = w.transpose() * d;
    din->fill(0.0);
    col2im_add(g, dcols.data(), din->data());
  }
}

void pool_forward(const Layer& l, const Tensor& in, Tensor& out,
                  std::vector<std::uint32_t>* argmax) {
  const std::size_t c = l.in_shape[0], h = l.in_shape[1], w = l.in_shape[2];
  const std::size_t s = l.spec.stride;
  const std::size_t ho = l.out_shape[1], wo = l.out_shape[2];
  if (argmax) argmax->resize(out.size());
  for (std::size_t ch = 0; ch < c; ++ch) {
    for (std::size_t oy = 0; oy < ho; ++oy) {
      for (std::size_t ox = 0; ox < wo; ++ox) {
        std::size_t best = (ch * h + oy * s) * w + ox * s;
        double best_v = in[best];
        for (std::size_t dy = 0; dy < s; ++dy) {
          for (std::size_t dx = 0; dx < s; ++dx) {
            const std::size_t idx = (ch * h + oy * s + dy) * w + ox * s + dx;
            if (in[idx] > best_v) {
              best_v = in[idx];
              best = idx;
            }
          }
        }
        const std::size_t o = (ch * ho + oy) * wo + ox;
        out[o] = best_v;
        if (argmax) (*argmax)[o] = static_cast<std::uint32_t>(best);
      }
    }
  }
}

void dense_forward(const Layer& l, const Tensor& in, Tensor& out) {
  const std::size_t fan_in = in.size();
  for (std::size_t u = 0; u < l.spec.units; ++u) {
    const double* w = l.weight.data() + u * fan_in;
    double acc = 0.0;
    for (std::size_t i = 0; i < fan_in; ++i) acc += w[i] * in[i];
    out[u] = acc + l.bias[u];
  }
}

}  // namespace

const char* to_string(LayerKind kind) noexcept {
  switch (kind) {
    case LayerKind::Conv2d: return "conv2d";
    case LayerKind::MaxPool: return "maxpool";
    case LayerKind::Dense: return "dense";
    case LayerKind::Relu: return "relu";
    case LayerKind::Sigmoid: return "sigmoid";
    case LayerKind::Flatten: return "flatten";
  }
  return "?";
}

LayerSpec LayerSpec::conv2d(std::size_t out_channels, std::size_t kh,
                            std::size_t kw, std::size_t pad,
                            std::size_t stride) {
  LayerSpec s{LayerKind::Conv2d};
  s.out_channels = out_channels;
  s.kernel_h = kh;
  s.kernel_w = kw;
  s.pad = pad;
  s.stride = stride;
  return s;
}

LayerSpec LayerSpec::maxpool(std::size_t window) {
  LayerSpec s{LayerKind::MaxPool};
  s.stride = window;
  return s;
}

LayerSpec LayerSpec::dense(std::size_t units) {
  LayerSpec s{LayerKind::Dense};
  s.units = units;
  return s;
}

bool LayerSpec::same_structure(const LayerSpec& o) const noexcept {
  return kind == o.kind && out_channels == o.out_channels &&
         kernel_h == o.kernel_h && kernel_w == o.kernel_w &&
         stride == o.stride && pad == o.pad && units == o.units;
}

std::string LayerSpec::describe() const {
  std::ostringstream os;
  os << to_string(kind);
  switch (kind) {
    case LayerKind::Conv2d:
      os << "(" << out_channels << "x" << kernel_h << "x" << kernel_w
         << ", stride " << stride << ", pad " << pad << ")";
      break;
    case LayerKind::MaxPool: os << "(" << stride << "x" << stride << ")"; break;
    case LayerKind::Dense: os << "(" << units << ")"; break;
    default: break;
  }
  return os.str();
}

Shape infer_output_shape(const LayerSpec& spec, const Shape& in) {
  auto bad = [&](const std::string& why) -> Shape {
    fail(ErrorCode::ShapeMismatch,
         spec.describe() + " cannot consume input " + shape_str(in) + ": " + why);
  };
  switch (spec.kind) {
    case LayerKind::Conv2d: {
      if (in.size() != 3) return bad("expected rank-3 [C,H,W] input");
      if (spec.out_channels == 0 || spec.kernel_h == 0 || spec.kernel_w == 0 ||
          spec.stride == 0)
        return bad("conv2d extents must be positive");
      const std::size_t h = in[1] + 2 * spec.pad, w = in[2] + 2 * spec.pad;
      if (h < spec.kernel_h || w < spec.kernel_w)
        return bad("kernel larger than padded input");
      return {spec.out_channels, (h - spec.kernel_h) / spec.stride + 1,
              (w - spec.kernel_w) / spec.stride + 1};
    }
    case LayerKind::MaxPool: {
      if (in.size() != 3) return bad("expected rank-3 [C,H,W] input");
      if (spec.stride == 0) return bad("pool window must be positive");
      if (in[1] < spec.stride || in[2] < spec.stride)
        return bad("pool window larger than input");
      return {in[0], in[1] / spec.stride, in[2] / spec.stride};
    }
    case LayerKind::Dense:
      if (in.size() != 1) return bad("dense expects a rank-1 input (add flatten)");
      if (spec.units == 0) return bad("dense units must be positive");
      return {spec.units};
    case LayerKind::Flatten:
      return {shape_size(in)};
    case LayerKind::Relu:
    case LayerKind::Sigmoid:
      return in;
  }
  return bad("unknown layer kind");
}

void layer_forward(const Layer& layer, const Tensor& in, Tensor& out,
                   LayerScratch* scratch) {
  if (out.shape() != layer.out_shape) out = Tensor(layer.out_shape);
  switch (layer.spec.kind) {
    case LayerKind::Conv2d: {
      std::vector<double> local;
      conv_forward(layer, in, out, scratch ? scratch->cols : local);
      break;
    }
    case LayerKind::MaxPool:
      pool_forward(layer, in, out, scratch ? &scratch->argmax : nullptr);
      break;
    case LayerKind::Dense:
      dense_forward(layer, in, out);
      break;
    case LayerKind::Relu:
      for (std::size_t i = 0; i < in.size(); ++i) out[i] = in[i] > 0.0 ? in[i] : 0.0;
      break;
    case LayerKind::Sigmoid:
      for (std::size_t i = 0; i < in.size(); ++i) out[i] = 1.0 / (1.0 + std::exp(-in[i]));
      break;
    case LayerKind::Flatten:
      std::copy(in.data(), in.data() + in.size(), out.data());
      break;
  }
}

void layer_backward(const Layer& layer, const Tensor& in,
                    const LayerScratch& scratch, const Tensor& dout,
                    Tensor* dweight, Tensor* dbias, Tensor* din) {
  if (din && din->shape() != layer.in_shape) *din = Tensor(layer.in_shape);
  switch (layer.spec.kind) {
    case LayerKind::Conv2d:
      conv_backward(layer, scratch.cols, dout, dweight, dbias, din);
      break;
    case LayerKind::MaxPool:
      if (din) {
        din->fill(0.0);
        for (std::size_t o = 0; o < dout.size(); ++o) (*din)[scratch.argmax[o]] += dout[o];
      }
      break;
    case LayerKind::Dense: {
      const std::size_t units = layer.spec.units, fan_in = in.size();
      if (dweight)
        for (std::size_t u = 0; u < units; ++u) {
          double* dw = dweight->data() + u * fan_in;
          for (std::size_t i = 0; i < fan_in; ++i) dw[i] += dout[u] * in[i];
        }
      if (dbias)
        for (std::size_t u = 0; u < units; ++u) (*dbias)[u] += dout[u];
      if (din) {
        din->fill(0.0);
        for (std::size_t u = 0; u < units; ++u) {
          const double* w = layer.weight.data() + u * fan_in;
          for (std::size_t i = 0; i < fan_in; ++i) (*din)[i] += w[i] * dout[u];
        }
      }
      break;
    }
    case LayerKind::Relu:
      if (din)
        for (std::size_t i = 0; i < in.size(); ++i) (*din)[i] = in[i] > 0.0 ? dout[i] : 0.0;
      break;
    case LayerKind::Sigmoid:
      if (din)
        for (std::size_t i = 0; i < in.size(); ++i) {
          const double s = 1.0 / (1.0 + std::exp(-in[i]));
          (*din)[i] = dout[i] * s * (1.0 - s);
        }
      break;
    case LayerKind::Flatten:
      if (din) std::copy(dout.data(), dout.data() + dout.size(), din->data());
      break;
  }
}

std::string shape_str(const Shape& s) {
  std::string out = "[";
  for (std::size_t i = 0; i < s.size(); ++i) {
    if (i) out += "x";
    out += std::to_string(s[i]);
  }
  return out + "]";
}

}  // namespace gaitfuse::nn
