#include "net/unet.hpp"

#include <algorithm>
#include <cmath>
#include <random>

#include <Eigen/Core>

#include "core/errors.hpp"

namespace velinv::net {

namespace {

template <typename T>
using MatRM = Eigen::Matrix<T, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
template <typename T>
using MapM = Eigen::Map<MatRM<T>>;
template <typename T>
using MapCM = Eigen::Map<const MatRM<T>>;

template <typename T>
std::vector<T>& scratch_col() {
  thread_local std::vector<T> buf;
  return buf;
}

// Lowers a 3x3, pad-1 convolution input into a (cin*9) x (h*w) matrix.
template <typename T>
void im2col3(const BasicTensor3<T>& in, T* col) {
  const int h = in.height, w = in.width;
  const std::size_t hw = in.plane();
  for (int c = 0; c < in.channels; ++c) {
    const T* src = in.channel(c);
    for (int ky = 0; ky < 3; ++ky) {
      for (int kx = 0; kx < 3; ++kx) {
        T* dst = col + (static_cast<std::size_t>(c) * 9 + ky * 3 + kx) * hw;
        const int dx = kx - 1;
        for (int y = 0; y < h; ++y) {
          T* drow = dst + static_cast<std::size_t>(y) * w;
          const int sy = y + ky - 1;
          if (sy < 0 || sy >= h) {
            std::fill_n(drow, w, T{0});
            continue;
          }
          const T* srow = src + static_cast<std::size_t>(sy) * w;
          const int x0 = std::max(0, -dx), x1 = std::min(w, w - dx);
          for (int x = 0; x < x0; ++x) drow[x] = T{0};
          std::copy(srow + x0 + dx, srow + x1 + dx, drow + x0);
          for (int x = x1; x < w; ++x) drow[x] = T{0};
        }
      }
    }
  }
}

// Adjoint of im2col3: scatters column gradients back onto the input.
template <typename T>
void col2im3(const T* col, BasicTensor3<T>& din) {
  const int h = din.height, w = din.width;
  const std::size_t hw = din.plane();
  std::fill(din.data.begin(), din.data.end(), T{0});
  for (int c = 0; c < din.channels; ++c) {
    T* dst = din.channel(c);
    for (int ky = 0; ky < 3; ++ky) {
      for (int kx = 0; kx < 3; ++kx) {
        const T* src = col + (static_cast<std::size_t>(c) * 9 + ky * 3 + kx) * hw;
        const int dx = kx - 1;
        for (int y = 0; y < h; ++y) {
          const int sy = y + ky - 1;
          if (sy < 0 || sy >= h) continue;
          const T* srow = src + static_cast<std::size_t>(y) * w;
          T* drow = dst + static_cast<std::size_t>(sy) * w;
          const int x0 = std::max(0, -dx), x1 = std::min(w, w - dx);
          for (int x = x0; x < x1; ++x) drow[x + dx] += srow[x];
        }
      }
    }
  }
}

template <typename T>
void conv_forward(const ConvShape& L, const std::vector<T>& params, const BasicTensor3<T>& in, BasicTensor3<T>& out,
                  bool relu) {
  out = BasicTensor3<T>(L.cout, in.height, in.width);
  const auto hw = static_cast<Eigen::Index>(in.plane());
  const auto k = static_cast<Eigen::Index>(L.fan_in());
  MapCM<T> wmat(params.data() + L.weight_offset, L.cout, k);
  MapM<T> omat(out.data.data(), L.cout, hw);
  if (L.kernel == 1) {
    omat.noalias() = wmat * MapCM<T>(in.data.data(), k, hw);
  } else {
    auto& col = scratch_col<T>();
    col.resize(static_cast<std::size_t>(k * hw));
    im2col3(in, col.data());
    omat.noalias() = wmat * MapCM<T>(col.data(), k, hw);
  }
  const T* bias = params.data() + L.bias_offset;
  for (int c = 0; c < L.cout; ++c) {
    T* o = out.channel(c);
    const T b = bias[c];
    if (relu) {
      for (Eigen::Index i = 0; i < hw; ++i) o[i] = std::max(o[i] + b, T{0});
    } else {
      for (Eigen::Index i = 0; i < hw; ++i) o[i] += b;
    }
  }
}

// dout arrives as dLoss/d(activation); when `relu_out` is given the ReLU mask is
// applied in place first. din may be null when the input gradient is not needed.
template <typename T>
void conv_backward(const ConvShape& L, const std::vector<T>& params, std::vector<T>& grads, const BasicTensor3<T>& in,
                   const BasicTensor3<T>* relu_out, BasicTensor3<T>& dout, BasicTensor3<T>* din) {
  const auto hw = static_cast<Eigen::Index>(in.plane());
  const auto k = static_cast<Eigen::Index>(L.fan_in());
  if (relu_out) {
    for (std::size_t i = 0; i < dout.data.size(); ++i) {
      if (relu_out->data[i] <= T{0}) dout.data[i] = T{0};
    }
  }
  T* gb = grads.data() + L.bias_offset;
  for (int c = 0; c < L.cout; ++c) {
    const T* d = dout.channel(c);
    double s = 0.0;
    for (Eigen::Index i = 0; i < hw; ++i) s += d[i];
    gb[c] += static_cast<T>(s);
  }
  MapCM<T> wmat(params.data() + L.weight_offset, L.cout, k);
  MapM<T> gw(grads.data() + L.weight_offset, L.cout, k);
  MapCM<T> dmat(dout.data.data(), L.cout, hw);
  if (L.kernel == 1) {
    MapCM<T> imat(in.data.data(), k, hw);
    gw.noalias() += dmat * imat.transpose();
    if (din) {
      *din = BasicTensor3<T>(in.channels, in.height, in.width);
      MapM<T>(din->data.data(), k, hw).noalias() = wmat.transpose() * dmat;
    }
    return;
  }
  auto& col = scratch_col<T>();
  col.resize(static_cast<std::size_t>(k * hw));
  im2col3(in, col.data());
  gw.noalias() += dmat * MapCM<T>(col.data(), k, hw).transpose();
  if (din) {
    MapM<T>(col.data(), k, hw).noalias() = wmat.transpose() * dmat;
    *din = BasicTensor3<T>(in.channels, in.height, in.width);
    col2im3(col.data(), *din);
  }
}

template <typename T>
BasicTensor3<T> maxpool2(const BasicTensor3<T>& in, std::vector<std::int32_t>& argmax) {
  BasicTensor3<T> out(in.channels, in.height / 2, in.width / 2);
  argmax.assign(out.data.size(), 0);
  std::size_t o = 0;
  for (int c = 0; c < in.channels; ++c) {
    const T* src = in.channel(c);
    for (int y = 0; y < out.height; ++y) {
      for (int x = 0; x < out.width; ++x, ++o) {
        const int base = (2 * y) * in.width + 2 * x;
        int best = base;
        for (int off : {base + 1, base + in.width, base + in.width + 1}) {
          if (src[off] > src[best]) best = off;
        }
        out.data[o] = src[best];
        argmax[o] = best;
      }
    }
  }
  return out;
}

template <typename T>
BasicTensor3<T> maxpool2_backward(const BasicTensor3<T>& dout, const std::vector<std::int32_t>& argmax, int h, int w) {
  BasicTensor3<T> din(dout.channels, h, w);
  std::size_t o = 0;
  for (int c = 0; c < dout.channels; ++c) {
    T* dst = din.channel(c);
    for (std::size_t i = 0; i < dout.plane(); ++i, ++o) dst[argmax[o]] += dout.data[o];
  }
  return din;
}

template <typename T>
BasicTensor3<T> upsample2(const BasicTensor3<T>& in) {
  BasicTensor3<T> out(in.channels, in.height * 2, in.width * 2);
  for (int c = 0; c < in.channels; ++c) {
    for (int y = 0; y < out.height; ++y) {
      const T* srow = in.channel(c) + static_cast<std::size_t>(y / 2) * in.width;
      T* drow = out.channel(c) + static_cast<std::size_t>(y) * out.width;
      for (int x = 0; x < out.width; ++x) drow[x] = srow[x / 2];
    }
  }
  return out;
}

template <typename T>
BasicTensor3<T> upsample2_backward(const BasicTensor3<T>& dout) {
  BasicTensor3<T> din(dout.channels, dout.height / 2, dout.width / 2);
  for (int c = 0; c < dout.channels; ++c) {
    for (int y = 0; y < dout.height; ++y) {
      const T* srow = dout.channel(c) + static_cast<std::size_t>(y) * dout.width;
      T* drow = din.channel(c) + static_cast<std::size_t>(y / 2) * din.width;
      for (int x = 0; x < dout.width; ++x) drow[x / 2] += srow[x];
    }
  }
  return din;
}

template <typename T>
BasicTensor3<T> concat(const BasicTensor3<T>& a, const BasicTensor3<T>& b) {
  BasicTensor3<T> out(a.channels + b.channels, a.height, a.width);
  std::copy(a.data.begin(), a.data.end(), out.data.begin());
  std::copy(b.data.begin(), b.data.end(), out.data.begin() + static_cast<std::ptrdiff_t>(a.data.size()));
  return out;
}

// Splits a concat gradient; returns the trailing `tail_channels` part and keeps the head in `head`.
template <typename T>
BasicTensor3<T> split_tail(BasicTensor3<T>& head, int tail_channels) {
  const int head_channels = head.channels - tail_channels;
  BasicTensor3<T> tail(tail_channels, head.height, head.width);
  const auto cut = static_cast<std::ptrdiff_t>(static_cast<std::size_t>(head_channels) * head.plane());
  std::copy(head.data.begin() + cut, head.data.end(), tail.data.begin());
  head.data.resize(static_cast<std::size_t>(cut));
  head.channels = head_channels;
  return tail;
}

struct LayerIndex {
  int depth;
  int enc_a(int l) const { return 2 * l; }
  int enc_b(int l) const { return 2 * l + 1; }
  // decoder levels run depth-2 .. 0
  int dec_base(int l) const { return 2 * depth + 3 * (depth - 2 - l); }
  int dec_up(int l) const { return dec_base(l); }
  int dec_a(int l) const { return dec_base(l) + 1; }
  int dec_b(int l) const { return dec_base(l) + 2; }
  int head() const { return 2 * depth + 3 * (depth - 1); }
};

}  // namespace

void NetworkConfig::validate() const {
  if (in_channels < 1) throw ConfigError("network needs at least one input channel");
  if (base_width < 1) throw ConfigError("base width must be positive");
  if (depth < 1 || depth > 8) throw ConfigError("network depth must lie in [1, 8]");
}

std::vector<ConvShape> layer_layout(const NetworkConfig& cfg) {
  cfg.validate();
  std::vector<ConvShape> layers;
  auto add = [&](std::string name, int cin, int cout, int k) {
    ConvShape s;
    s.name = std::move(name);
    s.cin = cin;
    s.cout = cout;
    s.kernel = k;
    layers.push_back(std::move(s));
  };
  for (int l = 0; l < cfg.depth; ++l) {
    const int cin = l == 0 ? cfg.in_channels : cfg.width_at(l - 1);
    add("enc" + std::to_string(l) + ".a", cin, cfg.width_at(l), 3);
    add("enc" + std::to_string(l) + ".b", cfg.width_at(l), cfg.width_at(l), 3);
  }
  for (int l = cfg.depth - 2; l >= 0; --l) {
    add("dec" + std::to_string(l) + ".up", cfg.width_at(l + 1), cfg.width_at(l), 3);
    add("dec" + std::to_string(l) + ".a", 2 * cfg.width_at(l), cfg.width_at(l), 3);
    add("dec" + std::to_string(l) + ".b", cfg.width_at(l), cfg.width_at(l), 3);
  }
  add("head", cfg.width_at(0), 1, 1);
  std::size_t offset = 0;
  for (auto& s : layers) {
    s.weight_offset = offset;
    offset += s.weight_count();
    s.bias_offset = offset;
    offset += static_cast<std::size_t>(s.cout);
  }
  return layers;
}

std::string NetworkWeights::parameter_path(std::size_t index) const {
  for (const auto& s : layers) {
    if (index >= s.weight_offset && index < s.weight_offset + s.weight_count()) {
      return s.name + ".weight[" + std::to_string(index - s.weight_offset) + "]";
    }
    if (index >= s.bias_offset && index < s.bias_offset + static_cast<std::size_t>(s.cout)) {
      return s.name + ".bias[" + std::to_string(index - s.bias_offset) + "]";
    }
  }
  return "param[" + std::to_string(index) + "]";
}

bool NetworkWeights::all_finite() const {
  return std::all_of(params.begin(), params.end(), [](float v) { return std::isfinite(v); });
}

NetworkWeights zero_weights(const NetworkConfig& cfg) {
  NetworkWeights w;
  w.config = cfg;
  w.layers = layer_layout(cfg);
  const auto& last = w.layers.back();
  w.params.assign(last.bias_offset + static_cast<std::size_t>(last.cout), 0.0f);
  return w;
}

NetworkWeights init_weights(const NetworkConfig& cfg, std::uint64_t seed) {
  NetworkWeights w = zero_weights(cfg);
  w.init_seed = seed;
  std::mt19937_64 rng(seed);
  for (const auto& s : w.layers) {
    std::normal_distribution<double> dist(0.0, std::sqrt(2.0 / static_cast<double>(s.fan_in())));
    for (std::size_t i = 0; i < s.weight_count(); ++i) w.params[s.weight_offset + i] = static_cast<float>(dist(rng));
  }
  return w;
}

template <typename T>
BasicTensor3<T> reflect_pad(const BasicTensor3<T>& x, int multiple) {
  const int h = (x.height + multiple - 1) / multiple * multiple;
  const int w = (x.width + multiple - 1) / multiple * multiple;
  if (h == x.height && w == x.width) return x;
  if (h - x.height >= x.height || w - x.width >= x.width) throw ConfigError("input too small to reflect-pad");
  auto reflect = [](int i, int n) { return i < n ? i : 2 * n - 2 - i; };
  BasicTensor3<T> out(x.channels, h, w);
  for (int c = 0; c < x.channels; ++c) {
    for (int y = 0; y < h; ++y) {
      const int sy = reflect(y, x.height);
      for (int xx = 0; xx < w; ++xx) out.at(c, y, xx) = x.at(c, sy, reflect(xx, x.width));
    }
  }
  return out;
}

template Tensor3 reflect_pad(const Tensor3&, int);
template Tensor3d reflect_pad(const Tensor3d&, int);

namespace {

template <typename T>
Array2D<T> forward_impl(const NetworkConfig& cfg, const std::vector<ConvShape>& layers, const std::vector<T>& params,
                        const BasicTensor3<T>& x, BasicForwardCache<T>& c) {
  using Tensor = BasicTensor3<T>;
  if (x.channels != cfg.in_channels) {
    throw ConfigError("input has " + std::to_string(x.channels) + " channels, network expects " +
                      std::to_string(cfg.in_channels));
  }
  if (x.data.size() != static_cast<std::size_t>(x.channels) * x.plane()) throw DataError("malformed input tensor");
  const int d = cfg.depth;
  const LayerIndex idx{d};
  c = BasicForwardCache<T>{};
  c.out_height = x.height;
  c.out_width = x.width;
  c.enc_in.resize(static_cast<std::size_t>(d));
  c.enc_a.resize(static_cast<std::size_t>(d));
  c.enc_b.resize(static_cast<std::size_t>(d));
  c.pool_argmax.resize(static_cast<std::size_t>(d));
  c.dec_up.resize(static_cast<std::size_t>(std::max(0, d - 1)));
  c.dec_cat.resize(c.dec_up.size());
  c.dec_a.resize(c.dec_up.size());
  c.dec_b.resize(c.dec_up.size());

  auto layer = [&](int i) -> const ConvShape& { return layers[static_cast<std::size_t>(i)]; };
  c.enc_in[0] = reflect_pad(x, cfg.alignment());
  for (int l = 0; l < d; ++l) {
    const auto L = static_cast<std::size_t>(l);
    if (l > 0) c.enc_in[L] = maxpool2(c.enc_b[L - 1], c.pool_argmax[L - 1]);
    conv_forward(layer(idx.enc_a(l)), params, c.enc_in[L], c.enc_a[L], true);
    conv_forward(layer(idx.enc_b(l)), params, c.enc_a[L], c.enc_b[L], true);
  }
  const Tensor* current = &c.enc_b[static_cast<std::size_t>(d - 1)];
  for (int l = d - 2; l >= 0; --l) {
    const auto L = static_cast<std::size_t>(l);
    c.dec_up[L] = upsample2(*current);
    Tensor up;
    conv_forward(layer(idx.dec_up(l)), params, c.dec_up[L], up, true);
    c.dec_cat[L] = concat(c.enc_b[L], up);
    conv_forward(layer(idx.dec_a(l)), params, c.dec_cat[L], c.dec_a[L], true);
    conv_forward(layer(idx.dec_b(l)), params, c.dec_a[L], c.dec_b[L], true);
    current = &c.dec_b[L];
  }
  Tensor head;
  conv_forward(layer(idx.head()), params, *current, head, false);

  Array2D<T> out(static_cast<std::size_t>(x.height), static_cast<std::size_t>(x.width));
  for (int y = 0; y < x.height; ++y) {
    for (int xx = 0; xx < x.width; ++xx) {
      out(static_cast<std::size_t>(y), static_cast<std::size_t>(xx)) = head.at(0, y, xx);
    }
  }
  return out;
}

template <typename T>
void backward_impl(const NetworkConfig& cfg, const std::vector<ConvShape>& layers, const std::vector<T>& params,
                   const BasicForwardCache<T>& c, const Array2D<T>& grad_out, std::vector<T>& grads) {
  using Tensor = BasicTensor3<T>;
  if (!c.valid()) throw ConfigError("backward pass needs a forward cache");
  if (grad_out.rows() != static_cast<std::size_t>(c.out_height) ||
      grad_out.cols() != static_cast<std::size_t>(c.out_width)) {
    throw ConfigError("output gradient shape does not match the cached forward pass");
  }
  if (grads.size() != params.size()) throw ConfigError("gradient buffer has the wrong size");
  const int d = cfg.depth;
  const LayerIndex idx{d};
  auto layer = [&](int i) -> const ConvShape& { return layers[static_cast<std::size_t>(i)]; };
  const Tensor& top = d > 1 ? c.dec_b[0] : c.enc_b[0];

  // Padded rows/columns were cropped away, so their gradient is zero.
  Tensor dhead(1, top.height, top.width);
  for (int y = 0; y < c.out_height; ++y) {
    for (int x = 0; x < c.out_width; ++x) {
      dhead.at(0, y, x) = grad_out(static_cast<std::size_t>(y), static_cast<std::size_t>(x));
    }
  }
  Tensor dx;
  conv_backward(layer(idx.head()), params, grads, top, static_cast<const Tensor*>(nullptr), dhead, &dx);

  // Decoder, walked from the head back towards the bottleneck. At the start of
  // iteration l, dx is the gradient of dec{l}.b's output.
  std::vector<Tensor> dskip(static_cast<std::size_t>(d));
  for (int l = 0; l <= d - 2; ++l) {
    const auto L = static_cast<std::size_t>(l);
    Tensor da;
    conv_backward(layer(idx.dec_b(l)), params, grads, c.dec_a[L], &c.dec_b[L], dx, &da);
    Tensor dcat;
    conv_backward(layer(idx.dec_a(l)), params, grads, c.dec_cat[L], &c.dec_a[L], da, &dcat);
    const int wl = cfg.width_at(l);
    Tensor dup = split_tail(dcat, wl);
    dskip[L] = std::move(dcat);
    // the up-conv activation (for its ReLU mask) is the tail of dec_cat
    Tensor up_out(wl, c.dec_cat[L].height, c.dec_cat[L].width);
    std::copy(c.dec_cat[L].data.end() - static_cast<std::ptrdiff_t>(up_out.data.size()), c.dec_cat[L].data.end(),
              up_out.data.begin());
    Tensor dupin;
    conv_backward(layer(idx.dec_up(l)), params, grads, c.dec_up[L], &up_out, dup, &dupin);
    dx = upsample2_backward(dupin);
  }

  // Encoder; dx is now the gradient of enc{depth-1}.b's output.
  for (int l = d - 1; l >= 0; --l) {
    const auto L = static_cast<std::size_t>(l);
    if (l < d - 1) {
      for (std::size_t i = 0; i < dx.data.size(); ++i) dx.data[i] += dskip[L].data[i];
    }
    Tensor da;
    conv_backward(layer(idx.enc_b(l)), params, grads, c.enc_a[L], &c.enc_b[L], dx, &da);
    if (l == 0) {
      conv_backward(layer(idx.enc_a(l)), params, grads, c.enc_in[L], &c.enc_a[L], da, static_cast<Tensor*>(nullptr));
      break;
    }
    Tensor din;
    conv_backward(layer(idx.enc_a(l)), params, grads, c.enc_in[L], &c.enc_a[L], da, &din);
    dx = maxpool2_backward(din, c.pool_argmax[L - 1], c.enc_b[L - 1].height, c.enc_b[L - 1].width);
  }
}

std::vector<double> widen(const std::vector<float>& v) { return {v.begin(), v.end()}; }

}  // namespace

Array2f forward_pass(const NetworkWeights& w, const Tensor3& x, ForwardCache* cache) {
  ForwardCache local;
  return forward_impl(w.config, w.layers, w.params, x, cache ? *cache : local);
}

void backward_accumulate(const NetworkWeights& w, const ForwardCache& c, const Array2f& grad_out,
                         std::vector<float>& grads) {
  backward_impl(w.config, w.layers, w.params, c, grad_out, grads);
}

std::vector<float> backward_pass(const NetworkWeights& w, const ForwardCache& cache, const Array2f& grad_out) {
  std::vector<float> grads(w.params.size(), 0.0f);
  backward_accumulate(w, cache, grad_out, grads);
  return grads;
}

Array2d forward_pass_f64(const NetworkWeights& w, const Tensor3d& x, ForwardCache64* cache) {
  ForwardCache64 local;
  return forward_impl(w.config, w.layers, widen(w.params), x, cache ? *cache : local);
}

std::vector<double> backward_pass_f64(const NetworkWeights& w, const ForwardCache64& cache, const Array2d& grad_out) {
  std::vector<double> grads(w.params.size(), 0.0);
  backward_impl(w.config, w.layers, widen(w.params), cache, grad_out, grads);
  return grads;
}

}  // namespace velinv::net
