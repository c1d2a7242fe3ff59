#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <random>
#include <string>
#include <thread>
#include <vector>
#include <stdexcept>

#include "aed/gemm.hpp"

namespace aed::nn {

enum class Head { binary, multiclass };

// Fixed three-block topology: two 3x3 same-padding convolutions per block,
// each block closed by a 2x2 max pool and dropout, then two dense layers.
// Filter counts, dense width and input size are parameters so tests can
// run reduced instances; the defaults are the full classifier.
struct ModelDef {
  int input_h = 64;
  int input_w = 128;
  std::array<int, 6> conv_filters{32, 64, 64, 64, 128, 128};
  int dense_width = 128;
  std::array<double, 4> dropout_rates{0.25, 0.50, 0.50, 0.50};
  Head head = Head::binary;
  int n_classes = 2;

  int out_units() const { return head == Head::binary ? 1 : n_classes; }
  int flat_size() const { return conv_filters[5] * (input_h / 8) * (input_w / 8); }

  void validate() const {
    if (input_h <= 0 || input_w <= 0 || input_h % 8 != 0 || input_w % 8 != 0)
      throw std::invalid_argument("ModelDef: input dims must be positive multiples of 8");
    for (int f : conv_filters)
      if (f <= 0) throw std::invalid_argument("ModelDef: filter counts must be positive");
    if (dense_width <= 0) throw std::invalid_argument("ModelDef: dense_width must be positive");
    for (double r : dropout_rates)
      if (r < 0.0 || r >= 1.0) throw std::invalid_argument("ModelDef: dropout rate out of range");
    if (head == Head::binary && n_classes != 2)
      throw std::invalid_argument("ModelDef: binary head implies n_classes == 2");
    if (head == Head::multiclass && n_classes < 2)
      throw std::invalid_argument("ModelDef: multiclass head needs n_classes >= 2");
  }

  std::int64_t param_count() const {
    std::int64_t total = 0;
    int ic = 1;
    for (int f : conv_filters) {
      total += static_cast<std::int64_t>(f) * (ic * 9 + 1);
      ic = f;
    }
    total += static_cast<std::int64_t>(dense_width) * (flat_size() + 1);
    total += static_cast<std::int64_t>(out_units()) * (dense_width + 1);
    return total;
  }
};

struct TrainConfig {
  double learning_rate = 1e-3;
  double rms_decay = 0.9;
  double epsilon = 1e-7;
  int batch_size = 32;
  int epochs = 3;
  std::uint64_t seed = 42;

  void validate() const {
    if (learning_rate <= 0.0) throw std::invalid_argument("TrainConfig: learning_rate must be > 0");
    if (rms_decay <= 0.0 || rms_decay >= 1.0)
      throw std::invalid_argument("TrainConfig: rms_decay must be in (0, 1)");
    if (epsilon <= 0.0) throw std::invalid_argument("TrainConfig: epsilon must be > 0");
    if (batch_size <= 0 || epochs <= 0)
      throw std::invalid_argument("TrainConfig: batch_size and epochs must be positive");
  }
};

namespace detail {

template <class T>
struct ConvLayer {
  int in_ch = 0, out_ch = 0, h = 0, w = 0;
  std::vector<T> weight, bias;      // [oc][ic*9], [oc]
  std::vector<T> grad_w, grad_b;
  std::vector<T> col;               // im2col of the last input, [ic*9][h*w]
  std::vector<T> out;               // post-ReLU activations, [oc][h*w]
  std::vector<T> delta;             // dL/d(pre-activation) scratch
  std::vector<T> dx;                // dL/d(input)

  void setup(int ic, int oc, int hh, int ww) {
    in_ch = ic;
    out_ch = oc;
    h = hh;
    w = ww;
    weight.assign(static_cast<std::size_t>(oc) * ic * 9, T(0));
    bias.assign(oc, T(0));
    grad_w.assign(weight.size(), T(0));
    grad_b.assign(bias.size(), T(0));
    col.assign(static_cast<std::size_t>(ic) * 9 * h * w, T(0));
    out.assign(static_cast<std::size_t>(oc) * h * w, T(0));
    delta.assign(out.size(), T(0));
    dx.assign(static_cast<std::size_t>(ic) * h * w, T(0));
  }
};

template <class T>
struct DenseLayer {
  int in = 0, out = 0;
  std::vector<T> weight, bias;  // [out][in], [out]
  std::vector<T> grad_w, grad_b;
  std::vector<T> x;             // stored input
  std::vector<T> z;             // pre-activation output

  void setup(int in_f, int out_f) {
    in = in_f;
    out = out_f;
    weight.assign(static_cast<std::size_t>(out) * in, T(0));
    bias.assign(out, T(0));
    grad_w.assign(weight.size(), T(0));
    grad_b.assign(bias.size(), T(0));
    x.assign(in, T(0));
    z.assign(out, T(0));
  }
};

// 3x3 same-padding im2col: row (c*9 + ky*3 + kx) holds the input channel c
// shifted by (ky-1, kx-1), zero-filled at the border.
template <class T>
void im2col_3x3(const T* x, int in_ch, int h, int w, T* col) {
  const std::size_t plane = static_cast<std::size_t>(h) * w;
  for (int c = 0; c < in_ch; ++c) {
    const T* xc = x + c * plane;
    for (int ky = 0; ky < 3; ++ky) {
      for (int kx = 0; kx < 3; ++kx) {
        T* row = col + (static_cast<std::size_t>(c) * 9 + ky * 3 + kx) * plane;
        const int dy = ky - 1, dx = kx - 1;
        for (int y = 0; y < h; ++y) {
          T* dst = row + static_cast<std::size_t>(y) * w;
          const int sy = y + dy;
          if (sy < 0 || sy >= h) {
            std::fill(dst, dst + w, T(0));
            continue;
          }
          const T* src = xc + static_cast<std::size_t>(sy) * w;
          if (dx == 0) {
            std::copy(src, src + w, dst);
          } else if (dx < 0) {
            dst[0] = T(0);
            std::copy(src, src + w - 1, dst + 1);
          } else {
            std::copy(src + 1, src + w, dst);
            dst[w - 1] = T(0);
          }
        }
      }
    }
  }
}

template <class T>
void col2im_3x3(const T* col, int in_ch, int h, int w, T* dx) {
  const std::size_t plane = static_cast<std::size_t>(h) * w;
  std::fill(dx, dx + static_cast<std::size_t>(in_ch) * plane, T(0));
  for (int c = 0; c < in_ch; ++c) {
    T* xc = dx + c * plane;
    for (int ky = 0; ky < 3; ++ky) {
      for (int kx = 0; kx < 3; ++kx) {
        const T* row = col + (static_cast<std::size_t>(c) * 9 + ky * 3 + kx) * plane;
        const int dy = ky - 1, dxo = kx - 1;
        for (int y = 0; y < h; ++y) {
          const int sy = y + dy;
          if (sy < 0 || sy >= h) continue;
          const T* src = row + static_cast<std::size_t>(y) * w;
          T* dst = xc + static_cast<std::size_t>(sy) * w;
          if (dxo == 0)
            for (int i = 0; i < w; ++i) dst[i] += src[i];
          else if (dxo < 0)
            for (int i = 1; i < w; ++i) dst[i - 1] += src[i];
          else
            for (int i = 0; i < w - 1; ++i) dst[i + 1] += src[i];
        }
      }
    }
  }
}

// Inverted dropout factors: 0 with probability p, else 1/(1-p), so the
// expected train-time activation equals the eval-time one.
template <class T>
void dropout_factors(std::vector<T>& factors, double p, std::mt19937_64& rng) {
  std::uniform_real_distribution<double> unif(0.0, 1.0);
  const T keep_scale = static_cast<T>(1.0 / (1.0 - p));
  for (auto& f : factors) f = unif(rng) < p ? T(0) : keep_scale;
}

}  // namespace detail

// CNN state: parameters, RMSprop accumulators, and all forward/backward
// workspaces for one sample at a time. Copyable, so evaluation can clone
// per worker thread.
template <class T>
class Model {
 public:
  ModelDef def;
  std::uint64_t seed = 0;

  detail::ConvLayer<T> conv[6];
  std::vector<T> pool_out[3];
  std::vector<std::uint8_t> pool_idx[3];
  std::vector<T> drop_buf[3];
  std::vector<T> drop_factor[4];
  detail::DenseLayer<T> dense1, dense2;
  std::vector<T> a1;          // post-ReLU hidden dense activations
  std::vector<T> d4;          // post-dropout hidden activations
  std::vector<T> probs;       // head output
  std::vector<T> input_grad;  // dL/d(input), filled on request

  std::vector<std::vector<T>> rms_acc;  // one per parameter tensor

  explicit Model(const ModelDef& d) : def(d) {
    def.validate();
    const int h = def.input_h, w = def.input_w;
    conv[0].setup(1, def.conv_filters[0], h, w);
    conv[1].setup(def.conv_filters[0], def.conv_filters[1], h, w);
    conv[2].setup(def.conv_filters[1], def.conv_filters[2], h / 2, w / 2);
    conv[3].setup(def.conv_filters[2], def.conv_filters[3], h / 2, w / 2);
    conv[4].setup(def.conv_filters[3], def.conv_filters[4], h / 4, w / 4);
    conv[5].setup(def.conv_filters[4], def.conv_filters[5], h / 4, w / 4);
    for (int k = 0; k < 3; ++k) {
      const int ch = def.conv_filters[2 * k + 1];
      const int ph = h >> (k + 1), pw = w >> (k + 1);
      pool_out[k].assign(static_cast<std::size_t>(ch) * ph * pw, T(0));
      pool_idx[k].assign(pool_out[k].size(), 0);
      drop_buf[k].assign(pool_out[k].size(), T(0));
      drop_factor[k].assign(pool_out[k].size(), T(1));
    }
    dense1.setup(def.flat_size(), def.dense_width);
    dense2.setup(def.dense_width, def.out_units());
    drop_factor[3].assign(def.dense_width, T(1));
    a1.assign(def.dense_width, T(0));
    d4.assign(def.dense_width, T(0));
    probs.assign(def.out_units(), T(0));
    input_grad.assign(static_cast<std::size_t>(h) * w, T(0));

    rms_acc.resize(16);
    auto params = param_tensors();
    for (std::size_t i = 0; i < params.size(); ++i)
      rms_acc[i].assign(params[i].values->size(), T(0));
  }

  struct ParamRef {
    std::vector<T>* values;
    std::vector<T>* grads;
    std::string name;
  };

  std::vector<ParamRef> param_tensors() {
    std::vector<ParamRef> refs;
    for (int i = 0; i < 6; ++i) {
      refs.push_back({&conv[i].weight, &conv[i].grad_w, "conv" + std::to_string(i + 1) + ".weight"});
      refs.push_back({&conv[i].bias, &conv[i].grad_b, "conv" + std::to_string(i + 1) + ".bias"});
    }
    refs.push_back({&dense1.weight, &dense1.grad_w, "dense1.weight"});
    refs.push_back({&dense1.bias, &dense1.grad_b, "dense1.bias"});
    refs.push_back({&dense2.weight, &dense2.grad_w, "dense2.weight"});
    refs.push_back({&dense2.bias, &dense2.grad_b, "dense2.bias"});
    return refs;
  }

  // He-uniform weights, zero biases, zero optimizer state.
  void init_params(std::mt19937_64& rng) {
    auto he_uniform = [&](std::vector<T>& w, int fan_in) {
      const double limit = std::sqrt(6.0 / fan_in);
      std::uniform_real_distribution<double> unif(-limit, limit);
      for (auto& v : w) v = static_cast<T>(unif(rng));
    };
    for (int i = 0; i < 6; ++i) {
      he_uniform(conv[i].weight, conv[i].in_ch * 9);
      std::fill(conv[i].bias.begin(), conv[i].bias.end(), T(0));
    }
    he_uniform(dense1.weight, dense1.in);
    std::fill(dense1.bias.begin(), dense1.bias.end(), T(0));
    he_uniform(dense2.weight, dense2.in);
    std::fill(dense2.bias.begin(), dense2.bias.end(), T(0));
    for (auto& acc : rms_acc) std::fill(acc.begin(), acc.end(), T(0));
  }

  void init_params(std::uint64_t s) {
    seed = s;
    std::mt19937_64 rng(s);
    init_params(rng);
  }

  // Forward pass for one sample (x has input_h * input_w values in [0, 1]).
  // Dropout draws from rng only when training.
  const std::vector<T>& forward(const T* x, bool training = false,
                                std::mt19937_64* rng = nullptr) {
    if (training && !rng)
      throw std::invalid_argument("Model::forward: training mode needs an RNG");

    conv_forward(conv[0], x);
    conv_forward(conv[1], conv[0].out.data());
    pool_forward(0, conv[1]);
    dropout_forward(0, pool_out[0], drop_buf[0], def.dropout_rates[0], training, rng);

    conv_forward(conv[2], drop_buf[0].data());
    conv_forward(conv[3], conv[2].out.data());
    pool_forward(1, conv[3]);
    dropout_forward(1, pool_out[1], drop_buf[1], def.dropout_rates[1], training, rng);

    conv_forward(conv[4], drop_buf[1].data());
    conv_forward(conv[5], conv[4].out.data());
    pool_forward(2, conv[5]);
    dropout_forward(2, pool_out[2], drop_buf[2], def.dropout_rates[2], training, rng);

    dense_forward(dense1, drop_buf[2].data());
    for (int i = 0; i < dense1.out; ++i) a1[i] = std::max(T(0), dense1.z[i]);
    dropout_forward(3, a1, d4, def.dropout_rates[3], training, rng);
    dense_forward(dense2, d4.data());

    if (def.head == Head::binary) {
      const double z = static_cast<double>(dense2.z[0]);
      probs[0] = static_cast<T>(z >= 0.0 ? 1.0 / (1.0 + std::exp(-z))
                                         : std::exp(z) / (1.0 + std::exp(z)));
    } else {
      double zmax = -1e300;
      for (int i = 0; i < dense2.out; ++i) zmax = std::max(zmax, static_cast<double>(dense2.z[i]));
      double sum = 0.0;
      for (int i = 0; i < dense2.out; ++i) {
        const double e = std::exp(static_cast<double>(dense2.z[i]) - zmax);
        probs[i] = static_cast<T>(e);
        sum += e;
      }
      for (int i = 0; i < dense2.out; ++i) probs[i] = static_cast<T>(probs[i] / sum);
    }
    return probs;
  }

  // Backward pass for the sample last seen by forward. dlogits is
  // dL/d(dense2 pre-activation); gradients accumulate until zero_grads.
  void backward(const std::vector<T>& dlogits, bool want_input_grad = false) {
    if (static_cast<int>(dlogits.size()) != dense2.out)
      throw std::invalid_argument("Model::backward: dlogits size mismatch");

    static thread_local std::vector<T> dd4, dz1, dflat;
    dd4.assign(dense1.out, T(0));
    dz1.assign(dense1.out, T(0));
    dflat.assign(dense1.in, T(0));

    dense_backward(dense2, dlogits.data(), dd4.data());
    for (int i = 0; i < dense1.out; ++i) {
      const T da = dd4[i] * drop_factor[3][i];
      dz1[i] = a1[i] > T(0) ? da : T(0);
    }
    dense_backward(dense1, dz1.data(), dflat.data());

    // dflat aliases the block-3 dropout output
    dropout_pool_backward(2, dflat, conv[5]);
    conv_backward(conv[5], true);
    relu_mask(conv[4], conv[5].dx);
    conv_backward(conv[4], true);

    dropout_pool_backward(1, conv[4].dx, conv[3]);
    conv_backward(conv[3], true);
    relu_mask(conv[2], conv[3].dx);
    conv_backward(conv[2], true);

    dropout_pool_backward(0, conv[2].dx, conv[1]);
    conv_backward(conv[1], true);
    relu_mask(conv[0], conv[1].dx);
    conv_backward(conv[0], want_input_grad);
    if (want_input_grad)
      std::copy(conv[0].dx.begin(), conv[0].dx.end(), input_grad.begin());
  }

  void zero_grads() {
    for (auto& ref : param_tensors()) std::fill(ref.grads->begin(), ref.grads->end(), T(0));
  }

  // acc = decay*acc + (1-decay)*g^2 ; param -= lr * g / (sqrt(acc) + eps).
  // Throws, naming the tensor, if a non-finite gradient shows up.
  void rmsprop_step(const TrainConfig& cfg) {
    auto params = param_tensors();
    for (std::size_t p = 0; p < params.size(); ++p) {
      auto& w = *params[p].values;
      auto& g = *params[p].grads;
      auto& acc = rms_acc[p];
      for (std::size_t i = 0; i < w.size(); ++i) {
        if (!std::isfinite(static_cast<double>(g[i])))
          throw std::runtime_error("rmsprop_step: non-finite gradient in " + params[p].name);
        acc[i] = static_cast<T>(cfg.rms_decay * acc[i] + (1.0 - cfg.rms_decay) * g[i] * g[i]);
        w[i] -= static_cast<T>(cfg.learning_rate * g[i] /
                               (std::sqrt(static_cast<double>(acc[i])) + cfg.epsilon));
      }
    }
  }

 private:
  void conv_forward(detail::ConvLayer<T>& l, const T* x) {
    const int hw = l.h * l.w;
    detail::im2col_3x3(x, l.in_ch, l.h, l.w, l.col.data());
    aed::detail::gemm(false, false, l.out_ch, hw, l.in_ch * 9, T(1), l.weight.data(), l.in_ch * 9,
                      l.col.data(), hw, T(0), l.out.data(), hw);
    for (int oc = 0; oc < l.out_ch; ++oc) {
      T* row = l.out.data() + static_cast<std::size_t>(oc) * hw;
      const T b = l.bias[oc];
      for (int i = 0; i < hw; ++i) row[i] = std::max(T(0), row[i] + b);
    }
  }

  // Expects l.delta to hold dL/d(pre-activation); accumulates the weight
  // and bias gradients and, when asked, writes dL/d(input) into l.dx.
  // The col buffer is consumed (reused for d(col)).
  void conv_backward(detail::ConvLayer<T>& l, bool want_dx) {
    const int hw = l.h * l.w;
    aed::detail::gemm(false, true, l.out_ch, l.in_ch * 9, hw, T(1), l.delta.data(), hw,
                      l.col.data(), hw, T(1), l.grad_w.data(), l.in_ch * 9);
    for (int oc = 0; oc < l.out_ch; ++oc) {
      const T* row = l.delta.data() + static_cast<std::size_t>(oc) * hw;
      T s = T(0);
      for (int i = 0; i < hw; ++i) s += row[i];
      l.grad_b[oc] += s;
    }
    if (want_dx) {
      aed::detail::gemm(true, false, l.in_ch * 9, hw, l.out_ch, T(1), l.weight.data(),
                        l.in_ch * 9, l.delta.data(), hw, T(0), l.col.data(), hw);
      detail::col2im_3x3(l.col.data(), l.in_ch, l.h, l.w, l.dx.data());
    }
  }

  // delta_for(prev) = dx_from_next masked by prev's post-ReLU output.
  void relu_mask(detail::ConvLayer<T>& prev, const std::vector<T>& dx_from_next) {
    for (std::size_t i = 0; i < prev.out.size(); ++i)
      prev.delta[i] = prev.out[i] > T(0) ? dx_from_next[i] : T(0);
  }

  // 2x2 max pool over the conv output; ties keep the first element in
  // row-major scan order.
  void pool_forward(int k, const detail::ConvLayer<T>& src) {
    const int ph = src.h / 2, pw = src.w / 2;
    for (int c = 0; c < src.out_ch; ++c) {
      const T* plane = src.out.data() + static_cast<std::size_t>(c) * src.h * src.w;
      T* out = pool_out[k].data() + static_cast<std::size_t>(c) * ph * pw;
      std::uint8_t* idx = pool_idx[k].data() + static_cast<std::size_t>(c) * ph * pw;
      for (int y = 0; y < ph; ++y) {
        for (int x = 0; x < pw; ++x) {
          const int base = 2 * y * src.w + 2 * x;
          T best = plane[base];
          std::uint8_t best_i = 0;
          const T cand1 = plane[base + 1];
          if (cand1 > best) { best = cand1; best_i = 1; }
          const T cand2 = plane[base + src.w];
          if (cand2 > best) { best = cand2; best_i = 2; }
          const T cand3 = plane[base + src.w + 1];
          if (cand3 > best) { best = cand3; best_i = 3; }
          out[y * pw + x] = best;
          idx[y * pw + x] = best_i;
        }
      }
    }
  }

  // Routes d(dropout output) back through the dropout factors and the pool
  // argmax into src.delta, applying src's ReLU mask at the routed element.
  void dropout_pool_backward(int k, const std::vector<T>& d_out, detail::ConvLayer<T>& src) {
    const int ph = src.h / 2, pw = src.w / 2;
    std::fill(src.delta.begin(), src.delta.end(), T(0));
    for (int c = 0; c < src.out_ch; ++c) {
      const std::size_t pbase = static_cast<std::size_t>(c) * ph * pw;
      const std::size_t cbase = static_cast<std::size_t>(c) * src.h * src.w;
      for (int y = 0; y < ph; ++y) {
        for (int x = 0; x < pw; ++x) {
          const std::size_t pi = pbase + y * pw + x;
          const T d = d_out[pi] * drop_factor[k][pi];
          if (d == T(0)) continue;
          const std::uint8_t which = pool_idx[k][pi];
          const std::size_t el =
              cbase + 2 * y * src.w + 2 * x + (which & 1) + (which >> 1) * src.w;
          if (src.out[el] > T(0)) src.delta[el] = d;
        }
      }
    }
  }

  void dropout_forward(int k, const std::vector<T>& x, std::vector<T>& y, double rate,
                       bool training, std::mt19937_64* rng) {
    if (training && rate > 0.0) {
      detail::dropout_factors(drop_factor[k], rate, *rng);
      for (std::size_t i = 0; i < x.size(); ++i) y[i] = x[i] * drop_factor[k][i];
    } else {
      std::fill(drop_factor[k].begin(), drop_factor[k].end(), T(1));
      y = x;
    }
  }

  void dense_forward(detail::DenseLayer<T>& l, const T* x) {
    std::copy(x, x + l.in, l.x.begin());
    aed::detail::gemm(false, false, l.out, 1, l.in, T(1), l.weight.data(), l.in, x, 1, T(0),
                      l.z.data(), 1);
    for (int i = 0; i < l.out; ++i) l.z[i] += l.bias[i];
  }

  void dense_backward(detail::DenseLayer<T>& l, const T* dz, T* dx) {
    aed::detail::gemm(false, false, l.out, l.in, 1, T(1), dz, 1, l.x.data(), l.in, T(1),
                      l.grad_w.data(), l.in);
    for (int i = 0; i < l.out; ++i) l.grad_b[i] += dz[i];
    aed::detail::gemm(true, false, l.in, 1, l.out, T(1), l.weight.data(), l.in, dz, 1, T(0), dx,
                      1);
  }
};

// Mean cross-entropy for one sample plus dL/d(logits) before the 1/batch
// scaling. Probabilities are clamped at 1e-7 before the log; the fused
// gradient form (p - y) is exact for both heads.
template <class T>
std::pair<double, std::vector<T>> sample_loss(Head head, const std::vector<T>& probs, int label,
                                              int n_classes) {
  const double clamp_lo = 1e-7, clamp_hi = 1.0 - 1e-7;
  std::vector<T> dz(probs.size());
  double loss = 0.0;
  if (head == Head::binary) {
    if (label != 0 && label != 1)
      throw std::invalid_argument("sample_loss: binary labels must be 0 or 1");
    const double p = std::clamp(static_cast<double>(probs[0]), clamp_lo, clamp_hi);
    loss = label == 1 ? -std::log(p) : -std::log(1.0 - p);
    dz[0] = static_cast<T>(static_cast<double>(probs[0]) - label);
  } else {
    if (label < 0 || label >= n_classes)
      throw std::invalid_argument("sample_loss: label outside class range");
    const double p = std::clamp(static_cast<double>(probs[label]), clamp_lo, clamp_hi);
    loss = -std::log(p);
    for (std::size_t i = 0; i < probs.size(); ++i)
      dz[i] = probs[i] - static_cast<T>(i == static_cast<std::size_t>(label) ? 1 : 0);
  }
  return {loss, std::move(dz)};
}

// Batch form of the loss: mean loss and per-sample gradients already
// scaled by 1/batch_size.
template <class T>
std::pair<double, std::vector<std::vector<T>>> batch_loss(Head head,
                                                          const std::vector<std::vector<T>>& preds,
                                                          const std::vector<int>& labels,
                                                          int n_classes) {
  if (preds.size() != labels.size() || preds.empty())
    throw std::invalid_argument("batch_loss: batch size mismatch or empty");
  double total = 0.0;
  std::vector<std::vector<T>> grads(preds.size());
  const T scale = static_cast<T>(1.0 / preds.size());
  for (std::size_t i = 0; i < preds.size(); ++i) {
    auto [l, dz] = sample_loss(head, preds[i], labels[i], n_classes);
    total += l;
    for (auto& g : dz) g *= scale;
    grads[i] = std::move(dz);
  }
  return {total / preds.size(), std::move(grads)};
}

struct PredRecord {
  int label = 0;
  int pred = 0;
  double score = 0.0;  // P(positive) for binary, max class probability otherwise
};

struct EvalResult {
  std::vector<std::vector<int>> confusion;  // [true][pred]
  double accuracy = 0.0;
  double precision = 0.0;  // macro
  double recall = 0.0;     // macro
  double f1 = 0.0;         // macro
  std::vector<PredRecord> per_sample;
};

inline void metrics_from_confusion(EvalResult& r) {
  const int c = static_cast<int>(r.confusion.size());
  long total = 0, correct = 0;
  for (int i = 0; i < c; ++i)
    for (int j = 0; j < c; ++j) {
      total += r.confusion[i][j];
      if (i == j) correct += r.confusion[i][j];
    }
  r.accuracy = total ? static_cast<double>(correct) / total : 0.0;
  double psum = 0.0, rsum = 0.0, fsum = 0.0;
  for (int k = 0; k < c; ++k) {
    long tp = r.confusion[k][k], fp = 0, fn = 0;
    for (int i = 0; i < c; ++i)
      if (i != k) {
        fp += r.confusion[i][k];
        fn += r.confusion[k][i];
      }
    const double prec = tp + fp ? static_cast<double>(tp) / (tp + fp) : 0.0;
    const double rec = tp + fn ? static_cast<double>(tp) / (tp + fn) : 0.0;
    const double f1 = prec + rec > 0.0 ? 2.0 * prec * rec / (prec + rec) : 0.0;
    psum += prec;
    rsum += rec;
    fsum += f1;
  }
  r.precision = psum / c;
  r.recall = rsum / c;
  r.f1 = fsum / c;
}

// Threshold-0.5 (binary) or argmax (multiclass) evaluation with a
// confusion matrix and macro-averaged metrics. Worker threads clone the
// model, so results do not depend on n_threads.
template <class T>
EvalResult evaluate(const Model<T>& model, const std::vector<std::vector<T>>& inputs,
                    const std::vector<int>& labels, int n_threads = 1) {
  if (inputs.empty() || inputs.size() != labels.size())
    throw std::invalid_argument("evaluate: empty set or size mismatch");
  const int n_classes = model.def.n_classes;

  EvalResult r;
  r.confusion.assign(n_classes, std::vector<int>(n_classes, 0));
  r.per_sample.resize(inputs.size());

  auto run_range = [&](Model<T>& m, std::size_t lo, std::size_t hi) {
    for (std::size_t i = lo; i < hi; ++i) {
      const auto& p = m.forward(inputs[i].data(), false, nullptr);
      PredRecord rec;
      rec.label = labels[i];
      if (model.def.head == Head::binary) {
        rec.score = static_cast<double>(p[0]);
        rec.pred = rec.score >= 0.5 ? 1 : 0;
      } else {
        int arg = 0;
        for (int k = 1; k < n_classes; ++k)
          if (p[k] > p[arg]) arg = k;
        rec.pred = arg;
        rec.score = static_cast<double>(p[arg]);
      }
      r.per_sample[i] = rec;
    }
  };

  n_threads = std::max(1, std::min<int>(n_threads, static_cast<int>(inputs.size())));
  if (n_threads == 1) {
    Model<T> worker = model;
    run_range(worker, 0, inputs.size());
  } else {
    std::vector<std::thread> threads;
    const std::size_t chunk = (inputs.size() + n_threads - 1) / n_threads;
    std::vector<Model<T>> workers(n_threads, model);
    for (int t = 0; t < n_threads; ++t) {
      const std::size_t lo = t * chunk, hi = std::min(inputs.size(), lo + chunk);
      if (lo >= hi) break;
      threads.emplace_back([&, t, lo, hi] { run_range(workers[t], lo, hi); });
    }
    for (auto& th : threads) th.join();
  }

  for (const auto& rec : r.per_sample) {
    if (rec.label < 0 || rec.label >= n_classes)
      throw std::invalid_argument("evaluate: label outside class range");
    r.confusion[rec.label][rec.pred]++;
  }
  metrics_from_confusion(r);
  return r;
}

template <class T>
struct TrainResult {
  Model<T> model;
  std::vector<double> loss_history;  // mean loss per epoch
};

// Seeded, single-threaded training: He-uniform init, shuffled mini
// batches, RMSprop step per batch. Deterministic for a fixed seed.
template <class T>
TrainResult<T> train(const ModelDef& def, const std::vector<std::vector<T>>& inputs,
                     const std::vector<int>& labels, const TrainConfig& cfg) {
  cfg.validate();
  if (inputs.empty() || inputs.size() != labels.size())
    throw std::invalid_argument("train: empty set or size mismatch");
  if (def.head == Head::binary) {
    const long pos = std::count(labels.begin(), labels.end(), 1);
    if (pos == 0 || pos == static_cast<long>(labels.size()))
      throw std::invalid_argument("train: binary training needs both classes");
  }

  Model<T> model(def);
  model.seed = cfg.seed;
  std::mt19937_64 rng(cfg.seed);
  model.init_params(rng);

  std::vector<std::size_t> order(inputs.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;

  std::vector<double> history;
  history.reserve(cfg.epochs);
  for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
    std::shuffle(order.begin(), order.end(), rng);
    double epoch_loss = 0.0;
    std::size_t done = 0;
    while (done < order.size()) {
      const std::size_t bsz = std::min<std::size_t>(cfg.batch_size, order.size() - done);
      model.zero_grads();
      for (std::size_t b = 0; b < bsz; ++b) {
        const std::size_t i = order[done + b];
        const auto& p = model.forward(inputs[i].data(), true, &rng);
        auto [loss, dz] = sample_loss(def.head, p, labels[i], def.n_classes);
        epoch_loss += loss;
        const T scale = static_cast<T>(1.0 / bsz);
        for (auto& g : dz) g *= scale;
        model.backward(dz);
      }
      model.rmsprop_step(cfg);
      done += bsz;
    }
    history.push_back(epoch_loss / inputs.size());
  }
  return {std::move(model), std::move(history)};
}

// ---- Checkpoints -----------------------------------------------------------
// Versioned binary container: definition header, every parameter tensor and
// RMSprop accumulator as raw 32-bit floats in registry order, and the seed.

inline constexpr char kCheckpointMagic[8] = {'A', 'E', 'D', 'M', 'O', 'D', 'L', '1'};

inline void save_model(Model<float>& model, const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("save_model: cannot open " + path);
  out.write(kCheckpointMagic, 8);

  auto put_i32 = [&](std::int32_t v) { out.write(reinterpret_cast<const char*>(&v), 4); };
  auto put_f64 = [&](double v) { out.write(reinterpret_cast<const char*>(&v), 8); };
  put_i32(model.def.input_h);
  put_i32(model.def.input_w);
  for (int f : model.def.conv_filters) put_i32(f);
  put_i32(model.def.dense_width);
  for (double r : model.def.dropout_rates) put_f64(r);
  put_i32(model.def.head == Head::binary ? 0 : 1);
  put_i32(model.def.n_classes);
  out.write(reinterpret_cast<const char*>(&model.seed), 8);

  auto params = model.param_tensors();
  for (std::size_t i = 0; i < params.size(); ++i) {
    const auto& w = *params[i].values;
    const std::uint64_t n = w.size();
    out.write(reinterpret_cast<const char*>(&n), 8);
    out.write(reinterpret_cast<const char*>(w.data()), static_cast<std::streamsize>(n * 4));
    const auto& acc = model.rms_acc[i];
    out.write(reinterpret_cast<const char*>(acc.data()), static_cast<std::streamsize>(n * 4));
  }
  if (!out) throw std::runtime_error("save_model: write failed: " + path);
}

inline Model<float> load_model(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("load_model: cannot open " + path);
  char magic[8];
  in.read(magic, 8);
  if (!in || std::memcmp(magic, kCheckpointMagic, 8) != 0)
    throw std::runtime_error("load_model: bad magic in " + path);

  auto get_i32 = [&] {
    std::int32_t v;
    in.read(reinterpret_cast<char*>(&v), 4);
    return v;
  };
  auto get_f64 = [&] {
    double v;
    in.read(reinterpret_cast<char*>(&v), 8);
    return v;
  };
  ModelDef def;
  def.input_h = get_i32();
  def.input_w = get_i32();
  for (int& f : def.conv_filters) f = get_i32();
  def.dense_width = get_i32();
  for (double& r : def.dropout_rates) r = get_f64();
  def.head = get_i32() == 0 ? Head::binary : Head::multiclass;
  def.n_classes = get_i32();

  Model<float> model(def);
  in.read(reinterpret_cast<char*>(&model.seed), 8);
  auto params = model.param_tensors();
  for (std::size_t i = 0; i < params.size(); ++i) {
    std::uint64_t n = 0;
    in.read(reinterpret_cast<char*>(&n), 8);
    if (n != params[i].values->size())
      throw std::runtime_error("load_model: tensor size mismatch for " + params[i].name);
    in.read(reinterpret_cast<char*>(params[i].values->data()),
            static_cast<std::streamsize>(n * 4));
    in.read(reinterpret_cast<char*>(model.rms_acc[i].data()), static_cast<std::streamsize>(n * 4));
  }
  if (!in) throw std::runtime_error("load_model: truncated file: " + path);
  return model;
}

}  // namespace aed::nn
