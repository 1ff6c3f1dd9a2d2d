#include "network.hpp"

#include <Eigen/Core>
#include <algorithm>
#include <cmath>
#include <string>

#include "lmid/errors.hpp"
#include "lmid/rng.hpp"

namespace lmid {

void ArchSpec::validate() const {
  if (cond_channels < 0 || cond_channels > 8) throw ConfigError("arch: cond_channels out of range");
  if (depth < 0 || depth > 5) throw ConfigError("arch: depth must be in [0,5]");
  if (width < 0 || width > 256) throw ConfigError("arch: width must be in [0,256]");
  if (width == 0 && depth != 0) throw ConfigError("arch: width 0 requires depth 0");
  if (kernel != 1 && kernel != 3) throw ConfigError("arch: kernel must be 1 or 3");
  if (time_dim < 0 || time_dim % 2 != 0) throw ConfigError("arch: time_dim must be even and >= 0");
  if (groups < 0) throw ConfigError("arch: groups must be >= 0");
  if (width > 0 && groups > 0 && width % groups != 0) {
    throw ConfigError("arch: width must be divisible by groups");
  }
}

std::size_t parameter_count(const ArchSpec& arch) { return net::make_layout(arch).total; }

namespace net {
namespace {

template <typename T>
using RowMat = Eigen::Matrix<T, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
template <typename T>
using MapMat = Eigen::Map<RowMat<T>>;
template <typename T>
using MapConstMat = Eigen::Map<const RowMat<T>>;

class Allocator {
 public:
  std::size_t take(std::size_t n) {
    const std::size_t at = next_;
    next_ += n;
    return at;
  }
  std::size_t used() const { return next_; }

 private:
  std::size_t next_ = 0;
};

ConvLayout make_conv(Allocator& a, int cin, int cout, int k, bool bias) {
  ConvLayout c{0, 0, cin, cout, k, bias};
  c.weight = a.take(static_cast<std::size_t>(cout) * cin * k * k);
  if (bias) c.bias = a.take(cout);
  return c;
}

LinearLayout make_linear(Allocator& a, int in, int out) {
  LinearLayout l{0, 0, in, out};
  l.weight = a.take(static_cast<std::size_t>(in) * out);
  l.bias = a.take(out);
  return l;
}

BlockLayout make_block(Allocator& a, const ArchSpec& arch, int cin, int cout) {
  BlockLayout b;
  b.conv = make_conv(a, cin, cout, arch.kernel, true);
  if (arch.groups > 0) {
    b.norm.channels = cout;
    b.norm.groups = arch.groups;
    b.norm.gamma = a.take(cout);
    b.norm.beta = a.take(cout);
  }
  if (arch.time_dim > 0) b.temb = make_linear(a, arch.time_dim, cout);
  return b;
}

}  // namespace

NetLayout make_layout(const ArchSpec& arch) {
  arch.validate();
  NetLayout L;
  L.arch = arch;
  Allocator a;
  if (arch.time_dim > 0 && arch.width > 0) L.time_mlp = make_linear(a, arch.time_dim, arch.time_dim);
  int out_channels = arch.in_channels();
  if (arch.width > 0) {
    int cin = arch.in_channels();
    for (int l = 0; l <= arch.depth; ++l) {
      const int ch = arch.width << l;
      L.encoder.push_back(make_block(a, arch, cin, ch));
      cin = ch;
    }
    L.decoder.resize(arch.depth);
    int below = arch.width << arch.depth;
    for (int l = arch.depth - 1; l >= 0; --l) {
      const int ch = arch.width << l;
      L.decoder[l] = make_block(a, arch, below + ch, ch);
      below = ch;
    }
    out_channels = arch.width;
  }
  L.output = make_conv(a, out_channels, 1, arch.kernel, arch.final_bias);
  L.total = a.used();
  return L;
}

std::vector<float> init_params(const NetLayout& L, std::uint64_t seed) {
  std::vector<float> p(L.total, 0.0f);
  Rng rng(derive_seed(seed, "init"));
  auto fill = [&](std::size_t at, std::size_t n, double stddev) {
    for (std::size_t i = 0; i < n; ++i) p[at + i] = static_cast<float>(stddev * standard_normal(rng));
  };
  auto init_conv = [&](const ConvLayout& c) {
    fill(c.weight, static_cast<std::size_t>(c.cout) * c.cin * c.kernel * c.kernel,
         std::sqrt(1.0 / (c.cin * c.kernel * c.kernel)));
  };
  auto init_linear = [&](const LinearLayout& l) {
    if (l.out > 0) fill(l.weight, static_cast<std::size_t>(l.in) * l.out, std::sqrt(1.0 / l.in));
  };
  init_linear(L.time_mlp);
  auto init_block = [&](const BlockLayout& b) {
    init_conv(b.conv);
    if (b.norm.groups > 0) std::fill_n(p.begin() + b.norm.gamma, b.norm.channels, 1.0f);
    init_linear(b.temb);
  };
  for (const auto& b : L.encoder) init_block(b);
  for (const auto& b : L.decoder) init_block(b);
  if (!L.arch.zero_init_final) init_conv(L.output);
  return p;
}

namespace {

template <typename T>
T sigmoid(T x) {
  return T(1) / (T(1) + std::exp(-x));
}

template <typename T>
void im2col(const Tensor<T>& in, int k, std::vector<T>& cols) {
  const int pad = k / 2;
  const std::size_t hw = in.hw();
  cols.assign(static_cast<std::size_t>(in.c) * k * k * hw, T(0));
  std::size_t row = 0;
  for (int ci = 0; ci < in.c; ++ci) {
    const T* src = in.channel(ci);
    for (int ky = 0; ky < k; ++ky) {
      for (int kx = 0; kx < k; ++kx, ++row) {
        T* dst = cols.data() + row * hw;
        for (int y = 0; y < in.h; ++y) {
          const int sy = y + ky - pad;
          if (sy < 0 || sy >= in.h) continue;
          for (int x = 0; x < in.w; ++x) {
            const int sx = x + kx - pad;
            if (sx >= 0 && sx < in.w) dst[y * in.w + x] = src[sy * in.w + sx];
          }
        }
      }
    }
  }
}

template <typename T>
void col2im(const std::vector<T>& cols, int k, Tensor<T>& out) {
  const int pad = k / 2;
  const std::size_t hw = out.hw();
  std::fill(out.v.begin(), out.v.end(), T(0));
  std::size_t row = 0;
  for (int ci = 0; ci < out.c; ++ci) {
    T* dst = out.channel(ci);
    for (int ky = 0; ky < k; ++ky) {
      for (int kx = 0; kx < k; ++kx, ++row) {
        const T* src = cols.data() + row * hw;
        for (int y = 0; y < out.h; ++y) {
          const int sy = y + ky - pad;
          if (sy < 0 || sy >= out.h) continue;
          for (int x = 0; x < out.w; ++x) {
            const int sx = x + kx - pad;
            if (sx >= 0 && sx < out.w) dst[sy * out.w + sx] += src[y * out.w + x];
          }
        }
      }
    }
  }
}

template <typename T>
Tensor<T> conv_forward(const ConvLayout& c, std::span<const T> p, const Tensor<T>& in,
                       std::vector<T>& cols) {
  im2col(in, c.kernel, cols);
  const auto K = static_cast<Eigen::Index>(c.cin) * c.kernel * c.kernel;
  const auto hw = static_cast<Eigen::Index>(in.hw());
  Tensor<T> out(c.cout, in.h, in.w);
  MapConstMat<T> W(p.data() + c.weight, c.cout, K);
  MapConstMat<T> X(cols.data(), K, hw);
  MapMat<T> Y(out.v.data(), c.cout, hw);
  Y.noalias() = W * X;
  if (c.has_bias) {
    for (int co = 0; co < c.cout; ++co) Y.row(co).array() += p[c.bias + co];
  }
  return out;
}

template <typename T>
Tensor<T> conv_backward(const ConvLayout& c, std::span<const T> p, const std::vector<T>& cols,
                        int in_h, int in_w, const Tensor<T>& dout, std::span<T> grad,
                        bool need_input_grad) {
  const auto K = static_cast<Eigen::Index>(c.cin) * c.kernel * c.kernel;
  const auto hw = static_cast<Eigen::Index>(dout.hw());
  MapConstMat<T> dY(dout.v.data(), c.cout, hw);
  MapConstMat<T> X(cols.data(), K, hw);
  MapMat<T> dW(grad.data() + c.weight, c.cout, K);
  dW.noalias() += dY * X.transpose();
  if (c.has_bias) {
    // plain loop: Eigen's vectorized sum peels by address, which breaks reproducibility
    for (int co = 0; co < c.cout; ++co) {
      const T* row = dout.v.data() + static_cast<std::size_t>(co) * hw;
      double acc = 0.0;
      for (Eigen::Index k = 0; k < hw; ++k) acc += row[k];
      grad[c.bias + co] += static_cast<T>(acc);
    }
  }
  Tensor<T> din(c.cin, in_h, in_w);
  if (!need_input_grad) return din;
  MapConstMat<T> W(p.data() + c.weight, c.cout, K);
  std::vector<T> dcols(static_cast<std::size_t>(K) * hw);
  MapMat<T> dX(dcols.data(), K, hw);
  dX.noalias() = W.transpose() * dY;
  col2im(dcols, c.kernel, din);
  return din;
}

template <typename T>
std::vector<T> linear_forward(const LinearLayout& l, std::span<const T> p, const std::vector<T>& x) {
  std::vector<T> y(l.out);
  for (int o = 0; o < l.out; ++o) {
    T acc = p[l.bias + o];
    const T* w = p.data() + l.weight + static_cast<std::size_t>(o) * l.in;
    for (int i = 0; i < l.in; ++i) acc += w[i] * x[i];
    y[o] = acc;
  }
  return y;
}

// Accumulates parameter grads and returns dx.
template <typename T>
std::vector<T> linear_backward(const LinearLayout& l, std::span<const T> p, const std::vector<T>& x,
                               const std::vector<T>& dy, std::span<T> grad) {
  std::vector<T> dx(l.in, T(0));
  for (int o = 0; o < l.out; ++o) {
    grad[l.bias + o] += dy[o];
    const std::size_t row = l.weight + static_cast<std::size_t>(o) * l.in;
    for (int i = 0; i < l.in; ++i) {
      grad[row + i] += dy[o] * x[i];
      dx[i] += p[row + i] * dy[o];
    }
  }
  return dx;
}

constexpr double kNormEps = 1e-5;

template <typename T>
Tensor<T> block_forward(const BlockLayout& b, std::span<const T> p, const Tensor<T>& in,
                        const std::vector<T>& temb, BlockCache<T>& cache) {
  cache.in_c = in.c;
  cache.in_h = in.h;
  cache.in_w = in.w;
  Tensor<T> h = conv_forward(b.conv, p, in, cache.cols);
  const std::size_t hw = h.hw();
  if (b.norm.groups > 0) {
    cache.pre_norm = h;
    const int G = b.norm.groups;
    const int cpg = h.c / G;
    const double M = static_cast<double>(cpg) * hw;
    cache.xhat = Tensor<T>(h.c, h.h, h.w);
    cache.inv_std.assign(G, T(0));
    for (int g = 0; g < G; ++g) {
      const std::size_t begin = static_cast<std::size_t>(g) * cpg * hw;
      const std::size_t end = begin + static_cast<std::size_t>(cpg) * hw;
      double mean = 0.0;
      for (std::size_t i = begin; i < end; ++i) mean += h.v[i];
      mean /= M;
      double var = 0.0;
      for (std::size_t i = begin; i < end; ++i) {
        const double d = h.v[i] - mean;
        var += d * d;
      }
      var /= M;
      const T inv = static_cast<T>(1.0 / std::sqrt(var + kNormEps));
      cache.inv_std[g] = inv;
      for (std::size_t i = begin; i < end; ++i) {
        cache.xhat.v[i] = (h.v[i] - static_cast<T>(mean)) * inv;
      }
    }
    for (int ch = 0; ch < h.c; ++ch) {
      const T gamma = p[b.norm.gamma + ch];
      const T beta = p[b.norm.beta + ch];
      const T* xh = cache.xhat.channel(ch);
      T* dst = h.channel(ch);
      for (std::size_t i = 0; i < hw; ++i) dst[i] = gamma * xh[i] + beta;
    }
  }
  cache.pre_act = h;
  for (auto& v : h.v) v = v * sigmoid(v);
  if (b.temb.out > 0) {
    const auto e = linear_forward(b.temb, p, temb);
    for (int ch = 0; ch < h.c; ++ch) {
      T* dst = h.channel(ch);
      for (std::size_t i = 0; i < hw; ++i) dst[i] += e[ch];
    }
  }
  return h;
}

// dout is consumed; returns dL/d(input) and accumulates dL/dtemb.
template <typename T>
Tensor<T> block_backward(const BlockLayout& b, std::span<const T> p, const BlockCache<T>& cache,
                         Tensor<T> dout, const std::vector<T>& temb, std::vector<T>& dtemb,
                         std::span<T> grad, bool need_input_grad) {
  const std::size_t hw = dout.hw();
  if (b.temb.out > 0) {
    std::vector<T> de(dout.c, T(0));
    for (int ch = 0; ch < dout.c; ++ch) {
      const T* g = dout.channel(ch);
      double acc = 0.0;
      for (std::size_t i = 0; i < hw; ++i) acc += g[i];
      de[ch] = static_cast<T>(acc);
    }
    const auto dt = linear_backward(b.temb, p, temb, de, grad);
    for (std::size_t i = 0; i < dt.size(); ++i) dtemb[i] += dt[i];
  }
  for (std::size_t i = 0; i < dout.v.size(); ++i) {
    const T x = cache.pre_act.v[i];
    const T s = sigmoid(x);
    dout.v[i] *= s * (T(1) + x * (T(1) - s));
  }
  if (b.norm.groups > 0) {
    const int G = b.norm.groups;
    const int cpg = dout.c / G;
    const double M = static_cast<double>(cpg) * hw;
    Tensor<T> dxhat(dout.c, dout.h, dout.w);
    for (int ch = 0; ch < dout.c; ++ch) {
      const T gamma = p[b.norm.gamma + ch];
      const T* g = dout.channel(ch);
      const T* xh = cache.xhat.channel(ch);
      T* dx = dxhat.channel(ch);
      double dgamma = 0.0, dbeta = 0.0;
      for (std::size_t i = 0; i < hw; ++i) {
        dgamma += static_cast<double>(g[i]) * xh[i];
        dbeta += g[i];
        dx[i] = g[i] * gamma;
      }
      grad[b.norm.gamma + ch] += static_cast<T>(dgamma);
      grad[b.norm.beta + ch] += static_cast<T>(dbeta);
    }
    for (int g = 0; g < G; ++g) {
      const std::size_t begin = static_cast<std::size_t>(g) * cpg * hw;
      const std::size_t end = begin + static_cast<std::size_t>(cpg) * hw;
      // Reductions in double: the three terms below nearly cancel.
      double sum = 0.0, sum_xh = 0.0;
      for (std::size_t i = begin; i < end; ++i) {
        sum += dxhat.v[i];
        sum_xh += static_cast<double>(dxhat.v[i]) * cache.xhat.v[i];
      }
      const double mean = sum / M, mean_xh = sum_xh / M;
      const double inv = cache.inv_std[g];
      for (std::size_t i = begin; i < end; ++i) {
        dout.v[i] = static_cast<T>(inv * (dxhat.v[i] - mean - cache.xhat.v[i] * mean_xh));
      }
    }
  }
  return conv_backward(b.conv, p, cache.cols, cache.in_h, cache.in_w, dout, grad, need_input_grad);
}

template <typename T>
Tensor<T> avg_pool2(const Tensor<T>& in) {
  Tensor<T> out(in.c, in.h / 2, in.w / 2);
  for (int ch = 0; ch < in.c; ++ch) {
    const T* s = in.channel(ch);
    T* d = out.channel(ch);
    for (int y = 0; y < out.h; ++y)
      for (int x = 0; x < out.w; ++x)
        d[y * out.w + x] = T(0.25) * (s[(2 * y) * in.w + 2 * x] + s[(2 * y) * in.w + 2 * x + 1] +
                                      s[(2 * y + 1) * in.w + 2 * x] +
                                      s[(2 * y + 1) * in.w + 2 * x + 1]);
  }
  return out;
}

template <typename T>
void avg_pool2_backward(const Tensor<T>& dout, Tensor<T>& din) {
  for (int ch = 0; ch < dout.c; ++ch) {
    const T* g = dout.channel(ch);
    T* d = din.channel(ch);
    for (int y = 0; y < dout.h; ++y)
      for (int x = 0; x < dout.w; ++x) {
        const T q = T(0.25) * g[y * dout.w + x];
        d[(2 * y) * din.w + 2 * x] += q;
        d[(2 * y) * din.w + 2 * x + 1] += q;
        d[(2 * y + 1) * din.w + 2 * x] += q;
        d[(2 * y + 1) * din.w + 2 * x + 1] += q;
      }
  }
}

// Nearest-neighbour 2x upsample of `low` concatenated with `skip`.
template <typename T>
Tensor<T> upsample_concat(const Tensor<T>& low, const Tensor<T>& skip) {
  Tensor<T> out(low.c + skip.c, skip.h, skip.w);
  for (int ch = 0; ch < low.c; ++ch) {
    const T* s = low.channel(ch);
    T* d = out.channel(ch);
    for (int y = 0; y < skip.h; ++y)
      for (int x = 0; x < skip.w; ++x) d[y * skip.w + x] = s[(y / 2) * low.w + x / 2];
  }
  std::copy(skip.v.begin(), skip.v.end(), out.v.begin() + low.c * out.hw());
  return out;
}

template <typename T>
std::vector<T> time_features(int dim, double sigma) {
  const int half = dim / 2;
  const double c = std::log(sigma);
  std::vector<T> f(dim);
  for (int j = 0; j < half; ++j) {
    const double freq = 0.25 * std::pow(200.0, half > 1 ? static_cast<double>(j) / (half - 1) : 0.0);
    f[j] = static_cast<T>(std::sin(freq * c));
    f[half + j] = static_cast<T>(std::cos(freq * c));
  }
  return f;
}

}  // namespace

template <typename T>
Tensor<T> make_input(const ArchSpec& arch, const Image& x, std::span<const Image> cond) {
  if (static_cast<int>(cond.size()) != arch.cond_channels) {
    throw ConfigError("score model expects " + std::to_string(arch.cond_channels) +
                      " conditioning planes, got " + std::to_string(cond.size()));
  }
  const int div = 1 << arch.depth;
  if (x.width() % div != 0 || x.height() % div != 0) {
    throw ConfigError("image " + std::to_string(x.width()) + "x" + std::to_string(x.height()) +
                      " not divisible by 2^depth = " + std::to_string(div));
  }
  Tensor<T> in(arch.in_channels(), x.height(), x.width());
  std::copy(x.data().begin(), x.data().end(), in.channel(0));
  for (std::size_t k = 0; k < cond.size(); ++k) {
    if (!cond[k].same_shape(x)) throw ConfigError("conditioning plane shape mismatch");
    std::copy(cond[k].data().begin(), cond[k].data().end(), in.channel(static_cast<int>(k) + 1));
  }
  return in;
}

template <typename T>
std::vector<T> forward(const NetLayout& L, std::span<const T> p, const Tensor<T>& input,
                       double sigma, Trace<T>* trace) {
  Trace<T> local;
  Trace<T>& tr = trace ? *trace : local;
  tr.sigma = sigma;
  tr.in_h = input.h;
  tr.in_w = input.w;
  const ArchSpec& arch = L.arch;

  if (L.time_mlp.out > 0) {
    tr.time_feat = time_features<T>(arch.time_dim, sigma);
    tr.time_pre = linear_forward(L.time_mlp, p, tr.time_feat);
    tr.temb = tr.time_pre;
    for (auto& v : tr.temb) v = v * sigmoid(v);
  }

  Tensor<T> feat;
  if (arch.width == 0) {
    feat = input;
  } else {
    tr.enc.assign(L.encoder.size(), {});
    tr.skips.assign(L.encoder.size(), {});
    for (std::size_t l = 0; l < L.encoder.size(); ++l) {
      const Tensor<T> in = l == 0 ? input : avg_pool2(tr.skips[l - 1]);
      tr.skips[l] = block_forward(L.encoder[l], p, in, tr.temb, tr.enc[l]);
    }
    feat = tr.skips.back();
    tr.dec.assign(L.decoder.size(), {});
    tr.dec_up_channels.assign(L.decoder.size(), 0);
    for (int l = static_cast<int>(L.decoder.size()) - 1; l >= 0; --l) {
      tr.dec_up_channels[l] = feat.c;
      const Tensor<T> cat = upsample_concat(feat, tr.skips[l]);
      feat = block_forward(L.decoder[l], p, cat, tr.temb, tr.dec[l]);
    }
  }
  tr.out_in_c = feat.c;
  Tensor<T> out = conv_forward(L.output, p, feat, tr.out_cols);
  if (arch.scale_by_sigma) {
    const T inv = static_cast<T>(1.0 / sigma);
    for (auto& v : out.v) v *= inv;
  }
  return std::move(out.v);
}

template <typename T>
void backward(const NetLayout& L, std::span<const T> p, const Trace<T>& tr,
              std::span<const T> upstream, std::span<T> grad) {
  const ArchSpec& arch = L.arch;
  const int H = tr.in_h;
  const int W = tr.in_w;
  Tensor<T> dout(1, H, W);
  std::copy(upstream.begin(), upstream.end(), dout.v.begin());
  if (arch.scale_by_sigma) {
    const T inv = static_cast<T>(1.0 / tr.sigma);
    for (auto& v : dout.v) v *= inv;
  }
  if (arch.width == 0) {
    conv_backward(L.output, p, tr.out_cols, H, W, dout, grad, false);
    return;
  }
  Tensor<T> dfeat = conv_backward(L.output, p, tr.out_cols, H, W, dout, grad, true);

  std::vector<T> dtemb(arch.time_dim, T(0));
  std::vector<Tensor<T>> dskips(L.encoder.size());
  for (std::size_t l = 0; l < L.encoder.size(); ++l) {
    dskips[l] = Tensor<T>(tr.skips[l].c, tr.skips[l].h, tr.skips[l].w);
  }
  if (L.decoder.empty()) {
    dskips[0] = std::move(dfeat);
  } else {
    for (std::size_t l = 0; l < L.decoder.size(); ++l) {
      Tensor<T> dcat = block_backward(L.decoder[l], p, tr.dec[l], std::move(dfeat), tr.temb, dtemb,
                                      grad, true);
      const int up_c = tr.dec_up_channels[l];
      const std::size_t hw = dcat.hw();
      for (std::size_t i = 0; i < dskips[l].v.size(); ++i) dskips[l].v[i] += dcat.v[up_c * hw + i];
      // Nearest upsample: each low-res pixel collects its 2x2 block.
      const int lh = dcat.h / 2, lw = dcat.w / 2;
      Tensor<T> dlow(up_c, lh, lw);
      for (int ch = 0; ch < up_c; ++ch) {
        const T* g = dcat.channel(ch);
        T* d = dlow.channel(ch);
        for (int y = 0; y < dcat.h; ++y)
          for (int x = 0; x < dcat.w; ++x) d[(y / 2) * lw + x / 2] += g[y * dcat.w + x];
      }
      if (l + 1 < L.decoder.size()) {
        dfeat = std::move(dlow);
      } else {
        for (std::size_t i = 0; i < dlow.v.size(); ++i) dskips[l + 1].v[i] += dlow.v[i];
      }
    }
  }
  for (int l = static_cast<int>(L.encoder.size()) - 1; l >= 0; --l) {
    Tensor<T> din = block_backward(L.encoder[l], p, tr.enc[l], std::move(dskips[l]), tr.temb,
                                   dtemb, grad, l > 0);
    if (l > 0) avg_pool2_backward(din, dskips[l - 1]);
  }
  if (L.time_mlp.out > 0) {
    std::vector<T> dpre(dtemb.size());
    for (std::size_t i = 0; i < dpre.size(); ++i) {
      const T x = tr.time_pre[i];
      const T s = sigmoid(x);
      dpre[i] = dtemb[i] * s * (T(1) + x * (T(1) - s));
    }
    linear_backward(L.time_mlp, p, tr.time_feat, dpre, grad);
  }
}

template Tensor<float> make_input<float>(const ArchSpec&, const Image&, std::span<const Image>);
template Tensor<double> make_input<double>(const ArchSpec&, const Image&, std::span<const Image>);
template std::vector<float> forward<float>(const NetLayout&, std::span<const float>,
                                           const Tensor<float>&, double, Trace<float>*);
template std::vector<double> forward<double>(const NetLayout&, std::span<const double>,
                                             const Tensor<double>&, double, Trace<double>*);
template void backward<float>(const NetLayout&, std::span<const float>, const Trace<float>&,
                              std::span<const float>, std::span<float>);
template void backward<double>(const NetLayout&, std::span<const double>, const Trace<double>&,
                               std::span<const double>, std::span<double>);

}  // namespace net
}  // namespace lmid
