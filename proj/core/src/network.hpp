#pragma once

// Internal: layout and templated forward/backward for the score network.

#include <cstddef>
#include <span>
#include <vector>

#include "lmid/score_model.hpp"

namespace lmid::net {

template <typename T>
struct Tensor {
  int c = 0;
  int h = 0;
  int w = 0;
  std::vector<T> v;

  Tensor() = default;
  Tensor(int c_, int h_, int w_) : c(c_), h(h_), w(w_), v(static_cast<std::size_t>(c_) * h_ * w_) {}
  std::size_t hw() const { return static_cast<std::size_t>(h) * w; }
  T* channel(int k) { return v.data() + k * hw(); }
  const T* channel(int k) const { return v.data() + k * hw(); }
};

struct ConvLayout {
  std::size_t weight = 0;
  std::size_t bias = 0;
  int cin = 0;
  int cout = 0;
  int kernel = 1;
  bool has_bias = true;
};

struct NormLayout {
  std::size_t gamma = 0;
  std::size_t beta = 0;
  int channels = 0;
  int groups = 0;  // 0 = disabled
};

struct LinearLayout {
  std::size_t weight = 0;
  std::size_t bias = 0;
  int in = 0;
  int out = 0;
};

struct BlockLayout {
  ConvLayout conv;
  NormLayout norm;
  LinearLayout temb;  // out == 0 when time conditioning is off
};

struct NetLayout {
  ArchSpec arch;
  LinearLayout time_mlp;
  std::vector<BlockLayout> encoder;  // depth + 1 (empty when width == 0)
  std::vector<BlockLayout> decoder;  // index l = decoder at level l
  ConvLayout output;
  std::size_t total = 0;
};

NetLayout make_layout(const ArchSpec& arch);

// Random init of all parameters; output conv zeroed when arch.zero_init_final.
std::vector<float> init_params(const NetLayout& layout, std::uint64_t seed);

template <typename T>
struct BlockCache {
  std::vector<T> cols;    // im2col of the block input
  Tensor<T> pre_norm;     // conv output
  Tensor<T> xhat;         // normalized (pre-affine)
  std::vector<T> inv_std; // per group
  Tensor<T> pre_act;      // after affine norm
  int in_c = 0, in_h = 0, in_w = 0;
};

template <typename T>
struct Trace {
  std::vector<T> time_feat;
  std::vector<T> time_pre;
  std::vector<T> temb;
  std::vector<BlockCache<T>> enc;
  std::vector<BlockCache<T>> dec;
  std::vector<Tensor<T>> skips;
  std::vector<int> dec_up_channels;  // channels of the upsampled half of each concat
  std::vector<T> out_cols;
  int out_in_c = 0;
  int in_h = 0;
  int in_w = 0;
  double sigma = 1.0;
};

// Builds the (1 + cond) x H x W input tensor.
template <typename T>
Tensor<T> make_input(const ArchSpec& arch, const Image& x, std::span<const Image> cond);

// Returns the H x W output; fills `trace` when non-null.
template <typename T>
std::vector<T> forward(const NetLayout& layout, std::span<const T> params, const Tensor<T>& input,
                       double sigma, Trace<T>* trace);

// Accumulates d<upstream, out>/dparams into grad.
template <typename T>
void backward(const NetLayout& layout, std::span<const T> params, const Trace<T>& trace,
              std::span<const T> upstream, std::span<T> grad);

}  // namespace lmid::net
