#include "lmid/score_model.hpp"

#include <cmath>
#include <cstring>
#include <fstream>
#include <iterator>
#include <string>

#include "lmid/errors.hpp"
#include "network.hpp"

namespace lmid {

ScoreModel::ScoreModel(ArchSpec arch, NoiseSchedule schedule, std::uint64_t init_seed)
    : arch_(arch), schedule_(schedule) {
  params_ = net::init_params(net::make_layout(arch_), init_seed);
}

ScoreModel::ScoreModel(ArchSpec arch, NoiseSchedule schedule, std::vector<float> params)
    : arch_(arch), schedule_(schedule), params_(std::move(params)) {
  if (params_.size() != parameter_count(arch_)) {
    throw ConfigError("parameter array has " + std::to_string(params_.size()) +
                      " entries, architecture needs " + std::to_string(parameter_count(arch_)));
  }
}

ScoreField ScoreModel::score(const Image& x, std::span<const Image> cond, double t) const {
  return forward(x, cond, t);
}

ScoreField ScoreModel::forward(const Image& x, std::span<const Image> cond, double t) const {
  const auto layout = net::make_layout(arch_);
  const auto input = net::make_input<float>(arch_, x, cond);
  auto out = net::forward<float>(layout, params_, input, schedule_.sigma(t), nullptr);
  return ScoreField(x.width(), x.height(), std::move(out));
}

std::vector<float> ScoreModel::backward(const Image& x, std::span<const Image> cond, double t,
                                        const ScoreField& upstream) const {
  std::vector<float> grad(params_.size(), 0.0f);
  forward_backward(x, cond, t, [&](const ScoreField&) { return upstream; }, grad);
  return grad;
}

ScoreField ScoreModel::forward_backward(
    const Image& x, std::span<const Image> cond, double t,
    const std::function<ScoreField(const ScoreField&)>& upstream_of,
    std::vector<float>& grad) const {
  const auto layout = net::make_layout(arch_);
  const auto input = net::make_input<float>(arch_, x, cond);
  net::Trace<float> trace;
  auto out = net::forward<float>(layout, params_, input, schedule_.sigma(t), &trace);
  ScoreField result(x.width(), x.height(), std::move(out));
  const ScoreField upstream = upstream_of(result);
  if (!upstream.same_shape(x)) throw InvalidArgument("backward: upstream shape mismatch");
  if (grad.size() != params_.size()) grad.assign(params_.size(), 0.0f);
  net::backward<float>(layout, params_, trace, upstream.data(), grad);
  return result;
}

std::vector<double> forward_f64(const ArchSpec& arch, const NoiseSchedule& schedule,
                                std::span<const double> params, const Image& x,
                                std::span<const Image> cond, double t) {
  const auto layout = net::make_layout(arch);
  if (params.size() != layout.total) throw ConfigError("forward_f64: parameter count mismatch");
  const auto input = net::make_input<double>(arch, x, cond);
  return net::forward<double>(layout, params, input, schedule.sigma(t), nullptr);
}

std::vector<double> backward_f64(const ArchSpec& arch, const NoiseSchedule& schedule,
                                 std::span<const double> params, const Image& x,
                                 std::span<const Image> cond, double t, const ScoreField& upstream) {
  const auto layout = net::make_layout(arch);
  if (params.size() != layout.total) throw ConfigError("backward_f64: parameter count mismatch");
  if (!upstream.same_shape(x)) throw InvalidArgument("backward: upstream shape mismatch");
  const auto input = net::make_input<double>(arch, x, cond);
  net::Trace<double> trace;
  net::forward<double>(layout, params, input, schedule.sigma(t), &trace);
  const std::vector<double> up(upstream.data().begin(), upstream.data().end());
  std::vector<double> grad(params.size(), 0.0);
  net::backward<double>(layout, params, trace, up, grad);
  return grad;
}

AdamState AdamState::zeros(std::size_t n, double lr, double beta1, double beta2, double eps) {
  AdamState s;
  s.lr = lr;
  s.beta1 = beta1;
  s.beta2 = beta2;
  s.eps = eps;
  s.m.assign(n, 0.0f);
  s.v.assign(n, 0.0f);
  return s;
}

void adam_step(AdamState& st, std::span<float> params, std::span<const float> grads) {
  if (params.size() != grads.size() || st.m.size() != params.size() ||
      st.v.size() != params.size()) {
    throw InvalidArgument("adam_step: array lengths differ");
  }
  ++st.step;
  const double bc1 = 1.0 - std::pow(st.beta1, static_cast<double>(st.step));
  const double bc2 = 1.0 - std::pow(st.beta2, static_cast<double>(st.step));
  for (std::size_t i = 0; i < params.size(); ++i) {
    const double g = grads[i];
    const double m = st.beta1 * st.m[i] + (1.0 - st.beta1) * g;
    const double v = st.beta2 * st.v[i] + (1.0 - st.beta2) * g * g;
    st.m[i] = static_cast<float>(m);
    st.v[i] = static_cast<float>(v);
    const double mhat = m / bc1;
    const double vhat = v / bc2;
    params[i] = static_cast<float>(params[i] - st.lr * mhat / (std::sqrt(vhat) + st.eps));
  }
}

namespace {

constexpr char kCkptMagic[4] = {'L', 'M', 'C', 'K'};

class Writer {
 public:
  template <typename V>
  void put(V v) {
    const auto* p = reinterpret_cast<const unsigned char*>(&v);
    bytes.insert(bytes.end(), p, p + sizeof(V));
  }
  void put_array(std::span<const float> a) {
    put<std::uint64_t>(a.size());
    const auto* p = reinterpret_cast<const unsigned char*>(a.data());
    bytes.insert(bytes.end(), p, p + a.size() * sizeof(float));
  }
  std::vector<unsigned char> bytes;
};

class Reader {
 public:
  explicit Reader(std::vector<unsigned char> b) : bytes_(std::move(b)) {}

  template <typename V>
  V get(const char* what) {
    need(sizeof(V), what);
    V v;
    std::memcpy(&v, bytes_.data() + pos_, sizeof(V));
    pos_ += sizeof(V);
    return v;
  }
  std::vector<float> get_array(const char* what, std::size_t expected) {
    const std::size_t at = pos_;
    const auto n = get<std::uint64_t>(what);
    if (n != expected) {
      throw FormatError(std::string(what) + " length " + std::to_string(n) + " != expected " +
                            std::to_string(expected),
                        at);
    }
    need(n * sizeof(float), what);
    std::vector<float> out(n);
    std::memcpy(out.data(), bytes_.data() + pos_, n * sizeof(float));
    pos_ += n * sizeof(float);
    return out;
  }
  std::size_t pos() const { return pos_; }
  bool done() const { return pos_ == bytes_.size(); }

 private:
  void need(std::size_t n, const char* what) {
    if (bytes_.size() - pos_ < n) {
      throw FormatError(std::string("truncated checkpoint while reading ") + what, bytes_.size());
    }
  }
  std::vector<unsigned char> bytes_;
  std::size_t pos_ = 0;
};

}  // namespace

void save_checkpoint(const ScoreModel& model, const AdamState& opt, const LmiConfig& lmi,
                     const std::filesystem::path& path) {
  const auto& a = model.arch();
  if (opt.m.size() != model.params().size() || opt.v.size() != model.params().size()) {
    throw InvalidArgument("save_checkpoint: optimizer moments do not match parameter count");
  }
  Writer w;
  w.bytes.assign(kCkptMagic, kCkptMagic + 4);
  w.put<std::uint32_t>(kCheckpointVersion);
  for (int v : {a.cond_channels, a.depth, a.width, a.kernel, a.groups, a.time_dim}) {
    w.put<std::int32_t>(v);
  }
  w.put<std::uint8_t>(a.final_bias);
  w.put<std::uint8_t>(a.scale_by_sigma);
  w.put<std::uint8_t>(a.zero_init_final);
  w.put<std::uint8_t>(0);
  w.put<double>(model.schedule().sigma_min());
  w.put<double>(model.schedule().sigma_max());
  w.put<std::int32_t>(lmi.levels);
  w.put<std::int32_t>(lmi.radius);
  w.put<std::int32_t>(lmi.search_radius);
  w.put<std::int32_t>(lmi.mode == CondMode::kFull ? 0 : 1);
  w.put<double>(opt.lr);
  w.put<double>(opt.beta1);
  w.put<double>(opt.beta2);
  w.put<double>(opt.eps);
  w.put<std::uint64_t>(opt.step);
  w.put_array(model.params());
  w.put_array(opt.m);
  w.put_array(opt.v);

  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot write checkpoint " + path.string());
  out.write(reinterpret_cast<const char*>(w.bytes.data()),
            static_cast<std::streamsize>(w.bytes.size()));
  if (!out) throw IoError("write failed for " + path.string());
}

Checkpoint load_checkpoint(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open checkpoint " + path.string());
  Reader r({std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()});
  for (char c : kCkptMagic) {
    if (r.get<char>("magic") != c) throw FormatError("bad checkpoint magic, expected LMCK", 0);
  }
  const auto version = r.get<std::uint32_t>("version");
  if (version != kCheckpointVersion) {
    throw FormatError("unsupported checkpoint version " + std::to_string(version), 4);
  }
  const std::size_t arch_at = r.pos();
  ArchSpec a;
  a.cond_channels = r.get<std::int32_t>("arch");
  a.depth = r.get<std::int32_t>("arch");
  a.width = r.get<std::int32_t>("arch");
  a.kernel = r.get<std::int32_t>("arch");
  a.groups = r.get<std::int32_t>("arch");
  a.time_dim = r.get<std::int32_t>("arch");
  a.final_bias = r.get<std::uint8_t>("arch") != 0;
  a.scale_by_sigma = r.get<std::uint8_t>("arch") != 0;
  a.zero_init_final = r.get<std::uint8_t>("arch") != 0;
  r.get<std::uint8_t>("arch");
  try {
    a.validate();
  } catch (const ConfigError& e) {
    throw FormatError(std::string("invalid architecture block: ") + e.what(), arch_at);
  }
  const std::size_t sched_at = r.pos();
  const double smin = r.get<double>("schedule");
  const double smax = r.get<double>("schedule");
  if (!(smin > 0.0 && smax > smin)) throw FormatError("invalid schedule block", sched_at);
  const std::size_t lmi_at = r.pos();
  LmiConfig lmi;
  lmi.levels = r.get<std::int32_t>("lmi");
  lmi.radius = r.get<std::int32_t>("lmi");
  lmi.search_radius = r.get<std::int32_t>("lmi");
  const auto mode = r.get<std::int32_t>("lmi");
  if (mode != 0 && mode != 1) throw FormatError("invalid conditioning mode", lmi_at);
  lmi.mode = mode == 0 ? CondMode::kFull : CondMode::kValueOnly;
  try {
    lmi.validate();
  } catch (const InvalidArgument& e) {
    throw FormatError(std::string("invalid lmi block: ") + e.what(), lmi_at);
  }
  AdamState opt;
  opt.lr = r.get<double>("optimizer");
  opt.beta1 = r.get<double>("optimizer");
  opt.beta2 = r.get<double>("optimizer");
  opt.eps = r.get<double>("optimizer");
  opt.step = r.get<std::uint64_t>("optimizer");
  const std::size_t n = parameter_count(a);
  auto params = r.get_array("params", n);
  opt.m = r.get_array("first moments", n);
  opt.v = r.get_array("second moments", n);
  if (!r.done()) throw FormatError("trailing bytes after checkpoint payload", r.pos());
  return {ScoreModel(a, NoiseSchedule(smin, smax), std::move(params)), std::move(opt), lmi};
}

}  // namespace lmid
