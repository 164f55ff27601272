#include "atc/network.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <fstream>
#include <iterator>
#include <random>

#include "atc/errors.hpp"

namespace atc {

DenseLayer::DenseLayer(std::string layer_name, int inputs, int outputs)
    : name(std::move(layer_name)),
      in(inputs),
      out(outputs),
      weight(static_cast<std::size_t>(inputs) * static_cast<std::size_t>(outputs), 0.0),
      bias(static_cast<std::size_t>(outputs), 0.0) {}

ParameterSet ParameterSet::zeros(const NetworkShape& s) {
  if (s.own_width < 1 || s.local_width < 1 || s.encoder_width < 1 || s.hidden_width < 1 ||
      s.actions < 2) {
    throw ContractError("network widths must be positive (and at least 2 actions)");
  }
  ParameterSet p;
  p.layers[kEncoder] = DenseLayer("encoder", s.local_width, s.encoder_width);
  p.layers[kHidden1] = DenseLayer("hidden1", s.own_width + s.encoder_width, s.hidden_width);
  p.layers[kHidden2] = DenseLayer("hidden2", s.hidden_width, s.hidden_width);
  p.layers[kPolicyHead] = DenseLayer("policy", s.hidden_width, s.actions);
  p.layers[kValueHead] = DenseLayer("value", s.hidden_width, 1);
  return p;
}

std::size_t ParameterSet::parameter_count() const {
  std::size_t n = 0;
  for (const DenseLayer& l : layers) n += l.parameter_count();
  return n;
}

std::vector<std::span<double>> ParameterSet::spans() {
  std::vector<std::span<double>> out;
  for (DenseLayer& l : layers) {
    out.emplace_back(l.weight);
    out.emplace_back(l.bias);
  }
  return out;
}

std::vector<std::span<const double>> ParameterSet::spans() const {
  std::vector<std::span<const double>> out;
  for (const DenseLayer& l : layers) {
    out.emplace_back(l.weight);
    out.emplace_back(l.bias);
  }
  return out;
}

void ParameterSet::fill(double value) {
  for (auto s : spans()) std::fill(s.begin(), s.end(), value);
}

bool ParameterSet::all_finite() const {
  for (auto s : spans()) {
    for (double x : s) {
      if (!std::isfinite(x)) return false;
    }
  }
  return true;
}

double ParameterSet::squared_norm() const {
  double acc = 0.0;
  for (auto s : spans()) {
    for (double x : s) acc += x * x;
  }
  return acc;
}

void ParameterSet::scale(double factor) {
  for (auto s : spans()) {
    for (double& x : s) x *= factor;
  }
}

void ParameterSet::add(const ParameterSet& other, double factor) {
  auto dst = spans();
  const auto src = other.spans();
  for (std::size_t k = 0; k < dst.size(); ++k) {
    if (dst[k].size() != src[k].size()) throw ContractError("parameter set shape mismatch");
    for (std::size_t i = 0; i < dst[k].size(); ++i) dst[k][i] += factor * src[k][i];
  }
}

std::vector<double> softmax(std::span<const double> logits) {
  const double peak = *std::max_element(logits.begin(), logits.end());
  std::vector<double> p(logits.size());
  double total = 0.0;
  for (std::size_t k = 0; k < logits.size(); ++k) {
    p[k] = std::exp(logits[k] - peak);
    total += p[k];
  }
  for (double& x : p) x /= total;
  return p;
}

std::vector<double> log_softmax(std::span<const double> logits) {
  const double peak = *std::max_element(logits.begin(), logits.end());
  double total = 0.0;
  for (double z : logits) total += std::exp(z - peak);
  const double log_norm = peak + std::log(total);
  std::vector<double> out(logits.size());
  for (std::size_t k = 0; k < logits.size(); ++k) out[k] = logits[k] - log_norm;
  return out;
}

namespace {

void affine(const DenseLayer& l, std::span<const double> x, std::vector<double>& y) {
  y.assign(l.bias.begin(), l.bias.end());
  const double* w = l.weight.data();
  for (int o = 0; o < l.out; ++o) {
    const double* row = w + static_cast<std::ptrdiff_t>(o) * l.in;
    double acc = 0.0;
    for (int i = 0; i < l.in; ++i) acc += row[i] * x[static_cast<std::size_t>(i)];
    y[static_cast<std::size_t>(o)] += acc;
  }
}

void relu(const std::vector<double>& pre, std::vector<double>& out) {
  out.resize(pre.size());
  for (std::size_t k = 0; k < pre.size(); ++k) out[k] = pre[k] > 0.0 ? pre[k] : 0.0;
}

// grads += g (x) x; dx = W^T g when dx is non-null. Rows with g == 0 are skipped.
void affine_backward(const DenseLayer& l, std::span<const double> x, std::span<const double> g,
                     DenseLayer& grad, std::vector<double>* dx) {
  if (dx) dx->assign(static_cast<std::size_t>(l.in), 0.0);
  for (int o = 0; o < l.out; ++o) {
    const double go = g[static_cast<std::size_t>(o)];
    if (go == 0.0) continue;
    grad.bias[static_cast<std::size_t>(o)] += go;
    double* grow = grad.weight.data() + static_cast<std::ptrdiff_t>(o) * l.in;
    for (int i = 0; i < l.in; ++i) grow[i] += go * x[static_cast<std::size_t>(i)];
    if (dx) {
      const double* row = l.weight.data() + static_cast<std::ptrdiff_t>(o) * l.in;
      double* d = dx->data();
      for (int i = 0; i < l.in; ++i) d[i] += go * row[i];
    }
  }
}

void relu_backward(const std::vector<double>& pre, std::vector<double>& g) {
  for (std::size_t k = 0; k < pre.size(); ++k) {
    if (!(pre[k] > 0.0)) g[k] = 0.0;
  }
}

}  // namespace

ActorCritic::ActorCritic(NetworkShape shape) : shape_(shape), params_(ParameterSet::zeros(shape)) {}

void ActorCritic::initialize(std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  for (std::size_t k = 0; k < kLayerCount; ++k) {
    DenseLayer& l = params_.layers[k];
    double limit = std::sqrt(6.0 / static_cast<double>(l.in));
    if (k == kPolicyHead || k == kValueHead) limit *= 0.01;
    std::uniform_real_distribution<double> dist(-limit, limit);
    for (double& w : l.weight) w = dist(rng);
    std::fill(l.bias.begin(), l.bias.end(), 0.0);
  }
}

ForwardResult ActorCritic::forward(std::span<const double> obs) const {
  if (obs.size() != static_cast<std::size_t>(shape_.input_width())) {
    throw ContractError("observation has " + std::to_string(obs.size()) + " features, network expects " +
                        std::to_string(shape_.input_width()));
  }
  ForwardResult r;
  ForwardTrace& t = r.trace;
  const auto own = static_cast<std::size_t>(shape_.own_width);
  t.input.assign(obs.begin(), obs.end());

  affine(params_.layers[kEncoder], std::span<const double>(t.input).subspan(own), t.encoder_pre);
  relu(t.encoder_pre, t.encoder_out);

  t.concat.assign(t.input.begin(), t.input.begin() + static_cast<std::ptrdiff_t>(own));
  t.concat.insert(t.concat.end(), t.encoder_out.begin(), t.encoder_out.end());

  affine(params_.layers[kHidden1], t.concat, t.hidden1_pre);
  relu(t.hidden1_pre, t.hidden1_out);
  affine(params_.layers[kHidden2], t.hidden1_out, t.hidden2_pre);
  relu(t.hidden2_pre, t.hidden2_out);

  affine(params_.layers[kPolicyHead], t.hidden2_out, t.logits);
  std::vector<double> value;
  affine(params_.layers[kValueHead], t.hidden2_out, value);
  r.value = value[0];
  r.policy = softmax(t.logits);
  r.log_policy = log_softmax(t.logits);
  return r;
}

void ActorCritic::backward(const ForwardTrace& t, std::span<const double> d_logits, double d_value,
                           ParameterSet& grads) const {
  if (d_logits.size() != static_cast<std::size_t>(shape_.actions)) {
    throw ContractError("logit gradient has the wrong length");
  }
  const auto own = static_cast<std::size_t>(shape_.own_width);
  std::vector<double> d_h2;
  affine_backward(params_.layers[kPolicyHead], t.hidden2_out, d_logits, grads.layers[kPolicyHead],
                  &d_h2);
  std::vector<double> d_h2_value;
  const double dv[1] = {d_value};
  affine_backward(params_.layers[kValueHead], t.hidden2_out, dv, grads.layers[kValueHead],
                  &d_h2_value);
  for (std::size_t k = 0; k < d_h2.size(); ++k) d_h2[k] += d_h2_value[k];
  relu_backward(t.hidden2_pre, d_h2);

  std::vector<double> d_h1;
  affine_backward(params_.layers[kHidden2], t.hidden1_out, d_h2, grads.layers[kHidden2], &d_h1);
  relu_backward(t.hidden1_pre, d_h1);

  std::vector<double> d_concat;
  affine_backward(params_.layers[kHidden1], t.concat, d_h1, grads.layers[kHidden1], &d_concat);
  std::vector<double> d_enc(d_concat.begin() + static_cast<std::ptrdiff_t>(own), d_concat.end());
  relu_backward(t.encoder_pre, d_enc);
  affine_backward(params_.layers[kEncoder], std::span<const double>(t.input).subspan(own), d_enc,
                  grads.layers[kEncoder], nullptr);
}

Adam::Adam(const NetworkShape& shape, AdamConfig config)
    : config_(config), m_(ParameterSet::zeros(shape)), v_(ParameterSet::zeros(shape)) {}

void Adam::restore(ParameterSet m, ParameterSet v, std::uint64_t steps) {
  m_ = std::move(m);
  v_ = std::move(v);
  steps_ = steps;
}

void Adam::step(ParameterSet& params, const ParameterSet& grads) {
  if (!grads.all_finite()) throw NumericalError("non-finite gradient rejected by Adam");
  ++steps_;
  const double t = static_cast<double>(steps_);
  const double c1 = 1.0 - std::pow(config_.beta1, t);
  const double c2 = 1.0 - std::pow(config_.beta2, t);
  auto p = params.spans();
  const auto g = grads.spans();
  auto m = m_.spans();
  auto v = v_.spans();
  for (std::size_t k = 0; k < p.size(); ++k) {
    if (p[k].size() != g[k].size()) throw ContractError("gradient shape mismatch");
    for (std::size_t i = 0; i < p[k].size(); ++i) {
      const double gi = g[k][i];
      m[k][i] = config_.beta1 * m[k][i] + (1.0 - config_.beta1) * gi;
      v[k][i] = config_.beta2 * v[k][i] + (1.0 - config_.beta2) * gi * gi;
      const double m_hat = m[k][i] / c1;
      const double v_hat = v[k][i] / c2;
      p[k][i] -= config_.lr * m_hat / (std::sqrt(v_hat) + config_.eps);
    }
  }
}

// --- checkpoint container -------------------------------------------------

namespace {

constexpr char kMagic[8] = {'A', 'T', 'C', 'N', 'E', 'T', '\r', '\n'};

std::uint64_t fnv1a(const char* data, std::size_t n) {
  std::uint64_t h = 1469598103934665603ULL;
  for (std::size_t i = 0; i < n; ++i) {
    h ^= static_cast<unsigned char>(data[i]);
    h *= 1099511628211ULL;
  }
  return h;
}

class Writer {
 public:
  template <typename T>
  void put(const T& v) {
    const char* p = reinterpret_cast<const char*>(&v);
    buf_.insert(buf_.end(), p, p + sizeof(T));
  }
  void put_doubles(const std::vector<double>& v) {
    const char* p = reinterpret_cast<const char*>(v.data());
    buf_.insert(buf_.end(), p, p + v.size() * sizeof(double));
  }
  void put_string(const std::string& s) {
    put(static_cast<std::uint32_t>(s.size()));
    buf_.insert(buf_.end(), s.begin(), s.end());
  }
  std::string& buffer() { return buf_; }

 private:
  std::string buf_;
};

class Reader {
 public:
  Reader(const std::string& buf, std::size_t end) : buf_(buf), end_(end) {}

  template <typename T>
  T get() {
    need(sizeof(T));
    T v;
    std::memcpy(&v, buf_.data() + pos_, sizeof(T));
    pos_ += sizeof(T);
    return v;
  }
  void get_doubles(std::vector<double>& v) {
    need(v.size() * sizeof(double));
    std::memcpy(v.data(), buf_.data() + pos_, v.size() * sizeof(double));
    pos_ += v.size() * sizeof(double);
  }
  std::string get_string() {
    const auto n = get<std::uint32_t>();
    need(n);
    std::string s = buf_.substr(pos_, n);
    pos_ += n;
    return s;
  }
  std::size_t position() const { return pos_; }

 private:
  void need(std::size_t n) const {
    if (pos_ + n > end_) throw CheckpointError("corrupt checkpoint: truncated payload");
  }
  const std::string& buf_;
  std::size_t end_;
  std::size_t pos_ = 0;
};

void write_set(Writer& w, const ParameterSet& set) {
  for (const DenseLayer& l : set.layers) {
    w.put_doubles(l.weight);
    w.put_doubles(l.bias);
  }
}

void read_set(Reader& r, ParameterSet& set) {
  for (DenseLayer& l : set.layers) {
    r.get_doubles(l.weight);
    r.get_doubles(l.bias);
  }
}

}  // namespace

void save_checkpoint(const std::filesystem::path& path, const ActorCritic& net,
                     const Adam* optimizer) {
  Writer w;
  w.buffer().append(kMagic, sizeof(kMagic));
  w.put(kCheckpointVersion);
  w.put(static_cast<std::uint32_t>(kLayerCount));
  for (const DenseLayer& l : net.params().layers) {
    w.put_string(l.name);
    w.put(static_cast<std::uint32_t>(l.in));
    w.put(static_cast<std::uint32_t>(l.out));
    w.put_doubles(l.weight);
    w.put_doubles(l.bias);
  }
  w.put(static_cast<std::uint8_t>(optimizer ? 1 : 0));
  if (optimizer) {
    w.put(optimizer->step_count());
    w.put(optimizer->config().lr);
    w.put(optimizer->config().beta1);
    w.put(optimizer->config().beta2);
    w.put(optimizer->config().eps);
    write_set(w, optimizer->first_moment());
    write_set(w, optimizer->second_moment());
  }
  const std::uint64_t sum = fnv1a(w.buffer().data(), w.buffer().size());
  w.put(sum);

  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw CheckpointError("cannot open checkpoint for writing: " + path.string());
  out.write(w.buffer().data(), static_cast<std::streamsize>(w.buffer().size()));
  if (!out) throw CheckpointError("failed writing checkpoint: " + path.string());
}

CheckpointContents read_checkpoint(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw CheckpointError("cannot open checkpoint: " + path.string());
  const std::string buf((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());

  if (buf.size() < sizeof(kMagic) + sizeof(std::uint64_t) ||
      std::memcmp(buf.data(), kMagic, sizeof(kMagic)) != 0) {
    throw CheckpointError("corrupt checkpoint: bad magic in " + path.string());
  }
  const std::size_t payload = buf.size() - sizeof(std::uint64_t);
  std::uint64_t stored = 0;
  std::memcpy(&stored, buf.data() + payload, sizeof(stored));

  Reader r(buf, payload);
  r.get<std::array<char, sizeof(kMagic)>>();
  CheckpointContents c;
  c.version = r.get<std::uint32_t>();
  if (c.version != kCheckpointVersion) {
    throw CheckpointError("checkpoint version " + std::to_string(c.version) + " unsupported (expected " +
                          std::to_string(kCheckpointVersion) + ")");
  }
  if (stored != fnv1a(buf.data(), payload)) {
    throw CheckpointError("corrupt checkpoint: checksum mismatch in " + path.string());
  }
  if (r.get<std::uint32_t>() != kLayerCount) throw CheckpointError("corrupt checkpoint: layer count");

  std::array<DenseLayer, kLayerCount> layers;
  for (DenseLayer& l : layers) {
    l.name = r.get_string();
    const auto in_w = r.get<std::uint32_t>();
    const auto out_w = r.get<std::uint32_t>();
    if (in_w == 0 || out_w == 0 || in_w > (1u << 20) || out_w > (1u << 20)) {
      throw CheckpointError("corrupt checkpoint: layer " + l.name + " has invalid shape");
    }
    l = DenseLayer(l.name, static_cast<int>(in_w), static_cast<int>(out_w));
    r.get_doubles(l.weight);
    r.get_doubles(l.bias);
  }
  c.shape.local_width = layers[kEncoder].in;
  c.shape.encoder_width = layers[kEncoder].out;
  c.shape.own_width = layers[kHidden1].in - layers[kEncoder].out;
  c.shape.hidden_width = layers[kHidden1].out;
  c.shape.actions = layers[kPolicyHead].out;
  if (c.shape.own_width < 1 || layers[kValueHead].out != 1) {
    throw CheckpointError("corrupt checkpoint: inconsistent layer shapes");
  }
  c.params = ParameterSet::zeros(c.shape);
  for (std::size_t k = 0; k < kLayerCount; ++k) {
    const DenseLayer& expect = c.params.layers[k];
    if (layers[k].name != expect.name || layers[k].in != expect.in || layers[k].out != expect.out) {
      throw CheckpointError("corrupt checkpoint: layer " + layers[k].name +
                            " inconsistent with the network graph");
    }
    c.params.layers[k] = std::move(layers[k]);
  }

  c.has_optimizer = r.get<std::uint8_t>() != 0;
  if (c.has_optimizer) {
    c.adam_steps = r.get<std::uint64_t>();
    c.adam.lr = r.get<double>();
    c.adam.beta1 = r.get<double>();
    c.adam.beta2 = r.get<double>();
    c.adam.eps = r.get<double>();
    c.adam_m = ParameterSet::zeros(c.shape);
    c.adam_v = ParameterSet::zeros(c.shape);
    read_set(r, c.adam_m);
    read_set(r, c.adam_v);
  }
  if (r.position() != payload) throw CheckpointError("corrupt checkpoint: trailing bytes");
  return c;
}

void load_checkpoint(const std::filesystem::path& path, ActorCritic& net, Adam* optimizer) {
  CheckpointContents c = read_checkpoint(path);
  const ParameterSet& expected = net.params();
  for (std::size_t k = 0; k < kLayerCount; ++k) {
    const DenseLayer& want = expected.layers[k];
    const DenseLayer& got = c.params.layers[k];
    if (want.in != got.in || want.out != got.out) {
      throw CheckpointError("checkpoint layer '" + want.name + "' has shape " + std::to_string(got.out) +
                            "x" + std::to_string(got.in) + ", expected " + std::to_string(want.out) + "x" +
                            std::to_string(want.in));
    }
  }
  if (optimizer && !c.has_optimizer) {
    throw CheckpointError("checkpoint carries no optimizer state: " + path.string());
  }
  net.params() = std::move(c.params);
  if (optimizer) {
    optimizer->restore(std::move(c.adam_m), std::move(c.adam_v), c.adam_steps);
  }
}

}  // namespace atc
