#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace atc {

// Widths of the shared actor-critic MLP:
//   local block -> encoder (ReLU) -> concat(own, encoded) -> hidden1 (ReLU)
//   -> hidden2 (ReLU) -> {policy logits (softmax), value (linear)}
struct NetworkShape {
  int own_width = 8;
  int local_width = 30;
  int encoder_width = 32;
  int hidden_width = 256;
  int actions = 3;

  int input_width() const { return own_width + local_width; }
  friend bool operator==(const NetworkShape&, const NetworkShape&) = default;
};

// Dense layer, weight stored row-major as [out][in].
struct DenseLayer {
  std::string name;
  int in = 0;
  int out = 0;
  std::vector<double> weight;
  std::vector<double> bias;

  DenseLayer() = default;
  DenseLayer(std::string layer_name, int inputs, int outputs);

  double& w(int o, int i) { return weight[static_cast<std::size_t>(o * in + i)]; }
  double w(int o, int i) const { return weight[static_cast<std::size_t>(o * in + i)]; }
  std::size_t parameter_count() const { return weight.size() + bias.size(); }
};

enum LayerIndex : std::size_t { kEncoder = 0, kHidden1, kHidden2, kPolicyHead, kValueHead };
inline constexpr std::size_t kLayerCount = 5;

// Parameters, gradients and optimizer moments all share this shape.
struct ParameterSet {
  std::array<DenseLayer, kLayerCount> layers;

  static ParameterSet zeros(const NetworkShape& shape);
  std::size_t parameter_count() const;
  void fill(double value);
  bool all_finite() const;
  double squared_norm() const;
  void scale(double factor);
  void add(const ParameterSet& other, double factor = 1.0);
  // Flat views for generic element-wise loops.
  std::vector<std::span<double>> spans();
  std::vector<std::span<const double>> spans() const;
};

struct ForwardTrace {
  std::vector<double> input;
  std::vector<double> encoder_pre, encoder_out;
  std::vector<double> concat;
  std::vector<double> hidden1_pre, hidden1_out;
  std::vector<double> hidden2_pre, hidden2_out;
  std::vector<double> logits;
};

struct ForwardResult {
  std::vector<double> policy;
  std::vector<double> log_policy;
  double value = 0.0;
  ForwardTrace trace;
};

// Numerically stable softmax / log-softmax of logits.
std::vector<double> softmax(std::span<const double> logits);
std::vector<double> log_softmax(std::span<const double> logits);

class ActorCritic {
 public:
  explicit ActorCritic(NetworkShape shape);

  // He-uniform for the ReLU layers, the same scaled by 0.01 for both heads,
  // zero biases.
  void initialize(std::uint64_t seed);

  const NetworkShape& shape() const { return shape_; }
  ParameterSet& params() { return params_; }
  const ParameterSet& params() const { return params_; }

  // Throws ContractError when obs.size() != shape().input_width().
  ForwardResult forward(std::span<const double> obs) const;

  // Accumulates into grads the gradient of a loss whose derivatives w.r.t.
  // the policy logits and the value output are d_logits and d_value.
  void backward(const ForwardTrace& trace, std::span<const double> d_logits, double d_value,
                ParameterSet& grads) const;

 private:
  NetworkShape shape_;
  ParameterSet params_;
};

struct AdamConfig {
  double lr = 1e-4;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
};

class Adam {
 public:
  Adam(const NetworkShape& shape, AdamConfig config);

  // Bias-corrected Adam update. Throws NumericalError, leaving params and
  // moments untouched, if any gradient entry is non-finite.
  void step(ParameterSet& params, const ParameterSet& grads);

  const AdamConfig& config() const { return config_; }
  void set_lr(double lr) { config_.lr = lr; }
  std::uint64_t step_count() const { return steps_; }
  const ParameterSet& first_moment() const { return m_; }
  const ParameterSet& second_moment() const { return v_; }
  void restore(ParameterSet m, ParameterSet v, std::uint64_t steps);

 private:
  AdamConfig config_;
  ParameterSet m_;
  ParameterSet v_;
  std::uint64_t steps_ = 0;
};

// Binary checkpoint container, see README "Checkpoint format".
inline constexpr std::uint32_t kCheckpointVersion = 1;

struct CheckpointContents {
  std::uint32_t version = kCheckpointVersion;
  NetworkShape shape;
  ParameterSet params;
  bool has_optimizer = false;
  AdamConfig adam;
  std::uint64_t adam_steps = 0;
  ParameterSet adam_m;
  ParameterSet adam_v;
};

void save_checkpoint(const std::filesystem::path& path, const ActorCritic& net,
                     const Adam* optimizer = nullptr);

// Throws CheckpointError on I/O failure, bad magic, version mismatch,
// truncation or checksum failure.
CheckpointContents read_checkpoint(const std::filesystem::path& path);

// Reads and installs a checkpoint. Every layer shape is checked against
// net.shape() first (the error names the offending layer); nothing is modified
// unless the whole file is valid.
void load_checkpoint(const std::filesystem::path& path, ActorCritic& net,
                     Adam* optimizer = nullptr);

}  // namespace atc
