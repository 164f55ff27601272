#include <gtest/gtest.h>

#include <cmath>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <random>

#include "atc/errors.hpp"
#include "atc/network.hpp"
#include "gradient_check.hpp"

using namespace atc;

namespace {

std::filesystem::path temp_file(const std::string& name) {
  return std::filesystem::temp_directory_path() / ("atc_test_" + name);
}

std::vector<double> random_input(const NetworkShape& s, std::mt19937_64& rng) {
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  std::vector<double> x(static_cast<std::size_t>(s.input_width()));
  for (double& v : x) v = u(rng);
  return x;
}

bool same_bits(const ParameterSet& a, const ParameterSet& b) {
  const auto sa = a.spans();
  const auto sb = b.spans();
  for (std::size_t k = 0; k < sa.size(); ++k) {
    if (sa[k].size() != sb[k].size()) return false;
    if (std::memcmp(sa[k].data(), sb[k].data(), sa[k].size() * sizeof(double)) != 0) return false;
  }
  return true;
}

const NetworkShape kSmall{4, 6, 5, 7, 3};

}  // namespace

TEST(Softmax, NormalizedAndStable) {
  const std::vector<double> logits{1000.0, 999.0, -1000.0};
  const auto p = softmax(logits);
  double sum = 0.0;
  for (double x : p) {
    EXPECT_GE(x, 0.0);
    EXPECT_LT(x, 1.0);
    sum += x;
  }
  EXPECT_NEAR(sum, 1.0, 1e-12);
  const auto lp = log_softmax(logits);
  EXPECT_NEAR(lp[0], -std::log1p(std::exp(-1.0)), 1e-12);
  EXPECT_TRUE(std::isfinite(lp[2]));
}

TEST(ActorCritic, ZeroParametersGiveUniformPolicy) {
  const ActorCritic net(NetworkShape{});
  std::mt19937_64 rng(1);
  const auto out = net.forward(random_input(net.shape(), rng));
  for (double p : out.policy) EXPECT_DOUBLE_EQ(p, 1.0 / 3.0);
  EXPECT_EQ(out.value, 0.0);
}

TEST(ActorCritic, PolicySumsToOneAndIsDeterministic) {
  ActorCritic a(NetworkShape{}), b(NetworkShape{});
  a.initialize(42);
  b.initialize(42);
  std::mt19937_64 rng(9);
  for (int k = 0; k < 20; ++k) {
    const auto x = random_input(a.shape(), rng);
    const auto fa = a.forward(x);
    const auto fb = b.forward(x);
    double sum = 0.0;
    for (double p : fa.policy) {
      EXPECT_GT(p, 0.0);
      EXPECT_LT(p, 1.0);
      sum += p;
    }
    EXPECT_NEAR(sum, 1.0, 1e-9);
    EXPECT_EQ(std::memcmp(fa.policy.data(), fb.policy.data(), 3 * sizeof(double)), 0);
    EXPECT_EQ(std::memcmp(&fa.value, &fb.value, sizeof(double)), 0);
  }
}

TEST(ActorCritic, ShapeMismatchIsContractError) {
  const ActorCritic net(NetworkShape{});
  EXPECT_THROW(net.forward(std::vector<double>(5, 0.0)), ContractError);
}

TEST(ActorCritic, DefaultShapeParameterCount) {
  const ActorCritic net(NetworkShape{});
  // encoder 30->32, hidden1 40->256, hidden2 256->256, policy 256->3, value 256->1
  const std::size_t expected = (30 * 32 + 32) + (40 * 256 + 256) + (256 * 256 + 256) + (256 * 3 + 3) + (256 + 1);
  EXPECT_EQ(net.params().parameter_count(), expected);
}

TEST(ActorCritic, IdenticalSentinelSlotsArePermutationInvariant) {
  // Own block (4) + two slots of width 3; slots 1 and 2 both carry sentinels.
  const NetworkShape shape{4, 9, 6, 8, 3};
  ActorCritic net(shape);
  net.initialize(3);
  const std::vector<double> x{0.1, 0.2, 0.3, 0.4, 0.5, 0.6, 0.7, 1.0, 0.0, 0.0, 1.0, 0.0, 0.0};
  std::vector<double> swapped = x;
  std::swap_ranges(swapped.begin() + 7, swapped.begin() + 10, swapped.begin() + 10);
  EXPECT_EQ(net.forward(x).policy, net.forward(swapped).policy);
  // Swapping a real neighbor with a sentinel slot is visible to the network.
  std::vector<double> moved = x;
  std::swap_ranges(moved.begin() + 4, moved.begin() + 7, moved.begin() + 7);
  EXPECT_NE(net.forward(x).policy, net.forward(moved).policy);
}

TEST(Backward, MatchesFiniteDifferencesOnRandomNets) {
  std::mt19937_64 rng(2024);
  for (int trial = 0; trial < 10; ++trial) {
    const double err = testing_support::network_gradient_error(rng, 16);
    EXPECT_LT(err, 1e-4) << "trial " << trial;
  }
}

TEST(Backward, ZeroUpstreamGivesZeroGradient) {
  ActorCritic net(kSmall);
  net.initialize(5);
  std::mt19937_64 rng(5);
  const auto fwd = net.forward(random_input(kSmall, rng));
  ParameterSet grads = ParameterSet::zeros(kSmall);
  const std::vector<double> zero(3, 0.0);
  net.backward(fwd.trace, zero, 0.0, grads);
  EXPECT_EQ(grads.squared_norm(), 0.0);
}

TEST(Backward, HeadsAreDisjoint) {
  ActorCritic net(kSmall);
  net.initialize(6);
  std::mt19937_64 rng(6);
  const auto fwd = net.forward(random_input(kSmall, rng));
  ParameterSet grads = ParameterSet::zeros(kSmall);
  net.backward(fwd.trace, std::vector<double>(3, 0.0), 1.0, grads);
  for (double g : grads.layers[kPolicyHead].weight) EXPECT_EQ(g, 0.0);
  for (double g : grads.layers[kPolicyHead].bias) EXPECT_EQ(g, 0.0);

  ParameterSet grads2 = ParameterSet::zeros(kSmall);
  net.backward(fwd.trace, std::vector<double>{0.3, -0.1, 0.7}, 0.0, grads2);
  for (double g : grads2.layers[kValueHead].weight) EXPECT_EQ(g, 0.0);
  EXPECT_EQ(grads2.layers[kValueHead].bias[0], 0.0);
}

TEST(Adam, FirstStepMovesByLearningRateAgainstGradientSign) {
  ActorCritic net(kSmall);
  net.initialize(7);
  const ParameterSet before = net.params();
  ParameterSet grads = ParameterSet::zeros(kSmall);
  std::mt19937_64 rng(7);
  std::uniform_real_distribution<double> mag(1e-3, 1e3);
  std::bernoulli_distribution sign(0.5);
  for (auto s : grads.spans()) {
    for (double& g : s) g = sign(rng) ? mag(rng) : -mag(rng);
  }
  Adam opt(kSmall, AdamConfig{1e-3, 0.9, 0.999, 1e-8});
  opt.step(net.params(), grads);
  EXPECT_EQ(opt.step_count(), 1u);
  const auto b = before.spans();
  const auto a = net.params().spans();
  const auto g = grads.spans();
  for (std::size_t k = 0; k < a.size(); ++k) {
    for (std::size_t i = 0; i < a[k].size(); ++i) {
      const double delta = a[k][i] - b[k][i];
      EXPECT_NEAR(delta, g[k][i] > 0 ? -1e-3 : 1e-3, 1e-3 * 1e-4);
    }
  }
}

TEST(Adam, ZeroGradientLeavesParametersUnchanged) {
  ActorCritic net(kSmall);
  net.initialize(8);
  const ParameterSet before = net.params();
  Adam opt(kSmall, AdamConfig{});
  opt.step(net.params(), ParameterSet::zeros(kSmall));
  EXPECT_TRUE(same_bits(before, net.params()));
}

TEST(Adam, DeterministicAndRejectsNonFinite) {
  ActorCritic a(kSmall), b(kSmall);
  a.initialize(9);
  b.initialize(9);
  ParameterSet grads = ParameterSet::zeros(kSmall);
  grads.fill(0.25);
  Adam oa(kSmall, AdamConfig{}), ob(kSmall, AdamConfig{});
  oa.step(a.params(), grads);
  ob.step(b.params(), grads);
  EXPECT_TRUE(same_bits(a.params(), b.params()));

  grads.layers[kHidden2].weight[3] = std::nan("");
  const ParameterSet before = a.params();
  EXPECT_THROW(oa.step(a.params(), grads), NumericalError);
  EXPECT_TRUE(same_bits(before, a.params()));
  EXPECT_EQ(oa.step_count(), 1u);
}

TEST(Adam, StaysFiniteOverManyRandomSteps) {
  ActorCritic net(kSmall);
  net.initialize(10);
  Adam opt(kSmall, AdamConfig{1e-3, 0.9, 0.999, 1e-8});
  std::mt19937_64 rng(10);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  ParameterSet grads = ParameterSet::zeros(kSmall);
  for (int step = 0; step < 10000; ++step) {
    auto x = random_input(kSmall, rng);
    for (double& v : x) v = std::clamp(v * 5.0, -1.0, 1.0);
    const auto fwd = net.forward(x);
    grads.fill(0.0);
    net.backward(fwd.trace, std::vector<double>{u(rng), u(rng), u(rng)}, u(rng), grads);
    opt.step(net.params(), grads);
  }
  EXPECT_TRUE(net.params().all_finite());
}

TEST(Checkpoint, RoundTripIsBitIdentical) {
  ActorCritic net(kSmall);
  net.initialize(11);
  Adam opt(kSmall, AdamConfig{});
  ParameterSet grads = ParameterSet::zeros(kSmall);
  grads.fill(0.1);
  opt.step(net.params(), grads);
  opt.step(net.params(), grads);
  const auto path = temp_file("roundtrip.ckpt");
  save_checkpoint(path, net, &opt);

  ActorCritic loaded(kSmall);
  Adam loaded_opt(kSmall, AdamConfig{});
  load_checkpoint(path, loaded, &loaded_opt);
  EXPECT_TRUE(same_bits(net.params(), loaded.params()));
  EXPECT_TRUE(same_bits(opt.first_moment(), loaded_opt.first_moment()));
  EXPECT_TRUE(same_bits(opt.second_moment(), loaded_opt.second_moment()));
  EXPECT_EQ(loaded_opt.step_count(), 2u);
  EXPECT_EQ(read_checkpoint(path).shape, kSmall);
  std::filesystem::remove(path);
}

TEST(Checkpoint, WrongShapeNamesLayer) {
  ActorCritic net(kSmall);
  net.initialize(12);
  const auto path = temp_file("shape.ckpt");
  save_checkpoint(path, net);
  NetworkShape other = kSmall;
  other.encoder_width = 9;
  ActorCritic target(other);
  try {
    load_checkpoint(path, target);
    FAIL() << "expected CheckpointError";
  } catch (const CheckpointError& e) {
    EXPECT_NE(std::string(e.what()).find("encoder"), std::string::npos) << e.what();
  }
  std::filesystem::remove(path);
}

TEST(Checkpoint, TruncatedFileIsRejectedWithoutPartialLoad) {
  ActorCritic net(kSmall);
  net.initialize(13);
  const auto path = temp_file("trunc.ckpt");
  save_checkpoint(path, net);
  const auto size = std::filesystem::file_size(path);
  std::filesystem::resize_file(path, size / 2);
  ActorCritic target(kSmall);
  target.initialize(99);
  const ParameterSet before = target.params();
  EXPECT_THROW(load_checkpoint(path, target), CheckpointError);
  EXPECT_TRUE(same_bits(before, target.params()));
  std::filesystem::remove(path);
}

TEST(Checkpoint, VersionMismatchAndGarbage) {
  ActorCritic net(kSmall);
  const auto path = temp_file("version.ckpt");
  save_checkpoint(path, net);
  {
    std::fstream f(path, std::ios::in | std::ios::out | std::ios::binary);
    f.seekp(8);
    const std::uint32_t bogus = 77;
    f.write(reinterpret_cast<const char*>(&bogus), sizeof(bogus));
  }
  try {
    read_checkpoint(path);
    FAIL() << "expected CheckpointError";
  } catch (const CheckpointError& e) {
    EXPECT_NE(std::string(e.what()).find("version"), std::string::npos);
  }
  {
    std::ofstream f(path, std::ios::binary | std::ios::trunc);
    f << "definitely not a checkpoint";
  }
  EXPECT_THROW(read_checkpoint(path), CheckpointError);
  EXPECT_THROW(read_checkpoint(temp_file("missing.ckpt")), CheckpointError);
  std::filesystem::remove(path);
}

TEST(Checkpoint, FlippedByteFailsChecksum) {
  ActorCritic net(kSmall);
  net.initialize(14);
  const auto path = temp_file("flip.ckpt");
  save_checkpoint(path, net);
  {
    std::fstream f(path, std::ios::in | std::ios::out | std::ios::binary);
    f.seekg(60);
    char c = 0;
    f.read(&c, 1);
    c = static_cast<char>(c ^ 0x10);
    f.seekp(60);
    f.write(&c, 1);
  }
  EXPECT_THROW(read_checkpoint(path), CheckpointError);
  std::filesystem::remove(path);
}
