#pragma once

#include <array>
#include <bitset>
#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <span>
#include <vector>

#include "chainwatch/error.hpp"
#include "chainwatch/features.hpp"

namespace chainwatch {

inline constexpr std::size_t kExploitCount = 79;
inline constexpr std::size_t kHidden1 = 150;
inline constexpr std::size_t kHidden2 = 100;

inline constexpr std::size_t kW1Size = kHidden1 * kFeatureDim;
inline constexpr std::size_t kW2Size = kHidden2 * kHidden1;
inline constexpr std::size_t kW3Size = kExploitCount * kHidden2;
inline constexpr std::size_t kParameterCount =
    kW1Size + kHidden1 + kW2Size + kHidden2 + kW3Size + kExploitCount;
static_assert(kParameterCount == 45'879);

using LabelSet = std::bitset<kExploitCount>;
using Probabilities = std::array<double, kExploitCount>;

/// Parameter blocks, in storage and file order.
enum class Block : std::uint8_t { kW1 = 0, kB1, kW2, kB2, kW3, kB3 };
inline constexpr std::size_t kBlockCount = 6;

/// Fully connected 151 -> 150 -> 100 -> 79, relu hidden units, logistic
/// outputs. Weights are row-major (out x in); all parameters live in one
/// contiguous buffer laid out W1 b1 W2 b2 W3 b3.
class MlpModel {
 public:
  /// All-zero parameters.
  MlpModel();

  /// Per-layer uniform in +-sqrt(6 / (fan_in + fan_out)); biases zero.
  static MlpModel glorot_uniform(std::uint64_t seed);

  std::span<double> params() { return params_; }
  std::span<const double> params() const { return params_; }
  std::span<double> block(Block b);
  std::span<const double> block(Block b) const;
  static std::size_t block_offset(Block b);
  static std::size_t block_size(Block b);

  std::size_t parameter_count() const { return params_.size(); }
  bool all_finite() const;
  std::uint64_t seed() const { return seed_; }
  void set_seed(std::uint64_t seed) { seed_ = seed; }

  friend bool operator==(const MlpModel&, const MlpModel&) = default;

 private:
  std::vector<double> params_;
  std::uint64_t seed_ = 0;
};

/// Throws DimensionError unless x has 151 components.
Probabilities forward(const MlpModel& model, std::span<const double> x);

struct ExploitPrediction {
  Probabilities probabilities{};
  std::vector<std::size_t> predicted;  // ascending
};

/// predicted = { i : p_i >= threshold }, threshold in (0, 1).
ExploitPrediction predict(const MlpModel& model, std::span<const double> x,
                          double threshold = 0.5);

inline constexpr double kProbabilityClamp = 1e-7;

/// Mean binary cross-entropy over the 79 labels, probabilities clamped to
/// [1e-7, 1 - 1e-7].
double loss(const Probabilities& y, const LabelSet& target);

/// Gradient of loss(forward(model, x), target) w.r.t. every parameter, laid
/// out like MlpModel::params().
std::vector<double> gradient(const MlpModel& model, std::span<const double> x,
                             const LabelSet& target);

struct Example {
  FeatureVector x{};
  LabelSet target;
};

struct TrainConfig {
  double learning_rate = 0.05;
  std::size_t epochs = 10;
  std::size_t batch_size = 32;
  std::uint64_t seed = 1;
};

struct TrainLog {
  double initial_loss = 0.0;
  // Per epoch, mean loss of each example as scored just before its batch's
  // update.
  std::vector<double> epoch_loss;
};

class TrainingError : public Error {
 public:
  using Error::Error;
};

/// Minibatch gradient descent from a seeded glorot init. Deterministic for a
/// given seed. Throws TrainingError on an empty dataset or non-finite loss.
MlpModel train(std::span<const Example> data, const TrainConfig& config,
               TrainLog* log = nullptr);

double mean_loss(const MlpModel& model, std::span<const Example> data);

using GradientFn = std::function<std::vector<double>(
    const MlpModel&, std::span<const double>, const LabelSet&)>;

struct GradCheckResult {
  double max_relative_error = 0.0;
  std::size_t worst_parameter = 0;
  std::size_t sampled = 0;
};

/// Compares `analytic` against central differences with step `eps` on
/// `per_block` randomly drawn parameters from each of the six blocks.
/// relative error = |a - n| / max(|a|, |n|, 1e-6).
GradCheckResult grad_check(const MlpModel& model, std::span<const double> x,
                           const LabelSet& target, double eps,
                           std::uint64_t seed = 0, std::size_t per_block = 20,
                           const GradientFn& analytic = gradient);

class ModelFileError : public FormatError {
 public:
  enum class Kind { kCorrupt, kArchitectureMismatch, kUnsupportedVersion };
  ModelFileError(Kind kind, const std::string& what) : FormatError(what), kind_(kind) {}
  Kind kind() const { return kind_; }

 private:
  Kind kind_;
};

inline constexpr std::uint32_t kModelFormatVersion = 1;

void save_model(const MlpModel& model, const std::filesystem::path& path);
MlpModel load_model(const std::filesystem::path& path);
void write_model(std::ostream& out, const MlpModel& model);
MlpModel read_model(std::istream& in);

}  // namespace chainwatch
