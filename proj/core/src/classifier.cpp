#include "chainwatch/classifier.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstring>
#include <fstream>
#include <istream>
#include <numeric>
#include <ostream>
#include <random>

namespace chainwatch {
namespace {

static_assert(std::endian::native == std::endian::little,
              "model files are little-endian; big-endian hosts need byte swapping");

constexpr std::array<std::size_t, kBlockCount> kBlockSizes = {
    kW1Size, kHidden1, kW2Size, kHidden2, kW3Size, kExploitCount};

constexpr std::array<std::size_t, kBlockCount> block_offsets() {
  std::array<std::size_t, kBlockCount> off{};
  std::size_t acc = 0;
  for (std::size_t i = 0; i < kBlockCount; ++i) {
    off[i] = acc;
    acc += kBlockSizes[i];
  }
  return off;
}
constexpr auto kBlockOffsets = block_offsets();

double sigmoid(double z) {
  if (z >= 0.0) return 1.0 / (1.0 + std::exp(-z));
  const double e = std::exp(z);
  return e / (1.0 + e);
}

// Activations kept for the backward pass.
struct Activations {
  std::array<double, kHidden1> z1{};
  std::array<double, kHidden1> h1{};
  std::array<double, kHidden2> z2{};
  std::array<double, kHidden2> h2{};
  Probabilities y{};
  std::vector<std::size_t> nonzero_x;
};

void check_input(std::span<const double> x) {
  if (x.size() != kFeatureDim) {
    throw DimensionError("classifier input has " + std::to_string(x.size()) +
                         " components, expected " + std::to_string(kFeatureDim));
  }
}

void forward_pass(const MlpModel& model, std::span<const double> x, Activations& a) {
  const auto w1 = model.block(Block::kW1);
  const auto b1 = model.block(Block::kB1);
  const auto w2 = model.block(Block::kW2);
  const auto b2 = model.block(Block::kB2);
  const auto w3 = model.block(Block::kW3);
  const auto b3 = model.block(Block::kB3);

  a.nonzero_x.clear();
  for (std::size_t j = 0; j < kFeatureDim; ++j) {
    if (x[j] != 0.0) a.nonzero_x.push_back(j);
  }
  for (std::size_t i = 0; i < kHidden1; ++i) {
    const double* row = w1.data() + i * kFeatureDim;
    double s = b1[i];
    for (std::size_t j : a.nonzero_x) s += row[j] * x[j];
    a.z1[i] = s;
    a.h1[i] = s > 0.0 ? s : 0.0;
  }
  for (std::size_t i = 0; i < kHidden2; ++i) {
    const double* row = w2.data() + i * kHidden1;
    double s = b2[i];
    for (std::size_t j = 0; j < kHidden1; ++j) s += row[j] * a.h1[j];
    a.z2[i] = s;
    a.h2[i] = s > 0.0 ? s : 0.0;
  }
  for (std::size_t i = 0; i < kExploitCount; ++i) {
    const double* row = w3.data() + i * kHidden2;
    double s = b3[i];
    for (std::size_t j = 0; j < kHidden2; ++j) s += row[j] * a.h2[j];
    a.y[i] = sigmoid(s);
  }
}

// Adds d loss / d params for one example into `grad`.
void backward_pass(const MlpModel& model, std::span<const double> x, const LabelSet& target,
                   const Activations& a, std::span<double> grad) {
  const auto w2 = model.block(Block::kW2);
  const auto w3 = model.block(Block::kW3);
  double* g_w1 = grad.data() + kBlockOffsets[0];
  double* g_b1 = grad.data() + kBlockOffsets[1];
  double* g_w2 = grad.data() + kBlockOffsets[2];
  double* g_b2 = grad.data() + kBlockOffsets[3];
  double* g_w3 = grad.data() + kBlockOffsets[4];
  double* g_b3 = grad.data() + kBlockOffsets[5];

  std::array<double, kExploitCount> dz3{};
  constexpr double kScale = 1.0 / static_cast<double>(kExploitCount);
  for (std::size_t i = 0; i < kExploitCount; ++i) {
    const double y = a.y[i];
    // The clamp is flat outside [eps, 1 - eps].
    if (y < kProbabilityClamp || y > 1.0 - kProbabilityClamp) continue;
    dz3[i] = (y - (target[i] ? 1.0 : 0.0)) * kScale;
  }

  std::array<double, kHidden2> dh2{};
  for (std::size_t i = 0; i < kExploitCount; ++i) {
    const double d = dz3[i];
    if (d == 0.0) continue;
    g_b3[i] += d;
    double* grow = g_w3 + i * kHidden2;
    const double* wrow = w3.data() + i * kHidden2;
    for (std::size_t j = 0; j < kHidden2; ++j) {
      grow[j] += d * a.h2[j];
      dh2[j] += d * wrow[j];
    }
  }

  std::array<double, kHidden1> dh1{};
  for (std::size_t i = 0; i < kHidden2; ++i) {
    if (a.z2[i] <= 0.0) continue;
    const double d = dh2[i];
    if (d == 0.0) continue;
    g_b2[i] += d;
    double* grow = g_w2 + i * kHidden1;
    const double* wrow = w2.data() + i * kHidden1;
    for (std::size_t j = 0; j < kHidden1; ++j) {
      grow[j] += d * a.h1[j];
      dh1[j] += d * wrow[j];
    }
  }

  for (std::size_t i = 0; i < kHidden1; ++i) {
    if (a.z1[i] <= 0.0) continue;
    const double d = dh1[i];
    if (d == 0.0) continue;
    g_b1[i] += d;
    double* grow = g_w1 + i * kFeatureDim;
    for (std::size_t j : a.nonzero_x) grow[j] += d * x[j];
  }
}

std::uint64_t fnv1a(const unsigned char* data, std::size_t n) {
  std::uint64_t h = 14695981039346656037ULL;
  for (std::size_t i = 0; i < n; ++i) {
    h ^= data[i];
    h *= 1099511628211ULL;
  }
  return h;
}

constexpr char kMagic[8] = {'C', 'W', 'M', 'L', 'P', '\0', '\0', '\0'};
constexpr std::uint8_t kActivationRelu = 1;
constexpr std::uint8_t kActivationLogistic = 2;

template <typename T>
void put(std::ostream& out, T value) {
  out.write(reinterpret_cast<const char*>(&value), sizeof(T));
}

template <typename T>
T get(std::istream& in, const char* what) {
  T value{};
  if (!in.read(reinterpret_cast<char*>(&value), sizeof(T))) {
    throw ModelFileError(ModelFileError::Kind::kCorrupt,
                         std::string("model file truncated while reading ") + what);
  }
  return value;
}

}  // namespace

MlpModel::MlpModel() : params_(kParameterCount, 0.0) {}

MlpModel MlpModel::glorot_uniform(std::uint64_t seed) {
  MlpModel model;
  model.seed_ = seed;
  std::mt19937_64 rng(seed);
  auto fill = [&](Block b, std::size_t fan_in, std::size_t fan_out) {
    const double limit = std::sqrt(6.0 / static_cast<double>(fan_in + fan_out));
    std::uniform_real_distribution<double> dist(-limit, limit);
    for (auto& w : model.block(b)) w = dist(rng);
  };
  fill(Block::kW1, kFeatureDim, kHidden1);
  fill(Block::kW2, kHidden1, kHidden2);
  fill(Block::kW3, kHidden2, kExploitCount);
  return model;
}

std::size_t MlpModel::block_offset(Block b) { return kBlockOffsets[static_cast<std::size_t>(b)]; }
std::size_t MlpModel::block_size(Block b) { return kBlockSizes[static_cast<std::size_t>(b)]; }

std::span<double> MlpModel::block(Block b) {
  return std::span<double>(params_).subspan(block_offset(b), block_size(b));
}

std::span<const double> MlpModel::block(Block b) const {
  return std::span<const double>(params_).subspan(block_offset(b), block_size(b));
}

bool MlpModel::all_finite() const {
  return std::all_of(params_.begin(), params_.end(), [](double v) { return std::isfinite(v); });
}

Probabilities forward(const MlpModel& model, std::span<const double> x) {
  check_input(x);
  Activations a;
  forward_pass(model, x, a);
  return a.y;
}

ExploitPrediction predict(const MlpModel& model, std::span<const double> x, double threshold) {
  if (!(threshold > 0.0 && threshold < 1.0)) {
    throw Error("decision threshold must lie in (0, 1)");
  }
  ExploitPrediction out;
  out.probabilities = forward(model, x);
  for (std::size_t i = 0; i < kExploitCount; ++i) {
    if (out.probabilities[i] >= threshold) out.predicted.push_back(i);
  }
  return out;
}

double loss(const Probabilities& y, const LabelSet& target) {
  double sum = 0.0;
  for (std::size_t i = 0; i < kExploitCount; ++i) {
    const double p = std::clamp(y[i], kProbabilityClamp, 1.0 - kProbabilityClamp);
    sum -= target[i] ? std::log(p) : std::log(1.0 - p);
  }
  return sum / static_cast<double>(kExploitCount);
}

std::vector<double> gradient(const MlpModel& model, std::span<const double> x,
                             const LabelSet& target) {
  check_input(x);
  Activations a;
  forward_pass(model, x, a);
  std::vector<double> grad(kParameterCount, 0.0);
  backward_pass(model, x, target, a, grad);
  return grad;
}

double mean_loss(const MlpModel& model, std::span<const Example> data) {
  if (data.empty()) return 0.0;
  Activations a;
  double sum = 0.0;
  for (const auto& ex : data) {
    forward_pass(model, ex.x, a);
    sum += loss(a.y, ex.target);
  }
  return sum / static_cast<double>(data.size());
}

MlpModel train(std::span<const Example> data, const TrainConfig& config, TrainLog* log) {
  if (data.empty()) throw TrainingError("training set is empty");
  if (config.batch_size == 0) throw TrainingError("batch size must be positive");
  if (!(config.learning_rate > 0.0) || !std::isfinite(config.learning_rate)) {
    throw TrainingError("learning rate must be a positive finite number");
  }

  MlpModel model = MlpModel::glorot_uniform(config.seed);
  if (log != nullptr) {
    log->initial_loss = mean_loss(model, data);
    log->epoch_loss.clear();
  }

  std::mt19937_64 rng(config.seed ^ 0x9E3779B97F4A7C15ULL);
  std::vector<std::size_t> order(data.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::vector<double> grad(kParameterCount, 0.0);
  Activations a;
  auto params = model.params();

  for (std::size_t epoch = 0; epoch < config.epochs; ++epoch) {
    std::shuffle(order.begin(), order.end(), rng);
    double epoch_loss = 0.0;
    for (std::size_t start = 0; start < order.size(); start += config.batch_size) {
      const std::size_t end = std::min(order.size(), start + config.batch_size);
      std::fill(grad.begin(), grad.end(), 0.0);
      for (std::size_t k = start; k < end; ++k) {
        const auto& ex = data[order[k]];
        forward_pass(model, ex.x, a);
        const double l = loss(a.y, ex.target);
        if (!std::isfinite(l)) {
          throw TrainingError("non-finite loss at epoch " + std::to_string(epoch) + ", example " +
                              std::to_string(order[k]));
        }
        epoch_loss += l;
        backward_pass(model, ex.x, ex.target, a, grad);
      }
      const double step = config.learning_rate / static_cast<double>(end - start);
      for (std::size_t p = 0; p < kParameterCount; ++p) params[p] -= step * grad[p];
    }
    if (!model.all_finite()) {
      throw TrainingError("parameters diverged at epoch " + std::to_string(epoch));
    }
    if (log != nullptr) log->epoch_loss.push_back(epoch_loss / static_cast<double>(data.size()));
  }
  return model;
}

GradCheckResult grad_check(const MlpModel& model, std::span<const double> x,
                           const LabelSet& target, double eps, std::uint64_t seed,
                           std::size_t per_block, const GradientFn& analytic) {
  if (!(eps > 0.0 && eps <= 1e-2)) throw Error("grad_check step must lie in (0, 1e-2]");
  check_input(x);
  const auto grad = analytic(model, x, target);
  if (grad.size() != kParameterCount) throw DimensionError("analytic gradient has wrong length");

  std::mt19937_64 rng(seed);
  MlpModel probe = model;
  auto params = probe.params();
  GradCheckResult result;
  for (std::size_t b = 0; b < kBlockCount; ++b) {
    const auto blk = static_cast<Block>(b);
    std::uniform_int_distribution<std::size_t> pick(0, MlpModel::block_size(blk) - 1);
    for (std::size_t s = 0; s < per_block; ++s) {
      const std::size_t p = MlpModel::block_offset(blk) + pick(rng);
      const double saved = params[p];
      params[p] = saved + eps;
      const double up = loss(forward(probe, x), target);
      params[p] = saved - eps;
      const double down = loss(forward(probe, x), target);
      params[p] = saved;
      const double numeric = (up - down) / (2.0 * eps);
      const double denom = std::max({std::abs(grad[p]), std::abs(numeric), 1e-6});
      const double rel = std::abs(grad[p] - numeric) / denom;
      if (rel > result.max_relative_error) {
        result.max_relative_error = rel;
        result.worst_parameter = p;
      }
      ++result.sampled;
    }
  }
  return result;
}

void write_model(std::ostream& out, const MlpModel& model) {
  out.write(kMagic, sizeof(kMagic));
  put<std::uint32_t>(out, kModelFormatVersion);
  put<std::uint32_t>(out, 4);
  for (std::uint32_t size : {kFeatureDim, kHidden1, kHidden2, kExploitCount}) put(out, size);
  put<std::uint8_t>(out, kActivationRelu);
  put<std::uint8_t>(out, kActivationLogistic);
  put<std::uint16_t>(out, 0);
  put<std::uint64_t>(out, model.seed());
  const auto params = model.params();
  const auto* bytes = reinterpret_cast<const char*>(params.data());
  out.write(bytes, static_cast<std::streamsize>(params.size_bytes()));
  put<std::uint64_t>(out, fnv1a(reinterpret_cast<const unsigned char*>(bytes), params.size_bytes()));
  if (!out) throw FormatError("failed writing model");
}

MlpModel read_model(std::istream& in) {
  using Kind = ModelFileError::Kind;
  char magic[sizeof(kMagic)];
  if (!in.read(magic, sizeof(magic)) || std::memcmp(magic, kMagic, sizeof(kMagic)) != 0) {
    throw ModelFileError(Kind::kCorrupt, "not a chainwatch model file (bad magic)");
  }
  const auto version = get<std::uint32_t>(in, "version");
  if (version != kModelFormatVersion) {
    throw ModelFileError(Kind::kUnsupportedVersion,
                         "unsupported model format version " + std::to_string(version));
  }
  const auto layers = get<std::uint32_t>(in, "layer count");
  if (layers != 4) {
    throw ModelFileError(Kind::kArchitectureMismatch,
                         "model declares " + std::to_string(layers) + " layers, expected 4");
  }
  const std::array<std::size_t, 4> expected = {kFeatureDim, kHidden1, kHidden2, kExploitCount};
  std::string declared;
  bool sizes_ok = true;
  for (std::size_t i = 0; i < 4; ++i) {
    const auto size = get<std::uint32_t>(in, "layer sizes");
    declared += (i ? "-" : "") + std::to_string(size);
    sizes_ok = sizes_ok && size == expected[i];
  }
  if (!sizes_ok) {
    throw ModelFileError(Kind::kArchitectureMismatch,
                         "model declares layer sizes " + declared + ", expected 151-150-100-79");
  }
  const auto hidden_act = get<std::uint8_t>(in, "activations");
  const auto output_act = get<std::uint8_t>(in, "activations");
  get<std::uint16_t>(in, "reserved");
  if (hidden_act != kActivationRelu || output_act != kActivationLogistic) {
    throw ModelFileError(Kind::kArchitectureMismatch, "unsupported activation ids");
  }
  MlpModel model;
  model.set_seed(get<std::uint64_t>(in, "seed"));
  auto params = model.params();
  auto* bytes = reinterpret_cast<char*>(params.data());
  if (!in.read(bytes, static_cast<std::streamsize>(params.size_bytes()))) {
    throw ModelFileError(Kind::kCorrupt, "model file truncated in parameter blocks");
  }
  const auto checksum = get<std::uint64_t>(in, "checksum");
  if (checksum != fnv1a(reinterpret_cast<const unsigned char*>(bytes), params.size_bytes())) {
    throw ModelFileError(Kind::kCorrupt, "model checksum mismatch");
  }
  if (in.peek() != std::char_traits<char>::eof()) {
    throw ModelFileError(Kind::kCorrupt, "trailing bytes after model checksum");
  }
  if (!model.all_finite()) throw ModelFileError(Kind::kCorrupt, "model has non-finite parameters");
  return model;
}

void save_model(const MlpModel& model, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw FormatError("cannot write model file " + path.string());
  write_model(out, model);
}

MlpModel load_model(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw FormatError("cannot open model file " + path.string());
  return read_model(in);
}

}  // namespace chainwatch
