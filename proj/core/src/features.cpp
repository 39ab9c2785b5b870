#include "chainwatch/features.hpp"

#include <cctype>
#include <charconv>
#include <cmath>
#include <fstream>
#include <random>
#include <sstream>

namespace chainwatch {
namespace {

bool is_upper(char c) { return c >= 'A' && c <= 'Z'; }
bool is_lower(char c) { return c >= 'a' && c <= 'z'; }
bool is_alpha(char c) { return is_upper(c) || is_lower(c); }

std::string lowercase(std::string_view s) {
  std::string out(s);
  for (auto& c : out) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
  return out;
}

}  // namespace

EmbeddingTable EmbeddingTable::load(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw FormatError("cannot open embedding file " + path.string());
  try {
    return parse(in);
  } catch (const FormatError& e) {
    throw FormatError(path.string() + ": " + e.what());
  }
}

EmbeddingTable EmbeddingTable::parse(std::istream& in) {
  EmbeddingTable table;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    std::istringstream fields(line);
    std::string token;
    if (!(fields >> token) || token.front() == '#') continue;
    Embedding vec{};
    std::size_t n = 0;
    std::string number;
    while (fields >> number) {
      if (n == kEmbeddingDim) {
        throw FormatError("line " + std::to_string(lineno) + ": more than 10 components");
      }
      double v = 0.0;
      auto [ptr, ec] = std::from_chars(number.data(), number.data() + number.size(), v);
      if (ec != std::errc() || ptr != number.data() + number.size() || !std::isfinite(v)) {
        throw FormatError("line " + std::to_string(lineno) + ": bad component '" + number + "'");
      }
      vec[n++] = v;
    }
    if (n != kEmbeddingDim) {
      throw FormatError("line " + std::to_string(lineno) + ": expected 10 components, got " +
                        std::to_string(n));
    }
    auto key = lowercase(token);
    if (table.find(key) != nullptr) {
      throw FormatError("line " + std::to_string(lineno) + ": duplicate token '" + key + "'");
    }
    table.insert(std::move(key), vec);
  }
  return table;
}

void EmbeddingTable::insert(std::string token, const Embedding& vec) {
  table_.insert_or_assign(lowercase(token), vec);
}

const Embedding* EmbeddingTable::find(std::string_view token) const {
  auto it = table_.find(std::string(token));
  return it == table_.end() ? nullptr : &it->second;
}

Embedding EmbeddingTable::lookup(std::string_view token) const {
  if (const auto* vec = find(token)) return *vec;
  return hash_embed(token);
}

Embedding hash_embed(std::string_view token) {
  std::uint64_t hash = 14695981039346656037ULL;
  for (unsigned char c : token) {
    hash ^= c;
    hash *= 1099511628211ULL;
  }
  std::mt19937_64 rng(hash);
  Embedding vec{};
  double norm2 = 0.0;
  for (auto& v : vec) {
    v = static_cast<double>(rng() >> 11) * 0x1.0p-53 * 2.0 - 1.0;
    norm2 += v * v;
  }
  if (norm2 == 0.0) {
    vec[0] = 1.0;
    return vec;
  }
  const double norm = std::sqrt(norm2);
  for (auto& v : vec) v /= norm;
  return vec;
}

std::vector<std::string> tokenize_api_name(std::string_view name) {
  std::vector<std::string> tokens;
  std::string current;
  auto flush = [&] {
    if (!current.empty() && tokens.size() < kMaxNameTokens) tokens.push_back(lowercase(current));
    current.clear();
  };
  for (std::size_t i = 0; i < name.size(); ++i) {
    const char c = name[i];
    if (!is_alpha(c)) {
      flush();
      continue;
    }
    if (is_upper(c) && !current.empty()) {
      const char prev = current.back();
      const bool next_lower = i + 1 < name.size() && is_lower(name[i + 1]);
      // "readLine" splits before L; "URLConnection" splits before the C.
      if (is_lower(prev) || (is_upper(prev) && next_lower)) flush();
    }
    current += c;
  }
  flush();
  return tokens;
}

std::array<double, kNameDim> embed_name(std::span<const std::string> tokens,
                                        const EmbeddingTable& table) {
  std::array<double, kNameDim> out{};
  const auto n = std::min(tokens.size(), kMaxNameTokens);
  for (std::size_t t = 0; t < n; ++t) {
    const auto vec = table.lookup(tokens[t]);
    std::copy(vec.begin(), vec.end(), out.begin() + static_cast<std::ptrdiff_t>(t * kEmbeddingDim));
  }
  return out;
}

std::vector<double> one_hot(std::size_t index, std::size_t size) {
  if (index >= size) {
    throw DimensionError("one-hot index " + std::to_string(index) + " out of range for size " +
                         std::to_string(size));
  }
  std::vector<double> out(size, 0.0);
  out[index] = 1.0;
  return out;
}

std::array<double, kIoTypeCount> freq_vector(const IoCounts& counts) {
  std::array<double, kIoTypeCount> out{};
  for (std::size_t i = 0; i < counts.size(); ++i) out[i] = counts[i];
  return out;
}

std::array<double, kIoTypeCount> freq_vector(std::span<const std::string> types,
                                             const IdVocabulary& vocab) {
  if (vocab.size() != kIoTypeCount) {
    throw DimensionError("I/O vocabulary must have 24 entries");
  }
  std::array<double, kIoTypeCount> out{};
  for (const auto& t : types) {
    auto idx = vocab.find(t);
    if (!idx) throw TraceError(TraceError::Kind::kUnknownIoType, "io_type", t, {});
    out[*idx] += 1.0;
  }
  return out;
}

FeatureVector encode(const InstructionCall& call, const EmbeddingTable& table) {
  if (call.package >= kPackageCount) {
    throw DimensionError("package index " + std::to_string(call.package) + " out of range");
  }
  FeatureVector x{};
  const auto tokens = tokenize_api_name(call.api_name);
  const auto name = embed_name(tokens, table);
  std::copy(name.begin(), name.end(), x.begin() + kNameOffset);
  x[kCategoryOffset + static_cast<std::size_t>(call.category)] = 1.0;
  x[kScopeOffset + static_cast<std::size_t>(call.scope)] = 1.0;
  x[kPackageOffset + call.package] = 1.0;
  for (std::size_t i = 0; i < kIoTypeCount; ++i) {
    x[kInputOffset + i] = call.inputs[i];
    x[kOutputOffset + i] = call.outputs[i];
  }
  return x;
}

}  // namespace chainwatch
