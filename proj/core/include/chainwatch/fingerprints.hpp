#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <map>
#include <set>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "chainwatch/features.hpp"

namespace chainwatch {

using ExploitId = std::uint32_t;

inline constexpr std::size_t kDefaultExploitCapacity = 79;

enum class TemplateRole : std::uint8_t { kNone, kSource, kSink };

/// A fingerprint as written in the file: metadata plus ordered templates.
struct FingerprintSpec {
  ExploitId exploit_id = 0;
  std::string cwe_id;
  std::string label;
  std::vector<InstructionCall> templates;
  std::vector<TemplateRole> roles;  // parallel to templates
};

struct Fingerprint : FingerprintSpec {
  std::vector<FeatureVector> template_vectors;
  std::vector<double> template_norms;

  std::size_t length() const { return templates.size(); }
};

class FingerprintError : public FormatError {
 public:
  using FormatError::FormatError;
};

class FingerprintDb {
 public:
  explicit FingerprintDb(std::size_t capacity = kDefaultExploitCapacity);

  /// Encodes every template. Throws FingerprintError on a duplicate id, an
  /// id outside the capacity, or an empty template list.
  void add(FingerprintSpec spec, const EmbeddingTable& table);

  bool contains(ExploitId id) const;
  const Fingerprint& at(ExploitId id) const;
  /// Ascending exploit id.
  std::span<const Fingerprint> fingerprints() const { return entries_; }
  std::vector<ExploitId> ids() const;
  std::size_t size() const { return entries_.size(); }
  bool empty() const { return entries_.empty(); }
  std::size_t capacity() const { return slots_.size(); }

  const std::map<std::string, std::vector<ExploitId>>& cwe_index() const { return cwes_; }

  /// Re-encodes every template and compares bit-for-bit. Returns the ids
  /// whose stored vectors disagree.
  std::vector<ExploitId> validate_encoding(const EmbeddingTable& table) const;

 private:
  std::vector<Fingerprint> entries_;
  std::vector<int> slots_;  // exploit id -> entries_ position, -1 if absent
  std::map<std::string, std::vector<ExploitId>> cwes_;
};

/// Block format:
///
///   fingerprint exploit_id=4 cwe_id=CWE-89 label=sqli_console
///     api_name=readLine category=invokevirtual ... role=source
///     api_name=executeQuery ... role=sink
///   end
///
/// `#` starts a comment line.
std::vector<FingerprintSpec> parse_fingerprint_specs(std::istream& in,
                                                     const Vocabulary& vocab);
FingerprintDb load_fingerprints(const std::filesystem::path& path,
                                const EmbeddingTable& table,
                                const Vocabulary& vocab = Vocabulary::defaults(),
                                std::size_t capacity = kDefaultExploitCapacity);
void write_fingerprint_specs(std::ostream& out, std::span<const FingerprintSpec> specs,
                             const Vocabulary& vocab = Vocabulary::defaults());

/// API names skipped before encoding. Matches on api_name only.
class WhiteList {
 public:
  WhiteList() = default;
  WhiteList(std::initializer_list<std::string> names) : names_(names) {}

  static WhiteList load(const std::filesystem::path& path);
  static WhiteList parse(std::istream& in);

  void insert(std::string name) { names_.insert(std::move(name)); }
  bool contains(std::string_view name) const;
  std::size_t size() const { return names_.size(); }
  const std::set<std::string, std::less<>>& names() const { return names_; }

 private:
  std::set<std::string, std::less<>> names_;
};

}  // namespace chainwatch
