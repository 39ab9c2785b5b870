#pragma once

#include <array>
#include <cstddef>
#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

namespace chainwatch {

inline constexpr std::size_t kCategoryCount = 9;
inline constexpr std::size_t kScopeCount = 2;
inline constexpr std::size_t kPackageCount = 22;
inline constexpr std::size_t kIoTypeCount = 24;

// Order fixes the one-hot index of each API type.
enum class Category : std::uint8_t {
  kBinaryOp = 0,
  kConversion,
  kGetCaughtException,
  kGetStatic,
  kInvokeInterface,
  kInvokeSpecial,
  kInvokeStatic,
  kInvokeVirtual,
  kPhi,
};

enum class Scope : std::uint8_t { kApplication = 0, kPrimordial };

std::string_view to_string(Category c);
std::string_view to_string(Scope s);
std::optional<Category> parse_category(std::string_view name);
std::optional<Scope> parse_scope(std::string_view name);

/// An ordered identifier list with index lookup. Index == position.
class IdVocabulary {
 public:
  IdVocabulary() = default;
  explicit IdVocabulary(std::vector<std::string> ids);

  std::optional<std::size_t> find(std::string_view id) const;
  const std::string& at(std::size_t index) const { return ids_.at(index); }
  std::size_t size() const { return ids_.size(); }
  const std::vector<std::string>& ids() const { return ids_; }

 private:
  std::vector<std::string> ids_;
  std::unordered_map<std::string, std::size_t> index_;
};

/// Package and I/O-type vocabularies. Sizes are pinned to the feature layout.
struct Vocabulary {
  IdVocabulary packages;
  IdVocabulary io_types;

  static const Vocabulary& defaults();

  /// Reads packages.txt and io_types.txt (one id per line, index = line
  /// number). If categories.txt exists it must list the nine categories in
  /// their fixed order.
  static Vocabulary load_dir(const std::filesystem::path& dir);
};

/// One identifier per line; blank lines are rejected because they would
/// shift every later index.
std::vector<std::string> read_id_lines(const std::filesystem::path& path);

}  // namespace chainwatch
