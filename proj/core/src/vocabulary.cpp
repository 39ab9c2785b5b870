#include "chainwatch/vocabulary.hpp"

#include <array>
#include <fstream>

#include "chainwatch/error.hpp"

namespace chainwatch {
namespace {

constexpr std::array<std::string_view, kCategoryCount> kCategoryNames = {
    "binaryop",        "conversion",    "getCaughtException",
    "getstatic",       "invokeinterface", "invokespecial",
    "invokestatic",    "invokevirtual", "phi",
};

constexpr std::array<std::string_view, kScopeCount> kScopeNames = {"Application", "Primordial"};

// String, Level, Throwable and File come first so the first four frequency
// components line up with the usual four-column illustration.
const std::vector<std::string> kDefaultIoTypes = {
    "Ljava/lang/String",
    "Ljava/util/logging/Level",
    "Ljava/lang/Throwable",
    "Ljava/io/File",
    "Ljava/sql/ResultSet",
    "I",
    "J",
    "S",
    "B",
    "F",
    "D",
    "Z",
    "V",
    "Ljava/lang/Object",
    "Ljava/sql/Connection",
    "Ljava/sql/Statement",
    "Ljava/sql/PreparedStatement",
    "Ljava/io/InputStream",
    "Ljava/io/Reader",
    "Ljava/net/URL",
    "Ljava/net/Socket",
    "Ljava/util/Properties",
    "Ljava/lang/StringBuilder",
    "Ljava/util/HashMap",
};

const std::vector<std::string> kDefaultPackages = {
    "Ljava/io/BufferedReader",
    "Ljava/io/InputStreamReader",
    "Ljava/io/File",
    "Ljava/io/FileInputStream",
    "Ljava/lang/String",
    "Ljava/lang/StringBuilder",
    "Ljava/lang/Integer",
    "Ljava/lang/Runtime",
    "Ljava/lang/System",
    "Ljava/lang/Class",
    "Ljava/lang/Thread",
    "Ljava/sql/Connection",
    "Ljava/sql/Statement",
    "Ljava/sql/PreparedStatement",
    "Ljava/sql/DriverManager",
    "Ljava/net/URL",
    "Ljava/net/URLConnection",
    "Ljava/net/Socket",
    "Ljava/util/Properties",
    "Ljava/util/HashMap",
    "Ljava/util/logging/Logger",
    "Ljavax/servlet/http/HttpServletResponse",
};

}  // namespace

std::string_view to_string(Category c) { return kCategoryNames.at(static_cast<std::size_t>(c)); }
std::string_view to_string(Scope s) { return kScopeNames.at(static_cast<std::size_t>(s)); }

std::optional<Category> parse_category(std::string_view name) {
  for (std::size_t i = 0; i < kCategoryNames.size(); ++i) {
    if (kCategoryNames[i] == name) return static_cast<Category>(i);
  }
  return std::nullopt;
}

std::optional<Scope> parse_scope(std::string_view name) {
  for (std::size_t i = 0; i < kScopeNames.size(); ++i) {
    if (kScopeNames[i] == name) return static_cast<Scope>(i);
  }
  return std::nullopt;
}

IdVocabulary::IdVocabulary(std::vector<std::string> ids) : ids_(std::move(ids)) {
  for (std::size_t i = 0; i < ids_.size(); ++i) {
    if (!index_.emplace(ids_[i], i).second) {
      throw FormatError("duplicate vocabulary entry '" + ids_[i] + "'");
    }
  }
}

std::optional<std::size_t> IdVocabulary::find(std::string_view id) const {
  auto it = index_.find(std::string(id));
  if (it == index_.end()) return std::nullopt;
  return it->second;
}

const Vocabulary& Vocabulary::defaults() {
  static const Vocabulary vocab{IdVocabulary(kDefaultPackages), IdVocabulary(kDefaultIoTypes)};
  return vocab;
}

std::vector<std::string> read_id_lines(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw FormatError("cannot open vocabulary file " + path.string());
  std::vector<std::string> ids;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty() || line.find_first_of(" \t") != std::string::npos) {
      throw FormatError(path.string() + ":" + std::to_string(lineno) +
                        ": expected one identifier per line");
    }
    ids.push_back(line);
  }
  return ids;
}

Vocabulary Vocabulary::load_dir(const std::filesystem::path& dir) {
  auto packages = read_id_lines(dir / "packages.txt");
  auto io_types = read_id_lines(dir / "io_types.txt");
  if (packages.size() != kPackageCount) {
    throw FormatError("packages.txt lists " + std::to_string(packages.size()) +
                      " entries, the feature layout needs " + std::to_string(kPackageCount));
  }
  if (io_types.size() != kIoTypeCount) {
    throw FormatError("io_types.txt lists " + std::to_string(io_types.size()) +
                      " entries, the feature layout needs " + std::to_string(kIoTypeCount));
  }
  const auto categories_path = dir / "categories.txt";
  if (std::filesystem::exists(categories_path)) {
    auto categories = read_id_lines(categories_path);
    bool ok = categories.size() == kCategoryCount;
    for (std::size_t i = 0; ok && i < categories.size(); ++i) {
      ok = categories[i] == kCategoryNames[i];
    }
    if (!ok) throw FormatError("categories.txt does not match the fixed category order");
  }
  return Vocabulary{IdVocabulary(std::move(packages)), IdVocabulary(std::move(io_types))};
}

}  // namespace chainwatch
