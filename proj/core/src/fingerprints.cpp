#include "chainwatch/fingerprints.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <istream>
#include <ostream>

#include <optional>

namespace chainwatch {
namespace {

std::string_view trim(std::string_view s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

std::string_view role_name(TemplateRole role) {
  switch (role) {
    case TemplateRole::kSource: return "source";
    case TemplateRole::kSink: return "sink";
    case TemplateRole::kNone: break;
  }
  return "none";
}

double norm(const FeatureVector& v) {
  double s = 0.0;
  for (double x : v) s += x * x;
  return std::sqrt(s);
}

}  // namespace

FingerprintDb::FingerprintDb(std::size_t capacity) : slots_(capacity, -1) {}

void FingerprintDb::add(FingerprintSpec spec, const EmbeddingTable& table) {
  const auto id = spec.exploit_id;
  if (id >= slots_.size()) {
    throw FingerprintError("exploit_id " + std::to_string(id) + " outside capacity " +
                           std::to_string(slots_.size()));
  }
  if (slots_[id] >= 0) throw FingerprintError("duplicate exploit_id " + std::to_string(id));
  if (spec.templates.empty()) {
    throw FingerprintError("fingerprint " + std::to_string(id) + " has no templates");
  }
  if (spec.roles.size() != spec.templates.size()) spec.roles.resize(spec.templates.size());

  Fingerprint fp;
  static_cast<FingerprintSpec&>(fp) = std::move(spec);
  fp.template_vectors.reserve(fp.templates.size());
  for (std::size_t i = 0; i < fp.templates.size(); ++i) {
    try {
      fp.template_vectors.push_back(encode(fp.templates[i], table));
    } catch (const Error& e) {
      throw FingerprintError("fingerprint " + std::to_string(id) + " template " +
                             std::to_string(i) + ": " + e.what());
    }
    fp.template_norms.push_back(norm(fp.template_vectors.back()));
  }

  auto pos = std::lower_bound(entries_.begin(), entries_.end(), id,
                              [](const Fingerprint& f, ExploitId v) { return f.exploit_id < v; });
  cwes_[fp.cwe_id].push_back(id);
  std::sort(cwes_[fp.cwe_id].begin(), cwes_[fp.cwe_id].end());
  entries_.insert(pos, std::move(fp));
  for (std::size_t i = 0; i < entries_.size(); ++i) {
    slots_[entries_[i].exploit_id] = static_cast<int>(i);
  }
}

bool FingerprintDb::contains(ExploitId id) const { return id < slots_.size() && slots_[id] >= 0; }

const Fingerprint& FingerprintDb::at(ExploitId id) const {
  if (!contains(id)) throw Error("unknown exploit_id " + std::to_string(id));
  return entries_[static_cast<std::size_t>(slots_[id])];
}

std::vector<ExploitId> FingerprintDb::ids() const {
  std::vector<ExploitId> out;
  out.reserve(entries_.size());
  for (const auto& fp : entries_) out.push_back(fp.exploit_id);
  return out;
}

std::vector<ExploitId> FingerprintDb::validate_encoding(const EmbeddingTable& table) const {
  std::vector<ExploitId> bad;
  for (const auto& fp : entries_) {
    for (std::size_t i = 0; i < fp.templates.size(); ++i) {
      if (encode(fp.templates[i], table) != fp.template_vectors[i]) {
        bad.push_back(fp.exploit_id);
        break;
      }
    }
  }
  return bad;
}

std::vector<FingerprintSpec> parse_fingerprint_specs(std::istream& in, const Vocabulary& vocab) {
  std::vector<FingerprintSpec> specs;
  std::optional<FingerprintSpec> open;
  std::string line;
  std::size_t lineno = 0;
  auto fail = [&](const std::string& msg) -> FingerprintError {
    return FingerprintError("line " + std::to_string(lineno) + ": " + msg);
  };

  while (std::getline(in, line)) {
    ++lineno;
    const auto text = trim(line);
    if (text.empty() || text.front() == '#') continue;

    if (text == "end") {
      if (!open) throw fail("'end' without an open fingerprint");
      specs.push_back(std::move(*open));
      open.reset();
      continue;
    }
    if (text.starts_with("fingerprint ") || text == "fingerprint") {
      if (open) throw fail("fingerprint " + std::to_string(open->exploit_id) + " is missing 'end'");
      FingerprintSpec spec;
      bool have_id = false;
      for (const auto& [key, value] : split_record_fields(text.substr(11))) {
        if (key == "exploit_id") {
          auto [ptr, ec] = std::from_chars(value.data(), value.data() + value.size(), spec.exploit_id);
          if (ec != std::errc() || ptr != value.data() + value.size()) {
            throw fail("bad exploit_id '" + value + "'");
          }
          have_id = true;
        } else if (key == "cwe_id") {
          spec.cwe_id = value;
        } else if (key == "label") {
          spec.label = value;
        } else {
          throw fail("unknown fingerprint key '" + key + "'");
        }
      }
      if (!have_id) throw fail("fingerprint header without exploit_id");
      if (spec.cwe_id.empty()) throw fail("fingerprint header without cwe_id");
      open = std::move(spec);
      continue;
    }
    if (!open) throw fail("template record outside a fingerprint block");
    try {
      const auto fields = split_record_fields(text);
      auto call = call_from_fields(fields, vocab, {"role"});
      TemplateRole role = TemplateRole::kNone;
      for (const auto& [key, value] : fields) {
        if (key != "role") continue;
        if (value == "source") role = TemplateRole::kSource;
        else if (value == "sink") role = TemplateRole::kSink;
        else if (value != "none") throw fail("unknown role '" + value + "'");
      }
      open->templates.push_back(std::move(call));
      open->roles.push_back(role);
    } catch (const TraceError& e) {
      throw fail("fingerprint " + std::to_string(open->exploit_id) + ": " + e.what());
    }
  }
  if (open) throw fail("fingerprint " + std::to_string(open->exploit_id) + " is missing 'end'");
  return specs;
}

FingerprintDb load_fingerprints(const std::filesystem::path& path, const EmbeddingTable& table,
                                const Vocabulary& vocab, std::size_t capacity) {
  std::ifstream in(path);
  if (!in) throw FingerprintError("cannot open fingerprint file " + path.string());
  FingerprintDb db(capacity);
  try {
    for (auto& spec : parse_fingerprint_specs(in, vocab)) db.add(std::move(spec), table);
  } catch (const FingerprintError& e) {
    throw FingerprintError(path.string() + ": " + e.what());
  }
  return db;
}

void write_fingerprint_specs(std::ostream& out, std::span<const FingerprintSpec> specs,
                             const Vocabulary& vocab) {
  for (const auto& spec : specs) {
    out << "fingerprint exploit_id=" << spec.exploit_id << " cwe_id=" << spec.cwe_id;
    if (!spec.label.empty()) out << " label=" << spec.label;
    out << '\n';
    for (std::size_t i = 0; i < spec.templates.size(); ++i) {
      out << "  " << format_trace_record(spec.templates[i], vocab);
      const auto role = i < spec.roles.size() ? spec.roles[i] : TemplateRole::kNone;
      if (role != TemplateRole::kNone) out << " role=" << role_name(role);
      out << '\n';
    }
    out << "end\n";
  }
}

WhiteList WhiteList::load(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw FormatError("cannot open white-list file " + path.string());
  return parse(in);
}

WhiteList WhiteList::parse(std::istream& in) {
  WhiteList list;
  std::string line;
  while (std::getline(in, line)) {
    const auto text = trim(line);
    if (text.empty() || text.front() == '#') continue;
    list.insert(std::string(text));
  }
  return list;
}

bool WhiteList::contains(std::string_view name) const { return names_.find(name) != names_.end(); }

}  // namespace chainwatch
