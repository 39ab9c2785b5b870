#include "chainwatch/trace.hpp"

#include <algorithm>
#include <fstream>
#include <istream>
#include <limits>
#include <ostream>
#include <sstream>

namespace chainwatch {
namespace {

constexpr std::array<std::string_view, 6> kRecordKeys = {
    "api_name", "category", "scope", "package", "inputs", "outputs"};

std::string describe(TraceError::Kind kind, const std::string& field, const std::string& value,
                     const std::string& detail) {
  std::string msg;
  switch (kind) {
    case TraceError::Kind::kMalformedRecord: msg = "malformed record"; break;
    case TraceError::Kind::kUnknownCategory: msg = "unknown category"; break;
    case TraceError::Kind::kUnknownScope: msg = "unknown scope"; break;
    case TraceError::Kind::kUnknownPackage: msg = "unknown package"; break;
    case TraceError::Kind::kUnknownIoType: msg = "unknown I/O type"; break;
  }
  if (!field.empty()) msg += " in field '" + field + "'";
  if (!value.empty()) msg += ": '" + value + "'";
  if (!detail.empty()) msg += " (" + detail + ")";
  return msg;
}

[[noreturn]] void malformed(const std::string& detail, const std::string& field = {},
                            const std::string& value = {}) {
  throw TraceError(TraceError::Kind::kMalformedRecord, field, value, detail);
}

IoCounts parse_io_list(const std::string& field, std::string_view list, const IdVocabulary& vocab) {
  IoCounts counts{};
  if (list.empty()) return counts;
  std::size_t pos = 0;
  while (true) {
    auto comma = list.find(',', pos);
    auto item = list.substr(pos, comma == std::string_view::npos ? list.npos : comma - pos);
    if (item.empty()) malformed("empty list item", field, std::string(list));
    auto idx = vocab.find(item);
    if (!idx) {
      throw TraceError(TraceError::Kind::kUnknownIoType, field, std::string(item), {});
    }
    if (counts[*idx] == std::numeric_limits<std::uint16_t>::max()) {
      malformed("multiplicity overflow", field, std::string(item));
    }
    ++counts[*idx];
    if (comma == std::string_view::npos) break;
    pos = comma + 1;
  }
  return counts;
}

void append_io_list(std::string& out, const IoCounts& counts, const IdVocabulary& vocab) {
  bool first = true;
  for (std::size_t i = 0; i < counts.size(); ++i) {
    for (std::uint16_t k = 0; k < counts[i]; ++k) {
      if (!first) out += ',';
      out += vocab.at(i);
      first = false;
    }
  }
}

}  // namespace

TraceError::TraceError(Kind kind, std::string field, std::string value, std::string detail)
    : FormatError(describe(kind, field, value, detail)),
      kind_(kind),
      field_(std::move(field)),
      value_(std::move(value)),
      detail_(std::move(detail)) {}

TraceError TraceError::with_line(std::size_t line) const {
  TraceError copy(kind_, field_, value_,
                  detail_.empty() ? "line " + std::to_string(line)
                                  : detail_ + ", line " + std::to_string(line));
  copy.line_ = line;
  return copy;
}

RecordFields split_record_fields(std::string_view line) {
  RecordFields fields;
  std::size_t pos = 0;
  while (pos < line.size()) {
    while (pos < line.size() && (line[pos] == ' ' || line[pos] == '\t' || line[pos] == '\r')) ++pos;
    if (pos >= line.size()) break;
    auto end = pos;
    while (end < line.size() && line[end] != ' ' && line[end] != '\t' && line[end] != '\r') ++end;
    auto token = line.substr(pos, end - pos);
    auto eq = token.find('=');
    if (eq == std::string_view::npos || eq == 0) malformed("expected key=value", {}, std::string(token));
    fields.emplace_back(std::string(token.substr(0, eq)), std::string(token.substr(eq + 1)));
    pos = end;
  }
  return fields;
}

InstructionCall call_from_fields(const RecordFields& fields, const Vocabulary& vocab,
                                 std::initializer_list<std::string_view> extra_keys) {
  if (fields.empty()) malformed("empty record");
  std::array<const std::string*, kRecordKeys.size()> values{};
  for (const auto& [key, value] : fields) {
    auto it = std::find(kRecordKeys.begin(), kRecordKeys.end(), key);
    if (it == kRecordKeys.end()) {
      if (std::find(extra_keys.begin(), extra_keys.end(), key) != extra_keys.end()) continue;
      malformed("unknown key", key);
    }
    auto& slot = values[static_cast<std::size_t>(it - kRecordKeys.begin())];
    if (slot != nullptr) malformed("duplicate key", key);
    slot = &value;
  }
  for (std::size_t i = 0; i < values.size(); ++i) {
    if (values[i] == nullptr) malformed("missing key", std::string(kRecordKeys[i]));
  }

  InstructionCall call;
  call.api_name = *values[0];
  if (call.api_name.empty()) malformed("empty api name", "api_name");

  auto category = parse_category(*values[1]);
  if (!category) throw TraceError(TraceError::Kind::kUnknownCategory, "category", *values[1], {});
  call.category = *category;

  auto scope = parse_scope(*values[2]);
  if (!scope) throw TraceError(TraceError::Kind::kUnknownScope, "scope", *values[2], {});
  call.scope = *scope;

  auto package = vocab.packages.find(*values[3]);
  if (!package) throw TraceError(TraceError::Kind::kUnknownPackage, "package", *values[3], {});
  call.package = static_cast<std::uint8_t>(*package);

  call.inputs = parse_io_list("inputs", *values[4], vocab.io_types);
  call.outputs = parse_io_list("outputs", *values[5], vocab.io_types);
  return call;
}

InstructionCall parse_trace_record(std::string_view line, const Vocabulary& vocab) {
  return call_from_fields(split_record_fields(line), vocab);
}

std::string format_trace_record(const InstructionCall& call, const Vocabulary& vocab) {
  std::string out;
  out.reserve(160);
  out += "api_name=";
  out += call.api_name;
  out += " category=";
  out += to_string(call.category);
  out += " scope=";
  out += to_string(call.scope);
  out += " package=";
  out += vocab.packages.at(call.package);
  out += " inputs=";
  append_io_list(out, call.inputs, vocab.io_types);
  out += " outputs=";
  append_io_list(out, call.outputs, vocab.io_types);
  return out;
}

Trace read_trace(std::istream& in, const Vocabulary& vocab, std::string source_id) {
  Trace trace;
  trace.source_id = std::move(source_id);
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    try {
      trace.calls.push_back(parse_trace_record(line, vocab));
    } catch (const TraceError& e) {
      throw e.with_line(lineno);
    }
  }
  return trace;
}

Trace read_trace_file(const std::string& path, const Vocabulary& vocab) {
  std::ifstream in(path);
  if (!in) throw FormatError("cannot open trace file " + path);
  return read_trace(in, vocab, path);
}

void write_trace(std::ostream& out, const Trace& trace, const Vocabulary& vocab) {
  for (const auto& call : trace.calls) out << format_trace_record(call, vocab) << '\n';
}

}  // namespace chainwatch
