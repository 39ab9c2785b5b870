#pragma once

#include <array>
#include <cstdint>
#include <initializer_list>
#include <iosfwd>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "chainwatch/error.hpp"
#include "chainwatch/vocabulary.hpp"

namespace chainwatch {

/// Multiset over the I/O-type vocabulary, stored as per-index counts.
using IoCounts = std::array<std::uint16_t, kIoTypeCount>;

struct InstructionCall {
  std::string api_name;
  Category category = Category::kInvokeVirtual;
  Scope scope = Scope::kPrimordial;
  std::uint8_t package = 0;
  IoCounts inputs{};
  IoCounts outputs{};

  friend bool operator==(const InstructionCall&, const InstructionCall&) = default;
};

struct Trace {
  std::string source_id;
  std::vector<InstructionCall> calls;
};

class TraceError : public FormatError {
 public:
  enum class Kind {
    kMalformedRecord,
    kUnknownCategory,
    kUnknownScope,
    kUnknownPackage,
    kUnknownIoType,
  };

  TraceError(Kind kind, std::string field, std::string value, std::string detail);

  Kind kind() const { return kind_; }
  const std::string& field() const { return field_; }
  const std::string& value() const { return value_; }
  /// 1-based line number, 0 when unknown.
  std::size_t line() const { return line_; }
  TraceError with_line(std::size_t line) const;

 private:
  Kind kind_;
  std::string field_;
  std::string value_;
  std::string detail_;
  std::size_t line_ = 0;
};

/// `key=value` tokens of one record line, split on whitespace.
using RecordFields = std::vector<std::pair<std::string, std::string>>;

RecordFields split_record_fields(std::string_view line);

/// Builds a call from the six record keys. Keys listed in `extra_keys` are
/// tolerated and left for the caller; any other key is malformed.
InstructionCall call_from_fields(const RecordFields& fields, const Vocabulary& vocab,
                                 std::initializer_list<std::string_view> extra_keys = {});

InstructionCall parse_trace_record(std::string_view line,
                                   const Vocabulary& vocab = Vocabulary::defaults());

/// Canonical form: fixed key order, I/O lists sorted by vocabulary index.
std::string format_trace_record(const InstructionCall& call,
                                const Vocabulary& vocab = Vocabulary::defaults());

Trace read_trace(std::istream& in, const Vocabulary& vocab = Vocabulary::defaults(),
                 std::string source_id = {});
Trace read_trace_file(const std::string& path,
                      const Vocabulary& vocab = Vocabulary::defaults());
void write_trace(std::ostream& out, const Trace& trace,
                 const Vocabulary& vocab = Vocabulary::defaults());

}  // namespace chainwatch
