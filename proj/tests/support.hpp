#pragma once

#include <filesystem>
#include <random>
#include <string>

#include "chainwatch/trace.hpp"

namespace testing_support {

inline std::filesystem::path data_dir() { return CHAINWATCH_DATA_DIR; }

inline chainwatch::InstructionCall parse(const std::string& record) {
  return chainwatch::parse_trace_record(record);
}

/// A random but valid call; names are drawn from a small pool so that
/// equal names with different fields also occur.
inline chainwatch::InstructionCall random_call(std::mt19937_64& rng) {
  static const char* names[] = {"readLine", "executeQuery", "append", "toString", "getenv",
                                "parseInt", "<init>", "URLDecoder_decode", "x2y", "HTTPGet"};
  std::uniform_int_distribution<int> name(0, 9), cat(0, chainwatch::kCategoryCount - 1),
      scope(0, 1), pkg(0, chainwatch::kPackageCount - 1), io(0, chainwatch::kIoTypeCount - 1),
      n(0, 3);
  chainwatch::InstructionCall c;
  c.api_name = names[name(rng)];
  c.category = static_cast<chainwatch::Category>(cat(rng));
  c.scope = static_cast<chainwatch::Scope>(scope(rng));
  c.package = static_cast<std::uint8_t>(pkg(rng));
  for (int k = n(rng); k > 0; --k) ++c.inputs[io(rng)];
  for (int k = n(rng); k > 0; --k) ++c.outputs[io(rng)];
  return c;
}

}  // namespace testing_support
