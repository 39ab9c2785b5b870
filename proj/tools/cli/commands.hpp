#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include <CLI11.hpp>

namespace cli {

// Exit codes.
inline constexpr int kClean = 0;
inline constexpr int kError = 1;
inline constexpr int kAlarms = 2;

struct Paths {
  std::string model;
  std::string fingerprints;
  std::string whitelist;
  std::string embeddings;
  std::string vocab_dir;
  std::string out;
};

struct Options {
  Paths paths;
  std::uint64_t seed = 0;
  double threshold_classify = 0.5;
  double threshold_cosine = 0.9;
  bool halt_on_alarm = false;
  bool json = false;

  // encode / detect
  std::vector<std::string> inputs;

  // train
  std::string corpus;
  std::size_t epochs = 10;
  std::size_t batch = 32;
  double lr = 0.05;

  // gen-dataset
  std::vector<std::string> sdg;
  double benign_ratio = 0.0;
  double split = 0.85;
  std::size_t repeat = 1;
  std::size_t benign_traces = 0;

  // eval
  std::string pred;
  std::string truth;
  std::string level = "trace";
  std::string which = "test";

  // bench
  std::size_t repetitions = 5;

  // synth
  std::size_t exploits = 79;
  std::size_t variants = 2;
  std::size_t distractors = 6;
  std::uint64_t synth_seed = 7;
};

int run_encode(const Options& o);
int run_train(const Options& o);
int run_detect(const Options& o, bool naive);
int run_gen_dataset(const Options& o);
int run_eval(const Options& o);
int run_bench(const Options& o);
int run_synth(const Options& o);

}  // namespace cli
