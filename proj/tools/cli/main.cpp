#include <exception>
#include <iostream>

#include <CLI11.hpp>

#include "chainwatch/error.hpp"
#include "commands.hpp"

namespace {

void add_seed(CLI::App* cmd, cli::Options& o) {
  cmd->add_option("--seed", o.seed, "RNG seed")->capture_default_str();
}

void add_vocab(CLI::App* cmd, cli::Options& o) {
  cmd->add_option("--vocab-dir", o.paths.vocab_dir,
                  "Directory with packages.txt and io_types.txt (built-in lists if unset)")
      ->envname("CHAINWATCH_VOCAB_DIR");
}

void add_embeddings(CLI::App* cmd, cli::Options& o) {
  cmd->add_option("--embeddings", o.paths.embeddings,
                  "Token embedding table (hash fallback only if unset)")
      ->envname("CHAINWATCH_EMBEDDINGS");
}

void add_whitelist(CLI::App* cmd, cli::Options& o) {
  cmd->add_option("--whitelist", o.paths.whitelist, "White-listed API names, one per line")
      ->envname("CHAINWATCH_WHITELIST");
}

CLI::Option* add_out(CLI::App* cmd, cli::Options& o, const std::string& help) {
  return cmd->add_option("--out,-o", o.paths.out, help)->envname("CHAINWATCH_OUT");
}

void add_engine(CLI::App* cmd, cli::Options& o, bool with_model) {
  if (with_model) {
    cmd->add_option("--model", o.paths.model, "Trained classifier file")
        ->envname("CHAINWATCH_MODEL")
        ->required();
    cmd->add_option("--threshold-classify", o.threshold_classify,
                    "Probability threshold for nominating an exploit")
        ->capture_default_str();
  }
  cmd->add_option("--fingerprints", o.paths.fingerprints, "Fingerprint database file")
      ->envname("CHAINWATCH_FINGERPRINTS")
      ->required();
  cmd->add_option("--threshold-cosine", o.threshold_cosine,
                  "Cosine similarity needed to advance a fingerprint")
      ->capture_default_str();
  add_whitelist(cmd, o);
  add_embeddings(cmd, o);
  add_vocab(cmd, o);
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"chainwatch: streaming detection of vulnerable instruction sequences"};
  app.set_config("--config", "", "Read options from a TOML/INI file");
  app.require_subcommand(1);
  cli::Options o;

  auto* encode = app.add_subcommand("encode", "Print the 151-float feature vector of every record");
  encode->add_option("traces", o.inputs, "Trace files")->required();
  add_embeddings(encode, o);
  add_vocab(encode, o);
  add_out(encode, o, "Write vectors here instead of stdout");
  add_seed(encode, o);

  auto* train = app.add_subcommand("train", "Train the exploit classifier on a corpus");
  train->add_option("--corpus", o.corpus, "Corpus directory (uses train/)")
      ->envname("CHAINWATCH_CORPUS")
      ->required();
  train->add_option("--epochs", o.epochs, "Passes over the training set")->capture_default_str();
  train->add_option("--batch", o.batch, "Minibatch size")->capture_default_str();
  train->add_option("--lr", o.lr, "Learning rate")->capture_default_str();
  add_embeddings(train, o);
  add_whitelist(train, o);
  add_vocab(train, o);
  add_out(train, o, "Model output file")->required();
  add_seed(train, o);

  auto* detect = app.add_subcommand("detect", "Run the classifier-gated pipeline over traces");
  auto* naive = app.add_subcommand("detect-naive", "Compare every call against every fingerprint");
  for (auto* cmd : {detect, naive}) {
    cmd->add_option("traces", o.inputs, "Trace files or directories of *.trace")->required();
    add_engine(cmd, o, cmd == detect);
    cmd->add_flag("--halt-on-alarm", o.halt_on_alarm, "Stop a trace at its first alarm");
    add_out(cmd, o, "Write alarm records here instead of stdout");
    add_seed(cmd, o);
  }

  auto* gen = app.add_subcommand("gen-dataset", "Extract vulnerable sequences and write a corpus");
  gen->add_option("--sdg", o.sdg, "SDG files or directories of *.sdg")
      ->envname("CHAINWATCH_SDG")
      ->required();
  gen->add_option("--fingerprints", o.paths.fingerprints, "Fingerprints with source/sink roles")
      ->envname("CHAINWATCH_FINGERPRINTS")
      ->required();
  gen->add_option("--benign-ratio", o.benign_ratio, "Fraction of filler calls per trace, in [0, 1)")
      ->capture_default_str();
  gen->add_option("--split", o.split, "Fraction of traces written to train/")->capture_default_str();
  gen->add_option("--repeat", o.repeat, "Traces per extracted sequence")->capture_default_str();
  gen->add_option("--benign-traces", o.benign_traces, "Extra filler-only traces")
      ->capture_default_str();
  add_vocab(gen, o);
  add_out(gen, o, "Corpus output directory")->required();
  add_seed(gen, o);

  auto* eval = app.add_subcommand("eval", "Per-exploit precision, recall, F1 and accuracy");
  eval->add_option("--pred", o.pred, "Predicted labels file (with --truth)")->envname("CHAINWATCH_PRED");
  eval->add_option("--truth", o.truth, "Target labels file (with --pred)")->envname("CHAINWATCH_TRUTH");
  eval->add_option("--corpus", o.corpus, "Corpus directory")->envname("CHAINWATCH_CORPUS");
  eval->add_option("--split", o.which, "Corpus split to score")
      ->check(CLI::IsMember({"train", "test"}))
      ->capture_default_str();
  eval->add_option("--level", o.level, "trace: alarms vs planted; call: classifier vs labels")
      ->check(CLI::IsMember({"trace", "call"}))
      ->capture_default_str();
  eval->add_option("--model", o.paths.model, "Trained classifier file")->envname("CHAINWATCH_MODEL");
  eval->add_option("--fingerprints", o.paths.fingerprints, "Fingerprint database file")
      ->envname("CHAINWATCH_FINGERPRINTS");
  eval->add_option("--threshold-classify", o.threshold_classify)->capture_default_str();
  eval->add_option("--threshold-cosine", o.threshold_cosine)->capture_default_str();
  add_whitelist(eval, o);
  add_embeddings(eval, o);
  add_vocab(eval, o);
  eval->add_flag("--json", o.json, "Print JSON instead of a table");
  add_seed(eval, o);

  auto* bench = app.add_subcommand("bench", "Per-call latency and comparison counts, engine vs naive");
  bench->add_option("--corpus", o.corpus, "Corpus directory")
      ->envname("CHAINWATCH_CORPUS")
      ->required();
  bench->add_option("--split", o.which, "Corpus split to replay")
      ->check(CLI::IsMember({"train", "test"}))
      ->capture_default_str();
  bench->add_option("--repetitions", o.repetitions, "Timed passes (>= 3)")->capture_default_str();
  add_engine(bench, o, true);
  add_out(bench, o, "Write the JSON report here instead of stdout");
  add_seed(bench, o);

  auto* synth = app.add_subcommand("synth", "Write a synthetic fingerprint set and SDG programs");
  synth->add_option("--exploits", o.exploits, "Exploits to include (1-79)")->capture_default_str();
  synth->add_option("--variants", o.variants, "Programs per exploit")->capture_default_str();
  synth->add_option("--distractors", o.distractors, "Benign statements per program")
      ->capture_default_str();
  add_vocab(synth, o);
  add_out(synth, o, "Output directory")->required();
  synth->add_option("--seed", o.synth_seed, "RNG seed")->capture_default_str();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e) == 0 ? cli::kClean : cli::kError;
  }

  try {
    if (*encode) return cli::run_encode(o);
    if (*train) return cli::run_train(o);
    if (*detect) return cli::run_detect(o, false);
    if (*naive) return cli::run_detect(o, true);
    if (*gen) return cli::run_gen_dataset(o);
    if (*eval) return cli::run_eval(o);
    if (*bench) return cli::run_bench(o);
    if (*synth) return cli::run_synth(o);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return cli::kError;
  }
  return cli::kError;
}
