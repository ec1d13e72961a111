// elstm-lab: data generation, training, LSTM vs E-LSTM comparison, gradient
// checking and sampling.
//
// Exit codes: 0 success, 1 usage or input error, 2 numeric/runtime failure.

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "elstm_lab/error.hpp"
#include "elstm_lab/gradcheck.hpp"
#include "elstm_lab/serialization.hpp"
#include "elstm_lab/textdata.hpp"
#include "elstm_lab/trainer.hpp"

namespace fs = std::filesystem;
using namespace elstm_lab;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitUsage = 1;
constexpr int kExitNumeric = 2;

struct UsageError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct HyperFlags {
  std::string data;
  std::size_t hidden = 100;
  std::size_t epochs = 80;
  std::size_t seg_len = 25;
  double lr = 0.1;
  double clip = 5.0;
  std::uint64_t seed = 0;
  std::size_t egate_window = 0;  // 0 = follow seg_len
  double egate_lambda = 1e-3;
  double egate_gain = 1.0;
};

void add_hyper_flags(CLI::App* cmd, HyperFlags& f) {
  cmd->add_option("--data", f.data, "UTF-8 training corpus")->required();
  cmd->add_option("--hidden", f.hidden, "Hidden units")
      ->capture_default_str()
      ->check(CLI::PositiveNumber);
  cmd->add_option("--epochs", f.epochs, "Training epochs")
      ->capture_default_str()
      ->check(CLI::PositiveNumber);
  cmd->add_option("--seg-len", f.seg_len, "Truncated BPTT segment length")
      ->capture_default_str()
      ->check(CLI::PositiveNumber);
  cmd->add_option("--lr", f.lr, "SGD learning rate")
      ->capture_default_str()
      ->check(CLI::NonNegativeNumber);
  cmd->add_option("--clip", f.clip, "Global gradient-norm clip")
      ->capture_default_str()
      ->check(CLI::PositiveNumber);
  cmd->add_option("--seed", f.seed, "RNG seed")->capture_default_str();
  cmd->add_option("--egate-window", f.egate_window,
                  "E-gate window length (default: --seg-len)")
      ->check(CLI::PositiveNumber);
  cmd->add_option("--egate-lambda", f.egate_lambda, "E-gate ridge penalty (0 = pinv)")
      ->capture_default_str()
      ->check(CLI::NonNegativeNumber);
  cmd->add_option("--egate-gain", f.egate_gain, "E-gate gain (0 disables the gate)")
      ->capture_default_str()
      ->check(CLI::NonNegativeNumber);
}

TrainConfig make_config(const HyperFlags& f, ModelKind kind) {
  if (!fs::is_regular_file(f.data)) {
    throw UsageError("data file not found: " + f.data);
  }
  TrainConfig cfg;
  cfg.model = kind;
  cfg.hidden = f.hidden;
  cfg.epochs = f.epochs;
  cfg.seg_len = f.seg_len;
  cfg.lr = f.lr;
  cfg.clip = f.clip;
  cfg.seed = f.seed;
  cfg.egate.window = f.egate_window == 0 ? f.seg_len : f.egate_window;
  cfg.egate.lambda = f.egate_lambda;
  cfg.egate.gain = f.egate_gain;
  cfg.data.path = fs::path(f.data);
  return cfg;
}

nlohmann::json config_json(const TrainConfig& c) {
  return {{"data", c.data.path ? c.data.path->string() : std::string()},
          {"hidden", c.hidden},
          {"epochs", c.epochs},
          {"seg_len", c.seg_len},
          {"lr", c.lr},
          {"clip", c.clip},
          {"seed", c.seed},
          {"optimizer", "sgd"},
          {"egate",
           {{"window", c.egate.window},
            {"lambda", c.egate.lambda},
            {"gain", c.egate.gain},
            {"encode_scale", c.egate.encode_scale}}}};
}

std::vector<double> parse_targets(const std::string& text) {
  std::vector<double> out;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) {
    if (item.find_first_not_of(" \t") == std::string::npos) continue;
    try {
      std::size_t used = 0;
      out.push_back(std::stod(item, &used));
      if (item.find_first_not_of(" \t", used) != std::string::npos) throw std::exception();
    } catch (const std::exception&) {
      throw UsageError("bad --targets entry '" + item + "'");
    }
  }
  return out;
}

void print_epoch(ModelKind kind, const EpochMetrics& m) {
  std::fprintf(stderr, "[%s] epoch %zu  loss %.6f  acc %.4f  %.3fs\n",
               std::string(to_string(kind)).c_str(), m.epoch, m.mean_loss, m.accuracy,
               m.seconds);
}

int cmd_gen_data(std::size_t n, std::uint64_t seed, const std::string& out) {
  if (n < 2) throw UsageError("--n must be >= 2");
  const CharDataset ds = gen_random_letters(n, seed);
  try {
    write_corpus(ds, out);
  } catch (const InputError& e) {
    throw UsageError(e.what());
  }
  std::cout << "wrote " << ds.size() << " characters (" << ds.vocab.size()
            << " distinct) to " << out << "\n";
  return kExitOk;
}

int cmd_train(const HyperFlags& f, const std::string& model, const std::string& metrics_out,
              const std::string& checkpoint_out) {
  const TrainConfig cfg = make_config(f, parse_model_kind(model));
  const CharDataset ds = load_corpus(*cfg.data.path);
  const TrainResult result = train_run(cfg, ds, print_epoch);
  if (!metrics_out.empty()) {
    write_metrics_csv(metrics_out, {{cfg.model, result.metrics, 0.0}});
  }
  if (!checkpoint_out.empty()) save_checkpoint(result.model, checkpoint_out);
  const EpochMetrics& last = result.metrics.back();
  std::printf("model %s  final loss %.6f  accuracy %.6f  mean epoch seconds %.6f\n",
              model.c_str(), last.mean_loss, last.accuracy,
              mean_epoch_seconds(result.metrics));
  if (result.model.egate && result.model.egate->large_term_steps > 0) {
    std::fprintf(stderr, "warning: %zu steps had an E-gate term above %.0f in magnitude\n",
                 result.model.egate->large_term_steps, kLargeGateTerm);
  }
  return kExitOk;
}

int cmd_compare(const HyperFlags& f, const std::string& targets_text,
                const std::string& report_out, const std::string& metrics_out, bool serial) {
  const TrainConfig lstm = make_config(f, ModelKind::kLstm);
  const TrainConfig elstm = make_config(f, ModelKind::kElstm);
  const std::vector<double> targets = parse_targets(targets_text);
  CompareOptions options;
  options.serial = serial;
  options.on_epoch = print_epoch;
  const ComparisonRun run = compare_run(lstm, elstm, targets, options);
  const ComparisonReport& r = run.report;

  nlohmann::json config = config_json(lstm);
  config["serial"] = serial;
  const nlohmann::json doc = report_to_json(r, config);
  if (!report_out.empty()) {
    std::ofstream out(report_out, std::ios::trunc);
    if (!out) throw UsageError("cannot write report '" + report_out + "'");
    out << doc.dump(2) << "\n";
  }
  if (!metrics_out.empty()) write_metrics_csv(metrics_out, {r.lstm, r.elstm});

  std::printf("mean epoch seconds  lstm %.6f  elstm %.6f\n", r.lstm.mean_epoch_seconds,
              r.elstm.mean_epoch_seconds);
  if (r.overhead_pct) std::printf("overhead_pct %.2f\n", *r.overhead_pct);
  for (const TargetEpochs& t : r.epochs_to_target) {
    auto show = [](const std::optional<std::size_t>& e) {
      return e ? std::to_string(*e) : std::string("none");
    };
    std::printf("target %.4f  lstm %s  elstm %s  ratio %s\n", t.target,
                show(t.lstm).c_str(), show(t.elstm).c_str(),
                t.ratio ? std::to_string(*t.ratio).c_str() : "null");
  }
  return kExitOk;
}

int cmd_gradcheck(const std::string& model, std::size_t hidden, std::size_t seg_len,
                  std::uint64_t seed, double tolerance) {
  if (!(tolerance > 0.0)) throw UsageError("--tolerance must be > 0");
  const ModelKind kind = parse_model_kind(model);
  const GradcheckResult r = run_gradcheck(kind, hidden, seg_len, seed);
  std::printf("model %s  parameters %zu  max relative error %.3e\n", model.c_str(),
              r.parameter_count, r.max_rel_error);
  if (kind == ModelKind::kElstm) {
    std::printf("steps with a fitted gate term: %zu of %zu\n", r.gate_terms_applied,
                seg_len);
  }
  if (r.max_rel_error > tolerance) {
    std::printf("FAIL: worst block %s[%zu] analytic %.10e numeric %.10e\n",
                r.worst_block.c_str(), r.worst_index, r.worst_analytic, r.worst_numeric);
    return kExitNumeric;
  }
  std::printf("OK (tolerance %.1e)\n", tolerance);
  return kExitOk;
}

int cmd_sample(const std::string& checkpoint, std::size_t length, std::uint64_t seed,
               double temperature) {
  if (length < 1) throw UsageError("--length must be >= 1");
  if (!(temperature > 0.0)) throw UsageError("--temperature must be > 0");
  const Model model = load_checkpoint(checkpoint);
  std::cout << encode_utf8(sample_text(model, length, seed, temperature)) << "\n";
  return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"elstm-lab: LSTM and E-LSTM character language models"};
  app.require_subcommand(1);

  std::size_t gen_n = 11000;
  std::uint64_t gen_seed = 0;
  std::string gen_out;
  auto* gen = app.add_subcommand("gen-data", "Write a random a-z corpus");
  gen->add_option("--n", gen_n, "Number of letters")->capture_default_str();
  gen->add_option("--seed", gen_seed, "RNG seed")->capture_default_str();
  gen->add_option("--out", gen_out, "Output text file")->required();

  HyperFlags train_flags;
  std::string train_model = "lstm";
  std::string train_metrics;
  std::string train_checkpoint;
  auto* train = app.add_subcommand("train", "Train one model");
  train->add_option("--model", train_model, "lstm or elstm")
      ->capture_default_str()
      ->check(CLI::IsMember({"lstm", "elstm"}));
  add_hyper_flags(train, train_flags);
  train->add_option("--metrics-out", train_metrics, "Per-epoch metrics CSV");
  train->add_option("--checkpoint-out", train_checkpoint, "Checkpoint JSON");

  HyperFlags cmp_flags;
  std::string cmp_targets = "1.5,1.2";
  std::string cmp_report;
  std::string cmp_metrics;
  bool cmp_serial = false;
  auto* compare = app.add_subcommand("compare", "Train LSTM and E-LSTM and compare");
  add_hyper_flags(compare, cmp_flags);
  compare->add_option("--targets", cmp_targets, "Comma-separated target losses")
      ->capture_default_str();
  compare->add_option("--report-out", cmp_report, "Comparison report JSON");
  compare->add_option("--metrics-out", cmp_metrics, "Per-epoch metrics CSV, both models");
  compare->add_flag("--serial", cmp_serial, "Train one model after the other");

  std::string gc_model = "lstm";
  std::size_t gc_hidden = 3;
  std::size_t gc_seg_len = 5;
  std::uint64_t gc_seed = 0;
  double gc_tolerance = 1e-5;
  auto* gradcheck = app.add_subcommand("gradcheck", "Finite-difference gradient check");
  gradcheck->add_option("--model", gc_model, "lstm or elstm")
      ->capture_default_str()
      ->check(CLI::IsMember({"lstm", "elstm"}));
  gradcheck->add_option("--hidden", gc_hidden, "Hidden units")
      ->capture_default_str()
      ->check(CLI::PositiveNumber);
  gradcheck->add_option("--seg-len", gc_seg_len, "Sequence length")
      ->capture_default_str()
      ->check(CLI::PositiveNumber);
  gradcheck->add_option("--seed", gc_seed, "RNG seed")->capture_default_str();
  gradcheck->add_option("--tolerance", gc_tolerance, "Max relative error")
      ->capture_default_str();

  std::string smp_checkpoint;
  std::size_t smp_length = 200;
  std::uint64_t smp_seed = 0;
  double smp_temperature = 1.0;
  auto* sample = app.add_subcommand("sample", "Sample text from a checkpoint");
  sample->add_option("--checkpoint", smp_checkpoint, "Checkpoint JSON")->required();
  sample->add_option("--length", smp_length, "Characters to emit")->capture_default_str();
  sample->add_option("--seed", smp_seed, "RNG seed")->capture_default_str();
  sample->add_option("--temperature", smp_temperature, "Softmax temperature")
      ->capture_default_str();

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kExitUsage;
  }

  try {
    if (*gen) return cmd_gen_data(gen_n, gen_seed, gen_out);
    if (*train) return cmd_train(train_flags, train_model, train_metrics, train_checkpoint);
    if (*compare) {
      return cmd_compare(cmp_flags, cmp_targets, cmp_report, cmp_metrics, cmp_serial);
    }
    if (*gradcheck) {
      return cmd_gradcheck(gc_model, gc_hidden, gc_seg_len, gc_seed, gc_tolerance);
    }
    if (*sample) return cmd_sample(smp_checkpoint, smp_length, smp_seed, smp_temperature);
  } catch (const UsageError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitUsage;
  } catch (const InputError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitUsage;
  } catch (const ShapeError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitUsage;
  } catch (const NumericError& e) {
    std::cerr << "numeric failure: " << e.what() << "\n";
    return kExitNumeric;
  } catch (const std::exception& e) {
    std::cerr << "failure: " << e.what() << "\n";
    return kExitNumeric;
  }
  return kExitUsage;
}
