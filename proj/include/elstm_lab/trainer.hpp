#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "elstm_lab/elstm.hpp"
#include "elstm_lab/error.hpp"
#include "elstm_lab/lstm.hpp"
#include "elstm_lab/textdata.hpp"

namespace elstm_lab {

enum class ModelKind { kLstm, kElstm };

std::string_view to_string(ModelKind kind);
/// "lstm" or "elstm"; throws ShapeError otherwise.
ModelKind parse_model_kind(std::string_view name);

/// A trained or fresh character model: weights, vocabulary and, for E-LSTM,
/// the gate state.
struct Model {
  ModelKind kind = ModelKind::kLstm;
  std::uint64_t seed = 0;
  Vocab vocab;
  LstmParams params;
  EGateConfig egate_config;
  std::optional<EGateState> egate;  // present iff kind == kElstm

  /// Random initialization: "weights" substream for the LSTM, "egate-encode"
  /// for the target embedding.
  static Model create(ModelKind kind, const Vocab& vocab, std::size_t hidden,
                      std::uint64_t seed, const EGateConfig& egate = {});
};

/// Where a training corpus comes from: a UTF-8 file, or the random-letters
/// generator.
struct DatasetSpec {
  std::optional<std::filesystem::path> path;
  std::size_t generate_n = 11000;
  std::uint64_t generate_seed = 0;

  CharDataset load() const;
  friend bool operator==(const DatasetSpec&, const DatasetSpec&) = default;
};

struct TrainConfig {
  ModelKind model = ModelKind::kLstm;
  std::size_t hidden = 100;
  std::size_t seg_len = 25;
  std::size_t epochs = 80;
  double lr = 0.1;
  double clip = 5.0;
  std::uint64_t seed = 0;
  EGateConfig egate;  // used by kElstm only
  DatasetSpec data;

  void validate() const;
};

struct EpochMetrics {
  std::size_t epoch = 0;   // 1-based
  double mean_loss = 0.0;  // nats per character
  double accuracy = 0.0;   // top-1 next-character rate
  double seconds = 0.0;    // wall clock for the epoch loop
};

struct TrainResult {
  std::vector<EpochMetrics> metrics;
  Model model;
};

/// Training failure carrying where it happened (1-based epoch, 0-based segment).
class TrainingError : public NumericError {
 public:
  TrainingError(std::size_t epoch, std::size_t segment, const std::string& what);
  std::size_t epoch() const { return epoch_; }
  std::size_t segment() const { return segment_; }

 private:
  std::size_t epoch_;
  std::size_t segment_;
};

using EpochCallback = std::function<void(ModelKind, const EpochMetrics&)>;

/// Truncated-BPTT training with plain SGD.
///
/// Each epoch walks every segment in order: forward, backward, clipped SGD
/// update. Hidden and cell state carry across segments and reset at the start
/// of each epoch; so does the pending E-gate window (the fitted readout
/// itself persists). Seconds cover the epoch loop only.
TrainResult train_run(const TrainConfig& cfg);
TrainResult train_run(const TrainConfig& cfg, const CharDataset& ds,
                      const EpochCallback& on_epoch = {});

struct EvalResult {
  double loss = 0.0;
  double accuracy = 0.0;
};

/// Loss and top-1 accuracy over every prediction in ds, state carried across
/// the whole text. Never modifies the model; the E-gate readout is frozen.
/// The text is mapped through the model's vocabulary.
EvalResult evaluate(const Model& model, const CharDataset& ds, std::size_t seg_len);

struct TargetEpochs {
  double target = 0.0;
  std::optional<std::size_t> lstm;
  std::optional<std::size_t> elstm;
  std::optional<double> ratio;  // lstm / elstm, when both reached
};

struct ModelSeries {
  ModelKind kind = ModelKind::kLstm;
  std::vector<EpochMetrics> metrics;
  double mean_epoch_seconds = 0.0;
};

struct ComparisonReport {
  ModelSeries lstm;
  ModelSeries elstm;
  std::optional<double> overhead_pct;  // (elstm - lstm) / lstm * 100
  std::vector<TargetEpochs> epochs_to_target;
};

/// First 1-based epoch whose mean loss is <= target.
std::optional<std::size_t> epochs_to_target(const std::vector<EpochMetrics>& series,
                                            double target);

double mean_epoch_seconds(const std::vector<EpochMetrics>& series);

/// Assembles a report from two finished series.
ComparisonReport build_report(const std::vector<EpochMetrics>& lstm,
                              const std::vector<EpochMetrics>& elstm,
                              const std::vector<double>& targets);

struct CompareOptions {
  /// Run the two models one after the other. Needed for clean timing: the
  /// concurrent mode shares cores and perturbs both wall clocks.
  bool serial = false;
  EpochCallback on_epoch;  // may be called from two threads unless serial
};

struct ComparisonRun {
  ComparisonReport report;
  TrainResult lstm;
  TrainResult elstm;
};

/// Trains both models and compares them. The configs must agree on dataset,
/// hidden size, segment length, learning rate, clip, epochs and seed.
/// Concurrency is capped by the ELSTM_LAB_THREADS environment variable
/// (1 forces serial).
ComparisonRun compare_run(const TrainConfig& cfg_lstm, const TrainConfig& cfg_elstm,
                          const std::vector<double>& targets,
                          const CompareOptions& options = {});

/// Same comparison on an already loaded corpus; the configs' dataset specs
/// are ignored.
ComparisonRun compare_run(const TrainConfig& cfg_lstm, const TrainConfig& cfg_elstm,
                          const CharDataset& ds, const std::vector<double>& targets,
                          const CompareOptions& options = {});

/// Autoregressive sampling from softmax(logits / temperature) using substream
/// "sample". Starts from a zero state fed the first vocabulary character.
std::u32string sample_text(const Model& model, std::size_t length, std::uint64_t seed,
                           double temperature);

}  // namespace elstm_lab
