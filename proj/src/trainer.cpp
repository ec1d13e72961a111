#include "elstm_lab/trainer.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdlib>
#include <future>
#include <string>

#include "elstm_lab/rng.hpp"

namespace elstm_lab {
namespace {

std::size_t argmax(std::span<const double> v) {
  return static_cast<std::size_t>(std::max_element(v.begin(), v.end()) - v.begin());
}

std::vector<std::size_t> ids_in_vocab(const CharDataset& ds, const Vocab& vocab) {
  std::vector<std::size_t> ids;
  ids.reserve(ds.text.size());
  for (char32_t ch : ds.text) ids.push_back(vocab.index_of(ch));
  return ids;
}

// Worker count allowed by ELSTM_LAB_THREADS; unset or invalid means no cap.
std::size_t thread_cap() {
  const char* env = std::getenv("ELSTM_LAB_THREADS");
  if (env == nullptr) return 2;
  char* end = nullptr;
  const long v = std::strtol(env, &end, 10);
  if (end == env || v < 1) return 2;
  return static_cast<std::size_t>(v);
}

void require_shared(bool same, const char* field) {
  if (!same) {
    throw ShapeError(std::string("compare_run: configs differ in shared field '") +
                     field + "'");
  }
}

}  // namespace

std::string_view to_string(ModelKind kind) {
  return kind == ModelKind::kLstm ? "lstm" : "elstm";
}

ModelKind parse_model_kind(std::string_view name) {
  if (name == "lstm") return ModelKind::kLstm;
  if (name == "elstm") return ModelKind::kElstm;
  throw ShapeError("unknown model '" + std::string(name) + "' (expected lstm or elstm)");
}

Model Model::create(ModelKind kind, const Vocab& vocab, std::size_t hidden,
                    std::uint64_t seed, const EGateConfig& egate) {
  if (vocab.size() == 0) throw ShapeError("Model: empty vocabulary");
  Model m;
  m.kind = kind;
  m.seed = seed;
  m.vocab = vocab;
  m.params = init_params(vocab.size(), hidden, vocab.size(), seed);
  m.egate_config = egate;
  if (kind == ModelKind::kElstm) {
    m.egate = EGateState::create(hidden, vocab.size(), egate, seed);
  }
  return m;
}

CharDataset DatasetSpec::load() const {
  if (path) return load_corpus(*path);
  return gen_random_letters(generate_n, generate_seed);
}

void TrainConfig::validate() const {
  if (hidden < 1) throw ShapeError("TrainConfig: hidden must be >= 1");
  if (seg_len < 1) throw ShapeError("TrainConfig: seg_len must be >= 1");
  if (epochs < 1) throw ShapeError("TrainConfig: epochs must be >= 1");
  if (!(lr >= 0.0) || !std::isfinite(lr)) {
    throw ShapeError("TrainConfig: lr must be finite and >= 0");
  }
  if (!(clip > 0.0)) throw ShapeError("TrainConfig: clip must be > 0");
  if (model == ModelKind::kElstm) egate.validate();
}

TrainingError::TrainingError(std::size_t epoch, std::size_t segment,
                             const std::string& what)
    : NumericError("epoch " + std::to_string(epoch) + ", segment " +
                   std::to_string(segment) + ": " + what),
      epoch_(epoch),
      segment_(segment) {}

TrainResult train_run(const TrainConfig& cfg) { return train_run(cfg, cfg.data.load()); }

TrainResult train_run(const TrainConfig& cfg, const CharDataset& ds,
                      const EpochCallback& on_epoch) {
  cfg.validate();
  TrainResult result;
  result.model = Model::create(cfg.model, ds.vocab, cfg.hidden, cfg.seed, cfg.egate);
  Model& model = result.model;
  const std::vector<Segment> segs = segments(ds, cfg.seg_len);

  for (std::size_t epoch = 1; epoch <= cfg.epochs; ++epoch) {
    const auto start = std::chrono::steady_clock::now();
    LstmState state = LstmState::zeros(cfg.hidden);
    if (model.egate) model.egate->reset_window();
    double loss_sum = 0.0;
    std::size_t correct = 0;
    std::size_t steps = 0;

    for (std::size_t s = 0; s < segs.size(); ++s) {
      const Segment& seg = segs[s];
      try {
        ForwardResult fw =
            model.egate ? elstm_forward_sequence(model.params, state, *model.egate,
                                                 cfg.egate, seg.inputs, seg.targets)
                        : forward_sequence(model.params, state, seg.inputs, seg.targets);
        if (!std::isfinite(fw.loss)) throw NumericError("non-finite loss");
        const LstmGrads grads =
            model.egate ? elstm_backward(model.params, fw.caches, seg.targets)
                        : backward_sequence(model.params, fw.caches, seg.targets);
        model.params = sgd_update(model.params, grads, cfg.lr, cfg.clip);

        loss_sum += fw.loss * static_cast<double>(seg.targets.size());
        for (std::size_t t = 0; t < fw.caches.size(); ++t) {
          if (argmax(fw.caches[t].probs) == seg.targets[t]) ++correct;
        }
        steps += seg.targets.size();
        state = std::move(fw.end);
      } catch (const NumericError& e) {
        throw TrainingError(epoch, s, e.what());
      }
    }

    const double seconds =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    result.metrics.push_back({epoch, loss_sum / static_cast<double>(steps),
                              static_cast<double>(correct) / static_cast<double>(steps),
                              std::max(seconds, 1e-9)});
    if (on_epoch) on_epoch(cfg.model, result.metrics.back());
  }
  return result;
}

EvalResult evaluate(const Model& model, const CharDataset& ds, std::size_t seg_len) {
  if (seg_len < 1) throw ShapeError("evaluate: seg_len must be >= 1");
  const std::vector<std::size_t> ids = ids_in_vocab(ds, model.vocab);
  std::optional<EGateState> gate = model.egate;
  LstmState state = LstmState::zeros(model.params.hidden);
  double loss_sum = 0.0;
  std::size_t correct = 0;
  // State carries across the whole text, so seg_len only bounds the chunking.
  for (std::size_t t = 0; t + 1 < ids.size(); ++t) {
    StepCache cache;
    if (gate) {
      ElstmStep step = elstm_step(model.params, state, *gate, model.egate_config, ids[t],
                                  std::nullopt);
      state = std::move(step.state);
      cache = std::move(step.cache);
    } else {
      auto [next, c] = lstm_step(model.params, state, ids[t]);
      state = std::move(next);
      cache = std::move(c);
    }
    const std::size_t y = ids[t + 1];
    loss_sum -= std::log(std::max(cache.probs[y], kProbabilityFloor));
    if (argmax(cache.probs) == y) ++correct;
  }
  const double n = static_cast<double>(ids.size() - 1);
  return {loss_sum / n, static_cast<double>(correct) / n};
}

std::optional<std::size_t> epochs_to_target(const std::vector<EpochMetrics>& series,
                                            double target) {
  for (const EpochMetrics& m : series) {
    if (m.mean_loss <= target) return m.epoch;
  }
  return std::nullopt;
}

double mean_epoch_seconds(const std::vector<EpochMetrics>& series) {
  if (series.empty()) return 0.0;
  double total = 0.0;
  for (const EpochMetrics& m : series) total += m.seconds;
  return total / static_cast<double>(series.size());
}

ComparisonReport build_report(const std::vector<EpochMetrics>& lstm,
                              const std::vector<EpochMetrics>& elstm,
                              const std::vector<double>& targets) {
  ComparisonReport r;
  r.lstm = {ModelKind::kLstm, lstm, mean_epoch_seconds(lstm)};
  r.elstm = {ModelKind::kElstm, elstm, mean_epoch_seconds(elstm)};
  if (!lstm.empty() && !elstm.empty() && r.lstm.mean_epoch_seconds > 0.0) {
    r.overhead_pct = (r.elstm.mean_epoch_seconds - r.lstm.mean_epoch_seconds) /
                     r.lstm.mean_epoch_seconds * 100.0;
  }
  for (double target : targets) {
    TargetEpochs entry{target, epochs_to_target(lstm, target),
                       epochs_to_target(elstm, target), std::nullopt};
    if (entry.lstm && entry.elstm) {
      entry.ratio = static_cast<double>(*entry.lstm) / static_cast<double>(*entry.elstm);
    }
    r.epochs_to_target.push_back(entry);
  }
  return r;
}

ComparisonRun compare_run(const TrainConfig& cfg_lstm, const TrainConfig& cfg_elstm,
                          const std::vector<double>& targets,
                          const CompareOptions& options) {
  if (cfg_lstm.model != ModelKind::kLstm || cfg_elstm.model != ModelKind::kElstm) {
    throw ShapeError("compare_run: expected an lstm config and an elstm config");
  }
  require_shared(cfg_lstm.data == cfg_elstm.data, "data");
  require_shared(cfg_lstm.hidden == cfg_elstm.hidden, "hidden");
  require_shared(cfg_lstm.seg_len == cfg_elstm.seg_len, "seg_len");
  require_shared(cfg_lstm.lr == cfg_elstm.lr, "lr");
  require_shared(cfg_lstm.clip == cfg_elstm.clip, "clip");
  require_shared(cfg_lstm.epochs == cfg_elstm.epochs, "epochs");
  require_shared(cfg_lstm.seed == cfg_elstm.seed, "seed");
  cfg_lstm.validate();
  cfg_elstm.validate();
  return compare_run(cfg_lstm, cfg_elstm, cfg_lstm.data.load(), targets, options);
}

ComparisonRun compare_run(const TrainConfig& cfg_lstm, const TrainConfig& cfg_elstm,
                          const CharDataset& ds, const std::vector<double>& targets,
                          const CompareOptions& options) {
  if (cfg_lstm.model != ModelKind::kLstm || cfg_elstm.model != ModelKind::kElstm) {
    throw ShapeError("compare_run: expected an lstm config and an elstm config");
  }
  require_shared(cfg_lstm.hidden == cfg_elstm.hidden, "hidden");
  require_shared(cfg_lstm.seg_len == cfg_elstm.seg_len, "seg_len");
  require_shared(cfg_lstm.lr == cfg_elstm.lr, "lr");
  require_shared(cfg_lstm.clip == cfg_elstm.clip, "clip");
  require_shared(cfg_lstm.epochs == cfg_elstm.epochs, "epochs");
  require_shared(cfg_lstm.seed == cfg_elstm.seed, "seed");
  ComparisonRun run;
  if (options.serial || thread_cap() < 2) {
    run.lstm = train_run(cfg_lstm, ds, options.on_epoch);
    run.elstm = train_run(cfg_elstm, ds, options.on_epoch);
  } else {
    auto pending = std::async(std::launch::async, [&] {
      return train_run(cfg_elstm, ds, options.on_epoch);
    });
    run.lstm = train_run(cfg_lstm, ds, options.on_epoch);
    run.elstm = pending.get();
  }
  run.report = build_report(run.lstm.metrics, run.elstm.metrics, targets);
  return run;
}

std::u32string sample_text(const Model& model, std::size_t length, std::uint64_t seed,
                           double temperature) {
  if (length < 1) throw ShapeError("sample_text: length must be >= 1");
  if (!(temperature > 0.0)) throw ShapeError("sample_text: temperature must be > 0");
  Substream rng(seed, "sample");
  std::optional<EGateState> gate = model.egate;
  LstmState state = LstmState::zeros(model.params.hidden);
  std::size_t x = 0;
  std::u32string out;
  Vector scaled(model.params.vocab);
  Vector probs(model.params.vocab);
  for (std::size_t n = 0; n < length; ++n) {
    StepCache cache;
    if (gate) {
      ElstmStep step =
          elstm_step(model.params, state, *gate, model.egate_config, x, std::nullopt);
      state = std::move(step.state);
      cache = std::move(step.cache);
    } else {
      auto [next, c] = lstm_step(model.params, state, x);
      state = std::move(next);
      cache = std::move(c);
    }
    for (std::size_t k = 0; k < scaled.size(); ++k) {
      scaled[k] = cache.logits[k] / temperature;
    }
    softmax(scaled, probs);
    const double u = rng.uniform();
    double cumulative = 0.0;
    std::size_t pick = argmax(probs);
    for (std::size_t k = 0; k < probs.size(); ++k) {
      cumulative += probs[k];
      if (u < cumulative) {
        pick = k;
        break;
      }
    }
    out.push_back(model.vocab.at(pick));
    x = pick;
  }
  return out;
}

}  // namespace elstm_lab
