// Training loop: batching by speaker count, cropping, AdamW updates,
// gradient clipping, plateau-driven learning rate.
#pragma once

#include <ostream>

#include "septda/losses.hpp"
#include "septda/model.hpp"

namespace septda {

struct TrainItem {
  std::vector<double> mixture;
  std::vector<std::vector<double>> references;
};

using Dataset = std::vector<TrainItem>;

struct NumericError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct HistoryRow {
  int epoch = 0;
  int step = 0;
  double train_loss = 0;
  double val_loss = 0;
  double lr = 0;
};

template <class S>
class Trainer {
 public:
  Trainer(SepTdaModel<S>& model, TrainingConfig cfg)
      : model_(model),
        cfg_(cfg),
        opt_(model.parameters(), cfg.lr, 0.9, 0.999, 1e-8, cfg.weight_decay),
        sched_(cfg.lr, cfg.patience, cfg.lr_factor),
        rng_(cfg.seed) {
    cfg_.validate();
    segment_ = static_cast<int>(
        std::lround(cfg_.segment_seconds * model_.config().sample_rate));
    if (segment_ < model_.config().kernel)
      throw ConfigError("trainer: segment shorter than the encoder kernel");
  }

  // Loss graph for one item. Training mode crops at a random offset and uses
  // per-scale estimates; otherwise the crop starts at zero.
  Tensor<S> item_loss(const TrainItem& item, bool training) {
    if (item.references.empty()) throw DataError("trainer: item has no references");
    const int t = static_cast<int>(item.mixture.size());
    for (const auto& r : item.references)
      if (static_cast<int>(r.size()) != t)
        throw DataError("trainer: reference length differs from mixture");
    int start = 0;
    if (training && t > segment_)
      start = static_cast<int>(rng_.integer(0, t - segment_));
    auto mix = crop(item.mixture, start);
    const int c = static_cast<int>(item.references.size());
    auto result = model_.forward(mix, model_.config().use_tda ? c : 0, training);
    std::vector<Tensor<S>> refs;
    refs.reserve(item.references.size());
    for (const auto& r : item.references) refs.push_back(crop(r, start));
    const auto& scales = training ? result.per_scale
                                  : std::vector<std::vector<Tensor<S>>>{result.estimates};
    auto loss = recon_loss(scales, refs);
    if (model_.config().use_tda)
      loss = total_loss(loss, attractor_existence_loss(result.existence_logits));
    return loss;
  }

  // One optimizer update over a batch of dataset indices. Returns the batch
  // loss. All items in a batch must share a speaker count.
  double step(const Dataset& data, const std::vector<std::size_t>& batch) {
    if (batch.empty()) throw std::invalid_argument("trainer: empty batch");
    opt_.zero_grad();
    double total = 0;
    const S inv = static_cast<S>(1.0 / static_cast<double>(batch.size()));
    for (std::size_t idx : batch) {
      auto loss = mul_scalar(item_loss(data.at(idx), true), inv);
      loss.backward();
      total += static_cast<double>(loss.value());
    }
    ++global_step_;
    if (!std::isfinite(total))
      throw NumericError("trainer: non-finite loss at step " + std::to_string(global_step_));
    auto params = model_.parameters();
    clip_global_norm(params, cfg_.grad_clip);
    opt_.step();
    return total;
  }

  // Mean loss over a dataset with deterministic crops and no updates.
  double evaluate(const Dataset& data) {
    if (data.empty()) throw std::invalid_argument("trainer: empty validation set");
    double total = 0;
    for (const auto& item : data) total += static_cast<double>(item_loss(item, false).value());
    return total / static_cast<double>(data.size());
  }

  void end_epoch(double validation_loss) {
    sched_.step(validation_loss);
    opt_.set_lr(sched_.lr());
  }

  // Shuffled batches, grouped so every batch holds a single speaker count.
  std::vector<std::vector<std::size_t>> make_batches(const Dataset& data) {
    std::map<int, std::vector<std::size_t>> by_count;
    for (std::size_t i = 0; i < data.size(); ++i)
      by_count[static_cast<int>(data[i].references.size())].push_back(i);
    std::vector<std::vector<std::size_t>> batches;
    for (auto& [c, indices] : by_count) {
      rng_.shuffle(indices);
      for (std::size_t at = 0; at < indices.size(); at += cfg_.batch_size) {
        std::size_t end = std::min(indices.size(), at + cfg_.batch_size);
        batches.emplace_back(indices.begin() + static_cast<std::ptrdiff_t>(at),
                             indices.begin() + static_cast<std::ptrdiff_t>(end));
      }
    }
    rng_.shuffle(batches);
    return batches;
  }

  int global_step() const { return global_step_; }
  double lr() const { return opt_.lr(); }
  AdamW<S>& optimizer() { return opt_; }
  int segment_samples() const { return segment_; }

 private:
  Tensor<S> crop(const std::vector<double>& signal, int start) const {
    std::vector<S> out(static_cast<std::size_t>(segment_), S(0));
    const int t = static_cast<int>(signal.size());
    const int n = std::min(segment_, t - start);
    for (int i = 0; i < n; ++i)
      out[static_cast<std::size_t>(i)] = static_cast<S>(signal[static_cast<std::size_t>(start + i)]);
    return Tensor<S>({segment_}, std::move(out));
  }

  SepTdaModel<S>& model_;
  TrainingConfig cfg_;
  AdamW<S> opt_;
  PlateauScheduler sched_;
  Rng rng_;
  int segment_ = 0;
  int global_step_ = 0;
};

// Full loop. An empty validation set falls back to the training set. History
// rows are appended per step and, when `log` is given, streamed as CSV.
template <class S>
std::vector<HistoryRow> train(SepTdaModel<S>& model, const Dataset& train_set,
                              const Dataset& val_set, const TrainingConfig& cfg,
                              std::ostream* log = nullptr) {
  if (train_set.empty()) throw DataError("train: empty dataset");
  Trainer<S> trainer(model, cfg);
  const Dataset& val = val_set.empty() ? train_set : val_set;
  std::vector<HistoryRow> history;
  double last_val = std::numeric_limits<double>::quiet_NaN();
  if (log) *log << "epoch,step,train_loss,val_loss,lr\n";
  for (int epoch = 1; epoch <= cfg.max_epochs; ++epoch) {
    for (const auto& batch : trainer.make_batches(train_set)) {
      double loss = trainer.step(train_set, batch);
      HistoryRow row{epoch, trainer.global_step(), loss, last_val, trainer.lr()};
      if (log)
        *log << row.epoch << ',' << row.step << ',' << row.train_loss << ',' << row.val_loss
             << ',' << row.lr << '\n';
      history.push_back(row);
      if (cfg.max_steps > 0 && trainer.global_step() >= cfg.max_steps) return history;
    }
    last_val = trainer.evaluate(val);
    trainer.end_epoch(last_val);
  }
  return history;
}

}  // namespace septda
