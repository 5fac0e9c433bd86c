#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <optional>
#include <vector>

#include "jointgt/model.hpp"
#include "jointgt/objectives.hpp"
#include "jointgt/tensor.hpp"
#include "jointgt/vocab.hpp"

namespace jointgt {

enum class Task { kPretrain, kFinetune };

struct TrainConfig {
  double learning_rate = 3e-5;
  double warmup_ratio = 0.1;
  double max_grad_norm = 1.0;
  double adam_eps = 1e-8;
  double adam_beta1 = 0.9;
  double adam_beta2 = 0.999;
  std::size_t batch_size = 32;
  std::size_t epochs = 1;
  // When non-zero, training stops after this many optimizer steps and the
  // schedule is laid out over them instead of over the epochs.
  std::size_t max_steps = 0;
  std::uint64_t seed = 0;
  Task task = Task::kPretrain;
  ObjectiveConfig objective;

  void validate() const;
};

// Linear warmup to learning_rate over ceil(warmup_ratio * total) steps,
// then linear decay to 0 at total.
double lr_at(std::size_t step, std::size_t total_steps, const TrainConfig& config);

struct AdamState {
  std::vector<std::vector<double>> first_moment;
  std::vector<std::vector<double>> second_moment;
  std::size_t step = 0;
};

AdamState init_adam(const ParamStore& store);

// One bias-corrected Adam update; gradients are zeroed afterwards. Throws
// UsageError if any parameter has no gradient buffer.
void adam_step(ParamStore& store, AdamState& state, double lr, const TrainConfig& config);

// Rescales all gradients so the global L2 norm is at most max_norm; returns
// the norm before clipping.
double clip_grad_norm(ParamStore& store, double max_norm);
double grad_norm(const ParamStore& store);

struct StepRecord {
  std::size_t step = 0;  // 1-based
  double lr = 0.0;
  double l_text = 0.0;
  double l_graph = 0.0;
  double l_ot = 0.0;
  double total = 0.0;
};

struct TrainHooks {
  // Return false to stop training after this step.
  std::function<bool(const StepRecord&, const Model&)> on_step;
};

struct TrainOptions {
  // When set: <run_dir>/log.jsonl and <run_dir>/checkpoints/epoch-N/.
  std::optional<std::filesystem::path> run_dir;
  TrainHooks hooks;
};

struct TrainResult {
  std::vector<StepRecord> log;
  std::size_t steps = 0;
  // Smoothed loss rose between consecutive 100-step windows.
  bool regression_flag = false;
};

std::size_t planned_steps(std::size_t corpus_size, const TrainConfig& config);

// Loss of one example for the configured task.
LossBundle task_loss(const Model& model, const Example& ex, const Vocabulary& vocab, Rng& rng,
                     const TrainConfig& config);

TrainResult train(const std::vector<Example>& corpus, Model& model, const Vocabulary& vocab,
                  const TrainConfig& config, const TrainOptions& options = {});

// Mean fine-tuning loss over the corpus (no gradients).
double mean_finetune_loss(const std::vector<Example>& corpus, const Model& model);

// Windowed-mean check used for regression_flag.
bool has_loss_regression(const std::vector<StepRecord>& log, std::size_t window = 100);

nlohmann::json to_json(const StepRecord& record);

}  // namespace jointgt
