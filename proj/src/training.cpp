#include "jointgt/training.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numeric>

#include "jointgt/checkpoint.hpp"
#include "jointgt/errors.hpp"

namespace jointgt {

void TrainConfig::validate() const {
  if (!(learning_rate > 0.0)) throw ConfigError("learning_rate must be positive");
  if (warmup_ratio < 0.0 || warmup_ratio > 1.0) throw ConfigError("warmup_ratio must lie in [0, 1]");
  if (!(max_grad_norm > 0.0)) throw ConfigError("max_grad_norm must be positive");
  if (!(adam_eps > 0.0)) throw ConfigError("adam_eps must be positive");
  if (adam_beta1 < 0.0 || adam_beta1 >= 1.0 || adam_beta2 < 0.0 || adam_beta2 >= 1.0) {
    throw ConfigError("adam betas must lie in [0, 1)");
  }
  if (batch_size == 0) throw ConfigError("batch_size must be positive");
  if (epochs == 0 && max_steps == 0) throw ConfigError("need epochs or max_steps");
}

double lr_at(std::size_t step, std::size_t total_steps, const TrainConfig& config) {
  if (step > total_steps) throw UsageError("lr_at: step beyond total_steps");
  const auto warmup = static_cast<std::size_t>(std::ceil(config.warmup_ratio * static_cast<double>(total_steps)));
  if (step < warmup) {
    return config.learning_rate * static_cast<double>(step) / static_cast<double>(warmup);
  }
  if (total_steps == warmup) return config.learning_rate;
  return config.learning_rate * static_cast<double>(total_steps - step) /
         static_cast<double>(total_steps - warmup);
}

AdamState init_adam(const ParamStore& store) {
  AdamState state;
  for (const auto& [name, t] : store) {
    state.first_moment.emplace_back(t.numel(), 0.0);
    state.second_moment.emplace_back(t.numel(), 0.0);
  }
  return state;
}

void adam_step(ParamStore& store, AdamState& state, double lr, const TrainConfig& config) {
  if (state.first_moment.size() != store.size()) throw UsageError("Adam state does not match parameters");
  for (const auto& [name, t] : store) {
    if (!t.has_grad()) throw UsageError("parameter '" + name + "' has no gradient");
  }
  ++state.step;
  const double b1 = config.adam_beta1, b2 = config.adam_beta2;
  const double c1 = 1.0 - std::pow(b1, static_cast<double>(state.step));
  const double c2 = 1.0 - std::pow(b2, static_cast<double>(state.step));
  std::size_t k = 0;
  for (auto& [name, t] : store) {
    auto values = t.mutable_values();
    auto grad = t.mutable_grad();
    auto& m = state.first_moment[k];
    auto& v = state.second_moment[k];
    for (std::size_t i = 0; i < values.size(); ++i) {
      m[i] = b1 * m[i] + (1.0 - b1) * grad[i];
      v[i] = b2 * v[i] + (1.0 - b2) * grad[i] * grad[i];
      const double m_hat = m[i] / c1;
      const double v_hat = v[i] / c2;
      values[i] -= lr * m_hat / (std::sqrt(v_hat) + config.adam_eps);
    }
    std::fill(grad.begin(), grad.end(), 0.0);
    ++k;
  }
}

double grad_norm(const ParamStore& store) {
  double total = 0.0;
  for (const auto& [name, t] : store) {
    for (double g : t.grad()) total += g * g;
  }
  return std::sqrt(total);
}

double clip_grad_norm(ParamStore& store, double max_norm) {
  const double norm = grad_norm(store);
  const double coef = max_norm / (norm + 1e-6);
  if (coef < 1.0) {
    for (auto& [name, t] : store) {
      for (double& g : t.mutable_grad()) g *= coef;
    }
  }
  return norm;
}

std::size_t planned_steps(std::size_t corpus_size, const TrainConfig& config) {
  if (config.max_steps > 0) return config.max_steps;
  const std::size_t per_epoch = (corpus_size + config.batch_size - 1) / config.batch_size;
  return per_epoch * config.epochs;
}

LossBundle task_loss(const Model& model, const Example& ex, const Vocabulary& vocab, Rng& rng,
                     const TrainConfig& config) {
  if (config.task == Task::kPretrain) return combined_pretrain_loss(model, ex, vocab, rng, config.objective);
  LossBundle bundle;
  bundle.total = loss_finetune(model, ex);
  return bundle;
}

nlohmann::json to_json(const StepRecord& r) {
  return {{"step", r.step}, {"lr", r.lr},       {"l_text", r.l_text},
          {"l_graph", r.l_graph}, {"l_ot", r.l_ot}, {"total", r.total}};
}

bool has_loss_regression(const std::vector<StepRecord>& log, std::size_t window) {
  if (window == 0) return false;
  double previous = 0.0;
  bool have_previous = false;
  for (std::size_t start = 0; start + window <= log.size(); start += window) {
    double mean = 0.0;
    for (std::size_t i = start; i < start + window; ++i) mean += log[i].total;
    mean /= static_cast<double>(window);
    if (have_previous && mean > previous) return true;
    previous = mean;
    have_previous = true;
  }
  return false;
}

double mean_finetune_loss(const std::vector<Example>& corpus, const Model& model) {
  NoGradGuard no_grad;
  double total = 0.0;
  for (const auto& ex : corpus) total += loss_finetune(model, ex).item();
  return corpus.empty() ? 0.0 : total / static_cast<double>(corpus.size());
}

TrainResult train(const std::vector<Example>& corpus, Model& model, const Vocabulary& vocab,
                  const TrainConfig& config, const TrainOptions& options) {
  config.validate();
  if (corpus.empty()) throw EmptyCorpus();

  std::ofstream log_file;
  if (options.run_dir) {
    std::filesystem::create_directories(*options.run_dir);
    const auto log_path = *options.run_dir / "log.jsonl";
    log_file.open(log_path);
    if (!log_file) throw Error("cannot write training log " + log_path.string());
  }

  const std::size_t total_steps = planned_steps(corpus.size(), config);
  Rng rng(config.seed);
  AdamState adam = init_adam(model.params);
  model.params.zero_grads();

  TrainResult result;
  std::vector<std::size_t> order(corpus.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  bool stop = false;
  for (std::size_t epoch = 1; !stop; ++epoch) {
    std::shuffle(order.begin(), order.end(), rng);
    for (std::size_t start = 0; start < order.size() && !stop; start += config.batch_size) {
      const std::size_t end = std::min(order.size(), start + config.batch_size);
      const double inv_batch = 1.0 / static_cast<double>(end - start);
      StepRecord record;
      record.step = result.steps + 1;
      record.lr = lr_at(result.steps, total_steps, config);

      std::vector<Tensor> totals;
      for (std::size_t k = start; k < end; ++k) {
        LossBundle bundle = task_loss(model, corpus[order[k]], vocab, rng, config);
        record.l_text += bundle.l_text * inv_batch;
        record.l_graph += bundle.l_graph * inv_batch;
        record.l_ot += bundle.l_ot * inv_batch;
        totals.push_back(std::move(bundle.total));
      }
      Tensor batch_loss = totals[0];
      for (std::size_t k = 1; k < totals.size(); ++k) batch_loss = add(batch_loss, totals[k]);
      batch_loss = scale(batch_loss, inv_batch);
      record.total = batch_loss.item();
      batch_loss.backward();

      clip_grad_norm(model.params, config.max_grad_norm);
      adam_step(model.params, adam, record.lr, config);
      ++result.steps;
      result.log.push_back(record);
      if (log_file) log_file << to_json(record).dump() << '\n';

      if (options.hooks.on_step && !options.hooks.on_step(record, model)) stop = true;
      if (result.steps >= total_steps) stop = true;
    }
    if (options.run_dir) {
      nlohmann::json extra = {{"epoch", epoch}, {"steps", result.steps}};
      save_checkpoint(*options.run_dir / "checkpoints" / ("epoch-" + std::to_string(epoch)), model, vocab,
                      extra);
    }
    if (config.max_steps == 0 && epoch >= config.epochs) stop = true;
  }
  result.regression_flag = has_loss_regression(result.log);
  return result;
}

}  // namespace jointgt
