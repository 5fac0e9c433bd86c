#include "jointgt/config.hpp"

#include <fstream>
#include <functional>
#include <map>
#include <string>

#include "jointgt/errors.hpp"

namespace jointgt {

namespace {

using json = nlohmann::json;

std::size_t as_count(const json& v, const std::string& key) {
  if (!v.is_number_integer() || v.get<long long>() < 0) {
    throw ConfigError("'" + key + "' must be a non-negative integer");
  }
  return v.get<std::size_t>();
}

double as_real(const json& v, const std::string& key) {
  if (!v.is_number()) throw ConfigError("'" + key + "' must be a number");
  return v.get<double>();
}

using Setter = std::function<void(RunConfig&, const json&, const std::string&)>;

const std::map<std::string, Setter>& setters() {
  static const std::map<std::string, Setter> table = {
      {"d_model",
       [](RunConfig& c, const json& v, const std::string& k) {
         c.model.encoder.d_model = c.model.decoder.d_model = as_count(v, k);
       }},
      {"num_heads",
       [](RunConfig& c, const json& v, const std::string& k) {
         c.model.encoder.num_heads = c.model.decoder.num_heads = as_count(v, k);
       }},
      {"d_ff",
       [](RunConfig& c, const json& v, const std::string& k) {
         c.model.encoder.d_ff = c.model.decoder.d_ff = as_count(v, k);
       }},
      {"encoder_layers",
       [](RunConfig& c, const json& v, const std::string& k) { c.model.encoder.num_layers = as_count(v, k); }},
      {"decoder_layers",
       [](RunConfig& c, const json& v, const std::string& k) { c.model.decoder.num_layers = as_count(v, k); }},
      {"max_input_len",
       [](RunConfig& c, const json& v, const std::string& k) { c.model.encoder.max_input_len = as_count(v, k); }},
      {"max_output_len",
       [](RunConfig& c, const json& v, const std::string& k) {
         c.model.decoder.max_output_len = as_count(v, k);
       }},
      {"variant",
       [](RunConfig& c, const json& v, const std::string& k) {
         if (!v.is_string()) throw ConfigError("'" + k + "' must be a string");
         c.model.encoder.variant = parse_variant(v.get<std::string>());
       }},
      {"learning_rate",
       [](RunConfig& c, const json& v, const std::string& k) { c.train.learning_rate = as_real(v, k); }},
      {"warmup_ratio",
       [](RunConfig& c, const json& v, const std::string& k) { c.train.warmup_ratio = as_real(v, k); }},
      {"max_grad_norm",
       [](RunConfig& c, const json& v, const std::string& k) { c.train.max_grad_norm = as_real(v, k); }},
      {"adam_eps", [](RunConfig& c, const json& v, const std::string& k) { c.train.adam_eps = as_real(v, k); }},
      {"adam_beta1",
       [](RunConfig& c, const json& v, const std::string& k) { c.train.adam_beta1 = as_real(v, k); }},
      {"adam_beta2",
       [](RunConfig& c, const json& v, const std::string& k) { c.train.adam_beta2 = as_real(v, k); }},
      {"batch_size",
       [](RunConfig& c, const json& v, const std::string& k) { c.train.batch_size = as_count(v, k); }},
      {"epochs", [](RunConfig& c, const json& v, const std::string& k) { c.train.epochs = as_count(v, k); }},
      {"max_steps",
       [](RunConfig& c, const json& v, const std::string& k) { c.train.max_steps = as_count(v, k); }},
      {"seed", [](RunConfig& c, const json& v, const std::string& k) { c.train.seed = as_count(v, k); }},
      {"w_text",
       [](RunConfig& c, const json& v, const std::string& k) { c.train.objective.weights.text = as_real(v, k); }},
      {"w_graph",
       [](RunConfig& c, const json& v, const std::string& k) { c.train.objective.weights.graph = as_real(v, k); }},
      {"w_ot",
       [](RunConfig& c, const json& v, const std::string& k) { c.train.objective.weights.ot = as_real(v, k); }},
      {"ot_beta",
       [](RunConfig& c, const json& v, const std::string& k) { c.train.objective.ot.beta = as_real(v, k); }},
      {"ot_inner_k",
       [](RunConfig& c, const json& v, const std::string& k) { c.train.objective.ot.inner_k = as_count(v, k); }},
      {"ot_outer_n",
       [](RunConfig& c, const json& v, const std::string& k) { c.train.objective.ot.outer_n = as_count(v, k); }},
      {"mask_text_entity",
       [](RunConfig& c, const json& v, const std::string& k) {
         c.train.objective.masking.text_entity = as_real(v, k);
       }},
      {"mask_text_other",
       [](RunConfig& c, const json& v, const std::string& k) {
         c.train.objective.masking.text_other = as_real(v, k);
       }},
      {"mask_graph_entity",
       [](RunConfig& c, const json& v, const std::string& k) {
         c.train.objective.masking.graph_entity = as_real(v, k);
       }},
      {"mask_graph_relation",
       [](RunConfig& c, const json& v, const std::string& k) {
         c.train.objective.masking.graph_relation = as_real(v, k);
       }},
      {"beam_size", [](RunConfig& c, const json& v, const std::string& k) { c.beam.beam_size = as_count(v, k); }},
      {"length_penalty",
       [](RunConfig& c, const json& v, const std::string& k) { c.beam.length_penalty = as_real(v, k); }},
      {"min_freq", [](RunConfig& c, const json& v, const std::string& k) { c.min_freq = as_count(v, k); }},
      {"vocab_size",
       [](RunConfig& c, const json& v, const std::string& k) { c.model.vocab_size = as_count(v, k); }},
      {"task",
       [](RunConfig& c, const json& v, const std::string& k) {
         const std::string name = v.is_string() ? v.get<std::string>() : "";
         if (name == "pretrain") {
           c.train.task = Task::kPretrain;
         } else if (name == "finetune") {
           c.train.task = Task::kFinetune;
         } else {
           throw ConfigError("'" + k + "' must be \"pretrain\" or \"finetune\"");
         }
       }},
  };
  return table;
}

void check_rate(double p, const char* name) {
  if (p < 0.0 || p > 1.0) throw ConfigError(std::string(name) + " must lie in [0, 1]");
}

}  // namespace

void apply_config_json(RunConfig& config, const json& j) {
  if (!j.is_object()) throw ConfigError("config must be a JSON object");
  const auto& table = setters();
  for (const auto& [key, value] : j.items()) {
    auto it = table.find(key);
    if (it == table.end()) throw ConfigError("unknown config key '" + key + "'");
    it->second(config, value, key);
  }
  const auto& m = config.train.objective.masking;
  check_rate(m.text_entity, "mask_text_entity");
  check_rate(m.text_other, "mask_text_other");
  check_rate(m.graph_entity, "mask_graph_entity");
  check_rate(m.graph_relation, "mask_graph_relation");
  if (config.beam.beam_size == 0) throw ConfigError("beam_size must be positive");
  if (config.min_freq == 0) throw ConfigError("min_freq must be positive");
}

RunConfig load_run_config(const std::filesystem::path& path, RunConfig base) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config file " + path.string());
  json j;
  try {
    j = json::parse(in);
  } catch (const json::parse_error& e) {
    throw ConfigError("config file " + path.string() + " is not valid JSON: " + e.what());
  }
  apply_config_json(base, j);
  return base;
}

json to_json(const RunConfig& c) {
  const auto& o = c.train.objective;
  return {{"vocab_size", c.model.vocab_size},
          {"d_model", c.model.encoder.d_model},
          {"num_heads", c.model.encoder.num_heads},
          {"d_ff", c.model.encoder.d_ff},
          {"encoder_layers", c.model.encoder.num_layers},
          {"decoder_layers", c.model.decoder.num_layers},
          {"max_input_len", c.model.encoder.max_input_len},
          {"max_output_len", c.model.decoder.max_output_len},
          {"variant", std::string(variant_name(c.model.encoder.variant))},
          {"learning_rate", c.train.learning_rate},
          {"warmup_ratio", c.train.warmup_ratio},
          {"max_grad_norm", c.train.max_grad_norm},
          {"adam_eps", c.train.adam_eps},
          {"adam_beta1", c.train.adam_beta1},
          {"adam_beta2", c.train.adam_beta2},
          {"batch_size", c.train.batch_size},
          {"epochs", c.train.epochs},
          {"max_steps", c.train.max_steps},
          {"seed", c.train.seed},
          {"task", c.train.task == Task::kPretrain ? "pretrain" : "finetune"},
          {"w_text", o.weights.text},
          {"w_graph", o.weights.graph},
          {"w_ot", o.weights.ot},
          {"ot_beta", o.ot.beta},
          {"ot_inner_k", o.ot.inner_k},
          {"ot_outer_n", o.ot.outer_n},
          {"mask_text_entity", o.masking.text_entity},
          {"mask_text_other", o.masking.text_other},
          {"mask_graph_entity", o.masking.graph_entity},
          {"mask_graph_relation", o.masking.graph_relation},
          {"beam_size", c.beam.beam_size},
          {"length_penalty", c.beam.length_penalty},
          {"min_freq", c.min_freq}};
}

void check_lengths(const RunConfig& config, const std::vector<Example>& corpus) {
  for (std::size_t k = 0; k < corpus.size(); ++k) {
    const auto& ex = corpus[k];
    const std::size_t input = ex.graph_ids.size() + 1 + ex.text_ids.size();
    if (input > config.model.encoder.max_input_len) {
      throw ConfigError("example " + std::to_string(k + 1) + " needs " + std::to_string(input) +
                        " encoder positions but max_input_len is " +
                        std::to_string(config.model.encoder.max_input_len));
    }
    if (ex.text_ids.size() + 1 > config.model.decoder.max_output_len) {
      throw ConfigError("example " + std::to_string(k + 1) + " has " + std::to_string(ex.text_ids.size()) +
                        " text tokens but max_output_len is " +
                        std::to_string(config.model.decoder.max_output_len));
    }
  }
}

}  // namespace jointgt
