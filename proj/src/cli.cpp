#include "jointgt/cli.hpp"

#include <CLI11.hpp>

#include <fstream>
#include <iomanip>
#include <optional>
#include <ostream>
#include <sstream>
#include <string>

#include "jointgt/checkpoint.hpp"
#include "jointgt/config.hpp"
#include "jointgt/decoder.hpp"
#include "jointgt/diagnostics.hpp"
#include "jointgt/encoder.hpp"
#include "jointgt/errors.hpp"
#include "jointgt/graph.hpp"
#include "jointgt/metrics.hpp"
#include "jointgt/training.hpp"

namespace jointgt::cli {

namespace {

namespace fs = std::filesystem;

constexpr int kOk = 0;
constexpr int kUserError = 1;
constexpr int kInternalError = 2;

struct TrainArgs {
  std::string config;
  std::string corpus;
  std::string out;
  std::string init;
  std::string weights;
  std::optional<std::uint64_t> seed;
  std::optional<std::size_t> max_steps;
};

struct GenerateArgs {
  std::string ckpt;
  std::string input;
  std::string out;
  std::size_t beam = 5;
  double length_penalty = 1.0;
};

LossWeights parse_weights(const std::string& text) {
  std::vector<double> values;
  std::stringstream in(text);
  std::string field;
  while (std::getline(in, field, ',')) {
    try {
      std::size_t used = 0;
      values.push_back(std::stod(field, &used));
      if (used != field.size()) throw std::invalid_argument(field);
    } catch (const std::exception&) {
      throw ConfigError("--weights expects three numbers like 1,1,1, got '" + text + "'");
    }
  }
  if (values.size() != 3) throw ConfigError("--weights expects three numbers like 1,1,1, got '" + text + "'");
  for (double w : values) {
    if (w < 0.0) throw ConfigError("--weights must be non-negative");
  }
  return {values[0], values[1], values[2]};
}

void write_text(const fs::path& path, const std::string& text) {
  std::ofstream file(path, std::ios::binary);
  if (!file) throw Error("cannot write " + path.string());
  file << text;
}

int cmd_train(const TrainArgs& args, Task task, std::ostream& out) {
  RunConfig config;
  std::optional<Checkpoint> init;
  if (task == Task::kFinetune) {
    init = load_checkpoint(args.init);
    config.model = init->model.config;
  }
  if (!args.config.empty()) config = load_run_config(args.config, config);
  if (args.seed) config.train.seed = *args.seed;
  if (args.max_steps) config.train.max_steps = *args.max_steps;
  if (!args.weights.empty()) config.train.objective.weights = parse_weights(args.weights);
  config.train.task = task;

  const auto corpus = load_corpus(args.corpus);
  if (corpus.empty()) throw EmptyCorpus();
  Vocabulary vocab = init ? init->vocab : build_vocab(corpus, config.min_freq);
  config.model.vocab_size = vocab.size();
  config.model.validate();
  config.train.validate();
  const auto examples = prepare_examples(corpus, vocab);
  check_lengths(config, examples);

  Model model = init_model(config.model, config.train.seed);
  if (init) transfer_parameters(init->model, model);

  const fs::path run_dir(args.out);
  fs::create_directories(run_dir);
  write_text(run_dir / "config.resolved.json", to_json(config).dump(2) + "\n");

  TrainOptions options;
  options.run_dir = run_dir;
  const TrainResult result = train(examples, model, vocab, config.train, options);
  out << (task == Task::kPretrain ? "pretrain" : "finetune") << ": " << result.steps << " steps, final loss "
      << result.log.back().total << ", run directory " << run_dir.string() << "\n";
  if (result.regression_flag) out << "warning: windowed mean loss increased during training\n";
  return kOk;
}

std::string join(const std::vector<std::string>& tokens) {
  std::string line;
  for (const auto& t : tokens) {
    if (!line.empty()) line.push_back(' ');
    line += t;
  }
  return line;
}

int cmd_generate(const GenerateArgs& args, std::ostream& out) {
  if (args.beam == 0) throw ConfigError("--beam must be positive");
  const Checkpoint ckpt = load_checkpoint(args.ckpt);
  const auto inputs = load_corpus(args.input, TextField::kIgnored);
  BeamConfig beam;
  beam.beam_size = args.beam;
  beam.length_penalty = args.length_penalty;
  beam.max_len = ckpt.model.config.decoder.max_output_len;

  std::string text;
  NoGradGuard no_grad;
  for (const auto& pair : inputs) {
    const LinearizedGraph lin = linearize(pair.graph);
    const EncoderInput input = make_encoder_input(ckpt.vocab.encode(lin.tokens), lin);
    const Tensor memory = encode(input, ckpt.model);
    const std::vector<int> ids = generate(memory, beam, ckpt.model);
    text += join(ckpt.vocab.decode(ids)) + "\n";
  }
  write_text(args.out, text);
  out << "generated " << inputs.size() << " sentences into " << args.out << "\n";
  return kOk;
}

std::vector<Sentence> read_sentences(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw Error("cannot open " + path.string());
  std::vector<Sentence> sentences;
  std::string line;
  while (std::getline(in, line)) {
    std::istringstream words(line);
    Sentence s;
    for (std::string w; words >> w;) s.push_back(w);
    sentences.push_back(std::move(s));
  }
  return sentences;
}

int cmd_eval(const std::string& hyp, const std::string& ref, std::ostream& out) {
  const EvalReport report = evaluate(read_sentences(hyp), read_sentences(ref));
  out << to_json(report).dump(2) << "\n";
  return kOk;
}

int cmd_gradcheck(const std::string& config_path, std::optional<std::uint64_t> seed, std::ostream& out) {
  RunConfig config;
  config.model = toy_model_config();
  if (!config_path.empty()) config = load_run_config(config_path, config);
  ToySetup setup = make_toy_setup(config.model, seed.value_or(config.train.seed));
  out << "toy model: " << setup.model.params.total_elements() << " parameters, vocabulary "
      << setup.vocab.size() << "\n";
  bool ok = true;
  for (const auto& check : check_loss_gradients(setup)) {
    const ParamGradError* worst = &check.report.params.front();
    for (const auto& p : check.report.params) {
      if (p.max_rel_error > worst->max_rel_error) worst = &p;
    }
    out << std::left << std::setw(9) << check.loss << " max relative error " << std::scientific
        << std::setprecision(3) << check.report.max_rel_error << " at " << worst->name << "["
        << worst->worst_index << "], max absolute error " << worst->max_abs_error << std::defaultfloat
        << (check.report.passed ? "  ok" : "  FAILED") << "\n";
    ok = ok && check.report.passed;
  }
  return ok ? kOk : kInternalError;
}

int cmd_linearize(const std::string& corpus_path, std::ostream& out) {
  const auto corpus = load_corpus(corpus_path, TextField::kIgnored);
  for (std::size_t k = 0; k < corpus.size(); ++k) {
    const auto& graph = corpus[k].graph;
    const LinearizedGraph lin = linearize(graph);
    if (k > 0) out << "\n";
    out << join(lin.tokens) << "\n";
    for (std::size_t e = 0; e < graph.num_entities(); ++e) {
      out << "  entity " << e + 1 << " \"" << graph.entities[e] << "\":";
      for (std::size_t p : lin.entity_positions[e]) out << " " << p + 1;
      out << "\n";
    }
    for (const auto& [key, name] : graph.relations) {
      out << "  relation (" << key.first + 1 << ", " << key.second + 1 << ") \"" << name << "\":";
      for (std::size_t p : lin.relation_positions.at(key)) out << " " << p + 1;
      out << "\n";
    }
  }
  return kOk;
}

bool is_internal(const Error& e) {
  return dynamic_cast<const ShapeError*>(&e) != nullptr || dynamic_cast<const UsageError*>(&e) != nullptr ||
         dynamic_cast<const NumericError*>(&e) != nullptr || dynamic_cast<const MarginalError*>(&e) != nullptr;
}

}  // namespace

int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"Graph-text joint representation training and generation"};
  app.name("jointgt");
  app.require_subcommand(1);

  TrainArgs pretrain_args;
  auto* pretrain = app.add_subcommand("pretrain", "Pre-train on a graph-text corpus");
  pretrain->add_option("--config", pretrain_args.config, "Run configuration JSON")->check(CLI::ExistingFile);
  pretrain->add_option("--corpus", pretrain_args.corpus, "Corpus JSONL")->required();
  pretrain->add_option("--out", pretrain_args.out, "Run directory")->required();
  pretrain->add_option("--seed", pretrain_args.seed, "Random seed");
  pretrain->add_option("--weights", pretrain_args.weights, "Loss weights text,graph,ot");
  pretrain->add_option("--max-steps", pretrain_args.max_steps, "Stop after this many steps");

  TrainArgs finetune_args;
  auto* finetune = app.add_subcommand("finetune", "Fine-tune for graph-to-text generation");
  finetune->add_option("--config", finetune_args.config, "Run configuration JSON")->check(CLI::ExistingFile);
  finetune->add_option("--corpus", finetune_args.corpus, "Corpus JSONL")->required();
  finetune->add_option("--init", finetune_args.init, "Checkpoint directory to start from")->required();
  finetune->add_option("--out", finetune_args.out, "Run directory")->required();
  finetune->add_option("--seed", finetune_args.seed, "Random seed");
  finetune->add_option("--max-steps", finetune_args.max_steps, "Stop after this many steps");

  GenerateArgs generate_args;
  auto* gen = app.add_subcommand("generate", "Generate one sentence per input graph");
  gen->add_option("--ckpt", generate_args.ckpt, "Checkpoint directory")->required();
  gen->add_option("--input", generate_args.input, "Corpus JSONL (text field ignored)")->required();
  gen->add_option("--out", generate_args.out, "Output text file")->required();
  gen->add_option("--beam", generate_args.beam, "Beam size")->capture_default_str();
  gen->add_option("--length-penalty", generate_args.length_penalty, "Length penalty exponent")
      ->capture_default_str();

  std::string hyp, ref;
  auto* eval = app.add_subcommand("eval", "Corpus BLEU and ROUGE-L as JSON");
  eval->add_option("--hyp", hyp, "Hypotheses, one sentence per line")->required();
  eval->add_option("--ref", ref, "References, one sentence per line")->required();

  std::string gradcheck_config;
  std::optional<std::uint64_t> gradcheck_seed;
  auto* gradcheck = app.add_subcommand("gradcheck", "Finite-difference check of every loss on a toy model");
  gradcheck->add_option("--config", gradcheck_config, "Model dimensions (flat JSON)")->check(CLI::ExistingFile);
  gradcheck->add_option("--seed", gradcheck_seed, "Initialization seed");

  std::string linearize_corpus;
  auto* lin = app.add_subcommand("linearize", "Print linearized graphs with 1-based position maps");
  lin->add_option("--corpus", linearize_corpus, "Corpus JSONL")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? kOk : kUserError;
  }

  try {
    if (*pretrain) return cmd_train(pretrain_args, Task::kPretrain, out);
    if (*finetune) return cmd_train(finetune_args, Task::kFinetune, out);
    if (*gen) return cmd_generate(generate_args, out);
    if (*eval) return cmd_eval(hyp, ref, out);
    if (*gradcheck) return cmd_gradcheck(gradcheck_config, gradcheck_seed, out);
    if (*lin) return cmd_linearize(linearize_corpus, out);
  } catch (const Error& e) {
    err << "error: " << e.what() << "\n";
    return is_internal(e) ? kInternalError : kUserError;
  } catch (const std::exception& e) {
    err << "internal error: " << e.what() << "\n";
    return kInternalError;
  }
  return kInternalError;
}

}  // namespace jointgt::cli
