// Acceptance gate: one PASS/FAIL line per criterion, non-zero exit if any
// criterion fails. Tolerances are fixed here.

#include <algorithm>
#include <bit>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <limits>
#include <numeric>
#include <random>
#include <sstream>
#include <string>

#include "jointgt/checkpoint.hpp"
#include "jointgt/cli.hpp"
#include "jointgt/decoder.hpp"
#include "jointgt/diagnostics.hpp"
#include "jointgt/encoder.hpp"
#include "jointgt/masking.hpp"
#include "jointgt/metrics.hpp"
#include "jointgt/ot.hpp"
#include "jointgt/training.hpp"

using namespace jointgt;
namespace fs = std::filesystem;

namespace {

constexpr double kGradTolerance = 1e-4;
constexpr double kGradBudgetSeconds = 120.0;
constexpr double kOtCostSlack = 0.01;
constexpr double kOtMarginalTolerance = 1e-3;
constexpr double kOtFloorSlack = 1e-9;
constexpr std::size_t kMaskSamples = 10000;
constexpr double kOverfitLoss = 0.1;
constexpr std::size_t kOverfitSteps = 500;
constexpr std::size_t kOverfitExact = 18;
constexpr std::size_t kPretrainSteps = 200;
constexpr double kOverfitBudgetSeconds = 600.0;
constexpr double kRougeExpected = 600.0 / 7.0;
constexpr double kRougeTolerance = 1e-6;

struct Outcome {
  bool pass = false;
  std::string detail;
};

double seconds_since(std::chrono::steady_clock::time_point start) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
}

std::string fmt(std::size_t v) { return std::to_string(v); }

std::string fmt(double v) {
  std::ostringstream out;
  out << v;
  return out.str();
}

// ---------------------------------------------------------------------------

Outcome gradient_correctness() {
  const auto start = std::chrono::steady_clock::now();
  ToySetup setup = make_toy_setup(toy_model_config(), 0);
  const auto& cfg = setup.model.config;
  const bool shape_ok = cfg.encoder.num_layers == 2 && cfg.decoder.num_layers == 2 && cfg.d_model() == 16 &&
                        cfg.encoder.num_heads == 2 && setup.vocab.size() <= 64 &&
                        setup.example.pair.graph.num_entities() == 3 &&
                        setup.example.pair.graph.num_relations() == 2 && setup.example.text_ids.size() == 8;
  bool pass = shape_ok;
  std::string detail;
  for (const auto& check : check_loss_gradients(setup)) {
    pass = pass && check.report.max_rel_error < kGradTolerance;
    detail += check.loss + " " + fmt(check.report.max_rel_error) + ", ";
  }
  const double elapsed = seconds_since(start);
  pass = pass && elapsed < kGradBudgetSeconds;
  return {pass, "max relative errors: " + detail + fmt(setup.model.params.total_elements()) + " parameters, " +
                    fmt(elapsed) + " s"};
}

// ---------------------------------------------------------------------------

double permutation_optimum(const std::vector<double>& cost, std::size_t n) {
  std::vector<std::size_t> perm(n);
  std::iota(perm.begin(), perm.end(), std::size_t{0});
  double best = std::numeric_limits<double>::infinity();
  do {
    double total = 0.0;
    for (std::size_t i = 0; i < n; ++i) total += cost[i * n + perm[i]];
    best = std::min(best, total / static_cast<double>(n));
  } while (std::next_permutation(perm.begin(), perm.end()));
  return best;
}

Outcome ipot_against_exact() {
  std::mt19937_64 rng(2024);
  std::uniform_real_distribution<double> entry(0.0, 2.0);
  double worst_gap = 0.0, worst_marginal = 0.0, worst_default_gap = std::numeric_limits<double>::infinity();
  bool pass = true;
  for (int trial = 0; trial < 20; ++trial) {
    const std::size_t n = 3 + static_cast<std::size_t>(trial % 3);
    std::vector<double> cost(n * n);
    for (double& c : cost) c = entry(rng);
    const double exact = permutation_optimum(cost, n);

    const TransportPlan plan = ipot_uniform(cost, n, n, {.beta = 1.0, .inner_k = 1, .outer_n = 2000});
    const double gap = (plan.cost(cost) - exact) / exact;
    const double marginal = std::max(plan.row_violation(), plan.col_violation());
    worst_gap = std::max(worst_gap, gap);
    worst_marginal = std::max(worst_marginal, marginal);
    pass = pass && gap <= kOtCostSlack && marginal < kOtMarginalTolerance;

    const double fast = ipot_uniform(cost, n, n, {.beta = 1.0, .inner_k = 1, .outer_n = 10}).cost(cost);
    worst_default_gap = std::min(worst_default_gap, fast - exact);
    pass = pass && std::isfinite(fast) && fast >= 0.0 && fast >= exact - kOtFloorSlack;
  }
  return {pass, "N=2000 worst relative gap " + fmt(worst_gap) + ", worst marginal violation " +
                    fmt(worst_marginal) + "; N=10 smallest (cost - optimum) " + fmt(worst_default_gap)};
}

// ---------------------------------------------------------------------------

Vocabulary word_vocab() {
  std::vector<std::string> tokens(Vocabulary::kSpecials.begin(), Vocabulary::kSpecials.end());
  for (int i = 0; i < 21; ++i) tokens.push_back("w" + std::to_string(i));
  return Vocabulary(tokens);
}

EncoderInput random_input(std::mt19937_64& rng, const Vocabulary& vocab) {
  KnowledgeGraph g;
  const std::size_t n = 2 + rng() % 3;
  for (std::size_t i = 0; i < n; ++i) {
    std::string s = "w" + std::to_string(rng() % 21);
    if (rng() % 2) s += " w" + std::to_string(rng() % 21);
    g.entities.push_back(s);
  }
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < n; ++j) {
      if (i != j && rng() % 3 == 0) g.relations[{i, j}] = "w" + std::to_string(rng() % 21);
    }
  }
  for (std::size_t i = 0; i < n; ++i) {
    bool used = false;
    for (const auto& [key, r] : g.relations) used = used || key.first == i || key.second == i;
    if (!used) g.relations.emplace(std::make_pair(i, (i + 1) % n), "w5");
  }
  const LinearizedGraph lin = linearize(g);
  std::vector<int> text;
  for (std::size_t k = 0, len = 3 + rng() % 5; k < len; ++k) text.push_back(vocab.id("w" + std::to_string(rng() % 21)));
  return make_encoder_input(vocab.encode(lin.tokens), lin, &text);
}

bool bitwise_equal(const Tensor& a, const Tensor& b) {
  if (a.shape() != b.shape()) return false;
  for (std::size_t i = 0; i < a.numel(); ++i) {
    if (std::bit_cast<std::uint64_t>(a.at(i)) != std::bit_cast<std::uint64_t>(b.at(i))) return false;
  }
  return true;
}

Outcome structure_identities() {
  const Vocabulary vocab = word_vocab();
  ModelConfig config = toy_model_config();
  config.vocab_size = vocab.size();
  config.encoder.max_input_len = 64;
  Model joint = init_model(config, 77);
  std::mt19937_64 rng(31);

  // (a) residual fusion leaves non-entity rows untouched.
  bool fuse_ok = true;
  std::normal_distribution<double> normal(0.0, 1.0);
  for (int trial = 0; trial < 10; ++trial) {
    const EncoderInput input = random_input(rng, vocab);
    std::vector<double> hv(input.ids.size() * 16), fv(input.num_entities() * 16);
    for (double& x : hv) x = normal(rng);
    for (double& x : fv) x = normal(rng);
    const Tensor h = Tensor::from({input.ids.size(), 16}, hv);
    const Tensor out = residual_fuse(h, Tensor::from({input.num_entities(), 16}, fv), input);
    std::vector<bool> entity_row(input.ids.size(), false);
    for (const auto& positions : input.entity_positions) {
      for (std::size_t p : positions) entity_row[p] = true;
    }
    for (std::size_t r = 0; r < input.ids.size(); ++r) {
      if (entity_row[r]) continue;
      for (std::size_t c = 0; c < 16; ++c) {
        fuse_ok = fuse_ok && std::bit_cast<std::uint64_t>(out.at(r, c)) == std::bit_cast<std::uint64_t>(h.at(r, c));
      }
    }
  }

  // (b) zero value projections reduce the joint encoder to the sequence one.
  for (std::size_t l = 0; l < config.encoder.num_layers; ++l) {
    for (const char* w : {"struct.wvs", "struct.wvr"}) {
      auto values = joint.params.get(names::encoder_layer(l) + w).mutable_values();
      std::fill(values.begin(), values.end(), 0.0);
    }
  }
  Model seq{joint.config, joint.params.clone()};
  seq.config.encoder.variant = EncoderVariant::kSeq;
  bool seq_ok = true;
  for (int trial = 0; trial < 10; ++trial) {
    const EncoderInput input = random_input(rng, vocab);
    seq_ok = seq_ok && bitwise_equal(encode(input, joint), encode(input, seq));
  }

  // (c) a unit with one position pools to that row exactly.
  bool pool_ok = true;
  for (int trial = 0; trial < 10; ++trial) {
    std::vector<double> hv(12 * 16);
    for (double& x : hv) x = normal(rng) * 1e3;
    const Tensor h = Tensor::from({12, 16}, hv);
    const std::size_t p = rng() % 12;
    const std::vector<std::size_t> one = {p};
    const Tensor row = Tensor::from({16}, std::vector<double>(hv.begin() + p * 16, hv.begin() + (p + 1) * 16));
    pool_ok = pool_ok && bitwise_equal(index_mean_pool(h, one), row);
  }
  return {fuse_ok && seq_ok && pool_ok, std::string("(a) fuse ") + (fuse_ok ? "ok" : "differs") + ", (b) joint vs seq " +
                                            (seq_ok ? "bitwise equal" : "differs") + ", (c) single-position pool " +
                                            (pool_ok ? "exact" : "differs")};
}

// ---------------------------------------------------------------------------

Outcome masking_statistics() {
  const GraphTextPair pair = parse_corpus_line(
      R"({"entities": ["alan bean", "nasa", "wapakoneta", "apollo 12"], "triples": [[1, "operator", 2], [1, "birth place", 3], [1, "mission", 4]], "text": "alan bean from wapakoneta flew on apollo 12 for nasa in the year 1969"})",
      1);
  const LinearizedGraph lin = linearize(pair.graph);
  std::vector<bool> in_entity(pair.text.size(), false);
  for (const auto& [e, positions] : pair.entity_mentions) {
    for (std::size_t p : positions) in_entity[p] = true;
  }
  Rng rng(4242);
  double ent = 0, ent_n = 0, other = 0, other_n = 0, g_ent = 0, g_ent_n = 0, g_rel = 0, g_rel_n = 0;
  while (ent_n < kMaskSamples || other_n < kMaskSamples || g_ent_n < kMaskSamples || g_rel_n < kMaskSamples) {
    const MaskedText t = mask_text(pair, rng);
    for (std::size_t i = 0; i < t.masked.size(); ++i) {
      (in_entity[i] ? ent : other) += t.masked[i] ? 1 : 0;
      (in_entity[i] ? ent_n : other_n) += 1;
    }
    const MaskedGraph g = mask_graph(lin, rng);
    for (bool s : g.entity_selected) g_ent += s ? 1 : 0, g_ent_n += 1;
    for (bool s : g.relation_selected) g_rel += s ? 1 : 0, g_rel_n += 1;
  }
  const double r1 = ent / ent_n, r2 = other / other_n, r3 = g_ent / g_ent_n, r4 = g_rel / g_rel_n;
  const bool pass = r1 >= 0.38 && r1 <= 0.42 && r2 >= 0.18 && r2 <= 0.22 && r3 >= 0.38 && r3 <= 0.42 &&
                    r4 >= 0.18 && r4 <= 0.22;
  return {pass, "text entity " + fmt(r1) + ", text other " + fmt(r2) + ", graph entity " + fmt(r3) +
                    ", graph relation " + fmt(r4) + " (at least " + fmt(kMaskSamples) + " decisions each)"};
}

// ---------------------------------------------------------------------------

std::vector<GraphTextPair> synthetic_corpus() {
  const char* lines[] = {
      R"({"entities": ["alan bean", "nasa"], "triples": [[1, "operator", 2]], "text": "alan bean worked for nasa ."})",
      R"({"entities": ["alan bean", "wapakoneta"], "triples": [[1, "birth place", 2]], "text": "alan bean was born in wapakoneta ."})",
      R"({"entities": ["apollo 12", "nasa"], "triples": [[1, "operator", 2]], "text": "apollo 12 was run by nasa ."})",
      R"({"entities": ["alan bean", "apollo 12"], "triples": [[1, "mission", 2]], "text": "alan bean flew on apollo 12 ."})",
      R"({"entities": ["wapakoneta", "ohio"], "triples": [[1, "state", 2]], "text": "wapakoneta is in ohio ."})",
      R"({"entities": ["neil armstrong", "wapakoneta"], "triples": [[1, "birth place", 2]], "text": "neil armstrong was born in wapakoneta ."})",
      R"({"entities": ["neil armstrong", "apollo 11"], "triples": [[1, "mission", 2]], "text": "neil armstrong flew on apollo 11 ."})",
      R"({"entities": ["apollo 11", "nasa"], "triples": [[1, "operator", 2]], "text": "apollo 11 was run by nasa ."})",
      R"({"entities": ["buzz aldrin", "glen ridge"], "triples": [[1, "birth place", 2]], "text": "buzz aldrin was born in glen ridge ."})",
      R"({"entities": ["glen ridge", "new jersey"], "triples": [[1, "state", 2]], "text": "glen ridge is in new jersey ."})",
      R"({"entities": ["buzz aldrin", "apollo 11", "nasa"], "triples": [[1, "mission", 2], [2, "operator", 3]], "text": "buzz aldrin flew on apollo 11 , run by nasa ."})",
      R"({"entities": ["pete conrad", "philadelphia"], "triples": [[1, "birth place", 2]], "text": "pete conrad was born in philadelphia ."})",
      R"({"entities": ["pete conrad", "apollo 12"], "triples": [[1, "mission", 2]], "text": "pete conrad commanded apollo 12 ."})",
      R"({"entities": ["philadelphia", "pennsylvania"], "triples": [[1, "state", 2]], "text": "philadelphia is in pennsylvania ."})",
      R"({"entities": ["alan bean", "wapakoneta", "ohio"], "triples": [[1, "birth place", 2], [2, "state", 3]], "text": "alan bean was born in wapakoneta , ohio ."})",
      R"({"entities": ["michael collins", "rome"], "triples": [[1, "birth place", 2]], "text": "michael collins was born in rome ."})",
      R"({"entities": ["michael collins", "apollo 11"], "triples": [[1, "mission", 2]], "text": "michael collins flew on apollo 11 ."})",
      R"({"entities": ["rome", "italy"], "triples": [[1, "country", 2]], "text": "rome is the capital of italy ."})",
      R"({"entities": ["nasa", "washington"], "triples": [[1, "headquarters", 2]], "text": "nasa is based in washington ."})",
      R"({"entities": ["pete conrad", "nasa"], "triples": [[1, "operator", 2]], "text": "pete conrad worked for nasa ."})",
  };
  std::vector<GraphTextPair> corpus;
  for (std::size_t i = 0; i < std::size(lines); ++i) corpus.push_back(parse_corpus_line(lines[i], i + 1));
  return corpus;
}

// Mean negative log-likelihood per target token over the corpus.
double per_token_loss(const std::vector<Example>& corpus, const Model& model) {
  NoGradGuard no_grad;
  double total = 0.0, tokens = 0.0;
  for (const auto& ex : corpus) {
    const double n = static_cast<double>(ex.text_ids.size() + 1);
    total += loss_finetune(model, ex).item() * n;
    tokens += n;
  }
  return total / tokens;
}

TrainConfig overfit_config(Task task, std::size_t steps) {
  TrainConfig c;
  c.learning_rate = 3e-3;
  c.warmup_ratio = 0.05;
  c.batch_size = 4;
  c.max_steps = steps;
  c.seed = 1;
  c.task = task;
  return c;
}

// Fine-tunes until the per-token loss drops below the threshold; returns
// the step count, or 0 if it never does.
std::size_t finetune_until_threshold(const std::vector<Example>& corpus, Model& model, const Vocabulary& vocab) {
  std::size_t reached = 0;
  TrainOptions options;
  options.hooks.on_step = [&](const StepRecord& r, const Model& m) {
    if (per_token_loss(corpus, m) < kOverfitLoss) {
      reached = r.step;
      return false;
    }
    return true;
  };
  train(corpus, model, vocab, overfit_config(Task::kFinetune, kOverfitSteps), options);
  return reached;
}

Outcome memorization() {
  const auto start = std::chrono::steady_clock::now();
  const auto pairs = synthetic_corpus();
  const Vocabulary vocab = build_vocab(pairs, 1);
  const auto corpus = prepare_examples(pairs, vocab);
  ModelConfig config = toy_model_config();
  config.vocab_size = vocab.size();

  Model scratch = init_model(config, 5);
  const std::size_t scratch_steps = finetune_until_threshold(corpus, scratch, vocab);

  std::size_t exact = 0;
  for (const auto& ex : corpus) {
    NoGradGuard no_grad;
    const Tensor memory = encode(make_encoder_input(ex.graph_ids, ex.lin), scratch);
    const BeamConfig greedy{.beam_size = 1, .length_penalty = 1.0, .max_len = config.decoder.max_output_len};
    if (generate(memory, greedy, scratch) == ex.text_ids) ++exact;
  }

  Model pretrained = init_model(config, 5);
  train(corpus, pretrained, vocab, overfit_config(Task::kPretrain, kPretrainSteps));
  const std::size_t pretrained_steps = finetune_until_threshold(corpus, pretrained, vocab);

  const double elapsed = seconds_since(start);
  const bool pass = scratch_steps > 0 && exact >= kOverfitExact && pretrained_steps > 0 &&
                    pretrained_steps <= scratch_steps && elapsed < kOverfitBudgetSeconds;
  return {pass, "vocabulary " + fmt(vocab.size()) + "; from scratch loss < " + fmt(kOverfitLoss) + " at step " +
                    fmt(scratch_steps) + ", greedy exact " + fmt(exact) + "/20; after " + fmt(kPretrainSteps) +
                    " pre-training steps at step " + fmt(pretrained_steps) + "; " + fmt(elapsed) + " s"};
}

// ---------------------------------------------------------------------------

Outcome metric_oracles() {
  auto split = [](const std::string& s) {
    std::istringstream in(s);
    Sentence out;
    for (std::string w; in >> w;) out.push_back(w);
    return out;
  };
  const std::vector<Sentence> corpus = {split("the cat sat on the mat"), split("alan bean flew on apollo 12"),
                                        split("a b c")};
  const double bleu = corpus_bleu(corpus, corpus);
  double rouge_identical = 0.0;
  for (const auto& s : corpus) rouge_identical += rouge_l(s, s) / 3.0;
  const double rouge = rouge_l(split("a b c d"), split("a c d"));

  std::function<std::size_t(const Sentence&, std::size_t, const Sentence&, std::size_t)> brute =
      [&](const Sentence& a, std::size_t i, const Sentence& b, std::size_t j) -> std::size_t {
    if (i == a.size() || j == b.size()) return 0;
    if (a[i] == b[j]) return 1 + brute(a, i + 1, b, j + 1);
    return std::max(brute(a, i + 1, b, j), brute(a, i, b, j + 1));
  };
  std::vector<Sentence> all{{}};
  for (std::size_t k = 0; k < all.size(); ++k) {
    if (all[k].size() == 8) continue;
    for (const char* s : {"a", "b", "c"}) {
      Sentence next = all[k];
      next.push_back(s);
      all.push_back(std::move(next));
    }
  }
  std::vector<Sentence> partners;
  for (std::size_t k = 0; k < all.size(); k += 97) partners.push_back(all[k]);
  std::size_t mismatches = 0, pairs = 0;
  for (const auto& a : all) {
    for (const auto& b : partners) {
      mismatches += lcs_length(a, b) != brute(a, 0, b, 0);
      ++pairs;
    }
  }
  const bool pass = std::abs(bleu - 100.0) < 1e-9 && std::abs(rouge_identical - 100.0) < 1e-9 &&
                    std::abs(rouge - kRougeExpected) < kRougeTolerance && mismatches == 0;
  return {pass, "identical BLEU " + fmt(bleu) + ", identical ROUGE-L " + fmt(rouge_identical) +
                    ", ROUGE-L(a b c d | a c d) " + fmt(rouge) + ", LCS mismatches " + fmt(mismatches) + " of " +
                    fmt(pairs) + " pairs over " + fmt(all.size()) + " sequences"};
}

// ---------------------------------------------------------------------------

std::string loss_columns(const fs::path& log) {
  std::ifstream in(log);
  std::string columns;
  for (std::string line; std::getline(in, line);) {
    const auto j = nlohmann::json::parse(line);
    for (const char* key : {"step", "l_text", "l_graph", "l_ot", "total"}) columns += j.at(key).dump() + " ";
    columns += "\n";
  }
  return columns;
}

std::string bytes_of(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

Outcome determinism_and_persistence() {
  const fs::path work = fs::temp_directory_path() / "jointgt_acceptance";
  fs::remove_all(work);
  fs::create_directories(work);
  write_corpus(work / "corpus.jsonl", synthetic_corpus());
  {
    std::ofstream(work / "config.json") << R"({"d_model": 16, "num_heads": 2, "d_ff": 32, "encoder_layers": 2,
      "decoder_layers": 2, "max_input_len": 64, "max_output_len": 16, "learning_rate": 0.003,
      "batch_size": 4, "max_steps": 20})";
  }
  std::ostringstream sink;
  int codes = 0;
  for (const char* run : {"a", "b"}) {
    const std::string corpus = (work / "corpus.jsonl").string(), config = (work / "config.json").string(),
                      out = (work / run).string();
    const char* argv[] = {"jointgt", "pretrain", "--config", config.c_str(), "--corpus", corpus.c_str(),
                          "--out", out.c_str(), "--seed", "9"};
    codes += cli::run(static_cast<int>(std::size(argv)), argv, sink, sink);
  }
  const std::string log_a = loss_columns(work / "a" / "log.jsonl");
  const bool logs_equal = codes == 0 && !log_a.empty() && log_a == loss_columns(work / "b" / "log.jsonl");

  const fs::path ckpt = work / "a" / "checkpoints" / "epoch-4";
  bool round_trip = false, forward_equal = false;
  if (fs::exists(ckpt)) {
    const Checkpoint loaded = load_checkpoint(ckpt);
    save_checkpoint(work / "copy", loaded.model, loaded.vocab, loaded.extra);
    const Checkpoint again = load_checkpoint(work / "copy");
    round_trip = bytes_of(ckpt / "params.bin") == bytes_of(work / "copy" / "params.bin") &&
                 bytes_of(ckpt / "vocab.txt") == bytes_of(work / "copy" / "vocab.txt");
    forward_equal = true;
    for (const auto& ex : prepare_examples(synthetic_corpus(), loaded.vocab)) {
      const EncoderInput input = make_encoder_input(ex.graph_ids, ex.lin);
      const Tensor m1 = encode(input, loaded.model), m2 = encode(input, again.model);
      forward_equal = forward_equal && bitwise_equal(m1, m2) &&
                      bitwise_equal(decode_train(ex.text_ids, m1, loaded.model).out.logits,
                                    decode_train(ex.text_ids, m2, again.model).out.logits);
    }
  }

  // In-memory model against its reloaded copy.
  ToySetup setup = make_toy_setup(toy_model_config(), 3);
  save_checkpoint(work / "toy", setup.model, setup.vocab);
  const Checkpoint toy = load_checkpoint(work / "toy");
  bool toy_equal = toy.model.params.size() == setup.model.params.size();
  auto it = toy.model.params.begin();
  for (const auto& [name, t] : setup.model.params) {
    toy_equal = toy_equal && it->first == name && bitwise_equal(t, it->second);
    ++it;
  }
  toy_equal = toy_equal && loss_finetune(setup.model, setup.example).item() ==
                               loss_finetune(toy.model, setup.example).item();

  const bool pass = logs_equal && round_trip && forward_equal && toy_equal;
  return {pass, std::string("pretrain logs ") + (logs_equal ? "identical" : "differ") + ", checkpoint bytes " +
                    (round_trip ? "identical" : "differ") + ", forward outputs " +
                    (forward_equal && toy_equal ? "identical" : "differ")};
}

}  // namespace

int main() {
  const std::pair<const char*, std::function<Outcome()>> criteria[] = {
      {"1 gradient correctness", gradient_correctness},
      {"2 IPOT vs exact OT", ipot_against_exact},
      {"3 structure-module identities", structure_identities},
      {"4 masking statistics", masking_statistics},
      {"5 memorization and pre-training direction", memorization},
      {"6 metric oracles", metric_oracles},
      {"7 determinism and persistence", determinism_and_persistence},
  };
  int failures = 0;
  for (const auto& [name, check] : criteria) {
    Outcome outcome;
    try {
      outcome = check();
    } catch (const std::exception& e) {
      outcome = {false, std::string("threw: ") + e.what()};
    }
    failures += outcome.pass ? 0 : 1;
    std::cout << (outcome.pass ? "PASS " : "FAIL ") << name << ": " << outcome.detail << std::endl;
  }
  return failures == 0 ? 0 : 1;
}
