#include "jointgt/checkpoint.hpp"

#include <bit>
#include <cstdint>
#include <cstring>
#include <fstream>

#include "jointgt/errors.hpp"

namespace jointgt {
namespace {

constexpr const char* kFormat = "jointgt-checkpoint-v1";

std::uint64_t to_little_endian(std::uint64_t v) {
  if constexpr (std::endian::native == std::endian::big) {
    std::uint64_t r = 0;
    for (int i = 0; i < 8; ++i) r |= ((v >> (8 * i)) & 0xffu) << (8 * (7 - i));
    return r;
  }
  return v;
}

}  // namespace

void save_checkpoint(const std::filesystem::path& dir, const Model& model, const Vocabulary& vocab,
                     const nlohmann::json& extra) {
  std::filesystem::create_directories(dir);
  nlohmann::json manifest;
  manifest["format"] = kFormat;
  manifest["model_config"] = to_json(model.config);
  manifest["vocabulary"] = "vocab.txt";
  manifest["extra"] = extra;
  nlohmann::json params = nlohmann::json::array();
  for (const auto& [name, t] : model.params) {
    params.push_back({{"name", name}, {"shape", t.shape()}, {"dtype", "f64"}});
  }
  manifest["params"] = std::move(params);

  {
    std::ofstream out(dir / "manifest.json");
    if (!out) throw CheckpointError("cannot write " + (dir / "manifest.json").string());
    out << manifest.dump(2) << '\n';
  }
  {
    std::ofstream out(dir / "params.bin", std::ios::binary);
    if (!out) throw CheckpointError("cannot write " + (dir / "params.bin").string());
    for (const auto& [name, t] : model.params) {
      for (double v : t.values()) {
        const std::uint64_t bits = to_little_endian(std::bit_cast<std::uint64_t>(v));
        out.write(reinterpret_cast<const char*>(&bits), sizeof bits);
      }
    }
    if (!out) throw CheckpointError("failed writing " + (dir / "params.bin").string());
  }
  vocab.save(dir / "vocab.txt");
}

Checkpoint load_checkpoint(const std::filesystem::path& dir) {
  const auto manifest_path = dir / "manifest.json";
  std::ifstream manifest_in(manifest_path);
  if (!manifest_in) throw CheckpointError("cannot open " + manifest_path.string());

  nlohmann::json manifest;
  try {
    manifest = nlohmann::json::parse(manifest_in);
  } catch (const nlohmann::json::exception& e) {
    throw CheckpointError("malformed manifest " + manifest_path.string() + ": " + e.what());
  }

  try {
    if (manifest.at("format").get<std::string>() != kFormat) {
      throw CheckpointError("unsupported checkpoint format in " + manifest_path.string());
    }
    ModelConfig config;
    try {
      config = model_config_from_json(manifest.at("model_config"));
    } catch (const ConfigError& e) {
      throw CheckpointError(std::string("checkpoint model config: ") + e.what());
    }

    Vocabulary vocab;
    try {
      vocab = Vocabulary::load(dir / manifest.at("vocabulary").get<std::string>());
    } catch (const CheckpointError&) {
      throw;
    } catch (const Error& e) {
      throw CheckpointError(std::string("checkpoint vocabulary: ") + e.what());
    }
    if (vocab.size() != config.vocab_size) {
      throw CheckpointError("vocabulary has " + std::to_string(vocab.size()) + " tokens but config says " +
                            std::to_string(config.vocab_size));
    }

    // Build the expected layout and check the manifest against it.
    Model model = init_model(config, 0);
    const auto& entries = manifest.at("params");
    if (entries.size() != model.params.size()) {
      throw CheckpointError("manifest lists " + std::to_string(entries.size()) + " parameters, model has " +
                            std::to_string(model.params.size()));
    }
    std::size_t k = 0;
    for (const auto& [name, t] : model.params) {
      const auto& entry = entries[k++];
      if (entry.at("name").get<std::string>() != name) {
        throw CheckpointError("manifest parameter " + std::to_string(k - 1) + " is '" +
                              entry.at("name").get<std::string>() + "', expected '" + name + "'");
      }
      if (entry.at("dtype").get<std::string>() != "f64") throw CheckpointError("unsupported dtype for " + name);
      if (entry.at("shape").get<Shape>() != t.shape()) {
        throw CheckpointError("shape mismatch for " + name + ": manifest " +
                              shape_string(entry.at("shape").get<Shape>()) + ", config " +
                              shape_string(t.shape()));
      }
    }

    const auto bin_path = dir / "params.bin";
    std::ifstream bin(bin_path, std::ios::binary);
    if (!bin) throw CheckpointError("cannot open " + bin_path.string());
    const auto expected_bytes = model.params.total_elements() * sizeof(double);
    const auto actual_bytes = std::filesystem::file_size(bin_path);
    if (actual_bytes != expected_bytes) {
      throw CheckpointError(bin_path.string() + " holds " + std::to_string(actual_bytes) + " bytes, expected " +
                            std::to_string(expected_bytes));
    }
    for (auto& [name, t] : model.params) {
      for (double& v : t.mutable_values()) {
        std::uint64_t bits = 0;
        bin.read(reinterpret_cast<char*>(&bits), sizeof bits);
        if (!bin) throw CheckpointError("truncated parameter data in " + bin_path.string());
        v = std::bit_cast<double>(to_little_endian(bits));
      }
    }
    nlohmann::json extra = manifest.contains("extra") ? manifest["extra"] : nlohmann::json::object();
    return {std::move(model), std::move(vocab), std::move(extra)};
  } catch (const nlohmann::json::exception& e) {
    throw CheckpointError("malformed manifest " + manifest_path.string() + ": " + e.what());
  }
}

void transfer_parameters(const Model& source, Model& target) {
  for (auto& [name, t] : target.params) {
    if (!source.params.contains(name)) {
      if (names::is_structure_param(name)) {
        auto values = t.mutable_values();
        std::fill(values.begin(), values.end(), 0.0);
        continue;
      }
      throw CheckpointError("checkpoint lacks parameter '" + name + "'");
    }
    const Tensor& src = source.params.get(name);
    if (src.shape() != t.shape()) {
      throw CheckpointError("shape mismatch for " + name + ": checkpoint " + shape_string(src.shape()) +
                            ", model " + shape_string(t.shape()));
    }
    std::copy(src.values().begin(), src.values().end(), t.mutable_values().begin());
  }
}

}  // namespace jointgt
