#pragma once

#include <cstdint>
#include <cstring>
#include <fstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "pedintent/common.hpp"
#include "pedintent/nn/model.hpp"

namespace pedintent::nn {

// Weights container ("STDN1"): magic bytes, a length-prefixed JSON manifest
// (model config, normalization constants, ordered tensor records with byte
// offsets), then raw float32 little-endian payloads. The manifest is dumped
// with sorted keys and offsets are recomputed the same way on every save, so
// save -> load -> save is byte-identical.
inline constexpr char kWeightsMagic[5] = {'S', 'T', 'D', 'N', '1'};

namespace detail {

inline nlohmann::json config_to_json(const StDenseNetConfig& c) {
  nlohmann::json j;
  j["input_channels"] = c.input_channels;
  j["input_depth"] = c.input_depth;
  j["input_height"] = c.input_height;
  j["input_width"] = c.input_width;
  j["num_classes"] = c.num_classes;
  j["growth_rate"] = c.growth_rate;
  j["num_blocks"] = c.num_blocks;
  j["layers_per_block"] = c.layers_per_block;
  j["stem_channels"] = c.stem_channels;
  j["stem_kernel"] = c.stem_kernel;
  j["stem_stride"] = c.stem_stride;
  j["stem_pool_kernel"] = c.stem_pool_kernel;
  j["stem_pool_stride"] = c.stem_pool_stride;
  j["stem_pool_padding"] = c.stem_pool_padding;
  j["compression"] = c.compression;
  j["per_layer_bottleneck"] = c.per_layer_bottleneck;
  return j;
}

inline StDenseNetConfig config_from_json(const nlohmann::json& j) {
  StDenseNetConfig c;
  c.input_channels = j.at("input_channels").get<int>();
  c.input_depth = j.at("input_depth").get<int>();
  c.input_height = j.at("input_height").get<int>();
  c.input_width = j.at("input_width").get<int>();
  c.num_classes = j.at("num_classes").get<int>();
  c.growth_rate = j.at("growth_rate").get<int>();
  c.num_blocks = j.at("num_blocks").get<int>();
  c.layers_per_block = j.at("layers_per_block").get<int>();
  c.stem_channels = j.at("stem_channels").get<int>();
  c.stem_kernel = j.at("stem_kernel").get<std::array<int, 3>>();
  c.stem_stride = j.at("stem_stride").get<std::array<int, 3>>();
  c.stem_pool_kernel = j.at("stem_pool_kernel").get<std::array<int, 3>>();
  c.stem_pool_stride = j.at("stem_pool_stride").get<std::array<int, 3>>();
  c.stem_pool_padding = j.at("stem_pool_padding").get<std::array<int, 3>>();
  c.compression = j.at("compression").get<double>();
  c.per_layer_bottleneck = j.at("per_layer_bottleneck").get<bool>();
  return c;
}

}  // namespace detail

inline void save_weights(const std::string& path, StDenseNet<float>& model) {
  std::vector<ParamRef<float>> tensors = model.named_tensors();

  nlohmann::json manifest;
  manifest["config"] = detail::config_to_json(model.config());
  manifest["normalization"] = {{"mean", model.config().pixel_mean},
                               {"std", model.config().pixel_std}};
  nlohmann::json records = nlohmann::json::array();
  std::uint64_t offset = 0;
  for (const ParamRef<float>& t : tensors) {
    nlohmann::json rec;
    rec["name"] = t.name;
    rec["shape"] = t.dims;
    rec["dtype"] = "float32";
    rec["offset"] = offset;
    records.push_back(rec);
    offset += t.value->size() * sizeof(float);
  }
  manifest["tensors"] = records;

  const std::string manifest_str = manifest.dump();

  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("save_weights: cannot open " + path);
  out.write(kWeightsMagic, sizeof(kWeightsMagic));
  const std::uint32_t len = static_cast<std::uint32_t>(manifest_str.size());
  char len_bytes[4] = {static_cast<char>(len & 0xff), static_cast<char>((len >> 8) & 0xff),
                       static_cast<char>((len >> 16) & 0xff),
                       static_cast<char>((len >> 24) & 0xff)};
  out.write(len_bytes, 4);
  out.write(manifest_str.data(), static_cast<std::streamsize>(manifest_str.size()));
  for (const ParamRef<float>& t : tensors) {
    out.write(reinterpret_cast<const char*>(t.value->data()),
              static_cast<std::streamsize>(t.value->size() * sizeof(float)));
  }
  if (!out) throw IoError("save_weights: write failed for " + path);
}

inline StDenseNet<float> load_weights(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("load_weights: cannot open " + path);

  char magic[5];
  in.read(magic, 5);
  if (!in || std::memcmp(magic, kWeightsMagic, 5) != 0) {
    throw ValidationError("load_weights: bad magic, not a weights container");
  }
  char len_bytes[4];
  in.read(len_bytes, 4);
  if (!in) throw ValidationError("load_weights: truncated manifest length");
  const std::uint32_t len = static_cast<std::uint32_t>(static_cast<unsigned char>(len_bytes[0])) |
                            (static_cast<std::uint32_t>(static_cast<unsigned char>(len_bytes[1]))
                             << 8) |
                            (static_cast<std::uint32_t>(static_cast<unsigned char>(len_bytes[2]))
                             << 16) |
                            (static_cast<std::uint32_t>(static_cast<unsigned char>(len_bytes[3]))
                             << 24);
  std::string manifest_str(len, '\0');
  in.read(manifest_str.data(), len);
  if (!in) throw ValidationError("load_weights: truncated manifest");

  nlohmann::json manifest;
  try {
    manifest = nlohmann::json::parse(manifest_str);
  } catch (const nlohmann::json::exception& e) {
    throw ValidationError(std::string("load_weights: bad manifest: ") + e.what());
  }

  StDenseNetConfig config = detail::config_from_json(manifest.at("config"));
  config.pixel_mean = manifest.at("normalization").at("mean").get<double>();
  config.pixel_std = manifest.at("normalization").at("std").get<double>();
  StDenseNet<float> model(config);

  std::vector<ParamRef<float>> tensors = model.named_tensors();
  const nlohmann::json& records = manifest.at("tensors");
  if (records.size() != tensors.size()) {
    throw ValidationError("load_weights: tensor count does not match model");
  }
  for (std::size_t i = 0; i < tensors.size(); ++i) {
    const nlohmann::json& rec = records[i];
    if (rec.at("name").get<std::string>() != tensors[i].name) {
      throw ValidationError("load_weights: tensor name mismatch at " + tensors[i].name);
    }
    if (rec.at("dtype").get<std::string>() != "float32") {
      throw ValidationError("load_weights: unsupported dtype");
    }
    std::size_t count = 1;
    for (const auto& d : rec.at("shape")) count *= d.get<std::size_t>();
    if (count != tensors[i].value->size()) {
      throw ValidationError("load_weights: tensor size mismatch at " + tensors[i].name);
    }
    in.read(reinterpret_cast<char*>(tensors[i].value->data()),
            static_cast<std::streamsize>(tensors[i].value->size() * sizeof(float)));
    if (!in) throw ValidationError("load_weights: truncated payload at " + tensors[i].name);
  }
  return model;
}

}  // namespace pedintent::nn
