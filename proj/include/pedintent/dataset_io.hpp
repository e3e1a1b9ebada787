#pragma once

#include <algorithm>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <string>
#include <vector>

#include "pedintent/common.hpp"
#include "pedintent/nn/train.hpp"

namespace pedintent {

// Sequence sample files ("PSEQ"): magic, five little-endian int32 values
// (label, C, D, H, W), then the float32 payload. One sample per file; a
// dataset is a directory of *.seq files read in lexicographic order.

namespace detail {

inline void write_i32(std::ofstream& out, std::int32_t v) {
  char b[4] = {static_cast<char>(v & 0xff), static_cast<char>((v >> 8) & 0xff),
               static_cast<char>((v >> 16) & 0xff), static_cast<char>((v >> 24) & 0xff)};
  out.write(b, 4);
}

inline std::int32_t read_i32(std::ifstream& in) {
  unsigned char b[4];
  in.read(reinterpret_cast<char*>(b), 4);
  return static_cast<std::int32_t>(static_cast<std::uint32_t>(b[0]) |
                                   (static_cast<std::uint32_t>(b[1]) << 8) |
                                   (static_cast<std::uint32_t>(b[2]) << 16) |
                                   (static_cast<std::uint32_t>(b[3]) << 24));
}

}  // namespace detail

inline void save_sample(const std::string& path, const nn::Sample<float>& sample) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("save_sample: cannot open " + path);
  out.write("PSEQ", 4);
  detail::write_i32(out, sample.label);
  detail::write_i32(out, sample.sequence.c());
  detail::write_i32(out, sample.sequence.d());
  detail::write_i32(out, sample.sequence.h());
  detail::write_i32(out, sample.sequence.w());
  out.write(reinterpret_cast<const char*>(sample.sequence.data()),
            static_cast<std::streamsize>(sample.sequence.size() * sizeof(float)));
  if (!out) throw IoError("save_sample: write failed for " + path);
}

inline nn::Sample<float> load_sample(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("load_sample: cannot open " + path);
  char magic[4];
  in.read(magic, 4);
  if (!in || std::string(magic, 4) != "PSEQ") {
    throw ValidationError("load_sample: bad magic in " + path);
  }
  const int label = detail::read_i32(in);
  const int c = detail::read_i32(in);
  const int d = detail::read_i32(in);
  const int h = detail::read_i32(in);
  const int w = detail::read_i32(in);
  if (!in || label < 0 || label > 1 || c < 1 || d < 1 || h < 1 || w < 1) {
    throw ValidationError("load_sample: bad header in " + path);
  }
  nn::Sample<float> sample{nn::Tensor5<float>(1, c, d, h, w), label};
  in.read(reinterpret_cast<char*>(sample.sequence.data()),
          static_cast<std::streamsize>(sample.sequence.size() * sizeof(float)));
  if (!in) throw ValidationError("load_sample: truncated payload in " + path);
  return sample;
}

inline std::vector<nn::Sample<float>> load_dataset_dir(const std::string& dir) {
  namespace fs = std::filesystem;
  if (!fs::is_directory(dir)) throw IoError("dataset directory not found: " + dir);
  std::vector<std::string> paths;
  for (const auto& entry : fs::directory_iterator(dir)) {
    if (entry.is_regular_file() && entry.path().extension() == ".seq") {
      paths.push_back(entry.path().string());
    }
  }
  std::sort(paths.begin(), paths.end());
  if (paths.empty()) throw ValidationError("dataset directory has no .seq files: " + dir);
  std::vector<nn::Sample<float>> samples;
  samples.reserve(paths.size());
  for (const std::string& p : paths) samples.push_back(load_sample(p));
  return samples;
}

}  // namespace pedintent
