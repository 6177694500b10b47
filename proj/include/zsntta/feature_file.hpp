/*
 * Copyright 2026 The zsntta Authors.
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 *     https://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */

#pragma once

// Binary "ZNTA" feature file, all little-endian:
//   0   char[4] magic "ZNTA"
//   4   u32     version (1)
//   8   u32     D
//   12  u32     K
//   16  u64     record_count
//   24  f32     classifier[K][D]          (row-major)
//   ..  record_count x { i32 label; f32 feature[D] }   (label -1 = noisy)
// Class names live next to the file in "<path>.names", one per line.

#include <bit>
#include <cstdint>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <iterator>
#include <string>
#include <utility>
#include <vector>

#include "zsntta/error.hpp"
#include "zsntta/feature.hpp"

namespace zsntta {

inline constexpr char kFeatureFileMagic[4] = {'Z', 'N', 'T', 'A'};
inline constexpr std::uint32_t kFeatureFileVersion = 1;
inline constexpr std::size_t kFeatureFileHeaderBytes = 24;

/// Everything stored in one feature file. `classifier` may be empty (noise
/// banks carry no classifier block).
struct FeatureFileContents {
  std::uint32_t dim = 0;
  std::vector<FeatureVector> classifier;
  std::vector<StreamRecord> records;
};

namespace detail {

inline void put_u32(std::vector<unsigned char>& out, std::uint32_t v) {
  for (int i = 0; i < 4; ++i) out.push_back(static_cast<unsigned char>(v >> (8 * i)));
}

inline void put_u64(std::vector<unsigned char>& out, std::uint64_t v) {
  for (int i = 0; i < 8; ++i) out.push_back(static_cast<unsigned char>(v >> (8 * i)));
}

inline void put_f32(std::vector<unsigned char>& out, double v) {
  const auto f = static_cast<float>(v);
  if (!std::isfinite(f)) throw Error(ErrorCode::kNonFinite, "value does not fit in f32");
  put_u32(out, std::bit_cast<std::uint32_t>(f));
}

inline std::uint32_t get_u32(const unsigned char* p) {
  std::uint32_t v = 0;
  for (int i = 3; i >= 0; --i) v = (v << 8) | p[i];
  return v;
}

inline std::uint64_t get_u64(const unsigned char* p) {
  std::uint64_t v = 0;
  for (int i = 7; i >= 0; --i) v = (v << 8) | p[i];
  return v;
}

inline double get_f32(const unsigned char* p) {
  const float f = std::bit_cast<float>(get_u32(p));
  if (!std::isfinite(f)) throw Error(ErrorCode::kNonFinite, "non-finite value in payload");
  return static_cast<double>(f);
}

inline std::vector<double> get_f32_row(const unsigned char* p, std::size_t dim) {
  std::vector<double> row(dim);
  for (std::size_t j = 0; j < dim; ++j) row[j] = get_f32(p + 4 * j);
  return row;
}

inline void write_bytes(const std::filesystem::path& path, const std::vector<unsigned char>& bytes) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error(ErrorCode::kIoFailure, "cannot open " + path.string() + " for writing");
  out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
  out.flush();
  if (!out) throw Error(ErrorCode::kIoFailure, "write failed for " + path.string());
}

inline std::vector<unsigned char> read_bytes(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::kIoFailure, "cannot open " + path.string());
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

}  // namespace detail

inline std::filesystem::path class_names_path(const std::filesystem::path& path) {
  auto p = path;
  p += ".names";
  return p;
}

/// Serializes `contents`. Labels are validated against the classifier row
/// count unless the classifier block is empty, in which case only -1 is
/// accepted.
inline std::vector<unsigned char> encode_feature_file(const FeatureFileContents& contents) {
  const std::size_t dim = contents.dim;
  if (dim == 0) throw Error(ErrorCode::kBadSpec, "D must be positive");
  const std::size_t k = contents.classifier.size();
  std::vector<unsigned char> out;
  out.reserve(kFeatureFileHeaderBytes + 4 * k * dim + contents.records.size() * (4 + 4 * dim));
  out.insert(out.end(), std::begin(kFeatureFileMagic), std::end(kFeatureFileMagic));
  detail::put_u32(out, kFeatureFileVersion);
  detail::put_u32(out, static_cast<std::uint32_t>(dim));
  detail::put_u32(out, static_cast<std::uint32_t>(k));
  detail::put_u64(out, contents.records.size());
  for (const auto& row : contents.classifier) {
    if (row.dim() != dim) throw Error(ErrorCode::kDimMismatch, "classifier row dim");
    for (double x : row.values()) detail::put_f32(out, x);
  }
  for (const auto& rec : contents.records) {
    if (rec.feature.dim() != dim) throw Error(ErrorCode::kDimMismatch, "record dim");
    const int label = rec.truth.raw();
    if (label < Label::kNoisyValue || (label >= 0 && static_cast<std::size_t>(label) >= k)) {
      throw Error(ErrorCode::kLabelOutOfRange, "label " + std::to_string(label));
    }
    detail::put_u32(out, static_cast<std::uint32_t>(label));
    for (double x : rec.feature.values()) detail::put_f32(out, x);
  }
  return out;
}

inline FeatureFileContents decode_feature_file(const std::vector<unsigned char>& bytes) {
  if (bytes.size() < 4 || std::memcmp(bytes.data(), kFeatureFileMagic, 4) != 0) {
    throw Error(ErrorCode::kBadMagic, "missing ZNTA magic");
  }
  if (bytes.size() < kFeatureFileHeaderBytes) {
    throw Error(ErrorCode::kTruncatedPayload, "header shorter than 24 bytes");
  }
  const unsigned char* p = bytes.data();
  const std::uint32_t version = detail::get_u32(p + 4);
  if (version != kFeatureFileVersion) {
    throw Error(ErrorCode::kUnsupportedVersion, "version " + std::to_string(version));
  }
  FeatureFileContents c;
  c.dim = detail::get_u32(p + 8);
  const std::uint64_t k = detail::get_u32(p + 12);
  const std::uint64_t count = detail::get_u64(p + 16);
  if (c.dim == 0) throw Error(ErrorCode::kBadSpec, "D must be positive");

  // Sizes are checked in 128-bit so a hostile record_count cannot wrap.
  __extension__ typedef unsigned __int128 u128;
  const u128 record_bytes = 4 + static_cast<u128>(4) * c.dim;
  const u128 expected = kFeatureFileHeaderBytes + static_cast<u128>(4) * k * c.dim +
                        static_cast<u128>(count) * record_bytes;
  if (static_cast<u128>(bytes.size()) < expected) {
    throw Error(ErrorCode::kTruncatedPayload, "payload shorter than header declares");
  }
  if (static_cast<u128>(bytes.size()) > expected) {
    throw Error(ErrorCode::kTrailingBytes, "payload longer than header declares");
  }

  std::size_t off = kFeatureFileHeaderBytes;
  c.classifier.reserve(k);
  for (std::uint64_t i = 0; i < k; ++i) {
    c.classifier.emplace_back(detail::get_f32_row(p + off, c.dim));
    off += 4 * c.dim;
  }
  c.records.reserve(count);
  for (std::uint64_t i = 0; i < count; ++i) {
    const auto label = static_cast<std::int32_t>(detail::get_u32(p + off));
    if (label < Label::kNoisyValue || (label >= 0 && static_cast<std::uint64_t>(label) >= k)) {
      throw Error(ErrorCode::kLabelOutOfRange,
                  "record " + std::to_string(i) + " has label " + std::to_string(label));
    }
    off += 4;
    c.records.push_back({FeatureVector(detail::get_f32_row(p + off, c.dim)), Label::from_raw(label),
                         Origin::original()});
    off += 4 * c.dim;
  }
  return c;
}

inline std::vector<std::string> read_class_names(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::kIoFailure, "cannot open " + path.string());
  std::vector<std::string> names;
  for (std::string line; std::getline(in, line);) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    names.push_back(line);
  }
  return names;
}

inline void write_class_names(const std::filesystem::path& path, const std::vector<std::string>& names) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw Error(ErrorCode::kIoFailure, "cannot open " + path.string() + " for writing");
  for (const auto& n : names) out << n << '\n';
  out.flush();
  if (!out) throw Error(ErrorCode::kIoFailure, "write failed for " + path.string());
}

struct FeatureFile {
  ClassifierBank bank;
  std::vector<StreamRecord> records;
};

/// Reads a feature file and its class-name sidecar (default names are used
/// when the sidecar is absent).
inline FeatureFile read_feature_file(const std::filesystem::path& path) {
  FeatureFileContents c = decode_feature_file(detail::read_bytes(path));
  if (c.classifier.empty()) throw Error(ErrorCode::kBadSpec, "feature file has no classifier rows");
  const auto names_path = class_names_path(path);
  std::vector<std::string> names = std::filesystem::exists(names_path)
                                       ? read_class_names(names_path)
                                       : ClassifierBank::default_names(c.classifier.size());
  return {ClassifierBank(std::move(c.classifier), std::move(names)), std::move(c.records)};
}

inline void write_feature_file(const ClassifierBank& bank, const std::vector<StreamRecord>& records,
                               const std::filesystem::path& path) {
  FeatureFileContents c{static_cast<std::uint32_t>(bank.dim()), bank.prototypes(), records};
  detail::write_bytes(path, encode_feature_file(c));
  write_class_names(class_names_path(path), bank.class_names());
}

/// Noise banks are feature files with K = 0 and every label -1.
inline void write_noise_bank(const NoiseBank& bank, const std::filesystem::path& path) {
  if (bank.features.empty()) throw Error(ErrorCode::kEmptyBank, "noise bank is empty");
  FeatureFileContents c;
  c.dim = static_cast<std::uint32_t>(bank.features.front().dim());
  for (const auto& f : bank.features) c.records.push_back({f, Label::noisy(), Origin::original()});
  detail::write_bytes(path, encode_feature_file(c));
}

/// Reads the records of any feature file as a noise bank; the classifier
/// block, if present, is ignored.
inline NoiseBank read_noise_bank(const std::filesystem::path& path, NoiseType type) {
  FeatureFileContents c = decode_feature_file(detail::read_bytes(path));
  NoiseBank bank{type, {}};
  bank.features.reserve(c.records.size());
  for (auto& r : c.records) bank.features.push_back(std::move(r.feature));
  if (bank.features.empty()) throw Error(ErrorCode::kEmptyBank, path.string() + " has no records");
  return bank;
}

}  // namespace zsntta
