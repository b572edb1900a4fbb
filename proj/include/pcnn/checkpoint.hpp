/*
 * Copyright 2026 The PCNN Authors.
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

// Checkpoint container:
//
//   "PCNNCKPT"            8-byte magic
//   header_len            uint64, little-endian
//   header                UTF-8 JSON: format_version, config, hyperparams,
//                         training metadata, block list, payload size, CRC-32
//   payload               float64 little-endian, blocks in header order

#pragma once

#include <bit>
#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iterator>
#include <memory>
#include <sstream>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>
#include <zlib.h>

#include "pcnn/aggregator.hpp"
#include "pcnn/common.hpp"
#include "pcnn/encoder.hpp"
#include "pcnn/optim.hpp"
#include "pcnn/serialize.hpp"

namespace pcnn {

inline constexpr int kCheckpointFormatVersion = 1;
inline constexpr char kCheckpointMagic[8] = {'P', 'C', 'N', 'N', 'C', 'K', 'P', 'T'};

struct CheckpointMeta {
  Hyperparams hyperparams;
  std::size_t steps = 0;
  double final_loss = 0.0;
  nlohmann::json extra = nlohmann::json::object();
};

struct LoadedCheckpoint {
  Model model;
  CheckpointMeta meta;
};

namespace detail {

inline void put_u64(std::string& out, std::uint64_t v) {
  for (int i = 0; i < 8; ++i) out.push_back(static_cast<char>((v >> (8 * i)) & 0xff));
}

inline std::uint64_t get_u64(const std::string& in, std::size_t at) {
  std::uint64_t v = 0;
  for (int i = 0; i < 8; ++i) v |= static_cast<std::uint64_t>(static_cast<unsigned char>(in[at + i])) << (8 * i);
  return v;
}

inline std::uint32_t crc32_of(const std::string& bytes, std::size_t from) {
  uLong crc = ::crc32(0L, Z_NULL, 0);
  const auto* data = reinterpret_cast<const Bytef*>(bytes.data() + from);
  std::size_t left = bytes.size() - from;
  while (left > 0) {
    auto chunk = static_cast<uInt>(std::min<std::size_t>(left, 1u << 30));
    crc = ::crc32(crc, data, chunk);
    data += chunk;
    left -= chunk;
  }
  return static_cast<std::uint32_t>(crc);
}

inline std::string hex32(std::uint32_t v) {
  char buf[9];
  std::snprintf(buf, sizeof buf, "%08x", v);
  return buf;
}

inline ParamList checkpoint_blocks(Model& model, EncoderDelegate* delegate) {
  auto blocks = model.params();
  if (delegate) {
    for (auto p : delegate->parameters()) {
      p.name = "encoder." + p.name;
      blocks.push_back(std::move(p));
    }
  }
  return blocks;
}

}  // namespace detail

/// Serializes a model. Delegate weights are stored when `delegate` is given.
inline std::string checkpoint_bytes(const Model& model_in, const CheckpointMeta& meta,
                                    EncoderDelegate* delegate = nullptr) {
  Model model = model_in;
  auto blocks = detail::checkpoint_blocks(model, delegate);
  std::string payload;
  nlohmann::json block_list = nlohmann::json::array();
  for (const auto& b : blocks) {
    block_list.push_back({{"name", b.name}, {"rows", b.rows}, {"cols", b.cols}});
    for (double v : b.values) detail::put_u64(payload, std::bit_cast<std::uint64_t>(v));
  }
  nlohmann::json header = {
      {"format_version", kCheckpointFormatVersion},
      {"encoder", model.encoder},
      {"dims", model.dims},
      {"scope", to_string(model.scope)},
      {"ablation", model.ablation},
      {"threshold", model.threshold},
      {"hyperparams", meta.hyperparams},
      {"training", {{"steps", meta.steps}, {"final_loss", meta.final_loss}, {"extra", meta.extra}}},
      {"blocks", block_list},
      {"payload_bytes", payload.size()},
      {"checksum", "crc32:" + detail::hex32(detail::crc32_of(payload, 0))}};
  const std::string header_text = header.dump();
  std::string out(kCheckpointMagic, sizeof kCheckpointMagic);
  detail::put_u64(out, header_text.size());
  out += header_text;
  out += payload;
  return out;
}

inline void save_checkpoint(const Model& model, const std::filesystem::path& path, const CheckpointMeta& meta = {},
                            EncoderDelegate* delegate = nullptr) {
  const auto bytes = checkpoint_bytes(model, meta, delegate);
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DataError("cannot write checkpoint " + path.string());
  out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
  if (!out) throw DataError("failed writing checkpoint " + path.string());
}

inline LoadedCheckpoint parse_checkpoint(const std::string& bytes, EncoderDelegate* delegate = nullptr) {
  constexpr std::size_t kPrefix = sizeof kCheckpointMagic + 8;
  if (bytes.size() < kPrefix || !std::equal(std::begin(kCheckpointMagic), std::end(kCheckpointMagic), bytes.begin()))
    throw CorruptCheckpointError("corrupt checkpoint: bad magic or truncated prefix");
  const std::uint64_t header_len = detail::get_u64(bytes, sizeof kCheckpointMagic);
  if (header_len > bytes.size() - kPrefix) throw CorruptCheckpointError("corrupt checkpoint: truncated header");
  nlohmann::json header;
  try {
    header = nlohmann::json::parse(bytes.substr(kPrefix, header_len));
  } catch (const nlohmann::json::exception&) {
    throw CorruptCheckpointError("corrupt checkpoint: unreadable header");
  }
  if (!header.is_object() || !header.contains("format_version") || !header["format_version"].is_number_integer())
    throw CorruptCheckpointError("corrupt checkpoint: header lacks format_version");
  const int version = header["format_version"].get<int>();
  if (version > kCheckpointFormatVersion || version < 1)
    throw UnsupportedVersionError("unsupported checkpoint format_version " + std::to_string(version) +
                                  " (this build reads up to " + std::to_string(kCheckpointFormatVersion) + ")");

  const std::size_t payload_at = kPrefix + header_len;
  LoadedCheckpoint out;
  try {
    const auto payload_bytes = header.at("payload_bytes").get<std::uint64_t>();
    if (bytes.size() - payload_at != payload_bytes)
      throw CorruptCheckpointError("corrupt checkpoint: payload is " + std::to_string(bytes.size() - payload_at) +
                                   " bytes, header declares " + std::to_string(payload_bytes));
    const auto expected = header.at("checksum").get<std::string>();
    if (expected != "crc32:" + detail::hex32(detail::crc32_of(bytes, payload_at)))
      throw CorruptCheckpointError("corrupt checkpoint: checksum mismatch");

    Model& m = out.model;
    m.encoder = header.at("encoder").get<EncoderConfig>();
    m.dims = header.at("dims").get<ModelDims>();
    m.scope = pair_scope_from_string(header.at("scope").get<std::string>());
    m.ablation = header.at("ablation").get<AblationFlags>();
    m.threshold = header.at("threshold").get<double>();
    m.pcl = PclParams::zeros(m.dims.d_s, m.dims.d_t, (m.ablation.no_pcl ? 2 : 3) * m.dims.d_t);
    m.agg = AggParams::zeros(m.pair_dim(), m.dims.d_a, m.dims.hidden, m.classifier_input_dim());
    out.meta.hyperparams = header.at("hyperparams").get<Hyperparams>();
    const auto& training = header.at("training");
    out.meta.steps = training.at("steps").get<std::size_t>();
    out.meta.final_loss = training.at("final_loss").get<double>();
    out.meta.extra = training.value("extra", nlohmann::json::object());
  } catch (const nlohmann::json::exception& e) {
    throw CorruptCheckpointError(std::string("corrupt checkpoint: malformed header: ") + e.what());
  }

  const auto& declared = header["blocks"];
  bool wants_delegate = false;
  for (const auto& b : declared) wants_delegate |= b.value("name", "").rfind("encoder.", 0) == 0;
  if (wants_delegate && !delegate)
    throw CapabilityError("checkpoint stores transformer encoder weights; a delegate is required to load it");
  auto blocks = detail::checkpoint_blocks(out.model, wants_delegate ? delegate : nullptr);
  if (declared.size() != blocks.size())
    throw CorruptCheckpointError("corrupt checkpoint: block count does not match the declared model shape");
  std::size_t at = payload_at;
  for (std::size_t k = 0; k < blocks.size(); ++k) {
    const auto& d = declared[k];
    if (d.value("name", "") != blocks[k].name || d.value("rows", -1) != blocks[k].rows ||
        d.value("cols", -1) != blocks[k].cols)
      throw CorruptCheckpointError("corrupt checkpoint: block " + std::to_string(k) + " shape mismatch");
    for (double& v : blocks[k].values) {
      v = std::bit_cast<double>(detail::get_u64(bytes, at));
      at += 8;
    }
  }
  if (at != bytes.size()) throw CorruptCheckpointError("corrupt checkpoint: trailing payload bytes");
  return out;
}

inline LoadedCheckpoint load_checkpoint(const std::filesystem::path& path, EncoderDelegate* delegate = nullptr) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot read checkpoint " + path.string());
  std::string bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  return parse_checkpoint(bytes, delegate);
}

}  // namespace pcnn
