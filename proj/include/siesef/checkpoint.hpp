// Copyright 2026 The siesef Authors. All Rights Reserved.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#pragma once

#include <filesystem>
#include <map>
#include <span>
#include <string>
#include <vector>

#include "siesef/autodiff.hpp"
#include "siesef/binary.hpp"
#include "siesef/tensor.hpp"

// Versioned tensor container used for checkpoints and encoding dumps:
//   "SIESEF01", then per tensor:
//   name length (u32) | UTF-8 name | rank (u32) | dims (u32 each) | f32 payload
// All integers and floats little-endian.
namespace siesef::nn {

inline constexpr std::string_view kTensorFileMagic = "SIESEF01";

struct NamedTensor {
  std::string name;
  Tensor tensor;

  friend bool operator==(const NamedTensor&, const NamedTensor&) = default;
};

inline io::Bytes encode_tensor_file(std::span<const NamedTensor> tensors) {
  io::Bytes out;
  io::put_bytes(out, kTensorFileMagic);
  for (const auto& t : tensors) {
    io::put_u32(out, static_cast<std::uint32_t>(t.name.size()));
    io::put_bytes(out, t.name);
    io::put_u32(out, static_cast<std::uint32_t>(t.tensor.rank()));
    for (auto d : t.tensor.shape()) io::put_u32(out, static_cast<std::uint32_t>(d));
    for (float v : t.tensor.data()) io::put_f32(out, v);
  }
  return out;
}

inline std::vector<NamedTensor> decode_tensor_file(std::span<const std::uint8_t> bytes) {
  io::ByteReader in(bytes);
  if (in.string(kTensorFileMagic.size(), "magic") != kTensorFileMagic) {
    throw FormatError("bad tensor file magic at byte 0 (expected SIESEF01)");
  }
  std::vector<NamedTensor> out;
  while (!in.at_end()) {
    NamedTensor t;
    const std::uint32_t name_len = in.u32("name length");
    t.name = in.string(name_len, "tensor name");
    const std::uint32_t rank = in.u32("rank of '" + t.name + "'");
    if (rank == 0 || rank > 8) {
      throw FormatError("tensor '" + t.name + "' has unsupported rank " +
                        std::to_string(rank) + " at byte " + std::to_string(in.offset() - 4));
    }
    Shape shape;
    std::size_t count = 1;
    for (std::uint32_t r = 0; r < rank; ++r) {
      const std::uint32_t d = in.u32("dims of '" + t.name + "'");
      if (d == 0) {
        throw FormatError("tensor '" + t.name + "' has a zero dimension at byte " +
                          std::to_string(in.offset() - 4));
      }
      shape.push_back(d);
      count *= d;
      if (count > in.remaining()) {
        throw FormatError("truncated input: tensor '" + t.name + "' declares " + siesef::to_string(shape) +
                          ", only " + std::to_string(in.remaining()) + " bytes left");
      }
    }
    in.require(count * 4, "payload of '" + t.name + "'");
    std::vector<float> data(count);
    for (auto& v : data) v = in.f32();
    t.tensor = Tensor(std::move(shape), std::move(data));
    out.push_back(std::move(t));
  }
  return out;
}

inline void write_tensor_file(const std::filesystem::path& path,
                              std::span<const NamedTensor> tensors) {
  io::write_file(path, encode_tensor_file(tensors));
}

inline std::vector<NamedTensor> read_tensor_file(const std::filesystem::path& path) {
  return decode_tensor_file(io::read_file(path));
}

inline std::vector<NamedTensor> snapshot(std::span<Parameter<float>* const> params) {
  std::vector<NamedTensor> out;
  out.reserve(params.size());
  for (const auto* p : params) out.push_back({p->name, p->value});
  return out;
}

// Loads tensors into parameters by name. Every parameter must be present
// with a matching shape; extra tensors in the file are an error too.
inline void restore(std::span<Parameter<float>* const> params,
                    std::span<const NamedTensor> tensors) {
  std::map<std::string, const Tensor*> by_name;
  for (const auto& t : tensors) {
    if (!by_name.emplace(t.name, &t.tensor).second) {
      throw FormatError("duplicate tensor '" + t.name + "' in checkpoint");
    }
  }
  for (auto* p : params) {
    auto it = by_name.find(p->name);
    if (it == by_name.end()) throw FormatError("checkpoint lacks parameter '" + p->name + "'");
    if (it->second->shape() != p->value.shape()) {
      throw ShapeError("checkpoint tensor '" + p->name + "' has shape " +
                       to_string(it->second->shape()) + ", model expects " +
                       to_string(p->value.shape()));
    }
    p->value = *it->second;
    p->zero_grad();
    by_name.erase(it);
  }
  if (!by_name.empty()) {
    throw FormatError("checkpoint has unknown tensor '" + by_name.begin()->first + "'");
  }
}

}  // namespace siesef::nn
