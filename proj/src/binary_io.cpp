/* Copyright 2026 The DeWave-cpp Authors. All Rights Reserved.

Licensed under the Apache License, Version 2.0 (the "License");
you may not use this file except in compliance with the License.
You may obtain a copy of the License at

    http://www.apache.org/licenses/LICENSE-2.0

Unless required by applicable law or agreed to in writing, software
distributed under the License is distributed on an "AS IS" BASIS,
WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
See the License for the specific language governing permissions and
limitations under the License.
==============================================================================*/

#include "dewave/binary_io.hpp"

#include <algorithm>
#include <array>
#include <fstream>
#include <iterator>

#include "dewave/errors.hpp"

namespace dewave {

namespace {

template <typename T>
T to_little(T v) {
  if constexpr (std::endian::native == std::endian::big) {
    auto raw = std::bit_cast<std::array<char, sizeof(T)>>(v);
    std::reverse(raw.begin(), raw.end());
    return std::bit_cast<T>(raw);
  }
  return v;
}

}  // namespace

void BinaryWriter::bytes(const void* data, std::size_t n) {
  const char* p = static_cast<const char*>(data);
  buf_.insert(buf_.end(), p, p + n);
}

void BinaryWriter::u32(std::uint32_t v) {
  v = to_little(v);
  bytes(&v, sizeof(v));
}

void BinaryWriter::f32(float v) {
  auto bits = to_little(std::bit_cast<std::uint32_t>(v));
  bytes(&bits, sizeof(bits));
}

void BinaryWriter::write_file(const std::filesystem::path& path) const {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw DataError(path.string() + ": cannot open for writing");
  out.write(buf_.data(), static_cast<std::streamsize>(buf_.size()));
  if (!out) throw DataError(path.string() + ": write failed");
}

BinaryReader BinaryReader::from_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError(path.string() + ": cannot open for reading");
  std::vector<char> data((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  return BinaryReader(std::move(data), path.string());
}

void BinaryReader::bytes(void* out, std::size_t n) {
  if (remaining() < n) {
    throw DataError(source_ + ": truncated (needed " + std::to_string(n) + " bytes at offset " +
                    std::to_string(pos_) + ", " + std::to_string(remaining()) + " left)");
  }
  std::memcpy(out, data_.data() + pos_, n);
  pos_ += n;
}

std::uint32_t BinaryReader::u32() {
  std::uint32_t v;
  bytes(&v, sizeof(v));
  return to_little(v);
}

float BinaryReader::f32() {
  std::uint32_t bits = u32();
  return std::bit_cast<float>(bits);
}

}  // namespace dewave
