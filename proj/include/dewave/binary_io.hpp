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

#pragma once

#include <bit>
#include <cstdint>
#include <cstring>
#include <filesystem>
#include <string>
#include <vector>

namespace dewave {

// Little-endian byte buffer writer for the binary file formats.
class BinaryWriter {
 public:
  void bytes(const void* data, std::size_t n);
  void u32(std::uint32_t v);
  void f32(float v);
  const std::vector<char>& buffer() const { return buf_; }
  // Throws DataError if the file cannot be written.
  void write_file(const std::filesystem::path& path) const;

 private:
  std::vector<char> buf_;
};

class BinaryReader {
 public:
  BinaryReader(std::vector<char> data, std::string source)
      : data_(std::move(data)), source_(std::move(source)) {}
  static BinaryReader from_file(const std::filesystem::path& path);

  // All reads throw DataError naming the source when the data runs out.
  void bytes(void* out, std::size_t n);
  std::uint32_t u32();
  float f32();
  std::size_t remaining() const { return data_.size() - pos_; }
  bool at_end() const { return pos_ == data_.size(); }
  const std::string& source() const { return source_; }

 private:
  std::vector<char> data_;
  std::size_t pos_ = 0;
  std::string source_;
};

}  // namespace dewave
