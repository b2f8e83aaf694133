// Copyright (c) the n2s Project Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//      http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include "n2s/tensor_io.hpp"

#include <array>
#include <bit>
#include <cstring>
#include <fstream>
#include <limits>

#include "n2s/errors.hpp"

namespace n2s {

void put_u32(std::ostream& os, std::uint32_t v) {
  const std::array<char, 4> b = {static_cast<char>(v & 0xff), static_cast<char>((v >> 8) & 0xff),
                                 static_cast<char>((v >> 16) & 0xff),
                                 static_cast<char>((v >> 24) & 0xff)};
  os.write(b.data(), b.size());
}

std::uint32_t get_u32(std::istream& is, const char* what) {
  std::array<unsigned char, 4> b{};
  if (!is.read(reinterpret_cast<char*>(b.data()), 4)) {
    throw FormatError(std::string("truncated file while reading ") + what);
  }
  return static_cast<std::uint32_t>(b[0]) | (static_cast<std::uint32_t>(b[1]) << 8) |
         (static_cast<std::uint32_t>(b[2]) << 16) | (static_cast<std::uint32_t>(b[3]) << 24);
}

void put_f32_array(std::ostream& os, std::span<const double> values) {
  std::vector<char> buf(values.size() * 4);
  for (std::size_t i = 0; i < values.size(); ++i) {
    const auto bits = std::bit_cast<std::uint32_t>(static_cast<float>(values[i]));
    for (int k = 0; k < 4; ++k) buf[4 * i + k] = static_cast<char>((bits >> (8 * k)) & 0xff);
  }
  os.write(buf.data(), static_cast<std::streamsize>(buf.size()));
}

void get_f32_array(std::istream& is, std::span<double> values, const char* what) {
  std::vector<unsigned char> buf(values.size() * 4);
  if (!is.read(reinterpret_cast<char*>(buf.data()), static_cast<std::streamsize>(buf.size()))) {
    throw FormatError(std::string("truncated payload in ") + what);
  }
  for (std::size_t i = 0; i < values.size(); ++i) {
    std::uint32_t bits = 0;
    for (int k = 0; k < 4; ++k) bits |= static_cast<std::uint32_t>(buf[4 * i + k]) << (8 * k);
    values[i] = static_cast<double>(std::bit_cast<float>(bits));
  }
}

void write_tensor(std::ostream& os, const Tensor& t) {
  if (t.empty()) throw InvalidArgument("write_tensor: empty tensor");
  if (t.ndim() > 255) throw InvalidArgument("write_tensor: more than 255 dimensions");
  os.write(kTensorMagic, 4);
  const char head[3] = {static_cast<char>(kTensorVersion), static_cast<char>(kDtypeFloat32),
                        static_cast<char>(t.ndim())};
  os.write(head, 3);
  for (std::size_t e : t.shape()) {
    if (e > std::numeric_limits<std::uint32_t>::max()) {
      throw InvalidArgument("write_tensor: extent exceeds u32");
    }
    put_u32(os, static_cast<std::uint32_t>(e));
  }
  put_f32_array(os, t.values());
  if (!os) throw DataError("write_tensor: stream write failed");
}

Tensor read_tensor(std::istream& is) {
  char magic[4];
  if (!is.read(magic, 4)) throw FormatError("tensor file: truncated header");
  if (std::memcmp(magic, kTensorMagic, 4) != 0) throw FormatError("tensor file: bad magic");
  unsigned char head[3];
  if (!is.read(reinterpret_cast<char*>(head), 3)) throw FormatError("tensor file: truncated header");
  if (head[0] != kTensorVersion) {
    throw FormatError("tensor file: unsupported version " + std::to_string(head[0]));
  }
  if (head[1] != kDtypeFloat32) {
    throw FormatError("tensor file: unsupported dtype " + std::to_string(head[1]));
  }
  const std::size_t ndim = head[2];
  if (ndim == 0) throw FormatError("tensor file: zero-dimensional header");
  Shape shape(ndim);
  std::size_t count = 1;
  for (auto& e : shape) {
    e = get_u32(is, "tensor extents");
    if (e == 0) throw FormatError("tensor file: zero extent");
    if (count > std::numeric_limits<std::size_t>::max() / 4 / e) {
      throw FormatError("tensor file: extents overflow");
    }
    count *= e;
  }
  // Refuse to allocate for a payload the stream cannot hold.
  const auto here = is.tellg();
  if (here != std::streampos(-1)) {
    is.seekg(0, std::ios::end);
    const auto end = is.tellg();
    is.seekg(here);
    if (end - here < static_cast<std::streamoff>(count * 4)) {
      throw FormatError("tensor file: truncated payload");
    }
  }
  Tensor t(std::move(shape));
  get_f32_array(is, t.values(), "tensor file");
  return t;
}

void write_tensor(const std::filesystem::path& path, const Tensor& t) {
  std::ofstream os(path, std::ios::binary);
  if (!os) throw DataError("cannot open for writing: " + path.string());
  write_tensor(os, t);
}

Tensor read_tensor(const std::filesystem::path& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw DataError("cannot open: " + path.string());
  return read_tensor(is);
}

Tensor to_float32_precision(const Tensor& t) {
  Tensor out = t;
  for (double& v : out.values()) v = static_cast<double>(static_cast<float>(v));
  return out;
}

}  // namespace n2s
