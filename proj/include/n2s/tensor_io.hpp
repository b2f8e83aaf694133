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

#ifndef N2S_TENSOR_IO_HPP_
#define N2S_TENSOR_IO_HPP_

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <span>

#include "n2s/tensor.hpp"

namespace n2s {

// Flat tensor file:
//   "N2ST" | version 0x01 | dtype 0x01 (float32) | ndim (u8)
//   | ndim x u32 little-endian extents | row-major float32 little-endian
inline constexpr char kTensorMagic[4] = {'N', '2', 'S', 'T'};
inline constexpr std::uint8_t kTensorVersion = 1;
inline constexpr std::uint8_t kDtypeFloat32 = 1;

void write_tensor(const std::filesystem::path& path, const Tensor& t);
Tensor read_tensor(const std::filesystem::path& path);

void write_tensor(std::ostream& os, const Tensor& t);
Tensor read_tensor(std::istream& is);

// Little-endian primitives shared with the parameter file format.
void put_u32(std::ostream& os, std::uint32_t v);
std::uint32_t get_u32(std::istream& is, const char* what);
void put_f32_array(std::ostream& os, std::span<const double> values);
void get_f32_array(std::istream& is, std::span<double> values, const char* what);

// Rounds every value through float32, the precision stored on disk.
Tensor to_float32_precision(const Tensor& t);

}  // namespace n2s

#endif  // N2S_TENSOR_IO_HPP_
