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


#ifndef N2S_HARNESS_IMAGE_IO_HPP_
#define N2S_HARNESS_IMAGE_IO_HPP_

#include <filesystem>
#include <vector>

#include "n2s/tensor.hpp"

namespace n2s {

// A decoded image: [C, H, W] samples in [0, 1] (C = 1 for P5, 3 for P6) and
// the file's maxval.
struct Image {
  Tensor pixels;
  int maxval = 255;
};

// Binary PGM (P5) and PPM (P6). maxval up to 255 uses one byte per sample,
// up to 65535 two big-endian bytes. Samples map to v / maxval.
Image read_netpbm(const std::filesystem::path& path);

// Writes [C, H, W] (C = 1 or 3) or [H, W]. Values are clamped to [0, 1] and
// rounded to the nearest level.
void write_netpbm(const std::filesystem::path& path, const Tensor& pixels, int maxval = 255);

// Round trip through write_netpbm's quantizer without touching disk.
Tensor quantize(const Tensor& pixels, int maxval = 255);

// Loads a Netpbm file, or an N2ST tensor of shape [H, W] or [C, H, W]
// (maxval reported as 255). Always returns [C, H, W].
Image read_image(const std::filesystem::path& path);

// Rec.601 luma of a 3-channel image, as a 1-channel image.
Tensor to_gray(const Tensor& rgb);

bool is_image_file(const std::filesystem::path& path);

// Image files (.pgm, .ppm, .pnm, .n2st) directly inside `dir`, sorted by
// file name. A regular file is returned as the only entry.
std::vector<std::filesystem::path> list_images(const std::filesystem::path& dir);

}  // namespace n2s

#endif  // N2S_HARNESS_IMAGE_IO_HPP_
