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


#include "n2s/harness/image_io.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <fstream>
#include <string>

#include "n2s/errors.hpp"
#include "n2s/tensor_io.hpp"

namespace n2s {
namespace {

namespace fs = std::filesystem;

// Skips whitespace and '#' comments between header fields.
void skip_separators(std::istream& is) {
  for (;;) {
    const int c = is.peek();
    if (c == '#') {
      std::string line;
      std::getline(is, line);
    } else if (c != EOF && std::isspace(c)) {
      is.get();
    } else {
      return;
    }
  }
}

long read_header_int(std::istream& is, const fs::path& path) {
  skip_separators(is);
  long v = -1;
  if (!(is >> v) || v <= 0) throw FormatError("bad Netpbm header field: " + path.string());
  return v;
}

std::string lower_extension(const fs::path& path) {
  std::string ext = path.extension().string();
  std::transform(ext.begin(), ext.end(), ext.begin(),
                 [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
  return ext;
}

}  // namespace

Image read_netpbm(const fs::path& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw DataError("cannot open image: " + path.string());
  char magic[2] = {0, 0};
  is.read(magic, 2);
  if (!is || magic[0] != 'P' || (magic[1] != '5' && magic[1] != '6')) {
    throw FormatError("not a binary PGM/PPM file: " + path.string());
  }
  const std::size_t channels = magic[1] == '5' ? 1 : 3;
  const long width = read_header_int(is, path);
  const long height = read_header_int(is, path);
  const long maxval = read_header_int(is, path);
  if (maxval > 65535) throw FormatError("maxval above 65535: " + path.string());
  // Exactly one whitespace byte separates the header from the raster.
  if (!std::isspace(is.get())) throw FormatError("bad Netpbm header end: " + path.string());

  const std::size_t samples =
      shape_size({channels, static_cast<std::size_t>(height), static_cast<std::size_t>(width)});
  const std::size_t bytes_per = maxval > 255 ? 2 : 1;
  std::vector<unsigned char> raw(samples * bytes_per);
  is.read(reinterpret_cast<char*>(raw.data()), static_cast<std::streamsize>(raw.size()));
  if (static_cast<std::size_t>(is.gcount()) != raw.size()) {
    throw FormatError("truncated raster: " + path.string());
  }

  const auto h = static_cast<std::size_t>(height);
  const auto w = static_cast<std::size_t>(width);
  Image img{Tensor(Shape{channels, h, w}), static_cast<int>(maxval)};
  const auto scale = static_cast<double>(maxval);
  // File order is interleaved (pixel-major); the tensor is channel-major.
  for (std::size_t p = 0; p < h * w; ++p) {
    for (std::size_t c = 0; c < channels; ++c) {
      const std::size_t i = (p * channels + c) * bytes_per;
      const unsigned v = bytes_per == 2 ? (unsigned{raw[i]} << 8) | raw[i + 1] : raw[i];
      if (v > static_cast<unsigned>(maxval)) {
        throw FormatError("sample exceeds maxval: " + path.string());
      }
      img.pixels[c * h * w + p] = v / scale;
    }
  }
  return img;
}

void write_netpbm(const fs::path& path, const Tensor& pixels, int maxval) {
  if (maxval < 1 || maxval > 65535) throw InvalidArgument("write_netpbm: maxval out of range");
  const Tensor chw = pixels.ndim() == 2 ? pixels.reshaped({1, pixels.extent(0), pixels.extent(1)})
                                        : pixels;
  if (chw.ndim() != 3 || (chw.extent(0) != 1 && chw.extent(0) != 3)) {
    throw ShapeError("write_netpbm: expected [H,W], [1,H,W] or [3,H,W], got " +
                     shape_string(pixels.shape()));
  }
  const std::size_t channels = chw.extent(0);
  const std::size_t h = chw.extent(1);
  const std::size_t w = chw.extent(2);
  const std::size_t bytes_per = maxval > 255 ? 2 : 1;
  std::vector<unsigned char> raw(chw.size() * bytes_per);
  for (std::size_t p = 0; p < h * w; ++p) {
    for (std::size_t c = 0; c < channels; ++c) {
      const double v = std::clamp(chw[c * h * w + p], 0.0, 1.0);
      const auto q = static_cast<unsigned>(std::lround(v * maxval));
      const std::size_t i = (p * channels + c) * bytes_per;
      if (bytes_per == 2) {
        raw[i] = static_cast<unsigned char>(q >> 8);
        raw[i + 1] = static_cast<unsigned char>(q & 0xff);
      } else {
        raw[i] = static_cast<unsigned char>(q);
      }
    }
  }
  std::ofstream os(path, std::ios::binary);
  if (!os) throw DataError("cannot open for writing: " + path.string());
  os << (channels == 1 ? "P5" : "P6") << '\n' << w << ' ' << h << '\n' << maxval << '\n';
  os.write(reinterpret_cast<const char*>(raw.data()), static_cast<std::streamsize>(raw.size()));
  if (!os) throw DataError("write failed: " + path.string());
}

Tensor quantize(const Tensor& pixels, int maxval) {
  Tensor out(pixels.shape());
  for (std::size_t i = 0; i < pixels.size(); ++i) {
    out[i] = static_cast<double>(std::lround(std::clamp(pixels[i], 0.0, 1.0) * maxval)) / maxval;
  }
  return out;
}

Image read_image(const fs::path& path) {
  if (lower_extension(path) != ".n2st") return read_netpbm(path);
  Tensor t = read_tensor(path);
  if (t.ndim() == 2) t = t.reshaped({1, t.extent(0), t.extent(1)});
  if (t.ndim() != 3) {
    throw ShapeError("image tensor must be [H,W] or [C,H,W]: " + path.string());
  }
  return {std::move(t), 255};
}

Tensor to_gray(const Tensor& rgb) {
  if (rgb.ndim() != 3 || rgb.extent(0) != 3) {
    throw ShapeError("to_gray: expected [3,H,W], got " + shape_string(rgb.shape()));
  }
  const std::size_t n = rgb.extent(1) * rgb.extent(2);
  Tensor gray(Shape{1, rgb.extent(1), rgb.extent(2)});
  for (std::size_t p = 0; p < n; ++p) {
    gray[p] = 0.299 * rgb[p] + 0.587 * rgb[n + p] + 0.114 * rgb[2 * n + p];
  }
  return gray;
}

bool is_image_file(const fs::path& path) {
  const std::string ext = lower_extension(path);
  return ext == ".pgm" || ext == ".ppm" || ext == ".pnm" || ext == ".n2st";
}

std::vector<fs::path> list_images(const fs::path& dir) {
  if (fs::is_regular_file(dir)) return {dir};
  if (!fs::is_directory(dir)) throw DataError("no such file or directory: " + dir.string());
  std::vector<fs::path> files;
  for (const auto& entry : fs::directory_iterator(dir)) {
    if (entry.is_regular_file() && is_image_file(entry.path())) files.push_back(entry.path());
  }
  std::sort(files.begin(), files.end(),
            [](const fs::path& a, const fs::path& b) { return a.filename() < b.filename(); });
  return files;
}

}  // namespace n2s
