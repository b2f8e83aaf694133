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

#include "n2s/net.hpp"

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <cstring>
#include <fstream>
#include <sstream>

#include "n2s/errors.hpp"
#include "n2s/tensor_io.hpp"

namespace n2s {
namespace {

using Matrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using ConstMatrixMap = Eigen::Map<const Matrix>;
using MatrixMap = Eigen::Map<Matrix>;

constexpr char kParamsMagic[4] = {'N', '2', 'S', 'P'};
constexpr std::uint8_t kParamsVersion = 1;

// Activations are kept channel-major across the batch: row c of a
// (channels x B*H*W) matrix holds channel c of every image.
struct Geometry {
  std::size_t batch = 1;
  std::size_t height = 1;
  std::size_t width = 1;
  std::size_t pixels() const { return height * width; }
  std::size_t columns() const { return batch * height * width; }
};

struct LayerView {
  std::size_t in = 0;
  std::size_t out = 0;
  std::size_t weight_offset = 0;
  std::size_t bias_offset = 0;
};

std::vector<LayerView> layer_views(const LayerSpec& spec) {
  std::vector<LayerView> views;
  const std::size_t taps = static_cast<std::size_t>(spec.kernel) * spec.kernel;
  std::size_t offset = 0;
  for (std::size_t l = 0; l < spec.layer_count(); ++l) {
    LayerView v;
    v.in = spec.channels[l];
    v.out = spec.channels[l + 1];
    v.weight_offset = offset;
    offset += v.out * v.in * taps;
    v.bias_offset = offset;
    offset += v.out;
    views.push_back(v);
  }
  return views;
}

// Row (c, ky, kx) of the column matrix holds input channel c shifted by
// (ky - pad, kx - pad), with coordinates clamped to the image (edge replication).
// out[x] = in[clamp(x + dx)], split so the interior is a straight copy.
void shift_row(const double* in, double* out, std::ptrdiff_t w, std::ptrdiff_t dx) {
  const std::ptrdiff_t lo = std::clamp<std::ptrdiff_t>(-dx, 0, w);
  const std::ptrdiff_t hi = std::clamp<std::ptrdiff_t>(w - dx, lo, w);
  for (std::ptrdiff_t x = 0; x < lo; ++x) out[x] = in[0];
  std::copy(in + lo + dx, in + hi + dx, out + lo);
  for (std::ptrdiff_t x = hi; x < w; ++x) out[x] = in[w - 1];
}

// Adjoint of shift_row.
void unshift_row(const double* in, double* out, std::ptrdiff_t w, std::ptrdiff_t dx) {
  const std::ptrdiff_t lo = std::clamp<std::ptrdiff_t>(-dx, 0, w);
  const std::ptrdiff_t hi = std::clamp<std::ptrdiff_t>(w - dx, lo, w);
  for (std::ptrdiff_t x = 0; x < lo; ++x) out[0] += in[x];
  for (std::ptrdiff_t x = lo; x < hi; ++x) out[x + dx] += in[x];
  for (std::ptrdiff_t x = hi; x < w; ++x) out[w - 1] += in[x];
}

Matrix im2col(const Matrix& act, const Geometry& g, std::size_t kernel) {
  const std::size_t channels = static_cast<std::size_t>(act.rows());
  const auto pad = static_cast<std::ptrdiff_t>(kernel / 2);
  const auto h = static_cast<std::ptrdiff_t>(g.height);
  const auto w = static_cast<std::ptrdiff_t>(g.width);
  Matrix col(channels * kernel * kernel, g.columns());
  for (std::size_t c = 0; c < channels; ++c) {
    const double* src = act.row(c).data();
    for (std::size_t ky = 0; ky < kernel; ++ky) {
      for (std::size_t kx = 0; kx < kernel; ++kx) {
        double* dst = col.row((c * kernel + ky) * kernel + kx).data();
        const auto dy = static_cast<std::ptrdiff_t>(ky) - pad;
        const auto dx = static_cast<std::ptrdiff_t>(kx) - pad;
        for (std::size_t b = 0; b < g.batch; ++b) {
          const double* img = src + b * g.pixels();
          double* out = dst + b * g.pixels();
          for (std::ptrdiff_t y = 0; y < h; ++y) {
            const double* row = img + std::clamp<std::ptrdiff_t>(y + dy, 0, h - 1) * w;
            shift_row(row, out + y * w, w, dx);
          }
        }
      }
    }
  }
  return col;
}

// Adjoint of im2col: scatter-add each shifted row back to its source pixel.
Matrix col2im(const Matrix& dcol, std::size_t channels, const Geometry& g, std::size_t kernel) {
  const auto pad = static_cast<std::ptrdiff_t>(kernel / 2);
  const auto h = static_cast<std::ptrdiff_t>(g.height);
  const auto w = static_cast<std::ptrdiff_t>(g.width);
  Matrix act = Matrix::Zero(channels, g.columns());
  for (std::size_t c = 0; c < channels; ++c) {
    double* dst = act.row(c).data();
    for (std::size_t ky = 0; ky < kernel; ++ky) {
      for (std::size_t kx = 0; kx < kernel; ++kx) {
        const double* src = dcol.row((c * kernel + ky) * kernel + kx).data();
        const auto dy = static_cast<std::ptrdiff_t>(ky) - pad;
        const auto dx = static_cast<std::ptrdiff_t>(kx) - pad;
        for (std::size_t b = 0; b < g.batch; ++b) {
          double* img = dst + b * g.pixels();
          const double* in = src + b * g.pixels();
          for (std::ptrdiff_t y = 0; y < h; ++y) {
            double* row = img + std::clamp<std::ptrdiff_t>(y + dy, 0, h - 1) * w;
            unshift_row(in + y * w, row, w, dx);
          }
        }
      }
    }
  }
  return act;
}

Geometry geometry_of(const Tensor& y, const LayerSpec& spec) {
  Geometry g;
  std::size_t channels = 0;
  if (y.ndim() == 3) {
    channels = y.extent(0);
    g.height = y.extent(1);
    g.width = y.extent(2);
  } else if (y.ndim() == 4) {
    g.batch = y.extent(0);
    channels = y.extent(1);
    g.height = y.extent(2);
    g.width = y.extent(3);
  } else {
    throw ShapeError("net input must be [C,H,W] or [B,C,H,W], got " + shape_string(y.shape()));
  }
  if (channels != spec.in_channels()) {
    throw ShapeError("net expects " + std::to_string(spec.in_channels()) +
                     " input channels, got " + std::to_string(channels));
  }
  if (spec.in_channels() != spec.out_channels()) {
    throw ShapeError("net output channels differ from input channels");
  }
  return g;
}

Matrix to_channel_major(const Tensor& y, const Geometry& g, std::size_t channels) {
  Matrix act(channels, g.columns());
  for (std::size_t b = 0; b < g.batch; ++b) {
    for (std::size_t c = 0; c < channels; ++c) {
      std::memcpy(act.row(c).data() + b * g.pixels(), y.data() + (b * channels + c) * g.pixels(),
                  g.pixels() * sizeof(double));
    }
  }
  return act;
}

Tensor from_channel_major(const Matrix& act, const Geometry& g, const Shape& shape) {
  Tensor out(shape);
  const std::size_t channels = static_cast<std::size_t>(act.rows());
  for (std::size_t b = 0; b < g.batch; ++b) {
    for (std::size_t c = 0; c < channels; ++c) {
      std::memcpy(out.data() + (b * channels + c) * g.pixels(), act.row(c).data() + b * g.pixels(),
                  g.pixels() * sizeof(double));
    }
  }
  return out;
}

// On a 1x1 image every tap of an edge-replicated kernel reads the centre
// pixel, so the layer is a dense map with the taps summed.
bool single_pixel(const Geometry& g) { return g.height == 1 && g.width == 1; }

Matrix summed_taps(const ConstMatrixMap& weights, std::size_t in, std::size_t taps) {
  Matrix w = Matrix::Zero(weights.rows(), in);
  for (std::size_t c = 0; c < in; ++c) {
    w.col(c) = weights.middleCols(c * taps, taps).rowwise().sum();
  }
  return w;
}

// Runs the stack, keeping each layer's input for the backward pass.
std::vector<Matrix> run_layers(const LayerSpec& spec, const Tensor& params, const Matrix& input,
                               const Geometry& g) {
  const auto views = layer_views(spec);
  const std::size_t taps = static_cast<std::size_t>(spec.kernel) * spec.kernel;
  std::vector<Matrix> acts;
  acts.reserve(views.size() + 1);
  acts.push_back(input);
  for (std::size_t l = 0; l < views.size(); ++l) {
    const LayerView& v = views[l];
    ConstMatrixMap weights(params.data() + v.weight_offset, v.out, v.in * taps);
    Eigen::Map<const Eigen::VectorXd> bias(params.data() + v.bias_offset, v.out);
    Matrix z = single_pixel(g) ? Matrix(summed_taps(weights, v.in, taps) * acts.back())
                               : Matrix(weights * im2col(acts.back(), g, spec.kernel));
    z.colwise() += bias;
    if (l + 1 < views.size() && spec.activation == Activation::kRelu) {
      z = z.cwiseMax(0.0);
    }
    acts.push_back(std::move(z));
  }
  return acts;
}

}  // namespace

std::string LayerSpec::to_string() const {
  std::ostringstream os;
  for (std::size_t i = 0; i < channels.size(); ++i) os << (i ? "-" : "") << channels[i];
  os << " k" << kernel << (activation == Activation::kRelu ? " relu" : " linear");
  return os.str();
}

LayerSpec reference_architecture(std::uint32_t image_channels, std::uint32_t width,
                                 std::uint32_t layers) {
  if (layers < 1) throw InvalidArgument("reference_architecture: need at least one layer");
  LayerSpec spec;
  spec.channels.push_back(image_channels);
  for (std::uint32_t l = 1; l < layers; ++l) spec.channels.push_back(width);
  spec.channels.push_back(image_channels);
  spec.kernel = 3;
  spec.activation = Activation::kRelu;
  return spec;
}

void validate(const LayerSpec& spec) {
  if (spec.channels.size() < 2) throw InvalidArgument("layer spec needs at least one layer");
  for (auto c : spec.channels) {
    if (c == 0) throw InvalidArgument("layer spec has a zero channel count");
  }
  if (spec.kernel == 0 || spec.kernel % 2 == 0) {
    throw InvalidArgument("layer spec kernel must be odd");
  }
  if (spec.activation != Activation::kNone && spec.activation != Activation::kRelu) {
    throw InvalidArgument("layer spec has an unknown activation");
  }
}

std::size_t parameter_count(const LayerSpec& spec) {
  validate(spec);
  const auto views = layer_views(spec);
  return views.back().bias_offset + views.back().out;
}

ResidualNet::ResidualNet(LayerSpec spec)
    : spec_(std::move(spec)), params_(Shape{parameter_count(spec_)}, 0.0) {}

void ResidualNet::set_parameters(Tensor params) {
  if (params.shape() != params_.shape()) {
    throw ShapeError("parameter tensor " + shape_string(params.shape()) + " does not fit spec " +
                     spec_.to_string());
  }
  params_ = std::move(params);
}

void ResidualNet::initialize(Rng& rng) {
  const std::size_t taps = static_cast<std::size_t>(spec_.kernel) * spec_.kernel;
  for (const LayerView& v : layer_views(spec_)) {
    const double limit = std::sqrt(6.0 / static_cast<double>((v.in + v.out) * taps));
    for (std::size_t i = 0; i < v.out * v.in * taps; ++i) {
      params_[v.weight_offset + i] = (2.0 * rng.uniform() - 1.0) * limit;
    }
    for (std::size_t i = 0; i < v.out; ++i) params_[v.bias_offset + i] = 0.0;
  }
}

Tensor ResidualNet::forward(const Tensor& y) const {
  const Geometry g = geometry_of(y, spec_);
  const auto acts = run_layers(spec_, params_, to_channel_major(y, g, spec_.in_channels()), g);
  return from_channel_major(acts.back(), g, y.shape());
}

Tensor ResidualNet::backward(const Tensor& y, const Tensor& upstream) const {
  return forward_backward(y, [&upstream](const Tensor&) { return upstream; }).grad;
}

ResidualNet::Evaluation ResidualNet::forward_backward(
    const Tensor& y, const std::function<Tensor(const Tensor&)>& upstream_of) const {
  const Geometry g = geometry_of(y, spec_);
  const auto views = layer_views(spec_);
  const std::size_t taps = static_cast<std::size_t>(spec_.kernel) * spec_.kernel;
  const auto acts = run_layers(spec_, params_, to_channel_major(y, g, spec_.in_channels()), g);

  Evaluation result{from_channel_major(acts.back(), g, y.shape()), Tensor(params_.shape(), 0.0)};
  const Tensor upstream = upstream_of(result.output);
  require_same_shape(y, upstream, "backward");
  Tensor& grad = result.grad;
  Matrix delta = to_channel_major(upstream, g, spec_.out_channels());
  for (std::size_t l = views.size(); l-- > 0;) {
    const LayerView& v = views[l];
    if (l + 1 < views.size() && spec_.activation == Activation::kRelu) {
      // acts[l + 1] is relu(z); its positive entries mark the open units.
      delta = (acts[l + 1].array() > 0.0).select(delta, 0.0);
    }
    MatrixMap dw(grad.data() + v.weight_offset, v.out, v.in * taps);
    Eigen::Map<Eigen::VectorXd> db(grad.data() + v.bias_offset, v.out);
    db = delta.rowwise().sum();
    ConstMatrixMap weights(params_.data() + v.weight_offset, v.out, v.in * taps);
    if (single_pixel(g)) {
      const Matrix dw_dense = delta * acts[l].transpose();
      for (std::size_t c = 0; c < v.in; ++c) {
        dw.middleCols(c * taps, taps) = dw_dense.col(c).replicate(1, taps);
      }
      if (l > 0) delta = summed_taps(weights, v.in, taps).transpose() * delta;
      continue;
    }
    const Matrix col = im2col(acts[l], g, spec_.kernel);
    dw.noalias() = delta * col.transpose();
    if (l > 0) {
      const Matrix dcol = weights.transpose() * delta;
      delta = col2im(dcol, v.in, g, spec_.kernel);
    }
  }
  return result;
}

void save_params(const std::filesystem::path& path, const ResidualNet& net) {
  std::ofstream os(path, std::ios::binary);
  if (!os) throw DataError("cannot open for writing: " + path.string());
  const LayerSpec& spec = net.spec();
  os.write(kParamsMagic, 4);
  os.put(static_cast<char>(kParamsVersion));
  put_u32(os, spec.kernel);
  put_u32(os, static_cast<std::uint32_t>(spec.activation));
  put_u32(os, static_cast<std::uint32_t>(spec.channels.size()));
  for (auto c : spec.channels) put_u32(os, c);
  put_u32(os, static_cast<std::uint32_t>(net.parameters().size()));
  put_f32_array(os, net.parameters().values());
  if (!os) throw DataError("write failed: " + path.string());
}

ResidualNet load_params(const std::filesystem::path& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw DataError("cannot open: " + path.string());
  char magic[4];
  if (!is.read(magic, 4)) throw FormatError("parameter file: truncated header");
  if (std::memcmp(magic, kParamsMagic, 4) != 0) throw FormatError("parameter file: bad magic");
  const int version = is.get();
  if (version != kParamsVersion) throw FormatError("parameter file: unsupported version");
  LayerSpec spec;
  spec.kernel = get_u32(is, "kernel size");
  spec.activation = static_cast<Activation>(get_u32(is, "activation"));
  const std::uint32_t n = get_u32(is, "channel count");
  if (n < 2 || n > 4096) throw FormatError("parameter file: implausible layer count");
  spec.channels.resize(n);
  for (auto& c : spec.channels) c = get_u32(is, "channels");
  try {
    validate(spec);
  } catch (const InvalidArgument& e) {
    throw FormatError(std::string("parameter file: ") + e.what());
  }
  const std::uint32_t count = get_u32(is, "parameter count");
  if (count != parameter_count(spec)) {
    throw FormatError("parameter file: parameter count does not match layer spec");
  }
  ResidualNet net(spec);
  get_f32_array(is, net.parameters().values(), "parameter file");
  return net;
}

void load_params(const std::filesystem::path& path, ResidualNet& net) {
  ResidualNet loaded = load_params(path);
  if (!(loaded.spec() == net.spec())) {
    throw DataError("parameter file spec " + loaded.spec().to_string() +
                    " does not match network " + net.spec().to_string());
  }
  net = std::move(loaded);
}

}  // namespace n2s
