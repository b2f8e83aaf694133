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


#include <cstring>
#include <fstream>
#include <sstream>
#include <string>

#include "doctest.h"
#include "n2s/errors.hpp"
#include "n2s/rng.hpp"
#include "n2s/tensor_io.hpp"
#include "test_util.hpp"

using namespace n2s;

namespace {

std::string bytes(std::initializer_list<int> list) {
  std::string s;
  for (int b : list) s.push_back(static_cast<char>(b));
  return s;
}

}  // namespace

TEST_SUITE("tensor_io") {
  TEST_CASE("byte layout of a small tensor") {
    std::ostringstream os;
    write_tensor(os, Tensor(Shape{2, 1}, std::vector<double>{1.0, -2.5}));
    // float32 1.0 = 0x3f800000, -2.5 = 0xc0200000, little-endian.
    const std::string expected = bytes({'N', '2', 'S', 'T', 1, 1, 2, 2, 0, 0, 0, 1, 0, 0, 0,
                                        0, 0, 0x80, 0x3f, 0, 0, 0x20, 0xc0});
    CHECK(os.str() == expected);
  }

  TEST_CASE("round trip is exact at float32 precision") {
    testing::TempDir dir("tio");
    Rng rng(9);
    const Tensor t = sample_normal(rng, {3, 5, 7});
    write_tensor(dir / "t.n2st", t);
    const Tensor back = read_tensor(dir / "t.n2st");
    CHECK(back == to_float32_precision(t));
    CHECK(to_float32_precision(back) == back);
  }

  TEST_CASE("malformed files are rejected") {
    const std::string good = bytes({'N', '2', 'S', 'T', 1, 1, 1, 2, 0, 0, 0, 0, 0, 0x80, 0x3f,
                                    0, 0, 0x80, 0x3f});
    {
      std::istringstream is(good);
      CHECK(read_tensor(is) == Tensor(Shape{2}, 1.0));
    }
    auto read = [](std::string s) {
      std::istringstream is(s);
      return read_tensor(is);
    };
    std::string bad_magic = good;
    bad_magic[0] = 'X';
    CHECK_THROWS_AS(read(bad_magic), FormatError);
    std::string bad_version = good;
    bad_version[4] = 2;
    CHECK_THROWS_AS(read(bad_version), FormatError);
    std::string bad_dtype = good;
    bad_dtype[5] = 2;
    CHECK_THROWS_AS(read(bad_dtype), FormatError);
    std::string zero_dim = good;
    zero_dim[6] = 0;
    CHECK_THROWS_AS(read(zero_dim), FormatError);
    std::string zero_extent = good;
    zero_extent[7] = 0;
    CHECK_THROWS_AS(read(zero_extent), FormatError);
    CHECK_THROWS_AS(read(good.substr(0, good.size() - 1)), FormatError);
    CHECK_THROWS_AS(read(good.substr(0, 5)), FormatError);
    // A huge declared extent must fail before allocating.
    CHECK_THROWS_AS(read(bytes({'N', '2', 'S', 'T', 1, 1, 1, 0xff, 0xff, 0xff, 0x7f})),
                    FormatError);
  }

  TEST_CASE("missing file is a data error") {
    CHECK_THROWS_AS(read_tensor("/nonexistent/n2s/file.n2st"), DataError);
  }
}
