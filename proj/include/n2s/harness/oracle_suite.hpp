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


#ifndef N2S_HARNESS_ORACLE_SUITE_HPP_
#define N2S_HARNESS_ORACLE_SUITE_HPP_

#include <iosfwd>
#include <string>
#include <string_view>
#include <vector>

namespace n2s {

struct OracleCheck {
  std::string suite;
  std::string name;
  double error = 0.0;
  double tolerance = 0.0;
  bool pass = false;
};

struct OracleOptions {
  // Constant inside the Poisson estimator (y + offset) exp(l'). Anything but
  // 1/2 should make the Poisson point-mass check fail.
  double poisson_offset = 0.5;
};

// "pointmass", "conjugate", "sure-ism", "gradient".
const std::vector<std::string>& oracle_suite_names();

// Runs one suite, or every suite for "all". Unknown names throw InvalidArgument.
std::vector<OracleCheck> run_oracle_suite(std::string_view suite, const OracleOptions& opts = {});

// Header "suite,check,error,tolerance,result" then one row per check.
void write_oracle_csv(std::ostream& os, const std::vector<OracleCheck>& checks);

}  // namespace n2s

#endif  // N2S_HARNESS_ORACLE_SUITE_HPP_
