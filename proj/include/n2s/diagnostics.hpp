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

#ifndef N2S_DIAGNOSTICS_HPP_
#define N2S_DIAGNOSTICS_HPP_

#include <functional>
#include <string_view>

namespace n2s {

using WarningSink = std::function<void(std::string_view)>;

// Non-fatal conditions (e.g. Poisson inputs off the gain lattice) are routed
// here. The default sink writes "warning: ..." lines to stderr. Returns the
// previous sink.
WarningSink set_warning_sink(WarningSink sink);
void warn(std::string_view message);

}  // namespace n2s

#endif  // N2S_DIAGNOSTICS_HPP_
