// Copyright 2026 The otadp Authors
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

// Prints one PASS/FAIL line per acceptance criterion; exits 2 on any
// failure. --mutate-t swaps in a deliberately wrong concentration offset so
// the certificate criterion can be seen to catch it.

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <vector>

#include <fmt/format.h>

#include "CLI11.hpp"
#include "otadp/acceptance.hpp"

int main(int argc, char** argv) {
  CLI::App app{"otadp acceptance suite"};
  otadp::AcceptanceOptions opt;
  bool list = false;
  bool mutate = false;
  std::vector<int> only;
  std::string out = "acceptance_artifacts";
  app.add_flag("--list", list, "List criteria without running them");
  app.add_option("--only", only, "Run only these criterion ids")->delimiter(',');
  app.add_option("--seed", opt.seed, "Master seed");
  app.add_option("--out", out, "Directory for determinism artifacts");
  app.add_flag("--mutate-t", mutate, "Use a wrong concentration offset (drops the ln(2/delta') factor)");
  CLI11_PARSE(app, argc, argv);

  if (list) {
    for (const auto& c : otadp::acceptance_criteria()) fmt::print("C{} {} (limit {} s)\n", c.id, c.name, c.limit_seconds);
    return 0;
  }
  opt.out_dir = out;
  if (mutate) {
    opt.offset_rule = [](const otadp::AccountantInput& in) {
      return otadp::concentration_offset(in) / std::log(2.0 / in.delta_prime);
    };
  }
  otadp::AcceptanceSuite suite(opt);
  int failed = 0;
  for (const auto& c : otadp::acceptance_criteria()) {
    if (!only.empty() && std::find(only.begin(), only.end(), c.id) == only.end()) continue;
    const auto r = suite.run(c.id);
    fmt::print("{}\n", otadp::format_result(r));
    std::fflush(stdout);
    if (!r.passed) ++failed;
  }
  fmt::print("{} criteria failed\n", failed);
  return failed == 0 ? 0 : 2;
}
