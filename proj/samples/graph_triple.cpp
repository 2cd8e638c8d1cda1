// Copyright 2026 The crnn-sim Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.


// Two-vertex triple: the position-squeezed state and graphs with edge
// weight 1 and 2, followed by their distinguishing pair of measurements.

#include <cstdio>

#include "crnn/taskgen.hpp"

int main() {
  using namespace crnn;
  std::mt19937_64 rng(1);
  auto g1 = GraphSpec<Exact>::zero_centers({{0, 1}, {1, 0}});
  auto g2 = GraphSpec<Exact>::zero_centers({{0, 2}, {2, 0}});
  auto tr = triple_from_graphs(g1, g2, rng);
  std::printf("branch %s on edge (%d,%d), kappa %s\n", tr.suffix.branch.c_str(), tr.suffix.i, tr.suffix.j,
              to_string(tr.suffix.units.kappa).c_str());
  const char* label[3] = {"B=0", "w=1", "w=2"};
  for (int i = 0; i < 3; ++i) {
    const auto& inst = tr.instances[i];
    std::printf("%s:", label[i]);
    for (const auto& o : inst.outputs)
      std::printf(" %s%s", to_string(o.value).c_str(), o.deterministic ? "*" : "");
    std::printf("\n");
  }
  std::printf("(* = forced; values in units of pi)\n");
  return 0;
}
