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


// Prints the magic square for alpha = 1/3 and the line checks.

#include <cstdio>

#include "crnn/pauli.hpp"

int main() {
  using namespace crnn;
  auto m = build_magic_square_exact(Rational(1, 3));
  for (int r = 0; r < 3; ++r) {
    for (int c = 0; c < 3; ++c) {
      const auto& w = m.grid[r][c];
      std::printf("[a=(%s,%s) b=(%s,%s) th=%s] ", to_string(w.a[0]).c_str(), to_string(w.a[1]).c_str(),
                  to_string(w.b[0]).c_str(), to_string(w.b[1]).c_str(), to_string(w.theta).c_str());
    }
    std::printf("\n");
  }
  auto rep = verify_magic_square(m);
  for (const auto& l : rep.lines)
    std::printf("%s: %s, product phase %s pi\n", l.name.c_str(), l.ok ? "ok" : "FAIL", to_string(l.phase).c_str());
  std::printf("consistent +-1 assignments: %d\n", rep.satisfying_assignments);
  return rep.pass ? 0 : 1;
}
