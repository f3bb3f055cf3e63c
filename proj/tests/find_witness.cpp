// Seeded random search for a small scenario game without a pure saddle point.
// Usage: find_witness <output.json>

#include <cstdio>

#include <asymdynkin/json_io.hpp>

#include "support.hpp"

using namespace asymdynkin;

int main(int argc, char** argv) {
  if (argc < 2) {
    std::fprintf(stderr, "usage: find_witness <output.json>\n");
    return 2;
  }
  for (std::uint64_t seed = 1; seed < 100000; ++seed) {
    auto g = testsupport::random_game(seed, 2, 0.5);
    auto pg = pure_gap(build_matrix(g));
    if (pg.gap < 0.05) continue;
    auto sol = solve_scenario_game(g);
    if (sol.gap > 1e-9) continue;
    auto j = game_to_json(g);
    j["search_seed"] = seed;
    write_json_file(argv[1], j);
    std::printf("seed %llu pure gap %.6g randomized gap %.3g value %.6g\n", static_cast<unsigned long long>(seed), pg.gap,
                sol.gap, sol.value);
    return 0;
  }
  std::fprintf(stderr, "no witness found\n");
  return 1;
}
