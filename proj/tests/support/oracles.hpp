#pragma once

#include <vector>

#include "ri/network.hpp"
#include "ri/region.hpp"
#include "ri/site.hpp"

// Independent oracles used only by tests. They must not share code with the
// implementation paths they check.
namespace ri::oracle {

// Effective conductance by dense Gaussian elimination on the full reduced
// Laplacian (graphs of a dozen vertices or so).
double dense_effective_conductance(const WeightedGraph& g);

// Capacity and per-site escape probabilities of a small set from the
// last-exit linear system: sum_y g(x,y) e(y) = 1 for all x in A.
struct ExactCapacity {
  double capacity = 0.0;
  std::vector<Site> sites;
  std::vector<double> escape;
};
ExactCapacity exact_capacity(const std::vector<Site>& sites);

// Expected first-passage time to the right end of a birth-death chain on
// {0..L} started at `start`, with right probability p at interior states and
// a reflecting left end (state 0 moves right with probability 1).
double birth_death_mean_exit(int64_t length, double p_right, int64_t start);

// Brute-force inner boundary over the bounding box, for comparing against
// the lazy region enumerations.
std::vector<Site> brute_force_boundary(const Region& r);

}  // namespace ri::oracle
