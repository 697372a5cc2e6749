#pragma once

#include <cstdint>
#include <string>

namespace splitnet::cli {

// Finite-difference check of the total-loss gradient on random toy members.
// Returns the maximum relative error over all sampled parameters.
double run_gradcheck(std::uint64_t seed, int models, int samples_per_model, bool verbose);

// Verifies every published division preset and unit value; prints a pass/fail
// matrix. Returns the number of failures.
int run_goldens();

}  // namespace splitnet::cli
