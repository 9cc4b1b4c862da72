#pragma once

#include <cstddef>
#include <functional>
#include <span>

namespace nelsonlab {

// Deterministic summation helpers. All ensemble statistics are reduced
// through these so results do not depend on thread count.

/// Fixed-shape pairwise tree sum.
double pairwise_sum(std::span<const double> v);

/// Ends-inward pairing: (v[0]+v[k-1]) + (v[1]+v[k-2]) + ...
/// Reversing the input permutes operands only inside commutative pairs,
/// so the result is bit-identical under reversal.
double symmetric_sum(std::span<const double> v);

struct MeanStderr {
    double mean = 0.0;
    double stderr_ = 0.0;
    std::size_t count = 0;
};

/// Mean and standard error of the mean, via pairwise sums.
MeanStderr mean_stderr(std::span<const double> v);

/// Worker budget: min(hardware, NELSON_LAB_THREADS) and at least 1.
int thread_budget();

/// Runs body(begin, end) over a partition of [0, n). Bodies must write only
/// to per-index slots; reductions happen afterwards on the caller's side.
void parallel_for(std::size_t n, const std::function<void(std::size_t, std::size_t)>& body);

}  // namespace nelsonlab
