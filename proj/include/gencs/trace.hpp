#pragma once

#include <optional>
#include <vector>

#include "gencs/tensor.hpp"

namespace gencs {

/// Per-iteration record of a recovery run. fidelity[t] = |y - A x_t|^2;
/// per_pixel_error[t] = |x_t - x_te|^2 / d when the target is known.
/// Iterates (and the target) are retained only on request, since the RIP
/// support-family construction needs them.
struct RecoveryTrace {
    std::vector<double> fidelity;
    std::vector<double> per_pixel_error;
    std::vector<Tensor> iterates;
    std::optional<Tensor> target;
    Tensor x_hat;
    long iterations = 0;
    double wall_ms = 0.0;
};

} // namespace gencs
