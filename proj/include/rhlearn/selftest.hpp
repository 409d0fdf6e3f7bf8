#pragma once

#include <iosfwd>

namespace rhlearn {

/// Headless property suite covering the core invariants (predictor
/// commutation, controllability restoration, terminal-cost inequality,
/// augmentation equivalence, estimator convergence). Prints one line per
/// check and returns the number of failures.
int selftest(std::ostream& out);

}  // namespace rhlearn
