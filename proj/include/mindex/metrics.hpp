#pragma once

#include <cstdint>
#include <optional>

#include "mindex/losses.hpp"
#include "mindex/network.hpp"
#include "mindex/targets.hpp"
#include "mindex/types.hpp"

namespace mindex {

/// max_{j,k} |<w_j, u_k>| / ||w_j||; zero rows are skipped.
double cos_best(const Matrix& W, const HiddenSubspace& U);

/// Entry k = max_j |cos(w_j, u_k)|.
Vector direction_coverage(const Matrix& W, const HiddenSubspace& U);

/// Principal angles (ascending, in [0, pi/2]) between the row span of W and
/// span(U). Rows are put in a canonical order and sign first, so the result
/// is bitwise invariant under row permutations and sign flips.
Vector principal_angles(const Matrix& W, const HiddenSubspace& U);

struct ErrorEstimate {
  double value = 0.0;
  double stderr_ = 0.0;
};

/// Monte Carlo test error on n_test fresh Gaussian inputs. With no loss given
/// the metric is the squared error (f - f*)^2, otherwise l(f, f*).
ErrorEstimate test_error_estimate(const NetworkParams& params, const Activation& act, const MultiIndexTarget& target,
                                  int n_test, std::uint64_t seed,
                                  const std::optional<LossFunction>& loss = std::nullopt);

inline double test_error(const NetworkParams& params, const Activation& act, const MultiIndexTarget& target,
                         int n_test, std::uint64_t seed, const std::optional<LossFunction>& loss = std::nullopt) {
  return test_error_estimate(params, act, target, n_test, seed, loss).value;
}

/// Same metric on an already generated evaluation set.
double test_error_on(const NetworkParams& params, const Activation& act, const Dataset& eval,
                     const std::optional<LossFunction>& loss = std::nullopt);

struct RecoveryReport {
  double cos_best = 0.0;
  Vector per_direction;
  double coverage_min = 0.0;
  Vector principal_angles;
  double test_error = 0.0;
};

RecoveryReport recovery_report(const Matrix& W, const HiddenSubspace& U, double test_error);

}  // namespace mindex
