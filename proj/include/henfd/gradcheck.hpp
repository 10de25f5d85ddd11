#pragma once

#include <cstdint>
#include <functional>
#include <random>
#include <string>

#include "henfd/param_store.hpp"
#include "henfd/tape.hpp"

namespace henfd::ad {

struct GradCheckResult {
  double max_rel_err = 0.0;
  std::string worst_param;
  int worst_index = -1;
};

/// Central-difference check over EVERY store coordinate; build_fn constructs
/// a scalar-output graph once, then the check perturbs values and replays
/// forward passes on that same tape. Meant for small op-level graphs.
/// Relative error per component:
///   |analytic - numeric| / max(1e-8, |analytic| + |numeric|)
GradCheckResult grad_check(const std::function<NodeId(Tape&)>& build_fn,
                           ParamStore& store, double eps = 1e-5);

}  // namespace henfd::ad

namespace henfd {

struct GradCheckReport {
  int points = 0;
  double max_rel_err = 0.0;
  double max_abs_err = 0.0;
};

// Central-difference probe of d(loss)/d(coordinate) for `n_coords` parameter
// coordinates, compared against the tape gradient. The finite differences
// re-run forward() on the same tape, so any frozen sampling (dropout masks)
// stays fixed. Half the probes target coordinates with nonzero reverse-mode
// gradients, half are uniform (validating claimed zeros too).
GradCheckReport grad_check_store(ad::Tape& tape, ad::NodeId loss,
                                 ParamStore& store, int n_coords,
                                 std::mt19937_64& rng, double h = 1e-5);

// Self-contained suites over randomly built models: the supervised
// hierarchical loss (with dropout active) and the transfer loss with the
// class-aware alignment term.
GradCheckReport grad_check_hen_loss(std::uint64_t seed, int n_points);
GradCheckReport grad_check_transfer_loss(std::uint64_t seed, int n_points);

}  // namespace henfd
