#pragma once

#include <cstdint>
#include <random>
#include <vector>

#include "henfd/schema.hpp"

namespace henfd {

// Duplicates each positive so its multiplicity becomes exactly `factor`;
// negatives are untouched. The result order is shuffled with `seed`.
Dataset upsample_positives(const Dataset& train_set, int factor, std::uint64_t seed);

// Index batches over [0, n): one shuffled pass, chunked into ceil(n/batch_size)
// pieces (last piece may be short).
std::vector<std::vector<size_t>> shuffled_batches(size_t n, size_t batch_size,
                                                  std::mt19937_64& rng);

// A joint mini-batch over two domains; entries index into the respective
// sample vectors handed to StratifiedBatcher.
struct JointBatch {
  std::vector<size_t> src;
  std::vector<size_t> tgt;
};

// Streams joint batches where every (domain, class) cell contributes at least
// two samples per batch. Cell quotas are proportional to global cell
// frequencies, clamped below at 2; within an epoch each cell is consumed
// without replacement, and cells that run dry early are re-drawn with
// replacement. One epoch lasts until the slowest-draining cell has been seen
// in full: batches_per_epoch() = max over cells of ceil(cell_size / quota).
class StratifiedBatcher {
 public:
  StratifiedBatcher(const std::vector<int>& src_labels,
                    const std::vector<int>& tgt_labels, size_t batch_size,
                    std::uint64_t seed);

  size_t batches_per_epoch() const { return batches_per_epoch_; }
  const std::array<size_t, 4>& quotas() const { return quota_; }

  // Restarts the without-replacement pools (fresh shuffle) for a new epoch.
  void start_epoch();

  JointBatch next_batch();

 private:
  // Cell order: src negatives, src positives, tgt negatives, tgt positives.
  std::array<std::vector<size_t>, 4> cell_;
  std::array<size_t, 4> cursor_{};
  std::array<size_t, 4> quota_{};
  size_t batches_per_epoch_ = 0;
  std::mt19937_64 rng_;
};

}  // namespace henfd
