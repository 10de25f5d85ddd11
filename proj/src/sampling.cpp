#include "henfd/sampling.hpp"

#include <algorithm>
#include <numeric>
#include <stdexcept>

namespace henfd {

Dataset upsample_positives(const Dataset& train_set, int factor, std::uint64_t seed) {
  if (factor < 1) throw std::invalid_argument("sampling: upsample factor must be >= 1");
  Dataset out;
  out.schema = train_set.schema;
  out.split_tag = train_set.split_tag;
  for (const Sample& s : train_set.samples) {
    const int copies = s.label == 1 ? factor : 1;
    for (int c = 0; c < copies; ++c) out.samples.push_back(s);
  }
  std::mt19937_64 rng(seed);
  std::shuffle(out.samples.begin(), out.samples.end(), rng);
  return out;
}

std::vector<std::vector<size_t>> shuffled_batches(size_t n, size_t batch_size,
                                                  std::mt19937_64& rng) {
  if (batch_size == 0) throw std::invalid_argument("sampling: batch_size must be > 0");
  std::vector<size_t> order(n);
  std::iota(order.begin(), order.end(), size_t{0});
  std::shuffle(order.begin(), order.end(), rng);
  std::vector<std::vector<size_t>> batches;
  for (size_t begin = 0; begin < n; begin += batch_size) {
    const size_t end = std::min(n, begin + batch_size);
    batches.emplace_back(order.begin() + static_cast<std::ptrdiff_t>(begin),
                         order.begin() + static_cast<std::ptrdiff_t>(end));
  }
  return batches;
}

StratifiedBatcher::StratifiedBatcher(const std::vector<int>& src_labels,
                                     const std::vector<int>& tgt_labels,
                                     size_t batch_size, std::uint64_t seed)
    : rng_(seed) {
  for (size_t i = 0; i < src_labels.size(); ++i)
    cell_[src_labels[i] == 1 ? 1 : 0].push_back(i);
  for (size_t i = 0; i < tgt_labels.size(); ++i)
    cell_[tgt_labels[i] == 1 ? 3 : 2].push_back(i);
  for (int c = 0; c < 4; ++c)
    if (cell_[c].empty())
      throw std::runtime_error(
          "sampling: a (domain, class) cell is empty; joint batches need all "
          "four cells — use a single-domain training mode instead");

  const size_t total = cell_[0].size() + cell_[1].size() + cell_[2].size() + cell_[3].size();
  // Proportional quotas by floor, clamped below at 2, then trimmed/topped up
  // toward batch_size. The floor of a batch is 8 (2 from each cell).
  size_t sum = 0;
  for (int c = 0; c < 4; ++c) {
    quota_[c] = std::max<size_t>(2, batch_size * cell_[c].size() / total);
    sum += quota_[c];
  }
  const size_t want = std::max<size_t>(batch_size, 8);
  while (sum > want) {
    int biggest = -1;
    for (int c = 0; c < 4; ++c)
      if (quota_[c] > 2 && (biggest < 0 || quota_[c] > quota_[biggest])) biggest = c;
    if (biggest < 0) break;
    --quota_[biggest];
    --sum;
  }
  while (sum < want) {
    int biggest = 0;
    for (int c = 1; c < 4; ++c)
      if (cell_[c].size() > cell_[biggest].size()) biggest = c;
    ++quota_[biggest];
    ++sum;
  }

  for (int c = 0; c < 4; ++c) {
    const size_t drain = (cell_[c].size() + quota_[c] - 1) / quota_[c];
    batches_per_epoch_ = std::max(batches_per_epoch_, drain);
  }
  start_epoch();
}

void StratifiedBatcher::start_epoch() {
  for (int c = 0; c < 4; ++c) {
    std::shuffle(cell_[c].begin(), cell_[c].end(), rng_);
    cursor_[c] = 0;
  }
}

JointBatch StratifiedBatcher::next_batch() {
  JointBatch b;
  for (int c = 0; c < 4; ++c) {
    std::vector<size_t>& dest = c < 2 ? b.src : b.tgt;
    for (size_t k = 0; k < quota_[c]; ++k) {
      if (cursor_[c] < cell_[c].size()) {
        dest.push_back(cell_[c][cursor_[c]++]);
      } else {
        // Cell exhausted this epoch: fall back to replacement draws.
        std::uniform_int_distribution<size_t> pick(0, cell_[c].size() - 1);
        dest.push_back(cell_[c][pick(rng_)]);
      }
    }
  }
  return b;
}

}  // namespace henfd
