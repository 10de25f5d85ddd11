#pragma once

#include <cstdint>
#include <random>
#include <string>
#include <unordered_map>
#include <vector>

namespace henfd {

/// Named dense parameters with gradient and Adam moment buffers.
/// Concurrent reads are safe; training steps are the single writer.
class ParamStore {
 public:
  struct Entry {
    std::string name;
    int rows = 0;
    int cols = 0;
    std::vector<double> value;
    std::vector<double> grad;
    std::vector<double> m;
    std::vector<double> v;
    std::int64_t step = 0;

    int size() const { return rows * cols; }
  };

  // Zero-initialized entry. Throws if the name already exists.
  int add(const std::string& name, int rows, int cols);

  // Entry initialized from uniform(-half_range, half_range).
  int add_uniform(const std::string& name, int rows, int cols,
                  std::mt19937_64& rng, double half_range = 0.05);

  int find(const std::string& name) const;  // -1 when absent
  int require(const std::string& name) const;

  Entry& entry(int i) { return entries_[i]; }
  const Entry& entry(int i) const { return entries_[i]; }
  Entry& at(const std::string& name) { return entries_[require(name)]; }
  const Entry& at(const std::string& name) const { return entries_[require(name)]; }
  bool has(const std::string& name) const { return find(name) >= 0; }

  int size() const { return static_cast<int>(entries_.size()); }

  void zero_grad();

  // Value-only snapshot/restore, used for early-stopping checkpoints.
  std::vector<std::vector<double>> snapshot_values() const;
  void restore_values(const std::vector<std::vector<double>>& snap);

  // Order-sensitive digest of all values; used to assert read-only paths.
  double value_checksum() const;

 private:
  std::vector<Entry> entries_;
  std::unordered_map<std::string, int> index_;
};

}  // namespace henfd
