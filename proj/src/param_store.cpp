#include "henfd/param_store.hpp"

#include <cmath>
#include <stdexcept>

namespace henfd {

int ParamStore::add(const std::string& name, int rows, int cols) {
  if (rows <= 0 || cols <= 0)
    throw std::invalid_argument("params: bad shape for '" + name + "'");
  if (index_.count(name))
    throw std::invalid_argument("params: duplicate entry '" + name + "'");
  Entry e;
  e.name = name;
  e.rows = rows;
  e.cols = cols;
  e.value.assign(static_cast<size_t>(rows) * cols, 0.0);
  e.grad = e.value;
  e.m = e.value;
  e.v = e.value;
  int id = static_cast<int>(entries_.size());
  index_.emplace(name, id);
  entries_.push_back(std::move(e));
  return id;
}

int ParamStore::add_uniform(const std::string& name, int rows, int cols,
                            std::mt19937_64& rng, double half_range) {
  int id = add(name, rows, cols);
  std::uniform_real_distribution<double> dist(-half_range, half_range);
  for (double& x : entries_[id].value) x = dist(rng);
  return id;
}

int ParamStore::find(const std::string& name) const {
  auto it = index_.find(name);
  return it == index_.end() ? -1 : it->second;
}

int ParamStore::require(const std::string& name) const {
  int id = find(name);
  if (id < 0) throw std::runtime_error("params: missing entry '" + name + "'");
  return id;
}

void ParamStore::zero_grad() {
  for (Entry& e : entries_)
    std::fill(e.grad.begin(), e.grad.end(), 0.0);
}

std::vector<std::vector<double>> ParamStore::snapshot_values() const {
  std::vector<std::vector<double>> snap;
  snap.reserve(entries_.size());
  for (const Entry& e : entries_) snap.push_back(e.value);
  return snap;
}

void ParamStore::restore_values(const std::vector<std::vector<double>>& snap) {
  if (snap.size() != entries_.size())
    throw std::runtime_error("params: snapshot entry count mismatch");
  for (size_t i = 0; i < snap.size(); ++i) {
    if (snap[i].size() != entries_[i].value.size())
      throw std::runtime_error("params: snapshot shape mismatch for '" +
                               entries_[i].name + "'");
    entries_[i].value = snap[i];
  }
}

double ParamStore::value_checksum() const {
  double acc = 0.0;
  size_t k = 1;
  for (const Entry& e : entries_)
    for (double x : e.value) acc += x * static_cast<double>(k++ % 9973);
  return acc;
}

}  // namespace henfd
