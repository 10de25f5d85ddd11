#pragma once

#include <cstdint>
#include <initializer_list>
#include <random>
#include <span>
#include <vector>

#include "henfd/param_store.hpp"

namespace henfd::ad {

using NodeId = std::int32_t;

enum class Op : std::uint8_t {
  kLeaf,     // parameter entry, value read directly from the store
  kConst,    // constant data owned by the tape
  kAdd,
  kSub,
  kMul,      // Hadamard
  kAddN,     // elementwise sum of n same-shape inputs
  kMatVec,   // (m x n) * (n x 1) -> (m x 1)
  kConcat,   // column vectors stacked
  kSum,      // sum of all elements -> scalar
  kSquare,
  kExp,
  kLog,
  kSigmoid,
  kRelu,
  kMaskedSoftmax,  // softmax over valid positions, exact zero elsewhere
  kInner,          // <a, b> -> scalar
  kScale,          // a * s, s a scalar node broadcast over a
  kAffine,         // p0 * a + p1, constants
  kGather,         // row iarg of a matrix -> column vector
  kDropout,        // inverted dropout, mask frozen at construction
  kClamp,          // clamp(a, p0, p1), unit gradient strictly inside
  kDiv,            // scalar / scalar
};

struct Node {
  Op op;
  std::int32_t rows = 0;
  std::int32_t cols = 0;
  std::int64_t val = -1;   // value arena offset; -1 for kLeaf (external)
  std::int64_t grad = -1;  // grad arena offset, always assigned
  NodeId a = -1;
  NodeId b = -1;
  std::int32_t ex_ofs = 0;  // n-ary input list in the extra pool
  std::int32_t ex_len = 0;
  std::int64_t aux = -1;  // aux arena offset (softmax mask, dropout mask)
  std::int32_t iarg = 0;  // gather row
  double p0 = 0.0;
  double p1 = 0.0;
  const double* ext = nullptr;  // leaf value storage
  std::int32_t param = -1;      // ParamStore entry for leaves

  int size() const { return rows * cols; }
};

/// Reverse-mode tape over dense double arrays. Nodes are appended in
/// topological order by construction; clear() keeps arena capacity so a
/// tape can be rebuilt per batch without reallocating.
class Tape {
 public:
  explicit Tape(ParamStore* store = nullptr) : store_(store) {}

  void bind(ParamStore* store);
  void clear();

  int node_count() const { return static_cast<int>(nodes_.size()); }
  const Node& node(NodeId id) const { return nodes_[id]; }

  // --- graph construction -------------------------------------------------
  NodeId param(int entry_index);                 // deduplicated per tape
  NodeId param(const std::string& name);
  NodeId constant(std::span<const double> data, int rows, int cols);
  NodeId constant(std::initializer_list<double> data);  // column vector
  NodeId scalar_const(double x);
  NodeId zeros(int rows, int cols = 1);

  NodeId add(NodeId a, NodeId b);
  NodeId sub(NodeId a, NodeId b);
  NodeId mul(NodeId a, NodeId b);
  NodeId add_n(std::span<const NodeId> xs);
  NodeId matvec(NodeId w, NodeId x);
  NodeId concat(std::span<const NodeId> xs);
  NodeId sum(NodeId a);
  NodeId square(NodeId a);
  NodeId exp(NodeId a);
  NodeId log(NodeId a);
  NodeId sigmoid(NodeId a);
  NodeId relu(NodeId a);
  NodeId masked_softmax(NodeId a, std::span<const std::uint8_t> valid);
  NodeId softmax(NodeId a);  // all positions valid
  NodeId inner(NodeId a, NodeId b);
  NodeId scale(NodeId a, NodeId s);
  NodeId affine(NodeId a, double mul, double shift);
  NodeId gather(NodeId a, int row);
  NodeId dropout(NodeId a, double keep_prob, std::mt19937_64& rng);
  NodeId clamp(NodeId a, double lo, double hi);
  NodeId div(NodeId a, NodeId b);

  // --- execution -----------------------------------------------------------
  void forward();
  // Accumulates d(seed)/d(param) into the bound store's grad buffers.
  void backward(NodeId seed);

  std::span<const double> value(NodeId id) const;
  double scalar(NodeId id) const;
  std::span<const double> grad(NodeId id) const;

 private:
  NodeId push(Node n);
  NodeId unary(Op op, NodeId a);
  NodeId binary_same_shape(Op op, NodeId a, NodeId b);
  const double* vptr(const Node& n) const;
  double* vptr_mut(const Node& n);
  void check_id(NodeId id, const char* where) const;

  ParamStore* store_ = nullptr;
  std::vector<Node> nodes_;
  std::vector<double> varena_;
  std::vector<double> garena_;
  std::vector<double> auxarena_;
  std::vector<NodeId> extra_;
  std::vector<NodeId> param_node_;   // store entry -> leaf node id (or -1)
  std::vector<NodeId> leaves_;
  bool forward_done_ = false;
};

}  // namespace henfd::ad
