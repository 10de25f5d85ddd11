#include "henfd/tape.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <stdexcept>
#include <string>

namespace henfd::ad {

namespace {

std::string msg(const char* what, NodeId id) {
  return std::string("autodiff: node ") + std::to_string(id) + ": " + what;
}

double stable_sigmoid(double x) {
  if (x >= 0.0) {
    return 1.0 / (1.0 + std::exp(-x));
  }
  double e = std::exp(x);
  return e / (1.0 + e);
}

}  // namespace

void Tape::bind(ParamStore* store) {
  store_ = store;
  param_node_.clear();
}

void Tape::clear() {
  nodes_.clear();
  varena_.clear();
  garena_.clear();
  auxarena_.clear();
  extra_.clear();
  leaves_.clear();
  std::fill(param_node_.begin(), param_node_.end(), -1);
  forward_done_ = false;
}

const double* Tape::vptr(const Node& n) const {
  return n.ext ? n.ext : varena_.data() + n.val;
}

double* Tape::vptr_mut(const Node& n) {
  return varena_.data() + n.val;
}

void Tape::check_id(NodeId id, const char* where) const {
  if (id < 0 || id >= static_cast<NodeId>(nodes_.size()))
    throw std::invalid_argument(std::string("autodiff: ") + where +
                                ": bad input node id " + std::to_string(id));
}

NodeId Tape::push(Node n) {
  NodeId id = static_cast<NodeId>(nodes_.size());
  if (n.rows <= 0 || n.cols <= 0)
    throw std::invalid_argument(msg("empty shape", id));
  n.grad = static_cast<std::int64_t>(garena_.size());
  garena_.resize(garena_.size() + n.size());
  if (!n.ext && n.val < 0) {
    n.val = static_cast<std::int64_t>(varena_.size());
    varena_.resize(varena_.size() + n.size());
  }
  nodes_.push_back(n);
  forward_done_ = false;
  return id;
}

NodeId Tape::param(int entry_index) {
  if (!store_) throw std::runtime_error("autodiff: tape has no bound ParamStore");
  if (entry_index < 0 || entry_index >= store_->size())
    throw std::invalid_argument("autodiff: bad param index");
  if (param_node_.size() < static_cast<size_t>(store_->size()))
    param_node_.resize(store_->size(), -1);
  if (param_node_[entry_index] >= 0) return param_node_[entry_index];
  const auto& e = store_->entry(entry_index);
  Node n;
  n.op = Op::kLeaf;
  n.rows = e.rows;
  n.cols = e.cols;
  n.ext = e.value.data();
  n.param = entry_index;
  NodeId id = push(n);
  param_node_[entry_index] = id;
  leaves_.push_back(id);
  return id;
}

NodeId Tape::param(const std::string& name) {
  if (!store_) throw std::runtime_error("autodiff: tape has no bound ParamStore");
  return param(store_->require(name));
}

NodeId Tape::constant(std::span<const double> data, int rows, int cols) {
  if (static_cast<int>(data.size()) != rows * cols)
    throw std::invalid_argument("autodiff: constant data/shape mismatch");
  Node n;
  n.op = Op::kConst;
  n.rows = rows;
  n.cols = cols;
  NodeId id = push(n);
  std::copy(data.begin(), data.end(), vptr_mut(nodes_[id]));
  return id;
}

NodeId Tape::constant(std::initializer_list<double> data) {
  std::vector<double> v(data);
  return constant(std::span<const double>(v), static_cast<int>(v.size()), 1);
}

NodeId Tape::scalar_const(double x) {
  return constant(std::span<const double>(&x, 1), 1, 1);
}

NodeId Tape::zeros(int rows, int cols) {
  std::vector<double> z(static_cast<size_t>(rows) * cols, 0.0);
  return constant(std::span<const double>(z), rows, cols);
}

NodeId Tape::unary(Op op, NodeId a) {
  check_id(a, "unary");
  Node n;
  n.op = op;
  n.rows = nodes_[a].rows;
  n.cols = nodes_[a].cols;
  n.a = a;
  return push(n);
}

NodeId Tape::binary_same_shape(Op op, NodeId a, NodeId b) {
  check_id(a, "binary");
  check_id(b, "binary");
  if (nodes_[a].rows != nodes_[b].rows || nodes_[a].cols != nodes_[b].cols)
    throw std::invalid_argument(
        msg("operand shape mismatch", static_cast<NodeId>(nodes_.size())));
  Node n;
  n.op = op;
  n.rows = nodes_[a].rows;
  n.cols = nodes_[a].cols;
  n.a = a;
  n.b = b;
  return push(n);
}

NodeId Tape::add(NodeId a, NodeId b) { return binary_same_shape(Op::kAdd, a, b); }
NodeId Tape::sub(NodeId a, NodeId b) { return binary_same_shape(Op::kSub, a, b); }
NodeId Tape::mul(NodeId a, NodeId b) { return binary_same_shape(Op::kMul, a, b); }

NodeId Tape::add_n(std::span<const NodeId> xs) {
  if (xs.empty()) throw std::invalid_argument("autodiff: add_n of nothing");
  if (xs.size() == 1) return xs[0];
  for (NodeId x : xs) check_id(x, "add_n");
  const Node& first = nodes_[xs[0]];
  for (NodeId x : xs)
    if (nodes_[x].rows != first.rows || nodes_[x].cols != first.cols)
      throw std::invalid_argument(
          msg("add_n shape mismatch", static_cast<NodeId>(nodes_.size())));
  Node n;
  n.op = Op::kAddN;
  n.rows = first.rows;
  n.cols = first.cols;
  n.ex_ofs = static_cast<std::int32_t>(extra_.size());
  n.ex_len = static_cast<std::int32_t>(xs.size());
  extra_.insert(extra_.end(), xs.begin(), xs.end());
  return push(n);
}

NodeId Tape::matvec(NodeId w, NodeId x) {
  check_id(w, "matvec");
  check_id(x, "matvec");
  if (nodes_[x].cols != 1 || nodes_[w].cols != nodes_[x].rows)
    throw std::invalid_argument(
        msg("matvec shape mismatch", static_cast<NodeId>(nodes_.size())));
  Node n;
  n.op = Op::kMatVec;
  n.rows = nodes_[w].rows;
  n.cols = 1;
  n.a = w;
  n.b = x;
  return push(n);
}

NodeId Tape::concat(std::span<const NodeId> xs) {
  if (xs.empty()) throw std::invalid_argument("autodiff: concat of nothing");
  int rows = 0;
  for (NodeId x : xs) {
    check_id(x, "concat");
    if (nodes_[x].cols != 1)
      throw std::invalid_argument(
          msg("concat expects column vectors", static_cast<NodeId>(nodes_.size())));
    rows += nodes_[x].rows;
  }
  Node n;
  n.op = Op::kConcat;
  n.rows = rows;
  n.cols = 1;
  n.ex_ofs = static_cast<std::int32_t>(extra_.size());
  n.ex_len = static_cast<std::int32_t>(xs.size());
  extra_.insert(extra_.end(), xs.begin(), xs.end());
  return push(n);
}

NodeId Tape::sum(NodeId a) {
  check_id(a, "sum");
  Node n;
  n.op = Op::kSum;
  n.rows = 1;
  n.cols = 1;
  n.a = a;
  return push(n);
}

NodeId Tape::square(NodeId a) { return unary(Op::kSquare, a); }
NodeId Tape::exp(NodeId a) { return unary(Op::kExp, a); }
NodeId Tape::log(NodeId a) { return unary(Op::kLog, a); }
NodeId Tape::sigmoid(NodeId a) { return unary(Op::kSigmoid, a); }
NodeId Tape::relu(NodeId a) { return unary(Op::kRelu, a); }

NodeId Tape::masked_softmax(NodeId a, std::span<const std::uint8_t> valid) {
  check_id(a, "masked_softmax");
  if (nodes_[a].cols != 1)
    throw std::invalid_argument(
        msg("masked_softmax expects a column vector", static_cast<NodeId>(nodes_.size())));
  if (static_cast<int>(valid.size()) != nodes_[a].rows)
    throw std::invalid_argument(
        msg("mask length mismatch", static_cast<NodeId>(nodes_.size())));
  int n_valid = 0;
  for (auto m : valid) n_valid += m ? 1 : 0;
  if (n_valid == 0)
    throw std::invalid_argument(
        msg("masked_softmax needs at least one valid position",
            static_cast<NodeId>(nodes_.size())));
  Node n;
  n.op = Op::kMaskedSoftmax;
  n.rows = nodes_[a].rows;
  n.cols = 1;
  n.a = a;
  n.aux = static_cast<std::int64_t>(auxarena_.size());
  for (auto m : valid) auxarena_.push_back(m ? 1.0 : 0.0);
  return push(n);
}

NodeId Tape::softmax(NodeId a) {
  check_id(a, "softmax");
  std::vector<std::uint8_t> valid(nodes_[a].rows, 1);
  return masked_softmax(a, valid);
}

NodeId Tape::inner(NodeId a, NodeId b) {
  check_id(a, "inner");
  check_id(b, "inner");
  if (nodes_[a].rows != nodes_[b].rows || nodes_[a].cols != nodes_[b].cols)
    throw std::invalid_argument(
        msg("inner shape mismatch", static_cast<NodeId>(nodes_.size())));
  Node n;
  n.op = Op::kInner;
  n.rows = 1;
  n.cols = 1;
  n.a = a;
  n.b = b;
  return push(n);
}

NodeId Tape::scale(NodeId a, NodeId s) {
  check_id(a, "scale");
  check_id(s, "scale");
  if (nodes_[s].size() != 1)
    throw std::invalid_argument(
        msg("scale factor must be scalar", static_cast<NodeId>(nodes_.size())));
  Node n;
  n.op = Op::kScale;
  n.rows = nodes_[a].rows;
  n.cols = nodes_[a].cols;
  n.a = a;
  n.b = s;
  return push(n);
}

NodeId Tape::affine(NodeId a, double mul, double shift) {
  check_id(a, "affine");
  Node n;
  n.op = Op::kAffine;
  n.rows = nodes_[a].rows;
  n.cols = nodes_[a].cols;
  n.a = a;
  n.p0 = mul;
  n.p1 = shift;
  return push(n);
}

NodeId Tape::gather(NodeId a, int row) {
  check_id(a, "gather");
  if (row < 0 || row >= nodes_[a].rows)
    throw std::invalid_argument(
        msg("gather row out of range", static_cast<NodeId>(nodes_.size())));
  Node n;
  n.op = Op::kGather;
  n.rows = nodes_[a].cols;
  n.cols = 1;
  n.a = a;
  n.iarg = row;
  return push(n);
}

NodeId Tape::dropout(NodeId a, double keep_prob, std::mt19937_64& rng) {
  check_id(a, "dropout");
  if (!(keep_prob > 0.0 && keep_prob <= 1.0))
    throw std::invalid_argument(
        msg("keep probability out of (0,1]", static_cast<NodeId>(nodes_.size())));
  Node n;
  n.op = Op::kDropout;
  n.rows = nodes_[a].rows;
  n.cols = nodes_[a].cols;
  n.a = a;
  n.p0 = keep_prob;
  n.aux = static_cast<std::int64_t>(auxarena_.size());
  // Mask frozen at construction: forward passes stay bit-identical.
  std::uniform_real_distribution<double> u(0.0, 1.0);
  for (int i = 0; i < n.size(); ++i)
    auxarena_.push_back(u(rng) < keep_prob ? 1.0 / keep_prob : 0.0);
  return push(n);
}

NodeId Tape::clamp(NodeId a, double lo, double hi) {
  check_id(a, "clamp");
  if (!(lo < hi))
    throw std::invalid_argument(msg("clamp bounds inverted", static_cast<NodeId>(nodes_.size())));
  Node n;
  n.op = Op::kClamp;
  n.rows = nodes_[a].rows;
  n.cols = nodes_[a].cols;
  n.a = a;
  n.p0 = lo;
  n.p1 = hi;
  return push(n);
}

NodeId Tape::div(NodeId a, NodeId b) {
  check_id(a, "div");
  check_id(b, "div");
  if (nodes_[a].size() != 1 || nodes_[b].size() != 1)
    throw std::invalid_argument(
        msg("div is scalar-only", static_cast<NodeId>(nodes_.size())));
  Node n;
  n.op = Op::kDiv;
  n.rows = 1;
  n.cols = 1;
  n.a = a;
  n.b = b;
  return push(n);
}

void Tape::forward() {
  for (size_t i = 0; i < nodes_.size(); ++i) {
    Node& n = nodes_[i];
    if (n.op == Op::kLeaf || n.op == Op::kConst) continue;
    double* out = vptr_mut(n);
    const double* va = n.a >= 0 ? vptr(nodes_[n.a]) : nullptr;
    const double* vb = n.b >= 0 ? vptr(nodes_[n.b]) : nullptr;
    const int sz = n.size();
    switch (n.op) {
      case Op::kAdd:
        for (int j = 0; j < sz; ++j) out[j] = va[j] + vb[j];
        break;
      case Op::kSub:
        for (int j = 0; j < sz; ++j) out[j] = va[j] - vb[j];
        break;
      case Op::kMul:
        for (int j = 0; j < sz; ++j) out[j] = va[j] * vb[j];
        break;
      case Op::kAddN: {
        std::fill(out, out + sz, 0.0);
        for (int t = 0; t < n.ex_len; ++t) {
          const double* vx = vptr(nodes_[extra_[n.ex_ofs + t]]);
          for (int j = 0; j < sz; ++j) out[j] += vx[j];
        }
        break;
      }
      case Op::kMatVec: {
        const Node& w = nodes_[n.a];
        for (int r = 0; r < w.rows; ++r) {
          double acc = 0.0;
          const double* wr = va + static_cast<std::int64_t>(r) * w.cols;
          for (int c = 0; c < w.cols; ++c) acc += wr[c] * vb[c];
          out[r] = acc;
        }
        break;
      }
      case Op::kConcat: {
        int ofs = 0;
        for (int t = 0; t < n.ex_len; ++t) {
          const Node& x = nodes_[extra_[n.ex_ofs + t]];
          std::memcpy(out + ofs, vptr(x), sizeof(double) * x.size());
          ofs += x.size();
        }
        break;
      }
      case Op::kSum: {
        double acc = 0.0;
        const int asz = nodes_[n.a].size();
        for (int j = 0; j < asz; ++j) acc += va[j];
        out[0] = acc;
        break;
      }
      case Op::kSquare:
        for (int j = 0; j < sz; ++j) out[j] = va[j] * va[j];
        break;
      case Op::kExp:
        for (int j = 0; j < sz; ++j) out[j] = std::exp(va[j]);
        break;
      case Op::kLog:
        for (int j = 0; j < sz; ++j) out[j] = std::log(va[j]);
        break;
      case Op::kSigmoid:
        for (int j = 0; j < sz; ++j) out[j] = stable_sigmoid(va[j]);
        break;
      case Op::kRelu:
        for (int j = 0; j < sz; ++j) out[j] = va[j] > 0.0 ? va[j] : 0.0;
        break;
      case Op::kMaskedSoftmax: {
        const double* mask = auxarena_.data() + n.aux;
        double mx = -1e300;
        for (int j = 0; j < sz; ++j)
          if (mask[j] != 0.0 && va[j] > mx) mx = va[j];
        double denom = 0.0;
        for (int j = 0; j < sz; ++j) {
          if (mask[j] != 0.0) {
            out[j] = std::exp(va[j] - mx);
            denom += out[j];
          } else {
            out[j] = 0.0;
          }
        }
        for (int j = 0; j < sz; ++j)
          if (mask[j] != 0.0) out[j] /= denom;
        break;
      }
      case Op::kInner: {
        double acc = 0.0;
        const int asz = nodes_[n.a].size();
        for (int j = 0; j < asz; ++j) acc += va[j] * vb[j];
        out[0] = acc;
        break;
      }
      case Op::kScale: {
        const double s = vb[0];
        for (int j = 0; j < sz; ++j) out[j] = va[j] * s;
        break;
      }
      case Op::kAffine:
        for (int j = 0; j < sz; ++j) out[j] = n.p0 * va[j] + n.p1;
        break;
      case Op::kGather: {
        const Node& src = nodes_[n.a];
        const double* row = va + static_cast<std::int64_t>(n.iarg) * src.cols;
        std::memcpy(out, row, sizeof(double) * src.cols);
        break;
      }
      case Op::kDropout: {
        const double* mask = auxarena_.data() + n.aux;
        for (int j = 0; j < sz; ++j) out[j] = va[j] * mask[j];
        break;
      }
      case Op::kClamp:
        for (int j = 0; j < sz; ++j)
          out[j] = va[j] < n.p0 ? n.p0 : (va[j] > n.p1 ? n.p1 : va[j]);
        break;
      case Op::kDiv:
        out[0] = va[0] / vb[0];
        break;
      case Op::kLeaf:
      case Op::kConst:
        break;
    }
  }
  forward_done_ = true;
}

void Tape::backward(NodeId seed) {
  check_id(seed, "backward");
  if (!forward_done_) throw std::runtime_error("autodiff: backward before forward");
  if (nodes_[seed].size() != 1)
    throw std::invalid_argument(msg("backward seed must be scalar", seed));
  std::fill(garena_.begin(), garena_.end(), 0.0);
  garena_[nodes_[seed].grad] = 1.0;

  for (NodeId i = static_cast<NodeId>(nodes_.size()) - 1; i >= 0; --i) {
    const Node& n = nodes_[i];
    if (n.op == Op::kLeaf || n.op == Op::kConst) continue;
    const double* g = garena_.data() + n.grad;
    const double* out = vptr(n);
    double* ga = n.a >= 0 ? garena_.data() + nodes_[n.a].grad : nullptr;
    double* gb = n.b >= 0 ? garena_.data() + nodes_[n.b].grad : nullptr;
    const double* va = n.a >= 0 ? vptr(nodes_[n.a]) : nullptr;
    const double* vb = n.b >= 0 ? vptr(nodes_[n.b]) : nullptr;
    const int sz = n.size();
    switch (n.op) {
      case Op::kAdd:
        for (int j = 0; j < sz; ++j) { ga[j] += g[j]; gb[j] += g[j]; }
        break;
      case Op::kSub:
        for (int j = 0; j < sz; ++j) { ga[j] += g[j]; gb[j] -= g[j]; }
        break;
      case Op::kMul:
        for (int j = 0; j < sz; ++j) {
          ga[j] += g[j] * vb[j];
          gb[j] += g[j] * va[j];
        }
        break;
      case Op::kAddN:
        for (int t = 0; t < n.ex_len; ++t) {
          double* gx = garena_.data() + nodes_[extra_[n.ex_ofs + t]].grad;
          for (int j = 0; j < sz; ++j) gx[j] += g[j];
        }
        break;
      case Op::kMatVec: {
        const Node& w = nodes_[n.a];
        for (int r = 0; r < w.rows; ++r) {
          const double gr = g[r];
          if (gr == 0.0) continue;
          double* gw = ga + static_cast<std::int64_t>(r) * w.cols;
          const double* wr = va + static_cast<std::int64_t>(r) * w.cols;
          for (int c = 0; c < w.cols; ++c) {
            gw[c] += gr * vb[c];
            gb[c] += gr * wr[c];
          }
        }
        break;
      }
      case Op::kConcat: {
        int ofs = 0;
        for (int t = 0; t < n.ex_len; ++t) {
          const Node& x = nodes_[extra_[n.ex_ofs + t]];
          double* gx = garena_.data() + x.grad;
          for (int j = 0; j < x.size(); ++j) gx[j] += g[ofs + j];
          ofs += x.size();
        }
        break;
      }
      case Op::kSum: {
        const int asz = nodes_[n.a].size();
        for (int j = 0; j < asz; ++j) ga[j] += g[0];
        break;
      }
      case Op::kSquare:
        for (int j = 0; j < sz; ++j) ga[j] += 2.0 * va[j] * g[j];
        break;
      case Op::kExp:
        for (int j = 0; j < sz; ++j) ga[j] += out[j] * g[j];
        break;
      case Op::kLog:
        for (int j = 0; j < sz; ++j) ga[j] += g[j] / va[j];
        break;
      case Op::kSigmoid:
        for (int j = 0; j < sz; ++j) ga[j] += out[j] * (1.0 - out[j]) * g[j];
        break;
      case Op::kRelu:
        for (int j = 0; j < sz; ++j) ga[j] += va[j] > 0.0 ? g[j] : 0.0;
        break;
      case Op::kMaskedSoftmax: {
        const double* mask = auxarena_.data() + n.aux;
        double dot = 0.0;
        for (int j = 0; j < sz; ++j)
          if (mask[j] != 0.0) dot += g[j] * out[j];
        for (int j = 0; j < sz; ++j)
          if (mask[j] != 0.0) ga[j] += out[j] * (g[j] - dot);
        break;
      }
      case Op::kInner: {
        const int asz = nodes_[n.a].size();
        for (int j = 0; j < asz; ++j) {
          ga[j] += g[0] * vb[j];
          gb[j] += g[0] * va[j];
        }
        break;
      }
      case Op::kScale: {
        const double s = vb[0];
        double acc = 0.0;
        for (int j = 0; j < sz; ++j) {
          ga[j] += s * g[j];
          acc += g[j] * va[j];
        }
        gb[0] += acc;
        break;
      }
      case Op::kAffine:
        for (int j = 0; j < sz; ++j) ga[j] += n.p0 * g[j];
        break;
      case Op::kGather: {
        const Node& src = nodes_[n.a];
        double* grow = ga + static_cast<std::int64_t>(n.iarg) * src.cols;
        for (int c = 0; c < src.cols; ++c) grow[c] += g[c];
        break;
      }
      case Op::kDropout: {
        const double* mask = auxarena_.data() + n.aux;
        for (int j = 0; j < sz; ++j) ga[j] += g[j] * mask[j];
        break;
      }
      case Op::kClamp:
        for (int j = 0; j < sz; ++j)
          if (out[j] == va[j]) ga[j] += g[j];
        break;
      case Op::kDiv:
        ga[0] += g[0] / vb[0];
        gb[0] -= g[0] * va[0] / (vb[0] * vb[0]);
        break;
      case Op::kLeaf:
      case Op::kConst:
        break;
    }
  }

  // Flush leaf gradients into the store. Untouched embedding rows keep
  // exact zeros: the grad arena starts zeroed and gather only adds to
  // the rows it reads.
  if (store_) {
    for (NodeId id : leaves_) {
      const Node& n = nodes_[id];
      auto& e = store_->entry(n.param);
      const double* g = garena_.data() + n.grad;
      for (int j = 0; j < n.size(); ++j) e.grad[j] += g[j];
    }
  }
}

std::span<const double> Tape::value(NodeId id) const {
  check_id(id, "value");
  const Node& n = nodes_[id];
  return {vptr(n), static_cast<size_t>(n.size())};
}

double Tape::scalar(NodeId id) const {
  auto v = value(id);
  if (v.size() != 1)
    throw std::invalid_argument(msg("scalar() on non-scalar node", id));
  return v[0];
}

std::span<const double> Tape::grad(NodeId id) const {
  check_id(id, "grad");
  const Node& n = nodes_[id];
  return {garena_.data() + n.grad, static_cast<size_t>(n.size())};
}

}  // namespace henfd::ad
