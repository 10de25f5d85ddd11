#include "henfd/hen.hpp"

#include <cmath>
#include <stdexcept>

namespace henfd {

HenTower register_hen_tower(ParamStore& store, const std::string& prefix, int k,
                            std::mt19937_64& rng) {
  HenTower t;
  t.f1w = store.add_uniform(prefix + "f1.W", k, k, rng);
  t.f1b = store.add(prefix + "f1.b", k, 1);
  t.f2w = store.add_uniform(prefix + "f2.W", k, k, rng);
  t.f3w = store.add_uniform(prefix + "f3.W", k, k, rng);
  return t;
}

namespace {

// sum_{i<j} v_i (*) v_j = ((sum v)^2 - sum v^2) / 2, elementwise.
ad::NodeId pairwise_sum(ad::Tape& tape, const std::vector<ad::NodeId>& v) {
  std::vector<ad::NodeId> squares;
  squares.reserve(v.size());
  for (ad::NodeId x : v) squares.push_back(tape.square(x));
  const ad::NodeId total = tape.add_n(v);
  return tape.affine(tape.sub(tape.square(total), tape.add_n(squares)), 0.5, 0.0);
}

}  // namespace

FieldExtract field_extract(ad::Tape& tape, const std::vector<ad::NodeId>& v,
                           const std::vector<ad::NodeId>& attn) {
  if (v.empty() || v.size() != attn.size())
    throw std::invalid_argument("hen: field_extract needs matched vectors and scalars");
  FieldExtract out;
  out.w = tape.softmax(tape.concat(attn));
  std::vector<ad::NodeId> weighted;
  weighted.reserve(v.size());
  for (size_t i = 0; i < v.size(); ++i)
    weighted.push_back(tape.scale(v[i], tape.gather(out.w, static_cast<int>(i))));
  const ad::NodeId first_order = tape.add_n(weighted);
  out.e = v.size() == 1 ? first_order
                        : tape.add(first_order, pairwise_sum(tape, v));
  return out;
}

EventExtract event_extract(ad::Tape& tape, const std::vector<ad::NodeId>& e_hist,
                           const HenTower& tower, int k) {
  EventExtract out;
  if (e_hist.empty()) {
    out.s = tape.zeros(k);
    return out;
  }
  const ad::NodeId w1 = tape.param(tower.f1w), b1 = tape.param(tower.f1b);
  const ad::NodeId w2 = tape.param(tower.f2w), w3 = tape.param(tower.f3w);
  const double inv_sqrt_k = 1.0 / std::sqrt(static_cast<double>(k));

  std::vector<ad::NodeId> values, scores;
  values.reserve(e_hist.size());
  scores.reserve(e_hist.size());
  for (ad::NodeId e : e_hist) {
    values.push_back(tape.add(tape.matvec(w1, e), b1));
    const ad::NodeId score =
        tape.inner(tape.matvec(w2, e), tape.matvec(w3, e));
    scores.push_back(tape.affine(score, inv_sqrt_k, 0.0));
  }
  out.u = tape.softmax(tape.concat(scores));
  std::vector<ad::NodeId> pooled;
  pooled.reserve(values.size());
  for (size_t t = 0; t < values.size(); ++t)
    pooled.push_back(tape.scale(values[t], tape.gather(out.u, static_cast<int>(t))));
  out.s = tape.add_n(pooled);
  return out;
}

ad::NodeId wide_term(ad::Tape& tape, const ViewTables& tables,
                     const EventNodes& target) {
  std::vector<ad::NodeId> terms = target.wide;
  terms.push_back(tape.param(tables.wide_bias));
  return tape.add_n(terms);
}

HeadParams register_head(ParamStore& store, const std::string& prefix,
                         int in_width, int hidden, std::mt19937_64& rng) {
  HeadParams h;
  h.w1 = store.add_uniform(prefix + "W1", hidden, in_width, rng);
  h.b1 = store.add(prefix + "b1", hidden, 1);
  h.w2 = store.add_uniform(prefix + "W2", hidden, hidden, rng);
  h.b2 = store.add(prefix + "b2", hidden, 1);
  h.w3 = store.add_uniform(prefix + "out.W", 1, hidden, rng);
  h.b3 = store.add(prefix + "out.b", 1, 1);
  return h;
}

ad::NodeId head_forward(ad::Tape& tape, const HeadParams& head, ad::NodeId z,
                        double keep_prob, bool training, std::mt19937_64& rng) {
  ad::NodeId h1 = tape.relu(
      tape.add(tape.matvec(tape.param(head.w1), z), tape.param(head.b1)));
  if (training && keep_prob < 1.0) h1 = tape.dropout(h1, keep_prob, rng);
  ad::NodeId h2 = tape.relu(
      tape.add(tape.matvec(tape.param(head.w2), h1), tape.param(head.b2)));
  if (training && keep_prob < 1.0) h2 = tape.dropout(h2, keep_prob, rng);
  return tape.add(tape.matvec(tape.param(head.w3), h2), tape.param(head.b3));
}

HenTrace hen_tower_forward(ad::Tape& tape, const ViewTables& tables,
                           const HenTower& tower, const EncodedSample& sample) {
  HenTrace tr;
  std::vector<ad::NodeId> e_hist;
  e_hist.reserve(sample.history.size());
  for (const EncodedEvent& ev : sample.history) {
    const EventNodes nodes = embed_event(tape, tables, ev);
    const FieldExtract fx = field_extract(tape, nodes.v, nodes.attn);
    tr.field_w.push_back(fx.w);
    e_hist.push_back(fx.e);
  }
  tr.e_hist = e_hist;

  const EventNodes target_nodes = embed_event(tape, tables, sample.target);
  const FieldExtract target_fx = field_extract(tape, target_nodes.v, target_nodes.attn);
  tr.e_target = target_fx.e;
  tr.target_w = target_fx.w;
  tr.wide = wide_term(tape, tables, target_nodes);

  const EventExtract ex = event_extract(tape, e_hist, tower, tables.k);
  tr.s = ex.s;
  tr.u = ex.u;
  const ad::NodeId parts[] = {tr.s, tr.e_target};
  tr.z = tape.concat(parts);
  return tr;
}

ad::NodeId nll_loss(ad::Tape& tape, std::span<const ad::NodeId> yhat,
                    std::span<const int> labels) {
  if (yhat.empty()) throw std::invalid_argument("hen: nll_loss over an empty batch");
  if (yhat.size() != labels.size())
    throw std::invalid_argument("hen: prediction/label count mismatch");
  std::vector<ad::NodeId> terms;
  terms.reserve(yhat.size());
  for (size_t i = 0; i < yhat.size(); ++i) {
    const ad::NodeId p = tape.clamp(yhat[i], 1e-12, 1.0 - 1e-12);
    terms.push_back(labels[i] == 1 ? tape.log(p)
                                   : tape.log(tape.affine(p, -1.0, 1.0)));
  }
  return tape.affine(tape.add_n(terms), -1.0 / static_cast<double>(yhat.size()), 0.0);
}

}  // namespace henfd
