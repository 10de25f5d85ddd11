#include "henfd/gradcheck.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <string>
#include <vector>

#include "henfd/trainer.hpp"

namespace henfd::ad {

GradCheckResult grad_check(const std::function<NodeId(Tape&)>& build_fn,
                           ParamStore& store, double eps) {
  if (!(eps > 0.0)) throw std::invalid_argument("grad_check: eps must be > 0");

  Tape tape(&store);
  tape.clear();
  NodeId seed = build_fn(tape);
  tape.forward();
  if (!std::isfinite(tape.scalar(seed)))
    throw std::runtime_error("grad_check: non-finite function value");

  store.zero_grad();
  tape.backward(seed);
  std::vector<std::vector<double>> analytic;
  analytic.reserve(store.size());
  for (int p = 0; p < store.size(); ++p) analytic.push_back(store.entry(p).grad);

  GradCheckResult res;
  for (int p = 0; p < store.size(); ++p) {
    auto& e = store.entry(p);
    for (int j = 0; j < e.size(); ++j) {
      const double saved = e.value[j];
      e.value[j] = saved + eps;
      tape.forward();
      const double fp = tape.scalar(seed);
      e.value[j] = saved - eps;
      tape.forward();
      const double fm = tape.scalar(seed);
      e.value[j] = saved;

      const double numeric = (fp - fm) / (2.0 * eps);
      const double a = analytic[p][j];
      if (!std::isfinite(numeric) || !std::isfinite(a))
        throw std::runtime_error("grad_check: non-finite gradient for parameter '" +
                                 e.name + "'");
      const double rel =
          std::abs(a - numeric) / std::max(1e-8, std::abs(a) + std::abs(numeric));
      if (rel > res.max_rel_err) {
        res.max_rel_err = rel;
        res.worst_param = e.name;
        res.worst_index = j;
      }
    }
  }
  // Leave the tape's forward values consistent with the unperturbed point.
  tape.forward();
  return res;
}

}  // namespace henfd::ad

namespace henfd {

namespace {

struct Coord {
  int entry = 0;
  int idx = 0;
};

double fd_slope(ad::Tape& tape, ad::NodeId loss, double& coord, double h) {
  const double orig = coord;
  coord = orig + h;
  tape.forward();
  const double up = tape.scalar(loss);
  coord = orig - h;
  tape.forward();
  const double dn = tape.scalar(loss);
  coord = orig;
  return (up - dn) / (2.0 * h);
}

Schema tiny_fitted_schema(const std::string& stem, int n_cat, int vocab,
                          int n_num) {
  Schema s;
  for (int i = 0; i < n_cat; ++i) {
    FieldSpec f;
    f.name = stem + "_c" + std::to_string(i);
    f.kind = FieldKind::categorical;
    f.shared = i % 2 == 0;  // alternate, so both row layouts are exercised
    for (int v = 0; v < vocab; ++v) f.vocab.push_back("v" + std::to_string(v));
    f.fitted = true;
    s.fields.push_back(std::move(f));
  }
  for (int i = 0; i < n_num; ++i) {
    FieldSpec f;
    f.name = stem + "_n" + std::to_string(i);
    f.kind = FieldKind::numerical;
    f.mean = 0.0;
    f.std_dev = 1.0;
    f.fitted = true;
    s.fields.push_back(std::move(f));
  }
  return s;
}

EncodedEvent random_event(const ViewCodec& codec, std::mt19937_64& rng) {
  EncodedEvent ev;
  std::normal_distribution<double> gauss(0.0, 1.0);
  for (std::size_t f = 0; f < codec.fields.size(); ++f) {
    if (codec.schema.fields[f].kind == FieldKind::categorical) {
      // rows includes the OOV row 0, which this deliberately reaches.
      std::uniform_int_distribution<int> pick(0, codec.fields[f].rows - 1);
      ev.idx.push_back(pick(rng));
      ev.num.push_back(0.0);
    } else {
      ev.idx.push_back(0);
      ev.num.push_back(gauss(rng));
    }
  }
  return ev;
}

EncodedSample random_sample(const ViewCodec& codec, int max_hist, int label,
                            std::mt19937_64& rng) {
  EncodedSample s;
  std::uniform_int_distribution<int> hist_len(0, max_hist);
  const int len = hist_len(rng);
  for (int t = 0; t < len; ++t) s.history.push_back(random_event(codec, rng));
  s.target = random_event(codec, rng);
  s.label = label;
  return s;
}

}  // namespace

GradCheckReport grad_check_store(ad::Tape& tape, ad::NodeId loss,
                                 ParamStore& store, int n_coords,
                                 std::mt19937_64& rng, double h) {
  tape.forward();
  store.zero_grad();
  tape.backward(loss);

  std::vector<std::vector<double>> grads(store.size());
  std::vector<Coord> nonzero;
  std::vector<Coord> all;
  for (int e = 0; e < store.size(); ++e) {
    grads[e] = store.entry(e).grad;
    for (int j = 0; j < store.entry(e).size(); ++j) {
      all.push_back({e, j});
      if (grads[e][j] != 0.0) nonzero.push_back({e, j});
    }
  }

  std::vector<Coord> picked;
  auto draw = [&](std::vector<Coord>& pool, int want) {
    std::uniform_int_distribution<std::size_t> pick(0, pool.size() - 1);
    for (int i = 0; i < want && !pool.empty(); ++i) picked.push_back(pool[pick(rng)]);
  };
  const int half = n_coords / 2;
  if (!nonzero.empty()) draw(nonzero, half);
  draw(all, n_coords - static_cast<int>(picked.size()));

  GradCheckReport rep;
  for (const Coord& c : picked) {
    double& coord = store.entry(c.entry).value[c.idx];
    const double step = h * std::max(1.0, std::abs(coord));
    const double fd = fd_slope(tape, loss, coord, step);
    const double ad_grad = grads[c.entry][c.idx];
    const double abs_err = std::abs(fd - ad_grad);
    const double rel = abs_err / std::max({std::abs(fd), std::abs(ad_grad), 1e-6});
    rep.max_abs_err = std::max(rep.max_abs_err, abs_err);
    rep.max_rel_err = std::max(rep.max_rel_err, rel);
    ++rep.points;
  }
  tape.forward();  // leave values consistent with the unperturbed store
  return rep;
}

GradCheckReport grad_check_hen_loss(std::uint64_t seed, int n_points) {
  std::mt19937_64 rng(seed);
  ParamStore store;
  const Schema fitted = tiny_fitted_schema("f", 4, 5, 1);
  const ViewCodec codec = make_codec(fitted);

  ModelConfig mc;
  mc.k = 4;
  mc.hidden = 8;
  mc.t_max = 5;
  mc.dropout_keep = 0.8;

  const ViewTables tables = register_view(store, codec, "main.", mc.k, rng);
  const HenTower tower = register_hen_tower(store, "main.", mc.k, rng);
  const HeadParams head = register_head(store, "head.", 2 * mc.k, mc.hidden, rng);

  // Attention and wide tables start at zero; nudge everything off the origin
  // so softmax gradients are non-degenerate.
  std::uniform_real_distribution<double> unif(-0.3, 0.3);
  for (int e = 0; e < store.size(); ++e)
    for (double& v : store.entry(e).value) v += unif(rng);

  ad::Tape tape(&store);
  std::vector<ad::NodeId> yhats;
  std::vector<int> labels;
  for (int i = 0; i < 6; ++i) {
    const int label = i % 2;
    const EncodedSample s = random_sample(codec, mc.t_max - 1, label, rng);
    const HenTrace tr = hen_tower_forward(tape, tables, tower, s);
    const ad::NodeId hidden =
        head_forward(tape, head, tr.z, mc.dropout_keep, /*training=*/true, rng);
    yhats.push_back(tape.sigmoid(tape.add(hidden, tr.wide)));
    labels.push_back(label);
  }
  const ad::NodeId loss = nll_loss(tape, yhats, labels);
  return grad_check_store(tape, loss, store, n_points, rng);
}

GradCheckReport grad_check_transfer_loss(std::uint64_t seed, int n_points) {
  std::mt19937_64 rng(seed);
  ParamStore store;
  Schema src = tiny_fitted_schema("f", 3, 4, 1);
  Schema tgt = src;
  // Disjoint tail values so the shared view has target-only rows.
  for (auto& f : tgt.fields)
    if (f.kind == FieldKind::categorical) f.vocab.back() += "_tgt";

  ModelConfig mc;
  mc.k = 4;
  mc.hidden = 8;
  mc.t_max = 4;
  mc.dropout_keep = 0.8;

  TransferModel tm = build_transfer_model(store, src, tgt, mc, ExtractorKind::hen, rng);

  std::uniform_real_distribution<double> unif(-0.3, 0.3);
  for (int e = 0; e < store.size(); ++e)
    for (double& v : store.entry(e).value) v += unif(rng);

  ad::Tape tape(&store);
  std::vector<ad::NodeId> yhats;
  std::vector<int> labels;
  std::array<std::vector<ad::NodeId>, 4> cell_z;
  for (int cell = 0; cell < 4; ++cell) {
    const bool is_target = cell >= 2;
    const int label = cell % 2;
    for (int i = 0; i < 2; ++i) {
      DualEncoded de;
      de.shared = random_sample(is_target ? tm.vocab.shared_tgt : tm.vocab.shared_src,
                                mc.t_max - 1, label, rng);
      de.spe = random_sample(is_target ? tm.tgt_codec : tm.src_codec,
                             mc.t_max - 1, label, rng);
      de.label = label;
      const BranchOut bo =
          branch_forward(tape, tm, de, is_target, /*training=*/true, rng);
      yhats.push_back(bo.yhat);
      labels.push_back(label);
      cell_z[cell].push_back(bo.z);
    }
  }
  ad::NodeId loss = nll_loss(tape, yhats, labels);
  std::array<ad::NodeId, 4> means{};
  for (int c = 0; c < 4; ++c) means[c] = mean_node(tape, cell_z[c]);
  const ad::NodeId delta = ced_node(tape, means);
  loss = tape.add(loss, tape.affine(delta, 0.7, 0.0));
  return grad_check_store(tape, loss, store, n_points, rng);
}

}  // namespace henfd
