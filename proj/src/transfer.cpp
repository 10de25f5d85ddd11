#include "henfd/transfer.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace henfd {

TrainMode mode_from_string(const std::string& name) {
  if (name == "target_only" || name == "target") return TrainMode::target_only;
  if (name == "source_only" || name == "source") return TrainMode::source_only;
  if (name == "pretrain" || name == "pretrain_finetune")
    return TrainMode::pretrain_finetune;
  if (name == "domain_shared") return TrainMode::domain_shared;
  if (name == "structure_only") return TrainMode::structure_only;
  if (name == "full") return TrainMode::full;
  throw std::runtime_error("transfer: unknown train mode '" + name + "'");
}

std::string to_string(TrainMode mode) {
  switch (mode) {
    case TrainMode::target_only: return "target_only";
    case TrainMode::source_only: return "source_only";
    case TrainMode::pretrain_finetune: return "pretrain_finetune";
    case TrainMode::domain_shared: return "domain_shared";
    case TrainMode::structure_only: return "structure_only";
    case TrainMode::full: return "full";
  }
  return "?";
}

AlignKind align_from_string(const std::string& name) {
  if (name == "none") return AlignKind::none;
  if (name == "ed") return AlignKind::ed;
  if (name == "ced") return AlignKind::ced;
  throw std::runtime_error("transfer: unknown alignment '" + name +
                           "' (expected none, ed, or ced)");
}

std::string to_string(AlignKind align) {
  switch (align) {
    case AlignKind::none: return "none";
    case AlignKind::ed: return "ed";
    case AlignKind::ced: return "ced";
  }
  return "?";
}

double lambda_schedule(double theta) {
  theta = std::clamp(theta, 0.0, 1.0);
  return 2.0 / (1.0 + std::exp(-10.0 * theta)) - 1.0;
}

void BatchClassStats::accumulate(bool is_target, int label,
                                 const std::vector<double>& z) {
  const int c = cell(is_target, label);
  if (mean[c].empty()) mean[c].assign(z.size(), 0.0);
  if (mean[c].size() != z.size())
    throw std::runtime_error("transfer: inconsistent representation width");
  for (size_t i = 0; i < z.size(); ++i) mean[c][i] += z[i];
  ++count[c];
}

void BatchClassStats::finalize() {
  for (int c = 0; c < 4; ++c) {
    if (count[c] == 0) continue;
    for (double& x : mean[c]) x /= count[c];
  }
}

double class_distance(const BatchClassStats& stats, int cell_a, int cell_b) {
  if (stats.count[cell_a] == 0 || stats.count[cell_b] == 0)
    throw std::runtime_error("transfer: class distance over an empty cell");
  double d = 0.0;
  for (size_t i = 0; i < stats.mean[cell_a].size(); ++i) {
    const double diff = stats.mean[cell_a][i] - stats.mean[cell_b][i];
    d += diff * diff;
  }
  return d;
}

double ced(const BatchClassStats& stats) {
  for (int c = 0; c < 4; ++c)
    if (stats.count[c] == 0)
      throw std::runtime_error("transfer: ced needs all four (domain, class) cells");
  const double intra = class_distance(stats, 0, 2) + class_distance(stats, 1, 3);
  const double inter = class_distance(stats, 0, 1) + class_distance(stats, 0, 3) +
                       class_distance(stats, 2, 1) + class_distance(stats, 2, 3);
  return intra / std::max(inter, 1e-12);
}

double euclidean_alignment(const BatchClassStats& stats) {
  const int n_src = stats.count[0] + stats.count[1];
  const int n_tgt = stats.count[2] + stats.count[3];
  if (n_src == 0 || n_tgt == 0)
    throw std::runtime_error("transfer: alignment needs both domains");
  double d = 0.0;
  const size_t width = stats.mean[stats.count[0] ? 0 : 1].size();
  for (size_t i = 0; i < width; ++i) {
    double src = 0.0, tgt = 0.0;
    if (stats.count[0]) src += stats.count[0] * stats.mean[0][i];
    if (stats.count[1]) src += stats.count[1] * stats.mean[1][i];
    if (stats.count[2]) tgt += stats.count[2] * stats.mean[2][i];
    if (stats.count[3]) tgt += stats.count[3] * stats.mean[3][i];
    const double diff = src / n_src - tgt / n_tgt;
    d += diff * diff;
  }
  return d;
}

ad::NodeId mean_node(ad::Tape& tape, std::span<const ad::NodeId> zs) {
  if (zs.empty()) throw std::invalid_argument("transfer: mean over no vectors");
  return tape.affine(tape.add_n(zs), 1.0 / static_cast<double>(zs.size()), 0.0);
}

ad::NodeId sq_dist_node(ad::Tape& tape, ad::NodeId a, ad::NodeId b) {
  return tape.sum(tape.square(tape.sub(a, b)));
}

ad::NodeId ced_node(ad::Tape& tape, const std::array<ad::NodeId, 4>& m) {
  const ad::NodeId intra =
      tape.add(sq_dist_node(tape, m[0], m[2]), sq_dist_node(tape, m[1], m[3]));
  const ad::NodeId parts[] = {
      sq_dist_node(tape, m[0], m[1]), sq_dist_node(tape, m[0], m[3]),
      sq_dist_node(tape, m[2], m[1]), sq_dist_node(tape, m[2], m[3])};
  const ad::NodeId inter = tape.add_n(parts);
  return tape.div(intra, tape.clamp(inter, 1e-12, 1e300));
}

ad::NodeId ed_node(ad::Tape& tape, const std::array<ad::NodeId, 4>& m,
                   const std::array<int, 4>& counts) {
  const double n_src = counts[0] + counts[1];
  const double n_tgt = counts[2] + counts[3];
  if (n_src == 0 || n_tgt == 0)
    throw std::runtime_error("transfer: alignment needs both domains");
  const ad::NodeId src = tape.add(tape.affine(m[0], counts[0] / n_src, 0.0),
                                  tape.affine(m[1], counts[1] / n_src, 0.0));
  const ad::NodeId tgt = tape.add(tape.affine(m[2], counts[2] / n_tgt, 0.0),
                                  tape.affine(m[3], counts[3] / n_tgt, 0.0));
  return sq_dist_node(tape, src, tgt);
}

DomainAttnParams register_domain_attention(ParamStore& store,
                                           const std::string& prefix, int width,
                                           std::mt19937_64& rng) {
  DomainAttnParams da;
  da.g1w = store.add_uniform(prefix + "g1.W", width, width, rng);
  da.g1b = store.add(prefix + "g1.b", width, 1);
  da.g2w = store.add_uniform(prefix + "g2.W", width, width, rng);
  da.g3w = store.add_uniform(prefix + "g3.W", width, width, rng);
  return da;
}

DomainAttnOut domain_attention(ad::Tape& tape, ad::NodeId z_share,
                               ad::NodeId z_spe, const DomainAttnParams& da,
                               int width) {
  const ad::NodeId g1w = tape.param(da.g1w), g1b = tape.param(da.g1b);
  const ad::NodeId g2w = tape.param(da.g2w), g3w = tape.param(da.g3w);
  const double inv_sqrt_w = 1.0 / std::sqrt(static_cast<double>(width));

  auto score = [&](ad::NodeId z) {
    return tape.affine(
        tape.inner(tape.matvec(g2w, z), tape.matvec(g3w, z)), inv_sqrt_w, 0.0);
  };
  const ad::NodeId scores[] = {score(z_share), score(z_spe)};
  DomainAttnOut out;
  out.b = tape.softmax(tape.concat(scores));
  auto project = [&](ad::NodeId z) { return tape.add(tape.matvec(g1w, z), g1b); };
  out.z = tape.add(tape.scale(project(z_share), tape.gather(out.b, 0)),
                   tape.scale(project(z_spe), tape.gather(out.b, 1)));
  return out;
}

TransferModel build_transfer_model(ParamStore& store, const Schema& src_fitted,
                                   const Schema& tgt_fitted,
                                   const ModelConfig& cfg, ExtractorKind kind,
                                   std::mt19937_64& rng) {
  TransferModel m;
  m.cfg = cfg;
  m.kind = kind;
  m.vocab = build_domain_vocab(src_fitted, tgt_fitted);
  m.src_codec = make_codec(src_fitted);
  m.tgt_codec = make_codec(tgt_fitted);

  const int n_fields = static_cast<int>(src_fitted.fields.size());
  m.shared_tab = register_view(store, m.vocab.shared_src, "shared.", cfg.k, rng);
  m.src_tab = register_view(store, m.src_codec, "src.", cfg.k, rng);
  m.tgt_tab = register_view(store, m.tgt_codec, "tgt.", cfg.k, rng);
  m.shared_tower =
      register_tower(store, "shared.", kind, cfg.k, n_fields, cfg.t_max, rng);
  m.src_tower = register_tower(store, "src.", kind, cfg.k, n_fields, cfg.t_max, rng);
  m.tgt_tower = register_tower(store, "tgt.", kind, cfg.k, n_fields, cfg.t_max, rng);

  const int width = extractor_width(kind, cfg.k);
  m.da = register_domain_attention(store, "da.", width, rng);
  m.head = register_head(store, "head.", width, cfg.hidden, rng);
  return m;
}

DualEncoded encode_dual(const TransferModel& model, const Sample& sample,
                        bool is_target) {
  DualEncoded d;
  const ViewCodec& shared =
      is_target ? model.vocab.shared_tgt : model.vocab.shared_src;
  const ViewCodec& spe = is_target ? model.tgt_codec : model.src_codec;
  d.shared = shared.encode_sample(sample, model.cfg.t_max);
  d.spe = spe.encode_sample(sample, model.cfg.t_max);
  d.label = sample.label;
  return d;
}

BranchOut branch_forward(ad::Tape& tape, const TransferModel& model,
                         const DualEncoded& sample, bool is_target,
                         bool training, std::mt19937_64& rng) {
  BranchOut out;
  out.shared_fwd = tower_forward(tape, model.shared_tab, model.shared_tower,
                                 sample.shared, model.cfg.t_max);
  const ViewTables& spe_tab = is_target ? model.tgt_tab : model.src_tab;
  const TowerParams& spe_tower = is_target ? model.tgt_tower : model.src_tower;
  out.spe_fwd = tower_forward(tape, spe_tab, spe_tower, sample.spe, model.cfg.t_max);

  out.z_share = out.shared_fwd.z;
  out.z_spe = out.spe_fwd.z;
  const DomainAttnOut da = domain_attention(
      tape, out.z_share, out.z_spe, model.da, extractor_width(model.kind, model.cfg.k));
  out.z = da.z;
  out.b = da.b;

  const ad::NodeId mlp = head_forward(tape, model.head, out.z,
                                      model.cfg.dropout_keep, training, rng);
  out.logit = tape.add(mlp, out.spe_fwd.wide);  // per-domain wide scalars
  out.yhat = tape.sigmoid(out.logit);
  return out;
}

}  // namespace henfd
