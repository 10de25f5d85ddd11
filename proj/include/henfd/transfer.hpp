#pragma once

#include <array>
#include <random>
#include <string>
#include <vector>

#include "henfd/extractors.hpp"

namespace henfd {

enum class TrainMode {
  target_only,
  source_only,
  pretrain_finetune,
  domain_shared,
  structure_only,
  full,
};

enum class AlignKind { none, ed, ced };

TrainMode mode_from_string(const std::string& name);
std::string to_string(TrainMode mode);
AlignKind align_from_string(const std::string& name);
std::string to_string(AlignKind align);

// Trade-off weight ramp: 0 at the start of training, saturating near 1.
// theta is the completed fraction of planned steps, clamped to [0, 1].
double lambda_schedule(double theta);

// Per-(domain, class) first and zeroth moments of a batch of representation
// vectors. Cell order: source/0, source/1, target/0, target/1.
struct BatchClassStats {
  std::array<int, 4> count{};
  std::array<std::vector<double>, 4> mean;

  static int cell(bool is_target, int label) {
    return (is_target ? 2 : 0) + (label == 1 ? 1 : 0);
  }
  void accumulate(bool is_target, int label, const std::vector<double>& z);
  void finalize();  // divides sums by counts
};

// Squared Euclidean distance between two cell means.
double class_distance(const BatchClassStats& stats, int cell_a, int cell_b);

// Intra-class cross-domain distances over all inter-class distances;
// denominator floored at 1e-12.
double ced(const BatchClassStats& stats);

// Class-agnostic squared distance between the overall domain means.
double euclidean_alignment(const BatchClassStats& stats);

// --- graph-side equivalents (differentiable) --------------------------------

ad::NodeId mean_node(ad::Tape& tape, std::span<const ad::NodeId> zs);
ad::NodeId sq_dist_node(ad::Tape& tape, ad::NodeId a, ad::NodeId b);
// means in cell order source/0, source/1, target/0, target/1
ad::NodeId ced_node(ad::Tape& tape, const std::array<ad::NodeId, 4>& means);
ad::NodeId ed_node(ad::Tape& tape, const std::array<ad::NodeId, 4>& means,
                   const std::array<int, 4>& counts);

// --- the two-domain model ----------------------------------------------------

// Domain attention: mixes the shared and specific representations with a
// per-sample softmax over bilinear scores.
struct DomainAttnParams {
  int g1w = -1, g1b = -1, g2w = -1, g3w = -1;
};

DomainAttnParams register_domain_attention(ParamStore& store,
                                           const std::string& prefix, int width,
                                           std::mt19937_64& rng);

struct DomainAttnOut {
  ad::NodeId z = -1;  // combined representation
  ad::NodeId b = -1;  // 2-simplex (share, specific)
};

DomainAttnOut domain_attention(ad::Tape& tape, ad::NodeId z_share,
                               ad::NodeId z_spe, const DomainAttnParams& da,
                               int width);

// Shared + two specific towers over their own embedding views, one domain
// attention block, one prediction head, per-domain wide scalars.
struct TransferModel {
  ModelConfig cfg;
  ExtractorKind kind = ExtractorKind::hen;
  DomainVocabMap vocab;
  ViewCodec src_codec, tgt_codec;  // specific views
  ViewTables shared_tab, src_tab, tgt_tab;
  TowerParams shared_tower, src_tower, tgt_tower;
  HeadParams head;
  DomainAttnParams da;
};

TransferModel build_transfer_model(ParamStore& store, const Schema& src_fitted,
                                   const Schema& tgt_fitted,
                                   const ModelConfig& cfg, ExtractorKind kind,
                                   std::mt19937_64& rng);

// One sample encoded against both of its views.
struct DualEncoded {
  EncodedSample shared;
  EncodedSample spe;
  int label = 0;
};

DualEncoded encode_dual(const TransferModel& model, const Sample& sample,
                        bool is_target);

struct BranchOut {
  ad::NodeId z_share = -1;
  ad::NodeId z_spe = -1;
  ad::NodeId z = -1;     // after domain attention
  ad::NodeId b = -1;     // domain-attention simplex
  ad::NodeId yhat = -1;
  ad::NodeId logit = -1;
  TowerForward shared_fwd, spe_fwd;
};

// Routes the sample through the shared tower and its own domain's specific
// tower, mixes with domain attention, and scores with the shared head plus
// the domain's wide term.
BranchOut branch_forward(ad::Tape& tape, const TransferModel& model,
                         const DualEncoded& sample, bool is_target,
                         bool training, std::mt19937_64& rng);

}  // namespace henfd
