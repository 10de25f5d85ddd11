#pragma once

#include <random>
#include <span>
#include <string>
#include <vector>

#include "henfd/embedding.hpp"
#include "henfd/param_store.hpp"
#include "henfd/schema.hpp"
#include "henfd/tape.hpp"

namespace henfd {

struct ModelConfig {
  int k = 16;               // embedding width
  int hidden = 64;          // MLP hidden units (two layers)
  int t_max = 10;           // sequence cap: target + up to t_max-1 history events
  double dropout_keep = 0.8;  // applied to MLP hiddens while training
};

// The hierarchical tower: three square dense maps used by the event-level
// attention (value path f1 with bias, bilinear score paths f2/f3 without).
struct HenTower {
  int f1w = -1, f1b = -1, f2w = -1, f3w = -1;
};

HenTower register_hen_tower(ParamStore& store, const std::string& prefix, int k,
                            std::mt19937_64& rng);

// e = sum_i w_i v_i + sum_{i<j} v_i (*) v_j with w = softmax over the fields'
// attention scalars; the pairwise sum uses the half-square-difference
// identity, so cost stays linear in the field count.
struct FieldExtract {
  ad::NodeId e = -1;  // k x 1 event embedding
  ad::NodeId w = -1;  // n x 1 field-attention simplex
};

FieldExtract field_extract(ad::Tape& tape, const std::vector<ad::NodeId>& v,
                           const std::vector<ad::NodeId>& attn);

// Attention pooling over history event embeddings. Scores are scaled inner
// products of the f2/f3 projections; the pooled value path goes through f1.
// An empty history yields s = 0 and no attention vector.
struct EventExtract {
  ad::NodeId s = -1;  // k x 1 sequence embedding
  ad::NodeId u = -1;  // T' x 1 event attention; -1 when the history is empty
};

EventExtract event_extract(ad::Tape& tape, const std::vector<ad::NodeId>& e_hist,
                           const HenTower& tower, int k);

// First-order logit term of the target event: the sum of its per-value wide
// scalars plus the global bias.
ad::NodeId wide_term(ad::Tape& tape, const ViewTables& tables,
                     const EventNodes& target);

// Prediction head: two rectified dense layers with dropout on the hiddens,
// then a scalar output.
struct HeadParams {
  int w1 = -1, b1 = -1, w2 = -1, b2 = -1, w3 = -1, b3 = -1;
};

HeadParams register_head(ParamStore& store, const std::string& prefix,
                         int in_width, int hidden, std::mt19937_64& rng);

ad::NodeId head_forward(ad::Tape& tape, const HeadParams& head, ad::NodeId z,
                        double keep_prob, bool training, std::mt19937_64& rng);

// Full tower pass over one encoded sample; z = [s, e_target] (2k wide).
// Node handles of every attention vector are kept for explanation readout.
struct HenTrace {
  ad::NodeId z = -1;
  ad::NodeId s = -1;
  ad::NodeId e_target = -1;
  ad::NodeId u = -1;                 // -1 when the history is empty
  ad::NodeId target_w = -1;          // field attention of the target event
  std::vector<ad::NodeId> field_w;   // field attention per history event
  std::vector<ad::NodeId> e_hist;
  ad::NodeId wide = -1;              // scalar first-order term
};

HenTrace hen_tower_forward(ad::Tape& tape, const ViewTables& tables,
                           const HenTower& tower, const EncodedSample& sample);

// Mean negative log-likelihood over a batch of sigmoid outputs; predictions
// are clamped to [1e-12, 1 - 1e-12] before the logs.
ad::NodeId nll_loss(ad::Tape& tape, std::span<const ad::NodeId> yhat,
                    std::span<const int> labels);

}  // namespace henfd
