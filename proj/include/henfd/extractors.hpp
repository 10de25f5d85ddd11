#pragma once

#include <random>
#include <string>
#include <vector>

#include "henfd/hen.hpp"

namespace henfd {

// Interchangeable behavior-sequence extractors. Each maps an embedded sample
// to a fixed-width vector z: the hierarchical tower emits [s, e_target]
// (2k wide); the dense extractor one rectified layer over all concatenated
// field vectors (k wide); the FM extractor the pairwise Hadamard pooling over
// all valid field vectors (k wide).
enum class ExtractorKind { hen, dense, fm };

ExtractorKind extractor_from_string(const std::string& name);
std::string to_string(ExtractorKind kind);
int extractor_width(ExtractorKind kind, int k);

struct TowerParams {
  ExtractorKind kind = ExtractorKind::hen;
  HenTower hen;
  int dense_w = -1, dense_b = -1;
};

TowerParams register_tower(ParamStore& store, const std::string& prefix,
                           ExtractorKind kind, int k, int n_fields, int t_max,
                           std::mt19937_64& rng);

// z = rectifier(W . concat(all field vectors) + b); events laid out in
// t_max fixed slots (missing history slots zero-padded on the left, target
// last).
ad::NodeId dense_extract(ad::Tape& tape, const std::vector<ad::NodeId>& slots,
                         int dense_w, int dense_b);

// z = ((sum v)^2 - sum v^2) / 2 over all valid field vectors.
ad::NodeId fm_extract(ad::Tape& tape, const std::vector<ad::NodeId>& vectors);

struct TowerForward {
  ad::NodeId z = -1;
  ad::NodeId wide = -1;  // first-order term of the target event
  HenTrace hen;          // populated only for the hierarchical kind
};

TowerForward tower_forward(ad::Tape& tape, const ViewTables& tables,
                           const TowerParams& tower, const EncodedSample& sample,
                           int t_max);

}  // namespace henfd
