#pragma once

#include <random>
#include <string>
#include <vector>

#include "henfd/param_store.hpp"
#include "henfd/schema.hpp"
#include "henfd/tape.hpp"

namespace henfd {

// Parameter handles for one field of one embedding view: a k-wide lookup
// table, per-value attention scalars, and per-value first-order (wide)
// scalars. Categorical tables include the trainable OOV row 0; numerical
// fields hold a single k-vector scaled by the z-scored value and a single
// attention/wide scalar independent of the value.
struct FieldTable {
  std::string name;
  bool categorical = true;
  int rows = 0;
  int emb = -1;   // rows x k
  int attn = -1;  // rows x 1
  int wide = -1;  // rows x 1
};

struct ViewTables {
  std::string prefix;
  int k = 0;
  std::vector<FieldTable> fields;
  int wide_bias = -1;  // global first-order bias
};

// Registers one view's tables under `prefix` ("main.", "shared.", ...).
// Embeddings start uniform(-0.05, 0.05); attention and wide scalars start at
// zero so an untrained model scores every sample 0.5.
ViewTables register_view(ParamStore& store, const ViewCodec& codec,
                         const std::string& prefix, int k, std::mt19937_64& rng);

// Tape nodes of one embedded event.
struct EventNodes {
  std::vector<ad::NodeId> v;     // per-field vectors, k x 1
  std::vector<ad::NodeId> attn;  // per-field attention scalars
  std::vector<ad::NodeId> wide;  // per-field first-order contributions
};

EventNodes embed_event(ad::Tape& tape, const ViewTables& tables,
                       const EncodedEvent& event);

// The shared-view encoders of the two domains. Shared fields map equal raw
// values to one union row (reachable from either domain); unshared fields
// get disjoint per-domain row ranges in the same table. Row counts agree
// between the two codecs, so one set of tables serves both.
struct DomainVocabMap {
  ViewCodec shared_src;
  ViewCodec shared_tgt;
};

DomainVocabMap build_domain_vocab(const Schema& src_fitted, const Schema& tgt_fitted);

}  // namespace henfd
