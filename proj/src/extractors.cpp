#include "henfd/extractors.hpp"

#include <stdexcept>

namespace henfd {

ExtractorKind extractor_from_string(const std::string& name) {
  if (name == "hen") return ExtractorKind::hen;
  if (name == "dense") return ExtractorKind::dense;
  if (name == "fm") return ExtractorKind::fm;
  throw std::runtime_error("extractor: unknown kind '" + name +
                           "' (expected hen, dense, or fm)");
}

std::string to_string(ExtractorKind kind) {
  switch (kind) {
    case ExtractorKind::hen: return "hen";
    case ExtractorKind::dense: return "dense";
    case ExtractorKind::fm: return "fm";
  }
  return "?";
}

int extractor_width(ExtractorKind kind, int k) {
  return kind == ExtractorKind::hen ? 2 * k : k;
}

TowerParams register_tower(ParamStore& store, const std::string& prefix,
                           ExtractorKind kind, int k, int n_fields, int t_max,
                           std::mt19937_64& rng) {
  TowerParams t;
  t.kind = kind;
  switch (kind) {
    case ExtractorKind::hen:
      t.hen = register_hen_tower(store, prefix, k, rng);
      break;
    case ExtractorKind::dense:
      t.dense_w = store.add_uniform(prefix + "dense.W", k, n_fields * t_max * k, rng);
      t.dense_b = store.add(prefix + "dense.b", k, 1);
      break;
    case ExtractorKind::fm:
      break;  // parameter-free pooling
  }
  return t;
}

ad::NodeId dense_extract(ad::Tape& tape, const std::vector<ad::NodeId>& slots,
                         int dense_w, int dense_b) {
  const ad::NodeId w = tape.param(dense_w);
  const ad::NodeId x = tape.concat(slots);
  if (tape.node(w).cols != tape.node(x).rows)
    throw std::runtime_error("extractor: dense layout mismatch");
  return tape.relu(tape.add(tape.matvec(w, x), tape.param(dense_b)));
}

ad::NodeId fm_extract(ad::Tape& tape, const std::vector<ad::NodeId>& vectors) {
  if (vectors.empty())
    throw std::invalid_argument("extractor: fm_extract needs at least one vector");
  std::vector<ad::NodeId> squares;
  squares.reserve(vectors.size());
  for (ad::NodeId v : vectors) squares.push_back(tape.square(v));
  return tape.affine(
      tape.sub(tape.square(tape.add_n(vectors)), tape.add_n(squares)), 0.5, 0.0);
}

TowerForward tower_forward(ad::Tape& tape, const ViewTables& tables,
                           const TowerParams& tower, const EncodedSample& sample,
                           int t_max) {
  TowerForward out;
  if (tower.kind == ExtractorKind::hen) {
    out.hen = hen_tower_forward(tape, tables, tower.hen, sample);
    out.z = out.hen.z;
    out.wide = out.hen.wide;
    return out;
  }

  const int n_fields = static_cast<int>(tables.fields.size());
  std::vector<ad::NodeId> vectors;
  vectors.reserve(static_cast<size_t>(n_fields) * sample.history.size() + n_fields);
  for (const EncodedEvent& ev : sample.history) {
    const EventNodes nodes = embed_event(tape, tables, ev);
    vectors.insert(vectors.end(), nodes.v.begin(), nodes.v.end());
  }
  const EventNodes target_nodes = embed_event(tape, tables, sample.target);
  vectors.insert(vectors.end(), target_nodes.v.begin(), target_nodes.v.end());
  out.wide = wide_term(tape, tables, target_nodes);

  if (tower.kind == ExtractorKind::fm) {
    out.z = fm_extract(tape, vectors);
    return out;
  }

  // Dense: pad missing history slots with zero vectors on the left so the
  // layout is fixed at n_fields * t_max positions.
  const int pad_events = t_max - 1 - static_cast<int>(sample.history.size());
  if (pad_events < 0)
    throw std::runtime_error("extractor: history longer than t_max - 1");
  std::vector<ad::NodeId> slots;
  slots.reserve(static_cast<size_t>(n_fields) * t_max);
  for (int p = 0; p < pad_events * n_fields; ++p)
    slots.push_back(tape.zeros(tables.k));
  slots.insert(slots.end(), vectors.begin(), vectors.end());
  out.z = dense_extract(tape, slots, tower.dense_w, tower.dense_b);
  return out;
}

}  // namespace henfd
