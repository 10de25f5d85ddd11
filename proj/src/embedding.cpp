#include "henfd/embedding.hpp"

#include <stdexcept>

namespace henfd {

ViewTables register_view(ParamStore& store, const ViewCodec& codec,
                         const std::string& prefix, int k, std::mt19937_64& rng) {
  if (k <= 0) throw std::invalid_argument("embedding: k must be positive");
  ViewTables vt;
  vt.prefix = prefix;
  vt.k = k;
  for (size_t fi = 0; fi < codec.fields.size(); ++fi) {
    const FieldSpec& spec = codec.schema.fields[fi];
    FieldTable ft;
    ft.name = spec.name;
    ft.categorical = spec.kind == FieldKind::categorical;
    ft.rows = ft.categorical ? codec.fields[fi].rows : 1;
    ft.emb = store.add_uniform(prefix + "emb." + spec.name, ft.rows, k, rng);
    ft.attn = store.add(prefix + "attn." + spec.name, ft.rows, 1);
    ft.wide = store.add(prefix + "wide." + spec.name, ft.rows, 1);
    vt.fields.push_back(std::move(ft));
  }
  vt.wide_bias = store.add(prefix + "wide.bias", 1, 1);
  return vt;
}

EventNodes embed_event(ad::Tape& tape, const ViewTables& tables,
                       const EncodedEvent& event) {
  if (event.idx.size() != tables.fields.size())
    throw std::runtime_error("embedding: event arity does not match the view");
  EventNodes out;
  out.v.reserve(tables.fields.size());
  for (size_t fi = 0; fi < tables.fields.size(); ++fi) {
    const FieldTable& ft = tables.fields[fi];
    if (ft.categorical) {
      const int row = event.idx[fi];
      if (row < 0 || row >= ft.rows)
        throw std::runtime_error("embedding: encoded index out of range for '" +
                                 ft.name + "'");
      out.v.push_back(tape.gather(tape.param(ft.emb), row));
      out.attn.push_back(tape.gather(tape.param(ft.attn), row));
      out.wide.push_back(tape.gather(tape.param(ft.wide), row));
    } else {
      const double x = event.num[fi];
      out.v.push_back(tape.affine(tape.gather(tape.param(ft.emb), 0), x, 0.0));
      out.attn.push_back(tape.gather(tape.param(ft.attn), 0));
      out.wide.push_back(tape.affine(tape.gather(tape.param(ft.wide), 0), x, 0.0));
    }
  }
  return out;
}

DomainVocabMap build_domain_vocab(const Schema& src_fitted, const Schema& tgt_fitted) {
  if (!src_fitted.fitted() || !tgt_fitted.fitted())
    throw std::runtime_error("embedding: domain vocab needs fitted schemas");
  if (src_fitted.fields.size() != tgt_fitted.fields.size())
    throw std::runtime_error("embedding: domain schemas disagree on field count");

  DomainVocabMap dv;
  dv.shared_src.schema = src_fitted;
  dv.shared_tgt.schema = tgt_fitted;
  dv.shared_src.fields.resize(src_fitted.fields.size());
  dv.shared_tgt.fields.resize(src_fitted.fields.size());

  for (size_t fi = 0; fi < src_fitted.fields.size(); ++fi) {
    const FieldSpec& fs = src_fitted.fields[fi];
    const FieldSpec& ft = tgt_fitted.fields[fi];
    if (fs.name != ft.name || fs.kind != ft.kind || fs.shared != ft.shared)
      throw std::runtime_error("embedding: domain schemas disagree on field '" +
                               fs.name + "'");
    FieldCodec& cs = dv.shared_src.fields[fi];
    FieldCodec& ct = dv.shared_tgt.fields[fi];
    if (fs.kind == FieldKind::numerical) {
      cs.mean = fs.mean;
      cs.std_dev = fs.std_dev > 0.0 ? fs.std_dev : 1.0;
      ct.mean = ft.mean;
      ct.std_dev = ft.std_dev > 0.0 ? ft.std_dev : 1.0;
      cs.rows = ct.rows = 1;
      continue;
    }
    if (fs.shared) {
      // Union vocabulary: source order first, previously unseen target
      // values appended. Equal values resolve to the same row either way.
      int next = 1;
      for (const std::string& v : fs.vocab) cs.index.emplace(v, next++);
      ct.index = cs.index;
      for (const std::string& v : ft.vocab)
        if (!ct.index.count(v)) ct.index.emplace(v, next++);
      cs.index = ct.index;  // source may also meet union values at encode time
      cs.rows = ct.rows = next;
    } else {
      // Disjoint row ranges; the OOV row 0 stays common.
      int next = 1;
      for (const std::string& v : fs.vocab) cs.index.emplace(v, next++);
      for (const std::string& v : ft.vocab) ct.index.emplace(v, next++);
      cs.rows = ct.rows = next;
    }
  }
  return dv;
}

}  // namespace henfd
