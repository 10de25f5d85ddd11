#include "henfd/explainer.hpp"

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <numeric>
#include <sstream>
#include <stdexcept>
#include <unordered_map>
#include <unordered_set>

#include "json.hpp"

namespace henfd {

using json = nlohmann::json;

namespace {

std::vector<double> copy_values(const ad::Tape& tape, ad::NodeId id) {
  const auto v = tape.value(id);
  return {v.begin(), v.end()};
}

// Indices 0..n-1 ordered by weight descending, ties by index ascending.
std::vector<int> rank_desc(const std::vector<double>& w) {
  std::vector<int> order(w.size());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(),
                   [&](int a, int b) { return w[a] > w[b]; });
  return order;
}

void fill_from_trace(ExplanationRecord& rec, const ad::Tape& tape,
                     const HenTrace& trace, const Schema& view_schema) {
  for (const auto& f : view_schema.fields) rec.field_names.push_back(f.name);
  for (ad::NodeId w : trace.field_w) rec.field_attention.push_back(copy_values(tape, w));
  rec.field_attention.push_back(copy_values(tape, trace.target_w));
  if (trace.u >= 0) rec.event_attention = copy_values(tape, trace.u);
  rec.events_by_weight = rank_desc(rec.event_attention);
  rec.target_fields_by_weight = rank_desc(rec.field_attention.back());
}

}  // namespace

ExplanationRecord explain_sample(const Model& model, ParamStore& store,
                                 const Sample& sample) {
  const ExtractorKind kind =
      model.is_transfer ? model.tm.kind : model.sup.tower.kind;
  if (kind != ExtractorKind::hen)
    throw std::runtime_error("explainer: the " + to_string(kind) +
                             " extractor carries no attention trace");
  const ModelConfig mc = model_config(model.cfg);
  ad::Tape tape(&store);
  std::mt19937_64 unused_rng(0);
  ExplanationRecord rec;
  const bool is_target = sample.domain == "target";
  if (model.is_transfer) {
    const DualEncoded de = encode_dual(model.tm, sample, is_target);
    const BranchOut bo = branch_forward(tape, model.tm, de, is_target,
                                        /*training=*/false, unused_rng);
    tape.forward();
    rec.prediction = tape.scalar(bo.yhat);
    // The specific tower sees the sample through its own domain's
    // vocabulary, so its attention refers to the most concrete identifiers.
    const ViewCodec& codec = is_target ? model.tm.tgt_codec : model.tm.src_codec;
    fill_from_trace(rec, tape, bo.spe_fwd.hen, codec.schema);
    const auto b = copy_values(tape, bo.b);
    rec.has_domain_attention = true;
    rec.b_share = b[0];
    rec.b_specific = b[1];
  } else {
    const ViewCodec& codec = is_target ? model.sup.tgt_codec : model.sup.src_codec;
    const EncodedSample enc = codec.encode_sample(sample, mc.t_max);
    const Prediction p = predict_supervised(tape, model.sup, mc, enc,
                                            /*training=*/false, unused_rng);
    tape.forward();
    rec.prediction = tape.scalar(p.yhat);
    fill_from_trace(rec, tape, p.fwd.hen, codec.schema);
  }
  return rec;
}

RiskList risk_list(const Model& model, ParamStore& store, const Dataset& ds,
                   const std::vector<std::string>& field_names, int q) {
  if (q < 1) throw std::invalid_argument("risk_list: q must be at least 1");
  const ViewCodec& codec =
      model.is_transfer ? model.tm.tgt_codec : model.sup.tgt_codec;
  const ViewTables& tables = model.is_transfer ? model.tm.tgt_tab : model.sup.tables;

  RiskList out;
  for (const std::string& name : field_names) {
    const int fi = codec.schema.field_index(name);
    if (fi < 0) throw std::runtime_error("risk_list: unknown field '" + name + "'");
    const FieldSpec& spec = codec.schema.fields[fi];
    if (spec.kind != FieldKind::numerical && !spec.fitted)
      throw std::runtime_error("risk_list: field '" + name + "' has no fitted vocabulary");
    if (spec.kind == FieldKind::numerical)
      throw std::runtime_error("risk_list: field '" + name +
                               "' is numerical (single scalar, nothing to rank)");

    const int di = ds.schema.field_index(name);
    if (di < 0)
      throw std::runtime_error("risk_list: reference dataset lacks field '" + name + "'");

    // Sample-level containment counts over the reference dataset.
    std::unordered_map<std::string, std::pair<long, long>> counts;  // value -> (pos, total)
    std::unordered_set<std::string> seen;
    for (const Sample& s : ds.samples) {
      seen.clear();
      seen.insert(s.target.values[di].cat);
      for (const RawEvent& ev : s.history) seen.insert(ev.values[di].cat);
      for (const std::string& v : seen) {
        auto& c = counts[v];
        c.second += 1;
        if (s.label == 1) c.first += 1;
      }
    }

    const auto& wide = store.entry(tables.fields[fi].wide);
    const int n = static_cast<int>(spec.vocab.size());
    std::vector<int> order(n);
    std::iota(order.begin(), order.end(), 0);
    auto weight = [&](int vi) { return wide.value[vi + 1]; };  // row 0 is OOV
    auto entry_for = [&](int vi) {
      RiskEntry e;
      e.value = spec.vocab[vi];
      e.weight = weight(vi);
      if (auto it = counts.find(e.value); it != counts.end()) {
        e.positives = it->second.first;
        e.total = it->second.second;
      }
      return e;
    };

    FieldRiskList frl;
    frl.field = name;
    const int take = std::min(q, n);
    std::stable_sort(order.begin(), order.end(),
                     [&](int a, int b) { return weight(a) > weight(b); });
    for (int i = 0; i < take; ++i) frl.high.push_back(entry_for(order[i]));
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(),
                     [&](int a, int b) { return weight(a) < weight(b); });
    for (int i = 0; i < take; ++i) frl.low.push_back(entry_for(order[i]));
    out.push_back(std::move(frl));
  }
  return out;
}

void export_report(const std::vector<ExplanationRecord>& records,
                   const std::string& dir) {
  std::filesystem::create_directories(dir);
  json report = json::array();
  for (const ExplanationRecord& rec : records) {
    json jr;
    jr["prediction"] = rec.prediction;
    jr["fields"] = rec.field_names;
    jr["field_attention"] = rec.field_attention;
    jr["event_attention"] = rec.event_attention;
    if (rec.has_domain_attention)
      jr["domain_attention"] = {{"share", rec.b_share}, {"specific", rec.b_specific}};
    report.push_back(std::move(jr));
  }
  const std::filesystem::path base(dir);
  {
    std::ofstream os(base / "report.json", std::ios::trunc);
    if (!os) throw std::runtime_error("explainer: cannot write report under '" + dir + "'");
    os << report.dump(2) << '\n';
  }
  for (std::size_t r = 0; r < records.size(); ++r) {
    std::ostringstream name;
    name << "heatmap_" << std::setfill('0') << std::setw(3) << r << ".csv";
    std::ofstream os(base / name.str(), std::ios::trunc);
    if (!os) throw std::runtime_error("explainer: cannot write heatmap under '" + dir + "'");
    const ExplanationRecord& rec = records[r];
    for (std::size_t f = 0; f < rec.field_names.size(); ++f)
      os << (f ? "," : "") << rec.field_names[f];
    os << '\n' << std::setprecision(17);
    for (const auto& row : rec.field_attention) {
      for (std::size_t f = 0; f < row.size(); ++f) os << (f ? "," : "") << row[f];
      os << '\n';
    }
  }
}

std::string risk_list_to_json(const RiskList& lists) {
  json j = json::array();
  for (const FieldRiskList& frl : lists) {
    json jf;
    jf["field"] = frl.field;
    auto dump = [](const std::vector<RiskEntry>& es) {
      json a = json::array();
      for (const RiskEntry& e : es)
        a.push_back({{"value", e.value},
                     {"weight", e.weight},
                     {"positives", e.positives},
                     {"total", e.total}});
      return a;
    };
    jf["high_risk"] = dump(frl.high);
    jf["low_risk"] = dump(frl.low);
    j.push_back(std::move(jf));
  }
  return j.dump(2);
}

}  // namespace henfd
