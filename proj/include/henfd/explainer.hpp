#pragma once

#include <string>
#include <vector>

#include "henfd/trainer.hpp"

namespace henfd {

// Attention readout of one prediction. Rows of `field_attention` follow the
// encoded event order: history (chronological, truncated to the model's
// window) first, the target event last. `event_attention` covers the history
// rows only and is empty when the sample has no history.
struct ExplanationRecord {
  double prediction = 0.0;
  std::vector<std::string> field_names;
  std::vector<std::vector<double>> field_attention;
  std::vector<double> event_attention;
  bool has_domain_attention = false;
  double b_share = 0.0;
  double b_specific = 0.0;
  // Ranked identifiers, heaviest first; ties keep the lower index first.
  std::vector<int> events_by_weight;         // indices into the history rows
  std::vector<int> target_fields_by_weight;  // field indices of the target row
};

// Scores the sample once with dropout off and copies the attention tensors
// out of that same pass. Parameters are only read. The hierarchical
// extractor is required; the ablation extractors carry no attention.
ExplanationRecord explain_sample(const Model& model, ParamStore& store,
                                 const Sample& sample);

struct RiskEntry {
  std::string value;
  double weight = 0.0;  // wide scalar c
  long positives = 0;   // samples containing the value with label 1
  long total = 0;       // samples containing the value
};

struct FieldRiskList {
  std::string field;
  std::vector<RiskEntry> high;  // top-q by c, descending
  std::vector<RiskEntry> low;   // bottom-q by c, ascending
};

using RiskList = std::vector<FieldRiskList>;

// Ranks each requested categorical field's vocabulary by its wide scalar.
// Ties break by vocabulary index, ascending. Counts come from `ds` only;
// a sample counts once per value it contains (any event). For transfer
// models the target domain's view is ranked.
RiskList risk_list(const Model& model, ParamStore& store, const Dataset& ds,
                   const std::vector<std::string>& field_names, int q);

// Writes <dir>/report.json plus one <dir>/heatmap_NNN.csv per record
// (rows = events, columns = fields).
void export_report(const std::vector<ExplanationRecord>& records,
                   const std::string& dir);

std::string risk_list_to_json(const RiskList& lists);

}  // namespace henfd
