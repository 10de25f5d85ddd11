#pragma once

#include <array>
#include <cstdint>
#include <string>
#include <vector>

#include "henfd/schema.hpp"

namespace henfd {

// Knobs for one synthetic domain. Labels follow a logistic model whose
// log-odds sum planted first-order value effects, one pairwise interaction,
// a repeated-failure history motif, two numerical effects, and small
// per-value noise weights; the intercept is calibrated so the marginal
// positive rate matches `positive_rate`.
struct SynthConfig {
  std::uint64_t seed = 1;
  int n_samples = 20000;
  double positive_rate = 0.01;
  int t_max = 10;             // histories hold at most t_max - 1 events
  double mean_hist_len = 5.0; // truncated-geometric target mean

  int vocab_main = 40;  // merchant / device / geo vocabulary size per domain
  int vocab_small = 8;  // card_type / channel vocabulary size per domain
  int n_extra_fields = 0;  // optional pure-noise categorical fields

  // Planted signal strengths (log-odds boosts). Boosts scale with the target
  // amount via amount_amplify, so the riskiest samples are near-certain fraud
  // and the optimal ranking is steep in the low-FPR region.
  std::array<double, 3> value_boost{9.0, 10.0, 11.0};
  double pair_boost = 11.0;
  double hist_boost = 10.0;
  double amount_amplify = 0.9;
  double amount_coef = 0.5;
  double age_coef = -0.3;
  double noise_half_range = 0.25;

  // Firing rates. With amount_amplify high, low-amount occurrences of a
  // planted value are mostly benign, so a flat per-value score wastes its
  // low-FPR budget on them; separating the two needs value-amount
  // interaction features. The history motif is >= min_count failed payments
  // at unusually large amounts; ordinary failures are common decoys, so
  // failure counts alone are uninformative and the discriminating feature is
  // the within-event action-amount interaction.
  double plant_value_rate = 0.0025;  // popularity pinned per planted value
  double pair_rate = 0.003;          // forced joint occurrence on the target
  double hist_rate = 0.009;          // forced repeated large-failure motif
  double fail_base_rate = 0.03;      // natural payment_fail share per event
  double hist_amount_min = 2.0;      // z threshold defining a "large" failure
  double zipf_exponent = 0.7;
};

// Cross-domain generation. Vocabularies of the two domains overlap in a
// fraction rho of values; popularity rankings decorrelate with shift_temp;
// shared_signal_fraction moves planted value signals into the overlap
// (learnable from either domain) versus domain-exclusive vocabulary. The
// optional conflict value is rare-and-risky in the source but common and
// benign in the target, so naive parameter sharing floods the target's
// low-FPR region with false alarms.
struct TransferSynthConfig {
  SynthConfig base;
  int n_src = 50000;
  int n_tgt = 14000;
  double rho = 0.5;
  double shift_temp = 1.0;
  double shared_signal_fraction = 2.0 / 3.0;
  bool conflict = true;
  double conflict_boost = 9.0;   // applied in the source domain only
  double conflict_rate = 0.025;  // popularity of the value in the target
};

struct SynthResult {
  Schema schema;   // declarations only (no fitted vocab/stats)
  Dataset data;    // samples carry SynthFlags ground truth in meta
  std::string info_json;  // planted-signal ground truth, pretty-printed
};

struct TransferSynthResult {
  Schema schema;
  Dataset src;
  Dataset tgt;
  std::string info_json;
};

// Field declarations used by every synthetic dataset.
Schema synth_schema(int n_extra_fields = 0);

SynthResult synthesize(const SynthConfig& cfg);
TransferSynthResult synthesize_transfer(const TransferSynthConfig& cfg);

// JSON round-trip for generator configs (all fields optional, defaults above).
SynthConfig synth_config_from_json(const std::string& json_text);
TransferSynthConfig transfer_config_from_json(const std::string& json_text);

}  // namespace henfd
