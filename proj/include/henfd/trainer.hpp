#pragma once

#include <cstdint>
#include <random>
#include <span>
#include <string>
#include <vector>

#include "henfd/metrics.hpp"
#include "henfd/transfer.hpp"

namespace henfd {

struct TrainConfig {
  double lr = 0.005;
  int k = 16;
  int hidden = 64;
  int t_max = 10;
  double dropout_keep = 0.8;
  int upsample_factor = 5;
  int batch_size = 256;
  int max_epochs = 15;
  int patience = 3;
  std::uint64_t seed = 1;
  TrainMode mode = TrainMode::target_only;
  AlignKind align = AlignKind::ced;
  ExtractorKind extractor = ExtractorKind::hen;
  double maxfpr = 0.01;
};

// Partial override of the defaults above; unknown keys are an error.
TrainConfig train_config_from_json(const std::string& text);
TrainConfig load_train_config(const std::string& path);
std::string train_config_to_json(const TrainConfig& cfg);

ModelConfig model_config(const TrainConfig& cfg);

// Every training mode reduces to one of two inference artifacts: a single
// supervised view (with per-domain encoders that may coincide) or the
// dual-view transfer architecture.
struct SupervisedModel {
  ViewCodec src_codec;
  ViewCodec tgt_codec;
  ViewTables tables;
  TowerParams tower;
  HeadParams head;
};

struct Model {
  TrainConfig cfg;
  bool is_transfer = false;
  SupervisedModel sup;  // valid when !is_transfer
  TransferModel tm;     // valid when is_transfer
};

// Registers all parameters for `cfg.mode` into `store` and returns the
// wiring. Pass the fitted schema(s) the mode requires; the unused one may be
// null. Registration order is deterministic, so a rebuilt model maps onto a
// reloaded checkpoint by name.
Model build_model(const TrainConfig& cfg, const Schema* src_fitted,
                  const Schema* tgt_fitted, ParamStore& store,
                  std::mt19937_64& rng);

struct Prediction {
  ad::NodeId yhat = -1;
  ad::NodeId logit = -1;
  TowerForward fwd;
};

Prediction predict_supervised(ad::Tape& tape, const SupervisedModel& model,
                              const ModelConfig& mc, const EncodedSample& sample,
                              bool training, std::mt19937_64& rng);

// Dense Adam sweep over every entry (untouched entries have zero gradients
// and stay put). Throws on non-finite gradients, naming the parameter.
void adam_step(ParamStore& store, double lr, double beta1 = 0.9,
               double beta2 = 0.999, double eps = 1e-8);

// Caps worker counts: HENFD_THREADS when set, hardware concurrency otherwise.
int resolve_threads(int requested = 0);

// Dropout-off scores for every sample, parallel over samples. Encoders are
// chosen by each sample's domain tag. The store is only read.
std::vector<double> score_all(const Model& model, ParamStore& store,
                              std::span<const Sample> samples, int threads = 0);

struct EpochRow {
  int epoch = 0;
  double train_loss = 0.0;
  double val_spauc = 0.0;
};

struct TrainResult {
  ParamStore store;  // best-validation parameters
  Model model;
  std::vector<EpochRow> history;
  int best_epoch = 0;  // 0 when no epoch ran
  double best_val_spauc = 0.0;
  std::string manifest_json;
};

// Single-domain modes train on their own domain's set (pass it in that slot
// and leave the other empty); transfer modes need both. `val` drives early
// stopping via SPAUC at cfg.maxfpr.
TrainResult train(const TrainConfig& cfg, const Dataset& src_train,
                  const Dataset& tgt_train, const Dataset& val);

void write_history_csv(const std::string& path,
                       const std::vector<EpochRow>& history);

MetricReport evaluate(const Model& model, ParamStore& store, const Dataset& ds,
                      double maxfpr, int threads = 0);

void save_model(const std::string& path, const TrainResult& result);

struct LoadedModel {
  ParamStore store;
  Model model;
  int best_epoch = 0;
  double best_val_spauc = 0.0;
};

LoadedModel load_model(const std::string& path);

}  // namespace henfd
