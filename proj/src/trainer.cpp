#include "henfd/trainer.hpp"

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <fstream>
#include <iomanip>
#include <stdexcept>
#include <thread>

#include "henfd/checkpoint.hpp"
#include "henfd/sampling.hpp"
#include "json.hpp"

namespace henfd {

using json = nlohmann::json;

namespace {

// Decorrelated per-purpose RNG streams from one user seed (splitmix64).
std::uint64_t sub_seed(std::uint64_t seed, std::uint64_t stream) {
  std::uint64_t z = seed + 0x9e3779b97f4a7c15ULL * (stream + 1);
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

void validate(const TrainConfig& c) {
  if (c.lr <= 0.0) throw std::invalid_argument("config: lr must be positive");
  if (c.k <= 0 || c.hidden <= 0) throw std::invalid_argument("config: k and hidden must be positive");
  if (c.t_max < 1) throw std::invalid_argument("config: t_max must be at least 1");
  if (c.dropout_keep <= 0.0 || c.dropout_keep > 1.0)
    throw std::invalid_argument("config: dropout_keep must lie in (0, 1]");
  if (c.upsample_factor < 1) throw std::invalid_argument("config: upsample must be at least 1");
  if (c.batch_size < 1) throw std::invalid_argument("config: batch_size must be at least 1");
  if (c.max_epochs < 0) throw std::invalid_argument("config: max_epochs must be nonnegative");
  if (c.patience < 1) throw std::invalid_argument("config: patience must be at least 1");
  if (c.maxfpr <= 0.0 || c.maxfpr > 1.0)
    throw std::invalid_argument("config: maxfpr must lie in (0, 1]");
}

}  // namespace

TrainConfig train_config_from_json(const std::string& text) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::exception& e) {
    throw std::runtime_error(std::string("config: not valid JSON: ") + e.what());
  }
  if (!j.is_object()) throw std::runtime_error("config: top level must be an object");
  TrainConfig c;
  for (auto it = j.begin(); it != j.end(); ++it) {
    const std::string& key = it.key();
    const json& v = it.value();
    if (key == "lr") c.lr = v.get<double>();
    else if (key == "k") c.k = v.get<int>();
    else if (key == "hidden") c.hidden = v.get<int>();
    else if (key == "t_max") c.t_max = v.get<int>();
    else if (key == "dropout_keep") c.dropout_keep = v.get<double>();
    else if (key == "upsample") c.upsample_factor = v.get<int>();
    else if (key == "batch_size") c.batch_size = v.get<int>();
    else if (key == "max_epochs") c.max_epochs = v.get<int>();
    else if (key == "patience") c.patience = v.get<int>();
    else if (key == "seed") c.seed = v.get<std::uint64_t>();
    else if (key == "mode") c.mode = mode_from_string(v.get<std::string>());
    else if (key == "align") c.align = align_from_string(v.get<std::string>());
    else if (key == "extractor") c.extractor = extractor_from_string(v.get<std::string>());
    else if (key == "maxfpr") c.maxfpr = v.get<double>();
    else throw std::runtime_error("config: unknown key '" + key + "'");
  }
  validate(c);
  return c;
}

TrainConfig load_train_config(const std::string& path) {
  std::ifstream is(path);
  if (!is) throw std::runtime_error("config: cannot open '" + path + "'");
  std::string text((std::istreambuf_iterator<char>(is)), std::istreambuf_iterator<char>());
  return train_config_from_json(text);
}

std::string train_config_to_json(const TrainConfig& c) {
  json j;
  j["lr"] = c.lr;
  j["k"] = c.k;
  j["hidden"] = c.hidden;
  j["t_max"] = c.t_max;
  j["dropout_keep"] = c.dropout_keep;
  j["upsample"] = c.upsample_factor;
  j["batch_size"] = c.batch_size;
  j["max_epochs"] = c.max_epochs;
  j["patience"] = c.patience;
  j["seed"] = c.seed;
  j["mode"] = to_string(c.mode);
  j["align"] = to_string(c.align);
  j["extractor"] = to_string(c.extractor);
  j["maxfpr"] = c.maxfpr;
  return j.dump();
}

ModelConfig model_config(const TrainConfig& cfg) {
  ModelConfig mc;
  mc.k = cfg.k;
  mc.hidden = cfg.hidden;
  mc.t_max = cfg.t_max;
  mc.dropout_keep = cfg.dropout_keep;
  return mc;
}

Model build_model(const TrainConfig& cfg, const Schema* src_fitted,
                  const Schema* tgt_fitted, ParamStore& store,
                  std::mt19937_64& rng) {
  Model m;
  m.cfg = cfg;
  const ModelConfig mc = model_config(cfg);
  auto require_fitted = [](const Schema* s, const char* which) -> const Schema& {
    if (!s || !s->fitted())
      throw std::runtime_error(std::string("trainer: mode requires a fitted ") + which + " schema");
    return *s;
  };
  auto register_single_view = [&](const ViewCodec& src_codec, const ViewCodec& tgt_codec) {
    m.sup.src_codec = src_codec;
    m.sup.tgt_codec = tgt_codec;
    m.sup.tables = register_view(store, src_codec, "main.", cfg.k, rng);
    m.sup.tower = register_tower(store, "main.", cfg.extractor, cfg.k,
                                 src_codec.schema.n_fields(), cfg.t_max, rng);
    m.sup.head = register_head(store, "head.", extractor_width(cfg.extractor, cfg.k),
                               cfg.hidden, rng);
  };
  switch (cfg.mode) {
    case TrainMode::target_only: {
      ViewCodec codec = make_codec(require_fitted(tgt_fitted, "target"));
      register_single_view(codec, codec);
      break;
    }
    case TrainMode::source_only: {
      ViewCodec codec = make_codec(require_fitted(src_fitted, "source"));
      register_single_view(codec, codec);
      break;
    }
    case TrainMode::pretrain_finetune:
    case TrainMode::domain_shared: {
      DomainVocabMap vm = build_domain_vocab(require_fitted(src_fitted, "source"),
                                             require_fitted(tgt_fitted, "target"));
      register_single_view(vm.shared_src, vm.shared_tgt);
      break;
    }
    case TrainMode::structure_only:
    case TrainMode::full: {
      m.is_transfer = true;
      m.tm = build_transfer_model(store, require_fitted(src_fitted, "source"),
                                  require_fitted(tgt_fitted, "target"), mc,
                                  cfg.extractor, rng);
      break;
    }
  }
  return m;
}

Prediction predict_supervised(ad::Tape& tape, const SupervisedModel& model,
                              const ModelConfig& mc, const EncodedSample& sample,
                              bool training, std::mt19937_64& rng) {
  Prediction p;
  p.fwd = tower_forward(tape, model.tables, model.tower, sample, mc.t_max);
  ad::NodeId h = head_forward(tape, model.head, p.fwd.z, mc.dropout_keep, training, rng);
  p.logit = tape.add(h, p.fwd.wide);
  p.yhat = tape.sigmoid(p.logit);
  return p;
}

void adam_step(ParamStore& store, double lr, double beta1, double beta2,
               double eps) {
  for (int i = 0; i < store.size(); ++i) {
    auto& e = store.entry(i);
    ++e.step;
    const double bc1 = 1.0 - std::pow(beta1, static_cast<double>(e.step));
    const double bc2 = 1.0 - std::pow(beta2, static_cast<double>(e.step));
    for (std::size_t j = 0; j < e.value.size(); ++j) {
      const double g = e.grad[j];
      if (!std::isfinite(g))
        throw std::runtime_error("adam_step: non-finite gradient in '" + e.name + "'");
      e.m[j] = beta1 * e.m[j] + (1.0 - beta1) * g;
      e.v[j] = beta2 * e.v[j] + (1.0 - beta2) * g * g;
      const double mhat = e.m[j] / bc1;
      const double vhat = e.v[j] / bc2;
      e.value[j] -= lr * mhat / (std::sqrt(vhat) + eps);
    }
  }
}

int resolve_threads(int requested) {
  if (requested > 0) return requested;
  if (const char* env = std::getenv("HENFD_THREADS")) {
    const int v = std::atoi(env);
    if (v > 0) return v;
  }
  const unsigned hw = std::thread::hardware_concurrency();
  return hw > 0 ? static_cast<int>(hw) : 1;
}

std::vector<double> score_all(const Model& model, ParamStore& store,
                              std::span<const Sample> samples, int threads) {
  std::vector<double> scores(samples.size(), 0.0);
  if (samples.empty()) return scores;
  const ModelConfig mc = model_config(model.cfg);
  auto worker = [&](std::size_t lo, std::size_t hi) {
    ad::Tape tape(&store);
    std::mt19937_64 unused_rng(0);  // dropout is off on this path
    for (std::size_t i = lo; i < hi; ++i) {
      const Sample& s = samples[i];
      const bool is_target = s.domain == "target";
      tape.clear();
      if (model.is_transfer) {
        DualEncoded de = encode_dual(model.tm, s, is_target);
        BranchOut bo = branch_forward(tape, model.tm, de, is_target,
                                      /*training=*/false, unused_rng);
        tape.forward();
        scores[i] = tape.scalar(bo.yhat);
      } else {
        const ViewCodec& codec = is_target ? model.sup.tgt_codec : model.sup.src_codec;
        EncodedSample enc = codec.encode_sample(s, mc.t_max);
        Prediction p = predict_supervised(tape, model.sup, mc, enc,
                                          /*training=*/false, unused_rng);
        tape.forward();
        scores[i] = tape.scalar(p.yhat);
      }
    }
  };
  const std::size_t n = samples.size();
  const int t = std::min<std::size_t>(static_cast<std::size_t>(resolve_threads(threads)), n);
  if (t <= 1) {
    worker(0, n);
    return scores;
  }
  std::vector<std::thread> pool;
  pool.reserve(t);
  for (int w = 0; w < t; ++w) {
    const std::size_t lo = n * w / t;
    const std::size_t hi = n * (w + 1) / t;
    pool.emplace_back(worker, lo, hi);
  }
  for (auto& th : pool) th.join();
  return scores;
}

MetricReport evaluate(const Model& model, ParamStore& store, const Dataset& ds,
                      double maxfpr, int threads) {
  if (ds.samples.empty()) throw std::invalid_argument("evaluate: dataset is empty");
  const std::vector<double> scores = score_all(model, store, ds.samples, threads);
  std::vector<int> labels(ds.samples.size());
  for (std::size_t i = 0; i < ds.samples.size(); ++i) labels[i] = ds.samples[i].label;
  const double sp = spauc(scores, labels, maxfpr);
  const double a = auc(scores, labels);
  return make_report({sp}, {a}, maxfpr);
}

namespace {

struct EarlyStop {
  double best = -1.0;
  int best_epoch = 0;
  int since = 0;
  std::vector<std::vector<double>> snap;
};

double val_spauc(const Model& model, ParamStore& store, const Dataset& val,
                 double maxfpr) {
  const std::vector<double> scores = score_all(model, store, val.samples, 0);
  std::vector<int> labels(val.samples.size());
  for (std::size_t i = 0; i < val.samples.size(); ++i) labels[i] = val.samples[i].label;
  return spauc(scores, labels, maxfpr);
}

// Records the epoch, updates the incumbent, and reports whether patience ran
// out.
bool note_epoch(const TrainConfig& cfg, const Model& model, ParamStore& store,
                const Dataset& val, double train_loss, int& epoch_counter,
                std::vector<EpochRow>& history, EarlyStop& es) {
  ++epoch_counter;
  const double v = val_spauc(model, store, val, cfg.maxfpr);
  history.push_back({epoch_counter, train_loss, v});
  if (v > es.best) {
    es.best = v;
    es.best_epoch = epoch_counter;
    es.since = 0;
    es.snap = store.snapshot_values();
    return false;
  }
  return ++es.since >= cfg.patience;
}

// One supervised phase: upsampled index multiset, shuffled each epoch.
void run_supervised_phase(const TrainConfig& cfg, const Model& model,
                          ParamStore& store,
                          const std::vector<EncodedSample>& enc,
                          const Dataset& val, int epoch_budget,
                          int& epoch_counter, std::vector<EpochRow>& history,
                          EarlyStop& es, std::mt19937_64& shuffle_rng,
                          std::mt19937_64& dropout_rng) {
  if (enc.empty()) throw std::runtime_error("trainer: training set is empty");
  const ModelConfig mc = model_config(cfg);
  std::vector<std::size_t> multiset;
  for (std::size_t i = 0; i < enc.size(); ++i) {
    multiset.push_back(i);
    if (enc[i].label == 1)
      for (int r = 1; r < cfg.upsample_factor; ++r) multiset.push_back(i);
  }
  ad::Tape tape(&store);
  std::vector<ad::NodeId> yhats;
  std::vector<int> labels;
  for (int ep = 0; ep < epoch_budget; ++ep) {
    std::shuffle(multiset.begin(), multiset.end(), shuffle_rng);
    double loss_sum = 0.0;
    std::size_t n_batches = 0;
    for (std::size_t start = 0; start < multiset.size();
         start += static_cast<std::size_t>(cfg.batch_size)) {
      const std::size_t stop =
          std::min(multiset.size(), start + static_cast<std::size_t>(cfg.batch_size));
      tape.clear();
      yhats.clear();
      labels.clear();
      for (std::size_t i = start; i < stop; ++i) {
        const EncodedSample& s = enc[multiset[i]];
        Prediction p = predict_supervised(tape, model.sup, mc, s,
                                          /*training=*/true, dropout_rng);
        yhats.push_back(p.yhat);
        labels.push_back(s.label);
      }
      const ad::NodeId loss = nll_loss(tape, yhats, labels);
      tape.forward();
      store.zero_grad();
      tape.backward(loss);
      adam_step(store, cfg.lr);
      loss_sum += tape.scalar(loss);
      ++n_batches;
    }
    if (note_epoch(cfg, model, store, val, loss_sum / static_cast<double>(n_batches),
                   epoch_counter, history, es))
      break;
  }
}

// Joint stratified loop for the transfer modes; the alignment term is added
// only in mode `full` with a non-none alignment choice.
void run_transfer_phase(const TrainConfig& cfg, const Model& model,
                        ParamStore& store,
                        const std::vector<DualEncoded>& src_enc,
                        const std::vector<DualEncoded>& tgt_enc,
                        const Dataset& val, int& epoch_counter,
                        std::vector<EpochRow>& history, EarlyStop& es,
                        std::mt19937_64& dropout_rng) {
  std::vector<int> src_labels(src_enc.size());
  for (std::size_t i = 0; i < src_enc.size(); ++i) src_labels[i] = src_enc[i].label;
  std::vector<int> tgt_labels(tgt_enc.size());
  for (std::size_t i = 0; i < tgt_enc.size(); ++i) tgt_labels[i] = tgt_enc[i].label;
  StratifiedBatcher batcher(src_labels, tgt_labels,
                            static_cast<std::size_t>(cfg.batch_size),
                            sub_seed(cfg.seed, 4));
  const bool use_align = cfg.mode == TrainMode::full && cfg.align != AlignKind::none;
  const std::size_t bpe = batcher.batches_per_epoch();
  const double total_steps =
      static_cast<double>(cfg.max_epochs) * static_cast<double>(bpe);
  std::size_t global_step = 0;
  ad::Tape tape(&store);
  std::vector<ad::NodeId> yhats;
  std::vector<int> labels;
  for (int ep = 0; ep < cfg.max_epochs; ++ep) {
    batcher.start_epoch();
    double loss_sum = 0.0;
    for (std::size_t b = 0; b < bpe; ++b) {
      const JointBatch jb = batcher.next_batch();
      tape.clear();
      yhats.clear();
      labels.clear();
      std::array<std::vector<ad::NodeId>, 4> cell_z;
      auto run_branch = [&](const DualEncoded& de, bool is_target) {
        BranchOut bo = branch_forward(tape, model.tm, de, is_target,
                                      /*training=*/true, dropout_rng);
        yhats.push_back(bo.yhat);
        labels.push_back(de.label);
        cell_z[BatchClassStats::cell(is_target, de.label)].push_back(bo.z);
      };
      for (std::size_t i : jb.src) run_branch(src_enc[i], false);
      for (std::size_t i : jb.tgt) run_branch(tgt_enc[i], true);
      ad::NodeId loss = nll_loss(tape, yhats, labels);
      if (use_align) {
        const double theta =
            total_steps > 0.0 ? static_cast<double>(global_step) / total_steps : 0.0;
        const double lam = lambda_schedule(theta);
        std::array<ad::NodeId, 4> means{};
        std::array<int, 4> counts{};
        for (int c = 0; c < 4; ++c) {
          means[c] = mean_node(tape, cell_z[c]);
          counts[c] = static_cast<int>(cell_z[c].size());
        }
        const ad::NodeId delta = cfg.align == AlignKind::ced
                                     ? ced_node(tape, means)
                                     : ed_node(tape, means, counts);
        loss = tape.add(loss, tape.affine(delta, lam, 0.0));
      }
      tape.forward();
      store.zero_grad();
      tape.backward(loss);
      adam_step(store, cfg.lr);
      loss_sum += tape.scalar(loss);
      ++global_step;
    }
    if (note_epoch(cfg, model, store, val, loss_sum / static_cast<double>(bpe),
                   epoch_counter, history, es))
      break;
  }
}

// Fresh draws for the shared-view rows only the target domain can reach;
// used between the two phases of pretrain_finetune. Source rows occupy
// 1..|src vocab| of every table, so target-only rows are the tail.
void reinit_target_rows(ParamStore& store, const ViewTables& tab,
                        const Schema& src_fitted, std::mt19937_64& rng) {
  std::uniform_real_distribution<double> unif(-0.05, 0.05);
  for (std::size_t f = 0; f < tab.fields.size(); ++f) {
    const FieldTable& ft = tab.fields[f];
    if (!ft.categorical) continue;
    const int first = 1 + static_cast<int>(src_fitted.fields[f].vocab.size());
    auto refresh = [&](int entry_id, bool uniform_init) {
      auto& e = store.entry(entry_id);
      for (int r = first; r < e.rows; ++r) {
        for (int c = 0; c < e.cols; ++c) {
          const std::size_t at = static_cast<std::size_t>(r) * e.cols + c;
          e.value[at] = uniform_init ? unif(rng) : 0.0;
          e.m[at] = 0.0;
          e.v[at] = 0.0;
        }
      }
    };
    refresh(ft.emb, true);
    refresh(ft.attn, false);
    refresh(ft.wide, false);
  }
}

std::string make_manifest(const TrainConfig& cfg, const Schema* src_fitted,
                          const Schema* tgt_fitted, int best_epoch,
                          double best_val) {
  json j;
  j["format"] = 1;
  j["config"] = json::parse(train_config_to_json(cfg));
  j["schema_src"] = src_fitted ? json::parse(schema_to_json(*src_fitted)) : json();
  j["schema_tgt"] = tgt_fitted ? json::parse(schema_to_json(*tgt_fitted)) : json();
  j["best_epoch"] = best_epoch;
  j["best_val_spauc"] = best_val;
  return j.dump();
}

std::vector<EncodedSample> encode_with(const ViewCodec& codec,
                                       const std::vector<Sample>& samples,
                                       int t_max) {
  return codec.encode_all(samples, t_max);
}

}  // namespace

TrainResult train(const TrainConfig& cfg, const Dataset& src_train,
                  const Dataset& tgt_train, const Dataset& val) {
  validate(cfg);
  TrainResult out;
  std::mt19937_64 init_rng(sub_seed(cfg.seed, 0));
  std::mt19937_64 shuffle_rng(sub_seed(cfg.seed, 1));
  std::mt19937_64 dropout_rng(sub_seed(cfg.seed, 2));
  std::mt19937_64 reinit_rng(sub_seed(cfg.seed, 3));

  const bool needs_src = cfg.mode != TrainMode::target_only;
  const bool needs_tgt = cfg.mode != TrainMode::source_only;
  if (needs_src && src_train.samples.empty())
    throw std::runtime_error("trainer: mode " + to_string(cfg.mode) +
                             " needs source training data");
  if (needs_tgt && tgt_train.samples.empty())
    throw std::runtime_error("trainer: mode " + to_string(cfg.mode) +
                             " needs target training data");

  Schema src_fitted, tgt_fitted;
  if (needs_src) src_fitted = fit_schema(src_train.schema, src_train.samples);
  if (needs_tgt) tgt_fitted = fit_schema(tgt_train.schema, tgt_train.samples);

  out.model = build_model(cfg, needs_src ? &src_fitted : nullptr,
                          needs_tgt ? &tgt_fitted : nullptr, out.store, init_rng);

  int epoch_counter = 0;
  EarlyStop es;
  switch (cfg.mode) {
    case TrainMode::target_only: {
      const auto enc = encode_with(out.model.sup.tgt_codec, tgt_train.samples, cfg.t_max);
      run_supervised_phase(cfg, out.model, out.store, enc, val, cfg.max_epochs,
                           epoch_counter, out.history, es, shuffle_rng, dropout_rng);
      break;
    }
    case TrainMode::source_only: {
      const auto enc = encode_with(out.model.sup.src_codec, src_train.samples, cfg.t_max);
      run_supervised_phase(cfg, out.model, out.store, enc, val, cfg.max_epochs,
                           epoch_counter, out.history, es, shuffle_rng, dropout_rng);
      break;
    }
    case TrainMode::domain_shared: {
      auto enc = encode_with(out.model.sup.src_codec, src_train.samples, cfg.t_max);
      const auto tgt_enc = encode_with(out.model.sup.tgt_codec, tgt_train.samples, cfg.t_max);
      enc.insert(enc.end(), tgt_enc.begin(), tgt_enc.end());
      run_supervised_phase(cfg, out.model, out.store, enc, val, cfg.max_epochs,
                           epoch_counter, out.history, es, shuffle_rng, dropout_rng);
      break;
    }
    case TrainMode::pretrain_finetune: {
      const auto src_enc = encode_with(out.model.sup.src_codec, src_train.samples, cfg.t_max);
      const auto tgt_enc = encode_with(out.model.sup.tgt_codec, tgt_train.samples, cfg.t_max);
      run_supervised_phase(cfg, out.model, out.store, src_enc, val, cfg.max_epochs,
                           epoch_counter, out.history, es, shuffle_rng, dropout_rng);
      if (es.best_epoch > 0) out.store.restore_values(es.snap);
      reinit_target_rows(out.store, out.model.sup.tables, src_fitted, reinit_rng);
      es = EarlyStop{};  // the fine-tuning phase tracks its own incumbent
      run_supervised_phase(cfg, out.model, out.store, tgt_enc, val, cfg.max_epochs,
                           epoch_counter, out.history, es, shuffle_rng, dropout_rng);
      break;
    }
    case TrainMode::structure_only:
    case TrainMode::full: {
      std::vector<DualEncoded> src_enc(src_train.samples.size());
      for (std::size_t i = 0; i < src_train.samples.size(); ++i)
        src_enc[i] = encode_dual(out.model.tm, src_train.samples[i], false);
      std::vector<DualEncoded> tgt_enc(tgt_train.samples.size());
      for (std::size_t i = 0; i < tgt_train.samples.size(); ++i)
        tgt_enc[i] = encode_dual(out.model.tm, tgt_train.samples[i], true);
      run_transfer_phase(cfg, out.model, out.store, src_enc, tgt_enc, val,
                         epoch_counter, out.history, es, dropout_rng);
      break;
    }
  }

  if (es.best_epoch > 0) {
    out.store.restore_values(es.snap);
    out.best_epoch = es.best_epoch;
    out.best_val_spauc = es.best;
  }
  out.manifest_json = make_manifest(cfg, needs_src ? &src_fitted : nullptr,
                                    needs_tgt ? &tgt_fitted : nullptr,
                                    out.best_epoch, out.best_val_spauc);
  return out;
}

void write_history_csv(const std::string& path,
                       const std::vector<EpochRow>& history) {
  std::ofstream os(path, std::ios::trunc);
  if (!os) throw std::runtime_error("trainer: cannot write history '" + path + "'");
  os << "epoch,train_loss,val_spauc\n";
  os << std::setprecision(17);
  for (const EpochRow& r : history)
    os << r.epoch << ',' << r.train_loss << ',' << r.val_spauc << '\n';
}

void save_model(const std::string& path, const TrainResult& result) {
  save_checkpoint(path, result.store, result.manifest_json);
}

LoadedModel load_model(const std::string& path) {
  LoadedCheckpoint lc = load_checkpoint(path);
  json j;
  try {
    j = json::parse(lc.manifest_json);
  } catch (const json::exception& e) {
    throw std::runtime_error(std::string("checkpoint: manifest is not valid JSON: ") + e.what());
  }
  if (j.value("format", 0) != 1)
    throw std::runtime_error("checkpoint: unsupported manifest format");
  const TrainConfig cfg = train_config_from_json(j.at("config").dump());

  Schema src_fitted, tgt_fitted;
  bool has_src = j.contains("schema_src") && !j["schema_src"].is_null();
  bool has_tgt = j.contains("schema_tgt") && !j["schema_tgt"].is_null();
  if (has_src) src_fitted = schema_from_json(j["schema_src"].dump());
  if (has_tgt) tgt_fitted = schema_from_json(j["schema_tgt"].dump());

  LoadedModel lm;
  std::mt19937_64 rng(sub_seed(cfg.seed, 0));
  lm.model = build_model(cfg, has_src ? &src_fitted : nullptr,
                         has_tgt ? &tgt_fitted : nullptr, lm.store, rng);
  if (lm.store.size() != lc.store.size())
    throw std::runtime_error("checkpoint: parameter count does not match the manifest's model");
  for (int i = 0; i < lm.store.size(); ++i) {
    auto& dst = lm.store.entry(i);
    const int si = lc.store.find(dst.name);
    if (si < 0) throw std::runtime_error("checkpoint: missing parameter '" + dst.name + "'");
    const auto& srce = lc.store.entry(si);
    if (srce.rows != dst.rows || srce.cols != dst.cols)
      throw std::runtime_error("checkpoint: shape mismatch for '" + dst.name + "'");
    dst.value = srce.value;
  }
  lm.best_epoch = j.value("best_epoch", 0);
  lm.best_val_spauc = j.value("best_val_spauc", 0.0);
  return lm;
}

}  // namespace henfd
