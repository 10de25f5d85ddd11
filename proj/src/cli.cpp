#include "henfd/cli.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"

#include "henfd/explainer.hpp"
#include "henfd/gradcheck.hpp"
#include "henfd/synth.hpp"
#include "henfd/trainer.hpp"

namespace henfd {

namespace fs = std::filesystem;
using json = nlohmann::json;

namespace {

std::string read_text(const std::string& path) {
  std::ifstream is(path);
  if (!is) throw std::runtime_error("cli: cannot open '" + path + "'");
  return {std::istreambuf_iterator<char>(is), std::istreambuf_iterator<char>()};
}

void write_text(const fs::path& path, const std::string& text) {
  std::ofstream os(path, std::ios::trunc);
  if (!os) throw std::runtime_error("cli: cannot write '" + path.string() + "'");
  os << text;
  if (text.empty() || text.back() != '\n') os << '\n';
}

std::size_t count_positives(const Dataset& ds) {
  std::size_t n = 0;
  for (const Sample& s : ds.samples) n += s.label == 1;
  return n;
}

json report_json(const MetricReport& r, const std::vector<std::uint64_t>& seeds) {
  json j;
  j["maxfpr"] = r.maxfpr;
  j["spauc"] = r.spauc;
  j["auc"] = r.auc;
  j["spauc_half_width"] = r.spauc_half_width;
  j["auc_half_width"] = r.auc_half_width;
  j["trials"] = json::array();
  for (std::size_t t = 0; t < r.trial_spauc.size(); ++t) {
    json jt;
    jt["trial"] = t;
    if (t < seeds.size()) jt["seed"] = seeds[t];
    jt["spauc"] = r.trial_spauc[t];
    jt["auc"] = r.trial_auc[t];
    j["trials"].push_back(std::move(jt));
  }
  return j;
}

void write_metrics(const fs::path& out, const MetricReport& r,
                   const std::vector<std::uint64_t>& seeds) {
  write_text(out / "metrics.json", report_json(r, seeds).dump(2));
  std::ostringstream csv;
  csv << "trial,spauc,auc\n" << std::setprecision(17);
  for (std::size_t t = 0; t < r.trial_spauc.size(); ++t)
    csv << t << ',' << r.trial_spauc[t] << ',' << r.trial_auc[t] << '\n';
  write_text(out / "metrics.csv", csv.str());
}

Dataset select_split(const Dataset& ds, const std::string& which) {
  if (which == "all") return ds;
  const auto parts = time_split(ds);
  if (which == "train") return parts[0];
  if (which == "val" || which == "validation") return parts[1];
  if (which == "test") return parts[2];
  throw std::runtime_error("cli: unknown split '" + which + "'");
}

// --- gen-data ---------------------------------------------------------------

struct GenArgs {
  std::string out;
  std::string config;
  bool transfer = false;
  std::int64_t seed = -1;
};

int cmd_gen_data(const GenArgs& a) {
  fs::create_directories(a.out);
  const std::string cfg_text = a.config.empty() ? "{}" : read_text(a.config);
  const fs::path out(a.out);
  if (a.transfer) {
    TransferSynthConfig cfg = transfer_config_from_json(cfg_text);
    if (a.seed >= 0) cfg.base.seed = static_cast<std::uint64_t>(a.seed);
    TransferSynthResult r = synthesize_transfer(cfg);
    save_schema((out / "schema.json").string(), r.schema);
    save_jsonl(r.src, (out / "src.jsonl").string());
    save_jsonl(r.tgt, (out / "tgt.jsonl").string());
    write_text(out / "info.json", r.info_json);
    std::cout << "gen-data: source " << r.src.size() << " samples ("
              << count_positives(r.src) << " positive), target " << r.tgt.size()
              << " samples (" << count_positives(r.tgt) << " positive)\n";
  } else {
    SynthConfig cfg = synth_config_from_json(cfg_text);
    if (a.seed >= 0) cfg.seed = static_cast<std::uint64_t>(a.seed);
    SynthResult r = synthesize(cfg);
    save_schema((out / "schema.json").string(), r.schema);
    save_jsonl(r.data, (out / "data.jsonl").string());
    write_text(out / "info.json", r.info_json);
    std::cout << "gen-data: " << r.data.size() << " samples ("
              << count_positives(r.data) << " positive)\n";
  }
  return 0;
}

// --- train / transfer-train ---------------------------------------------------

struct TrainArgs {
  std::string schema;
  std::string data;      // single-domain
  std::string src_data;  // transfer
  std::string tgt_data;
  std::string out;
  std::string config;
  std::string mode;
  std::string align;
  std::string extractor;
  std::int64_t seed = -1;
  double maxfpr = -1.0;
  int trials = 1;
  int tgt_cap = 0;  // transfer: keep only the first N labeled target samples
};

TrainConfig resolve_config(const TrainArgs& a, TrainMode default_mode) {
  TrainConfig cfg =
      a.config.empty() ? TrainConfig{} : train_config_from_json(read_text(a.config));
  if (a.config.empty()) cfg.mode = default_mode;
  if (!a.mode.empty()) cfg.mode = mode_from_string(a.mode);
  if (!a.align.empty()) cfg.align = align_from_string(a.align);
  if (!a.extractor.empty()) cfg.extractor = extractor_from_string(a.extractor);
  if (a.seed >= 0) cfg.seed = static_cast<std::uint64_t>(a.seed);
  if (a.maxfpr > 0.0) cfg.maxfpr = a.maxfpr;
  return cfg;
}

int run_trials(const TrainArgs& a, const TrainConfig& base_cfg,
               const Dataset& src_all, const Dataset& tgt_all) {
  if (a.trials < 1) throw std::runtime_error("cli: --trials must be at least 1");
  fs::create_directories(a.out);
  const fs::path out(a.out);

  std::vector<double> trial_spauc, trial_auc;
  std::vector<std::uint64_t> seeds;
  for (int t = 0; t < a.trials; ++t) {
    TrainConfig cfg = base_cfg;
    cfg.seed = base_cfg.seed + static_cast<std::uint64_t>(t);
    seeds.push_back(cfg.seed);

    Dataset src_train = src_all;
    Dataset tgt_train, val, test;
    if (tgt_all.samples.empty()) {
      // source_only through the single-domain path: split the source stream.
      auto parts = time_split(src_all);
      src_train = std::move(parts[0]);
      val = std::move(parts[1]);
      test = std::move(parts[2]);
    } else {
      auto parts = time_split(tgt_all);
      tgt_train = std::move(parts[0]);
      val = std::move(parts[1]);
      test = std::move(parts[2]);
      if (a.tgt_cap > 0 &&
          tgt_train.samples.size() > static_cast<std::size_t>(a.tgt_cap))
        tgt_train.samples.resize(static_cast<std::size_t>(a.tgt_cap));
    }

    TrainResult r = train(cfg, src_train, tgt_train, val);
    const MetricReport rep = evaluate(r.model, r.store, test, cfg.maxfpr);

    const fs::path trial_dir = a.trials == 1 ? out : out / ("trial_" + std::to_string(t));
    fs::create_directories(trial_dir);
    save_model((trial_dir / "model.ckpt").string(), r);
    write_history_csv((trial_dir / "history.csv").string(), r.history);
    json jt;
    jt["seed"] = cfg.seed;
    jt["best_epoch"] = r.best_epoch;
    jt["best_val_spauc"] = r.best_val_spauc;
    jt["test_spauc"] = rep.spauc;
    jt["test_auc"] = rep.auc;
    write_text(trial_dir / "summary.json", jt.dump(2));

    trial_spauc.push_back(rep.spauc);
    trial_auc.push_back(rep.auc);
    std::cout << "trial " << t << " (seed " << cfg.seed << "): val spauc "
              << r.best_val_spauc << ", test spauc " << rep.spauc << '\n';
  }
  const MetricReport agg = make_report(trial_spauc, trial_auc, base_cfg.maxfpr);
  write_metrics(out, agg, seeds);
  std::cout << "mean test spauc " << agg.spauc;
  if (a.trials > 1) std::cout << " +- " << agg.spauc_half_width << " (95% CI)";
  std::cout << '\n';
  return 0;
}

int cmd_train(const TrainArgs& a) {
  const TrainConfig cfg = resolve_config(a, TrainMode::target_only);
  if (cfg.mode != TrainMode::target_only && cfg.mode != TrainMode::source_only)
    throw std::runtime_error("cli: mode " + to_string(cfg.mode) +
                             " needs both domains; use transfer-train");
  const Schema schema = load_schema(a.schema);
  const Dataset ds = load_dataset(schema, a.data);
  Dataset empty;
  empty.schema = schema;
  if (cfg.mode == TrainMode::source_only) return run_trials(a, cfg, ds, empty);
  // target_only: the single stream plays the target role.
  return run_trials(a, cfg, empty, ds);
}

int cmd_transfer_train(const TrainArgs& a) {
  const TrainConfig cfg = resolve_config(a, TrainMode::full);
  const Schema schema = load_schema(a.schema);
  const Dataset src = load_dataset(schema, a.src_data);
  const Dataset tgt = load_dataset(schema, a.tgt_data);
  return run_trials(a, cfg, src, tgt);
}

// --- evaluate / explain / risk-list -------------------------------------------

struct EvalArgs {
  std::string ckpt;
  std::string data;
  std::string schema;
  std::string out;
  std::string split = "all";
  std::string fields;  // risk-list
  double maxfpr = -1.0;
  int limit = 8;  // explain
  int q = 10;     // risk-list
};

Schema schema_for_parsing(const EvalArgs& a, const Model& model) {
  if (!a.schema.empty()) return load_schema(a.schema);
  // Fall back to the declarations baked into the checkpoint.
  const ViewCodec& codec =
      model.is_transfer ? model.tm.tgt_codec : model.sup.tgt_codec;
  return codec.schema;
}

int cmd_evaluate(const EvalArgs& a) {
  LoadedModel lm = load_model(a.ckpt);
  const Schema schema = schema_for_parsing(a, lm.model);
  const Dataset ds = select_split(load_dataset(schema, a.data), a.split);
  const double maxfpr = a.maxfpr > 0.0 ? a.maxfpr : lm.model.cfg.maxfpr;
  const MetricReport rep = evaluate(lm.model, lm.store, ds, maxfpr);
  std::cout << "spauc " << rep.spauc << ", auc " << rep.auc << " (maxfpr "
            << maxfpr << ", " << ds.size() << " samples, "
            << count_positives(ds) << " positive)\n";
  if (!a.out.empty()) {
    fs::create_directories(a.out);
    write_metrics(fs::path(a.out), rep, {});
  }
  return 0;
}

int cmd_explain(const EvalArgs& a) {
  LoadedModel lm = load_model(a.ckpt);
  const Schema schema = schema_for_parsing(a, lm.model);
  const Dataset ds = select_split(load_dataset(schema, a.data), a.split);
  const std::size_t n = std::min<std::size_t>(ds.samples.size(),
                                              a.limit > 0 ? a.limit : ds.samples.size());
  std::vector<ExplanationRecord> records;
  records.reserve(n);
  for (std::size_t i = 0; i < n; ++i)
    records.push_back(explain_sample(lm.model, lm.store, ds.samples[i]));
  export_report(records, a.out);
  std::cout << "explain: wrote " << records.size() << " records under " << a.out << '\n';
  return 0;
}

int cmd_risk_list(const EvalArgs& a) {
  LoadedModel lm = load_model(a.ckpt);
  const Schema schema = schema_for_parsing(a, lm.model);
  const Dataset ds = select_split(load_dataset(schema, a.data), a.split);
  std::vector<std::string> fields;
  if (a.fields.empty()) {
    const ViewCodec& codec =
        lm.model.is_transfer ? lm.model.tm.tgt_codec : lm.model.sup.tgt_codec;
    for (const FieldSpec& f : codec.schema.fields)
      if (f.kind == FieldKind::categorical) fields.push_back(f.name);
  } else {
    std::stringstream ss(a.fields);
    std::string item;
    while (std::getline(ss, item, ','))
      if (!item.empty()) fields.push_back(item);
  }
  const RiskList lists = risk_list(lm.model, lm.store, ds, fields, a.q);
  fs::create_directories(a.out);
  write_text(fs::path(a.out) / "risk_list.json", risk_list_to_json(lists));
  std::cout << "risk-list: ranked " << lists.size() << " fields under " << a.out << '\n';
  return 0;
}

// --- grad-check ----------------------------------------------------------------

int cmd_grad_check(std::uint64_t seed, int points) {
  const GradCheckReport hen = grad_check_hen_loss(seed, points);
  const GradCheckReport tr = grad_check_transfer_loss(seed + 1, points);
  std::cout << "hierarchical loss: " << hen.points << " points, max rel err "
            << hen.max_rel_err << '\n';
  std::cout << "transfer loss:     " << tr.points << " points, max rel err "
            << tr.max_rel_err << '\n';
  const bool ok = hen.max_rel_err <= 1e-4 && tr.max_rel_err <= 1e-4;
  std::cout << (ok ? "grad-check passed" : "grad-check FAILED") << '\n';
  return ok ? 0 : 1;
}

// --- selftest -------------------------------------------------------------------

// Naive quadratic pairwise interaction, the reference for the linear-time
// identity used by the field-level extractor.
std::vector<double> naive_pairwise(const std::vector<std::vector<double>>& v) {
  const std::size_t k = v.front().size();
  std::vector<double> out(k, 0.0);
  for (std::size_t i = 0; i < v.size(); ++i)
    for (std::size_t j = i + 1; j < v.size(); ++j)
      for (std::size_t d = 0; d < k; ++d) out[d] += v[i][d] * v[j][d];
  return out;
}

bool selftest_fm(std::ostream& os) {
  std::mt19937_64 rng(11);
  std::uniform_int_distribution<int> n_fields(1, 56);
  std::uniform_real_distribution<double> unif(-1.0, 1.0);
  const int k = 16;
  double worst = 0.0;
  ParamStore store;
  ad::Tape tape(&store);
  for (int trial = 0; trial < 1000; ++trial) {
    const int n = n_fields(rng);
    std::vector<std::vector<double>> raw(n, std::vector<double>(k));
    std::vector<double> attn_raw(n);
    for (auto& vec : raw)
      for (double& x : vec) x = unif(rng);
    for (double& x : attn_raw) x = unif(rng);

    tape.clear();
    std::vector<ad::NodeId> v(n), attn(n);
    for (int i = 0; i < n; ++i) {
      v[i] = tape.constant(raw[i], k, 1);
      attn[i] = tape.constant({attn_raw[i]});
    }
    const FieldExtract fe = field_extract(tape, v, attn);
    tape.forward();

    // Reference: softmax weights + first-order sum in plain loops.
    double zmax = *std::max_element(attn_raw.begin(), attn_raw.end());
    std::vector<double> w(n);
    double norm = 0.0;
    for (int i = 0; i < n; ++i) norm += (w[i] = std::exp(attn_raw[i] - zmax));
    std::vector<double> expect = naive_pairwise(raw);
    for (int i = 0; i < n; ++i)
      for (int d = 0; d < k; ++d) expect[d] += w[i] / norm * raw[i][d];

    const auto got = tape.value(fe.e);
    for (int d = 0; d < k; ++d) {
      const double rel = std::abs(got[d] - expect[d]) /
                         std::max({std::abs(expect[d]), std::abs(got[d]), 1e-9});
      worst = std::max(worst, rel);
    }
  }
  os << (worst <= 1e-9 ? "[ ok ]" : "[FAIL]")
     << " pairwise-interaction identity, 1000 instances, max rel err " << worst << '\n';
  return worst <= 1e-9;
}

// O(n^2) threshold rescan, fully independent of the library's sweep.
double brute_spauc(const std::vector<double>& scores, const std::vector<int>& labels,
                   double maxfpr) {
  std::vector<double> uniq = scores;
  std::sort(uniq.begin(), uniq.end(), std::greater<>());
  uniq.erase(std::unique(uniq.begin(), uniq.end()), uniq.end());
  double n_pos = 0, n_neg = 0;
  for (int y : labels) (y == 1 ? n_pos : n_neg) += 1;
  std::vector<std::pair<double, double>> pts{{0.0, 0.0}};
  for (double thr : uniq) {
    double tp = 0, fp = 0;
    for (std::size_t i = 0; i < scores.size(); ++i)
      if (scores[i] >= thr) (labels[i] == 1 ? tp : fp) += 1;
    pts.push_back({fp / n_neg, tp / n_pos});
  }
  double area = 0.0;
  for (std::size_t i = 1; i < pts.size(); ++i) {
    auto [x0, y0] = pts[i - 1];
    auto [x1, y1] = pts[i];
    if (x0 >= maxfpr) break;
    if (x1 <= maxfpr) {
      area += 0.5 * (y0 + y1) * (x1 - x0);
    } else {
      const double yc = y0 + (maxfpr - x0) / (x1 - x0) * (y1 - y0);
      area += 0.5 * (y0 + yc) * (maxfpr - x0);
      break;
    }
  }
  return 0.5 * (1.0 + (area - 0.5 * maxfpr * maxfpr) / (maxfpr - 0.5 * maxfpr * maxfpr));
}

bool selftest_spauc(std::ostream& os) {
  std::mt19937_64 rng(23);
  std::uniform_int_distribution<int> n_dist(10, 1000);
  std::uniform_real_distribution<double> unif(0.0, 1.0);
  std::uniform_int_distribution<int> grid(0, 19);
  double worst = 0.0;
  for (int trial = 0; trial < 200; ++trial) {
    const int n = n_dist(rng);
    std::vector<double> scores(n);
    std::vector<int> labels(n);
    const bool tie_heavy = trial % 3 == 0;
    for (int i = 0; i < n; ++i) {
      scores[i] = tie_heavy ? grid(rng) / 19.0 : unif(rng);
      labels[i] = unif(rng) < 0.3;
    }
    labels[0] = 1;
    labels[n - 1] = 0;  // both classes guaranteed
    const double maxfpr = trial % 2 == 0 ? 0.01 : 0.25;
    worst = std::max(worst, std::abs(spauc(scores, labels, maxfpr) -
                                     brute_spauc(scores, labels, maxfpr)));
  }
  // Analytic anchors.
  const std::vector<double> sep{0.9, 0.8, 0.2, 0.1};
  const std::vector<int> sep_y{1, 1, 0, 0};
  const std::vector<double> tied{0.5, 0.5, 0.5, 0.5};
  const bool anchors = std::abs(spauc(sep, sep_y, 0.3) - 1.0) == 0.0 &&
                       std::abs(spauc(tied, sep_y, 0.3) - 0.5) == 0.0;
  const bool ok = worst <= 1e-12 && anchors;
  os << (ok ? "[ ok ]" : "[FAIL]")
     << " spauc vs brute-force sweep, 200 sets, max abs err " << worst << '\n';
  return ok;
}

bool selftest_ced(std::ostream& os) {
  auto stats_1d = [](double s0, double s1, double t0, double t1) {
    BatchClassStats st;
    st.accumulate(false, 0, {s0});
    st.accumulate(false, 1, {s1});
    st.accumulate(true, 0, {t0});
    st.accumulate(true, 1, {t1});
    st.finalize();
    return st;
  };
  const double hand = ced(stats_1d(0.0, 1.0, 0.5, 1.5));
  bool ok = std::abs(hand - 1.0 / 9.0) <= 1e-12;
  // Scale invariance of the ratio.
  for (double alpha : {0.1, 3.0, 10.0}) {
    const double scaled = ced(stats_1d(0.0, alpha, 0.5 * alpha, 1.5 * alpha));
    ok = ok && std::abs(scaled - hand) <= 1e-9;
  }
  // Per-class aligned means across domains: zero intra distance.
  ok = ok && ced(stats_1d(0.2, 0.9, 0.2, 0.9)) == 0.0;
  os << (ok ? "[ ok ]" : "[FAIL]") << " class-aware distance hand anchors\n";
  return ok;
}

int cmd_selftest() {
  bool ok = true;
  ok &= selftest_fm(std::cout);
  ok &= selftest_spauc(std::cout);
  ok &= selftest_ced(std::cout);
  std::cout << (ok ? "selftest passed" : "selftest FAILED") << '\n';
  return ok ? 0 : 1;
}

}  // namespace

int run_cli(int argc, char** argv) {
  CLI::App app{"Hierarchical explainable network for cross-domain fraud detection"};
  app.require_subcommand(1);

  GenArgs gen;
  auto* sc_gen = app.add_subcommand("gen-data", "Generate a planted synthetic dataset");
  sc_gen->add_option("--out", gen.out, "Output directory")->required();
  sc_gen->add_option("--config", gen.config, "Generator config JSON");
  sc_gen->add_flag("--transfer", gen.transfer, "Generate a source/target pair");
  sc_gen->add_option("--seed", gen.seed, "Seed override");

  TrainArgs tr;
  auto* sc_train = app.add_subcommand("train", "Train a single-domain model");
  sc_train->add_option("--schema", tr.schema, "Schema JSON")->required();
  sc_train->add_option("--data", tr.data, "JSONL dataset (split 5/2/3 by time)")->required();
  sc_train->add_option("--out", tr.out, "Output directory")->required();
  sc_train->add_option("--config", tr.config, "Train config JSON");
  sc_train->add_option("--mode", tr.mode, "target_only | source_only");
  sc_train->add_option("--extractor", tr.extractor, "hen | dense | fm");
  sc_train->add_option("--seed", tr.seed, "Seed override");
  sc_train->add_option("--maxfpr", tr.maxfpr, "SPAUC FPR cap");
  sc_train->add_option("--trials", tr.trials, "Repeat with seeds seed..seed+n-1");

  TrainArgs tt;
  auto* sc_tt = app.add_subcommand("transfer-train", "Train with both domains");
  sc_tt->add_option("--schema", tt.schema, "Schema JSON")->required();
  sc_tt->add_option("--src-data", tt.src_data, "Source JSONL (all used for training)")->required();
  sc_tt->add_option("--tgt-data", tt.tgt_data, "Target JSONL (split 5/2/3 by time)")->required();
  sc_tt->add_option("--out", tt.out, "Output directory")->required();
  sc_tt->add_option("--config", tt.config, "Train config JSON");
  sc_tt->add_option("--mode", tt.mode,
                    "target_only | source_only | pretrain_finetune | domain_shared | "
                    "structure_only | full");
  sc_tt->add_option("--align", tt.align, "none | ed | ced");
  sc_tt->add_option("--extractor", tt.extractor, "hen | dense | fm");
  sc_tt->add_option("--seed", tt.seed, "Seed override");
  sc_tt->add_option("--maxfpr", tt.maxfpr, "SPAUC FPR cap");
  sc_tt->add_option("--trials", tt.trials, "Repeat with seeds seed..seed+n-1");
  sc_tt->add_option("--tgt-cap", tt.tgt_cap, "Cap labeled target training samples");

  EvalArgs ev;
  auto* sc_eval = app.add_subcommand("evaluate", "Score a dataset with a checkpoint");
  sc_eval->add_option("--ckpt", ev.ckpt, "Checkpoint file")->required();
  sc_eval->add_option("--data", ev.data, "JSONL dataset")->required();
  sc_eval->add_option("--schema", ev.schema, "Schema JSON (default: from checkpoint)");
  sc_eval->add_option("--out", ev.out, "Output directory (metrics.json/csv)");
  sc_eval->add_option("--split", ev.split, "all | train | val | test");
  sc_eval->add_option("--maxfpr", ev.maxfpr, "SPAUC FPR cap (default: from checkpoint)");

  EvalArgs ex;
  auto* sc_ex = app.add_subcommand("explain", "Export attention explanations");
  sc_ex->add_option("--ckpt", ex.ckpt, "Checkpoint file")->required();
  sc_ex->add_option("--data", ex.data, "JSONL dataset")->required();
  sc_ex->add_option("--schema", ex.schema, "Schema JSON (default: from checkpoint)");
  sc_ex->add_option("--out", ex.out, "Output directory")->required();
  sc_ex->add_option("--split", ex.split, "all | train | val | test");
  sc_ex->add_option("--limit", ex.limit, "Number of samples to explain");

  EvalArgs rl;
  auto* sc_rl = app.add_subcommand("risk-list", "Rank vocabulary values by wide weight");
  sc_rl->add_option("--ckpt", rl.ckpt, "Checkpoint file")->required();
  sc_rl->add_option("--data", rl.data, "JSONL reference dataset for counts")->required();
  sc_rl->add_option("--schema", rl.schema, "Schema JSON (default: from checkpoint)");
  sc_rl->add_option("--out", rl.out, "Output directory")->required();
  sc_rl->add_option("--split", rl.split, "all | train | val | test");
  sc_rl->add_option("--fields", rl.fields, "Comma-separated field names (default: all categorical)");
  sc_rl->add_option("--q", rl.q, "List length per direction");

  std::int64_t gc_seed = 7;
  int gc_points = 120;
  auto* sc_gc = app.add_subcommand("grad-check", "Finite-difference check of the full losses");
  sc_gc->add_option("--seed", gc_seed, "Seed");
  sc_gc->add_option("--points", gc_points, "Coordinates probed per loss");

  auto* sc_st = app.add_subcommand("selftest", "Run the built-in analytic oracles");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return 2;
  }

  try {
    if (sc_gen->parsed()) return cmd_gen_data(gen);
    if (sc_train->parsed()) return cmd_train(tr);
    if (sc_tt->parsed()) return cmd_transfer_train(tt);
    if (sc_eval->parsed()) return cmd_evaluate(ev);
    if (sc_ex->parsed()) return cmd_explain(ex);
    if (sc_rl->parsed()) return cmd_risk_list(rl);
    if (sc_gc->parsed())
      return cmd_grad_check(static_cast<std::uint64_t>(gc_seed), gc_points);
    if (sc_st->parsed()) return cmd_selftest();
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
  return 0;
}

}  // namespace henfd
