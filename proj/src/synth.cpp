#include "henfd/synth.hpp"

#include <algorithm>
#include <cmath>
#include <random>
#include <stdexcept>

#include <json.hpp>

namespace henfd {

using nlohmann::json;

namespace {

// Categorical field layout; extras and the two numerical fields follow.
enum : int {
  kAction = 0,
  kMerchant = 1,
  kCardType = 2,
  kChannel = 3,
  kDevice = 4,
  kGeo = 5,
  kCatBase = 6,
};

const std::vector<std::string> kActionVocab = {
    "view",     "click",       "search",         "login",
    "purchase", "update_info", "refund_request", "payment_fail"};
constexpr int kFailAction = 7;
constexpr int kPurchaseAction = 4;
const double kActionWeight[] = {0.27, 0.22, 0.15, 0.12, 0.14, 0.05, 0.04, 0.01};

double sigmoid(double x) {
  return x >= 0.0 ? 1.0 / (1.0 + std::exp(-x)) : std::exp(x) / (1.0 + std::exp(x));
}

// Solves q so that E[min(Geometric(1-q), cap)] == mean; the geometric counts
// failures before the first success, so E[min(X, cap)] = sum_{j=1..cap} q^j.
double solve_geometric_q(double mean, int cap) {
  mean = std::min(mean, cap * 0.98);
  auto truncated_mean = [&](double q) {
    double acc = 0.0, qj = 1.0;
    for (int j = 1; j <= cap; ++j) acc += (qj *= q);
    return acc;
  };
  double lo = 1e-9, hi = 1.0 - 1e-9;
  for (int it = 0; it < 200; ++it) {
    double mid = 0.5 * (lo + hi);
    (truncated_mean(mid) < mean ? lo : hi) = mid;
  }
  return 0.5 * (lo + hi);
}

struct FieldPlan {
  std::vector<std::string> vocab;  // domain vocabulary, position-indexed
  std::vector<double> cum;         // cumulative sampling distribution
  std::vector<double> boost;       // planted log-odds boost per position
  std::vector<double> noise;       // small background weight per position
  std::vector<int> plant_pos;      // positions of the planted risk values
  std::vector<int> order;          // popularity order (scratch until built)

  int sample(std::mt19937_64& rng) const {
    std::uniform_real_distribution<double> u(0.0, 1.0);
    auto it = std::upper_bound(cum.begin(), cum.end(), u(rng));
    return std::min<int>(static_cast<int>(it - cum.begin()),
                         static_cast<int>(vocab.size()) - 1);
  }
};

struct DomainPlan {
  std::string tag;  // "source" | "target"
  std::vector<FieldPlan> cat;
  int pair_v1 = -1, pair_v2 = -1;  // card_type / channel positions
  int conflict_pos = -1;           // merchant position, -1 when absent
  double amount_mu = 3.5, amount_sigma = 1.0;  // log-space
  double beta0 = 0.0;
};

// Fills cum: pinned probabilities for planted values, remaining mass spread
// Zipf-style over the other values following `order`.
void build_distribution(FieldPlan& f,
                        const std::vector<std::pair<int, double>>& pinned,
                        double zipf_exponent) {
  const size_t m = f.vocab.size();
  std::vector<double> prob(m, 0.0);
  double pinned_mass = 0.0;
  for (auto [pos, p] : pinned) {
    prob[pos] = p;
    pinned_mass += p;
  }
  if (pinned_mass >= 0.5)
    throw std::runtime_error("synth: pinned value rates sum to >= 0.5");
  double zsum = 0.0;
  std::vector<double> zw(m, 0.0);
  int rank = 0;
  for (int pos : f.order) {
    if (prob[pos] > 0.0) continue;
    zw[pos] = std::pow(static_cast<double>(++rank), -zipf_exponent);
    zsum += zw[pos];
  }
  for (size_t i = 0; i < m; ++i)
    if (prob[i] == 0.0) prob[i] = zw[i] / zsum * (1.0 - pinned_mass);
  f.cum.resize(m);
  double acc = 0.0;
  for (size_t i = 0; i < m; ++i) f.cum[i] = (acc += prob[i]);
  f.cum.back() = 1.0;
  f.order.clear();
}

// The value universe of one field across both domains. The source vocabulary
// is universe [0, m); the target's is [m-k, 2m-k); they share the k-value
// overlap [m-k, m).
struct UniverseField {
  std::vector<std::string> values;
  std::vector<double> noise;  // background weight, shared across domains
  std::vector<double> swing;  // popularity perturbation seed, U(-1,1)
  int m = 0;
  int k = 0;
};

UniverseField make_universe(const std::string& field_name, int m, double rho,
                            double noise_half_range, std::mt19937_64& rng) {
  UniverseField u;
  u.m = m;
  u.k = std::clamp(static_cast<int>(std::lround(rho * m)), 0, m);
  std::uniform_real_distribution<double> nd(-noise_half_range, noise_half_range);
  std::uniform_real_distribution<double> sd(-1.0, 1.0);
  for (int j = 0; j < 2 * m - u.k; ++j) {
    u.values.push_back(field_name + "_v" + std::to_string(j));
    u.noise.push_back(nd(rng));
    u.swing.push_back(sd(rng));
  }
  return u;
}

// Restricts a universe to one domain and fixes its popularity order: universe
// order for the source, a swing-perturbed order (strength shift_temp) for the
// target.
void instantiate(FieldPlan& f, const UniverseField& u, bool is_tgt,
                 double shift_temp) {
  const int lo = is_tgt ? u.m - u.k : 0;
  for (int j = 0; j < u.m; ++j) {
    f.vocab.push_back(u.values[lo + j]);
    f.noise.push_back(u.noise[lo + j]);
  }
  f.boost.assign(u.m, 0.0);
  f.order.resize(u.m);
  for (int j = 0; j < u.m; ++j) f.order[j] = j;
  if (is_tgt && shift_temp > 0.0) {
    std::vector<double> score(u.m);
    for (int j = 0; j < u.m; ++j)
      score[j] = j + shift_temp * u.m * u.swing[lo + j];
    std::stable_sort(f.order.begin(), f.order.end(),
                     [&](int a, int b) { return score[a] < score[b]; });
  }
}

struct PlanPair {
  DomainPlan src, tgt;
  json info;
};

// Builds both domain plans. Shared plants sit in the vocabulary overlap
// (identical value and boost in both domains); the rest go to domain-exclusive
// values. Pinned popularity keeps every planted value rare.
PlanPair build_plans(const TransferSynthConfig& tc, bool want_target) {
  const SynthConfig& c = tc.base;
  if (c.positive_rate <= 0.0 || c.positive_rate >= 1.0)
    throw std::runtime_error("synth: positive_rate must lie in (0,1)");
  if (tc.rho < 0.0 || tc.rho > 1.0)
    throw std::runtime_error("synth: rho must lie in [0,1]");
  if (c.vocab_main < 8 || c.vocab_small < 4)
    throw std::runtime_error("synth: vocabularies too small");
  if (c.t_max < 3) throw std::runtime_error("synth: t_max must be >= 3");

  std::mt19937_64 urng(c.seed * 0x9E3779B97F4A7C15ull + 17u);

  const int n_cat = kCatBase + c.n_extra_fields;
  std::vector<UniverseField> uni;
  for (int fi = 0; fi < n_cat; ++fi) {
    if (fi == kAction) {
      uni.emplace_back();  // fixed semantic vocabulary, handled below
      continue;
    }
    const int m = (fi == kCardType || fi == kChannel) ? c.vocab_small : c.vocab_main;
    const std::string name = fi == kMerchant  ? "merchant"
                             : fi == kCardType ? "card_type"
                             : fi == kChannel  ? "channel"
                             : fi == kDevice   ? "device"
                             : fi == kGeo      ? "geo"
                                               : "extra" + std::to_string(fi - kCatBase);
    uni.push_back(make_universe(name, m, tc.rho, c.noise_half_range, urng));
  }
  std::uniform_real_distribution<double> nd(-c.noise_half_range, c.noise_half_range);
  std::vector<double> action_noise;
  for (size_t j = 0; j < kActionVocab.size(); ++j) action_noise.push_back(nd(urng));

  const int n_shared =
      std::clamp(static_cast<int>(std::lround(3.0 * tc.shared_signal_fraction)), 0, 3);
  const UniverseField& um = uni[kMerchant];
  if (want_target) {
    if (um.k < n_shared + (tc.conflict ? 1 : 0))
      throw std::runtime_error(
          "synth: requested shared signals exceed the available vocabulary "
          "overlap; raise rho or lower shared_signal_fraction");
    if (3 - n_shared > um.m - um.k)
      throw std::runtime_error(
          "synth: not enough domain-exclusive vocabulary for unshared plants; "
          "lower rho or raise shared_signal_fraction");
    if (uni[kCardType].k < 1 || uni[kChannel].k < 1)
      throw std::runtime_error(
          "synth: pair plant needs an overlapping card/channel value; raise rho");
  }

  PlanPair pp;
  pp.src.tag = "source";
  pp.tgt.tag = "target";
  pp.tgt.amount_mu += 0.3 * tc.shift_temp;  // level shift; z-scoring absorbs it

  for (int side = 0; side < (want_target ? 2 : 1); ++side) {
    const bool is_tgt = side == 1;
    DomainPlan& plan = is_tgt ? pp.tgt : pp.src;
    plan.cat.resize(n_cat);
    json jplants = json::object();

    for (int fi = 0; fi < n_cat; ++fi) {
      FieldPlan& f = plan.cat[fi];
      if (fi == kAction) {
        f.vocab = kActionVocab;
        f.noise = action_noise;
        f.boost.assign(f.vocab.size(), 0.0);
        // payment_fail keeps its configured base rate; the rest of the mass
        // follows the fixed weights.
        f.cum.resize(f.vocab.size());
        double acc = 0.0;
        for (size_t j = 0; j < f.vocab.size(); ++j) {
          const double w = static_cast<int>(j) == kFailAction
                               ? c.fail_base_rate
                               : kActionWeight[j] / 0.99 * (1.0 - c.fail_base_rate);
          f.cum[j] = (acc += w);
        }
        f.cum.back() = 1.0;
        continue;
      }

      const UniverseField& u = uni[fi];
      instantiate(f, u, is_tgt, tc.shift_temp);
      const int lo = is_tgt ? u.m - u.k : 0;

      std::vector<std::pair<int, double>> pinned;
      auto plant = [&](int universe_idx, double b) {
        const int pos = universe_idx - lo;
        f.boost[pos] = b;
        f.plant_pos.push_back(pos);
        pinned.emplace_back(pos, c.plant_value_rate);
      };

      if (fi == kMerchant) {
        // Overlap tail first (shared, strongest boosts), then the top of the
        // domain-exclusive range.
        for (int p = 0; p < n_shared; ++p)
          plant(u.m - 1 - p, c.value_boost[2 - p]);
        for (int p = n_shared; p < 3; ++p) {
          const int back = p - n_shared;
          plant(is_tgt ? (2 * u.m - u.k - 1) - back : (u.m - u.k - 1) - back,
                c.value_boost[2 - p]);
        }
        if (tc.conflict && want_target) {
          plan.conflict_pos = (u.m - u.k) - lo;  // first overlap value
          if (is_tgt) {
            pinned.emplace_back(plan.conflict_pos, tc.conflict_rate);
          } else {
            f.boost[plan.conflict_pos] = tc.conflict_boost;
            pinned.emplace_back(plan.conflict_pos, c.plant_value_rate);
          }
        }
      } else if (fi == kDevice) {
        // Domain-specific signal. With rho = 1 there is no exclusive
        // vocabulary, so plants degenerate to the shared tail.
        for (int p = 0; p < 3; ++p) {
          const int upos = (u.m - u.k >= 3)
                               ? (is_tgt ? (2 * u.m - u.k - 1) - p : (u.m - u.k - 1) - p)
                               : u.m - 1 - p;
          plant(upos, c.value_boost[2 - p]);
        }
      } else if (fi == kCardType || fi == kChannel) {
        // One half of the pairwise plant; boosted only jointly. Pinned
        // popularity keeps chance co-occurrence negligible.
        const int pos = (u.m - 1) - lo;
        pinned.emplace_back(pos, c.plant_value_rate);
        (fi == kCardType ? plan.pair_v1 : plan.pair_v2) = pos;
      }

      build_distribution(f, pinned, c.zipf_exponent);

      if (!f.plant_pos.empty()) {
        json arr = json::array();
        for (int pos : f.plant_pos)
          arr.push_back({{"value", f.vocab[pos]}, {"boost", f.boost[pos]}});
        jplants[fi == kMerchant ? "merchant" : "device"] = std::move(arr);
      }
    }

    json jd;
    jd["plants"] = std::move(jplants);
    jd["pair"] = {{"card_type", plan.cat[kCardType].vocab[plan.pair_v1]},
                  {"channel", plan.cat[kChannel].vocab[plan.pair_v2]},
                  {"boost", c.pair_boost}};
    jd["history_motif"] = {{"action", "payment_fail"},
                           {"min_count", 2},
                           {"min_amount_z", c.hist_amount_min},
                           {"boost", c.hist_boost}};
    if (plan.conflict_pos >= 0)
      jd["conflict"] = {{"value", plan.cat[kMerchant].vocab[plan.conflict_pos]},
                        {"boost_in_source", tc.conflict_boost},
                        {"target_popularity", tc.conflict_rate}};
    pp.info[plan.tag] = std::move(jd);
  }
  return pp;
}

Dataset generate_domain(DomainPlan& plan, const SynthConfig& c, int n,
                        std::uint64_t stream_seed, const Schema& schema) {
  std::mt19937_64 rng(stream_seed);
  std::uniform_real_distribution<double> U(0.0, 1.0);
  std::normal_distribution<double> N(0.0, 1.0);
  const double q = solve_geometric_q(c.mean_hist_len, c.t_max - 1);
  const int n_cat = static_cast<int>(plan.cat.size());
  const int fi_amount = n_cat, fi_age = n_cat + 1;
  const int n_fields = n_cat + 2;

  Dataset ds;
  ds.schema = schema;
  ds.samples.reserve(n);
  std::vector<double> r(n), label_u(n);

  for (int i = 0; i < n; ++i) {
    Sample s;
    s.user_id = plan.tag + "_u" + std::to_string(i);
    s.domain = plan.tag;
    s.timestamp = 1700000000 + static_cast<std::int64_t>(U(rng) * 6048000.0);

    const double age = 30.0 + U(rng) * 1970.0;  // account age in days
    const double age_z = (age - 1015.0) / 569.0;

    int hist_len = std::min(
        static_cast<int>(std::floor(std::log(1.0 - U(rng)) / std::log(q))),
        c.t_max - 1);
    const bool motif = U(rng) < c.hist_rate;
    int m1 = -1, m2 = -1;
    if (motif) {
      hist_len = std::max(hist_len, 2);
      m1 = static_cast<int>(rng() % static_cast<std::uint64_t>(hist_len));
      m2 = (m1 + 1 + static_cast<int>(rng() % static_cast<std::uint64_t>(hist_len - 1))) %
           hist_len;
    }

    std::vector<int> tpos(n_cat);
    for (int fi = 0; fi < n_cat; ++fi) tpos[fi] = plan.cat[fi].sample(rng);
    tpos[kAction] = kPurchaseAction;
    if (U(rng) < c.pair_rate) {
      tpos[kCardType] = plan.pair_v1;
      tpos[kChannel] = plan.pair_v2;
    }
    const double amount_g = N(rng);

    std::vector<double> hist_g(hist_len);
    for (int t = 0; t < hist_len; ++t) {
      RawEvent ev;
      ev.values.resize(n_fields);
      const bool planted = t == m1 || t == m2;
      for (int fi = 0; fi < n_cat; ++fi) {
        int pos = plan.cat[fi].sample(rng);
        if (fi == kAction && planted) pos = kFailAction;
        ev.values[fi].cat = plan.cat[fi].vocab[pos];
      }
      // Planted motif events are failed attempts at conspicuously large
      // amounts; ordinary failures keep the ambient amount distribution.
      hist_g[t] = planted ? c.hist_amount_min + 0.2 + U(rng) : N(rng);
      ev.values[fi_amount].num = plan.amount_mu + plan.amount_sigma * hist_g[t];
      ev.values[fi_age].num = age;
      s.history.push_back(std::move(ev));
    }

    RawEvent tgt;
    tgt.values.resize(n_fields);
    for (int fi = 0; fi < n_cat; ++fi)
      tgt.values[fi].cat = plan.cat[fi].vocab[tpos[fi]];
    tgt.values[fi_amount].num = plan.amount_mu + plan.amount_sigma * amount_g;
    tgt.values[fi_age].num = age;
    s.target = std::move(tgt);

    // True log-odds (before the calibrated intercept).
    double boost = 0.0, noise = 0.0;
    for (int fi = 0; fi < n_cat; ++fi) {
      boost += plan.cat[fi].boost[tpos[fi]];
      noise += plan.cat[fi].noise[tpos[fi]];
    }
    const bool pair_hit = tpos[kCardType] == plan.pair_v1 &&
                          tpos[kChannel] == plan.pair_v2;
    if (pair_hit) boost += c.pair_boost;
    int big_fails = 0;
    for (int t = 0; t < hist_len; ++t)
      if (s.history[t].values[kAction].cat == kActionVocab[kFailAction] &&
          hist_g[t] > c.hist_amount_min)
        ++big_fails;
    const bool hist_hit = big_fails >= 2;
    if (hist_hit) boost += c.hist_boost;

    r[i] = boost * (1.0 + c.amount_amplify * std::clamp(amount_g, -1.0, 3.0)) +
           c.amount_coef * amount_g + c.age_coef * age_z + noise;
    label_u[i] = U(rng);

    s.meta.present = true;
    s.meta.fired_pair = pair_hit;
    for (int fi : {static_cast<int>(kMerchant), static_cast<int>(kDevice)}) {
      const auto& pl = plan.cat[fi].plant_pos;
      if (std::find(pl.begin(), pl.end(), tpos[fi]) != pl.end())
        s.meta.fired_values.emplace_back(fi, plan.cat[fi].vocab[tpos[fi]]);
    }
    if (hist_hit)
      for (int t = 0; t < hist_len; ++t)
        if (s.history[t].values[kAction].cat == kActionVocab[kFailAction] &&
            hist_g[t] > c.hist_amount_min)
          s.meta.risk_event_positions.push_back(t);

    ds.samples.push_back(std::move(s));
  }

  // Calibrate the intercept so the marginal positive rate matches.
  double lo = -40.0, hi = 10.0;
  for (int it = 0; it < 200; ++it) {
    const double mid = 0.5 * (lo + hi);
    double mean = 0.0;
    for (double ri : r) mean += sigmoid(mid + ri);
    (mean / n < c.positive_rate ? lo : hi) = mid;
  }
  plan.beta0 = 0.5 * (lo + hi);

  for (int i = 0; i < n; ++i) {
    const double s = plan.beta0 + r[i];
    ds.samples[i].label = label_u[i] < sigmoid(s) ? 1 : 0;
    ds.samples[i].meta.log_odds = s;
  }
  return ds;
}

}  // namespace

Schema synth_schema(int n_extra_fields) {
  Schema s;
  auto cat = [&](const std::string& name, bool shared) {
    FieldSpec f;
    f.name = name;
    f.kind = FieldKind::categorical;
    f.shared = shared;
    s.fields.push_back(std::move(f));
  };
  cat("action", true);
  cat("merchant", true);
  cat("card_type", true);
  cat("channel", true);
  cat("device", false);
  cat("geo", false);
  for (int e = 0; e < n_extra_fields; ++e) cat("extra" + std::to_string(e), false);
  auto num = [&](const std::string& name) {
    FieldSpec f;
    f.name = name;
    f.kind = FieldKind::numerical;
    f.shared = true;
    s.fields.push_back(std::move(f));
  };
  num("amount");
  num("account_age");
  return s;
}

SynthResult synthesize(const SynthConfig& cfg) {
  TransferSynthConfig tc;
  tc.base = cfg;
  tc.rho = 1.0;
  tc.shared_signal_fraction = 1.0;
  tc.conflict = false;
  PlanPair pp = build_plans(tc, /*want_target=*/false);
  SynthResult out;
  out.schema = synth_schema(cfg.n_extra_fields);
  out.data = generate_domain(pp.src, cfg, cfg.n_samples,
                             cfg.seed * 0x9E3779B97F4A7C15ull + 101u, out.schema);
  out.data.split_tag = "train";
  pp.info["source"]["beta0"] = pp.src.beta0;
  out.info_json = pp.info.dump(2);
  return out;
}

TransferSynthResult synthesize_transfer(const TransferSynthConfig& cfg) {
  PlanPair pp = build_plans(cfg, /*want_target=*/true);
  TransferSynthResult out;
  out.schema = synth_schema(cfg.base.n_extra_fields);
  out.src = generate_domain(pp.src, cfg.base, cfg.n_src,
                            cfg.base.seed * 0x9E3779B97F4A7C15ull + 101u, out.schema);
  out.tgt = generate_domain(pp.tgt, cfg.base, cfg.n_tgt,
                            cfg.base.seed * 0x9E3779B97F4A7C15ull + 202u, out.schema);
  pp.info["source"]["beta0"] = pp.src.beta0;
  pp.info["target"]["beta0"] = pp.tgt.beta0;
  out.info_json = pp.info.dump(2);
  return out;
}

namespace {

void read_base(const json& j, SynthConfig& c) {
  c.seed = j.value("seed", c.seed);
  c.n_samples = j.value("n_samples", c.n_samples);
  c.positive_rate = j.value("positive_rate", c.positive_rate);
  c.t_max = j.value("t_max", c.t_max);
  c.mean_hist_len = j.value("mean_hist_len", c.mean_hist_len);
  c.vocab_main = j.value("vocab_main", c.vocab_main);
  c.vocab_small = j.value("vocab_small", c.vocab_small);
  c.n_extra_fields = j.value("n_extra_fields", c.n_extra_fields);
  if (j.contains("value_boost")) {
    auto v = j["value_boost"].get<std::vector<double>>();
    if (v.size() != 3)
      throw std::runtime_error("synth: value_boost needs exactly 3 entries");
    std::copy(v.begin(), v.end(), c.value_boost.begin());
  }
  c.pair_boost = j.value("pair_boost", c.pair_boost);
  c.hist_boost = j.value("hist_boost", c.hist_boost);
  c.amount_amplify = j.value("amount_amplify", c.amount_amplify);
  c.amount_coef = j.value("amount_coef", c.amount_coef);
  c.age_coef = j.value("age_coef", c.age_coef);
  c.noise_half_range = j.value("noise_half_range", c.noise_half_range);
  c.plant_value_rate = j.value("plant_value_rate", c.plant_value_rate);
  c.pair_rate = j.value("pair_rate", c.pair_rate);
  c.hist_rate = j.value("hist_rate", c.hist_rate);
  c.fail_base_rate = j.value("fail_base_rate", c.fail_base_rate);
  c.hist_amount_min = j.value("hist_amount_min", c.hist_amount_min);
  c.zipf_exponent = j.value("zipf_exponent", c.zipf_exponent);
}

}  // namespace

SynthConfig synth_config_from_json(const std::string& json_text) {
  json j = json::parse(json_text);
  SynthConfig c;
  read_base(j, c);
  return c;
}

TransferSynthConfig transfer_config_from_json(const std::string& json_text) {
  json j = json::parse(json_text);
  TransferSynthConfig c;
  read_base(j, c.base);
  c.n_src = j.value("n_src", c.n_src);
  c.n_tgt = j.value("n_tgt", c.n_tgt);
  c.rho = j.value("rho", c.rho);
  c.shift_temp = j.value("shift_temp", c.shift_temp);
  c.shared_signal_fraction = j.value("shared_signal_fraction", c.shared_signal_fraction);
  c.conflict = j.value("conflict", c.conflict);
  c.conflict_boost = j.value("conflict_boost", c.conflict_boost);
  c.conflict_rate = j.value("conflict_rate", c.conflict_rate);
  return c;
}

}  // namespace henfd
