#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>
#include <stdexcept>
#include <vector>

#include "doctest.h"
#include "henfd/hen.hpp"

using namespace henfd;

namespace {

std::vector<double> softmax_oracle(const std::vector<double>& x) {
  const double mx = *std::max_element(x.begin(), x.end());
  std::vector<double> out(x.size());
  double z = 0.0;
  for (size_t i = 0; i < x.size(); ++i) z += (out[i] = std::exp(x[i] - mx));
  for (double& v : out) v /= z;
  return out;
}

// Naive quadratic oracle: e = sum_i w_i v_i + sum_{i<j} v_i (*) v_j.
std::vector<double> field_extract_oracle(const std::vector<std::vector<double>>& v,
                                         const std::vector<double>& attn) {
  const size_t n = v.size(), k = v[0].size();
  const std::vector<double> w = softmax_oracle(attn);
  std::vector<double> e(k, 0.0);
  for (size_t i = 0; i < n; ++i)
    for (size_t d = 0; d < k; ++d) e[d] += w[i] * v[i][d];
  for (size_t i = 0; i < n; ++i)
    for (size_t j = i + 1; j < n; ++j)
      for (size_t d = 0; d < k; ++d) e[d] += v[i][d] * v[j][d];
  return e;
}

void set_identity(ParamStore& store, int id) {
  auto& e = store.entry(id);
  std::fill(e.value.begin(), e.value.end(), 0.0);
  for (int i = 0; i < e.rows; ++i) e.value[i * e.cols + i] = 1.0;
}

void set_zero(ParamStore& store, int id) {
  auto& e = store.entry(id);
  std::fill(e.value.begin(), e.value.end(), 0.0);
}

std::vector<double> unit_vector(int k, int pos, double scale) {
  std::vector<double> v(k, 0.0);
  v[pos] = scale;
  return v;
}

}  // namespace

TEST_CASE("linear-time pairwise identity matches the naive quadratic form") {
  std::mt19937_64 rng(31337);
  std::uniform_real_distribution<double> vd(-2.0, 2.0);
  std::uniform_int_distribution<int> nd(1, 56);
  const int k = 16;
  for (int rep = 0; rep < 100; ++rep) {
    const int n = nd(rng);
    std::vector<std::vector<double>> v(n, std::vector<double>(k));
    std::vector<double> attn(n);
    for (auto& vi : v)
      for (double& x : vi) x = vd(rng);
    for (double& a : attn) a = vd(rng);

    ad::Tape tape;
    std::vector<ad::NodeId> vn, an;
    for (int i = 0; i < n; ++i) {
      vn.push_back(tape.constant(v[i], k, 1));
      an.push_back(tape.constant({attn[i]}));
    }
    FieldExtract fx = field_extract(tape, vn, an);
    tape.forward();

    const auto want = field_extract_oracle(v, attn);
    auto got = tape.value(fx.e);
    REQUIRE(got.size() == static_cast<size_t>(k));
    for (int d = 0; d < k; ++d)
      CHECK(std::abs(got[d] - want[d]) <=
            1e-9 * std::max(1.0, std::abs(want[d])));

    // the attention vector is a probability simplex
    auto w = tape.value(fx.w);
    double total = 0.0;
    for (double wi : w) {
      CHECK(wi >= 0.0);
      total += wi;
    }
    CHECK(std::abs(total - 1.0) <= 1e-12);
  }
}

TEST_CASE("single-field extraction reduces to the field vector") {
  ad::Tape tape;
  std::vector<ad::NodeId> v{tape.constant({1.5, -2.0, 0.25})};
  std::vector<ad::NodeId> a{tape.constant({0.7})};
  FieldExtract fx = field_extract(tape, v, a);
  tape.forward();
  CHECK(tape.value(fx.w)[0] == 1.0);
  auto e = tape.value(fx.e);
  CHECK(e[0] == 1.5);
  CHECK(e[1] == -2.0);
  CHECK(e[2] == 0.25);
}

TEST_CASE("two scalar fields with equal attention: hand anchor 8.5") {
  ad::Tape tape;
  std::vector<ad::NodeId> v{tape.constant({2.0}), tape.constant({3.0})};
  std::vector<ad::NodeId> a{tape.constant({0.3}), tape.constant({0.3})};
  FieldExtract fx = field_extract(tape, v, a);
  tape.forward();
  // 0.5*2 + 0.5*3 + 2*3 = 8.5
  CHECK(tape.scalar(fx.e) == doctest::Approx(8.5).epsilon(1e-12));
  CHECK(tape.value(fx.w)[0] == doctest::Approx(0.5).epsilon(1e-12));
}

TEST_CASE("field extraction is invariant to field order") {
  std::mt19937_64 rng(404);
  std::uniform_real_distribution<double> vd(-1.0, 1.0);
  const int n = 6, k = 16;
  std::vector<std::vector<double>> v(n, std::vector<double>(k));
  std::vector<double> attn(n);
  for (auto& vi : v)
    for (double& x : vi) x = vd(rng);
  for (double& a : attn) a = vd(rng);

  auto run = [&](const std::vector<int>& order) {
    ad::Tape tape;
    std::vector<ad::NodeId> vn, an;
    for (int i : order) {
      vn.push_back(tape.constant(v[i], k, 1));
      an.push_back(tape.constant({attn[i]}));
    }
    FieldExtract fx = field_extract(tape, vn, an);
    tape.forward();
    auto e = tape.value(fx.e);
    return std::vector<double>(e.begin(), e.end());
  };

  std::vector<int> fwd(n), perm(n);
  std::iota(fwd.begin(), fwd.end(), 0);
  perm = {3, 0, 5, 1, 4, 2};
  auto e1 = run(fwd);
  auto e2 = run(perm);
  for (int d = 0; d < k; ++d) CHECK(std::abs(e1[d] - e2[d]) <= 1e-12);
}

TEST_CASE("event attention with identity projections") {
  const int k = 16;
  ParamStore store;
  std::mt19937_64 rng(1);
  HenTower tower = register_hen_tower(store, "t.", k, rng);
  set_identity(store, tower.f1w);
  set_zero(store, tower.f1b);
  set_identity(store, tower.f2w);
  set_identity(store, tower.f3w);

  SUBCASE("single event pools to f1 of itself with unit attention") {
    ad::Tape tape(&store);
    std::vector<ad::NodeId> hist{tape.constant(unit_vector(k, 2, 1.25), k, 1)};
    EventExtract ex = event_extract(tape, hist, tower, k);
    tape.forward();
    CHECK(tape.value(ex.u)[0] == 1.0);
    CHECK(tape.value(ex.s)[2] == doctest::Approx(1.25).epsilon(1e-15));
  }

  SUBCASE("identical events split attention evenly") {
    ad::Tape tape(&store);
    std::vector<ad::NodeId> hist{tape.constant(unit_vector(k, 0, 0.5), k, 1),
                                 tape.constant(unit_vector(k, 0, 0.5), k, 1)};
    EventExtract ex = event_extract(tape, hist, tower, k);
    tape.forward();
    CHECK(tape.value(ex.u)[0] == doctest::Approx(0.5).epsilon(1e-15));
    CHECK(tape.value(ex.u)[1] == doctest::Approx(0.5).epsilon(1e-15));
  }

  SUBCASE("scaled inner-product scores: hand anchor (0.3208, 0.6792)") {
    // e1 = (1,0,..), e2 = (2,0,..): scores <e,e>/sqrt(16) = (0.25, 1.0)
    ad::Tape tape(&store);
    std::vector<ad::NodeId> hist{tape.constant(unit_vector(k, 0, 1.0), k, 1),
                                 tape.constant(unit_vector(k, 0, 2.0), k, 1)};
    EventExtract ex = event_extract(tape, hist, tower, k);
    tape.forward();
    const double u1 = 1.0 / (1.0 + std::exp(0.75));  // softmax(0.25, 1.0)
    CHECK(tape.value(ex.u)[0] == doctest::Approx(u1).epsilon(1e-12));
    CHECK(tape.value(ex.u)[0] == doctest::Approx(0.3208).epsilon(1e-3));
    CHECK(tape.value(ex.u)[1] == doctest::Approx(1.0 - u1).epsilon(1e-12));
    // s = u1 e1 + u2 e2, so s[0] = u1 + 2 u2 and the rest stays zero
    CHECK(tape.value(ex.s)[0] ==
          doctest::Approx(u1 + 2.0 * (1.0 - u1)).epsilon(1e-12));
    CHECK(tape.value(ex.s)[5] == 0.0);
  }

  SUBCASE("empty history yields a zero embedding and no attention") {
    ad::Tape tape(&store);
    EventExtract ex = event_extract(tape, {}, tower, k);
    tape.forward();
    CHECK(ex.u == -1);
    auto s = tape.value(ex.s);
    REQUIRE(s.size() == static_cast<size_t>(k));
    for (double x : s) CHECK(x == 0.0);
  }
}

namespace {

// A small fitted schema: two categorical fields and one numerical field.
Schema wide_test_schema() {
  Schema s;
  FieldSpec f1{"color", FieldKind::categorical, false, {"red", "blue"}, 0, 1, true};
  FieldSpec f2{"shape", FieldKind::categorical, false, {"disc"}, 0, 1, true};
  FieldSpec f3{"weight", FieldKind::numerical, false, {}, 0.0, 1.0, true};
  s.fields = {f1, f2, f3};
  return s;
}

}  // namespace

TEST_CASE("wide term sums per-value scalars plus the bias") {
  ParamStore store;
  std::mt19937_64 rng(5);
  ViewCodec codec = make_codec(wide_test_schema());
  ViewTables tables = register_view(store, codec, "main.", 4, rng);

  RawEvent ev;
  ev.values.resize(3);
  ev.values[0].cat = "red";   // row 1
  ev.values[1].cat = "disc";  // row 1
  ev.values[2].num = 1.0;     // z = 1.0 under mean 0 / std 1
  EncodedEvent enc = codec.encode_event(ev);

  auto run = [&] {
    ad::Tape tape(&store);
    EventNodes nodes = embed_event(tape, tables, enc);
    ad::NodeId l = wide_term(tape, tables, nodes);
    tape.forward();
    return tape.scalar(l);
  };

  // everything zero: l = c_0 = 0
  CHECK(run() == 0.0);

  // only the bias
  store.at("main.wide.bias").value[0] = 0.1;
  CHECK(run() == doctest::Approx(0.1).epsilon(1e-15));

  // one categorical value scalar 0.7 plus bias 0.1
  store.at("main.wide.color").value[1] = 0.7;
  CHECK(run() == doctest::Approx(0.8).epsilon(1e-15));

  // three field contributions (0.2, -0.1, 0.3), zero bias -> 0.4;
  // the numerical term is x * c with x = 1.0
  store.at("main.wide.bias").value[0] = 0.0;
  store.at("main.wide.color").value[1] = 0.2;
  store.at("main.wide.shape").value[1] = -0.1;
  store.at("main.wide.weight").value[0] = 0.3;
  CHECK(run() == doctest::Approx(0.4).epsilon(1e-15));

  // the numerical wide term scales with the encoded value
  ev.values[2].num = -2.0;
  enc = codec.encode_event(ev);
  CHECK(run() == doctest::Approx(0.2 - 0.1 - 0.6).epsilon(1e-12));
}

TEST_CASE("zero-initialized model scores one half on any sample") {
  ParamStore store;
  std::mt19937_64 rng(77);
  const int k = 8, hidden = 16;
  ViewCodec codec = make_codec(wide_test_schema());
  ViewTables tables = register_view(store, codec, "main.", k, rng);
  HenTower tower = register_hen_tower(store, "hen.", k, rng);
  HeadParams head = register_head(store, "head.", 2 * k, hidden, rng);
  // embeddings stay random; all dense/attention/wide weights go to zero
  for (int id : {tower.f1w, tower.f1b, tower.f2w, tower.f3w, head.w1, head.b1,
                 head.w2, head.b2, head.w3, head.b3})
    set_zero(store, id);

  RawEvent ev;
  ev.values.resize(3);
  ev.values[0].cat = "blue";
  ev.values[1].cat = "mystery";  // OOV row
  ev.values[2].num = 0.4;
  Sample s;
  s.target = ev;
  s.history = {ev, ev};
  EncodedSample enc = codec.encode_sample(s, 10);

  ad::Tape tape(&store);
  std::mt19937_64 drop_rng(3);
  HenTrace tr = hen_tower_forward(tape, tables, tower, enc);
  ad::NodeId h = head_forward(tape, head, tr.z, 0.8, false, drop_rng);
  ad::NodeId yhat = tape.sigmoid(tape.add(h, tr.wide));
  tape.forward();
  CHECK(tape.scalar(yhat) == 0.5);
}

TEST_CASE("full forward pass matches a straight-line re-evaluation") {
  ParamStore store;
  std::mt19937_64 rng(2024);
  const int k = 8, hidden = 12;
  Schema schema = wide_test_schema();
  ViewCodec codec = make_codec(schema);
  ViewTables tables = register_view(store, codec, "main.", k, rng);
  HenTower tower = register_hen_tower(store, "hen.", k, rng);
  HeadParams head = register_head(store, "head.", 2 * k, hidden, rng);

  // give attention and wide scalars nonzero values so every path matters
  std::uniform_real_distribution<double> pd(-0.5, 0.5);
  for (const char* name : {"main.attn.color", "main.attn.shape", "main.attn.weight",
                           "main.wide.color", "main.wide.shape", "main.wide.weight",
                           "main.wide.bias", "hen.f1.b", "head.b1", "head.b2",
                           "head.out.b"})
    for (double& x : store.at(name).value) x = pd(rng);

  Sample s;
  auto mk = [](const char* c, const char* sh, double w) {
    RawEvent ev;
    ev.values.resize(3);
    ev.values[0].cat = c;
    ev.values[1].cat = sh;
    ev.values[2].num = w;
    return ev;
  };
  s.history = {mk("red", "disc", 0.3), mk("blue", "nope", -1.2),
               mk("blue", "disc", 2.0)};
  s.target = mk("red", "oov", 0.9);
  EncodedSample enc = codec.encode_sample(s, 10);

  ad::Tape tape(&store);
  std::mt19937_64 drop_rng(9);
  HenTrace tr = hen_tower_forward(tape, tables, tower, enc);
  ad::NodeId h = head_forward(tape, head, tr.z, 0.8, false, drop_rng);
  ad::NodeId logit = tape.add(h, tr.wide);
  ad::NodeId yhat = tape.sigmoid(logit);
  tape.forward();

  // --- independent straight-line oracle over the store values ---------------
  auto row = [&](const std::string& name, int r) {
    const auto& e = store.at(name);
    return std::vector<double>(e.value.begin() + r * e.cols,
                               e.value.begin() + (r + 1) * e.cols);
  };
  auto matvec = [&](const std::string& name, const std::vector<double>& x) {
    const auto& e = store.at(name);
    std::vector<double> out(e.rows, 0.0);
    for (int i = 0; i < e.rows; ++i)
      for (int j = 0; j < e.cols; ++j) out[i] += e.value[i * e.cols + j] * x[j];
    return out;
  };
  const char* fnames[3] = {"color", "shape", "weight"};
  auto embed = [&](const EncodedEvent& ev) {
    std::vector<std::vector<double>> v(3);
    std::vector<double> attn(3), wide(3);
    for (int fi = 0; fi < 3; ++fi) {
      const std::string base = fnames[fi];
      if (fi < 2) {  // categorical
        v[fi] = row("main.emb." + base, ev.idx[fi]);
        attn[fi] = store.at("main.attn." + base).value[ev.idx[fi]];
        wide[fi] = store.at("main.wide." + base).value[ev.idx[fi]];
      } else {  // numerical: scaled shared vector, value-scaled wide
        v[fi] = row("main.emb." + base, 0);
        for (double& x : v[fi]) x *= ev.num[fi];
        attn[fi] = store.at("main.attn." + base).value[0];
        wide[fi] = store.at("main.wide." + base).value[0] * ev.num[fi];
      }
    }
    const std::vector<double> w = softmax_oracle(attn);
    std::vector<double> e(k, 0.0), total(k, 0.0), sq(k, 0.0);
    for (int fi = 0; fi < 3; ++fi)
      for (int d = 0; d < k; ++d) {
        e[d] += w[fi] * v[fi][d];
        total[d] += v[fi][d];
        sq[d] += v[fi][d] * v[fi][d];
      }
    for (int d = 0; d < k; ++d) e[d] += 0.5 * (total[d] * total[d] - sq[d]);
    const double wsum = wide[0] + wide[1] + wide[2];
    return std::make_pair(e, wsum);
  };

  std::vector<std::vector<double>> e_hist;
  for (const auto& ev : enc.history) e_hist.push_back(embed(ev).first);
  auto [e_tgt, wide_sum] = embed(enc.target);

  std::vector<double> scores;
  std::vector<std::vector<double>> vals;
  for (const auto& e : e_hist) {
    auto f1 = matvec("hen.f1.W", e);
    const auto& b1 = store.at("hen.f1.b").value;
    for (int d = 0; d < k; ++d) f1[d] += b1[d];
    vals.push_back(f1);
    auto f2 = matvec("hen.f2.W", e);
    auto f3 = matvec("hen.f3.W", e);
    double dot = 0.0;
    for (int d = 0; d < k; ++d) dot += f2[d] * f3[d];
    scores.push_back(dot / std::sqrt(static_cast<double>(k)));
  }
  const std::vector<double> u = softmax_oracle(scores);
  std::vector<double> sseq(k, 0.0);
  for (size_t t = 0; t < vals.size(); ++t)
    for (int d = 0; d < k; ++d) sseq[d] += u[t] * vals[t][d];

  std::vector<double> z = sseq;
  z.insert(z.end(), e_tgt.begin(), e_tgt.end());
  auto h1 = matvec("head.W1", z);
  for (int i = 0; i < hidden; ++i)
    h1[i] = std::max(0.0, h1[i] + store.at("head.b1").value[i]);
  auto h2 = matvec("head.W2", h1);
  for (int i = 0; i < hidden; ++i)
    h2[i] = std::max(0.0, h2[i] + store.at("head.b2").value[i]);
  auto out = matvec("head.out.W", h2);
  const double mlp = out[0] + store.at("head.out.b").value[0];
  const double l = wide_sum + store.at("main.wide.bias").value[0];
  const double want = 1.0 / (1.0 + std::exp(-(mlp + l)));

  CHECK(std::abs(tape.scalar(yhat) - want) <= 1e-10);
  CHECK(std::abs(tape.scalar(tr.wide) - l) <= 1e-10);
  // attention vectors in the trace are simplexes
  auto uvec = tape.value(tr.u);
  double usum = 0.0;
  for (double x : uvec) usum += x;
  CHECK(std::abs(usum - 1.0) <= 1e-12);
}

TEST_CASE("negative log likelihood anchors") {
  ad::Tape tape;
  auto c = [&](double x) { return tape.constant({x}); };

  SUBCASE("all one-half predictions give ln 2") {
    std::vector<ad::NodeId> yhat{c(0.5), c(0.5), c(0.5), c(0.5)};
    std::vector<int> y{1, 0, 1, 0};
    ad::NodeId loss = nll_loss(tape, yhat, y);
    tape.forward();
    CHECK(tape.scalar(loss) == doctest::Approx(std::log(2.0)).epsilon(1e-15));
  }

  SUBCASE("hand case (0.9, 0.2) vs (1, 0)") {
    std::vector<ad::NodeId> yhat{c(0.9), c(0.2)};
    std::vector<int> y{1, 0};
    ad::NodeId loss = nll_loss(tape, yhat, y);
    tape.forward();
    const double want = -(std::log(0.9) + std::log(0.8)) / 2.0;
    CHECK(tape.scalar(loss) == doctest::Approx(want).epsilon(1e-12));
    CHECK(tape.scalar(loss) == doctest::Approx(0.1643).epsilon(1e-3));
  }

  SUBCASE("perfect predictions clamp to nearly zero loss") {
    std::vector<ad::NodeId> yhat{c(1.0), c(0.0)};
    std::vector<int> y{1, 0};
    ad::NodeId loss = nll_loss(tape, yhat, y);
    tape.forward();
    CHECK(tape.scalar(loss) <= 1e-11);
  }

  SUBCASE("empty and mismatched batches are rejected") {
    std::vector<ad::NodeId> none;
    std::vector<int> y0;
    CHECK_THROWS_AS((void)nll_loss(tape, none, y0), std::invalid_argument);
    std::vector<ad::NodeId> one{c(0.5)};
    std::vector<int> y2{1, 0};
    CHECK_THROWS_AS((void)nll_loss(tape, one, y2), std::invalid_argument);
  }
}
