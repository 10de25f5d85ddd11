#include <algorithm>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <limits>
#include <stdexcept>
#include <string>

#include "doctest.h"
#include "henfd/schema.hpp"

using namespace henfd;

namespace {

Schema two_field_schema() {
  Schema s;
  s.fields.push_back({"merchant", FieldKind::categorical, false, {}, 0, 1, false});
  s.fields.push_back({"amount", FieldKind::numerical, false, {}, 0, 1, false});
  return s;
}

Sample make_sample(const std::string& merchant, double amount,
                   std::int64_t ts, int label = 0) {
  Sample s;
  s.user_id = "u";
  s.domain = "target";
  s.timestamp = ts;
  s.label = label;
  s.target.values.resize(2);
  s.target.values[0].cat = merchant;
  s.target.values[1].num = amount;
  return s;
}

struct TempDir {
  std::filesystem::path path;
  TempDir() {
    static int counter = 0;
    path = std::filesystem::temp_directory_path() /
           ("henfd_schema_test_" + std::to_string(counter++));
    std::filesystem::create_directories(path);
  }
  ~TempDir() { std::filesystem::remove_all(path); }
};

}  // namespace

TEST_CASE("schema json round trip preserves declarations and fitted state") {
  Schema s = two_field_schema();
  s.fields[0].shared = true;
  s.fields[0].vocab = {"a", "b", "c"};
  s.fields[0].fitted = true;
  s.fields[1].mean = 4.5;
  s.fields[1].std_dev = 2.25;
  s.fields[1].fitted = true;

  Schema back = schema_from_json(schema_to_json(s));
  REQUIRE(back.n_fields() == 2);
  CHECK(back.fields[0].name == "merchant");
  CHECK(back.fields[0].kind == FieldKind::categorical);
  CHECK(back.fields[0].shared);
  CHECK(back.fields[0].vocab == s.fields[0].vocab);
  CHECK(back.fields[0].fitted);
  CHECK(back.fields[1].kind == FieldKind::numerical);
  CHECK(back.fields[1].mean == 4.5);
  CHECK(back.fields[1].std_dev == 2.25);
  CHECK(back.fitted());
}

TEST_CASE("schema file round trip") {
  TempDir tmp;
  Schema s = two_field_schema();
  auto p = (tmp.path / "schema.json").string();
  save_schema(p, s);
  Schema back = load_schema(p);
  CHECK(back.n_fields() == 2);
  CHECK_FALSE(back.fitted());
}

TEST_CASE("malformed schema json is rejected") {
  CHECK_THROWS_AS((void)schema_from_json("not json"), std::runtime_error);
  CHECK_THROWS_AS((void)schema_from_json("{\"no_fields\": 1}"),
                  std::runtime_error);
}

TEST_CASE("field_index resolves names and flags unknowns") {
  Schema s = two_field_schema();
  CHECK(s.field_index("merchant") == 0);
  CHECK(s.field_index("amount") == 1);
  CHECK(s.field_index("nope") == -1);
}

TEST_CASE("fit_schema builds first-occurrence vocab and z-stats") {
  Schema decls = two_field_schema();
  std::vector<Sample> train = {
      make_sample("b", 2.0, 3),
      make_sample("a", 4.0, 1),
      make_sample("b", 6.0, 2),
  };
  Schema fitted = fit_schema(decls, train);
  REQUIRE(fitted.fitted());
  // first occurrence order over the given samples
  CHECK(fitted.fields[0].vocab == std::vector<std::string>{"b", "a"});
  CHECK(fitted.fields[1].mean == doctest::Approx(4.0));
  // population standard deviation of {2, 4, 6}
  CHECK(fitted.fields[1].std_dev == doctest::Approx(std::sqrt(8.0 / 3.0)));
}

TEST_CASE("codec encodes vocab hits, OOV, and z-scores") {
  Schema decls = two_field_schema();
  std::vector<Sample> train = {make_sample("a", 1.0, 1), make_sample("b", 3.0, 2)};
  ViewCodec codec = make_codec(fit_schema(decls, train));

  Sample s = make_sample("b", 3.0, 9);
  auto enc = codec.encode_sample(s, 10);
  CHECK(enc.target.idx[0] == 2);  // row 0 = OOV, "a" -> 1, "b" -> 2
  CHECK(enc.target.num[1] == doctest::Approx(1.0));  // (3 - 2) / 1

  Sample oov = make_sample("zz", 2.0, 9);
  auto enc2 = codec.encode_sample(oov, 10);
  CHECK(enc2.target.idx[0] == 0);
  CHECK(enc2.target.num[1] == doctest::Approx(0.0));
}

TEST_CASE("encode truncates history to the most recent t_max - 1 events") {
  Schema decls = two_field_schema();
  std::vector<Sample> train = {make_sample("a", 1.0, 1)};
  ViewCodec codec = make_codec(fit_schema(decls, train));

  Sample s = make_sample("a", 1.0, 50);
  for (int i = 0; i < 8; ++i) {
    RawEvent ev;
    ev.values.resize(2);
    ev.values[0].cat = "a";
    ev.values[1].num = static_cast<double>(i);  // oldest first
    s.history.push_back(ev);
  }
  auto enc = codec.encode_sample(s, 5);  // keeps 4 most recent
  REQUIRE(enc.history.size() == 4);
  CHECK(enc.history.front().num[1] == doctest::Approx(4.0 - 1.0));  // z = x - 1
  CHECK(enc.history.back().num[1] == doctest::Approx(7.0 - 1.0));
}

TEST_CASE("time_split is contiguous over sorted timestamps with stable ties") {
  Schema decls = two_field_schema();
  Dataset ds;
  ds.schema = decls;
  // timestamps shuffled; two ties at t=30 keep input order
  ds.samples = {make_sample("a", 0, 30), make_sample("b", 1, 10),
                make_sample("c", 2, 30), make_sample("d", 3, 20),
                make_sample("e", 4, 40), make_sample("f", 5, 5),
                make_sample("g", 6, 50), make_sample("h", 7, 45),
                make_sample("i", 8, 60), make_sample("j", 9, 1)};
  auto parts = time_split(ds, {5, 2, 3});
  CHECK(parts[0].size() == 5);
  CHECK(parts[1].size() == 2);
  CHECK(parts[2].size() == 3);
  // boundary ordering holds
  const std::int64_t kBig = std::numeric_limits<std::int64_t>::max();
  std::int64_t max_train = 0, min_val = kBig, max_val = 0, min_test = kBig;
  for (auto& s : parts[0].samples) max_train = std::max(max_train, s.timestamp);
  for (auto& s : parts[1].samples) {
    min_val = std::min(min_val, s.timestamp);
    max_val = std::max(max_val, s.timestamp);
  }
  for (auto& s : parts[2].samples) min_test = std::min(min_test, s.timestamp);
  CHECK(max_train <= min_val);
  CHECK(max_val <= min_test);
  // the two t=30 ties straddle the boundary in input order: "a" came first
  // so it lands at the end of train, "c" opens validation
  CHECK(parts[0].samples.back().target.values[0].cat == "a");
  CHECK(parts[1].samples.front().target.values[0].cat == "c");
}

TEST_CASE("jsonl round trip preserves samples, labels, and meta") {
  TempDir tmp;
  Schema decls = two_field_schema();
  Dataset ds;
  ds.schema = decls;
  Sample s = make_sample("b", 7.25, 1234, 1);
  RawEvent ev;
  ev.values.resize(2);
  ev.values[0].cat = "a";
  ev.values[1].num = -1.5;
  s.history.push_back(ev);
  s.meta.present = true;
  s.meta.log_odds = -3.25;
  s.meta.fired_pair = true;
  s.meta.fired_values = {{0, "b"}};
  s.meta.risk_event_positions = {0};
  ds.samples.push_back(s);

  auto data_p = (tmp.path / "data.jsonl").string();
  auto schema_p = (tmp.path / "schema.json").string();
  save_jsonl(ds, data_p);
  save_schema(schema_p, decls);

  Dataset back = load_dataset(schema_p, data_p);
  REQUIRE(back.size() == 1);
  const Sample& b = back.samples[0];
  CHECK(b.label == 1);
  CHECK(b.timestamp == 1234);
  CHECK(b.domain == "target");
  CHECK(b.target.values[0].cat == "b");
  CHECK(b.target.values[1].num == doctest::Approx(7.25));
  REQUIRE(b.history.size() == 1);
  CHECK(b.history[0].values[1].num == doctest::Approx(-1.5));
  CHECK(b.meta.present);
  CHECK(b.meta.log_odds == doctest::Approx(-3.25));
  CHECK(b.meta.fired_pair);
  REQUIRE(b.meta.fired_values.size() == 1);
  CHECK(b.meta.risk_event_positions == std::vector<int>{0});
}

TEST_CASE("unknown field names in data are an error") {
  TempDir tmp;
  auto schema_p = (tmp.path / "schema.json").string();
  save_schema(schema_p, two_field_schema());
  auto data_p = (tmp.path / "bad.jsonl").string();
  {
    std::ofstream out(data_p);
    out << R"({"domain":"target","timestamp":1,"label":0,"history":[],)"
        << R"("target":{"merchant":"a","amount":1.0,"mystery":5}})" << "\n";
  }
  try {
    (void)load_dataset(schema_p, data_p);
    FAIL("expected an unknown-field error");
  } catch (const std::runtime_error& e) {
    CHECK(std::string(e.what()).find("mystery") != std::string::npos);
  }
}

TEST_CASE("missing fields become OOV and 0 sentinels") {
  TempDir tmp;
  auto schema_p = (tmp.path / "schema.json").string();
  save_schema(schema_p, two_field_schema());
  auto data_p = (tmp.path / "sparse.jsonl").string();
  {
    std::ofstream out(data_p);
    out << R"({"domain":"target","timestamp":1,"label":0,"history":[],"target":{}})"
        << "\n";
  }
  Dataset ds = load_dataset(schema_p, data_p);
  REQUIRE(ds.size() == 1);
  CHECK(ds.samples[0].target.values[0].cat.empty());
  CHECK(ds.samples[0].target.values[1].num == 0.0);
}

TEST_CASE("malformed jsonl line is an error naming the line") {
  TempDir tmp;
  auto schema_p = (tmp.path / "schema.json").string();
  save_schema(schema_p, two_field_schema());
  auto data_p = (tmp.path / "bad2.jsonl").string();
  {
    std::ofstream out(data_p);
    out << R"({"domain":"target","timestamp":1,"label":0,"history":[],"target":{}})"
        << "\n";
    out << "this is not json\n";
  }
  try {
    (void)load_dataset(schema_p, data_p);
    FAIL("expected a parse error");
  } catch (const std::runtime_error& e) {
    CHECK(std::string(e.what()).find("2") != std::string::npos);
  }
}

TEST_CASE("fitting respects already-fitted declarations") {
  Schema decls = two_field_schema();
  decls.fields[0].vocab = {"keep_me"};
  decls.fields[0].fitted = true;
  std::vector<Sample> train = {make_sample("other", 5.0, 1)};
  Schema fitted = fit_schema(decls, train);
  CHECK(fitted.fields[0].vocab == std::vector<std::string>{"keep_me"});
  CHECK(fitted.fields[1].fitted);
  CHECK(fitted.fields[1].mean == doctest::Approx(5.0));
}

TEST_CASE("constant numerical field keeps unit deviation") {
  Schema decls = two_field_schema();
  std::vector<Sample> train = {make_sample("a", 3.0, 1), make_sample("b", 3.0, 2)};
  Schema fitted = fit_schema(decls, train);
  CHECK(fitted.fields[1].std_dev == 1.0);
  ViewCodec codec = make_codec(fitted);
  auto enc = codec.encode_sample(make_sample("a", 3.0, 5), 10);
  CHECK(enc.target.num[0] == 0.0);
}
