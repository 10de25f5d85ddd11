#include "henfd/schema.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numeric>
#include <stdexcept>

#include <json.hpp>

namespace henfd {

using nlohmann::json;

int Schema::field_index(const std::string& name) const {
  for (size_t i = 0; i < fields.size(); ++i)
    if (fields[i].name == name) return static_cast<int>(i);
  return -1;
}

bool Schema::fitted() const {
  return !fields.empty() &&
         std::all_of(fields.begin(), fields.end(),
                     [](const FieldSpec& f) { return f.fitted; });
}

// --- schema file -------------------------------------------------------------

namespace detail {

Schema schema_from_json_obj(const json& j, const std::string& where) {
  if (!j.contains("fields") || !j["fields"].is_array())
    throw std::runtime_error("data: schema " + where + " lacks a fields array");
  Schema s;
  for (const auto& jf : j["fields"]) {
    FieldSpec f;
    f.name = jf.at("name").get<std::string>();
    const std::string kind = jf.at("kind").get<std::string>();
    if (kind == "categorical")
      f.kind = FieldKind::categorical;
    else if (kind == "numerical")
      f.kind = FieldKind::numerical;
    else
      throw std::runtime_error("data: field '" + f.name + "' has unknown kind '" + kind + "'");
    f.shared = jf.value("shared", false);
    if (f.kind == FieldKind::categorical && jf.contains("vocab")) {
      f.vocab = jf["vocab"].get<std::vector<std::string>>();
      f.fitted = true;
    }
    if (f.kind == FieldKind::numerical && jf.contains("mean") && jf.contains("std")) {
      f.mean = jf["mean"].get<double>();
      f.std_dev = jf["std"].get<double>();
      if (f.std_dev <= 0.0) f.std_dev = 1.0;
      f.fitted = true;
    }
    s.fields.push_back(std::move(f));
  }
  // Duplicate names would make event dicts ambiguous.
  for (size_t i = 0; i < s.fields.size(); ++i)
    for (size_t k = i + 1; k < s.fields.size(); ++k)
      if (s.fields[i].name == s.fields[k].name)
        throw std::runtime_error("data: duplicate field name '" + s.fields[i].name + "'");
  return s;
}

json schema_to_json_obj(const Schema& schema) {
  json j;
  j["fields"] = json::array();
  for (const auto& f : schema.fields) {
    json jf;
    jf["name"] = f.name;
    jf["kind"] = f.kind == FieldKind::categorical ? "categorical" : "numerical";
    jf["shared"] = f.shared;
    if (f.fitted && f.kind == FieldKind::categorical) jf["vocab"] = f.vocab;
    if (f.fitted && f.kind == FieldKind::numerical) {
      jf["mean"] = f.mean;
      jf["std"] = f.std_dev;
    }
    j["fields"].push_back(std::move(jf));
  }
  return j;
}

}  // namespace detail

Schema load_schema(const std::string& path) {
  std::ifstream is(path);
  if (!is) throw std::runtime_error("data: cannot open schema '" + path + "'");
  json j;
  try {
    is >> j;
  } catch (const json::exception& e) {
    throw std::runtime_error("data: schema '" + path + "' is not valid JSON: " + e.what());
  }
  return detail::schema_from_json_obj(j, "'" + path + "'");
}

void save_schema(const std::string& path, const Schema& schema) {
  std::ofstream os(path, std::ios::trunc);
  if (!os) throw std::runtime_error("data: cannot write schema '" + path + "'");
  os << detail::schema_to_json_obj(schema).dump(2) << '\n';
}

std::string schema_to_json(const Schema& schema) {
  return detail::schema_to_json_obj(schema).dump();
}

Schema schema_from_json(const std::string& text) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::exception& e) {
    throw std::runtime_error(std::string("data: embedded schema is not valid JSON: ") + e.what());
  }
  return detail::schema_from_json_obj(j, "(embedded)");
}

// --- JSONL -------------------------------------------------------------------

namespace {

RawEvent parse_event(const json& jev, const Schema& schema, size_t line_no) {
  if (!jev.is_object())
    throw std::runtime_error("data: line " + std::to_string(line_no) +
                             ": event is not an object");
  RawEvent ev;
  ev.values.resize(schema.fields.size());
  for (auto it = jev.begin(); it != jev.end(); ++it) {
    int fi = schema.field_index(it.key());
    if (fi < 0)
      throw std::runtime_error("data: line " + std::to_string(line_no) +
                               ": unknown field '" + it.key() + "'");
    const FieldSpec& f = schema.fields[fi];
    if (f.kind == FieldKind::categorical) {
      if (it.value().is_string())
        ev.values[fi].cat = it.value().get<std::string>();
      else
        ev.values[fi].cat = it.value().dump();
    } else {
      if (!it.value().is_number())
        throw std::runtime_error("data: line " + std::to_string(line_no) +
                                 ": field '" + it.key() + "' must be numeric");
      ev.values[fi].num = it.value().get<double>();
    }
  }
  return ev;
}

json event_to_json(const RawEvent& ev, const Schema& schema) {
  json j = json::object();
  for (size_t i = 0; i < schema.fields.size(); ++i) {
    const FieldSpec& f = schema.fields[i];
    if (f.kind == FieldKind::categorical)
      j[f.name] = ev.values[i].cat;
    else
      j[f.name] = ev.values[i].num;
  }
  return j;
}

}  // namespace

Dataset load_dataset(const Schema& schema, const std::string& data_path) {
  std::ifstream is(data_path);
  if (!is) throw std::runtime_error("data: cannot open '" + data_path + "'");
  Dataset ds;
  ds.schema = schema;
  std::string line;
  size_t line_no = 0;
  while (std::getline(is, line)) {
    ++line_no;
    if (line.empty()) continue;
    json j;
    try {
      j = json::parse(line);
    } catch (const json::exception& e) {
      throw std::runtime_error("data: line " + std::to_string(line_no) +
                               ": malformed JSON: " + e.what());
    }
    try {
      Sample s;
      s.user_id = j.value("user_id", std::string());
      s.domain = j.value("domain", std::string("source"));
      s.timestamp = j.at("timestamp").get<std::int64_t>();
      s.label = j.at("label").get<int>();
      if (s.label != 0 && s.label != 1)
        throw std::runtime_error("label must be 0 or 1");
      s.target = parse_event(j.at("target"), schema, line_no);
      if (j.contains("history"))
        for (const auto& jev : j["history"])
          s.history.push_back(parse_event(jev, schema, line_no));
      if (j.contains("meta")) {
        const auto& jm = j["meta"];
        s.meta.present = true;
        s.meta.log_odds = jm.value("log_odds", 0.0);
        s.meta.fired_pair = jm.value("fired_pair", false);
        if (jm.contains("risk_events"))
          s.meta.risk_event_positions = jm["risk_events"].get<std::vector<int>>();
        if (jm.contains("fired_values"))
          for (const auto& fv : jm["fired_values"])
            s.meta.fired_values.emplace_back(fv.at(0).get<int>(),
                                             fv.at(1).get<std::string>());
      }
      ds.samples.push_back(std::move(s));
    } catch (const json::exception& e) {
      throw std::runtime_error("data: line " + std::to_string(line_no) +
                               ": " + e.what());
    }
  }
  return ds;
}

Dataset load_dataset(const std::string& schema_path, const std::string& data_path) {
  return load_dataset(load_schema(schema_path), data_path);
}

void save_jsonl(const Dataset& ds, const std::string& path) {
  std::ofstream os(path, std::ios::trunc);
  if (!os) throw std::runtime_error("data: cannot write '" + path + "'");
  for (const Sample& s : ds.samples) {
    json j;
    j["user_id"] = s.user_id;
    j["domain"] = s.domain;
    j["timestamp"] = s.timestamp;
    j["label"] = s.label;
    j["target"] = event_to_json(s.target, ds.schema);
    j["history"] = json::array();
    for (const RawEvent& ev : s.history)
      j["history"].push_back(event_to_json(ev, ds.schema));
    if (s.meta.present) {
      json jm;
      jm["log_odds"] = s.meta.log_odds;
      jm["fired_pair"] = s.meta.fired_pair;
      jm["risk_events"] = s.meta.risk_event_positions;
      jm["fired_values"] = json::array();
      for (const auto& [fi, val] : s.meta.fired_values)
        jm["fired_values"].push_back(json::array({fi, val}));
      j["meta"] = std::move(jm);
    }
    os << j.dump() << '\n';
  }
}

// --- splits ------------------------------------------------------------------

std::array<Dataset, 3> time_split(const Dataset& ds, std::array<int, 3> fractions) {
  if (ds.samples.empty()) throw std::runtime_error("data: time_split on empty dataset");
  const long total = fractions[0] + fractions[1] + fractions[2];
  if (total <= 0) throw std::runtime_error("data: time_split fractions must be positive");

  std::vector<size_t> order(ds.samples.size());
  std::iota(order.begin(), order.end(), size_t{0});
  std::stable_sort(order.begin(), order.end(), [&](size_t a, size_t b) {
    return ds.samples[a].timestamp < ds.samples[b].timestamp;
  });

  const size_t n = order.size();
  const size_t c1 = n * static_cast<size_t>(fractions[0]) / static_cast<size_t>(total);
  const size_t c2 =
      n * static_cast<size_t>(fractions[0] + fractions[1]) / static_cast<size_t>(total);

  std::array<Dataset, 3> out;
  const char* tags[3] = {"train", "validation", "test"};
  for (int p = 0; p < 3; ++p) {
    out[p].schema = ds.schema;
    out[p].split_tag = tags[p];
  }
  for (size_t i = 0; i < n; ++i) {
    int part = i < c1 ? 0 : (i < c2 ? 1 : 2);
    out[part].samples.push_back(ds.samples[order[i]]);
  }
  return out;
}

// --- fitting -----------------------------------------------------------------

Schema fit_schema(const Schema& decls, const std::vector<Sample>& train_samples) {
  Schema out = decls;
  for (size_t fi = 0; fi < out.fields.size(); ++fi) {
    FieldSpec& f = out.fields[fi];
    if (f.fitted) continue;
    if (f.kind == FieldKind::categorical) {
      std::unordered_map<std::string, int> seen;
      auto visit = [&](const RawEvent& ev) {
        const std::string& v = ev.values[fi].cat;
        if (!seen.count(v)) {
          seen.emplace(v, 1);
          f.vocab.push_back(v);
        }
      };
      for (const Sample& s : train_samples) {
        visit(s.target);
        for (const RawEvent& ev : s.history) visit(ev);
      }
    } else {
      double sum = 0.0, sumsq = 0.0;
      size_t count = 0;
      auto visit = [&](const RawEvent& ev) {
        sum += ev.values[fi].num;
        sumsq += ev.values[fi].num * ev.values[fi].num;
        ++count;
      };
      for (const Sample& s : train_samples) {
        visit(s.target);
        for (const RawEvent& ev : s.history) visit(ev);
      }
      if (count > 0) {
        f.mean = sum / static_cast<double>(count);
        const double var = std::max(0.0, sumsq / static_cast<double>(count) - f.mean * f.mean);
        f.std_dev = std::sqrt(var);
      }
      if (f.std_dev <= 1e-12) f.std_dev = 1.0;  // degenerate constant field
    }
    f.fitted = true;
  }
  return out;
}

// --- encoding ----------------------------------------------------------------

ViewCodec make_codec(const Schema& fitted) {
  if (!fitted.fitted())
    throw std::runtime_error("data: make_codec needs a fitted schema");
  ViewCodec c;
  c.schema = fitted;
  c.fields.resize(fitted.fields.size());
  for (size_t fi = 0; fi < fitted.fields.size(); ++fi) {
    const FieldSpec& f = fitted.fields[fi];
    FieldCodec& fc = c.fields[fi];
    if (f.kind == FieldKind::categorical) {
      fc.rows = static_cast<int>(f.vocab.size()) + 1;  // +1 for OOV row 0
      for (size_t v = 0; v < f.vocab.size(); ++v)
        fc.index.emplace(f.vocab[v], static_cast<int>(v) + 1);
    } else {
      fc.mean = f.mean;
      fc.std_dev = f.std_dev > 0.0 ? f.std_dev : 1.0;
    }
  }
  return c;
}

EncodedEvent ViewCodec::encode_event(const RawEvent& ev) const {
  EncodedEvent out;
  const size_t n = fields.size();
  out.idx.assign(n, 0);
  out.num.assign(n, 0.0);
  if (ev.values.size() != n)
    throw std::runtime_error("data: event arity does not match schema");
  for (size_t fi = 0; fi < n; ++fi) {
    if (schema.fields[fi].kind == FieldKind::categorical) {
      auto it = fields[fi].index.find(ev.values[fi].cat);
      out.idx[fi] = it == fields[fi].index.end() ? 0 : it->second;
    } else {
      out.num[fi] = (ev.values[fi].num - fields[fi].mean) / fields[fi].std_dev;
    }
  }
  return out;
}

EncodedSample ViewCodec::encode_sample(const Sample& s, int t_max) const {
  EncodedSample out;
  out.label = s.label;
  out.target = encode_event(s.target);
  // Keep the most recent T-1 history events.
  const int keep = std::max(0, t_max - 1);
  const size_t start = s.history.size() > static_cast<size_t>(keep)
                           ? s.history.size() - static_cast<size_t>(keep)
                           : 0;
  for (size_t i = start; i < s.history.size(); ++i)
    out.history.push_back(encode_event(s.history[i]));
  return out;
}

std::vector<EncodedSample> ViewCodec::encode_all(const std::vector<Sample>& samples,
                                                 int t_max) const {
  std::vector<EncodedSample> out;
  out.reserve(samples.size());
  for (const Sample& s : samples) out.push_back(encode_sample(s, t_max));
  return out;
}

}  // namespace henfd
