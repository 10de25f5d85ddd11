#pragma once

#include <array>
#include <cstdint>
#include <string>
#include <unordered_map>
#include <vector>

namespace henfd {

enum class FieldKind { categorical, numerical };

/// One field declaration, optionally fitted with a vocabulary (categorical)
/// or normalization stats (numerical). Vocab index i maps to embedding row
/// i+1; row 0 is reserved for out-of-vocabulary values.
struct FieldSpec {
  std::string name;
  FieldKind kind = FieldKind::categorical;
  bool shared = false;
  std::vector<std::string> vocab;
  double mean = 0.0;
  double std_dev = 1.0;
  bool fitted = false;
};

struct Schema {
  std::vector<FieldSpec> fields;

  int field_index(const std::string& name) const;
  int n_fields() const { return static_cast<int>(fields.size()); }
  bool fitted() const;
};

/// One raw field value; which member is meaningful follows the field kind.
struct RawValue {
  std::string cat;
  double num = 0.0;
};

/// One behavior event, values aligned with the schema's field order.
struct RawEvent {
  std::vector<RawValue> values;
};

/// Ground-truth generator annotations carried by synthetic samples.
struct SynthFlags {
  bool present = false;
  double log_odds = 0.0;
  std::vector<std::pair<int, std::string>> fired_values;  // (field, value)
  bool fired_pair = false;
  std::vector<int> risk_event_positions;  // history indices of the motif
};

struct Sample {
  std::string user_id;
  std::string domain;  // "source" | "target"
  std::int64_t timestamp = 0;
  int label = 0;
  RawEvent target;
  std::vector<RawEvent> history;  // ascending time
  SynthFlags meta;
};

struct Dataset {
  Schema schema;
  std::vector<Sample> samples;
  std::string split_tag = "all";

  size_t size() const { return samples.size(); }
};

// --- files -----------------------------------------------------------------

Schema load_schema(const std::string& path);
void save_schema(const std::string& path, const Schema& schema);

/// String-level round trip, used when embedding fitted schemas in other
/// artifacts (checkpoint manifests, generator metadata).
std::string schema_to_json(const Schema& schema);
Schema schema_from_json(const std::string& text);

/// JSON Lines ingestion. Validates every sample against the schema: unknown
/// field names are an error, missing fields become OOV / 0.0 sentinels.
Dataset load_dataset(const Schema& schema, const std::string& data_path);
Dataset load_dataset(const std::string& schema_path, const std::string& data_path);
void save_jsonl(const Dataset& ds, const std::string& path);

// --- splits and fitting ------------------------------------------------------

/// Contiguous proportional split over the time-sorted samples (stable sort,
/// ties keep input order).
std::array<Dataset, 3> time_split(const Dataset& ds,
                                  std::array<int, 3> fractions = {5, 2, 3});

/// Fits vocabularies (first-occurrence order) and z-score stats over the
/// given samples; fields already fitted in `decls` are kept as-is.
Schema fit_schema(const Schema& decls, const std::vector<Sample>& train_samples);

// --- encoding ----------------------------------------------------------------

struct EncodedEvent {
  std::vector<std::int32_t> idx;  // categorical rows (0 = OOV)
  std::vector<double> num;        // z-scored numerical values
};

struct EncodedSample {
  std::vector<EncodedEvent> history;  // truncated to the most recent T-1
  EncodedEvent target;
  int label = 0;
};

struct FieldCodec {
  std::unordered_map<std::string, int> index;  // categorical value -> row >= 1
  int rows = 1;                                // table rows including OOV
  double mean = 0.0;
  double std_dev = 1.0;
};

/// Maps raw samples to encoded tensors under one vocabulary view.
struct ViewCodec {
  Schema schema;  // field declarations (kinds/names/shared flags)
  std::vector<FieldCodec> fields;

  EncodedEvent encode_event(const RawEvent& ev) const;
  EncodedSample encode_sample(const Sample& s, int t_max) const;
  std::vector<EncodedSample> encode_all(const std::vector<Sample>& samples,
                                        int t_max) const;
};

ViewCodec make_codec(const Schema& fitted);

}  // namespace henfd
