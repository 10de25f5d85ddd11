#pragma once

#include <string>

#include "henfd/param_store.hpp"

namespace henfd {

inline constexpr const char* kCheckpointMagic = "HENFD-CKPT-1";

/// Binary checkpoint: magic line, a JSON manifest (model/config metadata),
/// then every parameter as name -> shape -> row-major doubles. Doubles are
/// written raw so reload is bit-exact.
void save_checkpoint(const std::string& path, const ParamStore& store,
                     const std::string& manifest_json);

struct LoadedCheckpoint {
  ParamStore store;
  std::string manifest_json;
};

LoadedCheckpoint load_checkpoint(const std::string& path);

}  // namespace henfd
