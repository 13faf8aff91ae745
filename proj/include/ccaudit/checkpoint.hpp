#pragma once

#include "ccaudit/feature_policy.hpp"

#include <json.hpp>

#include <iosfwd>
#include <optional>

namespace ccaudit {

/// On disk: one line of JSON header, then the flattened weights as raw
/// little-endian float64 in the order w1 (row-major), b1, w2, b2.
struct Checkpoint {
  std::string kind = "policy";  // "policy" or "feature_parametrized"
  std::string env_id;
  std::uint64_t seed = 0;
  nlohmann::ordered_json meta = nlohmann::ordered_json::object();  // training config, provenance
  NetworkParams net;
  std::optional<SubsetCatalog> catalog;
};

void write_checkpoint(std::ostream& os, const Checkpoint& ckpt);
Checkpoint read_checkpoint(std::istream& is);
void save_checkpoint(const std::string& path, const Checkpoint& ckpt);
Checkpoint load_checkpoint(const std::string& path);

}  // namespace ccaudit
