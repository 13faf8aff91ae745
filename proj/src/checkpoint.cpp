#include "ccaudit/checkpoint.hpp"

#include <bit>
#include <cstring>
#include <fstream>
#include <istream>
#include <ostream>

namespace ccaudit {

using nlohmann::ordered_json;

namespace {

constexpr const char* kFormat = "ccaudit-checkpoint/1";

std::uint64_t to_le(std::uint64_t v) {
  if constexpr (std::endian::native == std::endian::big) {
    std::uint64_t r = 0;
    for (int i = 0; i < 8; ++i) r |= ((v >> (8 * i)) & 0xffU) << (8 * (7 - i));
    return r;
  }
  return v;
}

}  // namespace

void write_checkpoint(std::ostream& os, const Checkpoint& ckpt) {
  ordered_json h;
  h["format"] = kFormat;
  h["kind"] = ckpt.kind;
  h["env"] = ckpt.env_id;
  h["seed"] = ckpt.seed;
  h["shape"] = {ckpt.net.input_size(), ckpt.net.hidden_size(), ckpt.net.output_size()};
  h["weights"] = ckpt.net.parameter_count();
  if (ckpt.catalog) {
    ordered_json cat = ordered_json::array();
    for (const auto& g : ckpt.catalog->subsets) cat.push_back(g);
    h["catalog"] = std::move(cat);
  }
  h["meta"] = ckpt.meta;
  os << h.dump() << '\n';
  for (double w : ckpt.net.flatten()) {
    std::uint64_t bits;
    std::memcpy(&bits, &w, sizeof bits);
    bits = to_le(bits);
    os.write(reinterpret_cast<const char*>(&bits), sizeof bits);
  }
  if (!os) throw AuditError("failed to write checkpoint");
}

Checkpoint read_checkpoint(std::istream& is) {
  std::string line;
  if (!std::getline(is, line)) throw AuditError("checkpoint is empty");
  ordered_json h;
  try {
    h = ordered_json::parse(line);
  } catch (const std::exception& e) {
    throw AuditError(std::string("checkpoint header is not valid JSON: ") + e.what());
  }
  if (h.value("format", "") != kFormat) throw AuditError("not a checkpoint file (format tag missing)");
  Checkpoint c;
  try {
    c.kind = h.at("kind").get<std::string>();
    c.env_id = h.at("env").get<std::string>();
    c.seed = h.at("seed").get<std::uint64_t>();
    const auto shape = h.at("shape").get<std::vector<int>>();
    if (shape.size() != 3) throw AuditError("checkpoint shape must have 3 entries");
    c.net = NetworkParams::zeros(shape[0], shape[1], shape[2]);
    if (h.contains("catalog")) c.catalog = SubsetCatalog{h["catalog"].get<std::vector<FeatureSubset>>()};
    if (h.contains("meta")) c.meta = h["meta"];
  } catch (const nlohmann::json::exception& e) {
    throw AuditError(std::string("malformed checkpoint header: ") + e.what());
  }
  std::vector<double> flat(c.net.parameter_count());
  for (double& w : flat) {
    std::uint64_t bits;
    if (!is.read(reinterpret_cast<char*>(&bits), sizeof bits))
      throw AuditError("checkpoint truncated: expected " + std::to_string(flat.size()) + " weights");
    bits = to_le(bits);
    std::memcpy(&w, &bits, sizeof w);
  }
  if (is.peek() != std::char_traits<char>::eof()) throw AuditError("checkpoint has trailing bytes");
  c.net.assign(flat);
  return c;
}

void save_checkpoint(const std::string& path, const Checkpoint& ckpt) {
  std::ofstream os(path, std::ios::binary);
  if (!os) throw AuditError("cannot open " + path + " for writing");
  write_checkpoint(os, ckpt);
}

Checkpoint load_checkpoint(const std::string& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw AuditError("cannot open checkpoint " + path);
  return read_checkpoint(is);
}

}  // namespace ccaudit
