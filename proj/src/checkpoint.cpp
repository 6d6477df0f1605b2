#include "bfscl/checkpoint.hpp"

#include <limits>
#include <map>

#include "bfscl/binary_io.hpp"
#include "bfscl/error.hpp"

namespace bfscl {

std::string encode_checkpoint(std::span<const NamedTensor> entries) {
  io::ByteWriter w;
  w.bytes("BFSM");
  w.u32(kCheckpointVersion);
  for (const auto& e : entries) {
    if (e.name.size() > std::numeric_limits<std::uint16_t>::max()) throw UsageError("checkpoint: name too long");
    if (e.tensor.rank() > std::numeric_limits<std::uint8_t>::max()) throw UsageError("checkpoint: rank too large");
    w.u16(static_cast<std::uint16_t>(e.name.size()));
    w.bytes(e.name);
    w.u8(static_cast<std::uint8_t>(e.tensor.rank()));
    for (std::size_t d : e.tensor.shape) w.u32(static_cast<std::uint32_t>(d));
    for (double v : e.tensor.data) w.f64(v);
  }
  return w.str();
}

std::vector<NamedTensor> decode_checkpoint(std::string_view bytes) {
  io::ByteReader r(bytes);
  if (r.bytes(4, "magic") != "BFSM") throw FormatError("checkpoint: bad magic");
  const std::uint32_t version = r.u32("version");
  if (version != kCheckpointVersion) throw FormatError("checkpoint: unsupported version " + std::to_string(version));
  std::vector<NamedTensor> out;
  while (!r.done()) {
    NamedTensor e;
    const std::uint16_t len = r.u16("name length");
    e.name = std::string(r.bytes(len, "name"));
    const std::uint8_t rank = r.u8("rank");
    Shape shape;
    for (std::uint8_t i = 0; i < rank; ++i) shape.push_back(r.u32("dims"));
    const std::size_t n = shape_numel(shape);
    if (rank == 0 || n == 0) throw CorruptionError("checkpoint: empty tensor '" + e.name + "'", r.offset());
    if (r.remaining() / 8 < n) throw CorruptionError("truncated file while reading tensor '" + e.name + "'", r.offset());
    std::vector<double> data(n);
    for (double& v : data) v = r.f64("values");
    e.tensor = Tensor(std::move(shape), std::move(data));
    out.push_back(std::move(e));
  }
  return out;
}

void save_checkpoint(const std::string& path, std::span<const Parameter* const> params) {
  std::vector<NamedTensor> entries;
  for (const Parameter* p : params) entries.push_back({p->name(), Tensor(p->shape(), p->tensor().data)});
  io::write_file(path, encode_checkpoint(entries));
}

std::vector<NamedTensor> load_checkpoint(const std::string& path) { return decode_checkpoint(io::read_file(path)); }

void restore_parameters(std::span<Parameter* const> params, std::span<const NamedTensor> entries) {
  std::map<std::string, const Tensor*> by_name;
  for (const auto& e : entries) by_name[e.name] = &e.tensor;
  for (Parameter* p : params) {
    auto it = by_name.find(p->name());
    if (it == by_name.end()) throw FormatError("checkpoint: missing parameter '" + p->name() + "'");
    if (it->second->shape != p->shape()) {
      throw DimensionError("checkpoint: parameter '" + p->name() + "' has shape " +
                           shape_to_string(it->second->shape) + ", expected " + shape_to_string(p->shape()));
    }
    p->tensor().data = it->second->data;
  }
}

}  // namespace bfscl
