#include "stt/checkpoint.hpp"

#include <algorithm>

#include "stt/binary_io.hpp"

namespace stt {
namespace {

void write_geometry(io::ByteWriter& w, const ModelGeometry& g) {
  const std::uint32_t fields[] = {
      static_cast<std::uint32_t>(g.stem.kind),
      static_cast<std::uint32_t>(g.stem.in_height),
      static_cast<std::uint32_t>(g.stem.in_width),
      static_cast<std::uint32_t>(g.stem.in_channels),
      static_cast<std::uint32_t>(g.stem.patch),
      static_cast<std::uint32_t>(g.stem.channels),
      static_cast<std::uint32_t>(g.frames),
      static_cast<std::uint32_t>(g.dim),
      static_cast<std::uint32_t>(g.heads),
      static_cast<std::uint32_t>(g.blocks),
      static_cast<std::uint32_t>(g.mlp_dim),
      static_cast<std::uint32_t>(g.classes),
      g.spatial_attention ? 1u : 0u,
      g.temporal_attention ? 1u : 0u,
      static_cast<std::uint32_t>(g.readout),
  };
  for (auto f : fields) w.u32(f);
}

ModelGeometry read_geometry(io::ByteReader& r) {
  ModelGeometry g;
  const auto kind = r.u32();
  if (kind > static_cast<std::uint32_t>(StemKind::precomputed)) {
    throw CorruptFileError("checkpoint: unknown stem kind");
  }
  g.stem.kind = static_cast<StemKind>(kind);
  g.stem.in_height = r.u32();
  g.stem.in_width = r.u32();
  g.stem.in_channels = r.u32();
  g.stem.patch = r.u32();
  g.stem.channels = r.u32();
  g.frames = r.u32();
  g.dim = r.u32();
  g.heads = r.u32();
  g.blocks = r.u32();
  g.mlp_dim = r.u32();
  g.classes = r.u32();
  g.spatial_attention = r.u32() != 0;
  g.temporal_attention = r.u32() != 0;
  const auto readout = r.u32();
  if (readout > static_cast<std::uint32_t>(Readout::mean)) {
    throw CorruptFileError("checkpoint: unknown readout");
  }
  g.readout = static_cast<Readout>(readout);
  return g;
}

void write_values(io::ByteWriter& w, std::span<const TrainReal> values) {
  w.u64(values.size());
  for (auto v : values) w.f32(v);
}

}  // namespace

std::vector<std::uint8_t> encode_checkpoint(const Checkpoint& ckpt) {
  io::ByteWriter w;
  w.u32(kCheckpointMagic);
  w.u32(kCheckpointVersion);
  write_geometry(w, ckpt.params.geometry);
  const auto named = ckpt.params.named_tensors();
  w.u64(named.size());
  for (const auto& [name, t] : named) write_values(w, t.data());
  w.u64(ckpt.epoch);
  w.str(ckpt.rng_state);
  w.u64(ckpt.config_digest);
  w.u64(ckpt.velocity.size());
  for (const auto& v : ckpt.velocity) write_values(w, v);
  w.u64(io::fnv1a64(w.bytes()));
  return std::move(w.bytes());
}

Checkpoint decode_checkpoint(const std::vector<std::uint8_t>& bytes,
                             const std::optional<ModelGeometry>& expected) {
  io::ByteReader header(bytes);
  if (header.u32() != kCheckpointMagic) throw CorruptFileError("checkpoint: bad magic");
  if (const auto v = header.u32(); v != kCheckpointVersion) {
    throw VersionMismatchError("checkpoint version " + std::to_string(v) + ", this build reads " +
                               std::to_string(kCheckpointVersion));
  }
  const auto geometry = read_geometry(header);
  if (expected && !(*expected == geometry)) {
    throw GeometryMismatchError("checkpoint geometry does not match the configured model");
  }
  if (bytes.size() < 8) throw CorruptFileError("checkpoint: truncated");
  const std::span<const std::uint8_t> body(bytes.data(), bytes.size() - 8);
  io::ByteReader tail(std::span<const std::uint8_t>(bytes).subspan(bytes.size() - 8));
  if (io::fnv1a64(body) != tail.u64()) throw CorruptFileError("checkpoint: checksum mismatch");
  try {
    geometry.validate();
  } catch (const ConfigError& e) {
    throw CorruptFileError(std::string("checkpoint: invalid geometry: ") + e.what());
  }

  io::ByteReader r(body);
  r.u32();
  r.u32();
  read_geometry(r);

  Checkpoint ckpt;
  std::mt19937_64 shape_rng(0);
  ckpt.params = ModelParams<TrainReal>::init(geometry, shape_rng);
  auto named = ckpt.params.named_tensors();
  if (r.u64() != named.size()) throw CorruptFileError("checkpoint: tensor count mismatch");
  for (auto& [name, t] : named) {
    if (r.u64() != t.numel()) throw CorruptFileError("checkpoint: size mismatch for " + name);
    for (auto& v : t.mutable_data()) v = r.f32();
  }
  ckpt.epoch = r.u64();
  ckpt.rng_state = r.str();
  ckpt.config_digest = r.u64();
  const auto buffers = r.u64();
  if (buffers != 0 && buffers != named.size()) {
    throw CorruptFileError("checkpoint: velocity buffer count mismatch");
  }
  for (std::uint64_t i = 0; i < buffers; ++i) {
    const auto n = r.u64();
    if (n != named[i].second.numel()) throw CorruptFileError("checkpoint: velocity size mismatch");
    std::vector<TrainReal> v(n);
    for (auto& x : v) x = r.f32();
    ckpt.velocity.push_back(std::move(v));
  }
  if (r.remaining() != 0) throw CorruptFileError("checkpoint: trailing bytes");
  return ckpt;
}

void save_checkpoint(const Checkpoint& ckpt, const std::string& path) {
  io::write_file(path, encode_checkpoint(ckpt));
}

Checkpoint load_checkpoint(const std::string& path, const std::optional<ModelGeometry>& expected) {
  return decode_checkpoint(io::read_file(path), expected);
}

}  // namespace stt
