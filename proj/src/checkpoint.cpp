#include "hbpn/checkpoint.hpp"

#include <bit>
#include <cstring>
#include <fstream>

namespace hbpn {

namespace {

constexpr char kMagic[8] = {'H', 'B', 'P', 'N', 'C', 'K', 'P', '1'};
constexpr std::uint32_t kVersion = 1;
constexpr std::uint32_t kFlagTrainer = 1u;

void put_u32(std::ostream& out, std::uint32_t v) {
  const unsigned char b[4] = {
      static_cast<unsigned char>(v), static_cast<unsigned char>(v >> 8),
      static_cast<unsigned char>(v >> 16), static_cast<unsigned char>(v >> 24)};
  out.write(reinterpret_cast<const char*>(b), 4);
}

void put_u64(std::ostream& out, std::uint64_t v) {
  put_u32(out, static_cast<std::uint32_t>(v));
  put_u32(out, static_cast<std::uint32_t>(v >> 32));
}

void put_f32_array(std::ostream& out, const float* data, std::size_t count) {
  if constexpr (std::endian::native == std::endian::little) {
    out.write(reinterpret_cast<const char*>(data),
              static_cast<std::streamsize>(count * 4));
  } else {
    for (std::size_t i = 0; i < count; ++i) {
      put_u32(out, std::bit_cast<std::uint32_t>(data[i]));
    }
  }
}

std::uint32_t get_u32(std::istream& in, const std::filesystem::path& path) {
  unsigned char b[4];
  in.read(reinterpret_cast<char*>(b), 4);
  if (!in) throw CheckpointError(path.string() + ": truncated file");
  return static_cast<std::uint32_t>(b[0]) |
         (static_cast<std::uint32_t>(b[1]) << 8) |
         (static_cast<std::uint32_t>(b[2]) << 16) |
         (static_cast<std::uint32_t>(b[3]) << 24);
}

std::uint64_t get_u64(std::istream& in, const std::filesystem::path& path) {
  const std::uint64_t lo = get_u32(in, path);
  const std::uint64_t hi = get_u32(in, path);
  return lo | (hi << 32);
}

void get_f32_array(std::istream& in, const std::filesystem::path& path,
                   float* data, std::size_t count) {
  if constexpr (std::endian::native == std::endian::little) {
    in.read(reinterpret_cast<char*>(data),
            static_cast<std::streamsize>(count * 4));
    if (!in) throw CheckpointError(path.string() + ": truncated tensor data");
  } else {
    for (std::size_t i = 0; i < count; ++i) {
      data[i] = std::bit_cast<float>(get_u32(in, path));
    }
  }
}

}  // namespace

void save_checkpoint(const std::filesystem::path& path, const HBPNModel& model,
                     const TrainerState* trainer) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw CheckpointError(path.string() + ": cannot open for writing");
  out.write(kMagic, 8);
  put_u32(out, kVersion);
  put_u32(out, static_cast<std::uint32_t>(model.cfg.scale));
  put_u32(out, static_cast<std::uint32_t>(model.cfg.modules));
  put_u32(out, static_cast<std::uint32_t>(model.cfg.depth));
  put_u32(out, static_cast<std::uint32_t>(model.cfg.base_channels));
  put_u32(out, model.cfg.head == HeadKind::WR ? 0u : 1u);
  put_u32(out, trainer ? kFlagTrainer : 0u);
  const auto params = model.named_params();
  put_u64(out, params.size());
  for (const auto& p : params) {
    put_u32(out, static_cast<std::uint32_t>(p.name.size()));
    out.write(p.name.data(), static_cast<std::streamsize>(p.name.size()));
    const Shape4 s = p.tensor->shape;
    put_u32(out, static_cast<std::uint32_t>(s.n));
    put_u32(out, static_cast<std::uint32_t>(s.c));
    put_u32(out, static_cast<std::uint32_t>(s.h));
    put_u32(out, static_cast<std::uint32_t>(s.w));
    put_f32_array(out, p.tensor->data.data(), p.tensor->data.size());
  }
  if (trainer) {
    if (trainer->m.size() != params.size() ||
        trainer->v.size() != params.size()) {
      throw CheckpointError("save_checkpoint: trainer moments do not match "
                            "the parameter list");
    }
    put_u64(out, trainer->adam_step);
    put_u64(out, trainer->global_step);
    put_u64(out, trainer->seed);
    for (std::size_t i = 0; i < params.size(); ++i) {
      put_f32_array(out, trainer->m[i].data(), trainer->m[i].size());
      put_f32_array(out, trainer->v[i].data(), trainer->v[i].size());
    }
  }
  out.flush();
  if (!out) throw CheckpointError(path.string() + ": write failed");
}

Checkpoint load_checkpoint(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw CheckpointError(path.string() + ": cannot open");
  char magic[8];
  in.read(magic, 8);
  if (!in || std::memcmp(magic, kMagic, 8) != 0) {
    throw CheckpointError(path.string() + ": not a checkpoint file");
  }
  const std::uint32_t version = get_u32(in, path);
  if (version != kVersion) {
    throw CheckpointError(path.string() + ": unsupported format version " +
                          std::to_string(version));
  }
  Checkpoint ckpt;
  ckpt.model_cfg.scale = static_cast<int>(get_u32(in, path));
  ckpt.model_cfg.modules = static_cast<int>(get_u32(in, path));
  ckpt.model_cfg.depth = static_cast<int>(get_u32(in, path));
  ckpt.model_cfg.base_channels = static_cast<int>(get_u32(in, path));
  ckpt.model_cfg.head = get_u32(in, path) == 0 ? HeadKind::WR : HeadKind::Plain;
  const std::uint32_t flags = get_u32(in, path);
  const std::uint64_t count = get_u64(in, path);
  ckpt.params.reserve(count);
  for (std::uint64_t i = 0; i < count; ++i) {
    const std::uint32_t name_len = get_u32(in, path);
    std::string name(name_len, '\0');
    in.read(name.data(), name_len);
    if (!in) throw CheckpointError(path.string() + ": truncated name");
    Shape4 s;
    s.n = static_cast<int>(get_u32(in, path));
    s.c = static_cast<int>(get_u32(in, path));
    s.h = static_cast<int>(get_u32(in, path));
    s.w = static_cast<int>(get_u32(in, path));
    Tensor4 t(s);
    get_f32_array(in, path, t.data.data(), t.data.size());
    ckpt.params.emplace_back(std::move(name), std::move(t));
  }
  if (flags & kFlagTrainer) {
    ckpt.has_trainer = true;
    ckpt.trainer.adam_step = get_u64(in, path);
    ckpt.trainer.global_step = get_u64(in, path);
    ckpt.trainer.seed = get_u64(in, path);
    for (const auto& [name, t] : ckpt.params) {
      std::vector<float> m(t.data.size()), v(t.data.size());
      get_f32_array(in, path, m.data(), m.size());
      get_f32_array(in, path, v.data(), v.size());
      ckpt.trainer.m.push_back(std::move(m));
      ckpt.trainer.v.push_back(std::move(v));
    }
  }
  return ckpt;
}

HBPNModel model_from_checkpoint(const Checkpoint& ckpt) {
  HBPNModel model = HBPNModel::build(ckpt.model_cfg, 0);
  auto params = model.named_params();
  if (params.size() != ckpt.params.size()) {
    throw CheckpointError("checkpoint holds " +
                          std::to_string(ckpt.params.size()) +
                          " parameters, architecture has " +
                          std::to_string(params.size()));
  }
  for (std::size_t i = 0; i < params.size(); ++i) {
    const auto& [name, stored] = ckpt.params[i];
    if (params[i].name != name) {
      throw CheckpointError("checkpoint parameter '" + name +
                            "' does not match architecture parameter '" +
                            params[i].name + "'");
    }
    if (!(params[i].tensor->shape == stored.shape)) {
      throw CheckpointError("checkpoint parameter '" + name + "' has shape " +
                            stored.shape.str() + ", architecture expects " +
                            params[i].tensor->shape.str());
    }
    params[i].tensor->data = stored.data;
  }
  return model;
}

}  // namespace hbpn
