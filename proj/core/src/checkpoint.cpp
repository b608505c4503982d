#include "prunelab/checkpoint.hpp"

#include <cstring>
#include <fstream>

namespace prunelab {

namespace {

constexpr char kMagic[4] = {'P', 'L', 'C', 'K'};
constexpr std::uint32_t kVersion = 1;

void write_u32(std::ostream& out, std::uint32_t v) {
  out.write(reinterpret_cast<const char*>(&v), sizeof(v));
}

std::uint32_t read_u32(std::istream& in, const std::string& path) {
  std::uint32_t v = 0;
  if (!in.read(reinterpret_cast<char*>(&v), sizeof(v)))
    throw std::runtime_error(path + ": truncated checkpoint");
  return v;
}

std::uint8_t act_code(Activation a) {
  switch (a) {
    case Activation::Tanh: return 0;
    case Activation::Relu: return 1;
    case Activation::Identity: return 2;
  }
  return 2;
}

Activation act_from_code(std::uint8_t c, const std::string& path) {
  switch (c) {
    case 0: return Activation::Tanh;
    case 1: return Activation::Relu;
    case 2: return Activation::Identity;
  }
  throw std::runtime_error(path + ": unknown activation code " + std::to_string(c));
}

}  // namespace

void save_checkpoint(const Network& net, const Mask* mask, const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write " + path);
  out.write(kMagic, 4);
  write_u32(out, kVersion);
  write_u32(out, static_cast<std::uint32_t>(net.layers().size()));
  for (const Layer& l : net.layers()) {
    write_u32(out, static_cast<std::uint32_t>(l.in));
    write_u32(out, static_cast<std::uint32_t>(l.out));
    const std::uint8_t c = act_code(l.act);
    out.write(reinterpret_cast<const char*>(&c), 1);
  }
  const std::uint8_t has_mask = mask != nullptr;
  out.write(reinterpret_cast<const char*>(&has_mask), 1);
  out.write(reinterpret_cast<const char*>(net.params().data()),
            net.param_count() * sizeof(double));
  if (mask) {
    if (mask->size() != net.param_count())
      throw shape_error("checkpoint mask length != param count");
    out.write(reinterpret_cast<const char*>(mask->bits().data()), mask->size());
  }
  if (!out) throw std::runtime_error("write failed: " + path);
}

Checkpoint load_checkpoint(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open " + path);
  char magic[4];
  if (!in.read(magic, 4) || std::memcmp(magic, kMagic, 4) != 0)
    throw std::runtime_error(path + ": not a checkpoint file");
  const std::uint32_t version = read_u32(in, path);
  if (version != kVersion)
    throw std::runtime_error(path + ": unsupported checkpoint version " + std::to_string(version));

  const std::uint32_t n_layers = read_u32(in, path);
  std::vector<int> dims;
  std::vector<Activation> acts;
  for (std::uint32_t l = 0; l < n_layers; ++l) {
    const auto in_dim = static_cast<int>(read_u32(in, path));
    const auto out_dim = static_cast<int>(read_u32(in, path));
    std::uint8_t code = 0;
    if (!in.read(reinterpret_cast<char*>(&code), 1))
      throw std::runtime_error(path + ": truncated checkpoint");
    if (l == 0) dims.push_back(in_dim);
    else if (dims.back() != in_dim)
      throw std::runtime_error(path + ": inconsistent layer dimensions");
    dims.push_back(out_dim);
    acts.push_back(act_from_code(code, path));
  }
  std::uint8_t has_mask = 0;
  if (!in.read(reinterpret_cast<char*>(&has_mask), 1))
    throw std::runtime_error(path + ": truncated checkpoint");

  Checkpoint ck;
  ck.net = Network::zeros(dims, acts);
  if (!in.read(reinterpret_cast<char*>(ck.net.params().data()),
               ck.net.param_count() * sizeof(double)))
    throw std::runtime_error(path + ": truncated parameters");
  if (has_mask) {
    std::vector<std::uint8_t> bits(ck.net.param_count());
    if (!in.read(reinterpret_cast<char*>(bits.data()), bits.size()))
      throw std::runtime_error(path + ": truncated mask");
    ck.mask = Mask(std::move(bits));
  }
  return ck;
}

}  // namespace prunelab
