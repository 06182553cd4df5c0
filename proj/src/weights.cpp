#include "oto/weights.hpp"

#include <bit>
#include <cstdint>
#include <fstream>
#include <map>
#include <stdexcept>
#include <vector>

namespace oto {

namespace {

constexpr char kMagic[4] = {'O', 'T', 'O', '1'};
constexpr std::uint8_t kVersion = 1;

void put_u16(std::ostream& out, std::uint16_t v) {
  const char b[2] = {static_cast<char>(v & 0xFF), static_cast<char>(v >> 8)};
  out.write(b, 2);
}

void put_u32(std::ostream& out, std::uint32_t v) {
  char b[4];
  for (int i = 0; i < 4; ++i) b[i] = static_cast<char>(v >> (8 * i) & 0xFF);
  out.write(b, 4);
}

void put_u64(std::ostream& out, std::uint64_t v) {
  char b[8];
  for (int i = 0; i < 8; ++i) b[i] = static_cast<char>(v >> (8 * i) & 0xFF);
  out.write(b, 8);
}

void put_floats(std::ostream& out, const std::vector<float>& v) {
  for (float f : v) put_u32(out, std::bit_cast<std::uint32_t>(f));
}

struct Reader {
  std::ifstream in;
  std::string context = "header";

  explicit Reader(const std::string& path) : in(path, std::ios::binary) {
    if (!in) throw std::runtime_error("load_weights: cannot open " + path);
  }
  void bytes(char* dst, std::size_t n) {
    in.read(dst, static_cast<std::streamsize>(n));
    if (in.gcount() != static_cast<std::streamsize>(n))
      throw std::runtime_error("load_weights: file truncated while reading " + context);
  }
  std::uint16_t u16() {
    unsigned char b[2];
    bytes(reinterpret_cast<char*>(b), 2);
    return static_cast<std::uint16_t>(b[0] | b[1] << 8);
  }
  std::uint32_t u32() {
    unsigned char b[4];
    bytes(reinterpret_cast<char*>(b), 4);
    std::uint32_t v = 0;
    for (int i = 3; i >= 0; --i) v = v << 8 | b[i];
    return v;
  }
};

}  // namespace

void save_weights(Model& model, const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("save_weights: cannot open " + path);

  const auto stats = model.state_arrays();
  out.write(kMagic, 4);
  out.put(static_cast<char>(kVersion));
  put_u64(out, model.config().digest());
  put_u32(out, static_cast<std::uint32_t>(model.parameters().size() + stats.size()));

  auto header = [&](const std::string& name, std::initializer_list<int> dims) {
    if (name.size() > 0xFFFF)
      throw std::runtime_error("save_weights: name too long: " + name);
    put_u16(out, static_cast<std::uint16_t>(name.size()));
    out.write(name.data(), static_cast<std::streamsize>(name.size()));
    put_u32(out, static_cast<std::uint32_t>(dims.size()));
    for (int d : dims) put_u32(out, static_cast<std::uint32_t>(d));
  };

  for (Parameter* p : model.parameters()) {
    const Shape& s = p->value().shape;
    header(p->name, {s.n, s.c, s.h, s.w});
    put_floats(out, p->value().data);
  }
  for (const auto& [name, arr] : stats) {
    header(name, {static_cast<int>(arr->size())});
    put_floats(out, *arr);
  }
  if (!out) throw std::runtime_error("save_weights: write failed for " + path);
}

void load_weights(Model& model, const std::string& path) {
  Reader r(path);
  char magic[4];
  r.bytes(magic, 4);
  if (std::string(magic, 4) != std::string(kMagic, 4))
    throw std::runtime_error("load_weights: " + path + " is not a weights file");
  char version;
  r.bytes(&version, 1);
  if (static_cast<std::uint8_t>(version) != kVersion)
    throw std::runtime_error("load_weights: unsupported format version");

  std::uint64_t digest = 0;
  for (int i = 0; i < 8; ++i) {
    unsigned char b;
    r.bytes(reinterpret_cast<char*>(&b), 1);
    digest |= static_cast<std::uint64_t>(b) << (8 * i);
  }
  if (digest != model.config().digest())
    throw std::runtime_error(
        "load_weights: weights were saved for a different architecture");

  const std::uint32_t count = r.u32();
  std::map<std::string, std::pair<std::vector<int>, std::vector<float>>> arrays;
  for (std::uint32_t a = 0; a < count; ++a) {
    r.context = "array " + std::to_string(a) + " name";
    const std::uint16_t len = r.u16();
    std::string name(len, '\0');
    r.bytes(name.data(), len);
    r.context = name;
    const std::uint32_t rank = r.u32();
    if (rank == 0 || rank > 4)
      throw std::runtime_error("load_weights: bad rank for " + name);
    std::vector<int> dims(rank);
    std::size_t total = 1;
    for (std::uint32_t i = 0; i < rank; ++i) {
      dims[i] = static_cast<int>(r.u32());
      total *= static_cast<std::size_t>(dims[i]);
    }
    if (total > (1u << 28))
      throw std::runtime_error("load_weights: oversized array " + name);
    std::vector<float> data(total);
    for (float& f : data) f = std::bit_cast<float>(r.u32());
    if (!arrays.emplace(name, std::make_pair(std::move(dims), std::move(data))).second)
      throw std::runtime_error("load_weights: duplicate array " + name);
  }

  // match everything against the model before mutating it
  const auto stats = model.state_arrays();
  if (arrays.size() != model.parameters().size() + stats.size())
    throw std::runtime_error("load_weights: array count does not match the model");

  for (Parameter* p : model.parameters()) {
    auto it = arrays.find(p->name);
    if (it == arrays.end())
      throw std::runtime_error("load_weights: missing parameter " + p->name);
    const Shape& s = p->value().shape;
    const std::vector<int> want = {s.n, s.c, s.h, s.w};
    if (it->second.first != want)
      throw std::runtime_error("load_weights: shape mismatch for " + p->name);
  }
  for (const auto& [name, arr] : stats) {
    auto it = arrays.find(name);
    if (it == arrays.end())
      throw std::runtime_error("load_weights: missing statistics " + name);
    if (it->second.first != std::vector<int>{static_cast<int>(arr->size())})
      throw std::runtime_error("load_weights: shape mismatch for " + name);
  }

  for (Parameter* p : model.parameters())
    p->value().data = arrays.at(p->name).second;
  for (const auto& [name, arr] : stats) *arr = arrays.at(name).second;
}

}  // namespace oto
