#include "checkpoint.hpp"

#include <zlib.h>

#include <cstring>
#include <fstream>

namespace adec {

namespace {

void put_u32(std::string& out, std::uint32_t v) {
  for (int i = 0; i < 4; ++i) out.push_back(char((v >> (8 * i)) & 0xff));
}

void put_u64(std::string& out, std::uint64_t v) {
  for (int i = 0; i < 8; ++i) out.push_back(char((v >> (8 * i)) & 0xff));
}

struct Reader {
  const std::string& buf;
  std::size_t pos = 0;

  void need(std::size_t k) const {
    if (pos + k > buf.size())
      throw FormatError("checkpoint truncated at byte offset " +
                        std::to_string(pos));
  }
  std::uint32_t u32() {
    need(4);
    std::uint32_t v = 0;
    for (int i = 0; i < 4; ++i)
      v |= std::uint32_t(std::uint8_t(buf[pos + i])) << (8 * i);
    pos += 4;
    return v;
  }
  std::uint64_t u64() {
    need(8);
    std::uint64_t v = 0;
    for (int i = 0; i < 8; ++i)
      v |= std::uint64_t(std::uint8_t(buf[pos + i])) << (8 * i);
    pos += 8;
    return v;
  }
  std::string bytes(std::size_t k) {
    need(k);
    std::string s = buf.substr(pos, k);
    pos += k;
    return s;
  }
};

}  // namespace

void Checkpoint::add(std::string name, Shape shape, std::vector<double> data) {
  if (shape_size(shape) != data.size())
    throw DimensionError("checkpoint tensor '" + name +
                         "': shape does not match data length");
  tensors.push_back({std::move(name), std::move(shape), std::move(data)});
}

const NamedTensor* Checkpoint::find(const std::string& name) const {
  for (const auto& t : tensors)
    if (t.name == name) return &t;
  return nullptr;
}

const NamedTensor& Checkpoint::require(const std::string& name) const {
  const NamedTensor* t = find(name);
  if (!t) throw FormatError("checkpoint is missing tensor '" + name + "'");
  return *t;
}

void save_checkpoint(const std::string& path, const Checkpoint& ckpt) {
  std::string out;
  out += "ADEC";
  put_u32(out, kCheckpointVersion);
  put_u32(out, std::uint32_t(ckpt.tensors.size()));
  for (const auto& t : ckpt.tensors) {
    put_u32(out, std::uint32_t(t.name.size()));
    out += t.name;
    put_u32(out, std::uint32_t(t.shape.size()));
    for (std::size_t e : t.shape) put_u64(out, e);
    std::size_t base = out.size();
    out.resize(base + t.data.size() * sizeof(double));
    std::memcpy(out.data() + base, t.data.data(),
                t.data.size() * sizeof(double));
  }
  std::string text;
  for (const auto& [k, v] : ckpt.meta) text += k + "=" + v + "\n";
  put_u64(out, text.size());
  out += text;
  std::uint32_t crc = std::uint32_t(
      crc32(0, reinterpret_cast<const Bytef*>(out.data()), uInt(out.size())));
  put_u32(out, crc);

  std::ofstream f(path, std::ios::binary | std::ios::trunc);
  if (!f) throw FormatError("cannot open '" + path + "' for writing");
  f.write(out.data(), std::streamsize(out.size()));
  if (!f) throw FormatError("short write to '" + path + "'");
}

Checkpoint load_checkpoint(const std::string& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw FormatError("cannot open checkpoint '" + path + "'");
  std::string buf((std::istreambuf_iterator<char>(f)),
                  std::istreambuf_iterator<char>());
  if (buf.size() < 16) throw FormatError("checkpoint too small: " + path);

  std::uint32_t stored = 0;
  for (int i = 0; i < 4; ++i)
    stored |= std::uint32_t(std::uint8_t(buf[buf.size() - 4 + i])) << (8 * i);
  std::uint32_t actual = std::uint32_t(
      crc32(0, reinterpret_cast<const Bytef*>(buf.data()),
            uInt(buf.size() - 4)));
  if (stored != actual)
    throw FormatError("checkpoint checksum mismatch in '" + path + "'");

  Reader r{buf};
  if (r.bytes(4) != "ADEC")
    throw FormatError("bad checkpoint magic in '" + path + "'");
  std::uint32_t version = r.u32();
  if (version != kCheckpointVersion)
    throw FormatError("unsupported checkpoint version " +
                      std::to_string(version));
  std::uint32_t count = r.u32();

  Checkpoint ckpt;
  for (std::uint32_t t = 0; t < count; ++t) {
    std::uint32_t name_len = r.u32();
    std::string name = r.bytes(name_len);
    std::uint32_t rank = r.u32();
    Shape shape(rank);
    for (auto& e : shape) e = r.u64();
    std::size_t n = shape_size(shape);
    r.need(n * sizeof(double));
    std::vector<double> data(n);
    std::memcpy(data.data(), buf.data() + r.pos, n * sizeof(double));
    r.pos += n * sizeof(double);
    ckpt.tensors.push_back({std::move(name), std::move(shape),
                            std::move(data)});
  }
  std::uint64_t text_len = r.u64();
  std::string text = r.bytes(std::size_t(text_len));
  std::size_t start = 0;
  while (start < text.size()) {
    std::size_t nl = text.find('\n', start);
    if (nl == std::string::npos) nl = text.size();
    std::string line = text.substr(start, nl - start);
    start = nl + 1;
    std::size_t eq = line.find('=');
    if (eq == std::string::npos)
      throw FormatError("malformed checkpoint metadata line '" + line + "'");
    ckpt.meta[line.substr(0, eq)] = line.substr(eq + 1);
  }
  if (r.pos != buf.size() - 4)
    throw FormatError("trailing bytes in checkpoint '" + path + "'");
  return ckpt;
}

}  // namespace adec
