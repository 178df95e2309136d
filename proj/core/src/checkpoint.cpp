#include "jace/checkpoint.hpp"

#include <bit>
#include <cstdint>
#include <cstring>
#include <fstream>

#include "jace/errors.hpp"

namespace jace {

namespace {

void put_u32(std::string* out, std::uint32_t v) {
  for (int i = 0; i < 4; ++i) out->push_back(static_cast<char>((v >> (8 * i)) & 0xff));
}

void put_u64(std::string* out, std::uint64_t v) {
  for (int i = 0; i < 8; ++i) out->push_back(static_cast<char>((v >> (8 * i)) & 0xff));
}

void put_f64(std::string* out, double v) {
  put_u64(out, std::bit_cast<std::uint64_t>(v));
}

class Reader {
 public:
  Reader(const std::string& bytes, const std::string& path)
      : bytes_(bytes), path_(path) {}

  std::uint32_t u32() { return static_cast<std::uint32_t>(uint_le(4)); }
  std::uint64_t u64() { return uint_le(8); }
  double f64() { return std::bit_cast<double>(uint_le(8)); }

  std::string str(std::size_t n) {
    need(n);
    std::string s = bytes_.substr(pos_, n);
    pos_ += n;
    return s;
  }

  bool exhausted() const { return pos_ == bytes_.size(); }

  [[noreturn]] void fail(const std::string& what) const {
    throw IoError("checkpoint '" + path_ + "': " + what);
  }

 private:
  std::uint64_t uint_le(std::size_t width) {
    need(width);
    std::uint64_t v = 0;
    for (std::size_t i = 0; i < width; ++i) {
      v |= static_cast<std::uint64_t>(static_cast<unsigned char>(bytes_[pos_ + i]))
           << (8 * i);
    }
    pos_ += width;
    return v;
  }

  void need(std::size_t n) {
    if (bytes_.size() - pos_ < n) fail("truncated file");
  }

  const std::string& bytes_;
  const std::string& path_;
  std::size_t pos_ = 0;
};

void deserialize_impl(const std::string& bytes, const std::vector<Parameter*>& params,
                      const std::string& path) {
  Reader r(bytes, path);
  const std::string magic = r.str(sizeof(kCheckpointMagic));
  if (std::memcmp(magic.data(), kCheckpointMagic, sizeof(kCheckpointMagic)) != 0) {
    r.fail("bad magic, not a checkpoint file");
  }
  const std::uint32_t version = r.u32();
  if (version != kCheckpointVersion) {
    r.fail("unsupported format version " + std::to_string(version));
  }
  const std::uint32_t count = r.u32();
  if (count != params.size()) {
    r.fail("holds " + std::to_string(count) + " parameters, model expects " +
           std::to_string(params.size()));
  }
  for (Parameter* p : params) {
    const std::uint32_t name_len = r.u32();
    const std::string name = r.str(name_len);
    if (name != p->name) {
      r.fail("expected parameter '" + p->name + "', found '" + name + "'");
    }
    const std::uint64_t rows = r.u64();
    const std::uint64_t cols = r.u64();
    if (rows != p->value.rows() || cols != p->value.cols()) {
      r.fail("parameter '" + name + "' has shape " + std::to_string(rows) + "x" +
             std::to_string(cols) + ", model expects " +
             std::to_string(p->value.rows()) + "x" + std::to_string(p->value.cols()));
    }
    for (std::size_t i = 0; i < rows * cols; ++i) p->value.values()[i] = r.f64();
    p->grad.fill(0.0);
  }
  if (!r.exhausted()) r.fail("trailing bytes after last parameter");
}

}  // namespace

std::string serialize_checkpoint(const std::vector<Parameter*>& params) {
  std::string out;
  out.append(kCheckpointMagic, sizeof(kCheckpointMagic));
  put_u32(&out, kCheckpointVersion);
  put_u32(&out, static_cast<std::uint32_t>(params.size()));
  for (const Parameter* p : params) {
    put_u32(&out, static_cast<std::uint32_t>(p->name.size()));
    out.append(p->name);
    put_u64(&out, p->value.rows());
    put_u64(&out, p->value.cols());
    for (double v : p->value.values()) put_f64(&out, v);
  }
  return out;
}

void deserialize_checkpoint(const std::string& bytes,
                            const std::vector<Parameter*>& params) {
  deserialize_impl(bytes, params, "<memory>");
}

void save_checkpoint(const std::string& path, const std::vector<Parameter*>& params) {
  const std::string bytes = serialize_checkpoint(params);
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot open '" + path + "' for writing");
  out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
  if (!out) throw IoError("write failed for '" + path + "'");
}

void load_checkpoint(const std::string& path, const std::vector<Parameter*>& params) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open '" + path + "' for reading");
  std::string bytes((std::istreambuf_iterator<char>(in)),
                    std::istreambuf_iterator<char>());
  deserialize_impl(bytes, params, path);
}

}  // namespace jace
