#include "sqg/io.hpp"

#include <bit>
#include <cstdio>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <sstream>

namespace sqg::io {

namespace {

void put_u32(std::string& out, std::uint32_t v) {
  for (int i = 0; i < 4; ++i) out.push_back(char((v >> (8 * i)) & 0xff));
}

void put_u64(std::string& out, std::uint64_t v) {
  for (int i = 0; i < 8; ++i) out.push_back(char((v >> (8 * i)) & 0xff));
}

void put_f64(std::string& out, double v) { put_u64(out, std::bit_cast<std::uint64_t>(v)); }

class Reader {
 public:
  Reader(const std::string& bytes, const char* what) : b_(bytes), what_(what) {}

  std::uint64_t le(int width) {
    need(std::size_t(width));
    std::uint64_t v = 0;
    for (int i = 0; i < width; ++i) {
      v |= std::uint64_t(static_cast<unsigned char>(b_[pos_ + std::size_t(i)])) << (8 * i);
    }
    pos_ += std::size_t(width);
    return v;
  }
  std::uint32_t u32() { return std::uint32_t(le(4)); }
  std::uint64_t u64() { return le(8); }
  double f64() { return std::bit_cast<double>(le(8)); }

  void magic(const char* m) {
    need(4);
    if (std::memcmp(b_.data() + pos_, m, 4) != 0) {
      throw FormatError(std::string(what_) + ": bad magic");
    }
    pos_ += 4;
  }
  void need(std::size_t n) const {
    if (b_.size() - pos_ < n) throw FormatError(std::string(what_) + ": truncated");
  }
  void finish() const {
    if (pos_ != b_.size()) throw FormatError(std::string(what_) + ": trailing bytes");
  }

 private:
  const std::string& b_;
  const char* what_;
  std::size_t pos_ = 0;
};

}  // namespace

std::string encode_field(const spectral::GridField& f, double time) {
  std::string out = "SQGF";
  put_u32(out, kFieldVersion);
  put_u32(out, std::uint32_t(f.n()));
  put_u32(out, 0);
  put_f64(out, time);
  out.reserve(out.size() + 8 * f.size());
  for (double v : f.values()) put_f64(out, v);
  return out;
}

FieldSnapshot decode_field(const std::string& bytes) {
  Reader r(bytes, "field file");
  r.magic("SQGF");
  const std::uint32_t version = r.u32();
  if (version != kFieldVersion) {
    throw FormatError("field file: unsupported version " + std::to_string(version));
  }
  const std::uint32_t n = r.u32();
  if (n < 2 || n > 65536) throw FormatError("field file: bad grid size");
  r.u32();
  FieldSnapshot s;
  s.time = r.f64();
  r.need(std::size_t(n) * n * 8);
  std::vector<double> v(std::size_t(n) * n);
  for (double& e : v) e = r.f64();
  r.finish();
  s.field = spectral::GridField(int(n), std::move(v));
  return s;
}

void write_field(const std::string& path, const spectral::GridField& f, double time) {
  write_atomic(path, encode_field(f, time));
}

FieldSnapshot read_field(const std::string& path) { return decode_field(read_file(path)); }

std::string encode_network(const net::MlpParams& p) {
  std::string out = "TNET";
  put_u32(out, kNetworkVersion);
  put_u64(out, p.seed);
  put_u32(out, std::uint32_t(p.layer_sizes.size()));
  for (int s : p.layer_sizes) put_u32(out, std::uint32_t(s));
  for (double v : p.theta) put_f64(out, v);
  return out;
}

net::MlpParams decode_network(const std::string& bytes) {
  Reader r(bytes, "network file");
  r.magic("TNET");
  const std::uint32_t version = r.u32();
  if (version != kNetworkVersion) {
    throw FormatError("network file: unsupported version " + std::to_string(version));
  }
  net::MlpParams p;
  p.seed = r.u64();
  const std::uint32_t layers = r.u32();
  if (layers < 2 || layers > 64) throw FormatError("network file: bad layer count");
  for (std::uint32_t i = 0; i < layers; ++i) {
    const std::uint32_t s = r.u32();
    if (s < 1 || s > (1u << 20)) throw FormatError("network file: bad layer size");
    p.layer_sizes.push_back(int(s));
  }
  const std::size_t np = net::MlpParams::count_params(p.layer_sizes);
  r.need(np * 8);
  p.theta.resize(np);
  for (double& e : p.theta) e = r.f64();
  r.finish();
  return p;
}

void write_network(const std::string& path, const net::MlpParams& p) {
  write_atomic(path, encode_network(p));
}

net::MlpParams read_network(const std::string& path) { return decode_network(read_file(path)); }

void write_atomic(const std::string& path, const std::string& bytes) {
  namespace fs = std::filesystem;
  const fs::path target(path);
  if (target.has_parent_path()) fs::create_directories(target.parent_path());
  const fs::path tmp = target.string() + ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw FormatError("cannot open " + tmp.string() + " for writing");
    out.write(bytes.data(), std::streamsize(bytes.size()));
    out.flush();
    if (!out) throw FormatError("write failed: " + tmp.string());
  }
  fs::rename(tmp, target);
}

std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw FormatError("cannot open " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

std::string hash_hex(const std::string& bytes) {
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(fnv1a(bytes)));
  return buf;
}

}  // namespace sqg::io
