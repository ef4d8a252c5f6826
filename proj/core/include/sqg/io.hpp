#ifndef SQG_IO_HPP
#define SQG_IO_HPP

#include <cstdint>
#include <string>

#include "sqg/spectral.hpp"
#include "sqg/tanh_net.hpp"

namespace sqg::io {

inline constexpr std::uint32_t kFieldVersion = 1;
inline constexpr std::uint32_t kNetworkVersion = 1;

/// Field file: "SQGF", u32 version, u32 N, u32 reserved, f64 time, then N*N
/// little-endian f64 in grid order (x2 fastest).
struct FieldSnapshot {
  double time = 0.0;
  spectral::GridField field;
};

std::string encode_field(const spectral::GridField& f, double time);
FieldSnapshot decode_field(const std::string& bytes);
void write_field(const std::string& path, const spectral::GridField& f, double time);
FieldSnapshot read_field(const std::string& path);

/// Network file: "TNET", u32 version, u64 seed, u32 layer count, u32 sizes,
/// then the flat parameter vector as little-endian f64.
std::string encode_network(const net::MlpParams& p);
net::MlpParams decode_network(const std::string& bytes);
void write_network(const std::string& path, const net::MlpParams& p);
net::MlpParams read_network(const std::string& path);

/// Writes to a sibling temporary and renames it over `path`.
void write_atomic(const std::string& path, const std::string& bytes);
std::string read_file(const std::string& path);

/// 16 hex digits of the FNV-1a hash of the bytes.
std::string hash_hex(const std::string& bytes);

}  // namespace sqg::io

#endif  // SQG_IO_HPP
