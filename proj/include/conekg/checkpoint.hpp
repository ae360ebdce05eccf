#pragma once

#include <string>

#include "conekg/model.hpp"

namespace conekg {

// Binary little-endian checkpoint:
//   magic "CONE" | u32 version | config block | u64 entity count |
//   u64 base relation count | entity names | relation names + kind bytes |
//   mask bytes (2R*d) | u64 param count | f64 params | u64 CRC-64/ECMA-182
// Strings are u32-length-prefixed UTF-8. The CRC covers every preceding byte;
// loads refuse unknown versions and checksum mismatches (DataError).
void save_checkpoint(const Model& model, const std::string& path);
Model load_checkpoint(const std::string& path);

// CRC-64/ECMA-182 (poly 0x42F0E1EBA9EA3693, MSB-first, init/xorout 0).
std::uint64_t crc64(const void* data, std::size_t len, std::uint64_t seed = 0);

}  // namespace conekg
