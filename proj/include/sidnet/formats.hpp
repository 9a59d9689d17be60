#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "sidnet/convert.hpp"
#include "sidnet/geometry.hpp"

namespace sidnet {

// ONKT trajectory text format, bit-exact canonical form:
//   line 1:  "ONKT 1"
//   then     "P <stroke:int> <x> <y>" per point, temporal order, LF endings,
//            stroke indices consecutive from 0, coordinates %.6f.
OnlinePointSequence parse_trajectory_file(const std::string& bytes);
std::string write_trajectory_file(const OnlinePointSequence& seq);

// Binary PGM (P5), maxval 255, ink dark on white.
OfflineImage parse_pgm(const std::string& bytes);
std::string write_pgm(const OfflineImage& img);

std::string read_file(const std::filesystem::path& path);
void write_file(const std::filesystem::path& path, const std::string& bytes);

// CRC-32 (IEEE 802.3 reflected polynomial), as used by the checkpoint format.
std::uint32_t crc32(const std::uint8_t* data, std::size_t len);

}  // namespace sidnet
