#pragma once

#include <string>
#include <vector>

#include "jace/tensor.hpp"

namespace jace {

// Portable binary checkpoint.
//
//   bytes 0..7   magic "JACECKPT"
//   u32          format version (currently 1)
//   u32          parameter record count
//   per record:  u32 name length, name bytes,
//                u64 rows, u64 cols,
//                rows*cols float64 values, row-major
//
// All integers and floats little-endian. Records appear in the graph's
// parameter declaration order; loading walks the same order and validates
// both names and shapes, so a checkpoint only loads into the architecture
// that wrote it.

inline constexpr char kCheckpointMagic[8] = {'J', 'A', 'C', 'E', 'C', 'K', 'P', 'T'};
inline constexpr std::uint32_t kCheckpointVersion = 1;

void save_checkpoint(const std::string& path, const std::vector<Parameter*>& params);
void load_checkpoint(const std::string& path, const std::vector<Parameter*>& params);

// In-memory variants (used by save/load and by round-trip tests).
std::string serialize_checkpoint(const std::vector<Parameter*>& params);
void deserialize_checkpoint(const std::string& bytes, const std::vector<Parameter*>& params);

}  // namespace jace
