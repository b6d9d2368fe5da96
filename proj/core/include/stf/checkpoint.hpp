#pragma once

#include <cstdint>
#include <filesystem>
#include <stdexcept>
#include <string>
#include <vector>

#include <json.hpp>

#include "stf/layers.hpp"

namespace stf {

class CheckpointError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

inline constexpr const char* kCheckpointFormat = "stf-snn-checkpoint";
inline constexpr int kCheckpointVersion = 1;

struct StoredTensor {
  std::string name;
  Shape shape;
  std::uint64_t offset = 0;       // bytes into the blob
  std::uint64_t byte_length = 0;
  std::uint32_t crc32 = 0;
  std::vector<float> data;
};

struct Checkpoint {
  nlohmann::json config;
  std::vector<StoredTensor> tensors;
};

/// Snapshot of every registered tensor (parameters and buffers) in
/// registration order.
Checkpoint capture_checkpoint(const ParameterSet& params, nlohmann::json config);

/// Writes `<path>` (JSON manifest) and `<path stem>.bin` (little-endian f32
/// blob). Output bytes depend only on the checkpoint contents.
void save_checkpoint(const Checkpoint& checkpoint, const std::filesystem::path& manifest_path);

/// Reads and verifies every checksum; throws CheckpointError on any mismatch.
Checkpoint load_checkpoint(const std::filesystem::path& manifest_path);

/// Copies stored values into the matching entries. Names, order and shapes
/// must match exactly (ShapeError on a shape mismatch).
void restore_checkpoint(const Checkpoint& checkpoint, ParameterSet& params);

std::uint32_t crc32_of(const void* bytes, std::size_t length);

}  // namespace stf
