#pragma once

#include <string>
#include <string_view>

#include "boocap/captioner/trainer.hpp"

namespace boocap::captioner {

inline constexpr std::uint32_t kCheckpointVersion = 1;

/// Little-endian: "BOOC", u32 version, length-prefixed JSON blobs (hyperparameters,
/// vocabulary, schema), the tensors (name, rows, cols, row-major f64), the Adam
/// step and moments, and the training log as JSON.
std::string serialize_checkpoint(const Checkpoint& ckpt);
Checkpoint deserialize_checkpoint(std::string_view bytes);

void save_checkpoint(const Checkpoint& ckpt, const std::string& path);
Checkpoint load_checkpoint(const std::string& path);

}  // namespace boocap::captioner
