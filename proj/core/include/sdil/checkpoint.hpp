#pragma once

#include <string>
#include <utility>
#include <vector>

#include "sdil/tensor.hpp"

namespace sdil {

// Binary parameter container. Layout, all integers little-endian u32:
//   "SDIL" | version | tensor count
//   per tensor: name length | name bytes | rank | extents | f32 payload
//   metadata length | metadata JSON bytes
// Payloads are stored as 32-bit floats and widened on load.
inline constexpr unsigned kCheckpointVersion = 1;

struct Checkpoint {
  std::vector<std::pair<std::string, TensorPtr>> tensors;
  std::string meta_json;
};

void save_checkpoint(const std::string& path,
                     const std::vector<std::pair<std::string, TensorPtr>>& tensors,
                     const std::string& meta_json);

Checkpoint load_checkpoint(const std::string& path);

// Copies checkpoint payloads into an existing parameter set, matched by
// name. Missing names, extras, or shape disagreements (a checkpoint from
// a different vocabulary) are checkpoint errors.
void restore_params(const std::vector<std::pair<std::string, TensorPtr>>& params,
                    const Checkpoint& ckpt);

}  // namespace sdil
