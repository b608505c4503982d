#pragma once

#include "prunelab/network.hpp"

#include <optional>
#include <string>

namespace prunelab {

struct Checkpoint {
  Network net;
  std::optional<Mask> mask;
};

/// Versioned binary container: layer shapes, activations, parameters in
/// row-major order, optionally followed by the mask bits. Layout documented
/// in the README.
void save_checkpoint(const Network& net, const Mask* mask, const std::string& path);
Checkpoint load_checkpoint(const std::string& path);

}  // namespace prunelab
