#pragma once

#include <stdexcept>
#include <string>

#include "tweetsent/model.hpp"

namespace tweetsent {

struct CheckpointError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Binary checkpoint container, little-endian throughout:
//
//   bytes 0..7   magic "TWSENT01"
//   u32          format version (1)
//   u32          manifest length M
//   M bytes      UTF-8 JSON manifest: {"format_version", "seed", "config"}
//   u32          array count A
//   A records:   u32 name length, name bytes,
//                u32 rank, rank x u64 dims,
//                prod(dims) x f64 values in row-major order
//
// Arrays appear in the order of state_tensors(); loading is by name and
// every configured array must be present with its exact shape.
void save_checkpoint(const std::string& path, const ModelState& state);

ModelState load_checkpoint(const std::string& path);

}  // namespace tweetsent
