#pragma once

#include <memory>
#include <string>

#include "model/network.hpp"

namespace rwr {

// Versioned binary container: magic "RWRN", format version, a key=value
// config block describing the architecture, then per-tensor records
// (name length, name, dtype tag, rank, dims, little-endian payload).
// Parameters are stored in visitation order, then BN running statistics.
// Writes are atomic (temp file + rename).
void save_checkpoint(RwResnet& model, const std::string& path);

// Rebuilds the model from the stored config, then fills every tensor.
std::unique_ptr<RwResnet> load_checkpoint(const std::string& path);

// Fills an existing model; rejects config or shape mismatches, naming the
// first offending tensor.
void load_checkpoint_into(RwResnet& model, const std::string& path);

}  // namespace rwr
