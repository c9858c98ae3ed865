#pragma once

#include <string>

#include "fn/model.hpp"

namespace fn {

// Flat named-tensor binary (<path>.bin) plus a JSON manifest (<path>.json)
// recording name, shape, and offset per tensor.
void save_checkpoint(const Model& m, const std::string& path);

// Loads parameters into a model initialized with the same configuration.
void load_checkpoint(Model& m, const std::string& path);

}  // namespace fn
