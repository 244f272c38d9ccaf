#pragma once

#include <string>

#include "fgsim/types.hpp"

namespace fgsim {

// Binary layout: "FGSIM1" magic (6 bytes), u32 version, u64 dim, then dim
// little-endian IEEE-754 float64 values. Round-trips are bit-exact.

void save_checkpoint(const ParamVector& model, const std::string& path);

ParamVector load_checkpoint(const std::string& path);

} // namespace fgsim
