#pragma once

#include <string>

#include "oto/model.hpp"

namespace oto {

// Binary snapshot of every parameter and batch-norm statistic. Layout, all
// integers little endian: magic "OTO1", one format version byte, the 8-byte
// architecture digest, a 4-byte array count, then per array a 2-byte name
// length, the name, a 4-byte rank, rank 4-byte dims and the float32 payload.
// Loading verifies the digest and every name/shape before touching the
// model, so a failed load leaves it unchanged.
void save_weights(Model& model, const std::string& path);
void load_weights(Model& model, const std::string& path);

}  // namespace oto
