#pragma once

#include <filesystem>
#include <string>

#include "aia/network.hpp"

namespace aia {

// Checkpoints are a single JSON document. Every 64-bit parameter is stored as
// its IEEE-754 bit pattern in 16 hex digits, so save -> load is value-exact.
std::string checkpoint_to_string(const Network& net);
Network checkpoint_from_string(const std::string& text);

void save_checkpoint(const Network& net, const std::filesystem::path& path);
Network load_checkpoint(const std::filesystem::path& path);

std::string encode_double_hex(double v);
double decode_double_hex(const std::string& hex);

}  // namespace aia
