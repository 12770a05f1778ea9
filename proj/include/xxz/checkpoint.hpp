#pragma once

#include <filesystem>
#include <iosfwd>

#include "xxz/mps.hpp"

namespace xxz {

// Binary MPS checkpoint; the byte layout is documented in docs/formats.md.
void write_checkpoint(std::ostream& out, const MpsState& state);
MpsState read_checkpoint(std::istream& in);

void save_checkpoint(const std::filesystem::path& path, const MpsState& state);
MpsState load_checkpoint(const std::filesystem::path& path);

}  // namespace xxz
