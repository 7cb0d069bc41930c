#pragma once

// Little-endian float-plane container shared by the SVFL and SVSM dumps.

#include "strainveil/image.hpp"

#include <filesystem>
#include <string>
#include <vector>

namespace strainveil::detail {

void write_planes(const std::filesystem::path& path, const char magic[4], const std::vector<const ImageD*>& planes);

/// Reads `count` planes after verifying the magic.
std::vector<ImageD> read_planes(const std::filesystem::path& path, const char magic[4], int count);

}  // namespace strainveil::detail
