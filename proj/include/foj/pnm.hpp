#pragma once

#include <string>

#include "foj/core.hpp"

namespace foj {

/// Reads a PGM or PPM file (P2, P3, P5, P6; 8- or 16-bit). Values are scaled
/// to [0, 1] by the file's maxval.
Image read_pnm(const std::string& path);

/// Writes a binary PGM (1 channel) or PPM (3 channels). Values are clamped to
/// [0, 1] and stored as round(v · maxval); maxval 255 or 65535.
void write_pnm(const std::string& path, const Image& image, int maxval = 255);

/// Single-channel map as a binary PGM, same scaling as write_pnm.
void write_pgm(const std::string& path, const ScalarMap& map, int maxval = 65535);

}  // namespace foj
