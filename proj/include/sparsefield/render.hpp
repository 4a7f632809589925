#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "sparsefield/data_io.hpp"
#include "sparsefield/placement.hpp"

namespace sparsefield {

// Linear min-max mapping of one snapshot to 8-bit gray, rounding half
// up. Masked cells render as 0, constant fields as mid-gray 128, and
// marked sensor cells are forced to 255.
std::vector<std::uint8_t> render_pixels(const FieldSnapshot& snapshot,
                                        const std::vector<std::uint8_t>& mask = {},
                                        const Placement* mark = nullptr);

// Binary portable graymap (P5), maxval 255, row-major.
void write_pgm(const std::vector<std::uint8_t>& pixels, std::size_t height, std::size_t width,
               const std::string& path);

void render_to_pgm(const SnapshotSeries& series, std::size_t index, const std::string& path,
                   const Placement* mark = nullptr);

}  // namespace sparsefield
