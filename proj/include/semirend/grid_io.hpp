#pragma once

#include <iosfwd>
#include <string>

#include "semirend/grid.hpp"

namespace semirend {

// Binary grid file: "SRGD", u32 version, u64 height, width, channels, then
// height*width*channels little-endian f64 values (row-major, channels innermost).
void save_grid(const Grid2D& grid, std::ostream& out);
Grid2D load_grid(std::istream& in, const std::string& where = "grid");
void save_grid(const Grid2D& grid, const std::string& path);
Grid2D load_grid(const std::string& path);

}  // namespace semirend
