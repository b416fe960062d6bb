#pragma once

#include "grushin/grid.hpp"

#include <string>

namespace grushin {

/// Binary field dump: 64-byte ASCII header
///   "GRF1 <m> <l> <gamma> <x_half> <y_half> <n_x> <n_y>"
/// space-padded to 63 bytes and terminated by '\n', followed by n_x^m n_y^l
/// little-endian IEEE-754 float64 values in grid order. See docs/file_formats.md.
void write_field(const std::string& path, const Grid& g, const Field& u);

struct FieldDump {
    Grid grid;
    Field values;
};

FieldDump read_field(const std::string& path);

std::string field_header(const Grid& g);

}  // namespace grushin
