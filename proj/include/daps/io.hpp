#pragma once

#include <string>

#include "daps/types.hpp"

namespace daps {

/// Plain-text matrix: one row per line, whitespace-separated decimals.
/// Blank lines and lines starting with '#' are skipped; rows must agree in
/// length.
Mat read_matrix(const std::string& path);
Mat parse_matrix(const std::string& text);
void write_matrix(const std::string& path, const Mat& m);

void write_text(const std::string& path, const std::string& text);

}  // namespace daps
