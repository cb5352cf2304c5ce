// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <array>
#include <string>
#include <vector>

#include "epchiral/pencil.hpp"
#include "epchiral/two_level.hpp"

namespace epchiral {

/// Pencil file: {"n": int, "h0": [[...]], "h1": [[...]]}, row-major reals.
/// Throws ParseError on malformed input and NonSymmetricInput on asymmetry.
MatrixPencil load_pencil(const std::string& path, const Tolerances& tol = {});
MatrixPencil parse_pencil(const std::string& text, const Tolerances& tol = {});
std::string pencil_to_json(const MatrixPencil& pencil);

/// Two-level file: {"eps1", "eps2", "omega1", "omega2", "phi"}.
TwoLevelParams load_two_level(const std::string& path);
TwoLevelParams parse_two_level(const std::string& text);
std::string two_level_to_json(const TwoLevelParams& params);

/// Accepts "a", "bi", "a+bi", "a-bi", "i", "-i", "a+i" (spaces allowed) and the pair form
/// "re,im". Throws ParseError otherwise.
cplx parse_complex(const std::string& text);

/// Writes through a temporary file in the same directory, then renames.
void write_file_atomic(const std::string& path, const std::string& content);

/// Track CSV: one header line, then per row the leading columns followed by
/// re/im of every track value.
struct TrackTable {
  std::vector<std::string> leading_names;          ///< e.g. {"step", "lambda_re", "lambda_im"}
  std::vector<std::vector<double>> leading;        ///< leading[row][col]
  std::vector<std::vector<cplx>> values;           ///< values[row][track]
  std::vector<std::string> value_names;            ///< defaults to E1, E2, ...
};

std::string tracks_to_csv(const TrackTable& table);

} // namespace epchiral
