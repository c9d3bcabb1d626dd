#pragma once

#include <string>
#include <string_view>

#include "bodyshape/bodymodel.hpp"

namespace bodyshape {

// "[1.131, 1.928, -2.347, ...]": comma-plus-space separated, at most three
// fractional digits, trailing zeros and a bare "-0" trimmed.
std::string format_shape_params(const ShapeParams& beta);
std::string format_decimal3(double value);

// Snap every coefficient to the three-decimal grid used by the text format.
ShapeParams round_to_grid(const ShapeParams& beta);

// Extracts the first bracketed list of decimal numbers from free text.
// No numeric list → ErrorKind::MalformedOutput; list of the wrong length →
// ErrorKind::Arity; coefficients outside the valid box → ErrorKind::OutOfRange.
ShapeParams parse_shape_string(std::string_view text);

}  // namespace bodyshape
