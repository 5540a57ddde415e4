#pragma once

#include <string>

#include "redcmp/train.hpp"

namespace redcmp {

// Minimal hand-rolled polyline plot of a training curve (epoch vs loss),
// byte-stable across runs.
std::string loss_curve_svg(const LossCurve& curve, const std::string& config_hash);

}  // namespace redcmp
