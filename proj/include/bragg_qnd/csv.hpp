#pragma once

#include <string>

namespace bragg_qnd
{

// Shortest round-trip is not wanted here: all exported floats use a fixed
// 12 significant digits so outputs are byte-stable across runs.
std::string format_real(double value);

}  // namespace bragg_qnd
