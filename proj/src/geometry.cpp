#include "bragg_qnd/geometry.hpp"

#include <cmath>
#include <stdexcept>
#include <string>

namespace bragg_qnd
{

BraggGeometry::BraggGeometry(int l0, double chi_bar) : l0_(l0), chi_bar_(chi_bar)
{
    if (l0 < 2 || l0 % 2 != 0)
        throw std::invalid_argument("Bragg index l0 must be even and >= 2, got " + std::to_string(l0));
    if (!std::isfinite(chi_bar) || chi_bar <= 0.0)
        throw std::invalid_argument("chi_bar must be finite and > 0");
}

}  // namespace bragg_qnd
