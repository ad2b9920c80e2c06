#include "bragg_qnd/physical_params.hpp"

#include <cmath>
#include <numbers>
#include <stdexcept>

namespace bragg_qnd
{

AtomFieldParams rubidium_reference()
{
    constexpr double two_pi = 2.0 * std::numbers::pi;
    return {1.42e-25, 0.8e-6, two_pi * 112e3, two_pi * 80e6};
}

void validate(const AtomFieldParams& p)
{
    auto positive = [](double x) { return std::isfinite(x) && x > 0.0; };
    if (!positive(p.mass))
        throw std::invalid_argument("mass must be > 0");
    if (!positive(p.wavelength))
        throw std::invalid_argument("wavelength must be > 0");
    if (!positive(p.coupling_g))
        throw std::invalid_argument("coupling g must be > 0");
    if (!positive(p.detuning))
        throw std::invalid_argument("detuning must be > 0");
}

double detuning_ratio(const AtomFieldParams& p)
{
    validate(p);
    return p.coupling_g / p.detuning;
}

double recoil_frequency(const AtomFieldParams& p)
{
    validate(p);
    const double k = 2.0 * std::numbers::pi / p.wavelength;
    return kHbar * k * k / (2.0 * p.mass);
}

double effective_rabi_per_photon(const AtomFieldParams& p)
{
    validate(p);
    return p.coupling_g * p.coupling_g / (2.0 * p.detuning);
}

double chi_bar(const AtomFieldParams& p)
{
    return effective_rabi_per_photon(p) / recoil_frequency(p);
}

std::string_view to_string(RegimeStatus s) noexcept
{
    switch (s)
    {
    case RegimeStatus::Ok:
        return "ok";
    case RegimeStatus::Borderline:
        return "borderline";
    case RegimeStatus::Advisory:
        return "advisory";
    }
    return "unknown";
}

BraggValidity bragg_validity(double chi_bar, int n_max)
{
    if (!std::isfinite(chi_bar) || !(chi_bar > 0.0) || n_max < 1)
        throw std::invalid_argument("bragg_validity needs chi_bar > 0 and n_max >= 1");
    BraggValidity v;
    v.ratio = chi_bar * n_max;
    constexpr double rounding = 1e-12;
    if (v.ratio < kBraggRatioThreshold * (1.0 - rounding))
        v.status = RegimeStatus::Ok;
    else if (v.ratio <= kBraggRatioThreshold * (1.0 + rounding))
        v.status = RegimeStatus::Borderline;
    else
        v.status = RegimeStatus::Advisory;
    return v;
}

}  // namespace bragg_qnd
