#pragma once

#include <string_view>

namespace bragg_qnd
{

inline constexpr double kHbar = 1.054571817e-34;  // J s

/// Laboratory parameters. Frequencies are angular (rad/s) throughout.
struct AtomFieldParams
{
    double mass = 0.0;        ///< kg
    double wavelength = 0.0;  ///< m
    double coupling_g = 0.0;  ///< vacuum Rabi coupling g, rad/s
    double detuning = 0.0;    ///< field minus atomic transition frequency, rad/s
};

/// Rubidium beam through a 0.8 um field, g = 2 pi x 112 kHz and
/// detuning 2 pi x 80 MHz.
AtomFieldParams rubidium_reference();

/// Throws std::invalid_argument unless every field is finite and > 0.
void validate(const AtomFieldParams& p);

/// Ratio coupling_g / detuning; the elimination of the excited state needs it small.
double detuning_ratio(const AtomFieldParams& p);

/// hbar k^2 / 2M with k = 2 pi / wavelength, rad/s.
double recoil_frequency(const AtomFieldParams& p);

/// chi = g^2 / (2 detuning), rad/s per photon.
double effective_rabi_per_photon(const AtomFieldParams& p);

/// chi / w_rec.
double chi_bar(const AtomFieldParams& p);

enum class RegimeStatus
{
    Ok,          ///< chi_bar n below 0.1
    Borderline,  ///< chi_bar n equal to 0.1 up to rounding
    Advisory     ///< chi_bar n above 0.1; the two-level reduction degrades
};

std::string_view to_string(RegimeStatus s) noexcept;

struct BraggValidity
{
    double ratio = 0.0;  ///< chi_bar * n_max
    RegimeStatus status = RegimeStatus::Ok;
    bool advisory() const noexcept { return status != RegimeStatus::Ok; }
};

inline constexpr double kBraggRatioThreshold = 0.1;

/// Compares chi_bar n_max with the recoil scale (w_rec >> chi n).
BraggValidity bragg_validity(double chi_bar, int n_max);

}  // namespace bragg_qnd
