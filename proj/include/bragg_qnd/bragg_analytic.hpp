#pragma once

#include "bragg_qnd/field_state.hpp"
#include "bragg_qnd/geometry.hpp"

namespace bragg_qnd
{

/// Reduced two-state model of Bragg scattering of order l0 / 2 for n photons.
/// Both quantities are in units of w_rec.
struct TwoLevelCoefficients
{
    double a_shift = 0.0;  ///< common diagonal shift; only a global phase
    double b_freq = 0.0;   ///< Pendellosung flip frequency |B|
};

/// Product (l0 - 2)(l0 - 4)...4.2, equal to 1 for l0 = 2.
double even_double_factorial(int l0_minus_2);

/// |B| = (chi_bar n)^(l0/2) / (2^(l0/2 - 1) [(l0-2)(l0-4)...2]^2) to lowest
/// order in the coupling. For l0 = 2 this is chi_bar n and the shift is 0.
TwoLevelCoefficients coefficients(const BraggGeometry& geometry, int n);

/// Exit probabilities of the two allowed directions. q_stay + q_deflect
/// equals 1 exactly in floating point.
struct OutcomeProbabilities
{
    double q_stay = 1.0;    ///< exits with the incident momentum
    double q_deflect = 0.0; ///< exits with the reversed momentum
};

/// cos^2(phase), sin^2(phase) with the smaller of the two evaluated directly
/// and the other as its complement.
OutcomeProbabilities flip_probabilities(double phase);

OutcomeProbabilities two_level_probabilities(const BraggGeometry& geometry, int n, double t_bar);

/// Photon-number average of the two-level probabilities over P(n).
OutcomeProbabilities ensemble_probabilities(const PhotonDistribution& p,
                                            const BraggGeometry& geometry, double t_bar);

}  // namespace bragg_qnd
