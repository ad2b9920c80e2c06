#pragma once

#include "bragg_qnd/geometry.hpp"

#include <complex>
#include <iosfwd>
#include <span>
#include <vector>

namespace bragg_qnd
{

using Amplitude = std::complex<double>;

/// Ground-state momentum amplitudes C_l for a fixed photon number n on the
/// even sites l_min, l_min + 2, ..., l_max. Time is in units of 1 / w_rec.
class LatticeState
{
public:
    LatticeState(int n, int l_min, int l_max, std::vector<Amplitude> amplitudes, double t_bar);

    int n() const noexcept { return n_; }
    int l_min() const noexcept { return l_min_; }
    int l_max() const noexcept { return l_max_; }
    double t_bar() const noexcept { return t_bar_; }
    std::size_t sites() const noexcept { return amplitudes_.size(); }

    std::span<const Amplitude> amplitudes() const noexcept { return amplitudes_; }

    bool contains(int l) const noexcept;
    /// Site index of momentum label l. Throws std::invalid_argument when l is
    /// odd or outside [l_min, l_max].
    std::size_t index_of(int l) const;
    int label_of(std::size_t index) const noexcept { return l_min_ + 2 * static_cast<int>(index); }
    Amplitude amplitude(int l) const { return amplitudes_[index_of(l)]; }

    double norm_squared() const noexcept;

private:
    int n_;
    int l_min_;
    int l_max_;
    std::vector<Amplitude> amplitudes_;
    double t_bar_;
};

/// Atom entering at l = 0 with unit amplitude. Bounds must be even and
/// satisfy l_min <= -l0 < 0 <= l_max.
LatticeState initial_state(const BraggGeometry& geometry, int n, int l_min, int l_max);
LatticeState initial_state(const BraggGeometry& geometry, int n);

inline constexpr int kDefaultLatticeBound = 500;
inline constexpr double kDefaultTolerance = 1e-9;

/// Diagonal of the recoil-unit generator, l (l + l0).
double lattice_diagonal(const BraggGeometry& geometry, int l) noexcept;

/// Right-hand side -i H C of the coupled amplitude equations, with H real
/// symmetric tridiagonal: diagonal l (l + l0), off-diagonal -chi_bar n / 2.
/// Sites beyond the truncation are held at zero.
std::vector<Amplitude> generator_apply(const BraggGeometry& geometry, const LatticeState& state);

/// Same stencil applied to an arbitrary amplitude vector, returning H v
/// (no factor of -i). Exposed for symmetry checks.
std::vector<Amplitude> hamiltonian_apply(const BraggGeometry& geometry, int n, int l_min,
                                         std::span<const Amplitude> v);

struct EvolveStats
{
    long accepted_steps = 0;
    long rejected_steps = 0;
};

/// Advances `state` by t_bar. The diagonal part of the generator is
/// integrated exactly (integrating factor) and the hopping part by an
/// embedded Dormand-Prince 5(4) pair with per-component error control at
/// tol / 10 (relative and absolute); the norm then stays within 10 tol. No renormalization is applied.
LatticeState evolve(const BraggGeometry& geometry, const LatticeState& state, double t_bar,
                    double tol = kDefaultTolerance, EvolveStats* stats = nullptr);

double occupation(const LatticeState& state, int l);

/// Probability outside the two Bragg-allowed sites l = 0 and l = -l0.
double leakage(const BraggGeometry& geometry, const LatticeState& state);

/// |C(l_min)|^2 + |C(l_max)|^2, a truncation-adequacy diagnostic.
double boundary_occupation(const LatticeState& state);

struct TimeSample
{
    double t_bar;
    double occ_0;
    double occ_minus_l0;
    double leakage;
    double norm;
    double boundary;
};

/// Evolves from `initial` through the sorted, non-negative sample times and
/// records the diagnostics at each one.
std::vector<TimeSample> sample_trace(const BraggGeometry& geometry, const LatticeState& initial,
                                     std::span<const double> times, double tol = kDefaultTolerance);

/// CSV with header `t_bar,occ_0,occ_minus_l0,leakage,norm`.
void write_csv(std::ostream& os, std::span<const TimeSample> trace);

/// Flip frequency B from the time of the first maximum of the deflected
/// occupation, B = pi / t_peak. t_peak is the midpoint of the first upward
/// and downward crossings of one half, which is insensitive to the small
/// fast wiggles of the off-resonant sites. Falls back to pi / (2 t_rise)
/// when the trace ends before the downward crossing, and returns a negative
/// value when the occupation never reaches one half.
double fitted_flip_frequency(std::span<const double> times, std::span<const double> deflected);

}  // namespace bragg_qnd
