#pragma once

namespace bragg_qnd
{

/// Dimensionless scattering configuration. The atom enters with momentum
/// (l0/2) hbar k, so the two energy-degenerate lattice sites are l = 0 and
/// l = -l0. Order of the Bragg process is l0 / 2.
class BraggGeometry
{
public:
    /// Throws std::invalid_argument unless l0 is even and >= 2 and
    /// chi_bar (chi / w_rec) is finite and > 0.
    BraggGeometry(int l0, double chi_bar);

    int l0() const noexcept { return l0_; }
    int order() const noexcept { return l0_ / 2; }
    double chi_bar() const noexcept { return chi_bar_; }

    /// Effective coupling chi_bar * n in recoil units.
    double coupling(int n) const noexcept { return chi_bar_ * n; }

    friend bool operator==(const BraggGeometry&, const BraggGeometry&) = default;

private:
    int l0_;
    double chi_bar_;
};

}  // namespace bragg_qnd
