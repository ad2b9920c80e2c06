#pragma once

#include <cstddef>
#include <iosfwd>
#include <span>
#include <vector>

namespace bragg_qnd
{

/// Photon-number statistics P(n) of the cavity field on a truncated Fock
/// basis n = 0..n_max. Always non-negative and normalized; immutable.
class PhotonDistribution
{
public:
    /// Normalizes `weights` to unit sum. Throws std::invalid_argument for
    /// fewer than two entries, negative or non-finite entries, or zero mass.
    explicit PhotonDistribution(std::vector<double> weights);

    std::span<const double> probs() const noexcept { return probs_; }
    int n_max() const noexcept { return static_cast<int>(probs_.size()) - 1; }
    std::size_t size() const noexcept { return probs_.size(); }
    double operator[](std::size_t n) const { return probs_[n]; }

    /// Photon number with the largest probability (lowest n on ties).
    int argmax() const noexcept;
    double max_probability() const noexcept;

    friend bool operator==(const PhotonDistribution&, const PhotonDistribution&) = default;

private:
    std::vector<double> probs_;
};

/// Poisson statistics with mean `mean_photons`, truncated at n_max and
/// renormalized.
PhotonDistribution make_coherent(double mean_photons, int n_max);

/// Truncation bound used when none is given: ceil(mu + 6 sqrt(mu)), at least 30.
int default_n_max(double mean_photons);

PhotonDistribution make_fock(int n, int n_max);

double distribution_mean(const PhotonDistribution& p);

/// Half L1 distance. Both arguments must share the same truncation.
double total_variation(const PhotonDistribution& p, const PhotonDistribution& q);

/// Writes `n,probability` CSV, 12 significant digits, LF endings.
void write_csv(std::ostream& os, const PhotonDistribution& p);

}  // namespace bragg_qnd
