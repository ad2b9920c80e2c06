#include "bragg_qnd/field_state.hpp"

#include "bragg_qnd/csv.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <ostream>
#include <stdexcept>
#include <string>

namespace bragg_qnd
{

PhotonDistribution::PhotonDistribution(std::vector<double> weights) : probs_(std::move(weights))
{
    if (probs_.size() < 2)
        throw std::invalid_argument("photon distribution needs n_max >= 1");
    for (double w : probs_)
    {
        if (!std::isfinite(w) || w < 0.0)
            throw std::invalid_argument("photon distribution entries must be finite and >= 0");
    }
    const double total = std::accumulate(probs_.begin(), probs_.end(), 0.0);
    if (!(total > 0.0))
        throw std::invalid_argument("photon distribution has zero total mass");
    for (double& w : probs_)
        w /= total;
}

int PhotonDistribution::argmax() const noexcept
{
    return static_cast<int>(std::max_element(probs_.begin(), probs_.end()) - probs_.begin());
}

double PhotonDistribution::max_probability() const noexcept
{
    return *std::max_element(probs_.begin(), probs_.end());
}

PhotonDistribution make_coherent(double mean_photons, int n_max)
{
    if (!std::isfinite(mean_photons) || mean_photons < 0.0)
        throw std::invalid_argument("coherent state mean must be finite and >= 0");
    if (n_max < 1)
        throw std::invalid_argument("n_max must be >= 1");

    std::vector<double> w(static_cast<std::size_t>(n_max) + 1, 0.0);
    if (mean_photons == 0.0)
    {
        w[0] = 1.0;
        return PhotonDistribution(std::move(w));
    }
    // log space keeps large n from overflowing mu^n / n!
    const double log_mu = std::log(mean_photons);
    for (int n = 0; n <= n_max; ++n)
        w[n] = std::exp(-mean_photons + n * log_mu - std::lgamma(n + 1.0));
    return PhotonDistribution(std::move(w));
}

int default_n_max(double mean_photons)
{
    const double mu = std::max(mean_photons, 0.0);
    return std::max(30, static_cast<int>(std::ceil(mu + 6.0 * std::sqrt(mu))));
}

PhotonDistribution make_fock(int n, int n_max)
{
    if (n_max < 1)
        throw std::invalid_argument("n_max must be >= 1");
    if (n < 0 || n > n_max)
        throw std::invalid_argument("Fock index " + std::to_string(n) + " outside [0, " +
                                    std::to_string(n_max) + "]");
    std::vector<double> w(static_cast<std::size_t>(n_max) + 1, 0.0);
    w[n] = 1.0;
    return PhotonDistribution(std::move(w));
}

double distribution_mean(const PhotonDistribution& p)
{
    double mean = 0.0;
    for (std::size_t n = 0; n < p.size(); ++n)
        mean += static_cast<double>(n) * p[n];
    return mean;
}

double total_variation(const PhotonDistribution& p, const PhotonDistribution& q)
{
    if (p.size() != q.size())
        throw std::invalid_argument("total_variation: truncations differ");
    double sum = 0.0;
    for (std::size_t n = 0; n < p.size(); ++n)
        sum += std::abs(p[n] - q[n]);
    return 0.5 * sum;
}

void write_csv(std::ostream& os, const PhotonDistribution& p)
{
    os << "n,probability\n";
    for (std::size_t n = 0; n < p.size(); ++n)
        os << n << ',' << format_real(p[n]) << '\n';
}

}  // namespace bragg_qnd
