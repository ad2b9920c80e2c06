#include "bragg_qnd/bragg_analytic.hpp"

#include <cmath>
#include <stdexcept>

namespace bragg_qnd
{

double even_double_factorial(int l0_minus_2)
{
    if (l0_minus_2 < 0 || l0_minus_2 % 2 != 0)
        throw std::invalid_argument("even_double_factorial: argument must be even and >= 0");
    double product = 1.0;
    for (int k = l0_minus_2; k >= 2; k -= 2)
        product *= k;
    return product;
}

TwoLevelCoefficients coefficients(const BraggGeometry& geometry, int n)
{
    if (n < 0)
        throw std::invalid_argument("photon number must be >= 0");
    const int l0 = geometry.l0();
    const int order = geometry.order();
    const double coupling = geometry.coupling(n);

    TwoLevelCoefficients c;
    if (n == 0)
        return c;

    double numerator = 1.0;
    for (int k = 0; k < order; ++k)
        numerator *= coupling;
    const double product = even_double_factorial(l0 - 2);
    const double denominator = std::ldexp(1.0, order - 1) * product * product;
    c.b_freq = numerator / denominator;
    c.a_shift = l0 == 2 ? 0.0 : -(0.5 * coupling) / (2.0 * (l0 - 2));
    return c;
}

OutcomeProbabilities flip_probabilities(double phase)
{
    const double s = std::sin(phase);
    const double d = s * s;
    if (d <= 0.5)
        return {1.0 - d, d};
    const double c = std::cos(phase);
    const double stay = c * c;
    return {stay, 1.0 - stay};
}

OutcomeProbabilities two_level_probabilities(const BraggGeometry& geometry, int n, double t_bar)
{
    if (!std::isfinite(t_bar) || t_bar < 0.0)
        throw std::invalid_argument("interaction time must be finite and >= 0");
    return flip_probabilities(0.5 * coefficients(geometry, n).b_freq * t_bar);
}

OutcomeProbabilities ensemble_probabilities(const PhotonDistribution& p,
                                            const BraggGeometry& geometry, double t_bar)
{
    OutcomeProbabilities total{0.0, 0.0};
    for (int n = 0; n <= p.n_max(); ++n)
    {
        const auto q = two_level_probabilities(geometry, n, t_bar);
        total.q_stay += p[n] * q.q_stay;
        total.q_deflect += p[n] * q.q_deflect;
    }
    // Sum of the two weighted series is 1 only up to rounding; keep the
    // smaller one and complement it, as for a single photon number.
    if (total.q_deflect <= total.q_stay)
        total.q_stay = 1.0 - total.q_deflect;
    else
        total.q_deflect = 1.0 - total.q_stay;
    return total;
}

}  // namespace bragg_qnd
