#include "bragg_qnd/physical_params.hpp"

#include <doctest.h>

#include <cmath>
#include <numbers>
#include <stdexcept>

using namespace bragg_qnd;

namespace
{
constexpr double kTwoPi = 2.0 * std::numbers::pi;
}

TEST_CASE("recoil frequency")
{
    const auto p = rubidium_reference();
    const double w_rec = recoil_frequency(p);
    // hbar (2 pi / 0.8 um)^2 / (2 x 1.42e-25 kg), evaluated by hand.
    CHECK(w_rec / kTwoPi == doctest::Approx(3645.505).epsilon(1e-5));
    CHECK(std::abs(w_rec / (kTwoPi * 3.8e3) - 1.0) < 0.05);

    auto longer = p;
    longer.wavelength *= 2.0;
    CHECK(recoil_frequency(longer) == doctest::Approx(w_rec / 4.0).epsilon(1e-15));
}

TEST_CASE("effective coupling per photon")
{
    const auto p = rubidium_reference();
    const double chi = effective_rabi_per_photon(p);
    CHECK(chi / kTwoPi == doctest::Approx(78.4).epsilon(1e-12));

    auto wider = p;
    wider.detuning *= 2.0;
    CHECK(effective_rabi_per_photon(wider) == doctest::Approx(chi / 2.0).epsilon(1e-15));

    const double ratio = chi_bar(p);
    CHECK(ratio > 0.018);
    CHECK(ratio < 0.022);
    CHECK(ratio == doctest::Approx(chi / recoil_frequency(p)));
    CHECK(detuning_ratio(p) == doctest::Approx(112e3 / 80e6));
}

TEST_CASE("parameter validation")
{
    auto p = rubidium_reference();
    p.mass = 0.0;
    CHECK_THROWS_AS(recoil_frequency(p), std::invalid_argument);
    p = rubidium_reference();
    p.detuning = -1.0;
    CHECK_THROWS_AS(effective_rabi_per_photon(p), std::invalid_argument);
    p = rubidium_reference();
    p.wavelength = NAN;
    CHECK_THROWS_AS(validate(p), std::invalid_argument);
}

TEST_CASE("Bragg regime check")
{
    const auto edge = bragg_validity(0.02, 5);
    CHECK(edge.ratio == doctest::Approx(0.1));
    CHECK(edge.status == RegimeStatus::Borderline);

    const auto high = bragg_validity(0.02, 30);
    CHECK(high.ratio == doctest::Approx(0.6));
    CHECK(high.status == RegimeStatus::Advisory);
    CHECK(high.advisory());

    const auto low = bragg_validity(1e-4, 30);
    CHECK(low.ratio == doctest::Approx(3e-3));
    CHECK(low.status == RegimeStatus::Ok);
    CHECK_FALSE(low.advisory());

    CHECK_THROWS_AS(bragg_validity(0.0, 5), std::invalid_argument);
    CHECK_THROWS_AS(bragg_validity(0.02, 0), std::invalid_argument);
}
