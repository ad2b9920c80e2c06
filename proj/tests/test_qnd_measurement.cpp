#include "bragg_qnd/qnd_measurement.hpp"

#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <numbers>
#include <random>
#include <sstream>
#include <stdexcept>

using namespace bragg_qnd;

namespace
{

const BraggGeometry kSecondOrder(4, 0.02);

PhotonDistribution random_prior(std::mt19937_64& gen, int n_max)
{
    std::uniform_real_distribution<double> u(0.0, 1.0);
    std::vector<double> w(static_cast<std::size_t>(n_max) + 1);
    for (auto& x : w)
        x = u(gen) < 0.25 ? 0.0 : u(gen);
    w[1 + gen() % n_max] += 0.1;
    return PhotonDistribution(std::move(w));
}

Outcome random_outcome(std::mt19937_64& gen)
{
    return gen() % 2 ? Outcome::Deflect : Outcome::Stay;
}

}  // namespace

TEST_CASE("likelihood")
{
    for (double t : {1.0, 250.0, 9999.0})
        CHECK(likelihood(kSecondOrder, 0, t, Outcome::Deflect) == 0.0);
    for (int n : {0, 4, 25})
        CHECK(likelihood(kSecondOrder, n, 0.0, Outcome::Stay) == 1.0);

    const BraggGeometry first(2, 0.02);
    const int n = 6;
    CHECK(likelihood(first, n, std::numbers::pi / (0.02 * n), Outcome::Deflect) == doctest::Approx(1.0));
}

TEST_CASE("posterior")
{
    SUBCASE("Fock states are fixed points")
    {
        std::mt19937_64 gen(1);
        std::uniform_real_distribution<double> when(1.0, 5000.0);
        for (int n = 0; n <= 30; ++n)
        {
            const auto fock = make_fock(n, 30);
            for (int k = 0; k < 20; ++k)
            {
                const double t = when(gen);
                const Outcome o = random_outcome(gen);
                if (likelihood(kSecondOrder, n, t, o) == 0.0)
                    continue;
                CHECK(posterior(fock, kSecondOrder, t, o) == fock);
            }
        }
    }
    SUBCASE("a stay at the right time singles out n = 2")
    {
        const BraggGeometry first(2, 0.02);
        const PhotonDistribution prior({0.0, 0.5, 0.5});
        const auto post = posterior(prior, first, std::numbers::pi / 0.02, Outcome::Stay);
        CHECK(post[0] == 0.0);
        CHECK(post[1] == doctest::Approx(0.0).epsilon(1e-30));
        CHECK(post[2] == doctest::Approx(1.0));
    }
    SUBCASE("coherent prior against brute-force Bayes")
    {
        const auto prior = make_coherent(10.0, 30);
        const double t = std::numbers::pi / coefficients(kSecondOrder, 10).b_freq;
        const auto post = posterior(prior, kSecondOrder, t, Outcome::Deflect);
        std::vector<double> w(31);
        double total = 0.0;
        for (int n = 0; n <= 30; ++n)
        {
            const double x = 0.5 * std::pow(0.02 * n, 2) / 8.0 * t;
            w[n] = prior[n] * std::sin(x) * std::sin(x);
            total += w[n];
        }
        for (int n = 0; n <= 30; ++n)
            CHECK(std::abs(post[n] - w[n] / total) < 1e-12);
        CHECK(post[10] > prior[10]);
        CHECK(post[0] == 0.0);
    }
    SUBCASE("impossible outcome")
    {
        CHECK_THROWS_AS(posterior(make_fock(0, 30), kSecondOrder, 100.0, Outcome::Deflect), ImpossibleOutcome);
    }
}

TEST_CASE("martingale and support properties on random priors")
{
    std::mt19937_64 gen(99);
    std::uniform_real_distribution<double> when(1.0, 5000.0);
    for (int trial = 0; trial < 200; ++trial)
    {
        const auto prior = random_prior(gen, 30);
        const double t = when(gen);
        const auto q = ensemble_probabilities(prior, kSecondOrder, t);
        const auto stay = posterior(prior, kSecondOrder, t, Outcome::Stay);
        if (q.q_deflect == 0.0)
            continue;
        const auto deflect = posterior(prior, kSecondOrder, t, Outcome::Deflect);
        for (int n = 0; n <= 30; ++n)
        {
            CHECK(std::abs(q.q_stay * stay[n] + q.q_deflect * deflect[n] - prior[n]) <= 1e-12);
            if (prior[n] == 0.0)
            {
                CHECK(stay[n] == 0.0);
                CHECK(deflect[n] == 0.0);
            }
        }
    }
}

TEST_CASE("time schedules")
{
    Rng rng(1);
    const auto uniform = TimeSchedule::uniform(10.0, 20.0);
    for (int i = 0; i < 1000; ++i)
    {
        const double t = uniform.draw(static_cast<std::size_t>(i), rng);
        CHECK(t >= 10.0);
        CHECK(t <= 20.0);
    }
    const auto fixed = TimeSchedule::fixed({3.0, 5.0});
    CHECK(fixed.draw(0, rng) == 3.0);
    CHECK(fixed.draw(1, rng) == 5.0);
    CHECK(fixed.draw(2, rng) == 3.0);

    CHECK_THROWS_AS(TimeSchedule::uniform(0.0, 1.0), std::invalid_argument);
    CHECK_THROWS_AS(TimeSchedule::uniform(2.0, 1.0), std::invalid_argument);
    CHECK_THROWS_AS(TimeSchedule::fixed({}), std::invalid_argument);
    CHECK_THROWS_AS(TimeSchedule::fixed({1.0, -1.0}), std::invalid_argument);

    const auto window = default_schedule(kSecondOrder, 10.0);
    const double b = coefficients(kSecondOrder, 10).b_freq;
    CHECK(window.t_lo() * b == doctest::Approx(std::numbers::pi / 4));
    CHECK(window.t_hi() * b == doctest::Approx(4 * std::numbers::pi));
}

TEST_CASE("sampling a single atom")
{
    SUBCASE("deflection frequency for a Fock field")
    {
        const int n = 9;
        const double t = 1500.0;
        const auto schedule = TimeSchedule::fixed({t});
        const auto prior = make_fock(n, 30);
        const double p = likelihood(kSecondOrder, n, t, Outcome::Deflect);
        Rng rng(2024);
        const int draws = 100000;
        int deflected = 0;
        for (int i = 0; i < draws; ++i)
        {
            if (sample_event(prior, kSecondOrder, schedule, rng).event.outcome == Outcome::Deflect)
                ++deflected;
        }
        const double sigma = std::sqrt(draws * p * (1.0 - p));
        CHECK(std::abs(deflected - draws * p) <= 3.0 * sigma);
    }
    SUBCASE("empty cavity always stays")
    {
        const auto prior = make_fock(0, 30);
        const auto schedule = default_schedule(kSecondOrder, 10.0);
        Rng rng(5);
        for (int i = 0; i < 1000; ++i)
        {
            const auto s = sample_event(prior, kSecondOrder, schedule, rng);
            CHECK(s.event.outcome == Outcome::Stay);
            CHECK(s.posterior == prior);
        }
    }
    SUBCASE("single detector ignores atoms that stay")
    {
        const auto prior = make_coherent(10.0, 30);
        const auto schedule = default_schedule(kSecondOrder, 10.0);
        Rng rng(8);
        int stays = 0;
        for (int i = 0; i < 200; ++i)
        {
            const auto s = sample_event(prior, kSecondOrder, schedule, rng, 0, DetectorMode::Single);
            if (s.event.outcome == Outcome::Stay)
            {
                ++stays;
                CHECK(s.posterior == prior);
            }
            else
            {
                CHECK(s.posterior == posterior(prior, kSecondOrder, s.event.t_bar, Outcome::Deflect));
            }
        }
        CHECK(stays > 0);
    }
}

TEST_CASE("collapse")
{
    const auto schedule = default_schedule(kSecondOrder, 10.0);
    SUBCASE("a Fock field is already collapsed")
    {
        Rng rng(1);
        const auto rec = run_collapse(make_fock(13, 30), kSecondOrder, schedule, rng);
        REQUIRE(rec.collapsed_n.has_value());
        CHECK(*rec.collapsed_n == 13);
        CHECK(rec.atoms_used == 1);
        CHECK(rec.events.size() == 1);
    }
    SUBCASE("same seed, same record")
    {
        const auto prior = make_coherent(10.0, 30);
        Rng a = Rng::for_stream(77, 3), b = Rng::for_stream(77, 3);
        CollapseOptions opts;
        opts.keep_snapshots = true;
        const auto ra = run_collapse(prior, kSecondOrder, schedule, a, opts);
        const auto rb = run_collapse(prior, kSecondOrder, schedule, b, opts);
        REQUIRE(ra.collapsed_n.has_value());
        CHECK(ra.collapsed_n == rb.collapsed_n);
        CHECK(ra.atoms_used == rb.atoms_used);
        CHECK(static_cast<int>(ra.events.size()) == ra.atoms_used);
        CHECK(ra.snapshots.size() == ra.events.size());
        for (std::size_t i = 0; i < ra.events.size(); ++i)
        {
            CHECK(ra.events[i].t_bar == rb.events[i].t_bar);
            CHECK(ra.events[i].outcome == rb.events[i].outcome);
        }
        CHECK(ra.posterior == rb.posterior);
        CHECK(ra.posterior.max_probability() >= 1.0 - 1e-6);
    }
    SUBCASE("budget exhausted without collapse")
    {
        Rng rng(3);
        CollapseOptions opts;
        opts.max_atoms = 2;
        const auto rec = run_collapse(make_coherent(10.0, 30), kSecondOrder, schedule, rng, opts);
        CHECK_FALSE(rec.collapsed_n.has_value());
        CHECK(rec.atoms_used == 2);
    }
    SUBCASE("collapse statistics over many trials")
    {
        const auto prior = make_coherent(10.0, 30);
        int collapsed = 0;
        std::vector<int> used;
        for (std::uint64_t i = 0; i < 1000; ++i)
        {
            Rng rng = Rng::for_stream(42, i);
            const auto rec = run_collapse(prior, kSecondOrder, schedule, rng);
            if (rec.collapsed_n)
            {
                ++collapsed;
                used.push_back(rec.atoms_used);
                CHECK(*rec.collapsed_n >= 0);
                CHECK(*rec.collapsed_n <= 30);
            }
        }
        CHECK(collapsed > 990);
        std::nth_element(used.begin(), used.begin() + used.size() / 2, used.end());
        CHECK(used[used.size() / 2] < 200);
    }
    SUBCASE("invalid options")
    {
        Rng rng(1);
        CollapseOptions opts;
        opts.max_atoms = 0;
        CHECK_THROWS_AS(run_collapse(make_fock(1, 30), kSecondOrder, schedule, rng, opts), std::invalid_argument);
    }
}

TEST_CASE("reconstruction")
{
    const auto schedule = default_schedule(kSecondOrder, 10.0);
    SUBCASE("Fock prior")
    {
        const auto prior = make_fock(7, 30);
        const auto r = reconstruct(prior, kSecondOrder, schedule, 1, 500);
        CHECK(r.estimate == prior);
        CHECK(r.trials == 500);
        CHECK(r.failed_trials == 0);
        CHECK(r.total_atoms == 500);
    }
    SUBCASE("accounting and convergence to the prior")
    {
        const auto prior = make_coherent(10.0, 30);
        const auto r = reconstruct(prior, kSecondOrder, schedule, 2718, 70000, {}, 2);
        long sum = 0;
        for (long c : r.histogram)
            sum += c;
        CHECK(sum == r.trials);
        CHECK(r.total_atoms >= 70000);
        CHECK(r.total_atoms < 70000 + 200);
        CHECK(r.trials + r.failed_trials > 1500);
        const double trials = static_cast<double>(r.trials);
        for (int n = 0; n <= 30; ++n)
        {
            const double se = std::sqrt(trials * prior[n] * (1.0 - prior[n]));
            CAPTURE(n);
            CHECK(std::abs(r.histogram[n] - trials * prior[n]) <= 4.0 * se + 1e-9);
        }
    }
    SUBCASE("thread count does not change the result")
    {
        const auto prior = make_coherent(10.0, 30);
        const auto one = reconstruct(prior, kSecondOrder, schedule, 5, 20000, {}, 1);
        const auto four = reconstruct(prior, kSecondOrder, schedule, 5, 20000, {}, 4);
        CHECK(one.histogram == four.histogram);
        CHECK(one.total_atoms == four.total_atoms);
        CHECK(one.failed_trials == four.failed_trials);
        const auto other = reconstruct(prior, kSecondOrder, schedule, 6, 20000, {}, 1);
        CHECK(other.histogram != one.histogram);
    }
    SUBCASE("nothing collapses")
    {
        CollapseOptions opts;
        opts.max_atoms = 1;
        CHECK_THROWS_AS(reconstruct(make_coherent(10.0, 30), kSecondOrder, schedule, 1, 10, opts),
                        std::runtime_error);
    }
    SUBCASE("budget below the per-trial cap")
    {
        CHECK_THROWS_AS(reconstruct(make_fock(3, 30), kSecondOrder, schedule, 1, 100), std::invalid_argument);
    }
}

TEST_CASE("exports")
{
    const auto schedule = TimeSchedule::fixed({100.0});
    Rng rng(1);
    const auto rec = run_collapse(make_fock(4, 10), kSecondOrder, schedule, rng);
    std::ostringstream log;
    write_trial_log_header(log);
    write_trial_log(log, 3, rec);
    CHECK(log.str() == "trial,atom_index,t_bar,outcome,max_posterior_n,max_posterior_p\n3,1,100," +
                           std::string(to_string(rec.events[0].outcome)) + ",4,1\n");

    const auto r = reconstruct(make_fock(1, 2), kSecondOrder, schedule, 1, 200);
    std::ostringstream hist;
    write_csv(hist, r);
    CHECK(hist.str() == "n,count,estimate\n0,0,0\n1,200,1\n2,0,0\n");
}

TEST_CASE("random streams are reproducible and distinct")
{
    Rng a = Rng::for_stream(1, 0), b = Rng::for_stream(1, 0), c = Rng::for_stream(1, 1);
    bool differs = false;
    for (int i = 0; i < 100; ++i)
    {
        const auto x = a.next();
        CHECK(x == b.next());
        differs |= x != c.next();
        const double u = Rng(i).uniform();
        CHECK(u >= 0.0);
        CHECK(u < 1.0);
    }
    CHECK(differs);
}
