#include "bragg_qnd/qnd_measurement.hpp"

#include "bragg_qnd/csv.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <numbers>
#include <ostream>
#include <thread>

namespace bragg_qnd
{

std::string_view to_string(Outcome o) noexcept
{
    return o == Outcome::Stay ? "stay" : "deflect";
}

//---------------------------------------------------------------------------//

TimeSchedule TimeSchedule::uniform(double t_lo, double t_hi)
{
    if (!std::isfinite(t_lo) || !std::isfinite(t_hi) || !(t_lo > 0.0) || !(t_lo < t_hi))
        throw std::invalid_argument("uniform schedule needs 0 < t_lo < t_hi");
    TimeSchedule s;
    s.t_lo_ = t_lo;
    s.t_hi_ = t_hi;
    return s;
}

TimeSchedule TimeSchedule::fixed(std::vector<double> times)
{
    if (times.empty())
        throw std::invalid_argument("fixed schedule needs at least one time");
    for (double t : times)
    {
        if (!std::isfinite(t) || !(t > 0.0))
            throw std::invalid_argument("fixed schedule times must be finite and > 0");
    }
    TimeSchedule s;
    s.t_lo_ = *std::min_element(times.begin(), times.end());
    s.t_hi_ = *std::max_element(times.begin(), times.end());
    s.times_ = std::move(times);
    return s;
}

double TimeSchedule::draw(std::size_t atom_index, Rng& rng) const
{
    if (!times_.empty())
        return times_[atom_index % times_.size()];
    return t_lo_ + (t_hi_ - t_lo_) * rng.uniform();
}

TimeSchedule default_schedule(const BraggGeometry& geometry, double mean_photons)
{
    const int n = std::max(1, static_cast<int>(std::lround(mean_photons)));
    const double b = coefficients(geometry, n).b_freq;
    return TimeSchedule::uniform(0.25 * std::numbers::pi / b, 4.0 * std::numbers::pi / b);
}

//---------------------------------------------------------------------------//

double likelihood(const BraggGeometry& geometry, int n, double t_bar, Outcome outcome)
{
    const auto q = two_level_probabilities(geometry, n, t_bar);
    return outcome == Outcome::Stay ? q.q_stay : q.q_deflect;
}

PhotonDistribution posterior(const PhotonDistribution& prior, const BraggGeometry& geometry,
                             double t_bar, Outcome outcome)
{
    std::vector<double> w(prior.size());
    double marginal = 0.0;
    for (int n = 0; n <= prior.n_max(); ++n)
    {
        w[n] = prior[n] * likelihood(geometry, n, t_bar, outcome);
        marginal += w[n];
    }
    if (!(marginal > 0.0))
        throw ImpossibleOutcome("outcome '" + std::string(to_string(outcome)) +
                                "' has zero probability under the prior");
    return PhotonDistribution(std::move(w));
}

SampledEvent sample_event(const PhotonDistribution& prior, const BraggGeometry& geometry,
                          const TimeSchedule& schedule, Rng& rng, std::size_t atom_index,
                          DetectorMode detector)
{
    const double t = schedule.draw(atom_index, rng);
    const auto q = ensemble_probabilities(prior, geometry, t);
    // u < q_deflect never selects an outcome of zero probability since u is in [0, 1).
    const Outcome outcome = rng.uniform() < q.q_deflect ? Outcome::Deflect : Outcome::Stay;
    const MeasurementEvent event{t, outcome};
    if (detector == DetectorMode::Single && outcome == Outcome::Stay)
        return {event, prior};
    return {event, posterior(prior, geometry, t, outcome)};
}

TrialRecord run_collapse(const PhotonDistribution& prior, const BraggGeometry& geometry,
                         const TimeSchedule& schedule, Rng& rng, const CollapseOptions& options)
{
    if (options.max_atoms < 1)
        throw std::invalid_argument("max_atoms must be >= 1");
    if (!(options.collapse_eps > 0.0) || !(options.collapse_eps < 1.0))
        throw std::invalid_argument("collapse_eps must lie in (0, 1)");

    TrialRecord record{{}, {}, {}, prior, std::nullopt, 0};
    record.events.reserve(static_cast<std::size_t>(options.max_atoms));
    record.peaks.reserve(static_cast<std::size_t>(options.max_atoms));
    const double threshold = 1.0 - options.collapse_eps;
    for (int atom = 0; atom < options.max_atoms; ++atom)
    {
        auto sampled = sample_event(record.posterior, geometry, schedule, rng,
                                    static_cast<std::size_t>(atom), options.detector);
        record.events.push_back(sampled.event);
        record.posterior = std::move(sampled.posterior);
        record.atoms_used = atom + 1;
        const int peak_n = record.posterior.argmax();
        const double peak_p = record.posterior[peak_n];
        record.peaks.emplace_back(peak_n, peak_p);
        if (options.keep_snapshots)
            record.snapshots.push_back(record.posterior);
        if (peak_p >= threshold)
        {
            record.collapsed_n = peak_n;
            break;
        }
    }
    return record;
}

//---------------------------------------------------------------------------//

namespace
{

struct TrialSummary
{
    std::optional<int> collapsed_n;
    int atoms_used = 0;
};

}  // namespace

ReconstructionResult reconstruct(const PhotonDistribution& prior, const BraggGeometry& geometry,
                                 const TimeSchedule& schedule, std::uint64_t master_seed,
                                 long atom_budget, const CollapseOptions& options,
                                 unsigned threads)
{
    if (options.max_atoms < 1)
        throw std::invalid_argument("max_atoms must be >= 1");
    if (!(options.collapse_eps > 0.0) || !(options.collapse_eps < 1.0))
        throw std::invalid_argument("collapse_eps must lie in (0, 1)");
    if (atom_budget < options.max_atoms)
        throw std::invalid_argument("atom budget must be >= max_atoms");
    if (threads == 0)
        threads = std::max(1u, std::thread::hardware_concurrency());

    CollapseOptions trial_options = options;
    trial_options.keep_snapshots = false;

    std::vector<long> histogram(prior.size(), 0);
    long counted = 0, failed = 0, atoms = 0;

    // Trials are computed in fixed-size batches and folded in index order;
    // trials past the one that exhausts the budget are discarded.
    const std::size_t batch = 512;
    std::vector<TrialSummary> results(batch);
    for (std::uint64_t base = 0; atoms < atom_budget; base += batch)
    {
        std::atomic<std::size_t> next{0};
        auto worker = [&] {
            for (std::size_t i = next++; i < batch; i = next++)
            {
                Rng rng = Rng::for_stream(master_seed, base + i);
                const auto rec = run_collapse(prior, geometry, schedule, rng, trial_options);
                results[i] = {rec.collapsed_n, rec.atoms_used};
            }
        };
        if (threads == 1)
        {
            worker();
        }
        else
        {
            std::vector<std::jthread> pool;
            pool.reserve(threads);
            for (unsigned t = 0; t < threads; ++t)
                pool.emplace_back(worker);
        }

        for (std::size_t i = 0; i < batch && atoms < atom_budget; ++i)
        {
            atoms += results[i].atoms_used;
            if (results[i].collapsed_n)
            {
                ++histogram[static_cast<std::size_t>(*results[i].collapsed_n)];
                ++counted;
            }
            else
            {
                ++failed;
            }
        }
    }
    if (counted == 0)
        throw std::runtime_error("no trial collapsed within max_atoms; nothing to reconstruct");

    std::vector<double> weights(histogram.begin(), histogram.end());
    return ReconstructionResult{std::move(histogram), counted, failed, atoms,
                                PhotonDistribution(std::move(weights))};
}

//---------------------------------------------------------------------------//

void write_trial_log_header(std::ostream& os)
{
    os << "trial,atom_index,t_bar,outcome,max_posterior_n,max_posterior_p\n";
}

void write_trial_log(std::ostream& os, long trial, const TrialRecord& record)
{
    for (std::size_t i = 0; i < record.events.size(); ++i)
    {
        const auto& e = record.events[i];
        os << trial << ',' << i + 1 << ',' << format_real(e.t_bar) << ',' << to_string(e.outcome)
           << ',' << record.peaks[i].first << ',' << format_real(record.peaks[i].second) << '\n';
    }
}

void write_csv(std::ostream& os, const ReconstructionResult& result)
{
    os << "n,count,estimate\n";
    for (std::size_t n = 0; n < result.histogram.size(); ++n)
        os << n << ',' << result.histogram[n] << ',' << format_real(result.estimate[n]) << '\n';
}

}  // namespace bragg_qnd
