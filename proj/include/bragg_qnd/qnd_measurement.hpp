#pragma once

#include "bragg_qnd/bragg_analytic.hpp"
#include "bragg_qnd/field_state.hpp"
#include "bragg_qnd/geometry.hpp"
#include "bragg_qnd/random.hpp"

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <span>
#include <stdexcept>
#include <string_view>
#include <utility>
#include <vector>

namespace bragg_qnd
{

enum class Outcome
{
    Stay,    ///< exits with the incident momentum P0
    Deflect  ///< exits with -P0
};

std::string_view to_string(Outcome o) noexcept;

/// Two-sided: every probe atom is detected in one of the two ports and
/// updates the field. Single: only the deflected port has a detector; an
/// atom that stays is never seen and leaves the field statistics untouched.
enum class DetectorMode
{
    TwoSided,
    Single
};

/// Raised when Bayes' rule is asked to condition on an outcome that has zero
/// probability under the prior.
class ImpossibleOutcome : public std::runtime_error
{
public:
    using std::runtime_error::runtime_error;
};

/// Distribution of atom-field interaction times, in units of 1 / w_rec.
class TimeSchedule
{
public:
    /// Uniform on [t_lo, t_hi]; requires 0 < t_lo < t_hi.
    static TimeSchedule uniform(double t_lo, double t_hi);
    /// Atom k uses times[k mod size]; entries must be > 0.
    static TimeSchedule fixed(std::vector<double> times);

    bool is_uniform() const noexcept { return times_.empty(); }
    double t_lo() const noexcept { return t_lo_; }
    double t_hi() const noexcept { return t_hi_; }
    std::span<const double> times() const noexcept { return times_; }

    double draw(std::size_t atom_index, Rng& rng) const;

private:
    TimeSchedule() = default;
    double t_lo_ = 0.0;
    double t_hi_ = 0.0;
    std::vector<double> times_;
};

/// Uniform window over which B(n) t spans [pi/4, 4 pi] for n = round(mean).
TimeSchedule default_schedule(const BraggGeometry& geometry, double mean_photons);

struct MeasurementEvent
{
    double t_bar = 0.0;
    Outcome outcome = Outcome::Stay;
};

/// Conditional probability of `outcome` for a field with exactly n photons.
double likelihood(const BraggGeometry& geometry, int n, double t_bar, Outcome outcome);

/// P(n | outcome) = P(n) L(outcome | n) / sum_m P(m) L(outcome | m).
/// Throws ImpossibleOutcome when the denominator vanishes.
PhotonDistribution posterior(const PhotonDistribution& prior, const BraggGeometry& geometry,
                             double t_bar, Outcome outcome);

struct SampledEvent
{
    MeasurementEvent event;
    PhotonDistribution posterior;
};

/// Sends one probe atom: draws its interaction time, draws the exit port
/// from the ensemble probabilities under `prior`, and conditions the field.
SampledEvent sample_event(const PhotonDistribution& prior, const BraggGeometry& geometry,
                          const TimeSchedule& schedule, Rng& rng, std::size_t atom_index = 0,
                          DetectorMode detector = DetectorMode::TwoSided);

struct CollapseOptions
{
    int max_atoms = 200;
    double collapse_eps = 1e-6;
    DetectorMode detector = DetectorMode::TwoSided;
    bool keep_snapshots = false;
};

struct TrialRecord
{
    std::vector<MeasurementEvent> events;
    /// Most probable photon number and its probability after each atom.
    std::vector<std::pair<int, double>> peaks;
    /// Posterior after each atom, filled only with keep_snapshots.
    std::vector<PhotonDistribution> snapshots;
    PhotonDistribution posterior;
    std::optional<int> collapsed_n;
    int atoms_used = 0;
};

/// Sends atoms until the largest posterior probability reaches
/// 1 - collapse_eps or max_atoms have been used.
TrialRecord run_collapse(const PhotonDistribution& prior, const BraggGeometry& geometry,
                         const TimeSchedule& schedule, Rng& rng, const CollapseOptions& options = {});

struct ReconstructionResult
{
    std::vector<long> histogram;  ///< collapsed trials per photon number
    long trials = 0;              ///< collapsed trials, equal to the histogram sum
    long failed_trials = 0;       ///< trials that hit max_atoms without collapsing
    long total_atoms = 0;         ///< atoms used by all trials, failed ones included
    PhotonDistribution estimate;  ///< normalized histogram
};

/// Repeats independent collapse trials, each from a fresh copy of `prior`,
/// until the cumulative atom count reaches atom_budget. Trial i draws from
/// Rng::for_stream(master_seed, i), and trials are reduced in index order,
/// so the result does not depend on `threads` (0 selects all cores).
/// Throws std::runtime_error if no trial collapses.
ReconstructionResult reconstruct(const PhotonDistribution& prior, const BraggGeometry& geometry,
                                 const TimeSchedule& schedule, std::uint64_t master_seed,
                                 long atom_budget, const CollapseOptions& options = {},
                                 unsigned threads = 0);

/// `trial,atom_index,t_bar,outcome,max_posterior_n,max_posterior_p`
void write_trial_log_header(std::ostream& os);
void write_trial_log(std::ostream& os, long trial, const TrialRecord& record);

/// `n,count,estimate`
void write_csv(std::ostream& os, const ReconstructionResult& result);

}  // namespace bragg_qnd
