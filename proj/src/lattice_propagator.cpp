#include "bragg_qnd/lattice_propagator.hpp"

#include "bragg_qnd/csv.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <numbers>
#include <ostream>
#include <stdexcept>
#include <string>

namespace bragg_qnd
{

LatticeState::LatticeState(int n, int l_min, int l_max, std::vector<Amplitude> amplitudes,
                           double t_bar)
    : n_(n), l_min_(l_min), l_max_(l_max), amplitudes_(std::move(amplitudes)), t_bar_(t_bar)
{
    if (n < 0)
        throw std::invalid_argument("photon number must be >= 0");
    if (l_min % 2 != 0 || l_max % 2 != 0)
        throw std::invalid_argument("lattice bounds must be even");
    if (l_min > l_max)
        throw std::invalid_argument("lattice bounds are reversed");
    if (amplitudes_.size() != static_cast<std::size_t>((l_max - l_min) / 2 + 1))
        throw std::invalid_argument("amplitude count does not match lattice bounds");
}

bool LatticeState::contains(int l) const noexcept
{
    return l % 2 == 0 && l >= l_min_ && l <= l_max_;
}

std::size_t LatticeState::index_of(int l) const
{
    if (!contains(l))
        throw std::invalid_argument("momentum label " + std::to_string(l) + " not on lattice [" +
                                    std::to_string(l_min_) + ", " + std::to_string(l_max_) + "]");
    return static_cast<std::size_t>((l - l_min_) / 2);
}

double LatticeState::norm_squared() const noexcept
{
    double sum = 0.0;
    for (const auto& a : amplitudes_)
        sum += std::norm(a);
    return sum;
}

//---------------------------------------------------------------------------//

LatticeState initial_state(const BraggGeometry& geometry, int n, int l_min, int l_max)
{
    if (l_min % 2 != 0 || l_max % 2 != 0)
        throw std::invalid_argument("lattice bounds must be even");
    if (l_max < 0 || l_min > -geometry.l0())
        throw std::invalid_argument("lattice bounds must include l = 0 and l = -l0");
    std::vector<Amplitude> amps(static_cast<std::size_t>((l_max - l_min) / 2 + 1));
    amps[static_cast<std::size_t>(-l_min / 2)] = 1.0;
    return LatticeState(n, l_min, l_max, std::move(amps), 0.0);
}

LatticeState initial_state(const BraggGeometry& geometry, int n)
{
    return initial_state(geometry, n, -kDefaultLatticeBound, kDefaultLatticeBound);
}

double lattice_diagonal(const BraggGeometry& geometry, int l) noexcept
{
    return static_cast<double>(l) * static_cast<double>(l + geometry.l0());
}

std::vector<Amplitude> hamiltonian_apply(const BraggGeometry& geometry, int n, int l_min,
                                         std::span<const Amplitude> v)
{
    const double hop = -0.5 * geometry.coupling(n);
    const std::size_t size = v.size();
    std::vector<Amplitude> out(size);
    for (std::size_t j = 0; j < size; ++j)
    {
        const int l = l_min + 2 * static_cast<int>(j);
        Amplitude neighbours = 0.0;
        if (j > 0)
            neighbours += v[j - 1];
        if (j + 1 < size)
            neighbours += v[j + 1];
        out[j] = lattice_diagonal(geometry, l) * v[j] + hop * neighbours;
    }
    return out;
}

std::vector<Amplitude> generator_apply(const BraggGeometry& geometry, const LatticeState& state)
{
    auto out = hamiltonian_apply(geometry, state.n(), state.l_min(), state.amplitudes());
    for (auto& x : out)
        x = Amplitude(x.imag(), -x.real());  // -i * x
    return out;
}

//---------------------------------------------------------------------------//

namespace
{

// Dormand-Prince 5(4) coefficients.
constexpr std::array<double, 7> kNode = {0.0, 1.0 / 5, 3.0 / 10, 4.0 / 5, 8.0 / 9, 1.0, 1.0};
constexpr double a21 = 1.0 / 5;
constexpr double a31 = 3.0 / 40, a32 = 9.0 / 40;
constexpr double a41 = 44.0 / 45, a42 = -56.0 / 15, a43 = 32.0 / 9;
constexpr double a51 = 19372.0 / 6561, a52 = -25360.0 / 2187, a53 = 64448.0 / 6561,
                 a54 = -212.0 / 729;
constexpr double a61 = 9017.0 / 3168, a62 = -355.0 / 33, a63 = 46732.0 / 5247, a64 = 49.0 / 176,
                 a65 = -5103.0 / 18656;
constexpr double a71 = 35.0 / 384, a73 = 500.0 / 1113, a74 = 125.0 / 192, a75 = -2187.0 / 6784,
                 a76 = 11.0 / 84;
constexpr double e1 = 71.0 / 57600, e3 = -71.0 / 16695, e4 = 71.0 / 1920, e5 = -17253.0 / 339200,
                 e6 = 22.0 / 525, e7 = -1.0 / 40;

// Amplitudes below this magnitude are dropped from the active window. They
// are hundreds of orders below anything observable.
constexpr double kNegligible = 1e-150;
// Each step applies the hopping stencil six times, so the window is padded
// by more than that beyond the last significant site.
constexpr std::size_t kWindowPad = 8;

// Interaction-picture stepper. Within a step starting at y0 the amplitudes
// are written y(s) = exp(-i D s) v(s), which removes the stiff diagonal D
// and leaves v' = g(s, v) = exp(i D s) (-i V) exp(-i D s) v, with V the
// nearest-neighbour hopping. All work is restricted to [lo_, hi_]; entries of
// y_ and k_[0] outside it are exactly zero.
class IntegratingFactorStepper
{
    // Local error target as a fraction of the caller's tolerance, so that
    // the drift accumulated over thousands of steps stays within 10 tol.
    static constexpr double kLocalFraction = 0.1;

public:
    IntegratingFactorStepper(const BraggGeometry& geometry, const LatticeState& state, double tol)
        : size_(state.sites()), hop_(-0.5 * geometry.coupling(state.n())), tol_(kLocalFraction * tol),
          diag_(size_), y_(state.amplitudes().begin(), state.amplitudes().end())
    {
        for (std::size_t j = 0; j < size_; ++j)
            diag_[j] = lattice_diagonal(geometry, state.label_of(j));
        for (auto& k : k_)
            k.assign(size_, Amplitude{});
        for (auto& p : phase_)
            p.assign(size_, Amplitude{});
        w_.assign(size_, Amplitude{});
        v5_.assign(size_, Amplitude{});
        stage_.assign(size_, Amplitude{});
        lo_ = 0;
        hi_ = size_ - 1;
        shrink_window();
        hopping(y_, k_[0]);
    }

    // Advances by exactly `duration`.
    void advance(double duration, EvolveStats& stats)
    {
        double remaining = duration;
        double h = std::min(remaining, initial_step());
        while (remaining > 0.0)
        {
            bool last = false;
            if (h >= remaining)
            {
                h = remaining;
                last = true;
            }
            const double err = attempt(h);
            if (err <= 1.0)
            {
                ++stats.accepted_steps;
                accept();
                if (last)
                    break;
                remaining -= h;
            }
            else
            {
                ++stats.rejected_steps;
            }
            const double factor = err == 0.0 ? 5.0 : std::clamp(0.9 * std::pow(err, -0.2), 0.2, 5.0);
            const double next = h * factor;
            if (!(next > 0.0) || next < 1e-14 * duration)
                throw std::runtime_error("lattice integrator step size underflow");
            h = next;
        }
    }

    std::vector<Amplitude> take() { return std::move(y_); }

private:
    double initial_step() const
    {
        // Hopping rate bounds the interaction-picture derivative; the error
        // controller adapts from here.
        return 0.05 / (std::abs(hop_) + 1e-3);
    }

    // Recomputes the window from the significant entries of y_ and zeroes
    // everything that falls out of it.
    void shrink_window()
    {
        std::size_t first = size_, last = 0;
        for (std::size_t j = lo_; j <= hi_; ++j)
        {
            if (std::abs(y_[j]) > kNegligible)
            {
                first = std::min(first, j);
                last = j;
            }
        }
        if (first == size_)
            first = last = lo_;
        const std::size_t new_lo = first > kWindowPad ? first - kWindowPad : 0;
        const std::size_t new_hi = std::min(size_ - 1, last + kWindowPad);
        for (std::size_t j = lo_; j < new_lo; ++j)
            y_[j] = k_[0][j] = Amplitude{};
        for (std::size_t j = new_hi + 1; j <= hi_; ++j)
            y_[j] = k_[0][j] = Amplitude{};
        lo_ = new_lo;
        hi_ = new_hi;
    }

    // out = -i V in over the window, zero outside it.
    void hopping(const std::vector<Amplitude>& in, std::vector<Amplitude>& out) const
    {
        for (std::size_t j = lo_; j <= hi_; ++j)
        {
            Amplitude nb = 0.0;
            if (j > lo_)
                nb += in[j - 1];
            if (j < hi_)
                nb += in[j + 1];
            const Amplitude x = hop_ * nb;
            out[j] = Amplitude(x.imag(), -x.real());
        }
    }

    // phase_[i][j] = exp(-i D_j c_i h) for nodes 1..5 (node 6 equals node 5).
    void fill_phases(double h)
    {
        for (std::size_t i = 1; i <= 5; ++i)
        {
            const double s = kNode[i] * h;
            auto& p = phase_[i];
            for (std::size_t j = lo_; j <= hi_; ++j)
            {
                const double arg = diag_[j] * s;
                p[j] = Amplitude(std::cos(arg), -std::sin(arg));
            }
        }
    }

    // out = g(c_i h, in) using the precomputed phases of node i.
    void rhs(std::size_t node, const std::vector<Amplitude>& in, std::vector<Amplitude>& out)
    {
        const auto& p = phase_[node];
        for (std::size_t j = lo_; j <= hi_; ++j)
            w_[j] = p[j] * in[j];
        hopping(w_, out);
        for (std::size_t j = lo_; j <= hi_; ++j)
            out[j] *= std::conj(p[j]);
    }

    template<class F>
    void combine(std::vector<Amplitude>& dst, F&& f) const
    {
        for (std::size_t j = lo_; j <= hi_; ++j)
            dst[j] = f(j);
    }

    double attempt(double h)
    {
        fill_phases(h);
        const auto& y = y_;
        auto& k = k_;
        auto& stage = stage_;

        combine(stage, [&](std::size_t j) { return y[j] + h * (a21 * k[0][j]); });
        rhs(1, stage, k[1]);
        combine(stage, [&](std::size_t j) { return y[j] + h * (a31 * k[0][j] + a32 * k[1][j]); });
        rhs(2, stage, k[2]);
        combine(stage, [&](std::size_t j) {
            return y[j] + h * (a41 * k[0][j] + a42 * k[1][j] + a43 * k[2][j]);
        });
        rhs(3, stage, k[3]);
        combine(stage, [&](std::size_t j) {
            return y[j] + h * (a51 * k[0][j] + a52 * k[1][j] + a53 * k[2][j] + a54 * k[3][j]);
        });
        rhs(4, stage, k[4]);
        combine(stage, [&](std::size_t j) {
            return y[j] + h * (a61 * k[0][j] + a62 * k[1][j] + a63 * k[2][j] + a64 * k[3][j] +
                               a65 * k[4][j]);
        });
        rhs(5, stage, k[5]);
        combine(v5_, [&](std::size_t j) {
            return y[j] + h * (a71 * k[0][j] + a73 * k[2][j] + a74 * k[3][j] + a75 * k[4][j] +
                               a76 * k[5][j]);
        });
        rhs(5, v5_, k[6]);

        double err = 0.0;
        for (std::size_t j = lo_; j <= hi_; ++j)
        {
            const Amplitude e = h * (e1 * k[0][j] + e3 * k[2][j] + e4 * k[3][j] + e5 * k[4][j] +
                                     e6 * k[5][j] + e7 * k[6][j]);
            const double scale = tol_ * (1.0 + std::max(std::abs(y[j]), std::abs(v5_[j])));
            err = std::max(err, std::abs(e) / scale);
        }
        return std::isfinite(err) ? err : 1e10;
    }

    void accept()
    {
        // Back to the lab frame at the end of the step; the FSAL stage maps
        // onto the first stage of the next step.
        const auto& p = phase_[5];
        for (std::size_t j = lo_; j <= hi_; ++j)
        {
            y_[j] = p[j] * v5_[j];
            k_[0][j] = p[j] * k_[6][j];
        }
        const std::size_t old_lo = lo_, old_hi = hi_;
        shrink_window();
        if (lo_ != old_lo || hi_ != old_hi)
            hopping(y_, k_[0]);
    }

    std::size_t size_;
    double hop_;
    double tol_;
    std::vector<double> diag_;
    std::vector<Amplitude> y_;
    std::array<std::vector<Amplitude>, 7> k_;
    std::array<std::vector<Amplitude>, 6> phase_;
    std::vector<Amplitude> w_;
    std::vector<Amplitude> v5_;
    std::vector<Amplitude> stage_;
    std::size_t lo_ = 0;
    std::size_t hi_ = 0;
};

}  // namespace

LatticeState evolve(const BraggGeometry& geometry, const LatticeState& state, double t_bar,
                    double tol, EvolveStats* stats)
{
    if (!std::isfinite(t_bar) || t_bar < 0.0)
        throw std::invalid_argument("evolve: t_bar must be finite and >= 0");
    if (!(tol > 0.0) || tol > 1e-4)
        throw std::invalid_argument("evolve: tol must lie in (0, 1e-4]");
    if (t_bar == 0.0)
        return state;

    EvolveStats local;
    IntegratingFactorStepper stepper(geometry, state, tol);
    stepper.advance(t_bar, stats ? *stats : local);
    return LatticeState(state.n(), state.l_min(), state.l_max(), stepper.take(),
                        state.t_bar() + t_bar);
}

double occupation(const LatticeState& state, int l)
{
    return std::norm(state.amplitude(l));
}

double leakage(const BraggGeometry& geometry, const LatticeState& state)
{
    return 1.0 - occupation(state, 0) - occupation(state, -geometry.l0());
}

double boundary_occupation(const LatticeState& state)
{
    const auto amps = state.amplitudes();
    if (amps.size() == 1)
        return std::norm(amps.front());
    return std::norm(amps.front()) + std::norm(amps.back());
}

std::vector<TimeSample> sample_trace(const BraggGeometry& geometry, const LatticeState& initial,
                                     std::span<const double> times, double tol)
{
    std::vector<TimeSample> trace;
    trace.reserve(times.size());
    LatticeState state = initial;
    for (double t : times)
    {
        if (t < state.t_bar())
            throw std::invalid_argument("sample_trace: sample times must be sorted and >= start");
        state = evolve(geometry, state, t - state.t_bar(), tol);
        trace.push_back({t, occupation(state, 0), occupation(state, -geometry.l0()),
                         leakage(geometry, state), state.norm_squared(), boundary_occupation(state)});
    }
    return trace;
}

void write_csv(std::ostream& os, std::span<const TimeSample> trace)
{
    os << "t_bar,occ_0,occ_minus_l0,leakage,norm\n";
    for (const auto& s : trace)
    {
        os << format_real(s.t_bar) << ',' << format_real(s.occ_0) << ','
           << format_real(s.occ_minus_l0) << ',' << format_real(s.leakage) << ','
           << format_real(s.norm) << '\n';
    }
}

double fitted_flip_frequency(std::span<const double> times, std::span<const double> deflected)
{
    if (times.size() != deflected.size())
        throw std::invalid_argument("fitted_flip_frequency: size mismatch");
    auto crossing = [&](std::size_t i) {
        const double f = (0.5 - deflected[i - 1]) / (deflected[i] - deflected[i - 1]);
        return times[i - 1] + f * (times[i] - times[i - 1]);
    };
    std::size_t i = 1;
    while (i < times.size() && !(deflected[i - 1] < 0.5 && deflected[i] >= 0.5))
        ++i;
    if (i >= times.size())
        return -1.0;
    const double rise = crossing(i);
    for (++i; i < times.size(); ++i)
    {
        if (deflected[i - 1] >= 0.5 && deflected[i] < 0.5)
        {
            const double fall = crossing(i);
            return std::numbers::pi / (0.5 * (rise + fall));
        }
    }
    // Trace ends before the population falls back: the rise alone marks a
    // quarter period.
    return std::numbers::pi / (2.0 * rise);
}

}  // namespace bragg_qnd
