#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

namespace bragg_qnd::cli
{

inline constexpr int kExitOk = 0;
inline constexpr int kExitConfig = 2;
inline constexpr int kExitRuntime = 3;

class ConfigError : public std::runtime_error
{
public:
    using std::runtime_error::runtime_error;
};

enum class Experiment
{
    Pendellosung,
    Collapse,
    Reconstruct,
    Params
};

enum class FieldKind
{
    Coherent,
    Fock
};

enum class OutputFormat
{
    Csv,
    Json,
    Text
};

/// Fully resolved run configuration: built-in defaults, overridden by the
/// config file, overridden by command-line flags.
struct RunConfig
{
    Experiment experiment = Experiment::Pendellosung;

    int l0 = 4;
    double chi_bar = 0.02;

    FieldKind field = FieldKind::Coherent;
    double mean = 10.0;
    int n = 5;
    int n_max = 0;  ///< 0 selects the default truncation for the field

    std::optional<double> t_lo;  ///< unset selects the default window
    std::optional<double> t_hi;
    std::vector<double> times;   ///< non-empty selects a fixed schedule

    long atom_budget = 100000;
    int max_atoms = 200;
    double collapse_eps = 1e-6;
    bool single_detector = false;

    int l_min = -500;
    int l_max = 500;
    double tol = 1e-9;
    double t_max = 5000.0;
    int samples = 2001;

    std::uint64_t seed = 20020101;
    unsigned threads = 0;
    std::filesystem::path out = ".";
    std::optional<OutputFormat> format;
    bool trial_log = false;

    double mass = 1.42e-25;
    double wavelength = 0.8e-6;
    double g_hz = 112e3;
    double detuning_hz = 80e6;

    std::optional<std::filesystem::path> config_file;
};

/// Applies `key = value` lines. Blank lines and `#` comments are ignored;
/// errors are reported as `<source>:<line>: message`.
void apply_config_text(RunConfig& config, std::istream& in, const std::string& source);

/// Checks every module invariant the config feeds into. Throws ConfigError.
void validate(const RunConfig& config);

/// Photon number truncation actually used by the run.
int resolved_n_max(const RunConfig& config);

int run_pendellosung(const RunConfig& config, std::ostream& out);
int run_collapse(const RunConfig& config, std::ostream& out);
int run_reconstruct(const RunConfig& config, std::ostream& out);
int run_params(const RunConfig& config, std::ostream& out);

/// Entry point shared by the executable and the tests.
int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

}  // namespace bragg_qnd::cli
