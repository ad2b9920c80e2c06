#include "app.hpp"

#include "bragg_qnd/bragg_analytic.hpp"
#include "bragg_qnd/csv.hpp"
#include "bragg_qnd/field_state.hpp"
#include "bragg_qnd/lattice_propagator.hpp"
#include "bragg_qnd/physical_params.hpp"
#include "bragg_qnd/qnd_measurement.hpp"

#include <CLI11.hpp>
#include <json.hpp>

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <functional>
#include <iomanip>
#include <iostream>
#include <map>
#include <numbers>
#include <sstream>

namespace bragg_qnd::cli
{
namespace
{

using nlohmann::json;

//---------------------------------------------------------------------------//
// Value parsing

std::string trim(std::string_view s)
{
    const auto first = s.find_first_not_of(" \t\r");
    if (first == std::string_view::npos)
        return {};
    const auto last = s.find_last_not_of(" \t\r");
    return std::string(s.substr(first, last - first + 1));
}

template<class T>
T parse_number(const std::string& text)
{
    T value{};
    const char* begin = text.data();
    const char* end = begin + text.size();
    if (!text.empty() && text.front() == '+')
        ++begin;
    auto [ptr, ec] = std::from_chars(begin, end, value);
    if (ec != std::errc() || ptr != end || text.empty())
        throw ConfigError("'" + text + "' is not a valid number");
    return value;
}

bool parse_bool(const std::string& text)
{
    if (text == "true" || text == "1" || text == "yes" || text == "on")
        return true;
    if (text == "false" || text == "0" || text == "no" || text == "off")
        return false;
    throw ConfigError("'" + text + "' is not a boolean");
}

std::vector<double> parse_list(const std::string& text)
{
    std::vector<double> values;
    std::stringstream ss(text);
    std::string item;
    while (std::getline(ss, item, ','))
        values.push_back(parse_number<double>(trim(item)));
    if (values.empty())
        throw ConfigError("empty time list");
    return values;
}

std::string join(const std::vector<double>& values)
{
    std::string s;
    for (std::size_t i = 0; i < values.size(); ++i)
        s += (i ? "," : "") + format_real(values[i]);
    return s;
}

std::string_view to_string(Experiment e)
{
    switch (e)
    {
    case Experiment::Pendellosung:
        return "pendellosung";
    case Experiment::Collapse:
        return "collapse";
    case Experiment::Reconstruct:
        return "reconstruct";
    case Experiment::Params:
        return "params";
    }
    return "unknown";
}

std::string_view to_string(OutputFormat f)
{
    switch (f)
    {
    case OutputFormat::Csv:
        return "csv";
    case OutputFormat::Json:
        return "json";
    case OutputFormat::Text:
        return "text";
    }
    return "unknown";
}

//---------------------------------------------------------------------------//
// Key table shared by the config file, the manifest and the flags.

struct Key
{
    std::string name;
    std::string help;
    std::function<void(RunConfig&, const std::string&)> set;
    std::function<std::string(const RunConfig&)> get;
    bool is_flag = false;
};

const std::vector<Key>& keys()
{
    static const std::vector<Key> table = [] {
        std::vector<Key> k;
        auto real = [](double RunConfig::*m) {
            return std::pair{[m](RunConfig& c, const std::string& v) { c.*m = parse_number<double>(v); },
                             [m](const RunConfig& c) { return format_real(c.*m); }};
        };
        auto integer = [](int RunConfig::*m) {
            return std::pair{[m](RunConfig& c, const std::string& v) { c.*m = parse_number<int>(v); },
                             [m](const RunConfig& c) { return std::to_string(c.*m); }};
        };
        auto optional_real = [](std::optional<double> RunConfig::*m) {
            return std::pair{
                [m](RunConfig& c, const std::string& v) {
                    if (v == "auto")
                        (c.*m).reset();
                    else
                        c.*m = parse_number<double>(v);
                },
                [m](const RunConfig& c) { return (c.*m) ? format_real(*(c.*m)) : std::string("auto"); }};
        };
        auto add = [&k](std::string name, std::string help, auto accessors, bool flag = false) {
            k.push_back({std::move(name), std::move(help), accessors.first, accessors.second, flag});
        };

        add("l0", "Bragg index (even, >= 2; order = l0/2)", integer(&RunConfig::l0));
        add("chi-bar", "coupling per photon chi / w_rec", real(&RunConfig::chi_bar));
        add("field", "initial field: coherent | fock",
            std::pair{[](RunConfig& c, const std::string& v) {
                          if (v == "coherent")
                              c.field = FieldKind::Coherent;
                          else if (v == "fock")
                              c.field = FieldKind::Fock;
                          else
                              throw ConfigError("field must be 'coherent' or 'fock', got '" + v + "'");
                      },
                      [](const RunConfig& c) {
                          return std::string(c.field == FieldKind::Coherent ? "coherent" : "fock");
                      }});
        add("mean", "coherent-state mean photon number", real(&RunConfig::mean));
        add("n", "photon number (pendellosung) or Fock index (fock field)", integer(&RunConfig::n));
        add("n-max", "photon-number truncation, 0 = automatic", integer(&RunConfig::n_max));
        add("t-lo", "lower interaction time of the uniform schedule, or auto",
            optional_real(&RunConfig::t_lo));
        add("t-hi", "upper interaction time of the uniform schedule, or auto",
            optional_real(&RunConfig::t_hi));
        add("times", "comma-separated fixed interaction times (replaces the uniform schedule)",
            std::pair{[](RunConfig& c, const std::string& v) {
                          c.times = v.empty() ? std::vector<double>{} : parse_list(v);
                      },
                      [](const RunConfig& c) { return join(c.times); }});
        add("atoms", "reconstruction atom budget",
            std::pair{[](RunConfig& c, const std::string& v) { c.atom_budget = parse_number<long>(v); },
                      [](const RunConfig& c) { return std::to_string(c.atom_budget); }});
        add("max-atoms", "atom cap per collapse trial", integer(&RunConfig::max_atoms));
        add("collapse-eps", "collapse when max posterior >= 1 - eps", real(&RunConfig::collapse_eps));
        add("detector", "two-sided | single",
            std::pair{[](RunConfig& c, const std::string& v) {
                          if (v == "two-sided")
                              c.single_detector = false;
                          else if (v == "single")
                              c.single_detector = true;
                          else
                              throw ConfigError("detector must be 'two-sided' or 'single', got '" + v + "'");
                      },
                      [](const RunConfig& c) { return std::string(c.single_detector ? "single" : "two-sided"); }});
        add("l-min", "lowest lattice site (even)", integer(&RunConfig::l_min));
        add("l-max", "highest lattice site (even)", integer(&RunConfig::l_max));
        add("tol", "integrator tolerance", real(&RunConfig::tol));
        add("t-max", "end of the pendellosung time grid", real(&RunConfig::t_max));
        add("samples", "number of pendellosung sample times", integer(&RunConfig::samples));
        add("seed", "master seed (unsigned 64-bit)",
            std::pair{[](RunConfig& c, const std::string& v) { c.seed = parse_number<std::uint64_t>(v); },
                      [](const RunConfig& c) { return std::to_string(c.seed); }});
        add("threads", "worker threads, 0 = all cores",
            std::pair{[](RunConfig& c, const std::string& v) { c.threads = parse_number<unsigned>(v); },
                      [](const RunConfig& c) { return std::to_string(c.threads); }});
        add("out", "output directory",
            std::pair{[](RunConfig& c, const std::string& v) { c.out = v; },
                      [](const RunConfig& c) { return c.out.string(); }});
        add("format", "csv | json (params: text | json)",
            std::pair{[](RunConfig& c, const std::string& v) {
                          if (v == "csv")
                              c.format = OutputFormat::Csv;
                          else if (v == "json")
                              c.format = OutputFormat::Json;
                          else if (v == "text")
                              c.format = OutputFormat::Text;
                          else if (v == "auto")
                              c.format.reset();
                          else
                              throw ConfigError("format must be csv, json or text, got '" + v + "'");
                      },
                      [](const RunConfig& c) {
                          return c.format ? std::string(to_string(*c.format)) : std::string("auto");
                      }});
        add("trial-log", "also export the per-atom log of every reconstruction trial",
            std::pair{[](RunConfig& c, const std::string& v) { c.trial_log = parse_bool(v); },
                      [](const RunConfig& c) { return std::string(c.trial_log ? "true" : "false"); }},
            true);
        add("mass", "atomic mass, kg", real(&RunConfig::mass));
        add("wavelength", "field wavelength, m", real(&RunConfig::wavelength));
        add("g-hz", "vacuum Rabi coupling g / 2pi, Hz", real(&RunConfig::g_hz));
        add("detuning-hz", "detuning / 2pi, Hz", real(&RunConfig::detuning_hz));
        return k;
    }();
    return table;
}

const Key* find_key(std::string name)
{
    std::replace(name.begin(), name.end(), '_', '-');
    for (const auto& k : keys())
    {
        if (k.name == name)
            return &k;
    }
    return nullptr;
}

//---------------------------------------------------------------------------//
// Builders

BraggGeometry make_geometry(const RunConfig& c)
{
    return BraggGeometry(c.l0, c.chi_bar);
}

PhotonDistribution make_prior(const RunConfig& c)
{
    const int n_max = resolved_n_max(c);
    return c.field == FieldKind::Coherent ? make_coherent(c.mean, n_max) : make_fock(c.n, n_max);
}

double nominal_mean(const RunConfig& c)
{
    return c.field == FieldKind::Coherent ? c.mean : static_cast<double>(c.n);
}

TimeSchedule make_schedule(const RunConfig& c)
{
    if (!c.times.empty())
        return TimeSchedule::fixed(c.times);
    const auto geometry = make_geometry(c);
    const auto fallback = default_schedule(geometry, nominal_mean(c));
    return TimeSchedule::uniform(c.t_lo.value_or(fallback.t_lo()), c.t_hi.value_or(fallback.t_hi()));
}

CollapseOptions make_options(const RunConfig& c, bool snapshots)
{
    return {c.max_atoms, c.collapse_eps, c.single_detector ? DetectorMode::Single : DetectorMode::TwoSided,
            snapshots};
}

//---------------------------------------------------------------------------//
// Output helpers

double rounded(double x)
{
    return std::stod(format_real(x));
}

json real_or_null(double x)
{
    return std::isfinite(x) ? json(rounded(x)) : json(nullptr);
}

std::ofstream open_output(const RunConfig& c, const std::string& name, std::vector<std::string>& written)
{
    std::filesystem::create_directories(c.out);
    const auto path = c.out / name;
    std::ofstream os(path, std::ios::binary | std::ios::trunc);
    if (!os)
        throw std::runtime_error("cannot open " + path.string() + " for writing");
    written.push_back(name);
    return os;
}

void write_json_file(const RunConfig& c, const std::string& name, const json& j,
                     std::vector<std::string>& written)
{
    auto os = open_output(c, name, written);
    os << j.dump(2) << '\n';
}

json config_json(const RunConfig& c)
{
    json j = json::object();
    for (const auto& k : keys())
    {
        const std::string v = k.get(c);
        const json parsed = json::parse(v, nullptr, false);
        j[k.name] = parsed.is_number() || parsed.is_boolean() ? parsed : json(v);
    }
    return j;
}

void write_manifest(const RunConfig& c, std::vector<std::string>& written)
{
    json m;
    m["experiment"] = std::string(to_string(c.experiment));
    m["config"] = config_json(c);
    m["outputs"] = written;
    std::vector<std::string> ignored;
    write_json_file(c, std::string(to_string(c.experiment)) + "_manifest.json", m, ignored);
}

OutputFormat data_format(const RunConfig& c)
{
    return c.format.value_or(OutputFormat::Csv) == OutputFormat::Json ? OutputFormat::Json
                                                                      : OutputFormat::Csv;
}

json distribution_rows(const PhotonDistribution& p)
{
    json rows = json::array();
    for (std::size_t n = 0; n < p.size(); ++n)
        rows.push_back({{"n", n}, {"probability", rounded(p[n])}});
    return rows;
}

std::vector<double> time_grid(const RunConfig& c)
{
    std::vector<double> t(static_cast<std::size_t>(c.samples));
    for (int i = 0; i < c.samples; ++i)
        t[i] = c.samples == 1 ? 0.0 : c.t_max * i / (c.samples - 1);
    return t;
}

}  // namespace

//---------------------------------------------------------------------------//

void apply_config_text(RunConfig& config, std::istream& in, const std::string& source)
{
    std::string line;
    int number = 0;
    while (std::getline(in, line))
    {
        ++number;
        const auto hash = line.find('#');
        const std::string body = trim(line.substr(0, hash));
        if (body.empty())
            continue;
        const auto where = source + ":" + std::to_string(number) + ": ";
        const auto eq = body.find('=');
        if (eq == std::string::npos)
            throw ConfigError(where + "expected 'key = value'");
        const std::string name = trim(body.substr(0, eq));
        const std::string value = trim(body.substr(eq + 1));
        const Key* key = find_key(name);
        if (!key)
            throw ConfigError(where + "unknown key '" + name + "'");
        try
        {
            key->set(config, value);
        }
        catch (const ConfigError& e)
        {
            throw ConfigError(where + name + ": " + e.what());
        }
    }
}

namespace
{

void apply_manifest(RunConfig& config, const json& manifest, const std::string& source)
{
    if (!manifest.contains("config") || !manifest["config"].is_object())
        throw ConfigError(source + ": JSON config must hold a 'config' object");
    for (const auto& [name, value] : manifest["config"].items())
    {
        const Key* key = find_key(name);
        if (!key)
            throw ConfigError(source + ": unknown key '" + name + "'");
        try
        {
            key->set(config, value.is_string() ? value.get<std::string>() : value.dump());
        }
        catch (const ConfigError& e)
        {
            throw ConfigError(source + ": " + name + ": " + e.what());
        }
    }
}

void apply_config_file(RunConfig& config, const std::filesystem::path& path)
{
    std::ifstream in(path, std::ios::binary);
    if (!in)
        throw ConfigError("cannot read config file " + path.string());
    std::stringstream buffer;
    buffer << in.rdbuf();
    const std::string text = buffer.str();
    const auto first = text.find_first_not_of(" \t\r\n");
    if (first != std::string::npos && text[first] == '{')
    {
        json j;
        try
        {
            j = json::parse(text);
        }
        catch (const json::parse_error& e)
        {
            throw ConfigError(path.string() + ": " + e.what());
        }
        apply_manifest(config, j, path.string());
        return;
    }
    std::istringstream lines(text);
    apply_config_text(config, lines, path.string());
}

}  // namespace

int resolved_n_max(const RunConfig& config)
{
    if (config.n_max > 0)
        return config.n_max;
    if (config.field == FieldKind::Fock)
        return std::max(30, config.n);
    return default_n_max(config.mean);
}

void validate(const RunConfig& c)
{
    auto fail = [](const std::string& what) { throw ConfigError(what); };
    try
    {
        const auto geometry = make_geometry(c);
        switch (c.experiment)
        {
        case Experiment::Pendellosung:
            if (c.n < 0)
                fail("n must be >= 0");
            (void)initial_state(geometry, c.n, c.l_min, c.l_max);
            if (!(c.tol > 0.0) || c.tol > 1e-4)
                fail("tol must lie in (0, 1e-4]");
            if (!std::isfinite(c.t_max) || c.t_max < 0.0)
                fail("t-max must be finite and >= 0");
            if (c.samples < 2)
                fail("samples must be >= 2");
            break;
        case Experiment::Collapse:
        case Experiment::Reconstruct:
            (void)make_prior(c);
            (void)make_schedule(c);
            if (c.max_atoms < 1)
                fail("max-atoms must be >= 1");
            if (!(c.collapse_eps > 0.0) || !(c.collapse_eps < 1.0))
                fail("collapse-eps must lie in (0, 1)");
            if (c.experiment == Experiment::Reconstruct && c.atom_budget < c.max_atoms)
                fail("atoms (budget) must be >= max-atoms");
            break;
        case Experiment::Params:
            bragg_qnd::validate(AtomFieldParams{c.mass, c.wavelength, 2.0 * std::numbers::pi * c.g_hz,
                                                2.0 * std::numbers::pi * c.detuning_hz});
            if (resolved_n_max(c) < 1)
                fail("n-max must be >= 1");
            break;
        }
    }
    catch (const std::invalid_argument& e)
    {
        throw ConfigError(e.what());
    }
}

//---------------------------------------------------------------------------//

int run_pendellosung(const RunConfig& c, std::ostream& out)
{
    const auto geometry = make_geometry(c);
    const auto times = time_grid(c);
    const auto trace = sample_trace(geometry, initial_state(geometry, c.n, c.l_min, c.l_max), times, c.tol);
    const double analytic_b = coefficients(geometry, c.n).b_freq;

    std::vector<double> deflected;
    deflected.reserve(trace.size());
    double max_leakage = 0.0, max_norm_dev = 0.0, max_boundary = 0.0, max_gap = 0.0;
    std::vector<OutcomeProbabilities> analytic;
    analytic.reserve(trace.size());
    for (const auto& s : trace)
    {
        deflected.push_back(s.occ_minus_l0);
        max_leakage = std::max(max_leakage, s.leakage);
        max_norm_dev = std::max(max_norm_dev, std::abs(s.norm - 1.0));
        max_boundary = std::max(max_boundary, s.boundary);
        analytic.push_back(two_level_probabilities(geometry, c.n, s.t_bar));
        max_gap = std::max(max_gap, std::abs(s.occ_minus_l0 - analytic.back().q_deflect));
    }
    const double fitted = fitted_flip_frequency(times, deflected);
    const double rel_error = fitted > 0.0 && analytic_b > 0.0 ? std::abs(fitted - analytic_b) / analytic_b
                                                              : std::nan("");

    std::vector<std::string> written;
    if (data_format(c) == OutputFormat::Csv)
    {
        auto numeric = open_output(c, "pendellosung_numeric.csv", written);
        write_csv(numeric, trace);
        auto an = open_output(c, "pendellosung_analytic.csv", written);
        an << "t_bar,q_stay,q_deflect\n";
        for (std::size_t i = 0; i < trace.size(); ++i)
            an << format_real(trace[i].t_bar) << ',' << format_real(analytic[i].q_stay) << ','
               << format_real(analytic[i].q_deflect) << '\n';
    }
    else
    {
        json numeric = json::array(), an = json::array();
        for (std::size_t i = 0; i < trace.size(); ++i)
        {
            const auto& s = trace[i];
            numeric.push_back({{"t_bar", rounded(s.t_bar)},
                               {"occ_0", rounded(s.occ_0)},
                               {"occ_minus_l0", rounded(s.occ_minus_l0)},
                               {"leakage", rounded(s.leakage)},
                               {"norm", rounded(s.norm)}});
            an.push_back({{"t_bar", rounded(s.t_bar)},
                          {"q_stay", rounded(analytic[i].q_stay)},
                          {"q_deflect", rounded(analytic[i].q_deflect)}});
        }
        write_json_file(c, "pendellosung_numeric.json", numeric, written);
        write_json_file(c, "pendellosung_analytic.json", an, written);
    }

    const auto validity = bragg_validity(c.chi_bar, std::max(1, c.n));
    json summary{{"l0", c.l0},
                 {"chi_bar", rounded(c.chi_bar)},
                 {"n", c.n},
                 {"analytic_b", rounded(analytic_b)},
                 {"fitted_b", fitted > 0.0 ? json(rounded(fitted)) : json(nullptr)},
                 {"relative_error", real_or_null(rel_error)},
                 {"max_leakage", rounded(max_leakage)},
                 {"max_norm_deviation", rounded(max_norm_dev)},
                 {"max_boundary_occupation", rounded(max_boundary)},
                 {"max_numeric_analytic_gap", rounded(max_gap)},
                 {"bragg_ratio", rounded(validity.ratio)},
                 {"bragg_status", std::string(to_string(validity.status))}};
    write_json_file(c, "pendellosung_summary.json", summary, written);
    write_manifest(c, written);

    out << "analytic B      " << format_real(analytic_b) << '\n'
        << "fitted B        " << (fitted > 0.0 ? format_real(fitted) : std::string("n/a")) << '\n'
        << "relative error  " << (std::isfinite(rel_error) ? format_real(rel_error) : std::string("n/a")) << '\n'
        << "max leakage     " << format_real(max_leakage) << '\n'
        << "max |norm - 1|  " << format_real(max_norm_dev) << '\n';
    return kExitOk;
}

int run_collapse(const RunConfig& c, std::ostream& out)
{
    const auto geometry = make_geometry(c);
    const auto prior = make_prior(c);
    const auto schedule = make_schedule(c);
    Rng rng = Rng::for_stream(c.seed, 0);
    const auto record = run_collapse(prior, geometry, schedule, rng, make_options(c, true));

    std::vector<std::string> written;
    if (data_format(c) == OutputFormat::Csv)
    {
        auto log = open_output(c, "collapse_trial_log.csv", written);
        write_trial_log_header(log);
        write_trial_log(log, 0, record);
        auto snaps = open_output(c, "collapse_snapshots.csv", written);
        snaps << "atom_index,n,probability\n";
        auto emit = [&snaps](std::size_t atom, const PhotonDistribution& p) {
            for (std::size_t n = 0; n < p.size(); ++n)
                snaps << atom << ',' << n << ',' << format_real(p[n]) << '\n';
        };
        emit(0, prior);
        for (std::size_t i = 0; i < record.snapshots.size(); ++i)
            emit(i + 1, record.snapshots[i]);
    }
    else
    {
        json log = json::array();
        for (std::size_t i = 0; i < record.events.size(); ++i)
            log.push_back({{"trial", 0},
                           {"atom_index", i + 1},
                           {"t_bar", rounded(record.events[i].t_bar)},
                           {"outcome", std::string(to_string(record.events[i].outcome))},
                           {"max_posterior_n", record.peaks[i].first},
                           {"max_posterior_p", rounded(record.peaks[i].second)}});
        write_json_file(c, "collapse_trial_log.json", log, written);
        json snaps = json::array();
        snaps.push_back({{"atom_index", 0}, {"distribution", distribution_rows(prior)}});
        for (std::size_t i = 0; i < record.snapshots.size(); ++i)
            snaps.push_back({{"atom_index", i + 1}, {"distribution", distribution_rows(record.snapshots[i])}});
        write_json_file(c, "collapse_snapshots.json", snaps, written);
    }

    json summary{{"collapsed", record.collapsed_n.has_value()},
                 {"collapsed_n", record.collapsed_n ? json(*record.collapsed_n) : json(nullptr)},
                 {"atoms_used", record.atoms_used},
                 {"max_posterior_p", rounded(record.posterior.max_probability())},
                 {"schedule_t_lo", rounded(schedule.t_lo())},
                 {"schedule_t_hi", rounded(schedule.t_hi())}};
    write_json_file(c, "collapse_summary.json", summary, written);
    write_manifest(c, written);

    out << "atoms used      " << record.atoms_used << '\n'
        << "collapsed to    " << (record.collapsed_n ? std::to_string(*record.collapsed_n) : std::string("none"))
        << '\n';
    return kExitOk;
}

int run_reconstruct(const RunConfig& c, std::ostream& out)
{
    const auto geometry = make_geometry(c);
    const auto prior = make_prior(c);
    const auto schedule = make_schedule(c);
    const auto options = make_options(c, false);
    const auto result = reconstruct(prior, geometry, schedule, c.seed, c.atom_budget, options, c.threads);
    const double tvd = total_variation(result.estimate, prior);
    const double mean = distribution_mean(result.estimate);

    std::vector<std::string> written;
    if (data_format(c) == OutputFormat::Csv)
    {
        auto hist = open_output(c, "reconstruct_histogram.csv", written);
        write_csv(hist, result);
        auto pr = open_output(c, "reconstruct_prior.csv", written);
        write_csv(pr, prior);
    }
    else
    {
        json hist = json::array();
        for (std::size_t n = 0; n < result.histogram.size(); ++n)
            hist.push_back({{"n", n}, {"count", result.histogram[n]}, {"estimate", rounded(result.estimate[n])}});
        write_json_file(c, "reconstruct_histogram.json", hist, written);
        write_json_file(c, "reconstruct_prior.json", distribution_rows(prior), written);
    }
    if (c.trial_log)
    {
        // Regenerates each trial from its own stream; identical to the trials
        // folded into the histogram.
        auto log = open_output(c, "reconstruct_trial_log.csv", written);
        write_trial_log_header(log);
        const long total = result.trials + result.failed_trials;
        for (long i = 0; i < total; ++i)
        {
            Rng rng = Rng::for_stream(c.seed, static_cast<std::uint64_t>(i));
            write_trial_log(log, i, run_collapse(prior, geometry, schedule, rng, options));
        }
    }

    json summary{{"trials", result.trials},
                 {"total_atoms", result.total_atoms},
                 {"failed_trials", result.failed_trials},
                 {"tvd_vs_prior", rounded(tvd)},
                 {"mean", rounded(mean)}};
    write_json_file(c, "reconstruct_summary.json", summary, written);
    write_manifest(c, written);

    out << "trials          " << result.trials << " (+" << result.failed_trials << " failed)\n"
        << "total atoms     " << result.total_atoms << '\n'
        << "tvd vs prior    " << format_real(tvd) << '\n'
        << "mean            " << format_real(mean) << '\n';
    return kExitOk;
}

int run_params(const RunConfig& c, std::ostream& out)
{
    const AtomFieldParams p{c.mass, c.wavelength, 2.0 * std::numbers::pi * c.g_hz,
                            2.0 * std::numbers::pi * c.detuning_hz};
    const double w_rec = recoil_frequency(p);
    const double chi = effective_rabi_per_photon(p);
    const double ratio_chi = chi / w_rec;
    const int n_max = resolved_n_max(c);
    const auto validity = bragg_validity(ratio_chi, n_max);
    const double two_pi = 2.0 * std::numbers::pi;

    json j{{"w_rec_rad_per_s", rounded(w_rec)},
           {"w_rec_over_2pi_hz", rounded(w_rec / two_pi)},
           {"chi_rad_per_s", rounded(chi)},
           {"chi_over_2pi_hz", rounded(chi / two_pi)},
           {"chi_bar", rounded(ratio_chi)},
           {"g_over_detuning", rounded(detuning_ratio(p))},
           {"n_max", n_max},
           {"validity_ratio", rounded(validity.ratio)},
           {"validity_status", std::string(to_string(validity.status))}};

    std::vector<std::string> written;
    if (c.format.value_or(OutputFormat::Text) == OutputFormat::Json)
    {
        out << j.dump(2) << '\n';
    }
    else
    {
        const std::pair<const char*, std::string> rows[] = {
            {"w_rec [rad/s]", format_real(w_rec)},
            {"w_rec / 2pi [Hz]", format_real(w_rec / two_pi)},
            {"chi [rad/s]", format_real(chi)},
            {"chi / 2pi [Hz]", format_real(chi / two_pi)},
            {"chi_bar = chi / w_rec", format_real(ratio_chi)},
            {"g / detuning", format_real(detuning_ratio(p))},
            {"chi_bar * n_max", format_real(validity.ratio) + " (n_max = " + std::to_string(n_max) + ")"},
            {"Bragg regime", std::string(to_string(validity.status))},
        };
        for (const auto& [name, value] : rows)
            out << std::left << std::setw(24) << name << value << '\n';
    }
    write_json_file(c, "params.json", j, written);
    write_manifest(c, written);
    return kExitOk;
}

//---------------------------------------------------------------------------//

int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err)
{
    CLI::App app{"Bragg-scattering QND measurement of a cavity field"};
    app.require_subcommand(1);

    std::map<std::string, std::string> given;
    std::map<std::string, bool> flags;
    std::string config_path;
    app.add_option("--config", config_path, "key = value config file (or a run manifest)");

    for (const auto& k : keys())
    {
        if (k.is_flag)
            app.add_flag("--" + k.name, flags[k.name], k.help);
        else
            app.add_option("--" + k.name, given[k.name], k.help);
    }

    const std::pair<const char*, Experiment> commands[] = {
        {"pendellosung", Experiment::Pendellosung},
        {"collapse", Experiment::Collapse},
        {"reconstruct", Experiment::Reconstruct},
        {"params", Experiment::Params},
    };
    const char* descriptions[] = {
        "lattice vs two-level population flips for a Fock field",
        "one seeded measurement sequence collapsing the field",
        "repeated collapses reconstructing the photon statistics",
        "laboratory parameters to dimensionless quantities",
    };
    std::vector<CLI::App*> subs;
    for (std::size_t i = 0; i < std::size(commands); ++i)
    {
        auto* sub = app.add_subcommand(commands[i].first, descriptions[i]);
        sub->fallthrough();
        subs.push_back(sub);
    }

    try
    {
        app.parse(argc, argv);
    }
    catch (const CLI::CallForHelp&)
    {
        out << app.help();
        return kExitOk;
    }
    catch (const CLI::ParseError& e)
    {
        err << "error: " << e.what() << '\n';
        return kExitConfig;
    }

    RunConfig config;
    for (std::size_t i = 0; i < subs.size(); ++i)
    {
        if (subs[i]->parsed())
            config.experiment = commands[i].second;
    }
    try
    {
        if (!config_path.empty())
        {
            config.config_file = config_path;
            apply_config_file(config, config_path);
        }
        for (const auto& k : keys())
        {
            const auto* opt = app.get_option("--" + k.name);
            if (opt->count() == 0)
                continue;
            try
            {
                k.set(config, k.is_flag ? std::string(flags[k.name] ? "true" : "false") : given[k.name]);
            }
            catch (const ConfigError& e)
            {
                throw ConfigError("--" + k.name + ": " + e.what());
            }
        }
        validate(config);
    }
    catch (const ConfigError& e)
    {
        err << "config error: " << e.what() << '\n';
        return kExitConfig;
    }

    try
    {
        switch (config.experiment)
        {
        case Experiment::Pendellosung:
            return run_pendellosung(config, out);
        case Experiment::Collapse:
            return run_collapse(config, out);
        case Experiment::Reconstruct:
            return run_reconstruct(config, out);
        case Experiment::Params:
            return run_params(config, out);
        }
    }
    catch (const std::exception& e)
    {
        err << "runtime error: " << e.what() << '\n';
        return kExitRuntime;
    }
    return kExitRuntime;
}

}  // namespace bragg_qnd::cli
