// reqsim: command-line front end over the simulation library.
//
// Exit codes: 0 success, 1 validation/parse errors (bad flags, bad inputs,
// bad sequence files), 2 internal errors. All artifacts are written via
// temp-file-then-rename so failures never leave partial outputs, and every
// stochastic command requires an explicit --seed; --workers only changes
// wall time, never bytes.

#include <CLI11.hpp>
#include <cmath>
#include <cstdint>
#include <fstream>
#include <iostream>
#include <json.hpp>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "reqsim/dipole.hpp"
#include "reqsim/distill.hpp"
#include "reqsim/pump.hpp"
#include "reqsim/report_io.hpp"
#include "reqsim/seqlang.hpp"
#include "reqsim/spectrum.hpp"

namespace {

using reqsim::ValidationError;

// ---- string -> value parsers (shared by flags and --config) ---------------

double parse_number(const std::string& text, const std::string& what) {
    const char* s = text.c_str();
    char* end = nullptr;
    const double v = std::strtod(s, &end);
    if (end == s || !std::isfinite(v))
        throw ValidationError("invalid " + what + " '" + text + "'");
    if (*end != '\0')
        throw ValidationError("trailing characters in " + what + " '" +
                              text + "'");
    return v;
}

// "100", "100MHz", "0.1GHz" -> MHz
double parse_freq_mhz(std::string text, const std::string& what) {
    double scale = 1.0;
    if (text.size() > 3 && text.substr(text.size() - 3) == "MHz") {
        text.resize(text.size() - 3);
    } else if (text.size() > 3 && text.substr(text.size() - 3) == "GHz") {
        scale = 1000.0;
        text.resize(text.size() - 3);
    }
    return scale * parse_number(text, what);
}

// "50,100,200,300MHz": a suffix on the last entry applies to bare entries
std::vector<double> parse_freq_list(const std::string& text,
                                    const std::string& what) {
    std::vector<std::string> tokens;
    std::string cur;
    for (char c : text) {
        if (c == ',') {
            tokens.push_back(cur);
            cur.clear();
        } else {
            cur += c;
        }
    }
    tokens.push_back(cur);

    std::string default_suffix;
    const std::string& last = tokens.back();
    if (last.size() > 3) {
        const std::string tail = last.substr(last.size() - 3);
        if (tail == "MHz" || tail == "GHz") default_suffix = tail;
    }
    std::vector<double> out;
    for (std::string t : tokens) {
        if (t.empty())
            throw ValidationError("empty entry in " + what + " list");
        const bool has_suffix =
            t.size() > 3 && (t.substr(t.size() - 3) == "MHz" ||
                             t.substr(t.size() - 3) == "GHz");
        if (!has_suffix) t += default_suffix;
        out.push_back(parse_freq_mhz(t, what));
    }
    return out;
}

std::int64_t parse_count(const std::string& text, const std::string& what) {
    const double v = parse_number(text, what);  // allows 1e6 notation
    if (v < 1 || v > 9e15 || v != std::floor(v))
        throw ValidationError(what + " must be a positive integer, got '" +
                              text + "'");
    return static_cast<std::int64_t>(v);
}

std::uint64_t parse_seed(const std::string& text) {
    if (text.empty() ||
        text.find_first_not_of("0123456789") != std::string::npos)
        throw ValidationError("seed must be a non-negative integer, got '" +
                              text + "'");
    return std::strtoull(text.c_str(), nullptr, 10);
}

std::string read_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw ValidationError("cannot open file " + path);
    std::ostringstream os;
    os << in.rdbuf();
    return os.str();
}

// ---- option plumbing -------------------------------------------------------

// every option value is carried as a string so --config can fill the gaps
struct Opts {
    std::string config;
    std::string material, sequence, out, ions_csv, name;
    std::string bandwidth, bandwidths, threshold, width, separation;
    std::string kernel_fwhm, saturation;
    std::string trials, seed, ions, workers;
};

void merge_config(CLI::App* sub, Opts& o, const std::string& command) {
    if (o.config.empty()) return;
    nlohmann::json cfg;
    try {
        cfg = nlohmann::json::parse(read_file(o.config));
    } catch (const nlohmann::json::exception& e) {
        throw ValidationError("bad config file " + o.config + ": " + e.what());
    }
    if (!cfg.is_object())
        throw ValidationError("config file must hold a JSON object");
    if (cfg.contains("command")) {
        const std::string c = cfg["command"].get<std::string>();
        if (c != command)
            throw ValidationError("config is for command '" + c +
                                  "', not '" + command + "'");
        cfg.erase("command");
    }

    auto fill = [&](const char* flag, const char* key, std::string& slot) {
        if (!cfg.contains(key)) return;
        if (sub->count(flag) == 0) {
            const auto& v = cfg[key];
            slot = v.is_string() ? v.get<std::string>() : v.dump();
        }
        cfg.erase(key);
    };
    fill("--material", "material", o.material);
    fill("--sequence", "sequence", o.sequence);
    fill("--out", "out", o.out);
    fill("--ions-csv", "ions_csv", o.ions_csv);
    fill("--name", "name", o.name);
    fill("--bandwidth", "bandwidth", o.bandwidth);
    fill("--bandwidths", "bandwidths", o.bandwidths);
    fill("--threshold", "threshold", o.threshold);
    fill("--width", "width", o.width);
    fill("--separation", "separation", o.separation);
    fill("--kernel-fwhm", "kernel_fwhm", o.kernel_fwhm);
    fill("--saturation", "saturation", o.saturation);
    fill("--trials", "trials", o.trials);
    fill("--seed", "seed", o.seed);
    fill("--ions", "ions", o.ions);
    fill("--workers", "workers", o.workers);
    if (!cfg.empty())
        throw ValidationError("unknown config key '" +
                              cfg.begin().key() + "'");
}

const std::string& require(const std::string& v, const char* flag) {
    if (v.empty())
        throw ValidationError(std::string("missing required option ") + flag);
    return v;
}

int get_workers(const Opts& o) {
    if (o.workers.empty()) return 1;
    const auto w = parse_count(o.workers, "worker count");
    if (w > 256) throw ValidationError("worker count out of range");
    return static_cast<int>(w);
}

double get_saturation(const Opts& o) {
    return o.saturation.empty() ? 1.0
                                : parse_number(o.saturation, "saturation");
}

reqsim::Material load_ref(const std::string& ref) {
    return reqsim::load_material(ref);
}

double default_separation(const reqsim::Material& m) {
    const reqsim::Isotope& iso = m.reference_isotope();
    if (!iso.has_hyperfine())
        throw ValidationError(
            "material " + m.name +
            " has no hyperfine structure; pass --separation explicitly");
    return std::abs(iso.ground_offsets[static_cast<std::size_t>(
                        iso.level_of(reqsim::LevelRole::q1))] -
                    iso.ground_offsets[static_cast<std::size_t>(
                        iso.level_of(reqsim::LevelRole::q0))]);
}

// ---- subcommands -----------------------------------------------------------

void run_simulate(const Opts& o) {
    const std::string& path = require(o.sequence, "--sequence");
    const std::string& out = require(o.out, "--out");
    reqsim::PulseSequence seq;
    try {
        seq = reqsim::parse_sequence(read_file(path));
    } catch (const reqsim::ParseError& e) {
        // prepend the file name, keep the parser's line:col span verbatim
        throw ValidationError(path + ":" + e.what());
    }
    if (!o.material.empty()) {
        seq.material = load_ref(o.material);
        seq.material_ref = o.material;
    } else {
        reqsim::resolve_sequence_material(seq);
    }
    const double fwhm = o.kernel_fwhm.empty()
                            ? reqsim::default_kernel_fwhm_mhz
                            : parse_freq_mhz(o.kernel_fwhm, "kernel width");
    auto result = reqsim::run_program(seq, fwhm);
    reqsim::atomic_write_file(out, reqsim::traces_to_csv(result.traces));
    std::cout << "wrote " << out << " (" << result.traces.size()
              << " readout trace(s))\n";
}

void run_dipole(const Opts& o) {
    const auto m = load_ref(require(o.material, "--material"));
    const double bw =
        parse_freq_mhz(require(o.bandwidth, "--bandwidth"), "bandwidth");
    const auto trials = parse_count(require(o.trials, "--trials"), "trials");
    const auto seed = parse_seed(require(o.seed, "--seed"));
    const std::string& out = require(o.out, "--out");

    const double frac =
        reqsim::excited_fraction(m, -0.5 * bw, 0.5 * bw, get_saturation(o));
    reqsim::DipoleParams params =
        reqsim::material_dipole_params(m, frac * m.dopant_density);
    auto hist =
        reqsim::sample_displacement(params, trials, seed, get_workers(o));
    auto fit = reqsim::fit_lorentzian(hist);
    reqsim::atomic_write_file(out,
                              reqsim::histogram_to_json(hist, fit, params));
    std::cout << "wrote " << out
              << " (fwhm " << reqsim::format_sig9(fit.fwhm) << " MHz)\n";
}

void run_broaden(const Opts& o) {
    const auto m = load_ref(require(o.material, "--material"));
    const auto bws =
        parse_freq_list(require(o.bandwidths, "--bandwidths"), "bandwidth");
    const auto trials = parse_count(require(o.trials, "--trials"), "trials");
    const auto seed = parse_seed(require(o.seed, "--seed"));
    const std::string& out = require(o.out, "--out");

    auto pts = reqsim::broadening_vs_bandwidth(m, bws, get_saturation(o),
                                               trials, seed, get_workers(o));
    reqsim::atomic_write_file(out, reqsim::broadening_to_csv(pts));
    std::cout << "wrote " << out << " (" << pts.size() << " points)\n";
}

void run_distill(const Opts& o) {
    const auto m = load_ref(require(o.material, "--material"));
    const double bw =
        parse_freq_mhz(require(o.bandwidth, "--bandwidth"), "bandwidth");
    const double threshold =
        parse_freq_mhz(require(o.threshold, "--threshold"), "threshold");
    const auto ions = parse_count(require(o.ions, "--ions"), "ion count");
    const auto seed = parse_seed(require(o.seed, "--seed"));
    const std::string& out = require(o.out, "--out");

    auto rep =
        reqsim::distill_pair(ions, m, bw, threshold, seed, get_workers(o));
    reqsim::atomic_write_file(out, reqsim::distill_to_json(rep));
    if (!o.ions_csv.empty())
        reqsim::atomic_write_file(o.ions_csv,
                                  reqsim::distill_ions_to_csv(rep));
    std::cout << "wrote " << out << " (target retained "
              << reqsim::format_sig9(rep.fraction_retained_target) << ")\n";
}

void run_feasibility(const Opts& o) {
    const auto m = load_ref(require(o.material, "--material"));
    const double width =
        parse_freq_mhz(require(o.width, "--width"), "well width");
    const double sep = o.separation.empty()
                           ? default_separation(m)
                           : parse_freq_mhz(o.separation, "separation");
    const std::string& out = require(o.out, "--out");

    auto rep = reqsim::well_feasibility(m, width, sep);
    reqsim::atomic_write_file(out, reqsim::feasibility_to_json(rep));
    std::cout << "wrote " << out << " ("
              << (rep.feasible ? "feasible" : "infeasible") << ")\n";
}

void run_materials(const Opts& o) {
    if (o.name.empty()) {
        std::string listing;
        for (const auto& n : reqsim::builtin_material_names())
            listing += n + "\n";
        if (o.out.empty())
            std::cout << listing;
        else
            reqsim::atomic_write_file(o.out, listing);
        return;
    }
    if (!reqsim::is_builtin_material(o.name))
        throw ValidationError("unknown builtin material '" + o.name + "'");
    const std::string& text = reqsim::builtin_material_json(o.name);
    if (o.out.empty())
        std::cout << text;
    else
        reqsim::atomic_write_file(o.out, text);
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{
        "reqsim: spectral hole burning, qubit-well preparation and "
        "dipole-broadening simulations for rare-earth-doped crystals"};
    app.require_subcommand(1);

    struct Sub {
        CLI::App* cmd = nullptr;
        Opts opts;
        void (*run)(const Opts&) = nullptr;
    };
    std::vector<Sub> subs(6);

    auto add_common = [](CLI::App* c, Opts& o) {
        c->add_option("--config", o.config,
                      "JSON file providing defaults for any option");
        c->add_option("--out", o.out, "output artifact path");
    };

    {
        Sub& s = subs[0];
        s.cmd = app.add_subcommand("simulate",
                                   "run a .seq program, write readout CSV");
        s.run = run_simulate;
        add_common(s.cmd, s.opts);
        s.cmd->add_option("--sequence", s.opts.sequence, "pulse program file");
        s.cmd->add_option("--material", s.opts.material,
                          "override the program's material reference");
        s.cmd->add_option("--kernel-fwhm", s.opts.kernel_fwhm,
                          "probe kernel FWHM (default 2MHz)");
    }
    {
        Sub& s = subs[1];
        s.cmd = app.add_subcommand(
            "dipole", "sample the displacement distribution, write JSON");
        s.run = run_dipole;
        add_common(s.cmd, s.opts);
        s.cmd->add_option("--material", s.opts.material, "material reference");
        s.cmd->add_option("--bandwidth", s.opts.bandwidth,
                          "excited bandwidth, e.g. 100MHz");
        s.cmd->add_option("--saturation", s.opts.saturation,
                          "excited fraction inside the band (default 1)");
        s.cmd->add_option("--trials", s.opts.trials, "Monte Carlo trials");
        s.cmd->add_option("--seed", s.opts.seed, "RNG seed (required)");
        s.cmd->add_option("--workers", s.opts.workers,
                          "thread count (never changes output bytes)");
    }
    {
        Sub& s = subs[2];
        s.cmd = app.add_subcommand("broaden",
                                   "broadening-vs-bandwidth curve, write CSV");
        s.run = run_broaden;
        add_common(s.cmd, s.opts);
        s.cmd->add_option("--material", s.opts.material, "material reference");
        s.cmd->add_option("--bandwidths", s.opts.bandwidths,
                          "comma list, e.g. 50,100,200,300MHz");
        s.cmd->add_option("--saturation", s.opts.saturation,
                          "excited fraction inside the band (default 1)");
        s.cmd->add_option("--trials", s.opts.trials,
                          "Monte Carlo trials per point");
        s.cmd->add_option("--seed", s.opts.seed, "RNG seed (required)");
        s.cmd->add_option("--workers", s.opts.workers, "thread count");
    }
    {
        Sub& s = subs[3];
        s.cmd = app.add_subcommand(
            "distill", "two-pass mutual-control distillation, write JSON");
        s.run = run_distill;
        add_common(s.cmd, s.opts);
        s.cmd->add_option("--material", s.opts.material, "material reference");
        s.cmd->add_option("--bandwidth", s.opts.bandwidth,
                          "control-channel bandwidth");
        s.cmd->add_option("--threshold", s.opts.threshold,
                          "minimum useful shift, e.g. 5MHz");
        s.cmd->add_option("--ions", s.opts.ions, "ions per qubit channel");
        s.cmd->add_option("--seed", s.opts.seed, "RNG seed (required)");
        s.cmd->add_option("--ions-csv", s.opts.ions_csv,
                          "also write the per-ion table here");
        s.cmd->add_option("--workers", s.opts.workers, "thread count");
    }
    {
        Sub& s = subs[4];
        s.cmd = app.add_subcommand(
            "feasibility", "symmetric well-emptying feasibility, write JSON");
        s.run = run_feasibility;
        add_common(s.cmd, s.opts);
        s.cmd->add_option("--material", s.opts.material, "material reference");
        s.cmd->add_option("--width", s.opts.width, "well width, e.g. 11.9MHz");
        s.cmd->add_option("--separation", s.opts.separation,
                          "well separation (default: the q0-q1 splitting)");
    }
    {
        Sub& s = subs[5];
        s.cmd = app.add_subcommand("materials",
                                   "list builtin materials or print one");
        s.run = run_materials;
        add_common(s.cmd, s.opts);
        s.cmd->add_option("--name", s.opts.name, "builtin material to print");
    }

    try {
        app.parse(argc, argv);
        for (auto& s : subs)
            if (s.cmd->parsed()) {
                merge_config(s.cmd, s.opts, s.cmd->get_name());
                s.run(s.opts);
            }
        return 0;
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    } catch (const reqsim::ParseError& e) {
        std::cerr << e.what() << "\n";
        return 1;
    } catch (const ValidationError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    } catch (const std::exception& e) {
        std::cerr << "internal error: " << e.what() << "\n";
        return 2;
    }
}
