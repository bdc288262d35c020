#include "reqsim/pump.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <sstream>

namespace reqsim {

namespace {

double sq(double x) { return x * x; }

// first/last bin whose center lies inside [lo, hi] (closed, fp-guarded)
long band_lo_index(const GridSpec& g, double lo) {
    return std::lround(
        std::ceil((lo - g.window_lo) / g.bin_width - 0.5 - 1e-9));
}
long band_hi_index(const GridSpec& g, double hi) {
    return std::lround(
        std::floor((hi - g.window_lo) / g.bin_width - 0.5 + 1e-9));
}

// per-repetition removal probabilities of one pulse, compressed to touched bins
struct BinDose {
    long bin;
    std::array<double, 3> p{0.0, 0.0, 0.0};
};

struct PulseMap {
    std::vector<std::vector<BinDose>> per_iso;
};

PulseMap build_pulse_map(const SpectralState& state, const Pulse& pulse,
                         double kernel_fwhm_mhz, double tau0_ms) {
    const GridSpec& g = state.grid;
    long nb = g.bins();
    int nl = state.nlev;
    double bw = g.bin_width;
    double dose_unit = pulse.strength * pulse.duration_ms / tau0_ms;
    long margin =
        std::lround(std::ceil(edge_margin_mult * kernel_fwhm_mhz / bw));
    long cut =
        std::lround(std::ceil(kernel_cutoff_mult * kernel_fwhm_mhz / bw));

    PulseMap map;
    for (const auto& iso : state.material.isotopes) {
        map.per_iso.emplace_back();
        if (iso.levels() == 1) continue;  // no storage level: pumping is a no-op
        std::vector<double> dose(nb * nl, 0.0);

        if (pulse.kind == PulseKind::burn_fixed) {
            long i = g.index_of(pulse.center);
            for (int gl = 0; gl < nl; ++gl) {
                for (int e = 0; e < nl; ++e) {
                    double off = transition_offset(iso, gl, e);
                    long bc = std::llround(static_cast<double>(i) - off / bw);
                    if (bc - margin < 0 || bc + margin >= nb) {
                        std::ostringstream os;
                        os << "pulse: burning " << pulse.center
                           << " MHz needs classes outside the window (via "
                           << iso.name << " offset " << off << " MHz)";
                        throw EdgeError(os.str());
                    }
                    long b0 = std::max<long>(0, bc - cut);
                    long b1 = std::min<long>(nb - 1, bc + cut);
                    for (long b = b0; b <= b1; ++b) {
                        double det = static_cast<double>(i - b) * bw - off;
                        double k =
                            1.0 / (1.0 + sq(2.0 * det / kernel_fwhm_mhz));
                        dose[b * nl + gl] += dose_unit * k;
                    }
                }
            }
        } else {  // burn_scan
            long jlo = band_lo_index(g, pulse.lo);
            long jhi = band_hi_index(g, pulse.hi);
            if (jlo > jhi) continue;  // band narrower than a bin: nothing covered
            double span = static_cast<double>(jhi - jlo + 1) * bw;
            double dose_in =
                dose_unit * (pi * kernel_fwhm_mhz / 2.0) / span;
            for (int gl = 0; gl < nl; ++gl) {
                for (int e = 0; e < nl; ++e) {
                    double off = transition_offset(iso, gl, e);
                    long joff = std::llround(off / bw);
                    long b0 = jlo - joff;
                    long b1 = jhi - joff;
                    if (b0 < 0 || b1 >= nb) {
                        std::ostringstream os;
                        os << "pulse: scan " << pulse.lo << ".." << pulse.hi
                           << " MHz needs classes outside the window (via "
                           << iso.name << " offset " << off << " MHz)";
                        throw EdgeError(os.str());
                    }
                    for (long b = b0; b <= b1; ++b)
                        dose[b * nl + gl] += dose_in;
                }
            }
        }

        auto& entries = map.per_iso.back();
        for (long b = 0; b < nb; ++b) {
            bool touched = false;
            for (int gl = 0; gl < nl; ++gl)
                if (dose[b * nl + gl] > 0.0) touched = true;
            if (!touched) continue;
            BinDose bd;
            bd.bin = b;
            for (int gl = 0; gl < nl; ++gl)
                bd.p[gl] = -std::expm1(-dose[b * nl + gl]);
            entries.push_back(bd);
        }
    }
    return map;
}

// one repetition; returns the largest population change
double apply_pulse_map(SpectralState& state, const PulseMap& map) {
    const std::array<double, 3>& br = state.material.branching;
    int nl = state.nlev;
    double delta = 0.0;
    for (size_t s = 0; s < map.per_iso.size(); ++s) {
        double* pop = state.pop[s].data();
        for (const BinDose& bd : map.per_iso[s]) {
            double* cell = pop + bd.bin * nl;
            double removed[3];
            double total = 0.0;
            for (int gl = 0; gl < nl; ++gl) {
                removed[gl] = cell[gl] * bd.p[gl];
                total += removed[gl];
            }
            for (int gl = 0; gl < nl; ++gl) {
                double nv = cell[gl] - removed[gl] + total * br[gl];
                delta = std::max(delta, std::fabs(nv - cell[gl]));
                cell[gl] = nv;
            }
        }
    }
    return delta;
}

double pulse_extent_lo(const Pulse& p) {
    return p.kind == PulseKind::burn_fixed ? p.center : p.lo;
}
double pulse_extent_hi(const Pulse& p) {
    return p.kind == PulseKind::burn_fixed ? p.center : p.hi;
}

}  // namespace

const char* to_string(PulseKind k) {
    switch (k) {
        case PulseKind::burn_fixed: return "burn_fixed";
        case PulseKind::burn_scan: return "burn_scan";
        case PulseKind::readout_scan: return "readout_scan";
    }
    return "?";
}

void Pulse::validate() const {
    if (!(duration_ms > 0.0))
        throw ValidationError("pulse: duration must be positive");
    if (repetitions < 1)
        throw ValidationError("pulse: repetitions must be >= 1");
    if (!(strength >= 0.0))
        throw ValidationError("pulse: strength must be >= 0");
    if (kind != PulseKind::burn_fixed && !(lo < hi))
        throw ValidationError("pulse: scan range must satisfy lo < hi");
}

void PulseSequence::validate() const {
    material.validate();
    if (pulses.empty())
        throw ValidationError("sequence: needs at least one pulse");
    for (const Pulse& p : pulses) p.validate();
}

double max_transition_offset(const Material& material) {
    double m = 0.0;
    for (const auto& iso : material.isotopes)
        for (int g = 0; g < iso.levels(); ++g)
            for (int e = 0; e < iso.levels(); ++e)
                m = std::max(m, std::fabs(transition_offset(iso, g, e)));
    return m;
}

GridSpec auto_grid(const Material& material, double lo_mhz, double hi_mhz,
                   double pad_mhz, double bin_width) {
    if (!(lo_mhz <= hi_mhz))
        throw ValidationError("auto_grid: empty frequency extent");
    double margin = max_transition_offset(material) + pad_mhz;
    GridSpec g;
    g.bin_width = bin_width;
    g.window_lo = std::floor((lo_mhz - margin) / bin_width) * bin_width;
    g.window_hi = std::ceil((hi_mhz + margin) / bin_width) * bin_width;
    g.validate();
    return g;
}

std::optional<AbsorptionTrace> apply_pulse(SpectralState& state,
                                           const Pulse& pulse,
                                           double kernel_fwhm_mhz,
                                           double tau0_ms) {
    pulse.validate();
    if (pulse.kind == PulseKind::readout_scan)
        return readout_trace(state, pulse.lo, pulse.hi, kernel_fwhm_mhz);
    PulseMap map = build_pulse_map(state, pulse, kernel_fwhm_mhz, tau0_ms);
    for (int r = 0; r < pulse.repetitions; ++r) apply_pulse_map(state, map);
    return std::nullopt;
}

std::vector<AbsorptionTrace> run_sequence(SpectralState& state,
                                          const PulseSequence& seq,
                                          double kernel_fwhm_mhz,
                                          double tau0_ms) {
    seq.validate();
    std::vector<AbsorptionTrace> traces;
    for (const Pulse& p : seq.pulses) {
        auto tr = apply_pulse(state, p, kernel_fwhm_mhz, tau0_ms);
        if (tr) traces.push_back(std::move(*tr));
    }
    return traces;
}

SequenceResult run_program(const PulseSequence& seq, double kernel_fwhm_mhz,
                           double tau0_ms) {
    seq.validate();
    double lo = pulse_extent_lo(seq.pulses.front());
    double hi = pulse_extent_hi(seq.pulses.front());
    for (const Pulse& p : seq.pulses) {
        lo = std::min(lo, pulse_extent_lo(p));
        hi = std::max(hi, pulse_extent_hi(p));
    }
    SequenceResult res{new_state(seq.material,
                                 auto_grid(seq.material, lo, hi)),
                       {}};
    res.traces = run_sequence(res.state, seq, kernel_fwhm_mhz, tau0_ms);
    return res;
}

PrepareResult prepare_qubit(const Material& material, double well_width_mhz,
                            double peak_width_mhz) {
    material.validate();
    if (!(well_width_mhz > 0.0) || !(peak_width_mhz > 0.0))
        throw ValidationError("prepare_qubit: widths must be positive");
    if (!(peak_width_mhz < well_width_mhz))
        throw ValidationError(
            "prepare_qubit: peak width must be below well width");
    const Isotope& target = material.reference_isotope();
    if (!target.has_hyperfine())
        throw ValidationError(
            "prepare_qubit: reference isotope has no hyperfine storage");

    int l_aux = target.level_of(LevelRole::aux);
    int l_q0 = target.level_of(LevelRole::q0);
    int l_q1 = target.level_of(LevelRole::q1);
    const double c0 = 0.0;  // qubit ion class sits at line center
    double w0 = c0 - target.ground_offsets[l_q0];
    double w1 = c0 - target.ground_offsets[l_q1];
    double aux = c0 - target.ground_offsets[l_aux];
    double hw = well_width_mhz / 2.0;
    double hp = peak_width_mhz / 2.0;

    PulseSequence seq;
    seq.material_ref = is_builtin_material(material.name)
                           ? "builtin:" + material.name
                           : material.name;
    seq.material = material;
    auto scan = [](double lo, double hi, double dur) {
        Pulse p;
        p.kind = PulseKind::burn_scan;
        p.lo = lo;
        p.hi = hi;
        p.duration_ms = dur;
        return p;
    };
    // phase 1: alternate well-emptying scans so pump-back from one well does
    // not linger in the other
    for (int k = 0; k < 60; ++k) {
        seq.pulses.push_back(scan(w0 - hw, w0 + hw, 2.0));
        seq.pulses.push_back(scan(w1 - hw, w1 + hw, 2.0));
    }
    // phase 2: pump the aux transitions of the qubit class group, re-cleaning
    // the q0 well in between; everything funnels into q1
    for (int k = 0; k < 60; ++k) {
        seq.pulses.push_back(scan(aux - hp, aux + hp, 2.0));
        seq.pulses.push_back(scan(w0 - hw, w0 + hw, 2.0));
    }
    Pulse ro;
    ro.kind = PulseKind::readout_scan;
    ro.lo = std::min(w0, w1) - well_width_mhz;
    ro.hi = std::max(w0, w1) + well_width_mhz;
    ro.duration_ms = 0.2;
    ro.strength = 0.0;
    seq.pulses.push_back(ro);

    PrepareResult res;
    res.well0_mhz = w0;
    res.well1_mhz = w1;
    SequenceResult run = run_program(seq);
    res.state = std::move(run.state);
    res.trace = std::move(run.traces.front());
    res.program = std::move(seq);

    const GridSpec& g = res.state.grid;
    long peak_lo = band_lo_index(g, w1 - hp - 2.0 * g.bin_width);
    long peak_hi = band_hi_index(g, w1 + hp + 2.0 * g.bin_width);
    auto well_scan_max = [&](double center) {
        double m = 0.0;
        long b0 = band_lo_index(g, center - hw);
        long b1 = band_hi_index(g, center + hw);
        for (long b = b0; b <= b1; ++b) {
            if (b >= peak_lo && b <= peak_hi) continue;
            m = std::max(m, raw_absorption(res.state, g.center(b)));
        }
        return m;
    };
    res.well_floor = std::max(well_scan_max(w0), well_scan_max(w1));
    double peak = 0.0;
    for (long b = peak_lo; b <= peak_hi; ++b)
        peak = std::max(peak, raw_absorption(res.state, g.center(b)));
    res.peak_height = peak;

    // funneled classes: those covered by the aux scan through the aux->e0 line
    long ja0 = band_lo_index(g, aux - hp);
    long ja1 = band_hi_index(g, aux + hp);
    long joff = std::llround(transition_offset(target, l_aux, 0) / g.bin_width);
    double in_q1 = 0.0, total = 0.0;
    for (long j = ja0; j <= ja1; ++j) {
        long b = j - joff;
        in_q1 += res.state.pop_at(0, b, l_q1);
        total += res.state.weight[0][b];
    }
    res.funneled_fraction = total > 0.0 ? in_q1 / total : 0.0;
    return res;
}

FeasibilityReport well_feasibility(const Material& material,
                                   double well_width_mhz,
                                   double separation_mhz) {
    material.validate();
    if (!(well_width_mhz > 0.0))
        throw ValidationError("feasibility: well width must be positive");
    if (!(separation_mhz > 0.0))
        throw ValidationError("feasibility: separation must be positive");

    FeasibilityReport rep;
    rep.material = material.name;
    rep.well_width_mhz = well_width_mhz;
    rep.separation_mhz = separation_mhz;

    double hw = well_width_mhz / 2.0;
    GridSpec grid = auto_grid(material, -hw, separation_mhz + hw);
    SpectralState state = new_state(material, grid);

    Pulse a, b;
    a.kind = b.kind = PulseKind::burn_scan;
    a.lo = -hw;
    a.hi = hw;
    b.lo = separation_mhz - hw;
    b.hi = separation_mhz + hw;
    a.duration_ms = b.duration_ms = 2.0;
    a.validate();
    b.validate();
    PulseMap ma = build_pulse_map(state, a, default_kernel_fwhm_mhz,
                                  default_pump_tau0_ms);
    PulseMap mb = build_pulse_map(state, b, default_kernel_fwhm_mhz,
                                  default_pump_tau0_ms);

    while (rep.scans_used < scan_budget) {
        const PulseMap& m = (rep.scans_used % 2 == 0) ? ma : mb;
        double delta = apply_pulse_map(state, m);
        ++rep.scans_used;
        if (delta < steady_state_tol) {
            rep.converged = true;
            break;
        }
    }

    double residual = 0.0;
    for (double c : {0.0, separation_mhz}) {
        long b0 = band_lo_index(grid, c - hw);
        long b1 = band_hi_index(grid, c + hw);
        for (long bin = b0; bin <= b1; ++bin)
            residual = std::max(residual,
                                raw_absorption(state, grid.center(bin)));
    }
    rep.residual = residual;
    rep.feasible =
        rep.converged && residual < feasibility_residual_threshold;
    return rep;
}

double max_feasible_width(const Material& material, double separation_mhz) {
    auto feasible_at = [&](long k) {
        return well_feasibility(material, 0.1 * static_cast<double>(k),
                                separation_mhz)
            .feasible;
    };
    long hi = std::lround(std::floor(separation_mhz / 0.1 + 1e-9));
    if (hi < 1 || !feasible_at(1)) return 0.0;
    if (feasible_at(hi)) return 0.1 * static_cast<double>(hi);
    long lo = 1;  // feasible; hi infeasible
    while (hi - lo > 1) {
        long mid = lo + (hi - lo) / 2;
        (feasible_at(mid) ? lo : hi) = mid;
    }
    return 0.1 * static_cast<double>(lo);
}

}  // namespace reqsim
