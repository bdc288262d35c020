#pragma once

#include <optional>
#include <string>
#include <vector>

#include "reqsim/constants.hpp"
#include "reqsim/spectrum.hpp"

namespace reqsim {

enum class PulseKind { burn_fixed, burn_scan, readout_scan };

const char* to_string(PulseKind k);

struct Pulse {
    PulseKind kind = PulseKind::burn_fixed;
    double center = 0.0;     // burn_fixed only (MHz)
    double lo = 0.0;         // burn_scan / readout_scan band (MHz)
    double hi = 0.0;
    double duration_ms = 1.0;
    int repetitions = 1;
    double strength = default_pump_strength;  // saturation parameter s
    void validate() const;
};

struct PulseSequence {
    std::string material_ref;  // file path or builtin:<name>
    Material material;
    std::vector<Pulse> pulses;
    void validate() const;
};

// largest |transition offset| over all isotopes; grid windows must carry at
// least this margin around any pulsed or probed frequency
double max_transition_offset(const Material& material);

// window [lo, hi] widened by the transition margin plus pad, aligned to the
// bin lattice
GridSpec auto_grid(const Material& material, double lo_mhz, double hi_mhz,
                   double pad_mhz = 8.0,
                   double bin_width = default_bin_width_mhz);

// One pulse, all repetitions. Burn pulses saturate each resonant ground level
// with probability p = 1 - exp(-s * K * t/tau0) per repetition and
// redistribute removed population over the branching ratios; fixed burns use
// the Lorentzian laser kernel K, scans deposit the swept-dose equivalent
// uniformly over covered bins. Readout scans leave the state untouched and
// return the smoothed trace over their band.
std::optional<AbsorptionTrace> apply_pulse(
    SpectralState& state, const Pulse& pulse,
    double kernel_fwhm_mhz = default_kernel_fwhm_mhz,
    double tau0_ms = default_pump_tau0_ms);

// Pulses in order; returns the traces of readout pulses.
std::vector<AbsorptionTrace> run_sequence(
    SpectralState& state, const PulseSequence& seq,
    double kernel_fwhm_mhz = default_kernel_fwhm_mhz,
    double tau0_ms = default_pump_tau0_ms);

struct SequenceResult {
    SpectralState state;
    std::vector<AbsorptionTrace> traces;
};

// Convenience: auto-grid from the sequence's frequency extent, fresh state,
// run. This is what the CLI drives.
SequenceResult run_program(const PulseSequence& seq,
                           double kernel_fwhm_mhz = default_kernel_fwhm_mhz,
                           double tau0_ms = default_pump_tau0_ms);

// Canonical qubit-isolation program on the reference (first) isotope, qubit
// class centered at 0: empty wells of width well_width around the q0 and q1
// ground transitions, funnel a peak_width-wide class group into q1 by
// alternating aux pumping with q0-well cleaning, then read out across both
// wells.
struct PrepareResult {
    SpectralState state;
    AbsorptionTrace trace;    // final readout
    PulseSequence program;    // the program that was run
    double well0_mhz = 0.0;   // q0 well center
    double well1_mhz = 0.0;   // q1 well center (holds the peak)
    double well_floor = 0.0;  // max bin-resolution alpha in wells, peak excluded
    double peak_height = 0.0; // max bin-resolution alpha in the peak region
    double funneled_fraction = 0.0;  // funneled-class population now in q1
};

PrepareResult prepare_qubit(const Material& material, double well_width_mhz,
                            double peak_width_mhz);

// Steady-state well emptying: alternating scans over wells at 0 and
// `separation` until no population moves by more than steady_state_tol per
// scan (or the scan budget runs out). Residual is the worst bin-resolution
// relative absorption left inside the wells.
struct FeasibilityReport {
    std::string material;
    double well_width_mhz = 0.0;
    double separation_mhz = 0.0;
    bool feasible = false;
    double residual = 0.0;
    int scans_used = 0;
    bool converged = false;
};

FeasibilityReport well_feasibility(const Material& material,
                                   double well_width_mhz,
                                   double separation_mhz);

// Largest feasible well width on a 0.1 MHz grid (0 if even 0.1 MHz fails).
// Relies on feasibility being monotone in width.
double max_feasible_width(const Material& material, double separation_mhz);

}  // namespace reqsim
