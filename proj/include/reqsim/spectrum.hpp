#pragma once

#include <string>
#include <utility>
#include <vector>

#include "reqsim/materials.hpp"

namespace reqsim {

// Raised when a spectral evaluation would need population bins outside the
// representable window.
class EdgeError : public ValidationError {
public:
    explicit EdgeError(const std::string& what) : ValidationError(what) {}
};

// Frequency grid over optical-center offsets, MHz relative to the reference
// g=0 -> e=0 transition of a line-center ion. All pulse and readout frequencies
// snap to this lattice when applied, which keeps detunings pure functions of
// integer bin differences (translation by k bins is bit-exact).
struct GridSpec {
    double window_lo = -100.0;  // MHz
    double window_hi = 100.0;
    double bin_width = 0.05;    // MHz

    long bins() const;
    double center(long b) const { return window_lo + (static_cast<double>(b) + 0.5) * bin_width; }
    // nearest bin-center index for a frequency (may fall outside [0, bins))
    long index_of(double freq_mhz) const;
    void validate() const;
};

// Ground-level populations per (isotope, center bin). pop sums over levels to
// weight[iso][bin] (conserved by pumping); weight follows the material's
// inhomogeneous profile shape.
struct SpectralState {
    Material material;
    GridSpec grid;
    int nlev = 3;
    std::vector<std::vector<double>> pop;     // [iso][bin*nlev + level]
    std::vector<std::vector<double>> weight;  // [iso][bin]

    double& pop_at(int iso, long bin, int level) {
        return pop[iso][bin * nlev + level];
    }
    double pop_at(int iso, long bin, int level) const {
        return pop[iso][bin * nlev + level];
    }
    // max over bins of |sum_g pop - weight| (conservation diagnostic)
    double conservation_error() const;
    double total_population() const;
};

struct AbsorptionTrace {
    std::vector<double> freqs;  // MHz, snapped to bin centers
    std::vector<double> alpha;  // relative absorption, 1.0 = unburned baseline
};

// Thermal (equal-level) state with profile-shaped weights.
SpectralState new_state(const Material& material, const GridSpec& grid);

// Kernel-smoothed relative absorption at the given frequencies (snapped to the
// lattice). The smoothing kernel is the laser Lorentzian; normalization is
// against the unburned reference evaluated with the identical kernel, so a
// fresh state reads exactly 1.0 everywhere.
AbsorptionTrace absorption_spectrum(const SpectralState& state,
                                    const std::vector<double>& freqs,
                                    double kernel_fwhm_mhz = 2.0);

// Convenience: every bin center in [lo, hi].
AbsorptionTrace readout_trace(const SpectralState& state, double lo_mhz,
                              double hi_mhz, double kernel_fwhm_mhz = 2.0);

// Bin-resolution relative absorption (no kernel smoothing); used for residual
// and emptiness metrics where Lorentzian tail overlap would mask the floor.
double raw_absorption(const SpectralState& state, double freq_mhz);

// Side-hole / anti-hole offsets relative to the burn frequency, for one
// isotope: absorption decreases at the side-hole offsets and increases at the
// anti-hole offsets when every resonant class is burned. Duplicates within
// `tol` are merged. Generic 3-level splittings give 6 and 42 offsets.
struct HoleAntiholePattern {
    std::vector<double> side_holes;  // sorted, nonzero
    std::vector<double> anti_holes;  // sorted, nonzero
};

HoleAntiholePattern hole_antihole_offsets(const Isotope& iso, double tol = 1e-6);
// Union over isotopes (each category merged within tol).
HoleAntiholePattern hole_antihole_offsets(const Material& material,
                                          double tol = 1e-6);

}  // namespace reqsim
