#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <vector>

#include "reqsim/constants.hpp"
#include "reqsim/materials.hpp"
#include "reqsim/rng.hpp"

namespace reqsim {

// Parameters of the excited-ion dipole field around a probe ion.
struct DipoleParams {
    double epsilon = 1.0;   // relative static dielectric constant
    double delta_mu = 0.0;  // |ground<->excited dipole moment difference|, C*m
    OrientationModel orientation_model = OrientationModel::isotropic_random;
    double excited_density = 0.0;  // excited perturbers / m^3
    double exclusion_radius = default_exclusion_radius_m;  // m
    // Sampling sphere radius (m). 0 selects 6x the typical perturber spacing,
    // which keeps the mean perturber count at ~216 and the 1/r^3 tail
    // truncation error well below fit noise.
    double volume_radius = 0.0;
    // Exponent on the (epsilon+2)/3 local-field factor. The model equation
    // uses one power; part of the literature squares it, so it is data, not
    // code.
    int local_field_power = 1;
    // Dipole direction used by OrientationModel::fixed_axis.
    std::array<double, 3> axis{0.0, 0.0, 1.0};
    // Degenerate test mode: exactly one perturber at this displacement every
    // trial instead of the Poisson environment.
    std::optional<std::array<double, 3>> pinned_r;

    double effective_volume_radius() const;
    void validate() const;
};

// Sampled displacement distribution D(dnu). Out-of-range shifts are clamped
// into the boundary bins so that sum(counts) == trials; fits skip those two
// bins.
struct DisplacementHistogram {
    std::vector<double> bin_edges;  // MHz, counts.size() + 1, strictly increasing
    std::vector<std::int64_t> counts;
    std::int64_t trials = 0;
    std::uint64_t seed = 0;

    double bin_width() const { return bin_edges[1] - bin_edges[0]; }
    double bin_center(std::size_t i) const {
        return 0.5 * (bin_edges[i] + bin_edges[i + 1]);
    }
};

struct LorentzianFit {
    double center = 0.0;     // MHz
    double fwhm = 0.0;       // MHz
    double amplitude = 0.0;  // peak probability density, 1/MHz
    double rms_residual = 0.0;  // rms misfit relative to the peak
};

// Frequency shift (Hz) of a probe transition caused by one excited perturber
// with dipole direction mu2_dir displaced by r_vec from the probe (dipole
// direction mu1_dir). Direction arguments must be unit vectors.
double pair_shift(const std::array<double, 3>& mu1_dir,
                  const std::array<double, 3>& mu2_dir,
                  const std::array<double, 3>& r_vec, const DipoleParams& p);

// Fraction of all dopant ions excited when [lo, hi] (MHz, relative to line
// center) is driven to `saturation`. Flat profiles are top-hats of full width
// inhom_fwhm; gaussian profiles integrate the normalized line shape.
double excited_fraction(const Material& m, double lo_mhz, double hi_mhz,
                        double saturation);

namespace detail {

// One trial's perturber environment. All Monte Carlo consumers (displacement
// sampling, distillation) share this function so a (seed, stream, trial)
// triple always reproduces the same geometry, independent of worker count.
// Draw order per trial: probe orientation (isotropic model only), Poisson
// count, then per perturber: radius, displacement direction, orientation.
// fn(shift_hz) is called once per perturber.
template <class Fn>
void visit_trial_perturbers(const DipoleParams& p, std::uint64_t seed,
                            std::uint64_t stream, std::uint64_t trial,
                            Fn&& fn) {
    TrialRng rng(seed, stream, trial);

    std::array<double, 3> probe = p.axis;
    if (p.orientation_model == OrientationModel::isotropic_random)
        rng.unit_vector(probe.data());

    if (p.pinned_r) {
        std::array<double, 3> mu = p.axis;
        if (p.orientation_model == OrientationModel::isotropic_random)
            rng.unit_vector(mu.data());
        fn(pair_shift(probe, mu, *p.pinned_r, p));
        return;
    }

    const double R = p.effective_volume_radius();
    const double rex = p.exclusion_radius;
    const double shell = 4.0 / 3.0 * pi *
                         (R * R * R - rex * rex * rex);
    const long n = rng.poisson(p.excited_density * shell);
    const double fmin3 = (rex * rex * rex) / (R * R * R);
    for (long k = 0; k < n; ++k) {
        const double u = rng.uniform();
        const double r = R * std::cbrt(fmin3 + u * (1.0 - fmin3));
        std::array<double, 3> dir;
        rng.unit_vector(dir.data());
        std::array<double, 3> mu = p.axis;
        if (p.orientation_model == OrientationModel::isotropic_random)
            rng.unit_vector(mu.data());
        const std::array<double, 3> rv{r * dir[0], r * dir[1], r * dir[2]};
        fn(pair_shift(probe, mu, rv, p));
    }
}

}  // namespace detail

// Total shift (MHz) seen by trial-indexed probe ions. Deterministic for a
// fixed seed under any worker count.
std::vector<double> sample_shifts(const DipoleParams& p, std::int64_t trials,
                                  std::uint64_t seed, int workers = 1);

// Auto-ranged histogram (2001 bins over +-20x a robust pilot width estimate).
DisplacementHistogram make_histogram(const std::vector<double>& shifts_mhz,
                                     std::uint64_t seed);

DisplacementHistogram sample_displacement(const DipoleParams& p,
                                          std::int64_t trials,
                                          std::uint64_t seed, int workers = 1);

// Levenberg-Marquardt least squares of a / (1 + ((x-c)/(w/2))^2) against the
// bin probability densities (boundary clamp bins excluded).
LorentzianFit fit_lorentzian(const DisplacementHistogram& h);

// Width of a Lorentzian hole after convolution with a Lorentzian displacement
// distribution: widths add.
double broadened_hole_fwhm(double hole_fwhm_mhz, double displacement_fwhm_mhz);

// Dipole parameters of `m` with a given excited-perturber density.
DipoleParams material_dipole_params(const Material& m, double excited_density);

struct BroadeningPoint {
    double bandwidth_mhz = 0.0;
    double fwhm_mhz = 0.0;
};

// Chains excited_fraction -> excited density -> displacement sampling -> fit
// for each bandwidth (interval centered on the line).
std::vector<BroadeningPoint> broadening_vs_bandwidth(
    const Material& m, const std::vector<double>& bandwidths_mhz,
    double saturation, std::int64_t trials, std::uint64_t seed,
    int workers = 1);

// Least-squares through-origin slope of a broadening curve, kHz per MHz.
double broadening_slope_khz_per_mhz(const std::vector<BroadeningPoint>& pts);

// Effective |delta mu| (C*m) reproducing an observed broadening slope
// (kHz fwhm per MHz excited bandwidth) at saturation 1. Runs one Monte Carlo
// curve at the material's configured moment and exploits the exact
// fwhm ~ |mu|^2 scaling; the bisection then works on the rescaled model.
double calibrate_mu(const Material& m, double observed_slope_khz_per_mhz,
                    std::int64_t trials, std::uint64_t seed, int workers = 1);

enum class DelayMode { burn_before_perturb, burn_during_perturb };

// Displacement FWHM (MHz) when probing a time t_ms after/while the perturbing
// excitation decays with lifetime t1_ms. burn_before_perturb: the perturbing
// population has decayed to exp(-t/T1) of the static case. burn_during:
// it has grown to 1 - exp(-t/T1). Uses the linear width-vs-density law on one
// static Monte Carlo run.
double delayed_broadening(const DipoleParams& p, double t_ms, double t1_ms,
                          DelayMode mode, std::int64_t trials,
                          std::uint64_t seed, int workers = 1);

}  // namespace reqsim
