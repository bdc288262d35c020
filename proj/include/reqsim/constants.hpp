#pragma once

namespace reqsim {

// CODATA/SI exact values
inline constexpr double planck_h   = 6.62607015e-34;    // J s
inline constexpr double epsilon0   = 8.8541878128e-12;  // F/m
inline constexpr double pi         = 3.141592653589793;

// engine-wide defaults
inline constexpr double default_kernel_fwhm_mhz = 2.0;   // laser Lorentzian FWHM
inline constexpr double default_bin_width_mhz   = 0.05;
inline constexpr double default_pump_strength   = 1.0;   // saturation parameter s
// pump-rate calibration: exponent per repetition is s*K(detuning)*t/tau0.
// 1 ms makes the canonical 60 x 2 ms well program deplete below 1e-4.
inline constexpr double default_pump_tau0_ms    = 1.0;
inline constexpr double default_exclusion_radius_m = 0.35e-9;

// absorption evaluation: kernel support truncated at cutoff_mult * fwhm on
// each side; probes must keep edge_margin_mult * fwhm of class coverage
inline constexpr double kernel_cutoff_mult = 50.0;
inline constexpr double edge_margin_mult   = 3.0;

// feasibility analysis
inline constexpr double feasibility_residual_threshold = 1e-3;
inline constexpr double steady_state_tol   = 1e-9;
inline constexpr int    scan_budget        = 10000;

}  // namespace reqsim
