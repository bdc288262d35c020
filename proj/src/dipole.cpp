#include "reqsim/dipole.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <string>
#include <thread>

namespace reqsim {

namespace {

double median_of(std::vector<double> v) {
    const std::size_t n = v.size();
    auto mid = v.begin() + n / 2;
    std::nth_element(v.begin(), mid, v.end());
    double hi = *mid;
    if (n % 2 == 1) return hi;
    double lo = *std::max_element(v.begin(), mid);
    return 0.5 * (lo + hi);
}

}  // namespace

double DipoleParams::effective_volume_radius() const {
    if (volume_radius > 0.0) return volume_radius;
    if (excited_density <= 0.0) return 100.0 * exclusion_radius;
    const double typical =
        std::cbrt(3.0 / (4.0 * pi * excited_density));
    return std::max(6.0 * typical, 10.0 * exclusion_radius);
}

void DipoleParams::validate() const {
    if (!(epsilon >= 1.0))
        throw ValidationError("dipole params: epsilon must be >= 1");
    if (!(delta_mu >= 0.0))
        throw ValidationError("dipole params: delta_mu must be >= 0");
    if (!(excited_density >= 0.0))
        throw ValidationError("dipole params: excited_density must be >= 0");
    if (!(exclusion_radius > 0.0))
        throw ValidationError("dipole params: exclusion_radius must be > 0");
    if (!(effective_volume_radius() > exclusion_radius))
        throw ValidationError(
            "dipole params: volume_radius must exceed exclusion_radius");
    if (local_field_power != 1 && local_field_power != 2)
        throw ValidationError("dipole params: local_field_power must be 1 or 2");
    const double a2 = axis[0] * axis[0] + axis[1] * axis[1] + axis[2] * axis[2];
    if (std::abs(std::sqrt(a2) - 1.0) > 1e-9)
        throw ValidationError("dipole params: axis must be a unit vector");
}

double pair_shift(const std::array<double, 3>& mu1_dir,
                  const std::array<double, 3>& mu2_dir,
                  const std::array<double, 3>& r_vec, const DipoleParams& p) {
    auto norm = [](const std::array<double, 3>& v) {
        return std::sqrt(v[0] * v[0] + v[1] * v[1] + v[2] * v[2]);
    };
    if (std::abs(norm(mu1_dir) - 1.0) > 1e-9 ||
        std::abs(norm(mu2_dir) - 1.0) > 1e-9)
        throw ValidationError("pair_shift: dipole directions must be unit vectors");
    const double r = norm(r_vec);
    if (r < p.exclusion_radius * (1.0 - 1e-9))
        throw ValidationError("pair_shift: separation below exclusion radius");

    const std::array<double, 3> rhat{r_vec[0] / r, r_vec[1] / r, r_vec[2] / r};
    const double dot12 = mu1_dir[0] * mu2_dir[0] + mu1_dir[1] * mu2_dir[1] +
                         mu1_dir[2] * mu2_dir[2];
    const double d1r = mu1_dir[0] * rhat[0] + mu1_dir[1] * rhat[1] +
                       mu1_dir[2] * rhat[2];
    const double d2r = mu2_dir[0] * rhat[0] + mu2_dir[1] * rhat[1] +
                       mu2_dir[2] * rhat[2];
    const double angular = dot12 - 3.0 * d1r * d2r;

    double lf = (p.epsilon + 2.0) / 3.0;
    if (p.local_field_power == 2) lf *= lf;
    const double prefactor =
        lf * p.delta_mu * p.delta_mu /
        (4.0 * pi * p.epsilon * epsilon0 *
         planck_h);
    return prefactor * angular / (r * r * r);
}

double excited_fraction(const Material& m, double lo_mhz, double hi_mhz,
                        double saturation) {
    if (!(saturation >= 0.0 && saturation <= 1.0))
        throw ValidationError("excited_fraction: saturation must be in [0, 1]");
    if (!(lo_mhz <= hi_mhz))
        throw ValidationError("excited_fraction: interval must have lo <= hi");
    const double fwhm_mhz = m.inhom_fwhm * 1000.0;
    if (m.profile_shape == ProfileShape::flat) {
        const double half = 0.5 * fwhm_mhz;
        if (lo_mhz < -half - 1e-9 || hi_mhz > half + 1e-9)
            throw ValidationError(
                "excited_fraction: interval exceeds the inhomogeneous line of " +
                m.name);
        return saturation * (hi_mhz - lo_mhz) / fwhm_mhz;
    }
    // gaussian: integrate exp(-4 ln2 x^2 / F^2), normalized
    const double a = 2.0 * std::sqrt(std::log(2.0)) / fwhm_mhz;
    const double w =
        0.5 * (std::erf(a * hi_mhz) - std::erf(a * lo_mhz));
    return saturation * w;
}

std::vector<double> sample_shifts(const DipoleParams& p, std::int64_t trials,
                                  std::uint64_t seed, int workers) {
    p.validate();
    if (trials < 1)
        throw ValidationError("sample_shifts: trials must be >= 1");
    std::vector<double> shifts(static_cast<std::size_t>(trials), 0.0);

    auto run_range = [&](std::int64_t begin, std::int64_t end) {
        for (std::int64_t t = begin; t < end; ++t) {
            double total = 0.0;
            detail::visit_trial_perturbers(
                p, seed, 0, static_cast<std::uint64_t>(t),
                [&](double hz) { total += hz; });
            shifts[static_cast<std::size_t>(t)] = total * 1e-6;  // Hz -> MHz
        }
    };

    if (workers <= 1 || trials < 4096) {
        run_range(0, trials);
        return shifts;
    }
    const int nw = std::min<std::int64_t>(workers, 64);
    std::vector<std::thread> pool;
    const std::int64_t chunk = (trials + nw - 1) / nw;
    for (int w = 0; w < nw; ++w) {
        const std::int64_t b = w * chunk;
        const std::int64_t e = std::min<std::int64_t>(trials, b + chunk);
        if (b >= e) break;
        pool.emplace_back(run_range, b, e);
    }
    for (auto& th : pool) th.join();
    return shifts;
}

DisplacementHistogram make_histogram(const std::vector<double>& shifts_mhz,
                                     std::uint64_t seed) {
    if (shifts_mhz.empty())
        throw ValidationError("make_histogram: no samples");
    const std::size_t n = shifts_mhz.size();
    const std::size_t pilot_n = std::max<std::size_t>(1, n / 100);
    std::vector<double> pilot(shifts_mhz.begin(),
                              shifts_mhz.begin() + pilot_n);
    const double center = median_of(pilot);
    for (double& x : pilot) x = std::abs(x - center);
    double width = 2.0 * median_of(pilot);  // 2*MAD == Lorentzian FWHM
    if (!(width > 0.0)) {
        double span = 0.0;
        for (double x : shifts_mhz) span = std::max(span, std::abs(x - center));
        width = span > 0.0 ? span / 10.0 : 0.1;
    }

    const int nbins = 2001;
    DisplacementHistogram h;
    h.trials = static_cast<std::int64_t>(n);
    h.seed = seed;
    const double lo = center - 20.0 * width;
    const double hi = center + 20.0 * width;
    const double bw = (hi - lo) / nbins;
    h.bin_edges.resize(nbins + 1);
    for (int i = 0; i <= nbins; ++i) h.bin_edges[i] = lo + i * bw;
    h.counts.assign(nbins, 0);
    for (double x : shifts_mhz) {
        int b = static_cast<int>(std::floor((x - lo) / bw));
        b = std::clamp(b, 0, nbins - 1);
        ++h.counts[static_cast<std::size_t>(b)];
    }
    return h;
}

DisplacementHistogram sample_displacement(const DipoleParams& p,
                                          std::int64_t trials,
                                          std::uint64_t seed, int workers) {
    return make_histogram(sample_shifts(p, trials, seed, workers), seed);
}

namespace {

// 3x3 symmetric solve by Cramer's rule; returns false when singular.
bool solve3(const double a[3][3], const double b[3], double x[3]) {
    const double det = a[0][0] * (a[1][1] * a[2][2] - a[1][2] * a[2][1]) -
                       a[0][1] * (a[1][0] * a[2][2] - a[1][2] * a[2][0]) +
                       a[0][2] * (a[1][0] * a[2][1] - a[1][1] * a[2][0]);
    if (std::abs(det) < 1e-300) return false;
    const double inv = 1.0 / det;
    x[0] = inv * (b[0] * (a[1][1] * a[2][2] - a[1][2] * a[2][1]) -
                  a[0][1] * (b[1] * a[2][2] - a[1][2] * b[2]) +
                  a[0][2] * (b[1] * a[2][1] - a[1][1] * b[2]));
    x[1] = inv * (a[0][0] * (b[1] * a[2][2] - a[1][2] * b[2]) -
                  b[0] * (a[1][0] * a[2][2] - a[1][2] * a[2][0]) +
                  a[0][2] * (a[1][0] * b[2] - b[1] * a[2][0]));
    x[2] = inv * (a[0][0] * (a[1][1] * b[2] - b[1] * a[2][1]) -
                  a[0][1] * (a[1][0] * b[2] - b[1] * a[2][0]) +
                  b[0] * (a[1][0] * a[2][1] - a[1][1] * a[2][0]));
    return true;
}

double chi2_of(const std::vector<double>& x, const std::vector<double>& y,
               double A, double c, double w) {
    double s = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        const double u = (x[i] - c) / (0.5 * w);
        const double r = A / (1.0 + u * u) - y[i];
        s += r * r;
    }
    return s;
}

}  // namespace

LorentzianFit fit_lorentzian(const DisplacementHistogram& h) {
    if (h.trials < 1000)
        throw ValidationError("fit_lorentzian: need at least 1000 trials");
    const std::size_t nb = h.counts.size();
    if (nb < 12)
        throw ValidationError("fit_lorentzian: histogram too coarse");

    // interior bins only: the boundary bins absorb range clamping
    std::vector<double> x, y;
    x.reserve(nb - 2);
    y.reserve(nb - 2);
    const double binw = h.bin_width();
    int nonempty = 0;
    for (std::size_t i = 1; i + 1 < nb; ++i) {
        x.push_back(h.bin_center(i));
        y.push_back(static_cast<double>(h.counts[i]) /
                    (static_cast<double>(h.trials) * binw));
        if (h.counts[i] > 0) ++nonempty;
    }
    if (nonempty < 10)
        throw ValidationError(
            "fit_lorentzian: degenerate histogram (fewer than 10 occupied bins)");

    // initial guess: peak bin, half-maximum crossings
    std::size_t ipk = 0;
    for (std::size_t i = 1; i < y.size(); ++i)
        if (y[i] > y[ipk]) ipk = i;
    double A = y[ipk];
    double c = x[ipk];
    double xl = x.front(), xr = x.back();
    for (std::size_t i = ipk; i-- > 0;)
        if (y[i] < 0.5 * A) {
            xl = x[i];
            break;
        }
    for (std::size_t i = ipk + 1; i < y.size(); ++i)
        if (y[i] < 0.5 * A) {
            xr = x[i];
            break;
        }
    double w = std::max(xr - xl, binw);

    double lambda = 1e-3;
    double chi2 = chi2_of(x, y, A, c, w);
    for (int iter = 0; iter < 200; ++iter) {
        double jtj[3][3] = {{0, 0, 0}, {0, 0, 0}, {0, 0, 0}};
        double jtr[3] = {0, 0, 0};
        for (std::size_t i = 0; i < x.size(); ++i) {
            const double hw = 0.5 * w;
            const double u = (x[i] - c) / hw;
            const double d = 1.0 + u * u;
            const double f = A / d;
            const double r = y[i] - f;
            const double g[3] = {1.0 / d, A * 2.0 * u / (d * d * hw),
                                 A * u * u / (d * d) * 2.0 / w};
            for (int a = 0; a < 3; ++a) {
                jtr[a] += g[a] * r;
                for (int b = 0; b < 3; ++b) jtj[a][b] += g[a] * g[b];
            }
        }
        double step[3];
        double damped[3][3];
        for (int a = 0; a < 3; ++a)
            for (int b = 0; b < 3; ++b)
                damped[a][b] =
                    jtj[a][b] + (a == b ? lambda * jtj[a][a] : 0.0);
        if (!solve3(damped, jtr, step)) break;
        const double A2 = A + step[0];
        const double c2 = c + step[1];
        const double w2 = std::abs(w + step[2]);
        const double chi2b =
            (A2 > 0 && w2 > 0) ? chi2_of(x, y, A2, c2, w2) : chi2 + 1.0;
        if (chi2b < chi2) {
            const double rel = std::abs(step[0] / A) + std::abs(step[1]) +
                               std::abs(step[2] / w);
            A = A2;
            c = c2;
            w = w2;
            chi2 = chi2b;
            lambda = std::max(lambda * 0.3, 1e-12);
            if (rel < 1e-10) break;
        } else {
            lambda *= 10.0;
            if (lambda > 1e12) break;
        }
    }

    LorentzianFit fit;
    fit.center = c;
    fit.fwhm = w;
    fit.amplitude = A;
    fit.rms_residual =
        std::sqrt(chi2 / static_cast<double>(x.size())) / A;
    if (!(fit.fwhm > 0.0))
        throw ValidationError("fit_lorentzian: fit collapsed to zero width");
    return fit;
}

double broadened_hole_fwhm(double hole_fwhm_mhz, double displacement_fwhm_mhz) {
    if (hole_fwhm_mhz < 0.0 || displacement_fwhm_mhz < 0.0)
        throw ValidationError("broadened_hole_fwhm: widths must be >= 0");
    return hole_fwhm_mhz + displacement_fwhm_mhz;
}

DipoleParams material_dipole_params(const Material& m,
                                    double excited_density) {
    DipoleParams p;
    p.epsilon = m.epsilon;
    p.delta_mu = m.delta_mu;
    p.orientation_model = m.orientation_model;
    p.excited_density = excited_density;
    return p;
}

std::vector<BroadeningPoint> broadening_vs_bandwidth(
    const Material& m, const std::vector<double>& bandwidths_mhz,
    double saturation, std::int64_t trials, std::uint64_t seed, int workers) {
    if (bandwidths_mhz.empty())
        throw ValidationError("broadening_vs_bandwidth: no bandwidths given");
    std::vector<BroadeningPoint> out;
    out.reserve(bandwidths_mhz.size());
    for (double bw : bandwidths_mhz) {
        if (bw < 0.0)
            throw ValidationError(
                "broadening_vs_bandwidth: bandwidth must be >= 0");
        const double frac =
            excited_fraction(m, -0.5 * bw, 0.5 * bw, saturation);
        const double density = frac * m.dopant_density;
        if (density <= 0.0) {
            out.push_back({bw, 0.0});
            continue;
        }
        DipoleParams p = material_dipole_params(m, density);
        out.push_back(
            {bw, fit_lorentzian(sample_displacement(p, trials, seed, workers))
                     .fwhm});
    }
    return out;
}

double broadening_slope_khz_per_mhz(const std::vector<BroadeningPoint>& pts) {
    double sxx = 0.0, sxy = 0.0;
    for (const auto& p : pts) {
        sxx += p.bandwidth_mhz * p.bandwidth_mhz;
        sxy += p.bandwidth_mhz * p.fwhm_mhz;
    }
    if (sxx <= 0.0)
        throw ValidationError("broadening slope: need a nonzero bandwidth");
    return sxy / sxx * 1000.0;  // MHz/MHz -> kHz/MHz
}

double calibrate_mu(const Material& m, double observed_slope_khz_per_mhz,
                    std::int64_t trials, std::uint64_t seed, int workers) {
    if (!(observed_slope_khz_per_mhz > 0.0))
        throw ValidationError("calibrate_mu: observed slope must be > 0");
    if (!(m.delta_mu > 0.0))
        throw ValidationError("calibrate_mu: material has no dipole moment");

    // one Monte Carlo curve at the configured moment...
    const std::vector<double> bws{20.0, 50.0, 100.0};
    const double slope0 =
        broadening_slope_khz_per_mhz(broadening_vs_bandwidth(
            m, bws, 1.0, trials, seed, workers));
    if (!(slope0 > 0.0))
        throw ValidationError("calibrate_mu: model slope vanished");

    // ...then bisection on the exact slope ~ mu^2 rescaling
    auto model_slope = [&](double mu) {
        return slope0 * (mu / m.delta_mu) * (mu / m.delta_mu);
    };
    double lo = m.delta_mu * 1e-3, hi = m.delta_mu * 1e3;
    if (model_slope(lo) > observed_slope_khz_per_mhz ||
        model_slope(hi) < observed_slope_khz_per_mhz)
        throw ValidationError("calibrate_mu: slope outside bracketing range");
    double mid = 0.5 * (lo + hi);
    for (int i = 0; i < 200; ++i) {
        mid = 0.5 * (lo + hi);
        const double s = model_slope(mid);
        if (std::abs(s - observed_slope_khz_per_mhz) <=
            1e-3 * observed_slope_khz_per_mhz)
            break;
        (s < observed_slope_khz_per_mhz ? lo : hi) = mid;
    }
    return mid;
}

double delayed_broadening(const DipoleParams& p, double t_ms, double t1_ms,
                          DelayMode mode, std::int64_t trials,
                          std::uint64_t seed, int workers) {
    if (t_ms < 0.0)
        throw ValidationError("delayed_broadening: time must be >= 0");
    if (!(t1_ms > 0.0))
        throw ValidationError("delayed_broadening: T1 must be > 0");
    const double decay = std::exp(-t_ms / t1_ms);
    const double factor =
        mode == DelayMode::burn_before_perturb ? decay : 1.0 - decay;
    if (factor == 0.0) return 0.0;
    const double fwhm_static =
        fit_lorentzian(sample_displacement(p, trials, seed, workers)).fwhm;
    return fwhm_static * factor;
}

}  // namespace reqsim
