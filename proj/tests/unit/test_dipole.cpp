#include <doctest.h>

#include <cmath>

#include "reqsim/dipole.hpp"

using namespace reqsim;

namespace {

DipoleParams base_params() {
    DipoleParams p;
    p.epsilon = 3.0;
    p.delta_mu = 1.0e-31;
    p.excited_density = 1.0e22;
    return p;
}

// trapezoid convolution of two unit-area Lorentzians, evaluated at x
double conv_value(double x, double g1, double g2) {
    const double T = 3000.0, dx = 0.05;
    auto lor = [](double t, double g) {
        const double h = 0.5 * g;
        return h / (pi * (t * t + h * h));
    };
    double s = 0.0;
    for (double t = -T; t <= T; t += dx)
        s += lor(t, g1) * lor(x - t, g2);
    return s * dx;
}

}  // namespace

TEST_SUITE_BEGIN("dipole");

TEST_CASE("pair_shift matches direct evaluation") {
    DipoleParams p = base_params();
    const std::array<double, 3> z{0, 0, 1}, xhat{1, 0, 0};
    const std::array<double, 3> r{0, 0, 5e-9};

    const double zz = pair_shift(z, z, r, p);
    const double xx = pair_shift(xhat, xhat, r, p);
    CHECK(zz == doctest::Approx(-1.205682214e6).epsilon(1e-8));
    CHECK(xx == doctest::Approx(6.028411068e5).epsilon(1e-8));
    CHECK(xx == -0.5 * zz);  // angular factor +1 vs -2, exactly

    // magic angle: both dipoles at arccos(1/sqrt(3)) to r
    const double c = 1.0 / std::sqrt(3.0), s = std::sqrt(2.0 / 3.0);
    const std::array<double, 3> tilted{s, 0, c};
    const std::array<double, 3> rz{0, 0, 7e-9};
    CHECK(std::abs(pair_shift(tilted, tilted, rz, p)) < 1.0);  // Hz

    // local-field exponent: epsilon = 3 gives a 5/3 step between powers
    DipoleParams p2 = p;
    p2.local_field_power = 2;
    CHECK(pair_shift(z, z, r, p2) ==
          doctest::Approx(zz * 5.0 / 3.0).epsilon(1e-12));
}

TEST_CASE("pair_shift preconditions") {
    DipoleParams p = base_params();
    const std::array<double, 3> z{0, 0, 1};
    CHECK_THROWS_AS(pair_shift(z, z, {0, 0, 0.1e-9}, p), ValidationError);
    CHECK_THROWS_AS(pair_shift({0, 0, 2}, z, {0, 0, 5e-9}, p),
                    ValidationError);
    DipoleParams bad = p;
    bad.volume_radius = bad.exclusion_radius / 2;
    CHECK_THROWS_AS(bad.validate(), ValidationError);
    bad = p;
    bad.local_field_power = 3;
    CHECK_THROWS_AS(bad.validate(), ValidationError);
}

TEST_CASE("excited_fraction arithmetic") {
    Material m = load_material("builtin:tm_yag");  // 10 GHz flat line
    CHECK(excited_fraction(m, -5.0, 5.0, 0.5) ==
          doctest::Approx(5.0e-4).epsilon(1e-12));
    CHECK(excited_fraction(m, 3.0, 3.0, 1.0) == 0.0);
    CHECK(excited_fraction(m, 100.0, 150.0, 0.25) ==
          doctest::Approx(0.25 * 50.0 / 10000.0).epsilon(1e-12));

    Material y = load_material("builtin:eu_yalo3_153");  // 4 GHz flat line
    CHECK(excited_fraction(y, -25.0, 25.0, 1.0) ==
          doctest::Approx(1.25e-2).epsilon(1e-12));

    CHECK_THROWS_AS(excited_fraction(m, -6000.0, 0.0, 1.0), ValidationError);
    CHECK_THROWS_AS(excited_fraction(m, 0.0, 5001.0, 1.0), ValidationError);
    CHECK_THROWS_AS(excited_fraction(m, 0.0, 1.0, 1.5), ValidationError);
    CHECK_THROWS_AS(excited_fraction(m, 2.0, 1.0, 0.5), ValidationError);

    // gaussian profile: a +-3 FWHM window holds essentially all the line
    Material g = m;
    g.profile_shape = ProfileShape::gaussian;
    const double full = excited_fraction(g, -30000.0, 30000.0, 0.8);
    CHECK(full == doctest::Approx(0.8).epsilon(1e-9));
    CHECK(excited_fraction(g, -30000.0, 0.0, 0.8) ==
          doctest::Approx(0.4).epsilon(1e-9));
}

TEST_CASE("zero density and pinned perturber modes") {
    DipoleParams p = base_params();
    p.excited_density = 0.0;
    auto shifts = sample_shifts(p, 500, 11);
    for (double s : shifts) CHECK(s == 0.0);

    // exactly one perturber at a fixed displacement, fixed orientations:
    // every trial reproduces the pair_shift value
    DipoleParams pin = base_params();
    pin.orientation_model = OrientationModel::fixed_axis;
    pin.pinned_r = {0, 0, 5e-9};
    const double expect =
        pair_shift({0, 0, 1}, {0, 0, 1}, {0, 0, 5e-9}, pin) * 1e-6;
    auto pinned = sample_shifts(pin, 2000, 3);
    for (double s : pinned) CHECK(s == expect);

    // concentrated histogram: everything in one bin, and the fit refuses it
    auto hist = make_histogram(pinned, 3);
    std::int64_t nonzero = 0, total = 0;
    for (auto c : hist.counts) {
        total += c;
        if (c) ++nonzero;
    }
    CHECK(total == 2000);
    CHECK(nonzero == 1);
    CHECK_THROWS_AS(fit_lorentzian(hist), ValidationError);
}

TEST_CASE("histogram accounting and determinism across workers") {
    DipoleParams p = base_params();
    auto a = sample_shifts(p, 20000, 42, 1);
    auto b = sample_shifts(p, 20000, 42, 7);
    REQUIRE(a.size() == b.size());
    for (size_t i = 0; i < a.size(); ++i) REQUIRE(a[i] == b[i]);

    auto h = make_histogram(a, 42);
    REQUIRE(h.counts.size() == 2001);
    REQUIRE(h.bin_edges.size() == 2002);
    std::int64_t total = 0;
    for (auto c : h.counts) total += c;
    CHECK(total == 20000);
    for (size_t i = 0; i + 1 < h.bin_edges.size(); ++i)
        CHECK(h.bin_edges[i] < h.bin_edges[i + 1]);
    auto h2 = make_histogram(a, 42);
    CHECK(h.bin_edges == h2.bin_edges);
    CHECK(h.counts == h2.counts);
}

TEST_CASE("exact mu^2 scaling of sampled shifts") {
    DipoleParams p = base_params();
    DipoleParams p4 = p;
    p4.delta_mu = 2.0 * p.delta_mu;
    auto s1 = sample_shifts(p, 4000, 7);
    auto s4 = sample_shifts(p4, 4000, 7);
    for (size_t i = 0; i < s1.size(); ++i) REQUIRE(s4[i] == 4.0 * s1[i]);
}

TEST_CASE("exact lambda^-3 position rescaling") {
    DipoleParams p = base_params();
    p.volume_radius = 1.5e-7;
    DipoleParams q = p;
    q.excited_density = p.excited_density / 8.0;
    q.exclusion_radius = 2.0 * p.exclusion_radius;
    q.volume_radius = 2.0 * p.volume_radius;
    auto s1 = sample_shifts(p, 4000, 19);
    auto s2 = sample_shifts(q, 4000, 19);
    for (size_t i = 0; i < s1.size(); ++i) REQUIRE(s1[i] == 8.0 * s2[i]);
}

TEST_CASE("lorentzian fit recovers a synthetic distribution") {
    // inverse-CDF samples of a centered Lorentzian, FWHM exactly 1 MHz
    std::vector<double> xs(1000000);
    for (size_t i = 0; i < xs.size(); ++i) {
        TrialRng rng(77, 9, i);
        xs[i] = 0.5 * std::tan(pi * (rng.uniform() - 0.5));
    }
    auto fit = fit_lorentzian(make_histogram(xs, 77));
    CHECK(fit.fwhm == doctest::Approx(1.0).epsilon(0.02));
    CHECK(std::abs(fit.center) < 5e-3);
    CHECK(fit.rms_residual < 0.02);
    CHECK(fit.amplitude == doctest::Approx(2.0 / (pi * 1.0)).epsilon(0.05));
}

TEST_CASE("physical displacement distribution is Lorentzian and density-linear") {
    DipoleParams p;
    p.epsilon = 16.0;
    p.delta_mu = 2.3e-31;
    p.excited_density = 2.4e22;
    auto f1 = fit_lorentzian(sample_displacement(p, 60000, 1));
    CHECK(f1.rms_residual < 0.05);
    CHECK(std::abs(f1.center) < 0.05 * f1.fwhm);

    DipoleParams p2 = p;
    p2.excited_density = 2.0 * p.excited_density;
    auto f2 = fit_lorentzian(sample_displacement(p2, 60000, 1));
    CHECK(f2.fwhm / f1.fwhm == doctest::Approx(2.0).epsilon(0.05));
}

TEST_CASE("volume boundary convergence") {
    DipoleParams p;
    p.epsilon = 16.0;
    p.delta_mu = 2.3e-31;
    p.excited_density = 2.4e22;
    const double rt = std::cbrt(3.0 / (4.0 * pi * p.excited_density));
    p.volume_radius = 4.0 * rt;
    auto f1 = fit_lorentzian(sample_displacement(p, 60000, 23));
    p.volume_radius = 8.0 * rt;
    auto f2 = fit_lorentzian(sample_displacement(p, 60000, 23, 4));
    CHECK(std::abs(f2.fwhm - f1.fwhm) / f1.fwhm < 0.02);
}

TEST_CASE("lorentzian widths add under convolution") {
    CHECK(broadened_hole_fwhm(0.7, 0.0) == 0.7);
    CHECK(broadened_hole_fwhm(0.5, 0.9) == doctest::Approx(1.4));
    CHECK_THROWS_AS(broadened_hole_fwhm(-0.1, 1.0), ValidationError);

    // numeric convolution oracle
    const double peak = conv_value(0.0, 0.7, 1.3);
    double lo = 0.0, hi = 4.0;
    for (int i = 0; i < 40; ++i) {
        const double mid = 0.5 * (lo + hi);
        (conv_value(mid, 0.7, 1.3) > 0.5 * peak ? lo : hi) = mid;
    }
    const double numeric_fwhm = lo + hi;  // symmetric distribution
    CHECK(numeric_fwhm == doctest::Approx(2.0).epsilon(0.02));
    CHECK(broadened_hole_fwhm(0.7, 1.3) ==
          doctest::Approx(numeric_fwhm).epsilon(0.02));
}

TEST_CASE("broadening curve: zero bandwidth, linearity, slope") {
    Material m = load_material("builtin:eu_yalo3_153");
    auto pts = broadening_vs_bandwidth(m, {0.0, 4.0, 8.0, 16.0, 40.0}, 1.0,
                                       40000, 2026);
    REQUIRE(pts.size() == 5);
    CHECK(pts[0].fwhm_mhz == 0.0);

    // least-squares linearity over one decade (4..40 MHz)
    double sx = 0, sy = 0, sxx = 0, sxy = 0, syy = 0;
    const int n = 4;
    for (int i = 1; i <= n; ++i) {
        sx += pts[i].bandwidth_mhz;
        sy += pts[i].fwhm_mhz;
        sxx += pts[i].bandwidth_mhz * pts[i].bandwidth_mhz;
        sxy += pts[i].bandwidth_mhz * pts[i].fwhm_mhz;
        syy += pts[i].fwhm_mhz * pts[i].fwhm_mhz;
    }
    const double r = (n * sxy - sx * sy) /
                     std::sqrt((n * sxx - sx * sx) * (n * syy - sy * sy));
    CHECK(r * r > 0.99);
    CHECK(broadening_slope_khz_per_mhz(pts) > 0.0);
    CHECK_THROWS_AS(
        broadening_vs_bandwidth(m, {}, 1.0, 1000, 1), ValidationError);
}

TEST_CASE("calibrate_mu closed-form scaling") {
    Material m = load_material("builtin:tm_yag");
    const double mu1 = calibrate_mu(m, 3.0, 20000, 5);
    const double mu2 = calibrate_mu(m, 6.0, 20000, 5);
    CHECK(mu1 > 0.0);
    CHECK(mu2 / mu1 == doctest::Approx(std::sqrt(2.0)).epsilon(0.01));
    CHECK_THROWS_AS(calibrate_mu(m, 0.0, 1000, 5), ValidationError);
    CHECK_THROWS_AS(calibrate_mu(m, -1.0, 1000, 5), ValidationError);
}

TEST_CASE("delayed broadening follows the decay law") {
    DipoleParams p;
    p.epsilon = 11.7;
    p.delta_mu = 1.5e-31;
    p.excited_density = 3.0e22;
    const double t1 = 0.8;
    const double fwhm_static =
        fit_lorentzian(sample_displacement(p, 30000, 9)).fwhm;

    CHECK(delayed_broadening(p, 0.0, t1, DelayMode::burn_during_perturb, 30000,
                             9) == 0.0);
    CHECK(delayed_broadening(p, 1000.0 * t1, t1,
                             DelayMode::burn_during_perturb, 30000,
                             9) == fwhm_static);
    const double half = delayed_broadening(
        p, t1 * std::log(2.0), t1, DelayMode::burn_before_perturb, 30000, 9);
    CHECK(half == doctest::Approx(0.5 * fwhm_static).epsilon(1e-6));
    CHECK_THROWS_AS(delayed_broadening(p, -1.0, t1,
                                       DelayMode::burn_during_perturb, 1000, 9),
                    ValidationError);
}

TEST_SUITE_END();
