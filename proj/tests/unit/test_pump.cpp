#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <random>
#include <vector>

#include "reqsim/constants.hpp"
#include "reqsim/materials.hpp"
#include "reqsim/pump.hpp"
#include "reqsim/spectrum.hpp"

using namespace reqsim;

namespace {

Material generic_material(std::vector<double> g, std::vector<double> e) {
    Material m;
    m.name = "generic";
    m.inhom_fwhm = 10.0;
    Isotope iso;
    iso.name = "iso";
    iso.ground_offsets = std::move(g);
    iso.excited_offsets = std::move(e);
    iso.level_roles = {LevelRole::aux, LevelRole::q0, LevelRole::q1};
    m.isotopes.push_back(std::move(iso));
    m.validate();
    return m;
}

Pulse scan_pulse(double lo, double hi, double dur_ms = 2.0, int reps = 1,
                 double s = 1.0) {
    Pulse p;
    p.kind = PulseKind::burn_scan;
    p.lo = lo;
    p.hi = hi;
    p.duration_ms = dur_ms;
    p.repetitions = reps;
    p.strength = s;
    return p;
}

// Independent feasibility bound: a class is stuck iff all of its ground
// levels can be made resonant inside the wells; minimizing the spread of one
// pick per level over {well centers} + G_g - E_e gives the widest well pair
// that leaves no class stuck.
double wstar_oracle(const Isotope& iso, double separation) {
    if (!iso.has_hyperfine()) return 0.0;
    std::vector<std::vector<double>> C(3);
    for (int g = 0; g < 3; ++g)
        for (double w0 : {0.0, separation})
            for (double e : iso.excited_offsets)
                C[g].push_back(w0 + iso.ground_offsets[g] - e);
    double best = 1e300;
    for (double c0 : C[0])
        for (double c1 : C[1])
            for (double c2 : C[2]) {
                double mx = std::max({c0, c1, c2});
                double mn = std::min({c0, c1, c2});
                best = std::min(best, mx - mn);
            }
    return best;
}

double wstar_oracle(const Material& m, double separation) {
    double best = 1e300;
    for (const auto& iso : m.isotopes)
        best = std::min(best, wstar_oracle(iso, separation));
    return best;
}

}  // namespace

TEST_SUITE("pump") {

TEST_CASE("zero-strength burn leaves the state untouched") {
    Material m = generic_material({0.0, 10.0, 30.0}, {0.0, 1.0, 3.0});
    GridSpec g = auto_grid(m, -5.0, 5.0);
    SpectralState st = new_state(m, g);
    SpectralState ref = st;
    Pulse p = scan_pulse(-2.0, 2.0, 2.0, 5, 0.0);
    apply_pulse(st, p);
    Pulse f;
    f.kind = PulseKind::burn_fixed;
    f.center = 0.0;
    f.strength = 0.0;
    apply_pulse(st, f);
    CHECK(st.pop[0] == ref.pop[0]);
}

TEST_CASE("readout returns the trace and never pumps") {
    Material m = generic_material({0.0, 10.0, 30.0}, {0.0, 1.0, 3.0});
    GridSpec g = auto_grid(m, -5.0, 5.0);
    SpectralState st = new_state(m, g);
    SpectralState ref = st;
    Pulse ro;
    ro.kind = PulseKind::readout_scan;
    ro.lo = -5.0;
    ro.hi = 5.0;
    ro.duration_ms = 0.2;
    ro.strength = 0.0;
    auto tr = apply_pulse(st, ro);
    REQUIRE(tr.has_value());
    CHECK(st.pop[0] == ref.pop[0]);
    for (double a : tr->alpha) CHECK(a == 1.0);
}

TEST_CASE("fixed burn carves the full side-hole / anti-hole pattern") {
    Material m = load_material("builtin:eu_y2sio5_153");
    GridSpec g;
    g.window_lo = -940.0;
    g.window_hi = 940.0;
    g.bin_width = default_bin_width_mhz;
    SpectralState st = new_state(m, g);

    const double nu0 = -3.7;
    Pulse burn;
    burn.kind = PulseKind::burn_fixed;
    burn.center = nu0;
    burn.duration_ms = 2.0;
    burn.strength = 1.0;
    burn.repetitions = 4;
    apply_pulse(st, burn);
    CHECK(st.conservation_error() < 1e-12);

    HoleAntiholePattern pat = hole_antihole_offsets(m.isotopes[0]);
    REQUIRE(pat.side_holes.size() == 6);
    REQUIRE(pat.anti_holes.size() == 42);
    // categories must not collide for the probes below to be meaningful
    for (double s : pat.side_holes)
        for (double a : pat.anti_holes) CHECK(std::fabs(s - a) > 1e-6);

    // each offset is judged against a nearby control: far enough from every
    // pattern line to clear the 2 MHz kernel width, near enough that the slow
    // Lorentzian-tail depression (common to both) cancels
    std::vector<double> all{0.0};
    all.insert(all.end(), pat.side_holes.begin(), pat.side_holes.end());
    all.insert(all.end(), pat.anti_holes.begin(), pat.anti_holes.end());
    auto local_control = [&](double off) {
        for (double cand : {5.05, -5.05, 7.15, -7.15, 9.35, -9.35, 12.45}) {
            bool clear = true;
            for (double o : all)
                if (std::fabs(off + cand - o) < 2.5) clear = false;
            if (clear) return raw_absorption(st, nu0 + off + cand);
        }
        REQUIRE(false);  // no control slot near this offset
        return 0.0;
    };

    CHECK(raw_absorption(st, nu0) < 0.1);  // central hole
    for (double off : pat.side_holes)
        CHECK(raw_absorption(st, nu0 + off) < local_control(off) - 0.05);
    for (double off : pat.anti_holes)
        CHECK(raw_absorption(st, nu0 + off) > local_control(off) + 0.01);
    // far control: only Lorentzian tail dust
    CHECK(raw_absorption(st, nu0 + 420.0) ==
          doctest::Approx(1.0).epsilon(0.03));
}

TEST_CASE("saturated scans reach a fixed point") {
    Material m = generic_material({0.0, 10.0, 30.0}, {0.0, 1.0, 3.0});
    GridSpec g = auto_grid(m, -5.0, 5.0);
    SpectralState st = new_state(m, g);
    Pulse p = scan_pulse(-0.5, 0.5, 2.0, 60, 1e6);
    apply_pulse(st, p);
    SpectralState before = st;
    apply_pulse(st, p);
    double worst = 0.0;
    for (size_t i = 0; i < st.pop[0].size(); ++i)
        worst = std::max(worst, std::fabs(st.pop[0][i] - before.pop[0][i]));
    CHECK(worst < 1e-9);
}

TEST_CASE("burning is monotone: hole deepens, scanned interval drains") {
    Material m = generic_material({0.0, 10.0, 30.0}, {0.0, 1.0, 3.0});
    GridSpec g = auto_grid(m, -5.0, 5.0);

    SpectralState st = new_state(m, g);
    Pulse burn;
    burn.kind = PulseKind::burn_fixed;
    burn.center = 0.0;
    burn.duration_ms = 1.0;
    burn.strength = 1.0;
    double prev = raw_absorption(st, 0.0);
    for (int r = 0; r < 15; ++r) {
        apply_pulse(st, burn);
        double cur = raw_absorption(st, 0.0);
        CHECK(cur < prev + 1e-15);
        prev = cur;
    }

    SpectralState sc = new_state(m, g);
    Pulse sweep = scan_pulse(-2.0, 2.0, 2.0, 1, 1.0);
    auto interval_mean = [&](const SpectralState& s) {
        double sum = 0.0;
        int n = 0;
        for (long i = g.index_of(-2.0); i <= g.index_of(2.0); ++i, ++n)
            sum += raw_absorption(s, g.center(i));
        return sum / n;
    };
    prev = interval_mean(sc);
    for (int r = 0; r < 15; ++r) {
        apply_pulse(sc, sweep);
        double cur = interval_mean(sc);
        CHECK(cur < prev + 1e-15);
        prev = cur;
    }
}

TEST_CASE("sequence runs are deterministic to the bit") {
    Material m = load_material("builtin:eu_y2sio5");
    PulseSequence seq;
    seq.material_ref = "builtin:eu_y2sio5";
    seq.material = m;
    seq.pulses.push_back(scan_pulse(-35.9, -23.9, 2.0, 20));
    Pulse burn;
    burn.kind = PulseKind::burn_fixed;
    burn.center = -60.0;
    burn.duration_ms = 1.5;
    burn.strength = 2.0;
    burn.repetitions = 3;
    seq.pulses.push_back(burn);
    Pulse ro;
    ro.kind = PulseKind::readout_scan;
    ro.lo = -80.0;
    ro.hi = -10.0;
    ro.duration_ms = 0.2;
    ro.strength = 0.0;
    seq.pulses.push_back(ro);

    SequenceResult r1 = run_program(seq);
    SequenceResult r2 = run_program(seq);
    CHECK(r1.state.pop == r2.state.pop);
    REQUIRE(r1.traces.size() == 1);
    CHECK(r1.traces[0].alpha == r2.traces[0].alpha);
}

TEST_CASE("sequence validation") {
    Material m = generic_material({0.0, 10.0, 30.0}, {0.0, 1.0, 3.0});
    PulseSequence seq;
    seq.material_ref = "generic";
    seq.material = m;
    CHECK_THROWS_AS(seq.validate(), ValidationError);  // no pulses
    seq.pulses.push_back(scan_pulse(3.0, -3.0));       // lo >= hi
    CHECK_THROWS_AS(seq.validate(), ValidationError);
    seq.pulses[0] = scan_pulse(-3.0, 3.0, -1.0);  // bad duration
    CHECK_THROWS_AS(seq.validate(), ValidationError);
    seq.pulses[0] = scan_pulse(-3.0, 3.0);
    seq.pulses[0].repetitions = 0;
    CHECK_THROWS_AS(seq.validate(), ValidationError);
    seq.pulses[0].repetitions = 1;
    CHECK_NOTHROW(seq.validate());
}

TEST_CASE("pulses touching classes beyond the window raise") {
    Material m = generic_material({0.0, 10.0, 30.0}, {0.0, 1.0, 3.0});
    GridSpec g{-50.0, 50.0, 0.05};
    SpectralState st = new_state(m, g);
    CHECK_THROWS_AS(apply_pulse(st, scan_pulse(40.0, 45.0)), EdgeError);
    Pulse f;
    f.kind = PulseKind::burn_fixed;
    f.center = 49.0;
    CHECK_THROWS_AS(apply_pulse(st, f), EdgeError);
    CHECK_NOTHROW(apply_pulse(st, scan_pulse(-2.0, 2.0)));
}

TEST_CASE("qubit preparation: clean host isolates the peak") {
    Material m = load_material("builtin:eu_yalo3_153");
    PrepareResult res = prepare_qubit(m, 14.0, 2.0);
    CHECK(res.well0_mhz == doctest::Approx(-59.7));
    CHECK(res.well1_mhz == doctest::Approx(-178.9));
    CHECK(res.well_floor < 0.01);
    CHECK(res.funneled_fraction > 0.9);
    CHECK(res.peak_height > 0.5);
    CHECK(res.state.conservation_error() < 1e-12);
    CHECK(!res.trace.alpha.empty());
    // program shape: alternating well scans, funnel pairs, one readout
    CHECK(res.program.pulses.size() == 241);
    CHECK(res.program.pulses.back().kind == PulseKind::readout_scan);
}

TEST_CASE("qubit preparation: natural-mix host leaves well residue") {
    Material m = load_material("builtin:eu_y2sio5");
    PrepareResult res = prepare_qubit(m, 12.0, 2.0);
    CHECK(res.well_floor > 0.01);  // coincident anti-holes keep wells dirty
}

TEST_CASE("qubit preparation rejects bad widths") {
    Material m = load_material("builtin:eu_yalo3_153");
    CHECK_THROWS_AS(prepare_qubit(m, 14.0, 14.0), ValidationError);
    CHECK_THROWS_AS(prepare_qubit(m, 14.0, 15.0), ValidationError);
    CHECK_THROWS_AS(prepare_qubit(m, -1.0, 0.5), ValidationError);
    Material tm = load_material("builtin:tm_yag");
    CHECK_THROWS_AS(prepare_qubit(tm, 14.0, 2.0), ValidationError);
}

TEST_CASE("well feasibility matches the interval oracle at the bound") {
    Material iso153 = load_material("builtin:eu_y2sio5_153");
    CHECK(wstar_oracle(iso153, 76.4) == doctest::Approx(11.9).epsilon(1e-12));
    CHECK(well_feasibility(iso153, 11.0, 76.4).feasible);
    CHECK(well_feasibility(iso153, 11.9, 76.4).feasible);
    CHECK(!well_feasibility(iso153, 12.0, 76.4).feasible);
    CHECK(!well_feasibility(iso153, 13.0, 76.4).feasible);

    Material nat = load_material("builtin:eu_y2sio5");
    CHECK(wstar_oracle(nat, 57.2) == doctest::Approx(0.4).epsilon(1e-12));
    CHECK(well_feasibility(nat, 0.3, 57.2).feasible);
    CHECK(well_feasibility(nat, 0.4, 57.2).feasible);
    FeasibilityReport bad = well_feasibility(nat, 1.0, 57.2);
    CHECK(!bad.feasible);
    CHECK(bad.residual > feasibility_residual_threshold);

    Material yap = load_material("builtin:eu_yalo3_153");
    CHECK(wstar_oracle(yap, 119.2) == doctest::Approx(20.8).epsilon(1e-12));
    CHECK(well_feasibility(yap, 20.8, 119.2).feasible);
    CHECK(!well_feasibility(yap, 21.0, 119.2).feasible);
}

TEST_CASE("feasibility details: residual, convergence, tiny wells") {
    Material iso153 = load_material("builtin:eu_y2sio5_153");
    FeasibilityReport ok = well_feasibility(iso153, 11.0, 76.4);
    CHECK(ok.converged);
    CHECK(ok.residual < 1e-6);
    CHECK(ok.scans_used < scan_budget);
    FeasibilityReport stuck = well_feasibility(iso153, 13.0, 76.4);
    CHECK(stuck.residual > 0.01);

    // sub-bin wells cover nothing and are trivially feasible
    Material nat = load_material("builtin:eu_y2sio5");
    CHECK(well_feasibility(nat, 0.04, 57.2).feasible);
    CHECK_THROWS_AS(well_feasibility(nat, -1.0, 57.2), ValidationError);
    CHECK_THROWS_AS(well_feasibility(nat, 1.0, 0.0), ValidationError);
}

TEST_CASE("maximum width search lands on the oracle bound") {
    Material nat = load_material("builtin:eu_y2sio5");
    CHECK(max_feasible_width(nat, 57.2) == doctest::Approx(0.4).epsilon(1e-9));
}

TEST_CASE("simulated feasibility tracks the oracle on random splittings") {
    std::mt19937_64 rng(77031);
    std::uniform_real_distribution<double> ug(8.0, 40.0);
    std::uniform_real_distribution<double> us(30.0, 60.0);
    int done = 0;
    while (done < 2) {
        double g1 = ug(rng), g2 = ug(rng), e1 = ug(rng), e2 = ug(rng);
        if (g1 > g2) std::swap(g1, g2);
        if (e1 > e2) std::swap(e1, e2);
        if (g2 - g1 < 1.0 || e2 - e1 < 1.0) continue;
        Material m = generic_material({0.0, g1, g1 + g2}, {0.0, e1, e1 + e2});
        double sep = us(rng);
        double ws = wstar_oracle(m, sep);
        if (ws < 3.0) continue;
        CHECK(well_feasibility(m, 0.95 * ws, sep).feasible);
        CHECK(!well_feasibility(m, 1.1 * ws, sep).feasible);
        ++done;
    }
}

}  // TEST_SUITE
