#include "reqsim/distill.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <thread>

namespace reqsim {

namespace {

// RNG stream ids; stream 0 belongs to plain displacement sampling
constexpr std::uint64_t stream_target = 1;
constexpr std::uint64_t stream_control = 2;
constexpr std::uint64_t stream_thin_control = 3;
constexpr std::uint64_t stream_thin_target = 4;

void for_each_trial(std::int64_t n, int workers,
                    const std::function<void(std::int64_t)>& fn) {
    if (workers <= 1 || n < 4096) {
        for (std::int64_t i = 0; i < n; ++i) fn(i);
        return;
    }
    const int nw = static_cast<int>(std::min<std::int64_t>(workers, 64));
    const std::int64_t chunk = (n + nw - 1) / nw;
    std::vector<std::thread> pool;
    for (int w = 0; w < nw; ++w) {
        const std::int64_t b = w * chunk;
        const std::int64_t e = std::min(n, b + chunk);
        if (b >= e) break;
        pool.emplace_back([&, b, e] {
            for (std::int64_t i = b; i < e; ++i) fn(i);
        });
    }
    for (auto& th : pool) th.join();
}

DipoleParams control_field_params(const Material& m, double bandwidth_mhz) {
    const double frac =
        excited_fraction(m, -0.5 * bandwidth_mhz, 0.5 * bandwidth_mhz, 1.0);
    return material_dipole_params(m, frac * m.dopant_density);
}

// total shift (MHz) of trial `i`, each perturber kept with probability
// keep_prob drawn from the dedicated thinning stream
double thinned_shift(const DipoleParams& p, std::uint64_t seed,
                     std::uint64_t env_stream, std::uint64_t thin_stream,
                     std::int64_t i, double keep_prob) {
    TrialRng thin(seed, thin_stream, static_cast<std::uint64_t>(i));
    double total = 0.0;
    detail::visit_trial_perturbers(
        p, seed, env_stream, static_cast<std::uint64_t>(i), [&](double hz) {
            if (thin.uniform() < keep_prob) total += hz;
        });
    return total * 1e-6;
}

}  // namespace

double entangleable_fraction(const Material& m, double control_bandwidth_mhz,
                             double threshold_mhz, std::int64_t trials,
                             std::uint64_t seed, int workers) {
    if (!(threshold_mhz > 0.0))
        throw ValidationError("entangleable_fraction: threshold must be > 0");
    if (!(control_bandwidth_mhz > 0.0))
        throw ValidationError("entangleable_fraction: bandwidth must be > 0");
    const DipoleParams p = control_field_params(m, control_bandwidth_mhz);
    const auto shifts = sample_shifts(p, trials, seed, workers);
    std::int64_t hits = 0;
    for (double s : shifts)
        if (std::abs(s) > threshold_mhz) ++hits;
    return static_cast<double>(hits) / static_cast<double>(trials);
}

DistillReport distill_pair(std::int64_t n_ions_per_qubit, const Material& m,
                           double control_bandwidth_mhz, double threshold_mhz,
                           std::uint64_t seed, int workers) {
    DistillReport rep =
        distill_pair(n_ions_per_qubit,
                     control_field_params(m, control_bandwidth_mhz),
                     threshold_mhz, seed, workers);
    rep.control_bandwidth = control_bandwidth_mhz;
    return rep;
}

DistillReport distill_pair(std::int64_t n_ions_per_qubit,
                           const DipoleParams& p, double threshold_mhz,
                           std::uint64_t seed, int workers) {
    if (n_ions_per_qubit < 1)
        throw ValidationError("distill_pair: need at least one ion per qubit");
    if (threshold_mhz < 0.0)
        throw ValidationError("distill_pair: threshold must be >= 0");
    p.validate();

    DistillReport rep;
    rep.threshold = threshold_mhz;
    const std::int64_t n = n_ions_per_qubit;

    // pass 1: target ions under full control-channel excitation
    std::vector<double> s1(static_cast<std::size_t>(n));
    for_each_trial(n, workers, [&](std::int64_t i) {
        double total = 0.0;
        detail::visit_trial_perturbers(
            p, seed, stream_target, static_cast<std::uint64_t>(i),
            [&](double hz) { total += hz; });
        s1[static_cast<std::size_t>(i)] = total * 1e-6;
    });

    rep.target_ions.resize(static_cast<std::size_t>(n));
    std::int64_t kept1 = 0;
    for (std::int64_t i = 0; i < n; ++i) {
        const bool keep = std::abs(s1[static_cast<std::size_t>(i)]) >
                          threshold_mhz;
        rep.target_ions[static_cast<std::size_t>(i)] = {
            i, s1[static_cast<std::size_t>(i)], keep,
            keep ? LevelRole::q0 : LevelRole::aux};
        if (keep) ++kept1;
    }
    rep.fraction_retained_target =
        static_cast<double>(kept1) / static_cast<double>(n);

    if (kept1 == 0) {
        rep.degenerate = true;
        rep.mutual = true;  // vacuously: no retained ion fails the check
        rep.control_ions.resize(static_cast<std::size_t>(n));
        for (std::int64_t j = 0; j < n; ++j)
            rep.control_ions[static_cast<std::size_t>(j)] = {
                n + j, 0.0, false, LevelRole::aux};
        return rep;
    }

    // pass 2: roles swapped; the exciting set is now the retained target
    // fraction, so each control-side perturber survives with that rate
    const double f1 = rep.fraction_retained_target;
    std::vector<double> s2(static_cast<std::size_t>(n));
    for_each_trial(n, workers, [&](std::int64_t j) {
        s2[static_cast<std::size_t>(j)] = thinned_shift(
            p, seed, stream_control, stream_thin_control, j, f1);
    });

    rep.control_ions.resize(static_cast<std::size_t>(n));
    std::int64_t kept2 = 0;
    for (std::int64_t j = 0; j < n; ++j) {
        const bool keep = std::abs(s2[static_cast<std::size_t>(j)]) >
                          threshold_mhz;
        rep.control_ions[static_cast<std::size_t>(j)] = {
            n + j, s2[static_cast<std::size_t>(j)], keep,
            keep ? LevelRole::q1 : LevelRole::aux};
        if (keep) ++kept2;
    }
    rep.fraction_retained_control =
        static_cast<double>(kept2) / static_cast<double>(n);

    // mutual control: every retained target must still shift past the
    // threshold when only the retained control ions (pass-2 survivors)
    // are excited; same environments, thinned at the control retention rate
    const double f2 = rep.fraction_retained_control;
    std::vector<char> ok(static_cast<std::size_t>(n), 1);
    for_each_trial(n, workers, [&](std::int64_t i) {
        if (!rep.target_ions[static_cast<std::size_t>(i)].retained) return;
        const double s3 = thinned_shift(p, seed, stream_target,
                                        stream_thin_target, i, f2);
        ok[static_cast<std::size_t>(i)] = std::abs(s3) > threshold_mhz;
    });
    rep.mutual = std::all_of(ok.begin(), ok.end(), [](char c) { return c != 0; });
    return rep;
}

}  // namespace reqsim
