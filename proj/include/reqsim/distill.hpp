#pragma once

#include <cstdint>
#include <vector>

#include "reqsim/dipole.hpp"
#include "reqsim/materials.hpp"

namespace reqsim {

// One simulated ion after distillation. level records where the procedure
// left it: a retained ion keeps its qubit level, a removed ion sits in aux.
struct IonSample {
    std::int64_t id = 0;
    double shift_under_control = 0.0;  // MHz
    bool retained = false;
    LevelRole level = LevelRole::aux;
};

struct DistillReport {
    double threshold = 0.0;          // MHz
    double control_bandwidth = 0.0;  // MHz
    double fraction_retained_target = 0.0;
    double fraction_retained_control = 0.0;
    bool mutual = false;
    // true when no ion survived pass 1 and the fractions/mutual flag are
    // vacuous
    bool degenerate = false;
    std::vector<IonSample> target_ions;   // level q0 when retained
    std::vector<IonSample> control_ions;  // level q1 when retained
};

// Fraction of probe ions whose transition shifts by more than `threshold`
// when every ion inside `control_bandwidth` (centered on the line) is
// excited.
double entangleable_fraction(const Material& m, double control_bandwidth_mhz,
                             double threshold_mhz, std::int64_t trials,
                             std::uint64_t seed, int workers = 1);

// Two-pass mutual-control distillation over n_ions_per_qubit ions in each of
// two qubit channels. Pass 1 keeps target ions moved by more than the
// threshold under full control-channel excitation; pass 2 swaps roles, with
// each control-side perturber surviving only at the pass-1 retention rate.
// The mutual flag re-checks every retained target against the *retained*
// control set (same geometry, thinned).
DistillReport distill_pair(std::int64_t n_ions_per_qubit, const Material& m,
                           double control_bandwidth_mhz, double threshold_mhz,
                           std::uint64_t seed, int workers = 1);

// Same procedure over an explicitly specified perturber field (used by tests
// and the degenerate pinned-perturber mode); control_bandwidth is recorded
// as 0.
DistillReport distill_pair(std::int64_t n_ions_per_qubit,
                           const DipoleParams& field, double threshold_mhz,
                           std::uint64_t seed, int workers = 1);

}  // namespace reqsim
