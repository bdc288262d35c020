#pragma once

#include <string>
#include <vector>

#include "reqsim/dipole.hpp"
#include "reqsim/distill.hpp"
#include "reqsim/pump.hpp"
#include "reqsim/spectrum.hpp"

namespace reqsim {

// All artifact emitters format numbers with 9 significant digits so outputs
// are byte-stable golden files across platforms and runs.
std::string format_sig9(double v);

// Writes content to path atomically (temp file in the same directory, then
// rename); no partial file survives a failure.
void atomic_write_file(const std::string& path, const std::string& content);

// readout traces: readout,freq_mhz,alpha (one block per readout pulse)
std::string traces_to_csv(const std::vector<AbsorptionTrace>& traces);

std::string histogram_to_json(const DisplacementHistogram& hist,
                              const LorentzianFit& fit,
                              const DipoleParams& params);

// bandwidth_mhz,fwhm_mhz
std::string broadening_to_csv(const std::vector<BroadeningPoint>& pts);

std::string distill_to_json(const DistillReport& rep);

// id,shift_mhz,retained,level over target then control ions
std::string distill_ions_to_csv(const DistillReport& rep);

std::string feasibility_to_json(const FeasibilityReport& rep);

}  // namespace reqsim
