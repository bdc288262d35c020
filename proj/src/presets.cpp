#include "reqsim/materials.hpp"

#include <map>

// Built-in material presets. The strings are byte-identical to the files under
// data/materials/ (kept in sync by a unit test); the data files carry the
// provenance notes for every entered constant.

namespace reqsim {

namespace {

const std::string k_eu_y2sio5 = R"material({
  "name": "eu_y2sio5",
  "provenance": "Eu3+:Y2SiO5, 580 nm line, crystallographic site 2, natural isotope mix. Hyperfine splittings after R. Yano, M. Mitsunaga, N. Uesugi, J. Opt. Soc. Am. B 9, 992 (1992); see per-isotope notes. Y-site density 1.87e28 m^-3 at 0.1 at.% doping. epsilon and delta_mu are representative literature-scale values for this host.",
  "inhom_fwhm": 10.0,
  "profile_shape": "flat",
  "dopant_density": 1.87e25,
  "epsilon": 7.0,
  "delta_mu": 1.2e-31,
  "orientation_model": "isotropic_random",
  "t1_optical": 1.7,
  "branching": [0.3333333333333333, 0.3333333333333333, 0.3333333333333333],
  "isotopes": [
    {
      "name": "151Eu",
      "abundance": 0.5,
      "provenance": "Ground-state splittings 29.9/57.2 MHz (site 2, Yano et al. 1992). Excited-state splittings entered as 153Eu values / 2.68 (isotope quadrupole-moment ratio with state-dependent correction); ~MHz uncertainty.",
      "ground_offsets": [0.0, 29.9, 87.1],
      "excited_offsets": [0.0, 48.5, 87.5],
      "level_roles": ["aux", "q0", "q1"]
    },
    {
      "name": "153Eu",
      "abundance": 0.5,
      "provenance": "Ground-state splittings 76.4/146.2 MHz (site 2; scale with the 153/151 quadrupole-moment ratio 2.555 from the 151Eu values). Excited-state splittings 130.1/104.4 MHz entered from hole-burning literature; ~MHz uncertainty.",
      "ground_offsets": [0.0, 76.4, 222.6],
      "excited_offsets": [0.0, 130.1, 234.5],
      "level_roles": ["aux", "q0", "q1"]
    }
  ]
}
)material";
const std::string k_eu_y2sio5_153 = R"material({
  "name": "eu_y2sio5_153",
  "provenance": "Isotopically pure 153Eu3+:Y2SiO5, 580 nm line, site 2. Splittings as in eu_y2sio5 (after Yano et al. 1992). Qubit roles: the two levels split by 76.4 MHz (|Iz = 1/2|, |Iz = 3/2|) are q0/q1; the top level is the auxiliary reservoir.",
  "inhom_fwhm": 10.0,
  "profile_shape": "flat",
  "dopant_density": 1.87e25,
  "epsilon": 7.0,
  "delta_mu": 1.2e-31,
  "orientation_model": "isotropic_random",
  "t1_optical": 1.7,
  "branching": [0.3333333333333333, 0.3333333333333333, 0.3333333333333333],
  "isotopes": [
    {
      "name": "153Eu",
      "abundance": 1.0,
      "ground_offsets": [0.0, 76.4, 222.6],
      "excited_offsets": [0.0, 130.1, 234.5],
      "level_roles": ["q0", "q1", "aux"]
    }
  ]
}
)material";
const std::string k_eu_yalo3_153 = R"material({
  "name": "eu_yalo3_153",
  "provenance": "153Eu3+:YAlO3, 0.5 at.% doping. Ground-state splittings 59.7/119.2 MHz from published 153Eu:YAlO3 hyperfine data; excited-state splittings 102.4/97.3 MHz entered from hole-burning literature with ~MHz uncertainty. Y-site density 1.966e28 m^-3 (x 0.005). epsilon ~16 (static, representative); delta_mu 2.3e-31 C*m consistent with published Stark-effect coefficients for this host.",
  "inhom_fwhm": 4.0,
  "profile_shape": "flat",
  "dopant_density": 9.83e25,
  "epsilon": 16.0,
  "delta_mu": 2.3e-31,
  "orientation_model": "isotropic_random",
  "t1_optical": 1.8,
  "branching": [0.3333333333333333, 0.3333333333333333, 0.3333333333333333],
  "isotopes": [
    {
      "name": "153Eu",
      "abundance": 1.0,
      "ground_offsets": [0.0, 59.7, 178.9],
      "excited_offsets": [0.0, 102.4, 199.7],
      "level_roles": ["aux", "q0", "q1"]
    }
  ]
}
)material";
const std::string k_tm_yag = R"material({
  "name": "tm_yag",
  "provenance": "Tm3+:YAG, 793 nm line, 0.5 at.% doping, no hyperfine structure (single ground/excited level). Y-site density 1.38e28 m^-3 (x 0.005). epsilon ~11.7 (static). delta_mu is a nominal starting value; the effective value for this host is obtained at runtime by calibrating the broadening slope (see calibrate_mu).",
  "inhom_fwhm": 10.0,
  "profile_shape": "flat",
  "dopant_density": 6.9e25,
  "epsilon": 11.7,
  "delta_mu": 1.5e-31,
  "orientation_model": "isotropic_random",
  "t1_optical": 0.8,
  "branching": [0.3333333333333333, 0.3333333333333333, 0.3333333333333333],
  "isotopes": [
    {
      "name": "169Tm",
      "abundance": 1.0,
      "ground_offsets": [0.0],
      "excited_offsets": [0.0]
    }
  ]
}
)material";

const std::map<std::string, const std::string*> k_presets = {
    {"eu_y2sio5", &k_eu_y2sio5},
    {"eu_y2sio5_153", &k_eu_y2sio5_153},
    {"eu_yalo3_153", &k_eu_yalo3_153},
    {"tm_yag", &k_tm_yag},
};

}  // namespace

std::vector<std::string> builtin_material_names() {
    std::vector<std::string> out;
    for (const auto& [name, text] : k_presets) out.push_back(name);
    return out;
}

bool is_builtin_material(const std::string& name) {
    return k_presets.count(name) != 0;
}

const std::string& builtin_material_json(const std::string& name) {
    auto it = k_presets.find(name);
    if (it == k_presets.end())
        throw ValidationError("unknown builtin material '" + name + "'");
    return *it->second;
}

}  // namespace reqsim
