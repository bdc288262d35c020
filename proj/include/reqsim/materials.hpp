#pragma once

#include <array>
#include <stdexcept>
#include <string>
#include <vector>

namespace reqsim {

// Raised for any bad input: malformed/inconsistent material files, precondition
// violations on op arguments, etc.
class ValidationError : public std::runtime_error {
public:
    explicit ValidationError(const std::string& what) : std::runtime_error(what) {}
};

enum class LevelRole { aux, q0, q1 };
enum class ProfileShape { flat, gaussian };
enum class OrientationModel { isotropic_random, fixed_axis };

const char* to_string(LevelRole r);
const char* to_string(ProfileShape s);
const char* to_string(OrientationModel m);

// One dopant isotope. Hyperfine systems carry three ground and three excited
// levels; offsets are in MHz relative to the lowest level of each manifold
// (first entry 0, strictly increasing). Systems without hyperfine structure
// (e.g. Tm:YAG) use the degenerate 1-level form and have no level roles.
struct Isotope {
    std::string name;
    double abundance = 1.0;
    std::vector<double> ground_offsets;   // MHz
    std::vector<double> excited_offsets;  // MHz
    // index = ground level, value = role; meaningful only for 3-level isotopes
    std::array<LevelRole, 3> level_roles{LevelRole::aux, LevelRole::q0, LevelRole::q1};

    bool has_hyperfine() const { return ground_offsets.size() == 3; }
    int levels() const { return static_cast<int>(ground_offsets.size()); }
    int level_of(LevelRole r) const;  // 3-level isotopes only
    void validate() const;
};

struct Material {
    std::string name;
    std::vector<Isotope> isotopes;
    double inhom_fwhm = 10.0;   // GHz, inhomogeneous profile width
    ProfileShape profile_shape = ProfileShape::flat;
    double dopant_density = 0.0;  // ions / m^3
    double epsilon = 1.0;         // relative static dielectric constant
    double delta_mu = 0.0;        // |difference dipole moment|, C*m
    OrientationModel orientation_model = OrientationModel::isotropic_random;
    double t1_optical = 1.0;      // ms
    std::array<double, 3> branching{1.0 / 3, 1.0 / 3, 1.0 / 3};

    const Isotope& reference_isotope() const { return isotopes.front(); }
    void validate() const;
};

// Frequency offset (MHz) of the |g> -> |e> transition relative to the
// isotope's g=0, e=0 transition.
double transition_offset(const Isotope& iso, int g, int e);

// Loads a material from a JSON file, or a built-in preset when the reference
// is of the form "builtin:<name>". Unknown JSON fields are rejected.
Material load_material(const std::string& path_or_builtin);

// Parses material JSON text; `origin` is used in error messages.
Material parse_material_json(const std::string& text, const std::string& origin);

std::vector<std::string> builtin_material_names();
bool is_builtin_material(const std::string& name);
const std::string& builtin_material_json(const std::string& name);

}  // namespace reqsim
