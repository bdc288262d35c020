#include "reqsim/materials.hpp"

#include <cmath>
#include <fstream>
#include <sstream>

#include <json.hpp>

namespace reqsim {

using nlohmann::json;

const char* to_string(LevelRole r) {
    switch (r) {
        case LevelRole::aux: return "aux";
        case LevelRole::q0: return "q0";
        case LevelRole::q1: return "q1";
    }
    return "?";
}

const char* to_string(ProfileShape s) {
    return s == ProfileShape::flat ? "flat" : "gaussian";
}

const char* to_string(OrientationModel m) {
    return m == OrientationModel::isotropic_random ? "isotropic_random" : "fixed_axis";
}

int Isotope::level_of(LevelRole r) const {
    if (!has_hyperfine())
        throw ValidationError("isotope '" + name + "' has no hyperfine levels");
    for (int i = 0; i < 3; ++i)
        if (level_roles[i] == r) return i;
    throw ValidationError("isotope '" + name + "' has no level with role " +
                          to_string(r));
}

void Isotope::validate() const {
    if (name.empty()) throw ValidationError("isotope: empty name");
    if (!(abundance > 0.0) || abundance > 1.0)
        throw ValidationError("isotope '" + name + "': abundance must be in (0, 1]");
    const auto n = ground_offsets.size();
    if (n != 1 && n != 3)
        throw ValidationError("isotope '" + name + "': expected 1 or 3 levels, got " +
                              std::to_string(n));
    if (excited_offsets.size() != n)
        throw ValidationError("isotope '" + name +
                              "': ground/excited level counts differ");
    for (const auto* offs : {&ground_offsets, &excited_offsets}) {
        if ((*offs)[0] != 0.0)
            throw ValidationError("isotope '" + name + "': first offset must be 0");
        for (std::size_t i = 1; i < n; ++i)
            if (!((*offs)[i] > (*offs)[i - 1]))
                throw ValidationError("isotope '" + name +
                                      "': offsets must be strictly increasing");
    }
    if (n == 3) {
        bool seen[3] = {false, false, false};
        for (auto r : level_roles) seen[static_cast<int>(r)] = true;
        if (!(seen[0] && seen[1] && seen[2]))
            throw ValidationError("isotope '" + name +
                                  "': level_roles must map levels onto {aux, q0, q1}");
    }
}

void Material::validate() const {
    if (name.empty()) throw ValidationError("material: empty name");
    if (isotopes.empty())
        throw ValidationError("material '" + name + "': no isotopes");
    double ab = 0.0;
    const auto levels0 = isotopes.front().levels();
    for (const auto& iso : isotopes) {
        iso.validate();
        if (iso.levels() != levels0)
            throw ValidationError("material '" + name +
                                  "': isotopes with mixed level counts");
        ab += iso.abundance;
    }
    if (std::fabs(ab - 1.0) > 1e-9)
        throw ValidationError("material '" + name + "': isotope abundances sum to " +
                              std::to_string(ab) + ", expected 1");
    if (!(inhom_fwhm > 0.0))
        throw ValidationError("material '" + name + "': inhom_fwhm must be > 0");
    if (dopant_density < 0.0)
        throw ValidationError("material '" + name + "': dopant_density must be >= 0");
    if (epsilon < 1.0)
        throw ValidationError("material '" + name + "': epsilon must be >= 1");
    if (delta_mu < 0.0)
        throw ValidationError("material '" + name + "': delta_mu must be >= 0");
    if (!(t1_optical > 0.0))
        throw ValidationError("material '" + name + "': t1_optical must be > 0");
    double bsum = 0.0;
    for (double b : branching) {
        if (b < 0.0)
            throw ValidationError("material '" + name + "': branching ratios must be >= 0");
        bsum += b;
    }
    if (std::fabs(bsum - 1.0) > 1e-12)
        throw ValidationError("material '" + name + "': branching ratios sum to " +
                              std::to_string(bsum) + ", expected 1");
}

double transition_offset(const Isotope& iso, int g, int e) {
    const int n = iso.levels();
    if (g < 0 || g >= n || e < 0 || e >= n)
        throw ValidationError("transition_offset: level index out of range for '" +
                              iso.name + "'");
    return iso.excited_offsets[e] - iso.ground_offsets[g];
}

namespace {

void reject_unknown(const json& j, std::initializer_list<const char*> known,
                    const std::string& ctx) {
    for (const auto& item : j.items()) {
        bool ok = false;
        for (const char* k : known)
            if (item.key() == k) { ok = true; break; }
        if (!ok)
            throw ValidationError(ctx + ": unknown field '" + item.key() + "'");
    }
}

const json& field(const json& j, const char* name, const std::string& ctx) {
    auto it = j.find(name);
    if (it == j.end())
        throw ValidationError(ctx + ": missing field '" + name + "'");
    return *it;
}

double num_field(const json& j, const char* name, const std::string& ctx) {
    const json& f = field(j, name, ctx);
    if (!f.is_number())
        throw ValidationError(ctx + ": field '" + name + "' must be a number");
    return f.get<double>();
}

std::string str_field(const json& j, const char* name, const std::string& ctx) {
    const json& f = field(j, name, ctx);
    if (!f.is_string())
        throw ValidationError(ctx + ": field '" + name + "' must be a string");
    return f.get<std::string>();
}

std::vector<double> num_array_field(const json& j, const char* name,
                                    const std::string& ctx) {
    const json& f = field(j, name, ctx);
    if (!f.is_array())
        throw ValidationError(ctx + ": field '" + name + "' must be an array");
    std::vector<double> out;
    out.reserve(f.size());
    for (const auto& v : f) {
        if (!v.is_number())
            throw ValidationError(ctx + ": field '" + name +
                                  "' must contain only numbers");
        out.push_back(v.get<double>());
    }
    return out;
}

LevelRole parse_role(const std::string& s, const std::string& ctx) {
    if (s == "aux") return LevelRole::aux;
    if (s == "q0") return LevelRole::q0;
    if (s == "q1") return LevelRole::q1;
    throw ValidationError(ctx + ": bad level role '" + s +
                          "' (expected aux, q0 or q1)");
}

Isotope parse_isotope(const json& j, const std::string& ctx) {
    if (!j.is_object()) throw ValidationError(ctx + ": isotope must be an object");
    reject_unknown(j,
                   {"name", "abundance", "ground_offsets", "excited_offsets",
                    "level_roles", "provenance"},
                   ctx);
    Isotope iso;
    iso.name = str_field(j, "name", ctx);
    iso.abundance = num_field(j, "abundance", ctx);
    iso.ground_offsets = num_array_field(j, "ground_offsets", ctx);
    iso.excited_offsets = num_array_field(j, "excited_offsets", ctx);
    if (j.contains("level_roles")) {
        const json& lr = j["level_roles"];
        if (!lr.is_array() || lr.size() != 3)
            throw ValidationError(ctx + ": level_roles must be an array of 3 roles");
        for (int i = 0; i < 3; ++i) {
            if (!lr[i].is_string())
                throw ValidationError(ctx + ": level_roles entries must be strings");
            iso.level_roles[i] = parse_role(lr[i].get<std::string>(), ctx);
        }
    } else if (iso.ground_offsets.size() == 3) {
        throw ValidationError(ctx + ": 3-level isotope requires level_roles");
    }
    return iso;
}

}  // namespace

Material parse_material_json(const std::string& text, const std::string& origin) {
    json j;
    try {
        j = json::parse(text);
    } catch (const json::parse_error& e) {
        throw ValidationError(origin + ": JSON parse error: " + e.what());
    }
    if (!j.is_object())
        throw ValidationError(origin + ": material file must contain a JSON object");
    reject_unknown(j,
                   {"name", "isotopes", "inhom_fwhm", "profile_shape",
                    "dopant_density", "epsilon", "delta_mu", "orientation_model",
                    "t1_optical", "branching", "provenance"},
                   origin);

    Material m;
    m.name = str_field(j, "name", origin);
    m.inhom_fwhm = num_field(j, "inhom_fwhm", origin);
    m.dopant_density = num_field(j, "dopant_density", origin);
    m.epsilon = num_field(j, "epsilon", origin);
    m.delta_mu = num_field(j, "delta_mu", origin);
    m.t1_optical = num_field(j, "t1_optical", origin);

    const std::string shape = str_field(j, "profile_shape", origin);
    if (shape == "flat") m.profile_shape = ProfileShape::flat;
    else if (shape == "gaussian") m.profile_shape = ProfileShape::gaussian;
    else throw ValidationError(origin + ": bad profile_shape '" + shape + "'");

    const std::string om = str_field(j, "orientation_model", origin);
    if (om == "isotropic_random") m.orientation_model = OrientationModel::isotropic_random;
    else if (om == "fixed_axis") m.orientation_model = OrientationModel::fixed_axis;
    else throw ValidationError(origin + ": bad orientation_model '" + om + "'");

    const auto br = num_array_field(j, "branching", origin);
    if (br.size() != 3)
        throw ValidationError(origin + ": branching must have 3 entries");
    for (int i = 0; i < 3; ++i) m.branching[i] = br[i];

    const json& isos = field(j, "isotopes", origin);
    if (!isos.is_array() || isos.empty())
        throw ValidationError(origin + ": isotopes must be a non-empty array");
    int idx = 0;
    for (const auto& ij : isos) {
        m.isotopes.push_back(
            parse_isotope(ij, origin + ": isotope[" + std::to_string(idx) + "]"));
        ++idx;
    }

    m.validate();
    return m;
}

Material load_material(const std::string& path_or_builtin) {
    constexpr const char* prefix = "builtin:";
    if (path_or_builtin.rfind(prefix, 0) == 0) {
        const std::string name = path_or_builtin.substr(8);
        if (!is_builtin_material(name)) {
            std::string msg = "unknown builtin material '" + name + "' (have:";
            for (const auto& n : builtin_material_names()) msg += " " + n;
            throw ValidationError(msg + ")");
        }
        return parse_material_json(builtin_material_json(name), path_or_builtin);
    }
    std::ifstream in(path_or_builtin, std::ios::binary);
    if (!in)
        throw ValidationError("cannot open material file '" + path_or_builtin + "'");
    std::ostringstream ss;
    ss << in.rdbuf();
    return parse_material_json(ss.str(), path_or_builtin);
}

}  // namespace reqsim
