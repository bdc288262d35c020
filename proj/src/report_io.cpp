#include "reqsim/report_io.hpp"

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>

namespace reqsim {

namespace {

const char* to_cstr(OrientationModel m) {
    return m == OrientationModel::isotropic_random ? "isotropic_random"
                                                   : "fixed_axis";
}

void append_json_doubles(std::string& out, const std::vector<double>& v) {
    out += '[';
    for (std::size_t i = 0; i < v.size(); ++i) {
        if (i) out += ',';
        out += format_sig9(v[i]);
    }
    out += ']';
}

}  // namespace

std::string format_sig9(double v) {
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.9g", v);
    return buf;
}

void atomic_write_file(const std::string& path, const std::string& content) {
    namespace fs = std::filesystem;
    const fs::path target(path);
    if (target.has_parent_path() && !target.parent_path().empty())
        fs::create_directories(target.parent_path());
    const fs::path tmp = target.string() + ".tmp";
    {
        std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
        if (!out) throw ValidationError("cannot open output file " + tmp.string());
        out.write(content.data(),
                  static_cast<std::streamsize>(content.size()));
        out.flush();
        if (!out) {
            out.close();
            fs::remove(tmp);
            throw ValidationError("failed writing output file " + tmp.string());
        }
    }
    std::error_code ec;
    fs::rename(tmp, target, ec);
    if (ec) {
        fs::remove(tmp);
        throw ValidationError("failed to move output into place: " +
                              ec.message());
    }
}

std::string traces_to_csv(const std::vector<AbsorptionTrace>& traces) {
    std::string out = "readout,freq_mhz,alpha\n";
    for (std::size_t t = 0; t < traces.size(); ++t)
        for (std::size_t i = 0; i < traces[t].freqs.size(); ++i) {
            out += std::to_string(t);
            out += ',';
            out += format_sig9(traces[t].freqs[i]);
            out += ',';
            out += format_sig9(traces[t].alpha[i]);
            out += '\n';
        }
    return out;
}

std::string histogram_to_json(const DisplacementHistogram& hist,
                              const LorentzianFit& fit,
                              const DipoleParams& params) {
    std::string out;
    out.reserve(hist.bin_edges.size() * 16 + 1024);
    out += "{\n  \"seed\": " + std::to_string(hist.seed);
    out += ",\n  \"trials\": " + std::to_string(hist.trials);
    out += ",\n  \"params\": {";
    out += "\"epsilon\": " + format_sig9(params.epsilon);
    out += ", \"delta_mu_cm\": " + format_sig9(params.delta_mu);
    out += ", \"orientation_model\": \"" +
           std::string(to_cstr(params.orientation_model)) + "\"";
    out += ", \"excited_density_per_m3\": " +
           format_sig9(params.excited_density);
    out += ", \"exclusion_radius_m\": " + format_sig9(params.exclusion_radius);
    out += ", \"volume_radius_m\": " +
           format_sig9(params.effective_volume_radius());
    out += ", \"local_field_power\": " +
           std::to_string(params.local_field_power);
    out += "},\n  \"bin_edges_mhz\": ";
    append_json_doubles(out, hist.bin_edges);
    out += ",\n  \"counts\": [";
    for (std::size_t i = 0; i < hist.counts.size(); ++i) {
        if (i) out += ',';
        out += std::to_string(hist.counts[i]);
    }
    out += "],\n  \"fit\": {";
    out += "\"center_mhz\": " + format_sig9(fit.center);
    out += ", \"fwhm_mhz\": " + format_sig9(fit.fwhm);
    out += ", \"amplitude\": " + format_sig9(fit.amplitude);
    out += ", \"rms_residual\": " + format_sig9(fit.rms_residual);
    out += "}\n}\n";
    return out;
}

std::string broadening_to_csv(const std::vector<BroadeningPoint>& pts) {
    std::string out = "bandwidth_mhz,fwhm_mhz\n";
    for (const auto& p : pts) {
        out += format_sig9(p.bandwidth_mhz);
        out += ',';
        out += format_sig9(p.fwhm_mhz);
        out += '\n';
    }
    return out;
}

std::string distill_to_json(const DistillReport& rep) {
    std::string out = "{\n";
    out += "  \"threshold_mhz\": " + format_sig9(rep.threshold);
    out += ",\n  \"control_bandwidth_mhz\": " +
           format_sig9(rep.control_bandwidth);
    out += ",\n  \"ions_per_qubit\": " +
           std::to_string(rep.target_ions.size());
    out += ",\n  \"fraction_retained_target\": " +
           format_sig9(rep.fraction_retained_target);
    out += ",\n  \"fraction_retained_control\": " +
           format_sig9(rep.fraction_retained_control);
    out += ",\n  \"mutual\": ";
    out += rep.mutual ? "true" : "false";
    out += ",\n  \"degenerate\": ";
    out += rep.degenerate ? "true" : "false";
    out += "\n}\n";
    return out;
}

std::string distill_ions_to_csv(const DistillReport& rep) {
    std::string out = "id,shift_mhz,retained,level\n";
    auto block = [&](const std::vector<IonSample>& ions) {
        for (const auto& ion : ions) {
            out += std::to_string(ion.id);
            out += ',';
            out += format_sig9(ion.shift_under_control);
            out += ',';
            out += ion.retained ? '1' : '0';
            out += ',';
            out += to_string(ion.level);
            out += '\n';
        }
    };
    block(rep.target_ions);
    block(rep.control_ions);
    return out;
}

std::string feasibility_to_json(const FeasibilityReport& rep) {
    std::string out = "{\n";
    out += "  \"material\": \"" + rep.material + "\"";
    out += ",\n  \"well_width_mhz\": " + format_sig9(rep.well_width_mhz);
    out += ",\n  \"separation_mhz\": " + format_sig9(rep.separation_mhz);
    out += ",\n  \"feasible\": ";
    out += rep.feasible ? "true" : "false";
    out += ",\n  \"residual\": " + format_sig9(rep.residual);
    out += ",\n  \"scans_used\": " + std::to_string(rep.scans_used);
    out += ",\n  \"converged\": ";
    out += rep.converged ? "true" : "false";
    out += "\n}\n";
    return out;
}

}  // namespace reqsim
