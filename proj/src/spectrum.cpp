#include "reqsim/spectrum.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "reqsim/constants.hpp"

namespace reqsim {

namespace {

double sq(double x) { return x * x; }

// sort + merge values closer than tol, drop |x| < tol
std::vector<double> dedup_nonzero(std::vector<double> v, double tol) {
    std::sort(v.begin(), v.end());
    std::vector<double> out;
    for (double x : v) {
        if (std::fabs(x) < tol) continue;
        if (!out.empty() && x - out.back() < tol) continue;
        out.push_back(x);
    }
    return out;
}

}  // namespace

long GridSpec::bins() const {
    return std::llround((window_hi - window_lo) / bin_width);
}

long GridSpec::index_of(double freq_mhz) const {
    return std::llround((freq_mhz - window_lo) / bin_width - 0.5);
}

void GridSpec::validate() const {
    if (!(bin_width > 0.0))
        throw ValidationError("grid: bin_width must be positive");
    if (!(window_lo < window_hi))
        throw ValidationError("grid: window_lo must be below window_hi");
    long n = bins();
    if (n < 1) throw ValidationError("grid: window narrower than one bin");
    if (n > 10000000)
        throw ValidationError("grid: more than 1e7 bins requested");
    double span = window_hi - window_lo;
    if (std::fabs(static_cast<double>(n) * bin_width - span) > 1e-6)
        throw ValidationError(
            "grid: window span must be an integer multiple of bin_width");
}

double SpectralState::conservation_error() const {
    double worst = 0.0;
    long nb = grid.bins();
    for (size_t i = 0; i < pop.size(); ++i) {
        for (long b = 0; b < nb; ++b) {
            double s = 0.0;
            for (int g = 0; g < nlev; ++g) s += pop[i][b * nlev + g];
            worst = std::max(worst, std::fabs(s - weight[i][b]));
        }
    }
    return worst;
}

double SpectralState::total_population() const {
    double s = 0.0;
    for (const auto& iso : pop)
        for (double x : iso) s += x;
    return s;
}

SpectralState new_state(const Material& material, const GridSpec& grid) {
    material.validate();
    grid.validate();
    SpectralState st;
    st.material = material;
    st.grid = grid;
    st.nlev = material.isotopes.front().levels();
    long nb = grid.bins();
    double fwhm_mhz = material.inhom_fwhm * 1000.0;
    for (const auto& iso : material.isotopes) {
        std::vector<double> w(nb);
        for (long b = 0; b < nb; ++b) {
            double c = grid.center(b);
            double profile = 1.0;
            if (material.profile_shape == ProfileShape::gaussian)
                profile = std::exp(-4.0 * std::log(2.0) * sq(c / fwhm_mhz));
            w[b] = iso.abundance * profile;
        }
        std::vector<double> p(nb * st.nlev);
        for (long b = 0; b < nb; ++b)
            for (int g = 0; g < st.nlev; ++g)
                p[b * st.nlev + g] = w[b] / st.nlev;
        st.weight.push_back(std::move(w));
        st.pop.push_back(std::move(p));
    }
    return st;
}

AbsorptionTrace absorption_spectrum(const SpectralState& state,
                                    const std::vector<double>& freqs,
                                    double kernel_fwhm_mhz) {
    if (!(kernel_fwhm_mhz > 0.0))
        throw ValidationError("absorption: kernel fwhm must be positive");
    const GridSpec& g = state.grid;
    long nb = g.bins();
    int nl = state.nlev;
    double bw = g.bin_width;
    long cut = std::lround(std::ceil(kernel_cutoff_mult * kernel_fwhm_mhz / bw));
    long margin = std::lround(std::ceil(edge_margin_mult * kernel_fwhm_mhz / bw));

    AbsorptionTrace tr;
    tr.freqs.reserve(freqs.size());
    tr.alpha.reserve(freqs.size());
    for (double f : freqs) {
        long i = g.index_of(f);
        if (i < 0 || i >= nb) {
            std::ostringstream os;
            os << "absorption: frequency " << f << " MHz outside window ["
               << g.window_lo << ", " << g.window_hi << "]";
            throw EdgeError(os.str());
        }
        double num = 0.0, den = 0.0;
        for (size_t s = 0; s < state.material.isotopes.size(); ++s) {
            const Isotope& iso = state.material.isotopes[s];
            for (int gl = 0; gl < nl; ++gl) {
                for (int e = 0; e < nl; ++e) {
                    double off = transition_offset(iso, gl, e);
                    // classes whose (gl,e) transition lies near f
                    long bc = std::llround(static_cast<double>(i) - off / bw);
                    if (bc - margin < 0 || bc + margin >= nb) {
                        std::ostringstream os;
                        os << "absorption: probing " << f
                           << " MHz needs classes outside the window (via "
                           << iso.name << " transition offset " << off
                           << " MHz); widen the grid";
                        throw EdgeError(os.str());
                    }
                    long b0 = std::max<long>(0, bc - cut);
                    long b1 = std::min<long>(nb - 1, bc + cut);
                    const double* pops = state.pop[s].data();
                    const double* ws = state.weight[s].data();
                    for (long b = b0; b <= b1; ++b) {
                        // detuning from integer bin difference: translation
                        // of state + probe by k bins is bit-exact
                        double det = static_cast<double>(i - b) * bw - off;
                        double k = 1.0 / (1.0 + sq(2.0 * det / kernel_fwhm_mhz));
                        num += pops[b * nl + gl] * k;
                        den += ws[b] / nl * k;
                    }
                }
            }
        }
        tr.freqs.push_back(g.center(i));
        tr.alpha.push_back(num / den);
    }
    return tr;
}

AbsorptionTrace readout_trace(const SpectralState& state, double lo_mhz,
                              double hi_mhz, double kernel_fwhm_mhz) {
    if (!(lo_mhz < hi_mhz))
        throw ValidationError("readout: empty frequency range");
    const GridSpec& g = state.grid;
    long i0 = g.index_of(lo_mhz);
    long i1 = g.index_of(hi_mhz);
    std::vector<double> freqs;
    freqs.reserve(i1 - i0 + 1);
    for (long i = i0; i <= i1; ++i) freqs.push_back(g.center(i));
    return absorption_spectrum(state, freqs, kernel_fwhm_mhz);
}

double raw_absorption(const SpectralState& state, double freq_mhz) {
    const GridSpec& g = state.grid;
    long nb = g.bins();
    int nl = state.nlev;
    long i = g.index_of(freq_mhz);
    double num = 0.0, den = 0.0;
    for (size_t s = 0; s < state.material.isotopes.size(); ++s) {
        const Isotope& iso = state.material.isotopes[s];
        for (int gl = 0; gl < nl; ++gl) {
            for (int e = 0; e < nl; ++e) {
                double off = transition_offset(iso, gl, e);
                long b = i - std::llround(off / g.bin_width);
                if (b < 0 || b >= nb) {
                    std::ostringstream os;
                    os << "raw_absorption: " << freq_mhz
                       << " MHz maps outside the window for " << iso.name
                       << " transition offset " << off << " MHz";
                    throw EdgeError(os.str());
                }
                num += state.pop[s][b * nl + gl];
                den += state.weight[s][b] / nl;
            }
        }
    }
    return num / den;
}

HoleAntiholePattern hole_antihole_offsets(const Isotope& iso, double tol) {
    const std::vector<double>& G = iso.ground_offsets;
    const std::vector<double>& E = iso.excited_offsets;
    int n = iso.levels();
    std::vector<double> side, anti;
    for (int e = 0; e < n; ++e)
        for (int e2 = 0; e2 < n; ++e2)
            if (e2 != e) side.push_back(E[e2] - E[e]);
    for (int g = 0; g < n; ++g)
        for (int g2 = 0; g2 < n; ++g2) {
            if (g2 == g) continue;
            for (int e = 0; e < n; ++e)
                for (int e2 = 0; e2 < n; ++e2)
                    anti.push_back((E[e2] - E[e]) - (G[g2] - G[g]));
        }
    HoleAntiholePattern pat;
    pat.side_holes = dedup_nonzero(std::move(side), tol);
    pat.anti_holes = dedup_nonzero(std::move(anti), tol);
    return pat;
}

HoleAntiholePattern hole_antihole_offsets(const Material& material,
                                          double tol) {
    std::vector<double> side, anti;
    for (const auto& iso : material.isotopes) {
        HoleAntiholePattern p = hole_antihole_offsets(iso, tol);
        side.insert(side.end(), p.side_holes.begin(), p.side_holes.end());
        anti.insert(anti.end(), p.anti_holes.begin(), p.anti_holes.end());
    }
    HoleAntiholePattern pat;
    pat.side_holes = dedup_nonzero(std::move(side), tol);
    pat.anti_holes = dedup_nonzero(std::move(anti), tol);
    return pat;
}

}  // namespace reqsim
