#include "optomag/spectra.hpp"

#include <cmath>

#include <boost/math/tools/minima.hpp>
#include <boost/math/tools/roots.hpp>

#include "optomag/constants.hpp"
#include "optomag/errors.hpp"
#include "optomag/params.hpp"

namespace optomag {

void SpectraParams::validate() const {
    auto pos = [](double v, const char* name) {
        if (!(v > 0) || !std::isfinite(v)) throw ParameterError(std::string(name) + " must be positive");
    };
    pos(mass, "mass");
    pos(omega_res, "omega_res");
    pos(gamma, "gamma");
    pos(temperature, "temperature");
    pos(probe_power, "probe_power");
    pos(omega_L, "omega_L");
    pos(kappa_total, "kappa_total");
    pos(kappa_ex, "kappa_ex");
    pos(coupling_G, "coupling_G");
    if (!(detection_efficiency > 0 && detection_efficiency <= 1)) {
        throw ParameterError("detection_efficiency must lie in (0, 1]");
    }
    if (kappa_ex > kappa_total) throw ParameterError("kappa_ex exceeds kappa_total");
}

double coupling_from_mhz_per_nm(double mhz_per_nm) { return constants::two_pi * mhz_per_nm * 1e6 / 1e-9; }

SpectraParams resonant_sensor_defaults(double r, bool use_omega_m) {
    const double wm = constants::two_pi * 1.34e5;
    SpectraParams sp;
    sp.mass = 4e-11;
    sp.omega_res = use_omega_m ? wm : wm * std::exp(-2.0 * r);
    sp.gamma = constants::two_pi * 0.12;
    sp.temperature = 300.0;
    sp.probe_power = 20e-9;
    sp.omega_L = constants::two_pi * 1e14;
    sp.kappa_total = constants::two_pi * 1e8;
    sp.kappa_ex = sp.kappa_total;
    sp.coupling_G = coupling_from_mhz_per_nm(500.0);
    sp.detection_efficiency = 0.8;
    return sp;
}

cplx susceptibility(const SpectraParams& sp, double w) {
    return 1.0 / (sp.mass * cplx(sp.omega_res * sp.omega_res - w * w, -w * sp.gamma));
}

double sxx_thermal(const SpectraParams& sp, double w) {
    const double d = sp.omega_res * sp.omega_res - w * w;
    return 2.0 * sp.gamma * constants::k_B * sp.temperature / (sp.mass * (d * d + w * w * sp.gamma * sp.gamma));
}

double intracavity_photons(const SpectraParams& sp) {
    return 4.0 * sp.probe_power * sp.kappa_ex / (constants::hbar * sp.omega_L * sp.kappa_total * sp.kappa_total);
}

double sxx_shot(const SpectraParams& sp, double w) {
    const double k = sp.kappa_total;
    return k / (16.0 * sp.detection_efficiency * intracavity_photons(sp) * sp.coupling_G * sp.coupling_G) *
           (1.0 + w * w / (k * k));
}

double force_sensitivity(const SpectraParams& sp, double w) {
    return std::sqrt((sxx_thermal(sp, w) + sxx_shot(sp, w)) / std::norm(susceptibility(sp, w)));
}

double thermal_force_floor(const SpectraParams& sp) {
    return std::sqrt(2.0 * sp.mass * sp.gamma * constants::k_B * sp.temperature);
}

RVec default_spectrum_grid(const SpectraParams& sp, int points) {
    if (points < 2) throw ConfigError("spectrum grid needs at least 2 points");
    return RVec::LinSpaced(points, 0.0, 5.0 * sp.omega_res);
}

double optimum_frequency(const SpectraParams& sp) {
    // S_FF is smooth with a single minimum near resonance
    const double lo = std::max(0.0, sp.omega_res - 50.0 * sp.gamma);
    const double hi = sp.omega_res + 50.0 * sp.gamma;
    auto f = [&](double w) { return force_sensitivity(sp, w); };
    return boost::math::tools::brent_find_minima(f, lo, hi, 52).first;
}

std::optional<Bandwidth> bandwidth(const SpectraParams& sp, const RVec& grid) {
    sp.validate();
    if (grid.size() < 2) throw ConfigError("bandwidth grid needs at least 2 points");
    const double g0 = grid.minCoeff(), g1 = grid.maxCoeff();
    const double w0 = optimum_frequency(sp);
    if (w0 < g0 || w0 > g1) return std::nullopt;
    const double limit = 2.0 * force_sensitivity(sp, w0);
    auto excess = [&](double w) { return force_sensitivity(sp, w) - limit; };
    auto tol = boost::math::tools::eps_tolerance<double>(50);
    auto edge = [&](double inside, double outside_end) {
        if (excess(outside_end) <= 0) return outside_end;
        // the sensitivity is monotone on each side of the optimum
        auto r = boost::math::tools::bisect(excess, std::min(inside, outside_end), std::max(inside, outside_end), tol);
        return 0.5 * (r.first + r.second);
    };
    Bandwidth b{edge(w0, g0), edge(w0, g1)};
    if (!(b.high > b.low)) return std::nullopt;
    return b;
}

NoiseSpectrum noise_spectrum(const SpectraParams& sp, const RVec& grid) {
    sp.validate();
    NoiseSpectrum ns;
    const auto n = grid.size();
    ns.omegas = grid;
    ns.s_xx_thermal.resize(n);
    ns.s_xx_shot.resize(n);
    ns.s_xx_total.resize(n);
    ns.s_ff_sqrt.resize(n);
    for (Eigen::Index i = 0; i < n; ++i) {
        ns.s_xx_thermal(i) = sxx_thermal(sp, grid(i));
        ns.s_xx_shot(i) = sxx_shot(sp, grid(i));
        ns.s_xx_total(i) = ns.s_xx_thermal(i) + ns.s_xx_shot(i);
        ns.s_ff_sqrt(i) = force_sensitivity(sp, grid(i));
    }
    ns.bandwidth = bandwidth(sp, grid);
    return ns;
}

}  // namespace optomag
