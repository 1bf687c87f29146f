#include "optomag/params.hpp"

#include <cmath>
#include <limits>
#include <string>

#include "optomag/constants.hpp"
#include "optomag/errors.hpp"

namespace optomag {

SystemParams reference_device() {
    SystemParams p;
    p.omega_m = constants::two_pi * 134e3;
    p.lambda1 = 0.01 * p.omega_m;
    p.lambda2 = 1e-7 * p.omega_m;
    p.kappa = 0.01 * p.omega_m;
    p.gamma = 0.001 * p.omega_m;
    p.n_th = 10.0;
    p.mass = 4e-11;
    p.rod_length = 630e-6;
    p.alpha_mag = 5e8;
    p.young_modulus = 30e9;
    p.B_z = 0.0;
    p.N1 = 1e6;
    p.N2 = 0.0;
    p.alpha = {1.0, 0.0};
    p.beta = {0.0, 0.0};
    return p;
}

void validate(const SystemParams& p) {
    auto require = [](bool ok, const char* what) {
        if (!ok) throw ParameterError(what);
    };
    require(std::isfinite(p.omega_m) && p.omega_m > 0, "omega_m must be positive");
    require(std::isfinite(p.mass) && p.mass > 0, "mass must be positive");
    require(std::isfinite(p.young_modulus) && p.young_modulus > 0, "young_modulus must be positive");
    require(std::isfinite(p.rod_length) && p.rod_length > 0, "rod_length must be positive");
    require(p.n_th >= 0, "n_th must be non-negative");
    require(p.kappa >= 0, "kappa must be non-negative");
    require(p.gamma >= 0, "gamma must be non-negative");
    require(p.N1 >= 0, "N1 must be non-negative");
    require(p.N2 >= 0, "N2 must be non-negative");
    require(p.lambda2 >= 0, "lambda2 must be non-negative");
    require(std::isfinite(p.B_z), "B_z must be finite");
    const double x = 4.0 * p.lambda2 * p.N2 / p.omega_m;
    if (!(x < 1.0)) {
        throw ParameterError("squeezing diverges: 4 lambda2 N2 / omega_m = " + std::to_string(x) +
                             " must be < 1");
    }
}

double actuation_constant(const SystemParams& p) {
    return p.mass * p.omega_m * p.omega_m * p.rod_length * p.alpha_mag / p.young_modulus;
}

double drive_per_tesla(const SystemParams& p) {
    return actuation_constant(p) / std::sqrt(2.0 * p.mass * constants::hbar * p.omega_m);
}

double bz_for_drive(const SystemParams& p, double f) {
    const double g = drive_per_tesla(p);
    if (g == 0.0) throw ParameterError("zero actuation constant");
    return f / g;
}

double ancilla_relative_fluctuation(const SystemParams& p) {
    return p.N2 > 0 ? 1.0 / std::sqrt(p.N2) : std::numeric_limits<double>::infinity();
}

DerivedParams derive(const SystemParams& p) {
    validate(p);
    DerivedParams d;
    d.r = -0.25 * std::log1p(-4.0 * p.lambda2 * p.N2 / p.omega_m);
    d.omega_s = p.omega_m * std::exp(-2.0 * d.r);
    d.lambda_s = p.lambda1 * std::exp(d.r);
    d.c_act = actuation_constant(p);
    d.f = p.B_z * drive_per_tesla(p);
    d.f_s = d.f * std::exp(d.r);
    d.lambda_tilde = d.lambda_s / d.omega_s;
    d.f_tilde = d.f_s / d.omega_s;
    d.half_period = constants::pi / d.omega_s;
    d.tau1 = 2.0 * d.half_period;
    d.spring_k = p.mass * p.omega_m * p.omega_m;
    return d;
}

double r_for_target(const SystemParams& p, double r_target) {
    if (!(r_target >= 0) || !std::isfinite(r_target)) {
        throw ParameterError("r_target must be finite and non-negative");
    }
    if (r_target == 0.0) return 0.0;
    if (p.lambda2 <= 0) throw ParameterError("lambda2 = 0 cannot produce squeezing");
    if (!(p.omega_m > 0)) throw ParameterError("omega_m must be positive");
    return -p.omega_m / (4.0 * p.lambda2) * std::expm1(-4.0 * r_target);
}

}  // namespace optomag
