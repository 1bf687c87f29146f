#pragma once

#include <complex>

namespace optomag {

using cplx = std::complex<double>;

/// Raw physical inputs. Rates are angular frequencies in rad/s.
struct SystemParams {
    double omega_m = 0.0;        // rad/s
    double lambda1 = 0.0;        // rad/s
    double lambda2 = 0.0;        // rad/s
    double kappa = 0.0;          // rad/s
    double gamma = 0.0;          // rad/s
    double n_th = 0.0;
    double mass = 0.0;           // kg
    double rod_length = 0.0;     // m
    double alpha_mag = 0.0;      // N T^-1 m^-1
    double young_modulus = 0.0;  // Pa
    double B_z = 0.0;            // T
    double N1 = 0.0;
    double N2 = 0.0;
    cplx alpha{0.0, 0.0};
    cplx beta{0.0, 0.0};
};

/// Squeezed-frame quantities derived from SystemParams.
struct DerivedParams {
    double r = 0.0;
    double omega_s = 0.0;
    double lambda_s = 0.0;
    double c_act = 0.0;   // N/T
    double f = 0.0;       // rad/s
    double f_s = 0.0;     // rad/s
    double lambda_tilde = 0.0;
    double f_tilde = 0.0;
    double tau1 = 0.0;         // s
    double half_period = 0.0;  // s
    double spring_k = 0.0;     // N/m
};

/// Parameter set of the reference device (Terfenol-D rod, 134 kHz mode).
SystemParams reference_device();

/// Throws ParameterError when an invariant is violated.
void validate(const SystemParams& p);

DerivedParams derive(const SystemParams& p);

/// Ancillary photon number N2 giving squeezing parameter r_target.
double r_for_target(const SystemParams& p, double r_target);

/// Magnetic actuation constant m w_m^2 L alpha_mag / E.
double actuation_constant(const SystemParams& p);

/// Drive strength f (rad/s) per tesla.
double drive_per_tesla(const SystemParams& p);

/// Field B_z producing bare drive f (rad/s).
double bz_for_drive(const SystemParams& p, double f);

/// Relative mean-field fluctuation 1/sqrt(N2) of the ancillary mode.
double ancilla_relative_fluctuation(const SystemParams& p);

}  // namespace optomag
