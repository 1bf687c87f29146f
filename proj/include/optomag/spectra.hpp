#pragma once

#include <optional>

#include "optomag/fock.hpp"

namespace optomag {

struct SpectraParams {
    double mass = 4e-11;                 // kg
    double omega_res = 0.0;              // rad/s
    double gamma = 0.0;                  // rad/s
    double temperature = 300.0;          // K
    double probe_power = 20e-9;          // W
    double omega_L = 0.0;                // rad/s
    double kappa_total = 0.0;            // rad/s
    double kappa_ex = 0.0;               // rad/s
    double coupling_G = 0.0;             // rad s^-1 m^-1
    double detection_efficiency = 0.8;

    void validate() const;
};

/// Angular coupling from a value quoted in MHz/nm.
double coupling_from_mhz_per_nm(double mhz_per_nm);

/// Device of the resonant-sensor example; omega_res = omega_m e^{-2r} unless `use_omega_m`.
SpectraParams resonant_sensor_defaults(double r = 0.6, bool use_omega_m = false);

struct Bandwidth {
    double low = 0.0;
    double high = 0.0;
};

struct NoiseSpectrum {
    RVec omegas;
    RVec s_xx_thermal, s_xx_shot, s_xx_total;
    RVec s_ff_sqrt;
    std::optional<Bandwidth> bandwidth;
};

cplx susceptibility(const SpectraParams& sp, double omega);
double sxx_thermal(const SpectraParams& sp, double omega);
double intracavity_photons(const SpectraParams& sp);
double sxx_shot(const SpectraParams& sp, double omega);
double force_sensitivity(const SpectraParams& sp, double omega);
/// sqrt(2 m gamma k_B T).
double thermal_force_floor(const SpectraParams& sp);

/// Uniform grid on [0, 5 omega_res].
RVec default_spectrum_grid(const SpectraParams& sp, int points = 4001);

/// Frequencies (rad/s) of the optimum of force_sensitivity.
double optimum_frequency(const SpectraParams& sp);

/// Contiguous interval around the optimum where force_sensitivity <= 2x its minimum,
/// clipped to the grid; endpoints refined by bisection.
std::optional<Bandwidth> bandwidth(const SpectraParams& sp, const RVec& grid);

NoiseSpectrum noise_spectrum(const SpectraParams& sp, const RVec& grid);

}  // namespace optomag
