#pragma once

#include <functional>
#include <json.hpp>
#include <string>

#include "optomag/analytic.hpp"
#include "optomag/fock.hpp"
#include "optomag/params.hpp"

namespace optomag {

struct HomodyneDistribution {
    double theta = 0.0;
    RVec grid;
    RVec pdf;
    std::string integration_rule = "composite-simpson";
    double integral = 0.0;
    double quadrature_error = 0.0;
};

enum class FisherKind { QFI, CFI };
enum class FisherMethod { Analytic, Numeric };
enum class SensitivityMode { PerShot, PerSqrtHz };

struct FisherReport {
    double value = 0.0;  // T^-2
    FisherKind kind = FisherKind::QFI;
    FisherMethod method = FisherMethod::Analytic;
    double sensitivity_per_shot = 0.0;     // T
    double sensitivity_per_sqrt_hz = 0.0;  // T/sqrt(Hz)
    nlohmann::json diagnostics = nlohmann::json::object();
};

std::string to_string(FisherKind k);
std::string to_string(FisherMethod m);

/// Prefactor 32 pi^2 m lambda1^2 L^2 alpha_mag^2 / (hbar omega_m E^2) in T^-2.
double fisher_prefactor(const SystemParams& p);

/// Closed-form QFI at tau1 for N1 photons (p.N1 by default).
FisherReport qfi_analytic_tau1(const SystemParams& p);
FisherReport qfi_analytic_tau1(const SystemParams& p, double n1);

/// Closed-form homodyne CFI at tau1 for the amplitude p.alpha.
FisherReport cfi_analytic_tau1(const SystemParams& p, double theta);

/// 1/sqrt(F) per shot or sqrt(tau1/F) per root hertz.
double sensitivity(const FisherReport& r, SensitivityMode mode, const SystemParams& p);

/// E e^{-5r}/(4 pi lambda1 L alpha_mag) sqrt(pi hbar / (m N1)).
double ultimate_bound_per_sqrt_hz(const SystemParams& p);

/// Uniform quadrature grid; default [-12, 12] with 2401 points.
RVec quadrature_grid(double lo = -12.0, double hi = 12.0, int points = 2401);

/// Orthonormal Hermite functions psi_n(x), n < count, as columns.
RMat hermite_functions(const RVec& x, int count);

HomodyneDistribution homodyne_pdf(const QuantumState& rho_c, double theta, const RVec& grid);

struct FisherOptions {
    /// Finite-difference step in B_z; 0 selects the 1e-4 rad phase rule.
    double dB_step = 0.0;
    RVec grid;  // empty selects quadrature_grid()
    int cavity_dim = 0;  // 0 selects the Poisson-tail rule
    int mech_dim = 0;    // 0 selects mech_dim_for
    double richardson_tol = 5e-3;
    double quadrature_tol = 5e-3;
};

/// Cavity truncation with coherent tail below 1e-12.
int cavity_dim_for(cplx alpha);

/// Step in B_z giving ~1e-4 rad phase change on the dominant branch.
double default_dB_step(const SystemParams& p, double t);

/// Pure-state QFI by central differences of materialize_state.
FisherReport qfi_numeric(const SystemParams& p, double t, const FisherOptions& opt = {});

/// QFI from the overlap of the states at B_z -+ dB: 8 (1 - |<psi_-|psi_+>|) / (2 dB)^2.
FisherReport qfi_fidelity(const SystemParams& p, double t, const FisherOptions& opt = {});

/// Homodyne densities at B_z, B_z -+ dB and B_z -+ dB/2 on a common grid.
/// Empty `plus`/`minus` skip the Richardson step and use the dB/2 central difference alone.
struct PdfStencil {
    RVec center, plus, minus, plus_half, minus_half;
};

/// CFI by central differences of the stencil, Richardson-combined, with step and quadrature checks.
FisherReport cfi_from_stencil(const PdfStencil& s, const SystemParams& p, double theta, double dB_step,
                              const RVec& grid, double richardson_tol, double quadrature_tol);

/// Homodyne CFI of a B_z-dependent cavity state family, central differences with Richardson check.
using CavityFamily = std::function<QuantumState(double B_z)>;
FisherReport cfi_from_family(const CavityFamily& family, const SystemParams& p, double theta,
                             double dB_step, const RVec& grid, double richardson_tol,
                             double quadrature_tol);

/// CFI of the closed-form (dissipation-free) reduced cavity state.
FisherReport cfi_numeric(const SystemParams& p, double t, double theta, const FisherOptions& opt = {});

}  // namespace optomag
