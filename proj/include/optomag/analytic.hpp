#pragma once

#include "optomag/fock.hpp"
#include "optomag/params.hpp"

namespace optomag {

/// Inputs of the closed-form evolution at time t.
struct EvolutionSpec {
    SystemParams params;
    DerivedParams derived;
    double t = 0.0;  // s

    cplx alpha() const { return params.alpha; }
    double beta_re() const { return params.beta.real(); }
    double beta_im() const { return params.beta.imag(); }
};

EvolutionSpec make_spec(const SystemParams& p, double t);

/// Per-photon-number branch of the joint state.
struct BranchState {
    int n = 0;
    double phase = 0.0;  // rad
    double eta = 0.0;
    cplx mech_amplitude;  // phi_n(t)
    cplx mu_bar;
    cplx r_prime;
};

BranchState branch(int n, const EvolutionSpec& spec);

/// Mechanical part S^dag(r) S(r') D(phi_n)|0> of branch n.
CVec mechanical_branch(const EvolutionSpec& spec, int n, int mech_dim);

/// Joint pure state sum_n c_n e^{i phase_n}|n> (x) mechanical_branch(n), cavity first.
QuantumState materialize_state(const EvolutionSpec& spec, int cavity_dim, int mech_dim);

/// Closed-form reduced cavity density matrix.
QuantumState reduced_cavity_rho(const EvolutionSpec& spec, int cavity_dim);

/// Phi_n(tau_m) = 2 m pi (lambda_tilde n - f_tilde)^2.
double phase_at_decoupling(const DerivedParams& d, int n, int m);

/// Displaced phase accumulation efficiency (rad/s) of branch n.
double pae(const SystemParams& p, const DerivedParams& d, int n);

/// Quadrature variance of the alpha = 0 mechanical state.
double variance_x(double r, double omega_s, double t);
/// 10 log10(variance / (1/2)) in dB.
double squeezing_degree(double r, double omega_s, double t);
double max_squeezing_db(double r);

struct Tomography {
    int l = 0;
    cplx rho_dd, rho_uu, rho_du, rho_ud;
    double sigma_z = 0.0;
    double delta_phase = 0.0;  // Phi_l - Phi_0 at tau1
};

/// Elements of the reduced cavity state at tau1 in the basis (|0> -+ |l>)/sqrt(2).
Tomography tomography(int l, const EvolutionSpec& spec_at_tau1);

/// Mechanical truncation adequate for the branch displacements and squeezing at t.
int mech_dim_for(const EvolutionSpec& spec, int cavity_dim);

}  // namespace optomag
