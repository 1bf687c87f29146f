#pragma once

#include <cmath>
#include <complex>
#include <random>

#include "optomag/fock.hpp"
#include "optomag/params.hpp"

namespace testsupport {

using optomag::cplx;
using optomag::CMat;
using optomag::CVec;

inline double rel(double a, double b) { return std::abs(a - b) / std::max(std::abs(b), 1e-300); }

inline std::mt19937_64& rng() {
    static std::mt19937_64 g(20240611);
    return g;
}

inline double uniform(double lo, double hi) {
    return std::uniform_real_distribution<double>(lo, hi)(rng());
}

/// Lab-frame single-branch Hamiltonian in units of omega_m, photon number n.
inline CMat lab_branch_hamiltonian(const optomag::SystemParams& p, double f, int n, int dim) {
    const CMat a = optomag::destroy(dim).mat;
    const CMat ad = a.adjoint();
    const CMat N = ad * a;
    const CMat x = a + ad;
    const CMat x2 = a * a + ad * ad + 2.0 * N + CMat::Identity(dim, dim);
    return (p.omega_m * N - p.lambda1 * n * x - p.lambda2 * p.N2 * x2 + f * x) / p.omega_m;
}

/// Reference device with stronger couplings for compact numerics.
inline optomag::SystemParams compact_params(double lambda1_frac, double f_frac, double r) {
    auto p = optomag::reference_device();
    p.lambda1 = lambda1_frac * p.omega_m;
    p.N2 = optomag::r_for_target(p, r);
    p.B_z = optomag::bz_for_drive(p, f_frac * p.omega_m);
    return p;
}

}  // namespace testsupport
