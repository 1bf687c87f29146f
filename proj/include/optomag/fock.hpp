#pragma once

#include <Eigen/Dense>
#include <complex>
#include <string>
#include <vector>

#include "optomag/params.hpp"

namespace optomag {

using CMat = Eigen::MatrixXcd;
using CVec = Eigen::VectorXcd;
using RMat = Eigen::MatrixXd;
using RVec = Eigen::VectorXd;
using Dims = std::vector<int>;

/// Dense operator on a tensor product of truncated Fock spaces.
struct Operator {
    Dims dims;
    CMat mat;

    int dim() const { return static_cast<int>(mat.rows()); }
    Operator adjoint() const { return {dims, mat.adjoint()}; }
};

enum class StateKind { Pure, Mixed };

/// Pure state vector or density matrix with subsystem truncations.
struct QuantumState {
    StateKind kind = StateKind::Pure;
    Dims dims;
    CVec vec;  // pure
    CMat rho;  // mixed

    static QuantumState pure(Dims dims, CVec v);
    static QuantumState mixed(Dims dims, CMat r);

    bool is_pure() const { return kind == StateKind::Pure; }
    int total_dim() const;
    /// Density matrix (outer product for pure states).
    CMat density() const;
};

int product(const Dims& dims);

Operator destroy(int dim);
Operator create(int dim);
Operator number(int dim);
Operator identity(int dim);
Operator parity(int dim);

/// Matrix exponential (Pade scaling and squaring).
CMat expm(const CMat& m);

/// Smallest dimension considered adequate for coherent amplitude alpha.
int coherent_min_dim(cplx alpha);

/// Amplitudes e^{-|a|^2/2} a^n / sqrt(n!) for n < dim, without renormalization.
CVec coherent_amplitudes(cplx alpha, int dim);

/// Normalized truncated coherent state. Throws TruncationError above norm defect 1e-8.
QuantumState coherent(cplx alpha, int dim);
QuantumState fock_state(int n, int dim);

/// D(beta) = exp(beta b^dag - beta^* b).
Operator displacement(cplx beta, int dim);
/// S(z) = exp[(z^* b^2 - z b^dag^2)/2].
Operator squeeze(cplx z, int dim);

Operator tensor(const Operator& a, const Operator& b);
QuantumState tensor(const QuantumState& a, const QuantumState& b);

template <class T, class... Rest>
T tensor(const T& a, const T& b, const Rest&... rest) {
    return tensor(tensor(a, b), rest...);
}

/// Reduced state of subsystem `keep`.
QuantumState partial_trace(const QuantumState& s, int keep);

/// Operator acting on subsystem `which` of a composite with `dims`.
Operator embed(const Operator& op, const Dims& dims, int which);

cplx expect(const Operator& op, const QuantumState& s);
double trace_real(const QuantumState& s);
double purity(const QuantumState& s);
/// Fidelity <psi|rho|psi> with a pure reference.
double fidelity_pure(const QuantumState& s, const CVec& psi);

struct StateDefects {
    double norm_or_trace = 0.0;
    double hermiticity = 0.0;
    double min_eigenvalue = 0.0;
};
StateDefects state_defects(const QuantumState& s);
/// Throws DimensionError or ConservationError when invariants fail.
void check_state(const QuantumState& s);

/// W(x,p) on a grid, x rows and p columns, with X = (b + b^dag)/sqrt(2).
RMat wigner(const QuantumState& s, const RVec& xs, const RVec& ps);

/// JSON container: dims header plus row-major complex entries.
std::string state_to_json(const QuantumState& s);
QuantumState state_from_json(const std::string& text);

}  // namespace optomag
