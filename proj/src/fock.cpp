#include "optomag/fock.hpp"

#include <unsupported/Eigen/KroneckerProduct>
#include <unsupported/Eigen/MatrixFunctions>

#include <cmath>
#include <iomanip>
#include <json.hpp>
#include <numeric>
#include <sstream>

#include "optomag/constants.hpp"
#include "optomag/diagnostics.hpp"
#include "optomag/errors.hpp"

namespace optomag {

QuantumState QuantumState::pure(Dims dims, CVec v) {
    QuantumState s;
    s.kind = StateKind::Pure;
    s.dims = std::move(dims);
    s.vec = std::move(v);
    if (product(s.dims) != s.vec.size()) throw DimensionError("state vector does not match dims");
    return s;
}

QuantumState QuantumState::mixed(Dims dims, CMat r) {
    QuantumState s;
    s.kind = StateKind::Mixed;
    s.dims = std::move(dims);
    s.rho = std::move(r);
    if (s.rho.rows() != s.rho.cols() || product(s.dims) != s.rho.rows()) {
        throw DimensionError("density matrix does not match dims");
    }
    return s;
}

int QuantumState::total_dim() const { return product(dims); }

CMat QuantumState::density() const { return is_pure() ? CMat(vec * vec.adjoint()) : rho; }

int product(const Dims& dims) {
    return std::accumulate(dims.begin(), dims.end(), 1, [](int a, int b) { return a * b; });
}

static void require_dim(int dim) {
    if (dim < 2) throw DimensionError("Fock truncation must be at least 2");
}

Operator destroy(int dim) {
    require_dim(dim);
    CMat m = CMat::Zero(dim, dim);
    for (int n = 1; n < dim; ++n) m(n - 1, n) = std::sqrt(static_cast<double>(n));
    return {{dim}, m};
}

Operator create(int dim) { return destroy(dim).adjoint(); }

Operator number(int dim) {
    require_dim(dim);
    CMat m = CMat::Zero(dim, dim);
    for (int n = 0; n < dim; ++n) m(n, n) = static_cast<double>(n);
    return {{dim}, m};
}

Operator identity(int dim) {
    if (dim < 1) throw DimensionError("dimension must be positive");
    return {{dim}, CMat::Identity(dim, dim)};
}

Operator parity(int dim) {
    require_dim(dim);
    CMat m = CMat::Zero(dim, dim);
    for (int n = 0; n < dim; ++n) m(n, n) = (n % 2 == 0) ? 1.0 : -1.0;
    return {{dim}, m};
}

CMat expm(const CMat& m) { return m.exp(); }

int coherent_min_dim(cplx alpha) {
    const double a = std::abs(alpha);
    return static_cast<int>(std::ceil(a * a + 6.0 * a + 10.0));
}

CVec coherent_amplitudes(cplx alpha, int dim) {
    if (dim < 1) throw DimensionError("dimension must be positive");
    CVec c(dim);
    c(0) = std::exp(-0.5 * std::norm(alpha));
    for (int n = 1; n < dim; ++n) c(n) = c(n - 1) * alpha / std::sqrt(static_cast<double>(n));
    return c;
}

QuantumState coherent(cplx alpha, int dim) {
    require_dim(dim);
    CVec c = coherent_amplitudes(alpha, dim);
    const double defect = 1.0 - c.squaredNorm();
    if (dim < coherent_min_dim(alpha)) {
        std::ostringstream msg;
        msg << "coherent(" << alpha << ") truncated at dim " << dim << ", below "
            << coherent_min_dim(alpha);
        if (defect > 1e-8) {
            msg << ", norm defect " << std::setprecision(3) << defect;
            throw TruncationError(msg.str());
        }
        warn<TruncationError>(msg.str());
    }
    if (defect > 1e-8) {
        throw TruncationError("coherent state norm defect " + std::to_string(defect));
    }
    c /= c.norm();
    return QuantumState::pure({dim}, c);
}

QuantumState fock_state(int n, int dim) {
    require_dim(dim);
    if (n < 0 || n >= dim) throw DimensionError("Fock index outside truncation");
    CVec v = CVec::Zero(dim);
    v(n) = 1.0;
    return QuantumState::pure({dim}, v);
}

Operator displacement(cplx beta, int dim) {
    const CMat a = destroy(dim).mat;
    const CMat gen = beta * a.adjoint() - std::conj(beta) * a;
    return {{dim}, expm(gen)};
}

Operator squeeze(cplx z, int dim) {
    const CMat a = destroy(dim).mat;
    const CMat a2 = a * a;
    const CMat gen = 0.5 * (std::conj(z) * a2 - z * a2.adjoint());
    return {{dim}, expm(gen)};
}

Operator tensor(const Operator& a, const Operator& b) {
    Dims dims = a.dims;
    dims.insert(dims.end(), b.dims.begin(), b.dims.end());
    return {dims, Eigen::kroneckerProduct(a.mat, b.mat).eval()};
}

QuantumState tensor(const QuantumState& a, const QuantumState& b) {
    Dims dims = a.dims;
    dims.insert(dims.end(), b.dims.begin(), b.dims.end());
    if (a.is_pure() && b.is_pure()) {
        return QuantumState::pure(dims, Eigen::kroneckerProduct(a.vec, b.vec).eval());
    }
    return QuantumState::mixed(dims, Eigen::kroneckerProduct(a.density(), b.density()).eval());
}

QuantumState partial_trace(const QuantumState& s, int keep) {
    const int nsub = static_cast<int>(s.dims.size());
    if (keep < 0 || keep >= nsub) throw DimensionError("partial_trace: subsystem index out of range");
    if (product(s.dims) != s.total_dim()) throw DimensionError("partial_trace: inconsistent dims");
    int before = 1, after = 1;
    for (int i = 0; i < keep; ++i) before *= s.dims[i];
    for (int i = keep + 1; i < nsub; ++i) after *= s.dims[i];
    const int K = s.dims[keep];
    CMat out = CMat::Zero(K, K);
    if (s.is_pure()) {
        if (s.vec.size() != before * K * after) throw DimensionError("partial_trace: vector size");
        for (int x = 0; x < before; ++x) {
            // Block M(k, y) = psi[(x K + k) after + y], stored row-major.
            Eigen::Map<const Eigen::Matrix<cplx, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>> m(
                s.vec.data() + static_cast<Eigen::Index>(x) * K * after, K, after);
            out.noalias() += m * m.adjoint();
        }
    } else {
        for (int x = 0; x < before; ++x)
            for (int k = 0; k < K; ++k)
                for (int l = 0; l < K; ++l) {
                    cplx acc = 0;
                    const Eigen::Index rk = (static_cast<Eigen::Index>(x) * K + k) * after;
                    const Eigen::Index rl = (static_cast<Eigen::Index>(x) * K + l) * after;
                    for (int y = 0; y < after; ++y) acc += s.rho(rk + y, rl + y);
                    out(k, l) += acc;
                }
    }
    return QuantumState::mixed({K}, out);
}

Operator embed(const Operator& op, const Dims& dims, int which) {
    if (which < 0 || which >= static_cast<int>(dims.size())) throw DimensionError("embed: index");
    if (op.dim() != dims[which]) throw DimensionError("embed: operator dimension mismatch");
    int before = 1, after = 1;
    for (int i = 0; i < which; ++i) before *= dims[i];
    for (int i = which + 1; i < static_cast<int>(dims.size()); ++i) after *= dims[i];
    CMat m = Eigen::kroneckerProduct(CMat::Identity(before, before),
                                     Eigen::kroneckerProduct(op.mat, CMat::Identity(after, after)).eval());
    return {dims, m};
}

cplx expect(const Operator& op, const QuantumState& s) {
    if (op.dim() != s.total_dim()) throw DimensionError("expect: dimension mismatch");
    if (s.is_pure()) return s.vec.dot(op.mat * s.vec);
    return (op.mat * s.rho).trace();
}

double trace_real(const QuantumState& s) {
    return s.is_pure() ? s.vec.squaredNorm() : s.rho.trace().real();
}

double purity(const QuantumState& s) {
    if (s.is_pure()) return std::pow(s.vec.squaredNorm(), 2);
    return (s.rho * s.rho).trace().real();
}

double fidelity_pure(const QuantumState& s, const CVec& psi) {
    if (psi.size() != s.total_dim()) throw DimensionError("fidelity: dimension mismatch");
    if (s.is_pure()) return std::norm(psi.dot(s.vec));
    return psi.dot(s.rho * psi).real();
}

StateDefects state_defects(const QuantumState& s) {
    StateDefects d;
    if (s.is_pure()) {
        d.norm_or_trace = std::abs(s.vec.norm() - 1.0);
        return d;
    }
    d.norm_or_trace = std::abs(s.rho.trace() - cplx(1.0));
    d.hermiticity = (s.rho - s.rho.adjoint()).cwiseAbs().maxCoeff();
    const CMat h = 0.5 * (s.rho + s.rho.adjoint());
    Eigen::SelfAdjointEigenSolver<CMat> es(h, Eigen::EigenvaluesOnly);
    d.min_eigenvalue = es.eigenvalues().minCoeff();
    return d;
}

void check_state(const QuantumState& s) {
    if (product(s.dims) != (s.is_pure() ? s.vec.size() : s.rho.rows())) {
        throw DimensionError("state data does not match dims");
    }
    const StateDefects d = state_defects(s);
    if (s.is_pure()) {
        if (d.norm_or_trace > 1e-10) throw ConservationError("pure state norm defect");
        return;
    }
    if (d.hermiticity > 1e-10) throw ConservationError("density matrix not Hermitian");
    if (d.norm_or_trace > 1e-8) throw ConservationError("density matrix trace defect");
    if (d.min_eigenvalue < -1e-8) throw ConservationError("density matrix not positive");
}

RMat wigner(const QuantumState& s, const RVec& xs, const RVec& ps) {
    if (s.dims.size() != 1) throw DimensionError("wigner: single-mode state required");
    const CMat rho = s.density();
    const int M = static_cast<int>(rho.rows());
    RMat W(xs.size(), ps.size());
    std::vector<double> sq(M + 1);
    for (int n = 0; n <= M; ++n) sq[n] = std::sqrt(static_cast<double>(n));
    // Parity-weighted density: rho_nm (-1)^n.
    CMat rp = rho;
    for (int n = 1; n < M; n += 2) rp.row(n) *= -1.0;
    std::vector<cplx> prev(M), cur(M);
    for (Eigen::Index ix = 0; ix < xs.size(); ++ix) {
        for (Eigen::Index ip = 0; ip < ps.size(); ++ip) {
            // Displaced parity D(a) P D(a)^dag = D(2a) P with a = (x + i p)/sqrt(2).
            const cplx g = cplx(xs(ix), ps(ip)) * std::sqrt(2.0);
            const cplx mgc = -std::conj(g);
            // Row m = 0 of <m|D(g)|n>, then d_{m+1,n} = (sqrt(n) d_{m,n-1} + g d_{m,n}) / sqrt(m+1).
            prev[0] = std::exp(-0.5 * std::norm(g));
            for (int n = 1; n < M; ++n) prev[n] = prev[n - 1] * mgc / sq[n];
            double acc = 0.0;
            for (int m = 0; m < M; ++m) {
                if (m > 0) {
                    cur[0] = g * prev[0] / sq[m];
                    for (int n = 1; n < M; ++n) cur[n] = (sq[n] * prev[n - 1] + g * prev[n]) / sq[m];
                    std::swap(prev, cur);
                }
                // sum_n rho_{n m} (-1)^n <m|D|n>
                for (int n = 0; n < M; ++n) acc += (rp(n, m) * prev[n]).real();
            }
            W(ix, ip) = acc / constants::pi;
        }
    }
    return W;
}

std::string state_to_json(const QuantumState& s) {
    nlohmann::json j;
    j["format"] = "optomag-state/1";
    j["kind"] = s.is_pure() ? "pure" : "mixed";
    j["dims"] = s.dims;
    std::vector<double> data;
    if (s.is_pure()) {
        for (Eigen::Index i = 0; i < s.vec.size(); ++i) {
            data.push_back(s.vec(i).real());
            data.push_back(s.vec(i).imag());
        }
    } else {
        for (Eigen::Index i = 0; i < s.rho.rows(); ++i)
            for (Eigen::Index k = 0; k < s.rho.cols(); ++k) {
                data.push_back(s.rho(i, k).real());
                data.push_back(s.rho(i, k).imag());
            }
    }
    j["data"] = data;
    return j.dump();
}

QuantumState state_from_json(const std::string& text) {
    nlohmann::json j;
    try {
        j = nlohmann::json::parse(text);
    } catch (const nlohmann::json::exception& e) {
        throw ConfigError(std::string("state JSON: ") + e.what());
    }
    const Dims dims = j.at("dims").get<Dims>();
    const std::vector<double> data = j.at("data").get<std::vector<double>>();
    const int n = product(dims);
    if (j.at("kind") == "pure") {
        if (static_cast<int>(data.size()) != 2 * n) throw DimensionError("state JSON: data length");
        CVec v(n);
        for (int i = 0; i < n; ++i) v(i) = cplx(data[2 * i], data[2 * i + 1]);
        return QuantumState::pure(dims, v);
    }
    if (data.size() != 2ull * n * n) throw DimensionError("state JSON: data length");
    CMat r(n, n);
    for (int i = 0; i < n; ++i)
        for (int k = 0; k < n; ++k) {
            const std::size_t o = 2ull * (static_cast<std::size_t>(i) * n + k);
            r(i, k) = cplx(data[o], data[o + 1]);
        }
    return QuantumState::mixed(dims, r);
}

}  // namespace optomag
