#include "optomag/analytic.hpp"

#include <algorithm>
#include <cmath>

#include "optomag/constants.hpp"
#include "optomag/diagnostics.hpp"
#include "optomag/errors.hpp"

namespace optomag {

EvolutionSpec make_spec(const SystemParams& p, double t) {
    if (!(t >= 0)) throw ParameterError("time must be non-negative");
    return {p, derive(p), t};
}

BranchState branch(int n, const EvolutionSpec& s) {
    if (n < 0) throw ParameterError("branch index must be non-negative");
    const DerivedParams& d = s.derived;
    const double th = d.omega_s * s.t;
    const cplx e = std::polar(1.0, -th);
    BranchState b;
    b.n = n;
    b.eta = d.lambda_tilde * n - d.f_tilde;
    b.mu_bar = (1.0 - e) * (std::cosh(d.r) - e * std::sinh(d.r));
    b.mech_amplitude = e * s.params.beta + b.eta * b.mu_bar;
    b.r_prime = d.r * e * e;
    b.phase = b.eta * b.eta * (th - std::sin(th)) +
              b.eta * (s.beta_re() * std::sin(th) * std::exp(-d.r) -
                       s.beta_im() * (std::cos(th) - 1.0) * std::exp(d.r));
    return b;
}

namespace {

// Working dimension for exponentials before truncating to the target.
int padded(int dim) { return dim + std::max(24, dim / 2); }

CMat squeeze_pair(const EvolutionSpec& s, int work) {
    const BranchState b0 = branch(0, s);
    return squeeze(-s.derived.r, work).mat * squeeze(b0.r_prime, work).mat;
}

CVec truncate_checked(const CVec& v, int dim) {
    CVec out = v.head(dim);
    const double defect = 1.0 - out.squaredNorm();
    if (defect > 1e-8) {
        throw TruncationError("mechanical truncation " + std::to_string(dim) + " loses norm " +
                              std::to_string(defect));
    }
    return out;
}

}  // namespace

CVec mechanical_branch(const EvolutionSpec& s, int n, int mech_dim) {
    const int work = padded(mech_dim);
    const CMat u = squeeze_pair(s, work);
    CVec vac = CVec::Zero(work);
    vac(0) = 1.0;
    const CVec v = u * (displacement(branch(n, s).mech_amplitude, work).mat * vac);
    return truncate_checked(v, mech_dim);
}

QuantumState materialize_state(const EvolutionSpec& s, int cavity_dim, int mech_dim) {
    if (cavity_dim < 2 || mech_dim < 2) throw DimensionError("truncations must be at least 2");
    const CVec c = coherent_amplitudes(s.alpha(), cavity_dim);
    if (1.0 - c.squaredNorm() > 1e-8) {
        throw TruncationError("cavity truncation " + std::to_string(cavity_dim) + " inadequate");
    }
    const int work = padded(mech_dim);
    const CMat u = squeeze_pair(s, work);
    CVec vac = CVec::Zero(work);
    vac(0) = 1.0;
    CVec psi = CVec::Zero(static_cast<Eigen::Index>(cavity_dim) * mech_dim);
    for (int n = 0; n < cavity_dim; ++n) {
        if (std::abs(c(n)) == 0.0) continue;
        const BranchState b = branch(n, s);
        const CVec m = u * (displacement(b.mech_amplitude, work).mat * vac);
        const double loss = 1.0 - m.head(mech_dim).squaredNorm();
        if (loss * std::norm(c(n)) > 1e-10 && loss > 1e-8) {
            throw TruncationError("mechanical truncation " + std::to_string(mech_dim) +
                                  " inadequate for branch " + std::to_string(n));
        }
        psi.segment(static_cast<Eigen::Index>(n) * mech_dim, mech_dim) =
            c(n) * std::polar(1.0, b.phase) * m.head(mech_dim);
    }
    const double defect = std::abs(psi.norm() - 1.0);
    if (defect > 1e-8) throw TruncationError("joint state norm defect " + std::to_string(defect));
    return QuantumState::pure({cavity_dim, mech_dim}, psi);
}

QuantumState reduced_cavity_rho(const EvolutionSpec& s, int cavity_dim) {
    const CVec c = coherent_amplitudes(s.alpha(), cavity_dim);
    const double defect = 1.0 - c.squaredNorm();
    if (defect > 1e-8) {
        warn<TruncationError>("reduced cavity state truncated with norm defect " + std::to_string(defect));
    }
    std::vector<BranchState> b(cavity_dim);
    for (int n = 0; n < cavity_dim; ++n) b[n] = branch(n, s);
    CMat rho(cavity_dim, cavity_dim);
    for (int n = 0; n < cavity_dim; ++n)
        for (int k = 0; k < cavity_dim; ++k) {
            const cplx pn = b[n].mech_amplitude, pk = b[k].mech_amplitude;
            const cplx overlap = std::exp(-0.5 * (std::norm(pn) + std::norm(pk)) + std::conj(pk) * pn);
            rho(n, k) = c(n) * std::conj(c(k)) * std::polar(1.0, b[n].phase - b[k].phase) * overlap;
        }
    return QuantumState::mixed({cavity_dim}, rho);
}

double phase_at_decoupling(const DerivedParams& d, int n, int m) {
    if (m < 1) throw ParameterError("decoupling index m must be >= 1");
    const double eta = d.lambda_tilde * n - d.f_tilde;
    return 2.0 * m * constants::pi * eta * eta;
}

double pae(const SystemParams& p, const DerivedParams& d, int n) {
    if (n < 0) throw ParameterError("n must be non-negative");
    return (p.lambda1 * n / p.omega_m) * (p.lambda1 * n - 2.0 * d.f) * std::exp(4.0 * d.r);
}

double variance_x(double r, double omega_s, double t) {
    return 0.5 * std::exp(2.0 * r) * (std::cosh(2.0 * r) - std::cos(2.0 * omega_s * t) * std::sinh(2.0 * r));
}

double squeezing_degree(double r, double omega_s, double t) {
    return 10.0 * std::log10(2.0 * variance_x(r, omega_s, t));
}

double max_squeezing_db(double r) { return 10.0 * std::log10(std::exp(4.0 * r)); }

Tomography tomography(int l, const EvolutionSpec& s) {
    if (l < 1) throw ParameterError("tomography requires l >= 1");
    const cplx a = s.alpha();
    const double p0 = std::exp(-std::norm(a));
    double lfact = 0.0;
    for (int k = 2; k <= l; ++k) lfact += std::log(static_cast<double>(k));
    const cplx al = std::pow(a, l) * std::exp(-0.5 * lfact);  // a^l / sqrt(l!)
    Tomography t;
    t.l = l;
    t.delta_phase = branch(l, s).phase - branch(0, s).phase;
    const cplx r00 = p0;
    const cplx rll = p0 * std::norm(al);
    const cplx r0l = p0 * std::conj(al) * std::polar(1.0, -t.delta_phase);
    const cplx rl0 = std::conj(r0l);
    t.rho_dd = 0.5 * (r00 + rll - 2.0 * r0l.real());
    t.rho_uu = 0.5 * (r00 + rll + 2.0 * r0l.real());
    t.rho_du = 0.5 * (r00 + r0l - rl0 - rll);
    t.rho_ud = std::conj(t.rho_du);
    t.sigma_z = 2.0 * r0l.real();
    return t;
}

int mech_dim_for(const EvolutionSpec& s, int cavity_dim) {
    double amax = std::abs(s.params.beta);
    for (int n = 0; n < cavity_dim; ++n) amax = std::max(amax, std::abs(branch(n, s).mech_amplitude));
    const double sq = std::exp(2.0 * s.derived.r);
    return static_cast<int>(std::ceil((amax * amax + 6.0 * amax + 10.0) * sq));
}

}  // namespace optomag
