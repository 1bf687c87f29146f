#include "optomag/fisher.hpp"

#include <algorithm>
#include <cmath>

#include "optomag/constants.hpp"
#include "optomag/diagnostics.hpp"
#include "optomag/errors.hpp"

namespace optomag {

std::string to_string(FisherKind k) { return k == FisherKind::QFI ? "QFI" : "CFI"; }
std::string to_string(FisherMethod m) { return m == FisherMethod::Analytic ? "analytic" : "numeric"; }

double fisher_prefactor(const SystemParams& p) {
    const double num = 32.0 * constants::pi * constants::pi * p.mass * p.lambda1 * p.lambda1 *
                       p.rod_length * p.rod_length * p.alpha_mag * p.alpha_mag;
    return num / (constants::hbar * p.omega_m * p.young_modulus * p.young_modulus);
}

static void fill_sensitivities(FisherReport& r, const SystemParams& p) {
    if (r.value > 0) {
        r.sensitivity_per_shot = sensitivity(r, SensitivityMode::PerShot, p);
        r.sensitivity_per_sqrt_hz = sensitivity(r, SensitivityMode::PerSqrtHz, p);
    } else {
        r.sensitivity_per_shot = r.sensitivity_per_sqrt_hz = std::numeric_limits<double>::infinity();
    }
}

FisherReport qfi_analytic_tau1(const SystemParams& p) { return qfi_analytic_tau1(p, p.N1); }

FisherReport qfi_analytic_tau1(const SystemParams& p, double n1) {
    const DerivedParams d = derive(p);
    FisherReport r;
    r.kind = FisherKind::QFI;
    r.method = FisherMethod::Analytic;
    r.value = fisher_prefactor(p) * n1 * std::exp(12.0 * d.r);
    r.diagnostics = {{"N1", n1}, {"r", d.r}, {"t", d.tau1}};
    fill_sensitivities(r, p);
    return r;
}

FisherReport cfi_analytic_tau1(const SystemParams& p, double theta) {
    const DerivedParams d = derive(p);
    const double bracket = p.alpha.real() * std::sin(theta) - p.alpha.imag() * std::cos(theta);
    FisherReport r;
    r.kind = FisherKind::CFI;
    r.method = FisherMethod::Analytic;
    r.value = fisher_prefactor(p) * std::exp(12.0 * d.r) * bracket * bracket;
    r.diagnostics = {{"theta", theta}, {"r", d.r}, {"t", d.tau1}};
    fill_sensitivities(r, p);
    return r;
}

double sensitivity(const FisherReport& r, SensitivityMode mode, const SystemParams& p) {
    if (!(r.value > 0)) throw ParameterError("sensitivity undefined for zero Fisher information");
    const double shot = 1.0 / std::sqrt(r.value);
    if (mode == SensitivityMode::PerShot) return shot;
    return shot * std::sqrt(derive(p).tau1);
}

double ultimate_bound_per_sqrt_hz(const SystemParams& p) {
    const DerivedParams d = derive(p);
    if (!(p.lambda1 > 0) || !(p.N1 > 0)) throw ParameterError("bound requires lambda1 > 0 and N1 > 0");
    return p.young_modulus * std::exp(-5.0 * d.r) /
           (4.0 * constants::pi * p.lambda1 * p.rod_length * p.alpha_mag) *
           std::sqrt(constants::pi * constants::hbar / (p.mass * p.N1));
}

RVec quadrature_grid(double lo, double hi, int points) {
    if (points < 5 || points % 2 == 0 || !(hi > lo)) {
        throw ConfigError("quadrature grid needs an odd number (>= 5) of points on a non-empty interval");
    }
    return RVec::LinSpaced(points, lo, hi);
}

RMat hermite_functions(const RVec& x, int count) {
    RMat h(x.size(), count);
    const double c0 = std::pow(constants::pi, -0.25);
    for (Eigen::Index i = 0; i < x.size(); ++i) {
        const double xi = x(i);
        h(i, 0) = c0 * std::exp(-0.5 * xi * xi);
        if (count > 1) h(i, 1) = std::sqrt(2.0) * xi * h(i, 0);
        for (int n = 1; n + 1 < count; ++n) {
            h(i, n + 1) = std::sqrt(2.0 / (n + 1)) * xi * h(i, n) - std::sqrt(double(n) / (n + 1)) * h(i, n - 1);
        }
    }
    return h;
}

namespace {

struct SimpsonResult {
    double value;
    double error;
};

// Composite Simpson with step h and 2h; error estimate is their difference.
SimpsonResult simpson(const RVec& f, double h) {
    const Eigen::Index n = f.size();
    auto rule = [&](Eigen::Index stride) {
        double s = f(0) + f(n - 1);
        const Eigen::Index m = (n - 1) / stride;
        for (Eigen::Index k = 1; k < m; ++k) s += f(k * stride) * ((k % 2) ? 4.0 : 2.0);
        return s * h * stride / 3.0;
    };
    const double fine = rule(1);
    double coarse = fine;
    if ((n - 1) % 4 == 0) coarse = rule(2);
    return {fine, std::abs(fine - coarse)};
}

void check_grid(const RVec& grid) {
    if (grid.size() < 5 || grid.size() % 2 == 0) throw ConfigError("quadrature grid needs an odd point count");
}

}  // namespace

HomodyneDistribution homodyne_pdf(const QuantumState& rho_c, double theta, const RVec& grid) {
    if (rho_c.dims.size() != 1) throw DimensionError("homodyne_pdf: single-mode state required");
    check_grid(grid);
    const CMat rho = rho_c.density();
    const int C = static_cast<int>(rho.rows());
    const RMat H = hermite_functions(grid, C);
    CMat U(grid.size(), C);
    for (int n = 0; n < C; ++n) U.col(n) = H.col(n).cast<cplx>() * std::polar(1.0, -theta * n);
    const CMat UR = U * rho;
    HomodyneDistribution out;
    out.theta = theta;
    out.grid = grid;
    out.pdf.resize(grid.size());
    double max_imag = 0.0;
    for (Eigen::Index i = 0; i < grid.size(); ++i) {
        const cplx v = UR.row(i).dot(U.row(i));  // conj(UR) . U
        const cplx pv = std::conj(v);
        max_imag = std::max(max_imag, std::abs(pv.imag()));
        out.pdf(i) = std::max(pv.real(), 0.0);
    }
    const double h = grid(1) - grid(0);
    const SimpsonResult s = simpson(out.pdf, h);
    out.integral = s.value;
    out.quadrature_error = s.error;
    if (max_imag > 1e-12 * std::max(1.0, out.pdf.maxCoeff())) {
        warn<ConservationError>("homodyne pdf has imaginary part " + std::to_string(max_imag));
    }
    if (std::abs(s.value - 1.0) > 1e-4) {
        throw TruncationError("homodyne pdf norm defect " + std::to_string(std::abs(s.value - 1.0)));
    }
    return out;
}

int cavity_dim_for(cplx alpha) {
    const double tail_tol = 1e-12;
    const double a2 = std::norm(alpha);
    double p = std::exp(-a2), acc = p;
    int n = 0;
    while (1.0 - acc > tail_tol && n < 400) {
        ++n;
        p *= a2 / n;
        acc += p;
    }
    return std::max(n + 2, 4);
}

double default_dB_step(const SystemParams& p, double t) {
    const DerivedParams d = derive(p);
    const double theta = d.omega_s * t;
    const int n_dom = std::max(1, static_cast<int>(std::lround(std::norm(p.alpha))));
    const EvolutionSpec s = make_spec(p, t);
    const BranchState b = branch(n_dom, s);
    // d(phase)/d(f_tilde) and d(phi)/d(f_tilde) magnitudes on the dominant branch
    const double sens = 2.0 * std::abs(b.eta) * std::abs(theta - std::sin(theta)) + std::abs(b.mu_bar) +
                        std::abs(p.beta) * std::exp(d.r) * 2.0;
    const double dft = 1e-4 / std::max(sens, 1e-2);
    const double dfdb = drive_per_tesla(p) * std::exp(d.r) / d.omega_s;  // d f_tilde / d B
    return dft / dfdb;
}

namespace {

int choose_cavity_dim(const FisherOptions& opt, cplx alpha) {
    return opt.cavity_dim > 0 ? opt.cavity_dim : cavity_dim_for(alpha);
}

int choose_mech_dim(const FisherOptions& opt, const SystemParams& p, double t, int C) {
    if (opt.mech_dim > 0) return opt.mech_dim;
    return std::max(24, mech_dim_for(make_spec(p, t), C));
}

SystemParams shifted(const SystemParams& p, double dB) {
    SystemParams q = p;
    q.B_z += dB;
    return q;
}

double qfi_from_states(const CVec& minus, const CVec& center, const CVec& plus, double step) {
    const CVec dpsi = (plus - minus) / (2.0 * step);
    const double v = 4.0 * (dpsi.squaredNorm() - std::norm(center.dot(dpsi)));
    return std::max(v, 0.0);
}

void check_richardson(double coarse, double fine, double tol, const char* what, nlohmann::json& diag) {
    const double rel = std::abs(coarse - fine) / std::max(std::abs(fine), 1e-300);
    diag["richardson_rel"] = rel;
    if (rel > tol && std::abs(coarse - fine) > 1e-300) {
        throw ConvergenceError(std::string(what) + ": finite-difference step too large (Richardson disagreement " +
                               std::to_string(rel) + ")");
    }
}

}  // namespace

FisherReport qfi_numeric(const SystemParams& p, double t, const FisherOptions& opt) {
    const int C = choose_cavity_dim(opt, p.alpha);
    const int M = choose_mech_dim(opt, p, t, C);
    const double dB = opt.dB_step > 0 ? opt.dB_step : default_dB_step(p, t);
    auto state = [&](double shift) { return materialize_state(make_spec(shifted(p, shift), t), C, M).vec; };
    const CVec c = state(0.0);
    const double f1 = qfi_from_states(state(-dB), c, state(dB), dB);
    const double f2 = qfi_from_states(state(-dB / 2), c, state(dB / 2), dB / 2);
    FisherReport r;
    r.kind = FisherKind::QFI;
    r.method = FisherMethod::Numeric;
    r.diagnostics = {{"cavity_dim", C}, {"mech_dim", M}, {"dB_step", dB}, {"t", t}, {"form", "derivative"}};
    check_richardson(f1, f2, opt.richardson_tol, "qfi_numeric", r.diagnostics);
    r.value = std::max(0.0, (4.0 * f2 - f1) / 3.0);
    fill_sensitivities(r, p);
    return r;
}

FisherReport qfi_fidelity(const SystemParams& p, double t, const FisherOptions& opt) {
    const int C = choose_cavity_dim(opt, p.alpha);
    const int M = choose_mech_dim(opt, p, t, C);
    const double dB = opt.dB_step > 0 ? opt.dB_step : default_dB_step(p, t);
    auto state = [&](double shift) { return materialize_state(make_spec(shifted(p, shift), t), C, M).vec; };
    auto from_overlap = [&](double step) {
        const double ov = std::abs(state(-step).dot(state(step)));
        return 8.0 * (1.0 - ov) / (4.0 * step * step);
    };
    // the overlap route loses digits as 1/step^2, so it uses a larger step than the derivative form
    const double big = 10.0 * dB;
    const double f1 = from_overlap(big);
    const double f2 = from_overlap(big / 2);
    FisherReport r;
    r.kind = FisherKind::QFI;
    r.method = FisherMethod::Numeric;
    r.diagnostics = {{"cavity_dim", C}, {"mech_dim", M}, {"dB_step", big}, {"t", t}, {"form", "fidelity"}};
    check_richardson(f1, f2, opt.richardson_tol, "qfi_fidelity", r.diagnostics);
    r.value = std::max(0.0, (4.0 * f2 - f1) / 3.0);
    fill_sensitivities(r, p);
    return r;
}

FisherReport cfi_from_stencil(const PdfStencil& st, const SystemParams& p, double theta, double dB,
                              const RVec& grid, double richardson_tol, double quadrature_tol) {
    check_grid(grid);
    const double h = grid(1) - grid(0);
    const double cut = 1e-14 * st.center.maxCoeff();
    auto fisher = [&](const RVec& pp, const RVec& pm, double step, double& qerr) {
        RVec integrand = RVec::Zero(grid.size());
        for (Eigen::Index i = 0; i < grid.size(); ++i) {
            if (st.center(i) <= cut) continue;
            const double dp = (pp(i) - pm(i)) / (2.0 * step);
            integrand(i) = dp * dp / st.center(i);
        }
        const SimpsonResult s = simpson(integrand, h);
        qerr = s.error;
        return s.value;
    };
    const bool richardson = st.plus.size() > 0;
    double e1 = 0, e2 = 0;
    const double f2 = fisher(st.plus_half, st.minus_half, dB / 2, e2);
    const double f1 = richardson ? fisher(st.plus, st.minus, dB, e1) : f2;
    FisherReport r;
    r.kind = FisherKind::CFI;
    r.method = FisherMethod::Numeric;
    r.value = std::max(0.0, richardson ? (4.0 * f2 - f1) / 3.0 : f2);
    r.diagnostics = {{"theta", theta},
                     {"dB_step", dB},
                     {"grid_points", grid.size()},
                     {"grid_lo", grid(0)},
                     {"grid_hi", grid(grid.size() - 1)},
                     {"quadrature_error", e2}};
    // reference scale for near-zero values: the Fisher prefactor at this amplitude
    const double scale = fisher_prefactor(p) * std::exp(12.0 * derive(p).r) * std::max(std::norm(p.alpha), 1e-6);
    const double floor = 1e-9 * scale;
    const double rel = std::abs(f1 - f2) / std::max(std::abs(f2), floor);
    r.diagnostics["richardson_rel"] = richardson ? nlohmann::json(rel) : nlohmann::json(nullptr);
    if (richardson && rel > richardson_tol) {
        throw ConvergenceError("cfi: finite-difference step too large (Richardson disagreement " +
                               std::to_string(rel) + ")");
    }
    if (e2 > quadrature_tol * std::max(r.value, floor)) {
        throw ConvergenceError("cfi: quadrature error " + std::to_string(e2) + " exceeds tolerance");
    }
    fill_sensitivities(r, p);
    return r;
}

FisherReport cfi_from_family(const CavityFamily& family, const SystemParams& p, double theta, double dB,
                             const RVec& grid, double richardson_tol, double quadrature_tol) {
    check_grid(grid);
    PdfStencil st;
    const HomodyneDistribution c = homodyne_pdf(family(p.B_z), theta, grid);
    st.center = c.pdf;
    st.plus = homodyne_pdf(family(p.B_z + dB), theta, grid).pdf;
    st.minus = homodyne_pdf(family(p.B_z - dB), theta, grid).pdf;
    st.plus_half = homodyne_pdf(family(p.B_z + dB / 2), theta, grid).pdf;
    st.minus_half = homodyne_pdf(family(p.B_z - dB / 2), theta, grid).pdf;
    FisherReport r = cfi_from_stencil(st, p, theta, dB, grid, richardson_tol, quadrature_tol);
    r.diagnostics["pdf_integral"] = c.integral;
    return r;
}

FisherReport cfi_numeric(const SystemParams& p, double t, double theta, const FisherOptions& opt) {
    const int C = choose_cavity_dim(opt, p.alpha);
    const double dB = opt.dB_step > 0 ? opt.dB_step : default_dB_step(p, t);
    const RVec grid = opt.grid.size() ? opt.grid : quadrature_grid();
    auto family = [&](double B) {
        SystemParams q = p;
        q.B_z = B;
        return reduced_cavity_rho(make_spec(q, t), C);
    };
    FisherReport r = cfi_from_family(family, p, theta, dB, grid, opt.richardson_tol, opt.quadrature_tol);
    r.diagnostics["cavity_dim"] = C;
    r.diagnostics["t"] = t;
    return r;
}

}  // namespace optomag
