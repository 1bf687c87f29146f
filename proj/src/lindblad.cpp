#include "optomag/lindblad.hpp"

#include <iomanip>
#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

#include <unsupported/Eigen/KroneckerProduct>

#include "optomag/analytic.hpp"
#include "optomag/diagnostics.hpp"
#include "optomag/errors.hpp"
#include "optomag/parallel.hpp"

namespace optomag {

std::string to_string(Frame f) { return f == Frame::Lab ? "lab" : "squeezed"; }

double LindbladSpec::frame_frequency() const { return frame == Frame::Lab ? params.omega_m : derived.omega_s; }

namespace {

std::string short_num(double x) {
    std::ostringstream ss;
    ss << std::setprecision(3) << x;
    return ss.str();
}


struct ModeOps {
    BandedOp a, ad, n, ic;     // cavity
    BandedOp b, bd, N, x, im;  // mechanics
};

ModeOps mode_ops(int C, int d) {
    if (C < 2 || d < 6) throw DimensionError("master equation needs cavity_dim >= 2 and mech_dim >= 6");
    ModeOps o;
    o.a = BandedOp::from_dense(destroy(C).mat);
    o.ad = o.a.adjoint();
    o.n = o.ad * o.a;
    o.ic = BandedOp::identity(C);
    o.b = BandedOp::from_dense(destroy(d).mat);
    o.bd = o.b.adjoint();
    o.N = o.bd * o.b;
    o.x = o.b + o.bd;
    o.im = BandedOp::identity(d);
    return o;
}

// Mechanical part of a composite band offset n_off * d + delta, |delta| <= 2.
inline int mech_offset(int offset, int d) {
    const int q = static_cast<int>(std::lround(static_cast<double>(offset) / d));
    return offset - q * d;
}

}  // namespace

BandedOp build_hamiltonian_banded(const SystemParams& p, int C, int d, Frame frame) {
    const DerivedParams dp = derive(p);
    const ModeOps o = mode_ops(C, d);
    const BandedOp nb = kron(o.ic, o.N);
    const BandedOp nx = kron(o.n, o.x);
    const BandedOp xb = kron(o.ic, o.x);
    if (frame == Frame::Squeezed) {
        return nb.scaled(dp.omega_s) - nx.scaled(dp.lambda_s) + xb.scaled(dp.f_s);
    }
    // (b + b^dag)^2 with the exact matrix elements of b b^dag = N + 1
    const BandedOp x2 = o.b * o.b + o.bd * o.bd + o.N.scaled(2.0) + o.im;
    return nb.scaled(p.omega_m) - nx.scaled(p.lambda1) - kron(o.ic, x2).scaled(p.lambda2 * p.N2) + xb.scaled(dp.f);
}

Operator build_hamiltonian(const SystemParams& p, int C, int d, Frame frame) {
    return {{C, d}, build_hamiltonian_banded(p, C, d, frame).to_dense()};
}

double frame_energy_offset(const SystemParams& p) {
    const DerivedParams d = derive(p);
    return 0.5 * p.omega_m * std::expm1(-2.0 * d.r);
}

LindbladSpec make_lindblad_spec(const SystemParams& p, int C, int d, Frame frame) {
    LindbladSpec s;
    s.params = p;
    s.derived = derive(p);
    s.frame = frame;
    s.cavity_dim = C;
    s.mech_dim = d;
    s.hamiltonian = build_hamiltonian_banded(p, C, d, frame);
    const ModeOps o = mode_ops(C, d);
    const BandedOp A = kron(o.a, o.im), B = kron(o.ic, o.b), Bd = kron(o.ic, o.bd);
    auto add = [&](const char* name, double rate, const BandedOp& x, const BandedOp& y) {
        if (rate < 0) throw ParameterError(std::string("negative rate for channel ") + name);
        if (rate > 0) s.channels.push_back({name, rate, x, y});
    };
    add("kappa D[a]", p.kappa, A, A);
    const double g = p.gamma, nt = p.n_th;
    if (frame == Frame::Lab) {
        add("gamma(n+1) D[b]", g * (nt + 1), B, B);
        add("gamma n D[b+]", g * nt, Bd, Bd);
    } else {
        const double c = std::cosh(s.derived.r), sh = std::sinh(s.derived.r);
        add("D[b]", g * ((nt + 1) * c * c + nt * sh * sh), B, B);
        add("D[b+]", g * ((nt + 1) * sh * sh + nt * c * c), Bd, Bd);
        add("G[b]", g * (2 * nt + 1) * c * sh, B, Bd);
        add("G[b+]", g * (2 * nt + 1) * c * sh, Bd, B);
    }
    return s;
}

CMat rhs(const LindbladSpec& spec, const CMat& rho) {
    if (rho.rows() != spec.dim() || rho.cols() != spec.dim()) throw DimensionError("rhs: state dimension mismatch");
    const CMat H = spec.hamiltonian.to_dense();
    CMat out = cplx(0, -1) * (H * rho - rho * H);
    for (const Channel& ch : spec.channels) {
        const CMat A = ch.A.to_dense(), B = ch.B.to_dense();
        const CMat BdA = B.adjoint() * A;
        out += ch.rate * (A * rho * B.adjoint() - 0.5 * (BdA * rho + rho * BdA));
    }
    return out;
}

namespace {

// Dimensionless generator (time omega_m t) in the interaction picture of omega0 N_b when `ip`.
LindbladKernel build_kernel(const LindbladSpec& spec, bool ip) {
    const int C = spec.cavity_dim, d = spec.mech_dim, D = C * d;
    const double wm = spec.params.omega_m;
    const double w0 = ip ? spec.frame_frequency() / wm : 0.0;
    BandedOp H = spec.hamiltonian.scaled(1.0 / wm);
    if (ip) {
        const ModeOps o = mode_ops(C, d);
        H = H - kron(o.ic, o.N).scaled(w0);
    }
    BandedOp K = H.scaled(cplx(0, -1));
    for (const Channel& ch : spec.channels) K = K - (ch.B.adjoint() * ch.A).scaled(0.5 * ch.rate / wm);
    std::vector<LeftTerm> left;
    for (const Band& b : K.bands) left.push_back({b.offset, b.v, -mech_offset(b.offset, d) * w0});
    std::vector<SandwichTerm> sandwich;
    for (const Channel& ch : spec.channels)
        for (const Band& ba : ch.A.bands)
            for (const Band& bb : ch.B.bands) {
                const double freq = -(mech_offset(ba.offset, d) - mech_offset(bb.offset, d)) * w0;
                sandwich.push_back({ba.offset, bb.offset, ba.v, bb.v, cplx(0.5 * ch.rate / wm), freq});
            }
    return LindbladKernel(D, std::move(left), std::move(sandwich));
}

// Phase e^{-i w0 t (k_i - k_j)} mapping interaction-picture entries back.
void to_schrodinger(CMat& rho, int C, int d, double w0t) {
    if (w0t == 0.0) return;
    CVec ph(C * d);
    for (int n = 0; n < C; ++n)
        for (int k = 0; k < d; ++k) ph(n * d + k) = std::polar(1.0, -w0t * k);
    rho = ph.asDiagonal() * rho * ph.conjugate().asDiagonal();
}

ConservationRecord conservation(const CMat& rho, double t, int C, int d, const EvolveOptions& opt) {
    ConservationRecord rec;
    rec.t = t;
    rec.trace_defect = std::abs(rho.trace() - cplx(1.0));
    rec.hermiticity_defect = (rho - rho.adjoint()).cwiseAbs().maxCoeff();
    const int top = std::max(1, d / 10);
    double pop = 0.0;
    for (int n = 0; n < C; ++n)
        for (int k = d - top; k < d; ++k) pop += rho(n * d + k, n * d + k).real();
    rec.top_population = pop;
    rec.min_eigenvalue = std::numeric_limits<double>::quiet_NaN();
    if (!opt.check_positivity) return rec;
    const int D = static_cast<int>(rho.rows());
    CMat h = 0.5 * (rho + rho.adjoint());
    if (D <= opt.exact_eigen_max_dim) {
        Eigen::SelfAdjointEigenSolver<CMat> es(h, Eigen::EigenvaluesOnly);
        rec.min_eigenvalue = es.eigenvalues().minCoeff();
        rec.positivity_certified = rec.min_eigenvalue >= -1e-6;
    } else {
        h.diagonal().array() += 1e-6;
        Eigen::LLT<CMat> llt(h);
        rec.positivity_certified = llt.info() == Eigen::Success;
        if (!rec.positivity_certified) {
            h.diagonal().array() -= 1e-6;
            Eigen::SelfAdjointEigenSolver<CMat> es(h, Eigen::EigenvaluesOnly);
            rec.min_eigenvalue = es.eigenvalues().minCoeff();
        }
    }
    if (!std::isnan(rec.min_eigenvalue) && rec.min_eigenvalue < -1e-5) {
        std::ostringstream msg;
        msg << "positivity violated at t = " << t << ": minimum eigenvalue " << rec.min_eigenvalue
            << ", trace defect " << rec.trace_defect << ", top-level population " << rec.top_population;
        throw ConservationError(msg.str());
    }
    return rec;
}

}  // namespace

int lindblad_mech_dim(const SystemParams& p) {
    const double r = derive(p).r;
    return static_cast<int>(std::ceil(4.0 * p.n_th + std::norm(p.beta) + 8.0 * std::exp(2.0 * r) + 10.0));
}

int cavity_dim_for_tail(cplx alpha, double tail) {
    const double a2 = std::norm(alpha);
    double term = std::exp(-a2), acc = term;
    int n = 0;
    while (1.0 - acc > tail && n < 400) {
        ++n;
        term *= a2 / n;
        acc += term;
    }
    return std::max(n + 1, 2);
}

QuantumState initial_state(const SystemParams& p, int C, int d, Frame frame, MechInit init) {
    const DerivedParams dp = derive(p);
    const CVec c = coherent_amplitudes(p.alpha, C);
    const double cav_loss = 1.0 - c.squaredNorm();
    if (cav_loss > 1e-8) throw TruncationError("cavity truncation too small for alpha: norm loss " + short_num(cav_loss));
    const CMat rc = c * c.adjoint() / c.squaredNorm();
    const int work = d + std::max(30, d);
    CMat sigma = CMat::Zero(work, work);
    if (init == MechInit::Coherent) {
        const CVec v = coherent_amplitudes(p.beta, work);
        sigma = v * v.adjoint();
    } else {
        const double nt = p.n_th;
        CMat th = CMat::Zero(work, work);
        for (int k = 0; k < work; ++k) th(k, k) = std::pow(nt / (nt + 1), k) / (nt + 1);
        const CMat D = displacement(p.beta, work).mat;
        sigma = D * th * D.adjoint();
    }
    if (frame == Frame::Squeezed && dp.r != 0.0) {
        const CMat S = squeeze(dp.r, work).mat;
        sigma = S * sigma * S.adjoint();
    }
    CMat sm = sigma.topLeftCorner(d, d);
    const double loss = 1.0 - sm.trace().real();
    if (loss > 1e-8) {
        throw TruncationError("mechanical truncation " + std::to_string(d) + " loses population " + short_num(loss));
    }
    if (loss > 1e-10) warn<TruncationError>("initial mechanical state truncated, population loss " + short_num(loss));
    sm /= sm.trace().real();
    sm = 0.5 * (sm + sm.adjoint());
    return QuantumState::mixed({C, d}, Eigen::kroneckerProduct(rc, sm).eval());
}

CMat unsqueeze(const CMat& rho_s, int C, int d, double r, int big) {
    if (rho_s.rows() != C * d) throw DimensionError("unsqueeze: state dimension mismatch");
    if (big < d) throw DimensionError("unsqueeze: working dimension smaller than mech_dim");
    const CMat Sd = squeeze(-r, big).mat;
    CMat out = CMat::Zero(C * big, C * big);
    CMat blk = CMat::Zero(big, big);
    for (int n = 0; n < C; ++n)
        for (int m = 0; m < C; ++m) {
            blk.setZero();
            blk.topLeftCorner(d, d) = rho_s.block(n * d, m * d, d, d);
            out.block(n * big, m * big, big, big) = Sd * blk * Sd.adjoint();
        }
    return out;
}

EvolutionResult evolve(const LindbladSpec& spec, const QuantumState& rho0, std::vector<double> checkpoints,
                       const EvolveOptions& opt) {
    const int C = spec.cavity_dim, d = spec.mech_dim, D = C * d;
    if (rho0.total_dim() != D || rho0.dims != spec.dims()) throw DimensionError("evolve: initial state dims");
    for (double t : checkpoints)
        if (!(t >= 0)) throw ParameterError("evolve: checkpoints must be non-negative");
    std::sort(checkpoints.begin(), checkpoints.end());
    const double wm = spec.params.omega_m;
    const double w0 = opt.interaction_picture ? spec.frame_frequency() / wm : 0.0;
    LindbladKernel kernel = build_kernel(spec, opt.interaction_picture);
    std::vector<double> s_points(checkpoints.size());
    for (std::size_t i = 0; i < checkpoints.size(); ++i) s_points[i] = checkpoints[i] * wm;

    EvolutionResult res;
    res.frame = spec.frame;
    res.dims = spec.dims();
    res.times = checkpoints;
    res.states.resize(opt.keep_states ? checkpoints.size() : 0);
    res.cavity_states.resize(checkpoints.size());
    res.log.resize(checkpoints.size());

    const CMat r0 = rho0.density();
    CVec rho = pack_lower(0.5 * (r0 + r0.adjoint()));
    auto f = [&](double s, const CVec& y, CVec& dy) { kernel.apply_packed(s, y, dy); };
    auto observe = [&](int idx, double s, const CVec& packed) {
        const CMat y = unpack_hermitian(packed, D);
        res.log[idx] = conservation(y, checkpoints[idx], C, d, opt);
        res.cavity_states[idx] = partial_trace(QuantumState::mixed({C, d}, y), 0);
        if (opt.keep_states) {
            CMat ys = y;
            to_schrodinger(ys, C, d, w0 * s);
            res.states[idx] = QuantumState::mixed({C, d}, ys);
        }
    };
    Dop853Options o;
    o.rtol = opt.rtol;
    o.atol = opt.atol;
    Dop853<CVec> solver(f, o);
    if (opt.replay_steps) {
        res.stats = solver.replay(0.0, rho, s_points, *opt.replay_steps, observe);
    } else {
        res.stats = solver.integrate(0.0, rho, s_points, observe);
    }
    return res;
}

namespace {

struct Truncation {
    int C, d;
};

Truncation choose_dims(const SystemParams& p, const DissipativeOptions& opt) {
    return {opt.cavity_dim > 0 ? opt.cavity_dim : cavity_dim_for_tail(p.alpha, opt.cavity_tail),
            opt.mech_dim > 0 ? opt.mech_dim : lindblad_mech_dim(p)};
}

std::vector<FisherReport> series_at_dims(const SystemParams& p, const std::vector<double>& times, double theta,
                                         const DissipativeOptions& opt, Truncation tr) {
    if (times.empty()) return {};
    const double t_ref = *std::max_element(times.begin(), times.end());
    const double dB = opt.dB_step > 0 ? opt.dB_step : default_dB_step(p, t_ref);
    const RVec grid = opt.grid.size() ? opt.grid : quadrature_grid();
    // B + dB/2 runs adaptively; the others replay its step sequence so that the
    // finite differences see identical discretizations
    std::vector<double> shifts = {dB / 2, -dB / 2};
    if (opt.richardson) {
        shifts.push_back(dB);
        shifts.push_back(-dB);
    }
    const int nruns = static_cast<int>(shifts.size());
    std::vector<EvolutionResult> runs(nruns);
    auto run = [&](int k, const std::vector<double>* steps) {
        SystemParams q = p;
        q.B_z += shifts[k];
        const LindbladSpec spec = make_lindblad_spec(q, tr.C, tr.d, opt.frame);
        EvolveOptions eo = opt.evolve;
        eo.keep_states = false;
        eo.replay_steps = steps;
        runs[k] = evolve(spec, initial_state(q, tr.C, tr.d, opt.frame, opt.init), times, eo);
    };
    run(0, nullptr);
    const std::vector<double> steps = runs[0].stats.steps;
    rethrow_first(parallel_for(nruns - 1, opt.threads, [&](int i) { run(i + 1, &steps); }));

    std::vector<FisherReport> out;
    for (std::size_t i = 0; i < times.size(); ++i) {
        PdfStencil st;
        st.plus_half = homodyne_pdf(runs[0].cavity_states[i], theta, grid).pdf;
        st.minus_half = homodyne_pdf(runs[1].cavity_states[i], theta, grid).pdf;
        if (opt.richardson) {
            st.plus = homodyne_pdf(runs[2].cavity_states[i], theta, grid).pdf;
            st.minus = homodyne_pdf(runs[3].cavity_states[i], theta, grid).pdf;
        }
        st.center = 0.5 * (st.plus_half + st.minus_half);
        FisherReport r = cfi_from_stencil(st, p, theta, dB, grid, opt.richardson_tol, opt.quadrature_tol);
        double trace_def = 0, herm_def = 0, min_eig = std::numeric_limits<double>::infinity(), top = 0;
        bool certified = true;
        for (const auto& run_k : runs) {
            const ConservationRecord& c = run_k.log[i];
            trace_def = std::max(trace_def, c.trace_defect);
            herm_def = std::max(herm_def, c.hermiticity_defect);
            if (!std::isnan(c.min_eigenvalue)) min_eig = std::min(min_eig, c.min_eigenvalue);
            certified = certified && (!opt.evolve.check_positivity || c.positivity_certified);
            top = std::max(top, c.top_population);
        }
        r.diagnostics["t"] = times[i];
        r.diagnostics["frame"] = to_string(opt.frame);
        r.diagnostics["cavity_dim"] = tr.C;
        r.diagnostics["mech_dim"] = tr.d;
        r.diagnostics["trace_defect"] = trace_def;
        r.diagnostics["hermiticity_defect"] = herm_def;
        r.diagnostics["min_eigenvalue"] = std::isinf(min_eig) ? nlohmann::json(nullptr) : nlohmann::json(min_eig);
        r.diagnostics["positivity_certified"] = certified;
        r.diagnostics["top_population"] = top;
        r.diagnostics["steps_accepted"] = runs[0].stats.accepted;
        r.diagnostics["steps_rejected"] = runs[0].stats.rejected;
        r.diagnostics["rhs_calls"] = runs[0].stats.rhs_calls;
        r.diagnostics["h_min"] = runs[0].stats.h_min / p.omega_m;
        r.diagnostics["h_max"] = runs[0].stats.h_max / p.omega_m;
        r.diagnostics["rtol"] = opt.evolve.rtol;
        r.diagnostics["evolutions"] = nruns;
        r.diagnostics["atol"] = opt.evolve.atol;
        if (top > 1e-3) {
            warn<TruncationError>("mechanical truncation " + std::to_string(tr.d) + " holds population " +
                                  short_num(top) + " in its top levels");
        }
        out.push_back(std::move(r));
    }
    return out;
}

}  // namespace

std::vector<FisherReport> cfi_dissipative_series(const SystemParams& p, const std::vector<double>& times,
                                                 double theta, const DissipativeOptions& opt) {
    const Truncation tr = choose_dims(p, opt);
    std::vector<FisherReport> base = series_at_dims(p, times, theta, opt, tr);
    if (opt.convergence_check) {
        const std::vector<FisherReport> fine = series_at_dims(p, times, theta, opt, {tr.C, 2 * tr.d});
        for (std::size_t i = 0; i < base.size(); ++i) {
            const double drift = std::abs(fine[i].value - base[i].value) / std::max(fine[i].value, 1e-300);
            base[i].diagnostics["convergence_drift"] = drift;
            base[i].diagnostics["convergence_mech_dim"] = 2 * tr.d;
            if (drift > opt.convergence_tol) {
                throw ConvergenceError("CFI drifts by " + short_num(drift) + " when mech_dim doubles from " +
                                       std::to_string(tr.d));
            }
        }
    }
    return base;
}

FisherReport cfi_dissipative(const SystemParams& p, double t, double theta, const DissipativeOptions& opt) {
    return cfi_dissipative_series(p, {t}, theta, opt).front();
}

std::vector<double> default_window_grid(const SystemParams& p, int points) {
    if (points < 3 || points % 2 == 0) throw ConfigError("window grid needs an odd number of points >= 3");
    const double tau1 = derive(p).tau1;
    std::vector<double> g(points);
    for (int i = 0; i < points; ++i) g[i] = tau1 * (0.8 + 0.4 * i / (points - 1));
    g[points / 2] = tau1;
    return g;
}

TimeWindow cfi_time_window(const SystemParams& p, const std::vector<double>& t_grid, double theta,
                           const DissipativeOptions& opt) {
    const double tau1 = derive(p).tau1;
    if (t_grid.empty()) throw ConfigError("empty time grid");
    const auto [lo, hi] = std::minmax_element(t_grid.begin(), t_grid.end());
    if (*lo > 0.8 * tau1 * (1 + 1e-9) || *hi < 1.2 * tau1 * (1 - 1e-9)) {
        throw ConfigError("time grid must span [0.8 tau1, 1.2 tau1]");
    }
    int centre = -1;
    for (std::size_t i = 0; i < t_grid.size(); ++i)
        if (std::abs(t_grid[i] - tau1) <= 1e-9 * tau1) centre = static_cast<int>(i);
    if (centre < 0) throw ConfigError("time grid must contain tau1");
    std::vector<double> sorted = t_grid;
    std::sort(sorted.begin(), sorted.end());
    TimeWindow w;
    w.times = sorted;
    w.reports = cfi_dissipative_series(p, sorted, theta, opt);
    for (const auto& r : w.reports) w.cfi.push_back(r.value);
    for (std::size_t i = 0; i < sorted.size(); ++i)
        if (std::abs(sorted[i] - tau1) <= 1e-9 * tau1) w.cfi_tau1 = w.cfi[i];
    for (std::size_t i = 0; i < sorted.size(); ++i) {
        if (std::abs(sorted[i] - tau1) <= 0.05 * tau1 * (1 + 1e-12)) {
            w.flatness = std::max(w.flatness, std::abs(w.cfi[i] - w.cfi_tau1) / w.cfi_tau1);
        }
    }
    return w;
}

}  // namespace optomag
