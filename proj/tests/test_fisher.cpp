#include <doctest.h>

#include <cmath>

#include "optomag/constants.hpp"
#include "optomag/errors.hpp"
#include "optomag/fisher.hpp"
#include "support.hpp"

using namespace optomag;
using testsupport::compact_params;
using testsupport::rel;
using testsupport::uniform;

static SystemParams device(double r, double alpha = 1.0) {
    auto p = reference_device();
    p.N2 = r_for_target(p, r);
    p.alpha = alpha;
    return p;
}

TEST_CASE("analytic QFI: reference value and scaling") {
    auto p = device(0.0);
    const auto q = qfi_analytic_tau1(p);
    // independent evaluation of the closed form
    const double pi = constants::pi;
    const double m = 4e-11, w = 2 * pi * 134e3, l1 = 0.01 * w, L = 630e-6, am = 5e8, E = 30e9;
    const double expect = 32 * pi * pi * m * l1 * l1 * L * L * am * am * 1e6 / (constants::hbar * w * E * E);
    CHECK(rel(q.value, expect) < 1e-13);
    CHECK(rel(q.value, 1.11e24) < 0.01);
    CHECK(q.kind == FisherKind::QFI);
    CHECK(q.method == FisherMethod::Analytic);
    CHECK(rel(qfi_analytic_tau1(device(0.5)).value / q.value, 403.4287934927351) < 1e-10);
    p.lambda1 = 0;
    CHECK(qfi_analytic_tau1(p).value == 0.0);
    auto b = device(0.3);
    b.B_z = 3e-12;
    CHECK(qfi_analytic_tau1(b).value == qfi_analytic_tau1(device(0.3)).value);
}

TEST_CASE("analytic QFI exponential law") {
    std::vector<double> rs, ls;
    for (int i = 0; i <= 6; ++i) {
        rs.push_back(0.1 * i);
        ls.push_back(std::log(qfi_analytic_tau1(device(0.1 * i)).value));
    }
    double mr = 0, ml = 0;
    for (size_t i = 0; i < rs.size(); ++i) {
        mr += rs[i];
        ml += ls[i];
    }
    mr /= rs.size();
    ml /= rs.size();
    double sxy = 0, sxx = 0;
    for (size_t i = 0; i < rs.size(); ++i) {
        sxy += (rs[i] - mr) * (ls[i] - ml);
        sxx += (rs[i] - mr) * (rs[i] - mr);
    }
    CHECK(std::abs(sxy / sxx - 12.0) < 1e-10);
}

TEST_CASE("analytic CFI") {
    auto p = device(0.2, 1.3);
    const double fq = qfi_analytic_tau1(p, 1.69).value;
    CHECK(rel(cfi_analytic_tau1(p, constants::pi / 2).value, fq) < 1e-14);
    CHECK(cfi_analytic_tau1(p, 0.0).value == 0.0);
    p.alpha = cplx(1, 1) / std::sqrt(2.0) * 1.3;
    CHECK(cfi_analytic_tau1(p, constants::pi / 4).value < 1e-30 * fq);
    // angular profile
    p.alpha = cplx(0.9, 0.4);
    const double ref = cfi_analytic_tau1(p, 1.0).value / std::pow(0.9 * std::sin(1.0) - 0.4 * std::cos(1.0), 2);
    for (double th = 0.05; th < constants::pi; th += 0.1) {
        const double b = 0.9 * std::sin(th) - 0.4 * std::cos(th);
        CHECK(rel(cfi_analytic_tau1(p, th).value, ref * b * b) < 1e-6);
    }
}

TEST_CASE("sensitivities") {
    const auto p0 = device(0.0);
    const auto q0 = qfi_analytic_tau1(p0);
    CHECK(rel(q0.sensitivity_per_sqrt_hz, 2.59e-15) < 0.01);
    CHECK(rel(q0.sensitivity_per_sqrt_hz, ultimate_bound_per_sqrt_hz(p0)) < 1e-12);
    CHECK(rel(q0.sensitivity_per_sqrt_hz, q0.sensitivity_per_shot * std::sqrt(derive(p0).tau1)) < 1e-15);
    const auto p9 = device(0.9);
    const auto q9 = qfi_analytic_tau1(p9);
    CHECK(rel(q9.sensitivity_per_sqrt_hz, 2.88e-17) < 0.01);
    CHECK(rel(q9.sensitivity_per_sqrt_hz, ultimate_bound_per_sqrt_hz(p9)) < 1e-12);
    auto p2 = p0;
    p2.N1 *= 2;
    CHECK(rel(qfi_analytic_tau1(p2).sensitivity_per_sqrt_hz, q0.sensitivity_per_sqrt_hz / std::sqrt(2.0)) < 1e-14);
    FisherReport zero;
    CHECK_THROWS_AS(sensitivity(zero, SensitivityMode::PerShot, p0), ParameterError);
}

TEST_CASE("Hermite functions are orthonormal") {
    const RVec x = quadrature_grid();
    const RMat h = hermite_functions(x, 30);
    const double dx = x(1) - x(0);
    const RMat g = h.transpose() * h * dx;
    CHECK((g - RMat::Identity(30, 30)).cwiseAbs().maxCoeff() < 1e-10);
}

TEST_CASE("homodyne pdf") {
    const RVec x = quadrature_grid();
    const auto vac = homodyne_pdf(fock_state(0, 4), 0.7, x);
    for (Eigen::Index i = 0; i < x.size(); i += 37)
        CHECK(std::abs(vac.pdf(i) - std::exp(-x(i) * x(i)) / std::sqrt(constants::pi)) < 1e-14);
    CHECK(std::abs(vac.integral - 1) < 1e-10);
    const auto coh = homodyne_pdf(coherent(0.8, 20), 0.0, x);
    const double mean = (coh.pdf.array() * x.array()).sum() * (x(1) - x(0));
    CHECK(std::abs(mean - std::sqrt(2.0) * 0.8) < 1e-8);
    // first moment equals the operator expectation for a generic mixed state
    const int C = 10;
    CMat g = CMat::Random(C, C);
    CMat rho = g * g.adjoint();
    rho /= rho.trace();
    const auto s = QuantumState::mixed({C}, rho);
    const CMat a = destroy(C).mat;
    for (double th : {0.0, 0.4, 1.9, 3.0}) {
        const auto d = homodyne_pdf(s, th, x);
        const CMat xt = (a * std::polar(1.0, -th) + a.adjoint() * std::polar(1.0, th)) / std::sqrt(2.0);
        const double m1 = (d.pdf.array() * x.array()).sum() * (x(1) - x(0));
        CHECK(std::abs(m1 - (xt * rho).trace().real()) < 1e-8);
        CHECK(std::abs(d.integral - 1) < 1e-6);
        CHECK(d.pdf.minCoeff() >= 0.0);
    }
    CHECK_THROWS_AS(homodyne_pdf(tensor(fock_state(0, 2), fock_state(0, 2)), 0, x), DimensionError);
    // a truncated pdf grid loses norm
    CHECK_THROWS_AS(homodyne_pdf(coherent(3.0, 40), 0.0, quadrature_grid(-2, 2, 101)), TruncationError);
}

TEST_CASE("numeric QFI matches the closed form at tau1") {
    for (double r : {0.0, 0.2, 0.4}) {
        const auto p = device(r);
        const auto num = qfi_numeric(p, derive(p).tau1);
        const auto ana = qfi_analytic_tau1(p, 1.0);
        CHECK(rel(num.value, ana.value) < 1e-3);
        const auto fid = qfi_fidelity(p, derive(p).tau1);
        CHECK(rel(fid.value, ana.value) < 1e-3);
    }
}

TEST_CASE("numeric QFI does not depend on the field value at tau1") {
    auto p = device(0.2);
    const double t = derive(p).tau1;
    p.B_z = bz_for_drive(p, 0.003 * p.omega_m);
    const double f1 = qfi_numeric(p, t).value;
    p.B_z *= 2;
    const double f2 = qfi_numeric(p, t).value;
    CHECK(rel(f2, f1) < 1e-6);
    CHECK(qfi_numeric(p, 0.0).value < 1e-20 * f1);
}

TEST_CASE("numeric CFI matches the closed form and saturates the QFI") {
    const auto p = device(0.3);
    const double t = derive(p).tau1;
    const auto num = cfi_numeric(p, t, constants::pi / 2);
    CHECK(rel(num.value, cfi_analytic_tau1(p, constants::pi / 2).value) < 0.01);
    CHECK(rel(num.value, qfi_analytic_tau1(p, 1.0).value) < 0.01);
    CHECK(num.diagnostics["quadrature_error"].get<double>() < 5e-3 * num.value);
}

TEST_CASE("numeric CFI vanishes at theta = 0 for real alpha") {
    // the photon-number-squared phase 2 pi lambda_tilde^2 n^2 leaves a residual of order lambda_tilde^4
    auto p = device(0.0);
    p.lambda1 = 0.004 * p.omega_m;
    const double t = derive(p).tau1;
    const double fq = qfi_analytic_tau1(p, 1.0).value;
    CHECK(cfi_numeric(p, t, 0.0).value < 1e-6 * fq);
    auto q = device(0.0);
    const double ratio_ref = cfi_numeric(q, t, 0.0).value / qfi_analytic_tau1(q, 1.0).value;
    q.lambda1 *= 0.5;
    const double ratio_half = cfi_numeric(q, derive(q).tau1, 0.0).value / qfi_analytic_tau1(q, 1.0).value;
    CHECK(ratio_ref < 1e-5);
    CHECK(rel(ratio_ref / ratio_half, 16.0) < 0.05);
}

TEST_CASE("numeric CFI angular profile") {
    auto p = device(0.2);
    p.lambda1 = 0.002 * p.omega_m;
    p.alpha = cplx(0.8, 0.5);
    const double t = derive(p).tau1;
    const double ref = cfi_numeric(p, t, constants::pi / 2).value / (0.8 * 0.8);
    for (double th : {0.3, 1.0, 1.4, 2.2, 2.8}) {
        const double b = 0.8 * std::sin(th) - 0.5 * std::cos(th);
        CHECK(rel(cfi_numeric(p, t, th).value, ref * b * b) < 0.01);
    }
}

TEST_CASE("numeric CFI is continuous in the field") {
    auto p = device(0.2);
    const double t = derive(p).tau1;
    const double f0 = cfi_numeric(p, t, constants::pi / 2).value;
    p.B_z = bz_for_drive(p, 1e-3 * p.omega_m);
    const double f1 = cfi_numeric(p, t, constants::pi / 2).value;
    CHECK(rel(f1, f0) < 0.01);
}

TEST_CASE("information inequality CFI <= QFI across random draws") {
    for (int trial = 0; trial < 6; ++trial) {
        auto p = device(uniform(0.0, 0.6), uniform(0.5, 1.5));
        const double t = derive(p).tau1 * uniform(0.3, 1.2);
        const double th = uniform(0.0, constants::pi);
        const double fc = cfi_numeric(p, t, th).value;
        const double fq = qfi_numeric(p, t).value;
        CHECK(fc <= fq * (1 + 1e-4));
    }
}

TEST_CASE("numeric QFI slope in r") {
    std::vector<double> rs, ls;
    for (int i = 0; i <= 6; ++i) {
        const auto p = device(0.1 * i);
        rs.push_back(0.1 * i);
        ls.push_back(std::log(qfi_numeric(p, derive(p).tau1).value));
    }
    double mr = 0, ml = 0;
    for (size_t i = 0; i < rs.size(); ++i) mr += rs[i], ml += ls[i];
    mr /= rs.size();
    ml /= rs.size();
    double sxy = 0, sxx = 0;
    for (size_t i = 0; i < rs.size(); ++i) {
        sxy += (rs[i] - mr) * (ls[i] - ml);
        sxx += (rs[i] - mr) * (rs[i] - mr);
    }
    CHECK(std::abs(sxy / sxx - 12.0) < 0.24);
}

TEST_CASE("too large a field step is reported") {
    const auto p = device(0.2);
    FisherOptions opt;
    opt.dB_step = 1e4 * default_dB_step(p, derive(p).tau1);
    CHECK_THROWS_AS(cfi_numeric(p, derive(p).tau1, constants::pi / 2, opt), ConvergenceError);
}
