#include <doctest.h>

#include <cmath>

#include "optomag/analytic.hpp"
#include "optomag/constants.hpp"
#include "optomag/errors.hpp"
#include "support.hpp"

using namespace optomag;
using testsupport::compact_params;
using testsupport::rel;
using testsupport::uniform;

TEST_CASE("branch: no drive, vacuum branch carries no phase") {
    const auto p = compact_params(0.05, 0.0, 0.3);
    for (double frac : {0.0, 0.1, 0.37, 1.0, 2.5}) {
        const auto s = make_spec(p, frac * derive(p).tau1);
        const auto b = branch(0, s);
        CHECK(b.eta == 0.0);
        CHECK(b.phase == 0.0);
    }
}

TEST_CASE("branch: decoupled time values") {
    const auto p = compact_params(0.05, 0.02, 0.25);
    const auto d = derive(p);
    const auto s = make_spec(p, d.tau1);
    for (int n = 0; n < 5; ++n) {
        const auto b = branch(n, s);
        const double eta = d.lambda_tilde * n - d.f_tilde;
        CHECK(std::abs(b.phase - constants::two_pi * eta * eta) < 1e-12 * (1 + std::abs(b.phase)));
        CHECK(std::abs(b.mu_bar) < 1e-14);
        CHECK(std::abs(b.r_prime - d.r) < 1e-14);
        CHECK(std::abs(b.mech_amplitude - p.beta) < 1e-14);
    }
}

TEST_CASE("branch: half period at r = 0 doubles eta") {
    auto p = compact_params(0.05, 0.01, 0.0);
    const auto s = make_spec(p, derive(p).half_period);
    for (int n = 0; n < 4; ++n) {
        const auto b = branch(n, s);
        CHECK(std::abs(b.mech_amplitude - 2.0 * b.eta) < 1e-14);
    }
}

TEST_CASE("materialize_state agrees with lab-frame exponential per branch") {
    // oracle: exp(-i H_n t)|beta> for the lab Hamiltonian restricted to photon number n
    for (int trial = 0; trial < 4; ++trial) {
        auto p = compact_params(uniform(0.02, 0.06), uniform(-0.05, 0.05), uniform(0.0, 0.4));
        p.beta = cplx(uniform(-0.6, 0.6), uniform(-0.6, 0.6));
        p.alpha = cplx(uniform(0.3, 0.8), uniform(-0.4, 0.4));
        const auto d = derive(p);
        const double t = uniform(0.05, 1.4) * d.tau1;
        const int C = 10, M = 48, big = 120;
        const auto s = make_spec(p, t);
        const auto psi = materialize_state(s, C, M);
        const CVec c = coherent_amplitudes(p.alpha, C);
        cplx common = 0;
        for (int n = 0; n < C; ++n) {
            const CMat H = testsupport::lab_branch_hamiltonian(p, d.f, n, big);
            const CVec start = coherent_amplitudes(p.beta, big);
            const CVec evolved = expm(cplx(0, -p.omega_m * t) * H) * start;
            const CVec ana = psi.vec.segment(n * M, M) / c(n);
            const cplx ratio = ana.dot(evolved.head(M));
            CHECK(std::abs(std::abs(ratio) - 1.0) < 1e-8);
            if (n == 0) common = ratio;
            CHECK(std::abs(ratio - common) < 1e-8);
        }
    }
}

TEST_CASE("materialize_state limiting cases") {
    auto p = compact_params(0.05, 0.02, 0.3);
    p.alpha = 0.9;
    p.beta = cplx(0.3, -0.2);
    const auto d = derive(p);
    const int C = 12, M = 40;
    const auto s0 = materialize_state(make_spec(p, 0.0), C, M);
    const auto prod = tensor(coherent(p.alpha, C), coherent(p.beta, M));
    CHECK((s0.vec - prod.vec).norm() < 1e-8);
    for (int m = 1; m <= 2; ++m) {
        const auto s = materialize_state(make_spec(p, m * d.tau1), C, M);
        const auto mech = partial_trace(s, 1);
        CHECK(fidelity_pure(mech, coherent(p.beta, M).vec) > 1 - 1e-8);
    }
    // maximal squeeze at a quarter of tau1
    auto q = compact_params(0.05, 0.0, 0.3);
    q.alpha = 0.0;
    const auto dq = derive(q);
    const auto sq = materialize_state(make_spec(q, dq.half_period / 2), 2, M);
    const auto mech = partial_trace(sq, 1);
    const CMat a = destroy(M).mat;
    const CMat x = (a + a.adjoint()) / std::sqrt(2.0);
    const double var = (x * x * mech.rho).trace().real() - std::pow((x * mech.rho).trace().real(), 2);
    CHECK(rel(var, std::exp(4 * dq.r) / 2) < 1e-8);
    const CVec sdag = squeeze(-2 * dq.r, 80).mat.col(0).head(M);
    CHECK(fidelity_pure(mech, sdag) > 1 - 1e-8);
}

TEST_CASE("reduced cavity state closed form") {
    auto p = compact_params(0.08, 0.03, 0.2);
    p.alpha = cplx(1.1, 0.4);
    p.beta = cplx(0.2, 0.1);
    const auto d = derive(p);
    const int C = 16, M = 48;
    const auto r0 = reduced_cavity_rho(make_spec(p, 0.0), C);
    const auto coh = coherent(p.alpha, C);
    CHECK((r0.rho - coh.density()).cwiseAbs().maxCoeff() < 1e-8);
    for (double frac : {1.0 / 3.0, 0.5, 0.77, 1.0, 1.6}) {
        const auto s = make_spec(p, frac * d.tau1);
        const auto rc = reduced_cavity_rho(s, C);
        const auto oracle = partial_trace(materialize_state(s, C, M), 0);
        CHECK((rc.rho - oracle.rho).cwiseAbs().maxCoeff() < 1e-8);
        CHECK((rc.rho - rc.rho.adjoint()).cwiseAbs().maxCoeff() < 1e-14);
    }
    const auto rt = reduced_cavity_rho(make_spec(p, d.tau1), C);
    CHECK(std::abs(purity(rt) - 1.0) < 1e-8);
    CHECK(purity(reduced_cavity_rho(make_spec(p, d.tau1 / 4), C)) < 1.0 - 1e-4);
}

TEST_CASE("oracle equivalence across random draws") {
    for (int trial = 0; trial < 6; ++trial) {
        auto p = compact_params(uniform(0.01, 0.1), uniform(-0.05, 0.05), uniform(0, 0.35));
        p.alpha = cplx(uniform(-1.0, 1.0), uniform(-1.0, 1.0));
        const auto d = derive(p);
        const auto s = make_spec(p, uniform(0, 3) * d.tau1);
        const auto rc = reduced_cavity_rho(s, 16);
        const auto oracle = partial_trace(materialize_state(s, 16, 40), 0);
        CHECK((rc.rho - oracle.rho).cwiseAbs().maxCoeff() < 1e-8);
    }
}

TEST_CASE("decoupling property over random draws and m <= 5") {
    for (int trial = 0; trial < 5; ++trial) {
        auto p = compact_params(uniform(0.01, 0.1), uniform(-0.05, 0.05), uniform(0, 0.4));
        p.alpha = uniform(0.5, 1.2);
        p.beta = cplx(uniform(-0.5, 0.5), uniform(-0.5, 0.5));
        const auto d = derive(p);
        for (int m = 1; m <= 5; ++m) {
            const auto s = materialize_state(make_spec(p, m * d.tau1), 14, 36);
            CHECK(fidelity_pure(partial_trace(s, 1), coherent(p.beta, 36).vec) > 1 - 1e-8);
        }
    }
}

TEST_CASE("phase at decoupling") {
    auto p = compact_params(0.01, 0.0, 0.0);
    const auto d0 = derive(p);
    CHECK(phase_at_decoupling(d0, 0, 1) == 0.0);
    auto q = compact_params(0.01, 0.01, 0.0);
    const auto d = derive(q);
    CHECK(std::abs(phase_at_decoupling(d, 1, 1)) < 1e-20);
    for (int n = 0; n < 6; ++n) {
        CHECK(std::abs(phase_at_decoupling(d, n, 2) - 2 * phase_at_decoupling(d, n, 1)) <=
              1e-14 * phase_at_decoupling(d, n, 2));
        for (int m = 1; m <= 4; ++m) {
            const double lin = m * phase_at_decoupling(d, n, 1);
            CHECK(std::abs(phase_at_decoupling(d, n, m) - lin) <= 1e-14 * std::abs(lin));
        }
    }
    CHECK_THROWS_AS(phase_at_decoupling(d, 1, 0), ParameterError);
}

TEST_CASE("PAE identities") {
    auto p = compact_params(0.03, 0.01, 0.0);
    CHECK(pae(p, derive(p), 0) == 0.0);
    for (int trial = 0; trial < 20; ++trial) {
        auto q = compact_params(uniform(0.001, 0.1), uniform(-0.05, 0.05), uniform(0, 0.9));
        const auto d = derive(q);
        auto q0 = q;
        q0.N2 = 0;
        const auto d0 = derive(q0);
        for (int n = 1; n < 8; ++n) {
            const double diff = (phase_at_decoupling(d, n, 1) - phase_at_decoupling(d, 0, 1)) / d.tau1;
            CHECK(rel(pae(q, d, n), diff) < 1e-10);
            CHECK(rel(pae(q, d, n) / pae(q0, d0, n), std::exp(4 * d.r)) < 1e-12);
        }
    }
}

TEST_CASE("PAE argmax over n is independent of the squeezing factor") {
    auto p = compact_params(0.01, 0.05, 0.0);
    const auto best = [&](double r) {
        auto q = p;
        q.N2 = r_for_target(q, r);
        const auto d = derive(q);
        int arg = 0;
        for (int n = 0; n < 30; ++n)
            if (std::abs(pae(q, d, n)) > std::abs(pae(q, d, arg))) arg = n;
        return arg;
    };
    CHECK(best(0.0) == best(0.4));
    CHECK(best(0.0) == best(0.8));
}

TEST_CASE("quadrature variance and squeezing degree") {
    const double w = 2.0;
    for (double r : {0.2, 0.40205, 0.5756}) {
        for (int m = 0; m <= 2; ++m) {
            CHECK(std::abs(variance_x(r, w, m * constants::pi / w) - 0.5) < 1e-12);
            CHECK(std::abs(squeezing_degree(r, w, m * constants::pi / w)) < 1e-10);
        }
        CHECK(rel(variance_x(r, w, constants::pi / (2 * w)), std::exp(4 * r) / 2) < 1e-12);
        CHECK(rel(squeezing_degree(r, w, constants::pi / (2 * w)), max_squeezing_db(r)) < 1e-12);
        for (int k = 0; k < 20; ++k) {
            const double t = uniform(0, 10);
            CHECK(std::abs(variance_x(r, w, t + constants::pi / w) - variance_x(r, w, t)) < 1e-12);
            CHECK(variance_x(r, w, t) >= 0.5 - 1e-12);
        }
    }
    CHECK(max_squeezing_db(0.40205) == doctest::Approx(6.985).epsilon(1e-3));
    CHECK(squeezing_degree(0.0, w, 0.3) == 0.0);
}

TEST_CASE("variance formula matches the materialized mechanical state") {
    auto p = compact_params(0.05, 0.0, 0.35);
    p.alpha = 0.0;
    const auto d = derive(p);
    const int M = 50;
    const CMat a = destroy(M).mat;
    const CMat x = (a + a.adjoint()) / std::sqrt(2.0);
    for (double frac : {0.1, 0.2, 0.3, 0.45, 0.6}) {
        const double t = frac * d.tau1;
        const auto mech = partial_trace(materialize_state(make_spec(p, t), 2, M), 1);
        const double var = (x * x * mech.rho).trace().real();
        CHECK(rel(var, variance_x(d.r, d.omega_s, t)) < 1e-8);
    }
}

TEST_CASE("tomography elements") {
    auto p = compact_params(0.0, 0.0, 0.0);
    p.alpha = 0.8;
    const auto s0 = make_spec(p, derive(p).tau1);
    for (int l = 1; l <= 4; ++l) {
        const auto t = tomography(l, s0);
        CHECK(std::abs(t.delta_phase) < 1e-15);
        const double al = std::pow(0.8, l) / std::sqrt(std::tgamma(l + 1.0));
        CHECK(std::abs(t.rho_dd - 0.5 * std::exp(-0.64) * std::pow(1 - al, 2)) < 1e-14);
    }
    CHECK_THROWS_AS(tomography(0, s0), ParameterError);
}

TEST_CASE("tomography agrees with explicit projection of the reduced state") {
    for (int trial = 0; trial < 5; ++trial) {
        auto p = compact_params(uniform(0.01, 0.1), uniform(-0.05, 0.05), uniform(0, 0.6));
        p.alpha = cplx(uniform(0.3, 1.3), uniform(-0.6, 0.6));
        const auto s = make_spec(p, derive(p).tau1);
        const int C = 20;
        const auto rc = reduced_cavity_rho(s, C);
        for (int l = 1; l <= 4; ++l) {
            CVec down = CVec::Zero(C), up = CVec::Zero(C);
            down(0) = up(0) = 1.0 / std::sqrt(2.0);
            down(l) = -1.0 / std::sqrt(2.0);
            up(l) = 1.0 / std::sqrt(2.0);
            const auto t = tomography(l, s);
            CHECK(std::abs(t.rho_dd - down.dot(rc.rho * down)) < 1e-10);
            CHECK(std::abs(t.rho_uu - up.dot(rc.rho * up)) < 1e-10);
            CHECK(std::abs(t.rho_du - down.dot(rc.rho * up)) < 1e-10);
            CHECK(std::abs(t.rho_ud - up.dot(rc.rho * down)) < 1e-10);
            CHECK(std::abs(t.sigma_z - (t.rho_uu - t.rho_dd).real()) < 1e-10);
            CHECK(std::abs(t.rho_du - std::conj(t.rho_ud)) < 1e-15);
        }
    }
}

TEST_CASE("tomography diagonal sum closed form") {
    auto p = compact_params(0.01, 0.0, 0.0);
    p.N2 = 1500.0 * 1500.0;
    p.alpha = 1.0;
    const auto s = make_spec(p, derive(p).tau1);
    const auto t = tomography(3, s);
    CHECK(std::abs((t.rho_dd + t.rho_uu).real() - std::exp(-1.0) * (1 + 1.0 / 6.0)) < 1e-14);
}
