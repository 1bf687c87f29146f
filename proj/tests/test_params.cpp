#include <doctest.h>

#include <cmath>

#include "optomag/constants.hpp"
#include "optomag/errors.hpp"
#include "optomag/params.hpp"
#include "support.hpp"

using namespace optomag;
using testsupport::rel;

TEST_CASE("derive: reference device actuation constant and stiffness") {
    const auto d = derive(reference_device());
    CHECK(rel(d.c_act, 2.98e-4) < 0.01);
    CHECK(rel(d.spring_k, 28.0) < 0.02);
    // independent evaluation
    const double k = 4e-11 * std::pow(constants::two_pi * 134e3, 2);
    CHECK(rel(d.spring_k, k) < 1e-14);
    CHECK(rel(d.c_act, k * 630e-6 * 5e8 / 30e9) < 1e-14);
}

TEST_CASE("derive: no quadratic coupling leaves the mechanical mode unsqueezed") {
    auto p = reference_device();
    p.lambda2 = 0.0;
    p.N2 = 5e6;
    const auto d = derive(p);
    CHECK(d.r == 0.0);
    CHECK(d.omega_s == p.omega_m);
    CHECK(d.lambda_s == p.lambda1);
    CHECK(rel(d.tau1, constants::two_pi / p.omega_m) < 1e-15);
}

TEST_CASE("derive: squeezing parameter closed form and its inverse") {
    auto p = reference_device();
    p.N2 = 1414.0 * 1414.0;
    const auto d = derive(p);
    CHECK(d.r == doctest::Approx(0.40205).epsilon(1e-4));
    const double x = 4.0 * p.lambda2 * p.N2 / p.omega_m;
    CHECK(rel(1.0 - std::exp(-4.0 * d.r), x) < 1e-12);
    CHECK(rel(d.omega_s, p.omega_m * std::exp(-2 * d.r)) < 1e-15);
    CHECK(rel(d.lambda_s, p.lambda1 * std::exp(d.r)) < 1e-15);
    CHECK(rel(d.tau1, 2 * d.half_period) < 1e-15);
}

TEST_CASE("r_for_target examples") {
    auto p = reference_device();
    CHECK(r_for_target(p, 0.0) == 0.0);
    CHECK(rel(r_for_target(p, 0.5756), 2.25e6) < 2e-3);
    CHECK(rel(std::sqrt(r_for_target(p, 0.5756)), 1500.0) < 1e-3);
    CHECK(rel(r_for_target(p, 0.9), 2.4317e6) < 1e-4);
    p.lambda2 = 0.0;
    CHECK_THROWS_AS(r_for_target(p, 0.1), ParameterError);
    CHECK_THROWS_AS(r_for_target(reference_device(), -0.1), ParameterError);
}

TEST_CASE("round trip r -> N2 -> r over [0, 0.95]") {
    auto p = reference_device();
    for (int i = 0; i <= 95; ++i) {
        const double r = 0.01 * i;
        p.N2 = r_for_target(p, r);
        const double back = derive(p).r;
        if (r == 0.0)
            CHECK(back == 0.0);
        else
            CHECK(rel(back, r) < 1e-12);
    }
}

TEST_CASE("monotonicity in N2") {
    auto p = reference_device();
    p.B_z = 1e-12;
    DerivedParams prev = derive(p);
    for (int i = 1; i <= 40; ++i) {
        p.N2 = 2.4e6 * i / 40.0;
        const DerivedParams d = derive(p);
        CHECK(d.r > prev.r);
        CHECK(d.omega_s < prev.omega_s);
        CHECK(d.lambda_s > prev.lambda_s);
        CHECK(d.f_s > prev.f_s);
        prev = d;
    }
}

TEST_CASE("actuation constant scaling") {
    const auto p = reference_device();
    const double c0 = actuation_constant(p);
    auto q = p;
    q.mass *= 3;
    CHECK(rel(actuation_constant(q), 3 * c0) < 1e-14);
    q = p;
    q.rod_length *= 2;
    CHECK(rel(actuation_constant(q), 2 * c0) < 1e-14);
    q = p;
    q.alpha_mag *= 5;
    CHECK(rel(actuation_constant(q), 5 * c0) < 1e-14);
    q = p;
    q.young_modulus *= 4;
    CHECK(rel(actuation_constant(q), c0 / 4) < 1e-14);
}

TEST_CASE("drive strength per tesla and its inverse") {
    auto p = reference_device();
    p.B_z = 1e-9;
    const auto d = derive(p);
    const double f = 1e-9 * d.c_act / std::sqrt(2 * p.mass * constants::hbar * p.omega_m);
    CHECK(rel(d.f, f) < 1e-14);
    CHECK(rel(bz_for_drive(p, f), 1e-9) < 1e-14);
}

TEST_CASE("invariant violations are rejected") {
    auto p = reference_device();
    p.N2 = p.omega_m / (4 * p.lambda2);
    CHECK_THROWS_AS(derive(p), ParameterError);
    p = reference_device();
    p.mass = 0;
    CHECK_THROWS_AS(derive(p), ParameterError);
    p = reference_device();
    p.omega_m = -1;
    CHECK_THROWS_AS(derive(p), ParameterError);
    p = reference_device();
    p.n_th = -1;
    CHECK_THROWS_AS(derive(p), ParameterError);
    p = reference_device();
    p.kappa = -1;
    CHECK_THROWS_AS(derive(p), ParameterError);
}
