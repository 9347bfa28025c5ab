#pragma once

// Built-in model families and the worked examples as fixtures.

#include <map>
#include <optional>
#include <string>
#include <vector>

#include "permadde/experiments.hpp"
#include "permadde/hypotheses.hpp"
#include "permadde/system.hpp"

namespace permadde {

/// One birth term b_ik g_ik(x_i) of the Nicholson or Mackey-Glass family.
/// Discrete form: b(t) g(t, x_i(t - lag(t))).
/// Distributed form (lambda set): b(t) * integral over [t - lag(t), t] of lambda(s) g(s, x_i(s)) ds.
struct FamilyBirth {
    CoefficientFn b;
    CoefficientFn lag = CoefficientFn::constant(0.0);
    std::optional<CoefficientFn> lambda;
    CoefficientFn c = CoefficientFn::constant(1.0);
};

struct FamilyParams {
    std::string name;
    std::size_t n = 0;
    double tau = 0.0;
    double domain_start = 0.0;
    std::vector<CoefficientFn> d;
    /// linear[i][j]: functionals acting on x_j in equation i (may be empty).
    std::vector<std::vector<std::vector<LinearTerm>>> linear;
    std::vector<std::vector<FamilyBirth>> births;
};

/// g(t, x) = x exp(-c(t) x).
SystemSpec nicholson_system(const FamilyParams& p);
/// g(t, x) = x / (1 + c(t) x^alpha_i), alpha_i >= 1.
SystemSpec mackey_glass_system(const FamilyParams& p, const std::vector<double>& alpha);

struct ModelFixture {
    std::string id;
    std::string description;
    SystemSpec spec;
    std::optional<ExactSolution> exact;
    std::map<Hypothesis, Status> expected;
    std::optional<Verdict> expected_verdict;
    /// Substrings that must appear among the verdict's blocking conditions.
    std::vector<std::string> expected_blocking;
    /// True when the system meets the positivity structure of the permanence class.
    bool in_class = true;
};

struct Example31Params {
    double C = 2.0;
    double mu = 1.0;
    CoefficientFn tau = CoefficientFn::constant(0.5);
    double tau_max = 0.5;
};

struct Example32Params {
    double eta = 1.0;
    std::vector<std::vector<double>> d_off = {{0.0, 0.5}, {0.5, 0.0}};
    std::vector<double> d_diag = {2.0, 2.0};
    std::vector<std::vector<double>> b = {{0.25, 0.25}, {0.25, 0.25}};
    double tau_ij = 1.0;
    double sigma = 0.5;
    double c = 1.0;
    double nu = 1.0;
    /// beta_i(t) supplied by the caller.
    std::vector<CoefficientFn> beta = {CoefficientFn::affine(3.0, 3.0), CoefficientFn::affine(3.0, 3.0)};
};

struct Example33Params {
    double eta = 2.0;
    double beta = 2.0;
    bool nicholson = false;  // Mackey-Glass otherwise
    double c = 1.0;
    double nu = 1.0;
    double tau = 0.5;   // linear delays tau_1 = tau_2
    double sigma = 0.5;
    bool linear_delay = true;
};

struct Example34Params {
    double C = 2.0;
    double mu = 0.5;
    double mu1 = 1.1;
    double tau = 0.5;
};

struct Example35Params {
    double tau = 0.5;
    double C = 1.0;
    double mu = 1.0;
    CoefficientFn a = CoefficientFn::constant(1.0);
};

ModelFixture example_3_1(const Example31Params& p = {});
/// Constant-coefficient companion of the example: d = 2 mu, a = mu, same lag.
ModelFixture example_3_1_constant(const Example31Params& p = {});
ModelFixture example_3_2(const Example32Params& p = {});
ModelFixture example_3_3(const Example33Params& p = {});
ModelFixture example_3_4(const Example34Params& p = {});
ModelFixture example_3_5(const Example35Params& p = {});
/// d = 1, a_12 = a_21 = 0.25 (no delay), beta = 2, c = 1, birth lag 1.
ModelFixture nicholson_two_patch();
/// x' = -x + 2 x exp(-x).
ModelFixture scalar_nicholson();
/// x' = 0 with solution 1 (outside the permanence class: d = 0).
ModelFixture zero_system();

/// Fixture lookup by id ("example3.1", "nicholson2patch", ...).
ModelFixture example_fixture(const std::string& id);
std::vector<std::string> builtin_ids();

}  // namespace permadde
