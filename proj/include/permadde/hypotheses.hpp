#pragma once

// Grid certification of the matrix hypotheses and the permanence verdict.
//
//   (H2)   [D - A - delta I] v >= 0        (H2*)  D v >= alpha A v, alpha > 1
//   (H5)   [B + A - D - delta I] v >= 0    (H5*)  B v >= alpha (D - A) v, alpha > 1
//
// "for t >> 1" is read as "at every point of the check grid".

#include <cstddef>
#include <optional>
#include <string>
#include <vector>

#include "json.hpp"
#include "permadde/lp.hpp"
#include "permadde/system.hpp"

namespace permadde {

struct GridSpec {
    double t_check = 10.0;
    double t_max = 1e4;
    std::size_t points = 400;

    /// Geometric when t_check > 0, uniform otherwise.
    std::vector<double> times() const;
    GridSpec refined(std::size_t factor) const;
};

nlohmann::json to_json(const GridSpec& g);

struct MatrixSamples {
    std::size_t n = 0;
    GridSpec grid;
    std::vector<double> times;
    std::vector<DenseMatrix> D, A, B;
};

/// D from d_i, A from the linear-term coefficients, B from the envelope
/// coefficients (beta_of when no valid envelope exists).
MatrixSamples sample_matrices(const SystemSpec& sys, double t_check, double t_max, std::size_t points);
MatrixSamples sample_matrices(const SystemSpec& sys, const GridSpec& grid);

enum class Hypothesis { H2, H2star, H5, H5star, sublinear };
enum class Status { certified, refuted, undecided, not_applicable };

std::string to_string(Hypothesis h);
std::string to_string(Status s);

struct Witness {
    Hypothesis tag = Hypothesis::H2;
    std::vector<double> v;  // max component 1
    /// delta for the additive forms, alpha for the ratio forms.
    double margin = 0.0;
    bool ratio = false;
    bool at_cap = false;  // alpha search hit its cap (no coupling)
    GridSpec grid;
    /// Worst margin of the fixed v on a finer grid (alpha - 1 for ratio forms).
    std::optional<double> fine_margin;
    bool under_resolved = false;
};

struct CheckResult {
    Hypothesis tag = Hypothesis::H2;
    Status status = Status::undecided;
    std::optional<Witness> witness;
    std::string note;
};

struct CheckOptions {
    double delta_cap = 1e12;
    double alpha_cap = 1e12;
    double alpha_min_excess = 1e-6;  // certified ratio forms need alpha >= 1 + this
    double rel_tol = 1e-9;           // bisection tolerance relative to the bracket top
    /// Reject certificates whose pointwise margin is smallest at the grid end
    /// and has at least halved since the grid's log-midpoint.
    bool vanishing_margin_test = true;
};

CheckResult check_H2(const MatrixSamples& s, const CheckOptions& opts = {});
CheckResult check_H2star(const MatrixSamples& s, const CheckOptions& opts = {});
CheckResult check_H5(const MatrixSamples& s, const CheckOptions& opts = {});
CheckResult check_H5star(const MatrixSamples& s, const CheckOptions& opts = {});

/// Rows D - diag(beta_plus) - A at delta = 0; not applicable when a gain is >= 1.
CheckResult check_sublinear_dissipative(const SystemSpec& sys, const std::vector<CoefficientFn>& beta_plus,
                                        const std::vector<double>& h_plus_gain, const GridSpec& grid,
                                        const CheckOptions& opts = {});

/// Pointwise margin of a fixed witness at each sample (alpha - 1 for ratio forms).
std::vector<double> witness_margins(const MatrixSamples& s, Hypothesis tag, const std::vector<double>& v);
/// Re-evaluates the witness on a grid refined by `factor` and fills fine_margin/under_resolved.
void reverify(const SystemSpec& sys, Witness& w, std::size_t factor = 10);

struct BoundFlag {
    std::string name;
    bool declared = false;
    bool bounded_above = false;
    bool positive_lower = false;  // bounded below by a positive constant
    double inf_hat = 0.0;
    double sup_hat = 0.0;
};

/// Declared enclosure when available, otherwise a growth heuristic on the grid.
BoundFlag bound_flag(const std::string& name, const CoefficientFn& f, const std::vector<double>& grid);

struct RatioDiagnostic {
    std::size_t component = 0;
    double d_over_a = 0.0;          // min over the upper half of d_i / sum_j a_ij
    double beta_over_margin = 0.0;  // min over the upper half of beta_i / (d_i - sum_j a_ij)
};

enum class Verdict { permanent, uniformly_persistent, no_verdict };
std::string to_string(Verdict v);

struct VerdictInputs {
    Status h2 = Status::undecided, h2star = Status::undecided, h5 = Status::undecided, h5star = Status::undecided;
    bool h4 = false;
    std::vector<std::string> h4_reasons;
    bool linear_delay = true;
    bool a_bounded = false;
    bool beta_bounded_above = false;
    bool beta_liminf_positive = false;
    bool d_liminf_positive = false;
    bool f_bounded = false;
    bool h_minus_liminf_positive = false;
    bool harvesting = false;
    std::optional<std::vector<double>> v_h5, v_h5star;
};

struct VerdictResult {
    Verdict verdict = Verdict::no_verdict;
    std::string theorem;
    std::string branch;
    std::vector<std::string> blocking;
    std::optional<std::vector<double>> floor_v;
    std::string floor_form;
};

VerdictResult permanence_verdict(const VerdictInputs& in);

struct EnvelopeSummary {
    std::size_t component = 0;
    bool valid = false;
    std::string reason;
    std::string h_minus;
    double monotone_cap = 0.0;
    double limit_at_infinity = 0.0;
};

struct HypothesisReport {
    std::string system;
    GridSpec grid;
    CheckResult h2, h2star, h5, h5star;
    std::vector<EnvelopeSummary> envelopes;
    std::vector<BoundFlag> flags;
    std::vector<std::string> warnings;
    std::vector<RatioDiagnostic> ratios;
    VerdictInputs inputs;
    VerdictResult verdict;
};

struct ReportOptions {
    GridSpec grid;
    CheckOptions check;
    bool reverify = true;
    std::size_t reverify_factor = 10;
};

HypothesisReport check_system(const SystemSpec& sys, const ReportOptions& opts = {});

nlohmann::json to_json(const Witness& w);
nlohmann::json to_json(const CheckResult& r);
nlohmann::json to_json(const HypothesisReport& r);
std::string to_text(const HypothesisReport& r);

}  // namespace permadde
