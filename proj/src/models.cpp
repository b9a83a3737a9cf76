#include "qgeom/models.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

namespace qgeom {

namespace {

constexpr Real kPi = 3.14159265358979323846;

bool near_integer(Real x, Real tol = 1e-9) { return std::abs(x - std::round(x)) < tol; }

// ---------------------------------------------------------------------------
// Ladder data shared by the evaluators: storage index p = 0..d-1 counts steps
// away from the base-extremal weight; raise[p] is the matrix element moving
// p -> p+1. For highest-weight series the storage "raise" is the algebra's
// lowering operator; `storage_raise_is_algebra_plus` records which.
// ---------------------------------------------------------------------------
struct LadderData {
    GroupTag group;
    SeriesTag series;
    int d = 0;
    std::vector<Real> raise_coef;  // size d-1
    VectorXr weights;              // j_z eigenvalues along the storage basis
    bool storage_raise_is_algebra_plus = true;
};

Real jj1(const Complex& j) {
    // j(j+1) is real for every supported series (real j, or Re j = -1/2).
    return (j * (j + 1.0)).real();
}

LadderData ladder_data(const ModelSpec& spec) {
    LadderData data;
    data.group = spec.group;
    data.series = spec.series;
    switch (spec.group) {
        case GroupTag::WeylHeisenberg: {
            data.d = spec.truncation;
            if (data.d < 4) throw InvalidConfig("truncation too small");
            data.raise_coef.resize(static_cast<size_t>(data.d - 1));
            for (int p = 0; p + 1 < data.d; ++p)
                data.raise_coef[static_cast<size_t>(p)] = std::sqrt(Real(p + 1));
            data.weights = VectorXr::LinSpaced(data.d, 0, data.d - 1);
            return data;
        }
        case GroupTag::SU2: {
            const Real j = spec.j.real();
            if (spec.j.imag() != 0 || !near_integer(2 * j) || j < 0.5)
                throw InvalidConfig("SU(2) needs real j in {1/2, 1, 3/2, ...}");
            if (!near_integer(spec.m + j) || std::abs(spec.m) > j + 1e-9)
                throw InvalidConfig("SU(2) weight m must lie in {-j, ..., j}");
            data.d = static_cast<int>(std::lround(2 * j)) + 1;
            data.raise_coef.resize(static_cast<size_t>(data.d - 1));
            data.weights = VectorXr(data.d);
            for (int p = 0; p < data.d; ++p) {
                const Real mu = -j + p;
                data.weights[p] = mu;
                if (p + 1 < data.d)
                    data.raise_coef[static_cast<size_t>(p)] =
                        std::sqrt(j * (j + 1) - mu * (mu + 1));
            }
            return data;
        }
        case GroupTag::SU11: {
            const SeriesValidation v = validate_series(spec);
            if (!v.ok) throw InvalidConfig("invalid quantum numbers: " + v.reason);
            if (spec.series == SeriesTag::Ck0 || spec.series == SeriesTag::Ck12 ||
                spec.series == SeriesTag::Supplementary ||
                spec.series == SeriesTag::ProjectiveContinuous)
                throw UnsupportedSeries(
                    "no faithful truncated ladder exists for series " + to_string(spec.series) +
                    "; closed-form tensors remain available");
            const Real j = spec.j.real();
            const Real J = jj1(spec.j);
            data.d = spec.truncation;
            if (data.d < 4) throw InvalidConfig("truncation too small");
            data.raise_coef.resize(static_cast<size_t>(data.d - 1));
            data.weights = VectorXr(data.d);
            if (spec.series == SeriesTag::Dminus) {
                // Highest-weight series: storage walks m = j, j-1, ... and the
                // storage raise realizes the algebra's J_minus.
                data.storage_raise_is_algebra_plus = false;
                for (int p = 0; p < data.d; ++p) {
                    const Real m = j - p;
                    data.weights[p] = m;
                    if (p + 1 < data.d)
                        data.raise_coef[static_cast<size_t>(p)] =
                            std::sqrt(m * (m - 1) - J);
                }
            } else {
                // Dplus / ProjectiveDiscrete / TwoOscillator: m = -j + p. The
                // two-oscillator branches live in one parity sector of the
                // boson space; their step-ladder matrix elements coincide with
                // the algebraic ones, so one code path serves all three.
                for (int p = 0; p < data.d; ++p) {
                    const Real m = -j + p;
                    data.weights[p] = m;
                    if (p + 1 < data.d)
                        data.raise_coef[static_cast<size_t>(p)] =
                            std::sqrt(m * (m + 1) - J);
                }
            }
            return data;
        }
    }
    throw InvalidConfig("unknown group tag");
}

int base_index(const ModelSpec& spec) {
    switch (spec.group) {
        case GroupTag::WeylHeisenberg: {
            if (!near_integer(spec.m) || spec.m < 0)
                throw InvalidConfig("oscillator base level must be a non-negative integer");
            return static_cast<int>(std::lround(spec.m));
        }
        case GroupTag::SU2:
            return static_cast<int>(std::lround(spec.m + spec.j.real()));
        case GroupTag::SU11:
            if (spec.series == SeriesTag::Dminus)
                return static_cast<int>(std::lround(spec.j.real() - spec.m));
            return static_cast<int>(std::lround(spec.m + spec.j.real()));
    }
    throw InvalidConfig("unknown group tag");
}

// exp(z R) v with R e_p = raise[p] e_{p+1}: terminating series on the
// truncated basis; every coefficient receives exactly one product path per
// source component, so there is no cancellation between series terms.
VectorXc exp_raise(const std::vector<Real>& raise_coef, Complex z, VectorXc v) {
    const Eigen::Index d = v.size();
    VectorXc term = v;
    for (Eigen::Index k = 1; k < d; ++k) {
        VectorXc next = VectorXc::Zero(d);
        for (Eigen::Index p = 0; p + 1 < d; ++p)
            next[p + 1] = raise_coef[static_cast<size_t>(p)] * term[p];
        next *= z / Real(k);
        v += next;
        term.swap(next);
        if (term.cwiseAbs().maxCoeff() == 0.0) break;
    }
    return v;
}

// exp(z L) v with L e_{p+1} = raise[p] e_p (the adjoint band).
VectorXc exp_lower(const std::vector<Real>& raise_coef, Complex z, VectorXc v) {
    const Eigen::Index d = v.size();
    VectorXc term = v;
    for (Eigen::Index k = 1; k < d; ++k) {
        VectorXc next = VectorXc::Zero(d);
        for (Eigen::Index p = 0; p + 1 < d; ++p)
            next[p] = raise_coef[static_cast<size_t>(p)] * term[p + 1];
        next *= z / Real(k);
        v += next;
        term.swap(next);
        if (term.cwiseAbs().maxCoeff() == 0.0) break;
    }
    return v;
}

struct DisplacementFactors {
    Complex z_plus;   // on the storage raise
    Complex z_minus;  // on the storage lower
    Real beta;        // diagonal weight exponent
    Real log_scale;   // log of the scalar prefactor
};

DisplacementFactors factors_at(GroupTag group, SeriesTag series, const VectorXr& s) {
    DisplacementFactors f{};
    switch (group) {
        case GroupTag::WeylHeisenberg: {
            const Complex alpha(s[0], s[1]);
            f.z_plus = alpha;
            f.z_minus = -std::conj(alpha);
            f.beta = 0.0;
            f.log_scale = -0.5 * std::norm(alpha);
            return f;
        }
        case GroupTag::SU2: {
            const Real theta = s[0], phi = s[1];
            const Complex tau = std::tan(theta / 2) * std::exp(Complex(0, phi));
            f.z_plus = tau;
            f.z_minus = -std::conj(tau);
            f.beta = std::log1p(std::norm(tau));
            f.log_scale = 0.0;
            return f;
        }
        case GroupTag::SU11: {
            const Real rho = s[0], phi = s[1];
            const Complex tau = -std::tanh(rho / 2) * std::exp(Complex(0, -phi));
            if (series == SeriesTag::Dminus) {
                // Highest-weight storage: the same group element must be
                // applied in anti-normal order so that the expansion runs down
                // the spectrum. The storage raise realizes the algebra's
                // lowering operator, so the factor roles swap and the diagonal
                // exponent flips sign relative to the lowest-weight series.
                f.z_plus = -std::conj(tau);
                f.z_minus = tau;
                f.beta = -std::log1p(-std::norm(tau));
                f.log_scale = 0.0;
                return f;
            }
            f.z_plus = tau;
            f.z_minus = -std::conj(tau);
            f.beta = std::log1p(-std::norm(tau));
            f.log_scale = 0.0;
            return f;
        }
    }
    throw InvalidConfig("unknown group tag");
}

VectorXc displace_vector(const LadderData& data, const DisplacementFactors& f, VectorXc v) {
    v = exp_lower(data.raise_coef, f.z_minus, std::move(v));
    for (Eigen::Index p = 0; p < v.size(); ++p)
        v[p] *= std::exp(f.beta * data.weights[p]);
    v = exp_raise(data.raise_coef, f.z_plus, std::move(v));
    if (f.log_scale != 0.0) v *= std::exp(f.log_scale);
    return v;
}

Domain model_domain(GroupTag group) {
    switch (group) {
        case GroupTag::WeylHeisenberg: return {{-3.0, 3.0}, {-3.0, 3.0}};
        case GroupTag::SU2: return {{1e-3, kPi - 1e-3}, {-7.0, 7.0}};
        case GroupTag::SU11: return {{-0.5, 3.0}, {-7.0, 7.0}};
    }
    return {};
}

std::vector<std::string> model_coords(GroupTag group) {
    switch (group) {
        case GroupTag::WeylHeisenberg: return {"alpha1", "alpha2"};
        case GroupTag::SU2: return {"theta", "phi"};
        case GroupTag::SU11: return {"rho", "phi"};
    }
    return {};
}

// Fock-space boson matrices for the two-oscillator realization.
void two_oscillator_matrices(int d, MatrixXc& j_plus, MatrixXc& j_minus, MatrixXc& j_z) {
    MatrixXc a = MatrixXc::Zero(d, d);
    for (int p = 1; p < d; ++p) a(p - 1, p) = std::sqrt(Real(p));
    const MatrixXc ad = a.adjoint();
    j_plus = 0.5 * ad * ad;
    j_minus = 0.5 * a * a;
    j_z = 0.5 * (ad * a + 0.5 * MatrixXc::Identity(d, d));
}

MatrixXc displacement_matrix(const LadderData& data, const DisplacementFactors& f) {
    MatrixXc out(data.d, data.d);
    for (int q = 0; q < data.d; ++q) {
        VectorXc e = VectorXc::Zero(data.d);
        e[q] = 1.0;
        out.col(q) = displace_vector(data, f, std::move(e));
    }
    return out;
}

}  // namespace

std::string to_string(GroupTag tag) {
    switch (tag) {
        case GroupTag::WeylHeisenberg: return "glauber";
        case GroupTag::SU2: return "su2";
        case GroupTag::SU11: return "su11";
    }
    return "?";
}

std::string to_string(SeriesTag tag) {
    switch (tag) {
        case SeriesTag::None: return "none";
        case SeriesTag::Dplus: return "Dplus";
        case SeriesTag::Dminus: return "Dminus";
        case SeriesTag::Ck0: return "Ck0";
        case SeriesTag::Ck12: return "Ck12";
        case SeriesTag::Supplementary: return "Supplementary";
        case SeriesTag::ProjectiveDiscrete: return "ProjectiveDiscrete";
        case SeriesTag::ProjectiveContinuous: return "ProjectiveContinuous";
        case SeriesTag::TwoOscillator: return "TwoOscillator";
    }
    return "?";
}

std::optional<GroupTag> parse_group(const std::string& text) {
    if (text == "glauber" || text == "wh" || text == "weyl-heisenberg")
        return GroupTag::WeylHeisenberg;
    if (text == "su2") return GroupTag::SU2;
    if (text == "su11") return GroupTag::SU11;
    return std::nullopt;
}

std::optional<SeriesTag> parse_series(const std::string& text) {
    std::string t = text;
    std::transform(t.begin(), t.end(), t.begin(), [](unsigned char c) { return std::tolower(c); });
    if (t == "none") return SeriesTag::None;
    if (t == "dplus" || t == "d+") return SeriesTag::Dplus;
    if (t == "dminus" || t == "d-") return SeriesTag::Dminus;
    if (t == "ck0") return SeriesTag::Ck0;
    if (t == "ck12") return SeriesTag::Ck12;
    if (t == "supplementary") return SeriesTag::Supplementary;
    if (t == "projectivediscrete" || t == "projective-discrete") return SeriesTag::ProjectiveDiscrete;
    if (t == "projectivecontinuous" || t == "projective-continuous")
        return SeriesTag::ProjectiveContinuous;
    if (t == "twooscillator" || t == "two-oscillator" || t == "2osc") return SeriesTag::TwoOscillator;
    return std::nullopt;
}

SeriesValidation validate_series(Complex j, Real m, SeriesTag series) {
    auto fail = [](std::string why) { return SeriesValidation{false, std::move(why)}; };
    auto pass = [](std::string why) { return SeriesValidation{true, std::move(why)}; };
    const Real jr = j.real(), ji = j.imag();
    switch (series) {
        case SeriesTag::None:
            return pass("no series bookkeeping for this group");
        case SeriesTag::Dplus:
            if (ji != 0 || !near_integer(2 * jr) || jr > -0.5 + 1e-12)
                return fail("Dplus needs j in {-1/2, -1, -3/2, ...}");
            if (!near_integer(m + jr) || std::lround(m + jr) < 0)
                return fail("Dplus needs m in {-j, -j+1, ...}");
            return pass("lowest-weight discrete series");
        case SeriesTag::Dminus:
            if (ji != 0 || !near_integer(2 * jr) || jr > -0.5 + 1e-12)
                return fail("Dminus needs j in {-1/2, -1, -3/2, ...}");
            if (!near_integer(jr - m) || std::lround(jr - m) < 0)
                return fail("Dminus needs m in {j, j-1, ...}");
            return pass("highest-weight discrete series");
        case SeriesTag::Ck0:
            if (std::abs(jr + 0.5) > 1e-9 || ji == 0)
                return fail("Ck0 needs j = -1/2 + i k with real k != 0");
            if (!near_integer(m)) return fail("Ck0 needs integer m");
            return pass("continuous series, integer weights (analytic only)");
        case SeriesTag::Ck12:
            if (std::abs(jr + 0.5) > 1e-9 || ji == 0)
                return fail("Ck12 needs j = -1/2 + i k with real k != 0");
            if (!near_integer(m - 0.5)) return fail("Ck12 needs half-odd m");
            return pass("continuous series, half-odd weights (analytic only)");
        case SeriesTag::Supplementary:
            if (ji != 0 || jr <= -0.5 + 1e-12 || jr >= -1e-12)
                return fail("supplementary series needs real j with -1/2 < j < 0");
            if (!near_integer(m)) return fail("supplementary series needs integer m");
            return pass("supplementary series (analytic only)");
        case SeriesTag::ProjectiveDiscrete:
            if (ji != 0 || jr >= -1e-12) return fail("projective discrete needs real j < 0");
            if (!near_integer(m + jr) || std::lround(m + jr) < 0)
                return fail("projective discrete needs m in {-j, -j+1, ...}");
            return pass("projective lowest-weight series");
        case SeriesTag::ProjectiveContinuous:
            if (std::abs(jr + 0.5) > 1e-9 || ji == 0)
                return fail("projective continuous needs j = -1/2 + i delta");
            return pass("projective continuous series, m0 = frac(m) (analytic only)");
        case SeriesTag::TwoOscillator: {
            const bool even = std::abs(jr + 0.25) < 1e-12;
            const bool odd = std::abs(jr + 0.75) < 1e-12;
            if (ji != 0 || (!even && !odd))
                return fail("two-oscillator branches are j = -1/4 (even) and j = -3/4 (odd)");
            if (!near_integer(m + jr) || std::lround(m + jr) < 0) {
                if (near_integer(m - jr - 0.5) || near_integer(m + jr + 0.5))
                    return fail("m belongs to the other parity branch");
                return fail("two-oscillator needs m in {-j, -j+1, ...}");
            }
            return pass(even ? "even-level branch (m = 1/4, 5/4, ...)"
                             : "odd-level branch (m = 3/4, 7/4, ...)");
        }
    }
    return fail("unknown series tag");
}

LadderAlgebra build_ladder(const ModelSpec& spec) {
    LadderAlgebra out;
    out.group_tag = spec.group;
    if (spec.series == SeriesTag::TwoOscillator) {
        // Return the honest boson realization on the full Fock space.
        const int d = spec.truncation;
        two_oscillator_matrices(d, out.j_plus, out.j_minus, out.j_z);
        out.weights = out.j_z.diagonal().real();
        return out;
    }
    const LadderData data = ladder_data(spec);
    MatrixXc raise = MatrixXc::Zero(data.d, data.d);
    for (int p = 0; p + 1 < data.d; ++p)
        raise(p + 1, p) = data.raise_coef[static_cast<size_t>(p)];
    if (data.storage_raise_is_algebra_plus) {
        out.j_plus = raise;
        out.j_minus = raise.adjoint();
    } else {
        out.j_minus = raise;
        out.j_plus = raise.adjoint();
    }
    out.j_z = data.weights.cast<Complex>().asDiagonal();
    out.weights = data.weights;
    return out;
}

StateFamily build_model(const ModelSpec& spec) {
    const SeriesValidation v = validate_series(spec);
    if (!v.ok) throw InvalidConfig("invalid quantum numbers: " + v.reason);
    const LadderData data = ladder_data(spec);
    const int base = base_index(spec);
    if (base < 0 || base >= data.d)
        throw InvalidConfig("base state falls outside the truncated basis");

    StateFamily family;
    family.param_dim = 2;
    family.hilbert_dim = data.d;
    family.domain = model_domain(spec.group);
    family.coord_names = model_coords(spec.group);
    family.smoothness_order = 6;
    family.strict_normalization = true;
    family.drift_tolerance = 1e-10;
    family.evaluator = [data, base](const VectorXr& s) -> VectorXc {
        VectorXc e = VectorXc::Zero(data.d);
        e[base] = 1.0;
        return displace_vector(data, factors_at(data.group, data.series, s), std::move(e));
    };
    return family;
}

AlgebraReport ladder_algebra_check(const ModelSpec& spec) {
    const LadderAlgebra alg = build_ladder(spec);
    const Eigen::Index d = alg.j_z.rows();
    const Eigen::Index interior = d - 2;
    auto block = [&](const MatrixXc& m) { return m.topLeftCorner(interior, interior); };

    AlgebraReport report;
    const MatrixXc cz_p = alg.j_z * alg.j_plus - alg.j_plus * alg.j_z - alg.j_plus;
    const MatrixXc cz_m = alg.j_z * alg.j_minus - alg.j_minus * alg.j_z + alg.j_minus;
    report.commutator_residual_jz =
        std::max(block(cz_p).cwiseAbs().maxCoeff(), block(cz_m).cwiseAbs().maxCoeff());

    MatrixXc ladder_comm = alg.j_plus * alg.j_minus - alg.j_minus * alg.j_plus;
    switch (spec.group) {
        case GroupTag::WeylHeisenberg:
            // stored as (a+, a): [a, a+] = 1
            ladder_comm = -ladder_comm - MatrixXc::Identity(d, d);
            break;
        case GroupTag::SU2: ladder_comm -= 2.0 * alg.j_z; break;
        case GroupTag::SU11: ladder_comm += 2.0 * alg.j_z; break;
    }
    report.commutator_residual_ladder = block(ladder_comm).cwiseAbs().maxCoeff();

    Eigen::Index base = base_index(spec);
    if (spec.series == SeriesTag::TwoOscillator)
        base = 2 * std::lround(spec.m + spec.j.real()) +
               (std::abs(spec.j.real() + 0.75) < 1e-12 ? 1 : 0);
    VectorXc e = VectorXc::Zero(d);
    e[base] = 1.0;

    Complex cas;
    Real expected;
    switch (spec.group) {
        case GroupTag::WeylHeisenberg:
            // No quadratic Casimir; report the central element [a, a+] instead.
            cas = e.dot(((alg.j_minus * alg.j_plus - alg.j_plus * alg.j_minus)).eval() * e);
            expected = 1.0;
            break;
        case GroupTag::SU2:
            cas = e.dot((alg.j_z * alg.j_z +
                         0.5 * (alg.j_plus * alg.j_minus + alg.j_minus * alg.j_plus))
                            .eval() * e);
            expected = jj1(spec.j);
            break;
        case GroupTag::SU11:
            cas = e.dot((alg.j_z * alg.j_z -
                         0.5 * (alg.j_plus * alg.j_minus + alg.j_minus * alg.j_plus))
                            .eval() * e);
            expected = jj1(spec.j);
            break;
        default: cas = 0; expected = 0;
    }
    report.casimir_eigenvalue = cas.real();
    report.casimir_residual = std::abs(cas - Complex(expected, 0));

    // Annihilation of the series-extremal state (index 0 of the storage
    // ladder; Fock level 0/1 for the two-oscillator branches).
    VectorXc extremal = VectorXc::Zero(d);
    extremal[spec.series == SeriesTag::TwoOscillator
                 ? (std::abs(spec.j.real() + 0.75) < 1e-12 ? 1 : 0)
                 : 0] = 1.0;
    const MatrixXc& annihilator =
        (spec.series == SeriesTag::Dminus) ? alg.j_plus : alg.j_minus;
    report.lowest_weight_annihilation = (annihilator * extremal).norm();
    return report;
}

QuantumGeometricTensor analytic_qgt(const ModelSpec& spec, const VectorXr& s) {
    MatrixXc c2(2, 2);
    switch (spec.group) {
        case GroupTag::WeylHeisenberg: {
            const Real diag = 2 * spec.m + 1;
            c2 << Complex(diag, 0), Complex(0, 1), Complex(0, -1), Complex(diag, 0);
            break;
        }
        case GroupTag::SU2: {
            const Real X = jj1(spec.j) - spec.m * spec.m;
            const Real sin_t = std::sin(s[0]);
            c2 << Complex(0.5 * X, 0), Complex(0, -0.5 * spec.m * sin_t),
                Complex(0, 0.5 * spec.m * sin_t), Complex(0.5 * X * sin_t * sin_t, 0);
            break;
        }
        case GroupTag::SU11: {
            const Real X = spec.m * spec.m - jj1(spec.j);
            const Real sinh_r = std::sinh(s[0]);
            c2 << Complex(0.5 * X, 0), Complex(0, -0.5 * spec.m * sinh_r),
                Complex(0, 0.5 * spec.m * sinh_r), Complex(0.5 * X * sinh_r * sinh_r, 0);
            break;
        }
    }
    QuantumGeometricTensor out;
    out.c2 = c2;
    out.point = ParameterPoint(s, model_coords(spec.group));
    out.g = c2.real();
    out.sigma = c2.imag();
    out.estimated_error = 0.0;
    return out;
}

Real analytic_det(const ModelSpec& spec, const VectorXr& s) {
    switch (spec.group) {
        case GroupTag::WeylHeisenberg: {
            const Real diag = 2 * spec.m + 1;
            return diag * diag - 1;
        }
        case GroupTag::SU2: {
            const Real J = jj1(spec.j), m = spec.m, sin_t = std::sin(s[0]);
            return 0.25 * (J - m * (m + 1)) * (J - m * (m - 1)) * sin_t * sin_t;
        }
        case GroupTag::SU11: {
            const Real J = jj1(spec.j), m = spec.m, sinh_r = std::sinh(s[0]);
            return 0.25 * (J - m * (m + 1)) * (J - m * (m - 1)) * sinh_r * sinh_r;
        }
    }
    throw InvalidConfig("unknown group tag");
}

CosetDecomposition coset_derivative(const ModelSpec& spec, const VectorXr& s) {
    const LadderData data = ladder_data(spec);
    const int base = base_index(spec);
    const int d = data.d;
    const Real h = 1e-3;

    const MatrixXc d_center = displacement_matrix(data, factors_at(data.group, data.series, s));
    const int n = 2;
    CosetDecomposition out;
    out.a_matrix = MatrixXc::Zero(n, 2);
    out.cartan = VectorXc::Zero(n);
    out.identity = VectorXc::Zero(n);

    // Band operators in storage layout mapped back to the algebra's (J+, J-).
    MatrixXc raise = MatrixXc::Zero(d, d);
    for (int p = 0; p + 1 < d; ++p) raise(p + 1, p) = data.raise_coef[static_cast<size_t>(p)];
    const MatrixXc lower = raise.adjoint();
    const MatrixXc algebra_plus = data.storage_raise_is_algebra_plus ? raise : lower;
    const MatrixXc algebra_minus = data.storage_raise_is_algebra_plus ? lower : raise;
    const MatrixXc cartan_op = data.weights.cast<Complex>().asDiagonal();

    // Columns near the truncation edge are unreliable; fit on low columns only
    // (their displaced support decays exponentially before the edge).
    const int q_max = std::min(d - 1, base + 6);

    for (int k = 0; k < n; ++k) {
        auto disp = [&](const VectorXr& x) {
            return displacement_matrix(data, factors_at(data.group, data.series, x));
        };
        const MatrixXc dD = fd::field_derivative(disp, s, k, h);
        const MatrixXc m_op = d_center.adjoint() * dD;

        MatrixXc a(static_cast<Eigen::Index>(d) * (q_max + 1), 4);
        VectorXc b(static_cast<Eigen::Index>(d) * (q_max + 1));
        for (int q = 0; q <= q_max; ++q) {
            a.block(q * d, 0, d, 1) = algebra_plus.col(q);
            a.block(q * d, 1, d, 1) = algebra_minus.col(q);
            a.block(q * d, 2, d, 1) = cartan_op.col(q);
            a.block(q * d, 3, d, 1) = MatrixXc::Identity(d, d).col(q);
            b.segment(q * d, d) = m_op.col(q);
        }
        const Eigen::Vector4cd coef = a.colPivHouseholderQr().solve(b);
        const Real residual = (a * coef - b).norm();
        if (residual > 1e-6)
            throw DecompositionResidual("coset expansion leaves residual " +
                                        std::to_string(residual));
        out.residual = std::max(out.residual, residual);
        out.a_matrix(k, 0) = coef[0];
        out.a_matrix(k, 1) = coef[1];
        out.cartan[k] = coef[2];
        out.identity[k] = coef[3];
    }
    return out;
}

}  // namespace qgeom
