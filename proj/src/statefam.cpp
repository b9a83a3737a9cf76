#include "qgeom/statefam.hpp"

#include <cmath>
#include <iostream>
#include <sstream>

namespace qgeom {

namespace {

std::string point_text(const VectorXr& s) {
    std::ostringstream out;
    out << "(";
    for (Eigen::Index i = 0; i < s.size(); ++i) out << (i ? ", " : "") << s[i];
    out << ")";
    return out.str();
}

}  // namespace

VectorXc evaluate(const StateFamily& family, const VectorXr& s) {
    if (s.size() != family.param_dim)
        throw DimensionMismatch("parameter point dimension does not match the family");
    if (!s.allFinite()) throw NonFinite("parameter point has non-finite coordinate");
    if (!family.domain.empty() && !domain_contains(family.domain, s))
        throw OutOfDomain("point " + point_text(s) + " outside the declared domain");

    VectorXc psi = family.evaluator(s);
    if (psi.size() != family.hilbert_dim)
        throw DimensionMismatch("evaluator returned wrong state dimension");
    if (!psi.allFinite()) throw NonFinite("evaluator produced NaN/Inf at " + point_text(s));

    const Real norm = psi.norm();
    const Real drift = std::abs(norm - 1.0);
    if (norm < 1e-12) throw NonFinite("evaluator produced a (near-)zero vector");
    if (family.diagnostics && drift > family.diagnostics->max_norm_drift)
        family.diagnostics->max_norm_drift = drift;
    if (drift > family.drift_tolerance) {
        if (family.strict_normalization)
            throw TruncationInsufficient("norm drift " + std::to_string(drift) + " at " +
                                         point_text(s) + "; enlarge the truncation or shrink the domain");
        std::cerr << "[qgeom] warning: renormalizing state with drift " << drift << " at "
                  << point_text(s) << "\n";
    }
    return psi / norm;
}

Complex overlap(const StateFamily& family, const VectorXr& s_primed, const VectorXr& s) {
    return evaluate(family, s_primed).dot(evaluate(family, s));
}

Complex log_overlap(const StateFamily& family, const VectorXr& s_primed, const VectorXr& s) {
    const Complex value = overlap(family, s_primed, s);
    if (std::abs(value) <= 1e-12)
        throw VanishingOverlap("overlap modulus below 1e-12; states (nearly) orthogonal");
    return std::log(value);
}

VectorXc tangent(const StateFamily& family, const VectorXr& s, Eigen::Index k,
                 const FDScheme& scheme) {
    scheme.validate();
    if (k < 0 || k >= family.param_dim) throw InvalidConfig("tangent coordinate out of range");
    auto central = [&](Real h) {
        VectorXr sp = s, sm = s;
        sp[k] += h;
        sm[k] -= h;
        return ((evaluate(family, sp) - evaluate(family, sm)) / (2 * h)).eval();
    };
    const VectorXc d1 = central(scheme.h);
    if (!scheme.richardson) return d1;
    const VectorXc d2 = central(scheme.h / 2);
    return (4.0 * d2 - d1) / 3.0;
}

StateFamily apply_gauge(const StateFamily& family, const GaugeFunction& alpha) {
    StateFamily gauged = family;
    gauged.diagnostics = std::make_shared<FamilyDiagnostics>();
    auto inner = family.evaluator;
    gauged.evaluator = [inner, alpha](const VectorXr& s) -> VectorXc {
        return std::exp(Complex(0, -alpha(s))) * inner(s);
    };
    return gauged;
}

}  // namespace qgeom
