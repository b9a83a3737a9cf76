#include "qgeom/bo.hpp"

#include <cmath>

#include "qgeom/statefam.hpp"

namespace qgeom {

Real effective_potential(const InverseMassTensor& q, const QuantumGeometricTensor& tensor) {
    if (q.dim() != tensor.dim())
        throw DimensionMismatch("inverse-mass tensor and geometric tensor sizes differ");
    const Complex half_trace = 0.5 * (q.hermitian().conjugate().cwiseProduct(tensor.c2)).sum();
    if (std::abs(half_trace.imag()) > 1e-10)
        throw IdentityViolation("effective potential has imaginary residue " +
                                std::to_string(half_trace.imag()));
    const Real split = 0.5 * (q.q_real.cwiseProduct(tensor.g).sum() +
                              q.q_imag.cwiseProduct(tensor.sigma).sum());
    if (std::abs(half_trace.real() - split) > 1e-12)
        throw IdentityViolation("potential split form disagrees with the trace form");
    return half_trace.real();
}

VectorXr force(const InverseMassTensor& q, const QuantumChristoffelField& christoffel_field,
               const QgtField& qgt_field, const VectorXr& s, Real tolerance) {
    const Eigen::Index n = s.size();
    if (q.dim() != n) throw DimensionMismatch("inverse-mass tensor size differs from param_dim");
    const MatrixXc q_full = q.hermitian();

    const Rank3<Complex> qc = christoffel_field(s);
    VectorXr f = VectorXr::Zero(n);
    for (Eigen::Index l = 0; l < n; ++l) {
        Complex acc(0, 0);
        for (Eigen::Index jj = 0; jj < n; ++jj)
            for (Eigen::Index k = 0; k < n; ++k)
                acc += q_full(jj, k) * qc[static_cast<size_t>(jj)](l, k);
        f[l] = -acc.real();
    }

    // Independent route: FD gradient of the scalar potential.
    auto phi_at = [&](const VectorXr& x) { return effective_potential(q, qgt_field(x)); };
    Real worst = 0.0;
    const Real h = 1e-3;
    for (Eigen::Index l = 0; l < n; ++l) {
        VectorXr xp = s, xm = s;
        xp[l] += h;
        xm[l] -= h;
        const Real d1 = (phi_at(xp) - phi_at(xm)) / (2 * h);
        xp[l] = s[l] + h / 2;
        xm[l] = s[l] - h / 2;
        const Real d2 = (phi_at(xp) - phi_at(xm)) / h;
        const Real grad = (4 * d2 - d1) / 3;
        worst = std::max(worst, std::abs(f[l] + grad));
    }
    if (worst > tolerance)
        throw IdentityViolation("force disagrees with -grad(potential) by " +
                                std::to_string(worst));
    return f;
}

EffectiveFields effective_fields(const InverseMassTensor& q, const StateFamily& family,
                                 const VectorXr& s, Real force_tolerance) {
    EffectiveFields out;
    const QuantumGeometricTensor tensor = qgt(family, s);
    out.phi = effective_potential(q, tensor);
    out.a_vec = berry_connection(family, s).beta;
    out.force = force(
        q, [&](const VectorXr& x) { return quantum_christoffel(family, x); },
        [&](const VectorXr& x) { return qgt(family, x); }, s, force_tolerance);
    return out;
}

MassDiagonalization diagonalize_mass(const InverseMassTensor& q,
                                     const QuantumGeometricTensor& tensor) {
    if (q.dim() != tensor.dim())
        throw DimensionMismatch("inverse-mass tensor and geometric tensor sizes differ");
    const Eigen::Index n = q.dim();
    Eigen::SelfAdjointEigenSolver<MatrixXc> es(q.hermitian());
    MassDiagonalization out;
    out.u = es.eigenvectors();
    out.inv_masses = es.eigenvalues();
    out.g_tilde = VectorXr::Zero(n);
    out.sigma_tilde = VectorXr::Zero(n);
    for (Eigen::Index r = 0; r < n; ++r) {
        Real gt = 0.0, st = 0.0;
        for (Eigen::Index jj = 0; jj < n; ++jj) {
            for (Eigen::Index k = 0; k < n; ++k) {
                const Complex w = out.u(jj, r) * std::conj(out.u(k, r));
                gt += 0.5 * w.real() * tensor.g(jj, k);
                st += 0.5 * w.imag() * tensor.sigma(jj, k);
            }
        }
        out.g_tilde[r] = gt;
        out.sigma_tilde[r] = st;
    }
    const Real reconstructed =
        (out.inv_masses.array() * (out.g_tilde + out.sigma_tilde).array()).sum();
    const Real direct = effective_potential(q, tensor);
    if (std::abs(reconstructed - direct) > 1e-10)
        throw IdentityViolation("diagonalized potential fails to reconstruct the trace form");
    return out;
}

}  // namespace qgeom
