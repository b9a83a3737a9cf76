#include "qgeom/cumulants.hpp"

#include <algorithm>
#include <map>

namespace qgeom {

namespace {

// Collapse a DerivativeSpec into (axis, multiplicity) pairs over the doubled
// 2n-dimensional (s', s) space: primed index k -> axis k, unprimed -> axis n+k.
std::vector<std::pair<Eigen::Index, int>> doubled_axes(const DerivativeSpec& spec,
                                                       Eigen::Index n) {
    std::map<Eigen::Index, int> mult;
    for (Eigen::Index i : spec.primed) ++mult[i];
    for (Eigen::Index i : spec.unprimed) ++mult[n + i];
    return {mult.begin(), mult.end()};
}

Complex prefactor(const DerivativeSpec& spec) {
    // (-i)^{#primed} * (i)^{#unprimed}
    const int net = static_cast<int>(spec.unprimed.size()) - static_cast<int>(spec.primed.size());
    switch (((net % 4) + 4) % 4) {
        case 0: return {1, 0};
        case 1: return {0, 1};
        case 2: return {-1, 0};
        default: return {0, -1};
    }
}

VectorXr doubled_point(const VectorXr& s) {
    VectorXr z(2 * s.size());
    z << s, s;
    return z;
}

Complex evaluate_overlap(StateCache& cache, const VectorXr& z) {
    const Eigen::Index n = z.size() / 2;
    return cache.overlap(z.head(n), z.tail(n));
}

}  // namespace

Complex moment(StateCache& cache, const VectorXr& s, const DerivativeSpec& spec,
               const FDScheme& scheme) {
    const Eigen::Index n = cache.family().param_dim;
    spec.validate(n);
    auto f = [&cache](const VectorXr& z) { return evaluate_overlap(cache, z); };
    const auto result =
        fd::richardson_mixed_partial(f, doubled_point(s), doubled_axes(spec, n), scheme);
    return prefactor(spec) * result.value;
}

CumulantValue cumulant(StateCache& cache, const VectorXr& s, const DerivativeSpec& spec,
                       const FDScheme& scheme) {
    const Eigen::Index n = cache.family().param_dim;
    spec.validate(n);
    auto f = [&cache](const VectorXr& z) {
        const Complex value = evaluate_overlap(cache, z);
        if (std::abs(value) <= 1e-12)
            throw VanishingOverlap("overlap vanished inside an FD stencil");
        if (std::abs(value - Complex(1, 0)) >= 0.5)
            throw StencilTooWide("|S - 1| >= 0.5 inside an FD stencil; shrink the step");
        return std::log(value);
    };
    const auto result =
        fd::richardson_mixed_partial(f, doubled_point(s), doubled_axes(spec, n), scheme);
    CumulantValue out;
    out.value = prefactor(spec) * result.value;
    out.spec = spec;
    out.point = ParameterPoint(s, cache.family().coord_names);
    out.estimated_error = result.estimated_error;
    return out;
}

Complex moment(const StateFamily& family, const VectorXr& s, const DerivativeSpec& spec,
               const FDScheme& scheme) {
    StateCache cache(family);
    return moment(cache, s, spec, scheme);
}

CumulantValue cumulant(const StateFamily& family, const VectorXr& s, const DerivativeSpec& spec,
                       const FDScheme& scheme) {
    StateCache cache(family);
    return cumulant(cache, s, spec, scheme);
}

CumulantSet cumulants_from_moments(const MomentSet& moments) {
    const Eigen::Index n = moments.n;
    if (n < 1) throw IncompleteMomentSet("moment set has no dimension");
    if (!moments.m1_unprimed || !moments.m1_primed || !moments.m2_unprimed ||
        !moments.m2_mixed || !moments.m2_primed || !moments.m3_1_2 || !moments.m3_2_1)
        throw IncompleteMomentSet("all moment blocks up to order 3 are required");

    const VectorXc& m1u = *moments.m1_unprimed;
    const VectorXc& m1p = *moments.m1_primed;
    const MatrixXc& m2u = *moments.m2_unprimed;
    const MatrixXc& m2m = *moments.m2_mixed;
    const MatrixXc& m2p = *moments.m2_primed;
    const Rank3<Complex>& m3a = *moments.m3_1_2;
    const Rank3<Complex>& m3b = *moments.m3_2_1;

    CumulantSet out;
    out.c1_unprimed = m1u;
    out.c1_primed = m1p;
    out.c2_unprimed = m2u - m1u * m1u.transpose();
    out.c2_mixed = m2m - m1p * m1u.transpose();
    out.c2_primed = m2p - m1p * m1p.transpose();
    out.c3_1_2 = make_rank3_c(n);
    out.c3_2_1 = make_rank3_c(n);
    for (Eigen::Index j = 0; j < n; ++j)
        for (Eigen::Index k = 0; k < n; ++k)
            for (Eigen::Index l = 0; l < n; ++l) {
                out.c3_1_2[static_cast<size_t>(j)](k, l) =
                    m3a[static_cast<size_t>(j)](k, l) - m2m(j, k) * m1u[l] - m2m(j, l) * m1u[k] -
                    m1p[j] * m2u(k, l) + 2.0 * m1p[j] * m1u[k] * m1u[l];
                out.c3_2_1[static_cast<size_t>(j)](k, l) =
                    m3b[static_cast<size_t>(j)](k, l) - m1p[j] * m2m(k, l) - m1p[k] * m2m(j, l) -
                    m2p(j, k) * m1u[l] + 2.0 * m1p[j] * m1p[k] * m1u[l];
            }
    return out;
}

MomentSet measure_moments(const StateFamily& family, const VectorXr& s, const FDScheme& scheme2,
                          const FDScheme& scheme3) {
    const Eigen::Index n = family.param_dim;
    StateCache cache(family);
    MomentSet set;
    set.n = n;

    VectorXc m1u(n), m1p(n);
    for (Eigen::Index l = 0; l < n; ++l) {
        m1u[l] = moment(cache, s, {{}, {l}}, scheme2);
        m1p[l] = moment(cache, s, {{l}, {}}, scheme2);
    }
    MatrixXc m2u(n, n), m2m(n, n), m2p(n, n);
    for (Eigen::Index k = 0; k < n; ++k)
        for (Eigen::Index l = 0; l < n; ++l) {
            m2u(k, l) = moment(cache, s, {{}, {k, l}}, scheme2);
            m2m(k, l) = moment(cache, s, {{k}, {l}}, scheme2);
            m2p(k, l) = moment(cache, s, {{k, l}, {}}, scheme2);
        }
    Rank3<Complex> m3a = make_rank3_c(n), m3b = make_rank3_c(n);
    for (Eigen::Index j = 0; j < n; ++j)
        for (Eigen::Index k = 0; k < n; ++k)
            for (Eigen::Index l = 0; l < n; ++l) {
                m3a[static_cast<size_t>(j)](k, l) = moment(cache, s, {{j}, {k, l}}, scheme3);
                m3b[static_cast<size_t>(j)](k, l) = moment(cache, s, {{j, k}, {l}}, scheme3);
            }

    set.m1_unprimed = std::move(m1u);
    set.m1_primed = std::move(m1p);
    set.m2_unprimed = std::move(m2u);
    set.m2_mixed = std::move(m2m);
    set.m2_primed = std::move(m2p);
    set.m3_1_2 = std::move(m3a);
    set.m3_2_1 = std::move(m3b);
    return set;
}

}  // namespace qgeom
