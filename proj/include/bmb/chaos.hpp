#pragma once

// Finite-dimensional Wiener-chaos calculus over R^D with its standard
// orthonormal basis: dense tensors and contractions, the chaos product
// formula, the Malliavin-derivative variance identity and the
// cross-derivative inner-product bound, stationary partial-sum kernels built
// from an exact block-covariance factorization, and a Wick-pairing oracle
// that evaluates Gaussian polynomial moments in closed form.
//
// Everything here is desk-scale verification machinery, exact up to floating
// point: dense storage is capped, and every combinatorial weight (factorials,
// binomials) is assembled in exact integer arithmetic and converted to double
// once.

#include <algorithm>
#include <cmath>
#include <map>
#include <utility>
#include <vector>

#include "bmb/common.hpp"
#include "bmb/covariance.hpp"
#include "bmb/exact.hpp"
#include "bmb/gaussian.hpp"
#include "bmb/hermite.hpp"
#include "bmb/linalg.hpp"
#include "bmb/rng.hpp"

namespace bmb {

namespace detail {

inline std::size_t tensor_entries(int dim, int order) {
    if (dim < 1 || dim > 256)
        throw CapError("tensor: index dimension must be in [1, 256]");
    if (order < 0 || order > 8) throw CapError("tensor: order must be in [0, 8]");
    double count = std::pow(static_cast<double>(dim), order);
    if (count > 16777216.0) throw CapError("tensor: dense size dim^order exceeds 2^24");
    return static_cast<std::size_t>(std::llround(count));
}

}  // namespace detail

// Dense real tensor over {0..D-1}^m, row-major (last slot varies fastest).
// Not necessarily symmetric.
class Kernel {
  public:
    Kernel(int dim, int order)
        : dim_(dim), order_(order), v_(detail::tensor_entries(dim, order), 0.0) {}

    int dim() const { return dim_; }
    int order() const { return order_; }
    std::size_t size() const { return v_.size(); }
    double operator[](std::size_t i) const { return v_[i]; }
    double& operator[](std::size_t i) { return v_[i]; }
    const std::vector<double>& values() const { return v_; }

    std::size_t flat(const std::vector<int>& idx) const {
        if (static_cast<int>(idx.size()) != order_)
            throw ConfigError("tensor: index length does not match order");
        std::size_t p = 0;
        for (int i : idx) {
            if (i < 0 || i >= dim_) throw ConfigError("tensor: index out of range");
            p = p * static_cast<std::size_t>(dim_) + static_cast<std::size_t>(i);
        }
        return p;
    }
    double at(const std::vector<int>& idx) const { return v_[flat(idx)]; }
    void set(const std::vector<int>& idx, double w) { v_[flat(idx)] = w; }
    void add(const std::vector<int>& idx, double w) { v_[flat(idx)] += w; }

    double norm2() const {
        long double s = 0.0L;
        for (double x : v_) s += static_cast<long double>(x) * x;
        return static_cast<double>(s);
    }
    double norm() const { return std::sqrt(norm2()); }

  private:
    int dim_;
    int order_;
    std::vector<double> v_;
};

inline double inner(const Kernel& a, const Kernel& b) {
    if (a.dim() != b.dim() || a.order() != b.order())
        throw ConfigError("inner: dimension or order mismatch");
    long double s = 0.0L;
    for (std::size_t i = 0; i < a.size(); ++i)
        s += static_cast<long double>(a[i]) * b[i];
    return static_cast<double>(s);
}

// Contraction over the trailing r slots of each factor: a matrix product of
// the reshaped tensors. For symmetric factors this agrees with contracting
// any other choice of r slots.
inline Kernel contract(const Kernel& f, const Kernel& g, int r) {
    if (f.dim() != g.dim()) throw ConfigError("contract: dimension mismatch");
    const int p = f.order(), s = g.order();
    if (r < 0 || r > std::min(p, s))
        throw ConfigError("contract: contraction order must be in [0, min(p,s)]");
    const int D = f.dim();
    Kernel out(D, p + s - 2 * r);
    const std::size_t R = detail::tensor_entries(D, r);
    const std::size_t A = detail::tensor_entries(D, p - r);
    const std::size_t B = detail::tensor_entries(D, s - r);
    for (std::size_t a = 0; a < A; ++a) {
        for (std::size_t b = 0; b < B; ++b) {
            long double acc = 0.0L;
            for (std::size_t c = 0; c < R; ++c)
                acc += static_cast<long double>(f[a * R + c]) * g[b * R + c];
            out[a * B + b] = static_cast<double>(acc);
        }
    }
    return out;
}

class SymmetricKernel;
inline SymmetricKernel symmetrize(const Kernel& f);

// A Kernel whose values are invariant under every permutation of the index
// slots. Mutation is restricted to orbit-level writes so the invariant is
// preserved by construction.
class SymmetricKernel {
  public:
    SymmetricKernel(int dim, int order) : k_(dim, order) {}

    static SymmetricKernel basis(int dim, int i) {
        SymmetricKernel out(dim, 1);
        out.k_.set({i}, 1.0);
        return out;
    }

    // sym(e_{i1} x ... x e_{im}): the orbit of idx carries type(idx)!/m!.
    static SymmetricKernel elementary(int dim, const std::vector<int>& idx) {
        Kernel raw(dim, static_cast<int>(idx.size()));
        raw.set(idx, 1.0);
        return symmetrize(raw);
    }

    int dim() const { return k_.dim(); }
    int order() const { return k_.order(); }
    std::size_t size() const { return k_.size(); }
    double operator[](std::size_t i) const { return k_[i]; }
    double at(const std::vector<int>& idx) const { return k_.at(idx); }
    const Kernel& tensor() const { return k_; }
    operator const Kernel&() const { return k_; }
    double norm2() const { return k_.norm2(); }
    double norm() const { return k_.norm(); }

    // Writes w to every rearrangement of idx.
    void set_orbit(const std::vector<int>& idx, double w) {
        std::vector<int> perm = idx;
        std::sort(perm.begin(), perm.end());
        do {
            k_.set(perm, w);
        } while (std::next_permutation(perm.begin(), perm.end()));
    }

    SymmetricKernel scaled(double w) const {
        SymmetricKernel out = *this;
        for (std::size_t i = 0; i < out.k_.size(); ++i) out.k_[i] *= w;
        return out;
    }

    void add_scaled(const SymmetricKernel& other, double w) {
        if (other.dim() != dim() || other.order() != order())
            throw ConfigError("symmetric kernel: dimension or order mismatch");
        for (std::size_t i = 0; i < k_.size(); ++i) k_[i] += w * other.k_[i];
    }

  private:
    explicit SymmetricKernel(Kernel k) : k_(std::move(k)) {}
    Kernel k_;
    friend SymmetricKernel symmetrize(const Kernel& f);
};

// Average over all slot permutations. Each orbit is visited once through its
// sorted representative; the mean over distinct rearrangements equals the
// mean over all m! permutations.
inline SymmetricKernel symmetrize(const Kernel& f) {
    const int m = f.order();
    const int D = f.dim();
    if (m <= 1) return SymmetricKernel(Kernel(f));
    Kernel out(D, m);
    std::vector<int> digits(static_cast<std::size_t>(m), 0);
    std::vector<int> perm(static_cast<std::size_t>(m));
    for (;;) {
        bool sorted = true;
        for (int i = 0; i + 1 < m; ++i)
            if (digits[static_cast<std::size_t>(i)] > digits[static_cast<std::size_t>(i + 1)]) {
                sorted = false;
                break;
            }
        if (sorted) {
            perm = digits;
            long double s = 0.0L;
            std::size_t cnt = 0;
            do {
                s += f[f.flat(perm)];
                ++cnt;
            } while (std::next_permutation(perm.begin(), perm.end()));
            const double avg = static_cast<double>(s / static_cast<long double>(cnt));
            perm = digits;
            do {
                out[out.flat(perm)] = avg;
            } while (std::next_permutation(perm.begin(), perm.end()));
        }
        int pos = m - 1;
        while (pos >= 0 && ++digits[static_cast<std::size_t>(pos)] == D) {
            digits[static_cast<std::size_t>(pos)] = 0;
            --pos;
        }
        if (pos < 0) break;
    }
    return SymmetricKernel(std::move(out));
}

// Slice over the last slot: g(..., a), one order lower. Slices of symmetric
// tensors are symmetric in the remaining slots.
inline Kernel slice_last(const Kernel& g, int a) {
    if (g.order() < 1) throw ConfigError("slice_last: order must be >= 1");
    if (a < 0 || a >= g.dim()) throw ConfigError("slice_last: index out of range");
    Kernel out(g.dim(), g.order() - 1);
    const std::size_t D = static_cast<std::size_t>(g.dim());
    for (std::size_t i = 0; i < out.size(); ++i)
        out[i] = g[i * D + static_cast<std::size_t>(a)];
    return out;
}

// F = c + sum_m I_m(g_m): a finite linear combination of multiple integrals
// of symmetric kernels over a common D-dimensional basis, with the scalar
// part kept separately.
class ChaosVector {
  public:
    explicit ChaosVector(int dim) : dim_(dim) { detail::tensor_entries(dim, 0); }

    static ChaosVector constant(int dim, double c) {
        ChaosVector out(dim);
        out.c0_ = c;
        return out;
    }

    static ChaosVector single(const SymmetricKernel& g) {
        ChaosVector out(g.dim());
        out.add_kernel(g, 1.0);
        return out;
    }

    int dim() const { return dim_; }
    double constant_part() const { return c0_; }
    const std::map<int, SymmetricKernel>& components() const { return comp_; }

    void add_scalar(double c) { c0_ += c; }

    void add_kernel(const SymmetricKernel& g, double w = 1.0) {
        if (g.dim() != dim_) throw ConfigError("chaos vector: dimension mismatch");
        if (g.order() == 0) {
            c0_ += w * g[0];
            return;
        }
        auto it = comp_.find(g.order());
        if (it == comp_.end())
            comp_.emplace(g.order(), g.scaled(w));
        else
            it->second.add_scaled(g, w);
    }

    void add_scaled(const ChaosVector& other, double w) {
        if (other.dim_ != dim_) throw ConfigError("chaos vector: dimension mismatch");
        c0_ += w * other.c0_;
        for (const auto& [m, g] : other.comp_) add_kernel(g, w);
    }

    void scale(double w) {
        c0_ *= w;
        for (auto& [m, g] : comp_) g = g.scaled(w);
    }

    double expectation() const { return c0_; }

    // E[F^2] = c^2 + sum_m m! ||g_m||^2 by orthogonality of distinct orders.
    double second_moment() const {
        long double s = static_cast<long double>(c0_) * c0_;
        for (const auto& [m, g] : comp_) s += factorial(m) * g.norm2();
        return static_cast<double>(s);
    }

    int max_order() const { return comp_.empty() ? 0 : comp_.rbegin()->first; }

  private:
    int dim_;
    double c0_ = 0.0;
    std::map<int, SymmetricKernel> comp_;
};

// I_p(f) I_s(g) = sum_{r=0}^{min(p,s)} r! C(p,r) C(s,r) I_{p+s-2r}(sym(f x_r g)),
// extended bilinearly to full chaos vectors. Weights are exact integers.
inline ChaosVector multiply(const ChaosVector& F, const ChaosVector& G) {
    if (F.dim() != G.dim()) throw ConfigError("multiply: dimension mismatch");
    ChaosVector out(F.dim());
    out.add_scalar(F.constant_part() * G.constant_part());
    if (F.constant_part() != 0.0)
        for (const auto& [s, g] : G.components()) out.add_kernel(g, F.constant_part());
    if (G.constant_part() != 0.0)
        for (const auto& [p, f] : F.components()) out.add_kernel(f, G.constant_part());
    for (const auto& [p, f] : F.components()) {
        for (const auto& [s, g] : G.components()) {
            for (int r = 0; r <= std::min(p, s); ++r) {
                const double w = exact::to_double(exact::factorial(r) *
                                                  exact::binomial(p, r) *
                                                  exact::binomial(s, r));
                const Kernel c = contract(f, g, r);
                if (p + s - 2 * r == 0)
                    out.add_scalar(w * c[0]);
                else
                    out.add_kernel(symmetrize(c), w);
            }
        }
    }
    return out;
}

// E[F G] = F0 G0 + sum_m m! <f_m, g_m>, by orthogonality of distinct orders.
inline double expected_product(const ChaosVector& F, const ChaosVector& G) {
    if (F.dim() != G.dim()) throw ConfigError("expected_product: dimension mismatch");
    long double s = static_cast<long double>(F.constant_part()) * G.constant_part();
    for (const auto& [m, f] : F.components()) {
        const auto it = G.components().find(m);
        if (it != G.components().end())
            s += static_cast<long double>(factorial(m)) * inner(f, it->second);
    }
    return static_cast<double>(s);
}

// Polynomial in D <= 4 independent standard Gaussians, stored as a dense map
// from exponent vectors. Expectations use the pairing rule E[W^k] = (k-1)!!
// for even k, coordinate by coordinate.
class GaussianPoly {
  public:
    explicit GaussianPoly(int dim) : dim_(dim) {
        if (dim < 1 || dim > 4)
            throw CapError("gaussian poly: dimension must be in [1, 4]");
    }

    int dim() const { return dim_; }
    const std::map<std::vector<int>, double>& terms() const { return terms_; }

    void add_term(const std::vector<int>& expo, double c) {
        if (static_cast<int>(expo.size()) != dim_)
            throw ConfigError("gaussian poly: exponent length mismatch");
        int deg = 0;
        for (int e : expo) {
            if (e < 0) throw ConfigError("gaussian poly: negative exponent");
            deg += e;
        }
        if (deg > 12) throw CapError("gaussian poly: total degree exceeds 12");
        if (c == 0.0) return;
        terms_[expo] += c;
    }

    void add_scaled(const GaussianPoly& other, double w) {
        if (other.dim_ != dim_) throw ConfigError("gaussian poly: dimension mismatch");
        for (const auto& [expo, c] : other.terms_) add_term(expo, w * c);
    }

    GaussianPoly times(const GaussianPoly& other) const {
        if (other.dim_ != dim_) throw ConfigError("gaussian poly: dimension mismatch");
        GaussianPoly out(dim_);
        std::vector<int> expo(static_cast<std::size_t>(dim_));
        for (const auto& [e1, c1] : terms_) {
            for (const auto& [e2, c2] : other.terms_) {
                for (int i = 0; i < dim_; ++i)
                    expo[static_cast<std::size_t>(i)] =
                        e1[static_cast<std::size_t>(i)] + e2[static_cast<std::size_t>(i)];
                out.add_term(expo, c1 * c2);
            }
        }
        return out;
    }

    int total_degree() const {
        int deg = 0;
        for (const auto& [expo, c] : terms_) {
            int d = 0;
            for (int e : expo) d += e;
            deg = std::max(deg, d);
        }
        return deg;
    }

    double expectation() const {
        long double s = 0.0L;
        for (const auto& [expo, c] : terms_) {
            double mom = 1.0;
            for (int e : expo) {
                mom *= normal_moment(e);
                if (mom == 0.0) break;
            }
            if (mom != 0.0) s += static_cast<long double>(c) * mom;
        }
        return static_cast<double>(s);
    }

  private:
    int dim_;
    std::map<std::vector<int>, double> terms_;
};

// prod_i H_{alpha_i}(x_i) expanded into monomials.
inline GaussianPoly hermite_product_poly(int dim, const std::vector<int>& alpha) {
    if (static_cast<int>(alpha.size()) != dim)
        throw ConfigError("hermite_product_poly: type length mismatch");
    GaussianPoly out(dim);
    std::vector<std::vector<double>> coeffs(static_cast<std::size_t>(dim));
    for (int i = 0; i < dim; ++i)
        coeffs[static_cast<std::size_t>(i)] =
            hermite_monomial_coeffs(alpha[static_cast<std::size_t>(i)]);
    std::vector<int> k(static_cast<std::size_t>(dim), 0);
    for (;;) {
        double c = 1.0;
        for (int i = 0; i < dim; ++i)
            c *= coeffs[static_cast<std::size_t>(i)]
                       [static_cast<std::size_t>(k[static_cast<std::size_t>(i)])];
        if (c != 0.0) out.add_term(k, c);
        int pos = dim - 1;
        while (pos >= 0 &&
               ++k[static_cast<std::size_t>(pos)] > alpha[static_cast<std::size_t>(pos)]) {
            k[static_cast<std::size_t>(pos)] = 0;
            --pos;
        }
        if (pos < 0) break;
    }
    return out;
}

// Expands F into an explicit polynomial of the underlying independent
// standard Gaussians: each elementary tensor of occupancy type alpha
// contributes its coefficient to prod_i H_{alpha_i}(W_i).
inline GaussianPoly poly_of_chaos(const ChaosVector& F) {
    const int D = F.dim();
    GaussianPoly out(D);
    out.add_term(std::vector<int>(static_cast<std::size_t>(D), 0), F.constant_part());
    std::map<std::vector<int>, GaussianPoly> cache;
    for (const auto& [m, g] : F.components()) {
        std::map<std::vector<int>, double> weight_by_type;
        std::vector<int> t(static_cast<std::size_t>(m), 0);
        std::size_t p = 0;
        for (;;) {
            if (g[p] != 0.0) {
                std::vector<int> alpha(static_cast<std::size_t>(D), 0);
                for (int i = 0; i < m; ++i)
                    ++alpha[static_cast<std::size_t>(t[static_cast<std::size_t>(i)])];
                weight_by_type[alpha] += g[p];
            }
            ++p;
            int pos = m - 1;
            while (pos >= 0 && ++t[static_cast<std::size_t>(pos)] == D) {
                t[static_cast<std::size_t>(pos)] = 0;
                --pos;
            }
            if (pos < 0) break;
        }
        for (const auto& [alpha, w] : weight_by_type) {
            auto it = cache.find(alpha);
            if (it == cache.end())
                it = cache.emplace(alpha, hermite_product_poly(D, alpha)).first;
            out.add_scaled(it->second, w);
        }
    }
    return out;
}

// Exact E[prod_i F_i] by brute-force Wick pairing (dimension <= 4, total
// degree <= 12). Ground truth for the chaos product formula and the
// derivative identities.
inline double isserlis_moment(const std::vector<ChaosVector>& factors) {
    if (factors.empty()) throw ConfigError("isserlis_moment: needs at least one factor");
    GaussianPoly p = poly_of_chaos(factors.front());
    for (std::size_t i = 1; i < factors.size(); ++i)
        p = p.times(poly_of_chaos(factors[i]));
    return p.expectation();
}

inline double isserlis_moment(const ChaosVector& F) { return isserlis_moment(std::vector<ChaosVector>{F}); }

inline double isserlis_moment(const ChaosVector& F, const ChaosVector& G) {
    return isserlis_moment(std::vector<ChaosVector>{F, G});
}

inline double isserlis_moment(const ChaosVector& F, const ChaosVector& G,
                              const ChaosVector& H) {
    return isserlis_moment(std::vector<ChaosVector>{F, G, H});
}

// Var[(1/s)||DG||^2] for G = I_s(g), written as a weighted sum of squared
// norms of symmetrized self-contractions:
//   (1/s^2) sum_{l=1}^{s-1} l^2 l!^2 C(s,l)^4 (2s-2l)! ||sym(g x_l g)||^2.
inline double variance_identity_rhs(const SymmetricKernel& g) {
    const int s = g.order();
    if (s < 1) throw ConfigError("variance_identity_rhs: order must be >= 1");
    long double total = 0.0L;
    for (int l = 1; l <= s - 1; ++l) {
        const SymmetricKernel c = symmetrize(contract(g, g, l));
        exact::Int w = exact::Int(l) * l * exact::factorial(l) * exact::factorial(l);
        const exact::Int b = exact::binomial(s, l);
        w *= b * b * b * b;
        w *= exact::factorial(2 * s - 2 * l);
        total += static_cast<long double>(exact::to_double(w)) * c.norm2();
    }
    return static_cast<double>(total) / (static_cast<double>(s) * static_cast<double>(s));
}

// Same quantity evaluated from first principles: (1/s)||DG||^2 is the
// Gaussian polynomial s sum_a I_{s-1}(g(.,a))^2, whose variance the pairing
// oracle computes exactly.
inline double variance_identity_lhs(const SymmetricKernel& g) {
    const int s = g.order();
    if (s < 1) throw ConfigError("variance_identity_lhs: order must be >= 1");
    const int D = g.dim();
    GaussianPoly P(D);
    for (int a = 0; a < D; ++a) {
        const Kernel ga = slice_last(g.tensor(), a);
        ChaosVector Fa = (ga.order() == 0) ? ChaosVector::constant(D, ga[0])
                                           : ChaosVector::single(symmetrize(ga));
        const GaussianPoly pa = poly_of_chaos(Fa);
        P.add_scaled(pa.times(pa), static_cast<double>(s));
    }
    const double m1 = P.expectation();
    const double m2 = P.times(P).expectation();
    return m2 - m1 * m1;
}

struct BoundPair {
    double lhs = 0.0;
    double rhs = 0.0;
};

// For F = I_p(h), G = I_s(g), p < s:
//   lhs = E[((1/s) <DF, DG>)^2], evaluated by expanding the inner product
//         into a chaos sum of symmetrized cross-contractions and applying
//         the pairing oracle;
//   rhs = p! C(s-1,p-1)^2 (s-p)! E[F^2] ||g x_{s-p} g||
//         + (p^2/2) sum_{l=1}^{p-1} (l-1)!^2 C(p-1,l-1)^2 C(s-1,l-1)^2
//           (p+s-2l)! (||h x_{p-l} h||^2 + ||g x_{s-l} g||^2).
inline BoundPair cross_inner_bound(const SymmetricKernel& h, const SymmetricKernel& g) {
    const int p = h.order(), s = g.order();
    if (!(p >= 1 && p < s)) throw ConfigError("cross_inner_bound: needs 1 <= p < s");
    if (h.dim() != g.dim()) throw ConfigError("cross_inner_bound: dimension mismatch");

    ChaosVector Q(h.dim());
    for (int l = 1; l <= p; ++l) {
        const double w = exact::to_double(exact::factorial(l - 1) *
                                          exact::binomial(p - 1, l - 1) *
                                          exact::binomial(s - 1, l - 1));
        Q.add_kernel(symmetrize(contract(h, g, l)), w);
    }
    Q.scale(static_cast<double>(p));

    BoundPair out;
    out.lhs = isserlis_moment(Q, Q);

    const double ef2 = exact::to_double(exact::factorial(p)) * h.norm2();
    {
        exact::Int w = exact::factorial(p);
        const exact::Int b = exact::binomial(s - 1, p - 1);
        w *= b * b;
        w *= exact::factorial(s - p);
        out.rhs = exact::to_double(w) * ef2 * contract(g, g, s - p).norm();
    }
    long double acc = 0.0L;
    for (int l = 1; l <= p - 1; ++l) {
        exact::Int w = exact::factorial(l - 1) * exact::factorial(l - 1);
        const exact::Int b1 = exact::binomial(p - 1, l - 1);
        const exact::Int b2 = exact::binomial(s - 1, l - 1);
        w *= b1 * b1 * b2 * b2;
        w *= exact::factorial(p + s - 2 * l);
        acc += static_cast<long double>(exact::to_double(w)) *
               (contract(h, h, p - l).norm2() + contract(g, g, s - l).norm2());
    }
    out.rhs += 0.5 * static_cast<double>(p) * static_cast<double>(p) *
               static_cast<double>(acc);
    return out;
}

// Order-m kernel of the normalized partial sum over n steps:
//   g = n^{-1/2} sum_k sum_t b_t u_{k,t_1} x ... x u_{k,t_m},
// where u_{k,i} is row (k,i) of the Cholesky factor of the nd x nd block
// covariance C[(k,i),(k',l)] = r^{(i,l)}(k'-k), and b_t = a_{type(t)}
// type(t)!/m!. The result lives over an orthonormal basis of dimension nd.
inline SymmetricKernel build_kernel(const CovarianceModel& model,
                                    const HermiteExpansion& expansion, int m, long n) {
    const int d = model.dim();
    if (expansion.dimension != d)
        throw ConfigError("build_kernel: expansion and model dimensions differ");
    if (m < 1 || m > expansion.max_order)
        throw ConfigError("build_kernel: order out of range");
    if (m > 4) throw CapError("build_kernel: order exceeds the dense-kernel cap of 4");
    if (n < 1) throw ConfigError("build_kernel: n must be >= 1");
    if (n * static_cast<long>(d) > 256)
        throw CapError("build_kernel: embedding dimension n*d exceeds 256");
    const int D = static_cast<int>(n) * d;
    detail::tensor_entries(D, m);

    std::vector<double> cov(static_cast<std::size_t>(D) * static_cast<std::size_t>(D));
    for (long k = 0; k < n; ++k)
        for (int i = 0; i < d; ++i)
            for (long k2 = 0; k2 < n; ++k2)
                for (int l = 0; l < d; ++l)
                    cov[static_cast<std::size_t>(k * d + i) * static_cast<std::size_t>(D) +
                        static_cast<std::size_t>(k2 * d + l)] = model.r(i, l, k2 - k);
    const std::vector<double> L = cholesky_lower(cov, static_cast<std::size_t>(D));

    const auto wt = detail::kernel_weights(expansion, m);
    Kernel raw(D, m);
    std::vector<long double> acc(raw.size(), 0.0L);
    const double scale = 1.0 / std::sqrt(static_cast<double>(n));
    std::vector<const double*> rows(static_cast<std::size_t>(m));
    std::vector<int> v(static_cast<std::size_t>(m), 0);
    for (long k = 0; k < n; ++k) {
        for (std::size_t ti = 0; ti < wt.tuples.size(); ++ti) {
            const double b = wt.b[ti];
            if (b == 0.0) continue;
            for (int i = 0; i < m; ++i)
                rows[static_cast<std::size_t>(i)] =
                    &L[static_cast<std::size_t>(
                           k * d + wt.tuples[ti][static_cast<std::size_t>(i)]) *
                       static_cast<std::size_t>(D)];
            std::fill(v.begin(), v.end(), 0);
            std::size_t flat = 0;
            for (;;) {
                double prod = b;
                for (int i = 0; i < m && prod != 0.0; ++i)
                    prod *= rows[static_cast<std::size_t>(i)]
                                [static_cast<std::size_t>(v[static_cast<std::size_t>(i)])];
                acc[flat] += prod;
                ++flat;
                int pos = m - 1;
                while (pos >= 0 && ++v[static_cast<std::size_t>(pos)] == D) {
                    v[static_cast<std::size_t>(pos)] = 0;
                    --pos;
                }
                if (pos < 0) break;
            }
        }
    }
    for (std::size_t i = 0; i < raw.size(); ++i)
        raw[i] = static_cast<double>(acc[i]) * scale;
    return symmetrize(raw);
}

// Covariance-side oracle for m! ||g_m^n||^2: the stationary double sum
// E[(n^{-1/2} sum_k f_m(X_k))^2] = sum_{|j|<n} (1 - |j|/n) E[f_m(X_1) f_m(X_{1+j})].
inline double partial_sum_second_moment(const CovarianceModel& model,
                                        const HermiteExpansion& expansion, int m,
                                        long n) {
    if (n < 1) throw ConfigError("partial_sum_second_moment: n must be >= 1");
    std::vector<double> terms;
    terms.reserve(static_cast<std::size_t>(n));
    for (long j = 1; j < n; ++j)
        terms.push_back((1.0 - static_cast<double>(j) / static_cast<double>(n)) *
                        order_cross_moment(model, expansion, m, j));
    return order_cross_moment(model, expansion, m, 0) + 2.0 * pairwise_sum(terms);
}

struct KernelBoundCheck {
    int m = 0;
    int e = 0;
    long n = 0;
    double contraction_lhs = 0.0;  // ||g x_e g||
    double contraction_rhs = 0.0;  // (d^m/m!) E[f_m^2] gamma_{n,m,e}
    double norm_lhs = 0.0;         // m! ||g||^2
    double norm_rhs = 0.0;         // E[f_m^2] (2K + d^q Theta)
    double gamma = 0.0;
    double order_energy = 0.0;     // E[f_m^2]
    double theta_sum = 0.0;        // Theta used (certified or lag-truncated)
    bool theta_truncated = false;
    long truncation_lag = 0;
    long dependence_length = 0;
};

// Builds g_m^n exactly and evaluates both kernel inequalities: the
// contraction bound ||g x_e g|| <= (d^m/m!) E[f_m^2] gamma_{n,m,e} and the
// norm bound m! ||g||^2 <= E[f_m^2] (2K + d^q Theta). When sum_j theta(j)^q
// diverges, Theta is replaced by the lag-truncated sum (reported as such);
// both inequalities remain valid because only lags below the truncation
// enter the finite-n left-hand sides and theta(j)^m <= theta(j)^q.
inline KernelBoundCheck kernel_contraction_bound_check(const CovarianceModel& model,
                                                       const HermiteExpansion& expansion,
                                                       int m, int e, long n,
                                                       long max_lag = 10000) {
    if (e < 1 || e > m - 1)
        throw ConfigError("kernel_contraction_bound_check: contraction order must be in [1, m-1]");
    const int q = expansion.rank;
    const long lag = std::max(max_lag, n);
    const DependenceCoefficients dep = model.certified_summable(q)
                                           ? theta_sequence(model, q, lag)
                                           : theta_sequence_truncated(model, q, lag);
    const SymmetricKernel g = build_kernel(model, expansion, m, n);

    KernelBoundCheck out;
    out.m = m;
    out.e = e;
    out.n = n;
    out.order_energy = expansion.energy_by_order[static_cast<std::size_t>(m)];
    out.theta_sum = dep.theta_sum;
    out.theta_truncated = dep.truncated;
    out.truncation_lag = dep.max_lag;
    out.dependence_length = dep.dependence_length;
    out.gamma = gamma_factor(model, dep.theta_sum, n, m, e);
    out.contraction_lhs = contract(g, g, e).norm();
    out.contraction_rhs = std::pow(static_cast<double>(model.dim()), m) / factorial(m) *
                          out.order_energy * out.gamma;
    out.norm_lhs = factorial(m) * g.norm2();
    out.norm_rhs = out.order_energy *
                   (2.0 * static_cast<double>(dep.dependence_length) +
                    std::pow(static_cast<double>(model.dim()), q) * dep.theta_sum);
    return out;
}

// Dense kernel with iid standard normal entries (each kept with the given
// probability), then symmetrized. Deterministic in the stream state.
inline SymmetricKernel random_symmetric_kernel(RandomStream& rs, int dim, int order,
                                               double keep_probability = 1.0) {
    Kernel raw(dim, order);
    for (std::size_t i = 0; i < raw.size(); ++i) {
        const double u = rs.next_double();
        const double z = rs.next_normal();
        raw[i] = (u < keep_probability) ? z : 0.0;
    }
    return symmetrize(raw);
}

}  // namespace bmb
