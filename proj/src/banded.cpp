#include "optomag/banded.hpp"

#include <algorithm>
#include <map>

#include "optomag/errors.hpp"

namespace optomag {

namespace {

inline void check_same_dim(const BandedOp& a, const BandedOp& b) {
    if (a.dim != b.dim) throw DimensionError("banded operators of different dimension");
}

// Row range [lo, hi) where row i + offset stays inside [0, dim).
inline std::pair<int, int> valid_rows(int dim, int offset) {
    return {std::max(0, -offset), std::min(dim, dim - offset)};
}

}  // namespace

BandedOp BandedOp::zero(int dim) { return {dim, {}}; }

BandedOp BandedOp::identity(int dim) { return {dim, {{0, CVec::Ones(dim)}}}; }

BandedOp BandedOp::from_dense(const CMat& m, double tol) {
    if (m.rows() != m.cols()) throw DimensionError("banded: square matrix required");
    const int d = static_cast<int>(m.rows());
    BandedOp out{d, {}};
    for (int o = -(d - 1); o <= d - 1; ++o) {
        const auto [lo, hi] = valid_rows(d, o);
        CVec v = CVec::Zero(d);
        bool any = false;
        for (int i = lo; i < hi; ++i) {
            v(i) = m(i, i + o);
            if (std::abs(v(i)) > tol) any = true;
        }
        if (any) out.bands.push_back({o, v});
    }
    return out;
}

CMat BandedOp::to_dense() const {
    CMat m = CMat::Zero(dim, dim);
    for (const Band& b : bands) {
        const auto [lo, hi] = valid_rows(dim, b.offset);
        for (int i = lo; i < hi; ++i) m(i, i + b.offset) += b.v(i);
    }
    return m;
}

BandedOp BandedOp::adjoint() const {
    BandedOp out{dim, {}};
    for (const Band& b : bands) {
        CVec w = CVec::Zero(dim);
        const auto [lo, hi] = valid_rows(dim, b.offset);
        for (int i = lo; i < hi; ++i) w(i + b.offset) = std::conj(b.v(i));
        out.bands.push_back({-b.offset, w});
    }
    return out;
}

BandedOp BandedOp::scaled(cplx c) const {
    BandedOp out = *this;
    for (Band& b : out.bands) b.v *= c;
    return out;
}

BandedOp BandedOp::compressed() const {
    std::map<int, CVec> acc;
    for (const Band& b : bands) {
        auto it = acc.find(b.offset);
        if (it == acc.end())
            acc.emplace(b.offset, b.v);
        else
            it->second += b.v;
    }
    BandedOp out{dim, {}};
    for (auto& [o, v] : acc) {
        const auto [lo, hi] = valid_rows(dim, o);
        CVec w = CVec::Zero(dim);
        if (hi > lo) w.segment(lo, hi - lo) = v.segment(lo, hi - lo);
        if (w.cwiseAbs().maxCoeff() > 0.0) out.bands.push_back({o, w});
    }
    return out;
}

BandedOp operator+(const BandedOp& a, const BandedOp& b) {
    check_same_dim(a, b);
    BandedOp out = a;
    out.bands.insert(out.bands.end(), b.bands.begin(), b.bands.end());
    return out.compressed();
}

BandedOp operator-(const BandedOp& a, const BandedOp& b) { return a + b.scaled(-1.0); }

BandedOp operator*(const BandedOp& a, const BandedOp& b) {
    check_same_dim(a, b);
    const int d = a.dim;
    BandedOp out{d, {}};
    // (A B x)_i = va_i vb_{i+oa} x_{i+oa+ob}
    for (const Band& ba : a.bands)
        for (const Band& bb : b.bands) {
            const int o = ba.offset + bb.offset;
            if (o <= -d || o >= d) continue;
            CVec v = CVec::Zero(d);
            const auto [lo, hi] = valid_rows(d, o);
            for (int i = lo; i < hi; ++i) {
                const int k = i + ba.offset;
                if (k < 0 || k >= d) continue;
                v(i) = ba.v(i) * bb.v(k);
            }
            out.bands.push_back({o, v});
        }
    return out.compressed();
}

BandedOp kron(const BandedOp& a, const BandedOp& b) {
    const int da = a.dim, db = b.dim, d = da * db;
    BandedOp out{d, {}};
    for (const Band& ba : a.bands)
        for (const Band& bb : b.bands) {
            CVec v = CVec::Zero(d);
            for (int n = 0; n < da; ++n) {
                const int n2 = n + ba.offset;
                if (n2 < 0 || n2 >= da || ba.v(n) == cplx(0.0)) continue;
                for (int k = 0; k < db; ++k) {
                    const int k2 = k + bb.offset;
                    if (k2 < 0 || k2 >= db) continue;
                    v(n * db + k) = ba.v(n) * bb.v(k);
                }
            }
            out.bands.push_back({ba.offset * db + bb.offset, v});
        }
    return out.compressed();
}

LindbladKernel::LindbladKernel(int dim, std::vector<LeftTerm> left, std::vector<SandwichTerm> sandwich)
    : dim_(dim), left_(std::move(left)), lv_(left_.size()) {
    auto clip = [dim](const CVec& v, int offset) {
        const auto [lo, hi] = valid_rows(dim, offset);
        CVec w = CVec::Zero(dim);
        if (hi > lo) w.segment(lo, hi - lo) = v.segment(lo, hi - lo);
        return w;
    };
    for (auto& l : left_) l.v = clip(l.v, l.offset);
    auto add = [&](SandwichTerm t) {
        for (auto& s : sided_)
            if (s.offA == t.offA && s.offB == t.offB && s.freq == t.freq && s.vA == t.vA && s.vB == t.vB) {
                s.coef += t.coef;
                return;
            }
        sided_.push_back(std::move(t));
    };
    for (const auto& s : sandwich) {
        const CVec va = clip(s.vA, s.offA), vb = clip(s.vB, s.offB);
        add({s.offA, s.offB, va, vb, s.coef, s.freq});
        add({s.offB, s.offA, vb, va, std::conj(s.coef), -s.freq});
    }
}

std::size_t packed_size(int d) { return static_cast<std::size_t>(d) * (d + 1) / 2; }

CVec pack_lower(const CMat& m) {
    const int d = static_cast<int>(m.rows());
    CVec v(packed_size(d));
    std::size_t k = 0;
    for (int j = 0; j < d; ++j) {
        v.segment(k, d - j) = m.col(j).segment(j, d - j);
        k += d - j;
    }
    return v;
}

CMat unpack_hermitian(const CVec& v, int d) {
    if (static_cast<std::size_t>(v.size()) != packed_size(d)) throw DimensionError("packed size mismatch");
    CMat m(d, d);
    std::size_t k = 0;
    for (int j = 0; j < d; ++j) {
        m.col(j).segment(j, d - j) = v.segment(k, d - j);
        k += d - j;
    }
    for (int j = 0; j < d; ++j)
        for (int i = j + 1; i < d; ++i) m(j, i) = std::conj(m(i, j));
    return m;
}

namespace {

inline std::size_t col_offset(int d, int j) {
    return static_cast<std::size_t>(j) * d - static_cast<std::size_t>(j) * (j - 1) / 2;
}

// Calls fn(k, src) over rows [r0, r0 + n) of column c of the packed Hermitian matrix, where src
// holds rows r0 + k onward; rows above the diagonal are conjugated into buf.
template <class Fn>
inline void for_column_rows(const cplx* p, int d, int c, int r0, int n, cplx* buf, Fn&& fn) {
    int k = 0;
    if (r0 < c) {
        k = std::min(n, c - r0);
        for (int q = 0; q < k; ++q) {
            const int r = r0 + q;
            buf[q] = std::conj(p[col_offset(d, r) + (c - r)]);
        }
        fn(0, k, buf);
    }
    if (n > k) fn(k, n - k, p + col_offset(d, c) + (r0 + k - c));
}

using CMap = Eigen::Map<const CVec>;

}  // namespace

void LindbladKernel::prepare(double t) {
    const std::size_t nl = left_.size(), ns = sided_.size();
    for (std::size_t k = 0; k < nl; ++k) {
        const cplx ph = left_[k].freq == 0.0 ? cplx(1.0) : std::polar(1.0, left_[k].freq * t);
        lv_[k] = left_[k].v * ph;
    }
    sa_.resize(ns);
    for (std::size_t k = 0; k < ns; ++k) {
        const SandwichTerm& s = sided_[k];
        sa_[k] = s.vA * (s.coef * (s.freq == 0.0 ? cplx(1.0) : std::polar(1.0, s.freq * t)));
    }
    buf_.resize(dim_);
}

void LindbladKernel::apply_packed(double t, const CVec& rho, CVec& out) {
    const int d = dim_;
    if (static_cast<std::size_t>(rho.size()) != packed_size(d)) throw DimensionError("kernel: state dimension mismatch");
    prepare(t);
    out.resize(rho.size());
    const cplx* p = rho.data();
    cplx* buf = buf_.data();
    // lower triangle of X + X^dag, using rho = rho^dag:
    //   X(i,j)      = sum lv(i) rho(i+o, j) + s vA(i) conj(vB(j)) rho(i+a, j+b)
    //   X^dag(i,j)  = sum conj(lv(j)) rho(i, j+o) + conj(s) vB(i) conj(vA(j)) rho(i+b, j+a)
    // both sandwich halves live in sided_
    // row blocks keep the columns within one cavity offset of j resident in cache
    constexpr int block = 1 << 30;
    for (int r0 = 0; r0 < d; r0 += block) {
        const int r1 = std::min(d, r0 + block);
        for (int j = 0; j < r1; ++j) {
            const int a = std::max(j, r0), len = r1 - a;
            Eigen::Map<CVec> oc(out.data() + col_offset(d, j) + (a - j), len);
            oc.setZero();
            // oc over rows [i0, i0 + n) += w * coef(i) * rho(i + off, col)
            auto banded = [&](const CVec& coef, cplx w, int off, int col) {
                const auto [lo, hi] = valid_rows(d, off);
                const int i0 = std::max(lo, a), n = std::min(hi, r1) - i0;
                if (n <= 0) return;
                for_column_rows(p, d, col, i0 + off, n, buf, [&](int k, int m, const cplx* src) {
                    oc.segment(i0 - a + k, m).array() += w * coef.segment(i0 + k, m).array() * CMap(src, m).array();
                });
            };
            for (std::size_t k = 0; k < left_.size(); ++k) {
                const int o = left_[k].offset;
                banded(lv_[k], 1.0, o, j);
                const cplx w = std::conj(lv_[k](j));
                if (w != cplx(0.0))
                    for_column_rows(p, d, j + o, a, len, buf,
                                    [&](int q, int m, const cplx* src) { oc.segment(q, m) += w * CMap(src, m); });
            }
            for (std::size_t k = 0; k < sided_.size(); ++k) {
                const SandwichTerm& s = sided_[k];
                const cplx wb = std::conj(s.vB(j));
                if (wb != cplx(0.0)) banded(sa_[k], wb, s.offA, j + s.offB);
            }
            if (a == j) oc(0) = cplx(oc(0).real(), 0.0);
        }
    }
}

void LindbladKernel::apply(double t, const CMat& rho, CMat& out) {
    if (rho.rows() != dim_ || rho.cols() != dim_) throw DimensionError("kernel: state dimension mismatch");
    CVec o;
    apply_packed(t, pack_lower(rho), o);
    out = unpack_hermitian(o, dim_);
}

}  // namespace optomag
