#pragma once

#include <vector>

#include "optomag/fock.hpp"

namespace optomag {

/// One diagonal: (A x)_i += v_i x_{i+offset}; entries outside the matrix are zero.
struct Band {
    int offset = 0;
    CVec v;
};

/// Sparse operator stored by diagonals.
struct BandedOp {
    int dim = 0;
    std::vector<Band> bands;

    static BandedOp zero(int dim);
    static BandedOp identity(int dim);
    static BandedOp from_dense(const CMat& m, double tol = 0.0);

    CMat to_dense() const;
    BandedOp adjoint() const;
    BandedOp scaled(cplx c) const;
    /// Merges bands with equal offsets and drops all-zero bands.
    BandedOp compressed() const;

    friend BandedOp operator+(const BandedOp& a, const BandedOp& b);
    friend BandedOp operator-(const BandedOp& a, const BandedOp& b);
    friend BandedOp operator*(const BandedOp& a, const BandedOp& b);
};

/// Kronecker product with `a` acting on the slow index.
BandedOp kron(const BandedOp& a, const BandedOp& b);

/// Left-multiplication term: X += e^{i w t} diag(v) rho shifted by `offset` rows.
struct LeftTerm {
    int offset = 0;
    CVec v;
    double freq = 0.0;
};

/// Sandwich term: X += c e^{i w t} diag(vA) rho(i + offA, j + offB) diag(conj vB).
struct SandwichTerm {
    int offA = 0, offB = 0;
    CVec vA, vB;
    cplx coef{1.0, 0.0};
    double freq = 0.0;
};

/// Column-major lower triangle of a Hermitian matrix, d (d + 1) / 2 entries.
std::size_t packed_size(int d);
CVec pack_lower(const CMat& m);
CMat unpack_hermitian(const CVec& packed, int d);

/// Evaluates L rho = X + X^dag for Hermitian rho, column by column over the lower triangle.
class LindbladKernel {
public:
    LindbladKernel() = default;
    LindbladKernel(int dim, std::vector<LeftTerm> left, std::vector<SandwichTerm> sandwich);

    int dim() const { return dim_; }
    /// Packed-lower input and output (see pack_lower).
    void apply_packed(double t, const CVec& rho, CVec& out);
    /// Dense convenience wrapper; rho must be Hermitian.
    void apply(double t, const CMat& rho, CMat& out);
    std::size_t term_count() const { return left_.size() + sided_.size(); }

private:
    int dim_ = 0;
    std::vector<LeftTerm> left_;
    // one-sided sandwich terms of X + X^dag, identical terms merged
    std::vector<SandwichTerm> sided_;
    std::vector<CVec> lv_, sa_;
    CVec buf_;

    void prepare(double t);
};

}  // namespace optomag
