#include "irpg/normal_bases.hpp"

#include <stdexcept>

namespace irpg {

namespace grassmann {

int codim(int p) { return p * p; }

Vector normal_adjoint(const Matrix& X, const Matrix& Z) {
  if (Z.rows() != X.rows() || Z.cols() != X.cols())
    throw std::invalid_argument("grassmann: shape mismatch");
  Matrix M = X.transpose() * Z;
  return Eigen::Map<Vector>(M.data(), M.size());
}

Matrix normal_apply(const Matrix& X, const Vector& v) {
  const int p = static_cast<int>(X.cols());
  if (v.size() != p * p)
    throw std::invalid_argument("grassmann: coordinate length mismatch");
  Eigen::Map<const Matrix> M(v.data(), p, p);
  return X * M;
}

}  // namespace grassmann

namespace {

void check_orthonormal(const Matrix& U, const char* who) {
  const int r = static_cast<int>(U.cols());
  if ((U.transpose() * U - Matrix::Identity(r, r)).norm() > 1e-10)
    throw std::invalid_argument(std::string(who) +
                                ": factor columns not orthonormal");
}

}  // namespace

FixedRankNormalOp::FixedRankNormalOp(const Matrix& U, const Matrix& V)
    : m_(static_cast<int>(U.rows())),
      n_(static_cast<int>(V.rows())),
      r_(static_cast<int>(U.cols())),
      U_(U),
      V_(V),
      qrU_(U),
      qrV_(V) {
  if (V.cols() != r_) throw std::invalid_argument("fixed-rank: r mismatch");
  if (r_ >= m_ || r_ >= n_)
    throw std::invalid_argument("fixed-rank: rank must be below both dims");
  check_orthonormal(U_, "fixed-rank U");
  check_orthonormal(V_, "fixed-rank V");
  // Rank deficiency of the factors shows up as a tiny R diagonal.
  for (int j = 0; j < r_; ++j) {
    if (std::abs(qrU_.matrixQR()(j, j)) < 1e-12 ||
        std::abs(qrV_.matrixQR()(j, j)) < 1e-12)
      throw std::invalid_argument("fixed-rank: invalid point (rank deficient)");
  }
}

Matrix FixedRankNormalOp::applyUperpT(const Matrix& Z) const {
  Matrix W = qrU_.householderQ().transpose() * Z;
  return W.bottomRows(m_ - r_);
}

Matrix FixedRankNormalOp::applyUperp(const Matrix& W) const {
  Matrix full = Matrix::Zero(m_, W.cols());
  full.bottomRows(m_ - r_) = W;
  return qrU_.householderQ() * full;
}

Matrix FixedRankNormalOp::applyVperpT(const Matrix& Z) const {
  Matrix W = qrV_.householderQ().transpose() * Z;
  return W.bottomRows(n_ - r_);
}

Matrix FixedRankNormalOp::applyVperp(const Matrix& W) const {
  Matrix full = Matrix::Zero(n_, W.cols());
  full.bottomRows(n_ - r_) = W;
  return qrV_.householderQ() * full;
}

Vector FixedRankNormalOp::adjoint(const Matrix& Z) const {
  if (Z.rows() != m_ || Z.cols() != n_)
    throw std::invalid_argument("fixed-rank: shape mismatch");
  // M = U_perp^T Z V_perp, applying both complements implicitly.
  Matrix ZtUperp = applyUperpT(Z);                 // (m-r) x n
  Matrix Mt = applyVperpT(ZtUperp.transpose());    // (n-r) x (m-r)
  Matrix Mfinal = Mt.transpose();                  // (m-r) x (n-r)
  return Eigen::Map<Vector>(Mfinal.data(), Mfinal.size());
}

Matrix FixedRankNormalOp::apply(const Vector& v) const {
  if (v.size() != codim())
    throw std::invalid_argument("fixed-rank: coordinate length mismatch");
  Eigen::Map<const Matrix> M(v.data(), m_ - r_, n_ - r_);
  Matrix left = applyUperp(M);                     // m x (n-r)
  Matrix out = applyVperp(left.transpose());       // n x m
  return out.transpose();
}

Matrix FixedRankNormalOp::tangent_project(const Matrix& Z) const {
  Matrix Pu = U_ * U_.transpose();
  Matrix Pv = V_ * V_.transpose();
  Matrix Im = Matrix::Identity(m_, m_);
  Matrix In = Matrix::Identity(n_, n_);
  return Z - (Im - Pu) * Z * (In - Pv);
}

PsdFixedRankNormalOp::PsdFixedRankNormalOp(const Matrix& H)
    : n_(static_cast<int>(H.rows())),
      r_(static_cast<int>(H.cols())),
      H_(H),
      qrH_(H) {
  if (r_ >= n_) throw std::invalid_argument("psd: rank must be below n");
  for (int j = 0; j < r_; ++j)
    if (std::abs(qrH_.matrixQR()(j, j)) < 1e-12)
      throw std::invalid_argument("psd: invalid point (rank deficient H)");
}

Matrix PsdFixedRankNormalOp::applyHperpT(const Matrix& Z) const {
  Matrix W = qrH_.householderQ().transpose() * Z;
  return W.bottomRows(n_ - r_);
}

Matrix PsdFixedRankNormalOp::applyHperp(const Matrix& W) const {
  Matrix full = Matrix::Zero(n_, W.cols());
  full.bottomRows(n_ - r_) = W;
  return qrH_.householderQ() * full;
}

Vector PsdFixedRankNormalOp::adjoint(const Matrix& Z) const {
  if (Z.rows() != n_ || Z.cols() != n_)
    throw std::invalid_argument("psd: shape mismatch");
  Matrix S = sym(Z);
  Matrix left = applyHperpT(S);                    // (n-r) x n
  Matrix M = applyHperpT(left.transpose()).transpose();  // (n-r) x (n-r)
  return svec(sym(M));
}

Matrix PsdFixedRankNormalOp::apply(const Vector& v) const {
  if (v.size() != codim())
    throw std::invalid_argument("psd: coordinate length mismatch");
  Matrix M = svec_inverse(v, n_ - r_);
  Matrix left = applyHperp(M);                     // n x (n-r)
  return applyHperp(left.transpose()).transpose(); // n x n
}

ProductNormalOp::ProductNormalOp(std::vector<ProductComponent> parts)
    : parts_(std::move(parts)) {
  for (const auto& c : parts_) total_ += c.codim;
}

Vector ProductNormalOp::adjoint(const std::vector<Matrix>& Zs) const {
  if (Zs.size() != parts_.size())
    throw std::invalid_argument("product: component count mismatch");
  Vector v(total_);
  int off = 0;
  for (size_t i = 0; i < parts_.size(); ++i) {
    v.segment(off, parts_[i].codim) = parts_[i].adjoint(Zs[i]);
    off += parts_[i].codim;
  }
  return v;
}

std::vector<Matrix> ProductNormalOp::apply(const Vector& v) const {
  if (v.size() != total_)
    throw std::invalid_argument("product: coordinate length mismatch");
  std::vector<Matrix> out;
  out.reserve(parts_.size());
  int off = 0;
  for (const auto& c : parts_) {
    out.push_back(c.apply(Vector(v.segment(off, c.codim))));
    off += c.codim;
  }
  return out;
}

}  // namespace irpg
