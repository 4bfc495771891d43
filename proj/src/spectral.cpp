#include "kgap/spectral.hpp"

#include <arpack/arpack.hpp>
#include <lapacke.h>
#include <unsupported/Eigen/IterativeSolvers>

#include <algorithm>
#include <chrono>
#include <cmath>
#include <numbers>
#include <random>
#include <sstream>

namespace kgap {

namespace {

// Upwind neighbour of cell c along axis a for a velocity component of sign s;
// -1 when it falls outside the box.
int upwind_neighbour(int c, int a, double s, int n, bool periodic) {
  const int n2 = n * n;
  int m[3] = {c / n2, (c / n) % n, c % n};
  m[a] += s > 0.0 ? -1 : 1;
  if (m[a] < 0 || m[a] >= n) {
    if (!periodic) return -1;
    m[a] = (m[a] + n) % n;
  }
  return (m[0] * n + m[1]) * n + m[2];
}

}  // namespace

Vector FullOperator::apply(const Vector& x) const {
  Vector y = transport * x;
  Eigen::Map<const Matrix> X(x.data(), n_v, n_x());
  Eigen::Map<Matrix> Y(y.data(), n_v, n_x());
  Y.noalias() += L * X;
  return y;
}

Eigen::VectorXcd FullOperator::apply(const Eigen::VectorXcd& x) const {
  const Vector re = apply(Vector(x.real()));
  const Vector im = apply(Vector(x.imag()));
  Eigen::VectorXcd y(x.size());
  y.real() = re;
  y.imag() = im;
  return y;
}

Eigen::SparseMatrix<double> FullOperator::sparse(std::size_t max_bytes) const {
  const double nnz = static_cast<double>(n_x()) * n_v * n_v + transport.nonZeros();
  if (nnz * 12.0 > static_cast<double>(max_bytes)) {
    std::ostringstream msg;
    msg << "full operator with " << nnz << " nonzeros exceeds the memory cap; shrink the grids";
    throw std::length_error(msg.str());
  }
  std::vector<Eigen::Triplet<double>> trip;
  trip.reserve(static_cast<std::size_t>(nnz));
  for (int r = 0; r < transport.outerSize(); ++r)
    for (Eigen::SparseMatrix<double, Eigen::RowMajor>::InnerIterator it(transport, r); it; ++it)
      trip.emplace_back(r, static_cast<int>(it.col()), it.value());
  for (int c = 0; c < n_x(); ++c)
    for (int j = 0; j < n_v; ++j)
      for (int i = 0; i < n_v; ++i)
        if (L(j, i) != 0.0) trip.emplace_back(c * n_v + j, c * n_v + i, L(j, i));
  Eigen::SparseMatrix<double> S(dim(), dim());
  S.setFromTriplets(trip.begin(), trip.end());
  return S;
}

Matrix FullOperator::dense(std::size_t max_bytes) const {
  const double bytes = static_cast<double>(dim()) * dim() * sizeof(double);
  if (bytes > static_cast<double>(max_bytes))
    throw std::length_error("dense full operator exceeds the memory cap; shrink the grids");
  Matrix A = Matrix(transport);
  for (int c = 0; c < n_x(); ++c) A.block(c * n_v, c * n_v, n_v, n_v) += L;
  return A;
}

FullOperator assemble_full_operator(const SpatialDomain& domain, const VelocityGrid& grid,
                                    const CollisionOperator& op) {
  domain.validate();
  if (op.L.rows() != grid.size()) throw std::invalid_argument("collision operator / grid mismatch");
  FullOperator fo;
  fo.closure = domain.mode == DomainMode::Torus3 ? Closure::Periodic : Closure::ZeroInflowUpwind;
  fo.n_cells = domain.n_cells;
  fo.side = domain.side;
  fo.n_v = grid.size();
  fo.velocities = grid.nodes();
  fo.nu = op.nu;
  fo.L = op.L;
  const bool periodic = fo.closure == Closure::Periodic;
  const int n = fo.n_cells;
  const double dx = fo.dx();
  std::vector<Eigen::Triplet<double>> trip;
  trip.reserve(static_cast<std::size_t>(fo.dim()) * 4);
  for (int c = 0; c < fo.n_x(); ++c)
    for (int j = 0; j < fo.n_v; ++j) {
      const Vec3& v = fo.velocities[j];
      const int row = c * fo.n_v + j;
      double diag = 0.0;
      for (int a = 0; a < 3; ++a) {
        if (v[a] == 0.0) continue;
        const double s = std::abs(v[a]) / dx;
        diag -= s;
        const int nb = upwind_neighbour(c, a, v[a], n, periodic);
        if (nb >= 0) trip.emplace_back(row, nb * fo.n_v + j, s);
      }
      if (diag != 0.0) trip.emplace_back(row, row, diag);
    }
  fo.transport.resize(fo.dim(), fo.dim());
  fo.transport.setFromTriplets(trip.begin(), trip.end());
  return fo;
}

FullOperator weighted_surrogate_operator(const SpatialDomain& domain, const VelocityGrid& grid,
                                         const CollisionOperator& op, const WeightSpec& spec) {
  CollisionOperator diag_only;
  diag_only.nu = op.nu;
  diag_only.L = Matrix((-op.nu).asDiagonal());
  FullOperator fo = assemble_full_operator(domain, grid, diag_only);
  Vector Wv(fo.dim());
  for (int c = 0; c < fo.n_x(); ++c)
    for (int j = 0; j < fo.n_v; ++j)
      Wv[c * fo.n_v + j] = spec.W(domain.cell_center(c), grid.node(j));
  for (int r = 0; r < fo.transport.outerSize(); ++r)
    for (Eigen::SparseMatrix<double, Eigen::RowMajor>::InnerIterator it(fo.transport, r); it; ++it)
      it.valueRef() *= Wv[r] / Wv[it.col()];
  return fo;
}

}  // namespace kgap

// ---------------------------------------------------------------------------
// Matrix-free shifted operator for Eigen's GMRES.

namespace kgap {
class ShiftedOperator;
}

namespace Eigen {
namespace internal {
template <>
struct traits<kgap::ShiftedOperator> : public traits<Eigen::SparseMatrix<double>> {};
}  // namespace internal
}  // namespace Eigen

namespace kgap {

class ShiftedOperator : public Eigen::EigenBase<ShiftedOperator> {
 public:
  using Scalar = double;
  using RealScalar = double;
  using StorageIndex = int;
  enum { ColsAtCompileTime = Eigen::Dynamic, MaxColsAtCompileTime = Eigen::Dynamic, IsRowMajor = false };

  ShiftedOperator(const FullOperator& op, double sigma) : op_(&op), sigma_(sigma) {}
  Eigen::Index rows() const { return op_->dim(); }
  Eigen::Index cols() const { return op_->dim(); }

  template <typename Rhs>
  Eigen::Product<ShiftedOperator, Rhs, Eigen::AliasFreeProduct> operator*(
      const Eigen::MatrixBase<Rhs>& x) const {
    return Eigen::Product<ShiftedOperator, Rhs, Eigen::AliasFreeProduct>(*this, x.derived());
  }

  Vector apply(const Vector& x) const { return op_->apply(x) - sigma_ * x; }
  const FullOperator& op() const { return *op_; }
  double sigma() const { return sigma_; }

 private:
  const FullOperator* op_;
  double sigma_;
};

// Exact inverse of (transport - nu - sigma) by upwind sweeps, one velocity at a time.
class SweepPreconditioner {
 public:
  using Scalar = double;
  using RealScalar = double;
  using StorageIndex = int;
  enum { ColsAtCompileTime = Eigen::Dynamic, MaxColsAtCompileTime = Eigen::Dynamic };

  SweepPreconditioner() = default;
  template <typename M>
  explicit SweepPreconditioner(const M& m) {
    compute(m);
  }
  template <typename M>
  SweepPreconditioner& analyzePattern(const M&) {
    return *this;
  }
  template <typename M>
  SweepPreconditioner& factorize(const M& m) {
    return compute(m);
  }
  SweepPreconditioner& compute(const ShiftedOperator& m) {
    op_ = &m.op();
    sigma_ = m.sigma();
    return *this;
  }
  Eigen::ComputationInfo info() { return Eigen::Success; }

  template <typename Rhs>
  Vector solve(const Eigen::MatrixBase<Rhs>& b) const {
    const FullOperator& fo = *op_;
    const int n = fo.n_cells;
    const bool periodic = fo.closure == Closure::Periodic;
    const double dx = fo.dx();
    Vector x = Vector::Zero(fo.dim());
    for (int j = 0; j < fo.n_v; ++j) {
      const Vec3& v = fo.velocities[j];
      double s[3];
      double sum = 0.0;
      for (int a = 0; a < 3; ++a) {
        s[a] = std::abs(v[a]) / dx;
        sum += s[a];
      }
      const double denom = sum + fo.nu[j] + sigma_;
      for (int k0 = 0; k0 < n; ++k0)
        for (int k1 = 0; k1 < n; ++k1)
          for (int k2 = 0; k2 < n; ++k2) {
            const int i0 = v[0] >= 0.0 ? k0 : n - 1 - k0;
            const int i1 = v[1] >= 0.0 ? k1 : n - 1 - k1;
            const int i2 = v[2] >= 0.0 ? k2 : n - 1 - k2;
            const int c = (i0 * n + i1) * n + i2;
            double acc = -b[c * fo.n_v + j];
            for (int a = 0; a < 3; ++a) {
              if (s[a] == 0.0) continue;
              const int nb = upwind_neighbour(c, a, v[a], n, periodic);
              if (nb >= 0) acc += s[a] * x[nb * fo.n_v + j];
            }
            x[c * fo.n_v + j] = acc / denom;
          }
    }
    return x;
  }

 private:
  const FullOperator* op_ = nullptr;
  double sigma_ = 0.0;
};

}  // namespace kgap

namespace Eigen {
namespace internal {
template <typename Rhs>
struct generic_product_impl<kgap::ShiftedOperator, Rhs, SparseShape, DenseShape, GemvProduct>
    : generic_product_impl_base<kgap::ShiftedOperator, Rhs,
                                generic_product_impl<kgap::ShiftedOperator, Rhs>> {
  using Scalar = typename Product<kgap::ShiftedOperator, Rhs>::Scalar;
  template <typename Dest>
  static void scaleAndAddTo(Dest& dst, const kgap::ShiftedOperator& lhs, const Rhs& rhs,
                            const Scalar& alpha) {
    const kgap::Vector x = rhs;
    dst.noalias() += alpha * lhs.apply(x);
  }
};
}  // namespace internal
}  // namespace Eigen

namespace kgap {

namespace {

using Complex = std::complex<double>;

struct Candidate {
  Complex lambda;
  int block = -1;  // Fourier block index, or -1
};

void finalize_report(SpectralReport& rep, std::vector<Complex> all, double scale,
                     const SpectralOptions& opt) {
  std::sort(all.begin(), all.end(), [](Complex a, Complex b) {
    if (a.real() != b.real()) return a.real() > b.real();
    return a.imag() > b.imag();
  });
  rep.zero_modes = 0;
  rep.gap_abscissa = -std::numeric_limits<double>::infinity();
  for (const Complex& z : all) {
    if (std::abs(z) <= opt.zero_tol * scale)
      ++rep.zero_modes;
    else
      rep.gap_abscissa = std::max(rep.gap_abscissa, z.real());
  }
}

// dgeev on a copy; eigenvalues and (optionally) right eigenvectors as complex columns.
void real_eig(const Matrix& A, std::vector<Complex>& lambda, Eigen::MatrixXcd* vecs) {
  const int n = static_cast<int>(A.rows());
  Matrix a = A;
  Vector wr(n), wi(n);
  Matrix vr;
  if (vecs) vr.resize(n, n);
  const int info = LAPACKE_dgeev(LAPACK_COL_MAJOR, 'N', vecs ? 'V' : 'N', n, a.data(), n,
                                 wr.data(), wi.data(), nullptr, 1, vecs ? vr.data() : nullptr,
                                 n);
  if (info != 0) throw NumericalError("dense eigensolver (dgeev) failed, info=" + std::to_string(info));
  lambda.resize(n);
  for (int i = 0; i < n; ++i) lambda[i] = Complex(wr[i], wi[i]);
  if (!vecs) return;
  vecs->resize(n, n);
  for (int i = 0; i < n; ++i) {
    if (wi[i] == 0.0) {
      vecs->col(i) = vr.col(i).cast<Complex>();
    } else {
      vecs->col(i).real() = vr.col(i);
      vecs->col(i).imag() = vr.col(i + 1);
      vecs->col(i + 1) = vecs->col(i).conjugate();
      ++i;
    }
  }
}

void complex_eig(const Eigen::MatrixXcd& A, std::vector<Complex>& lambda, Eigen::MatrixXcd* vecs) {
  const int n = static_cast<int>(A.rows());
  Eigen::MatrixXcd a = A;
  std::vector<Complex> w(n);
  if (vecs) vecs->resize(n, n);
  const int info = LAPACKE_zgeev(
      LAPACK_COL_MAJOR, 'N', vecs ? 'V' : 'N', n, reinterpret_cast<lapack_complex_double*>(a.data()),
      n, reinterpret_cast<lapack_complex_double*>(w.data()), nullptr, 1,
      vecs ? reinterpret_cast<lapack_complex_double*>(vecs->data()) : nullptr, n);
  if (info != 0) throw NumericalError("dense eigensolver (zgeev) failed, info=" + std::to_string(info));
  lambda = w;
}

double operator_scale(const FullOperator& fo) {
  double s = 1.0;
  for (int j = 0; j < fo.n_v; ++j) {
    const Vec3& v = fo.velocities[j];
    s = std::max(s, (std::abs(v[0]) + std::abs(v[1]) + std::abs(v[2])) / fo.dx() + std::abs(fo.nu[j]));
  }
  return std::max(s, fo.L.cwiseAbs().maxCoeff());
}

void check_residuals(const SpectralReport& rep, const SpectralOptions& opt) {
  for (std::size_t i = 0; i < rep.residuals.size(); ++i)
    if (!(rep.residuals[i] <= opt.residual_tol)) {
      std::ostringstream msg;
      msg << "eigenpair residual " << rep.residuals[i] << " for lambda=" << rep.eigenvalues[i]
          << " exceeds " << opt.residual_tol;
      throw NumericalError(msg.str());
    }
}

SpectralReport dense_path(const FullOperator& fo, int k, const SpectralOptions& opt) {
  SpectralReport rep = dense_rightmost(fo.dense(), k, opt);
  rep.closure = fo.closure == Closure::Periodic ? "periodic" : "zero_inflow_upwind";
  finalize_report(rep, rep.eigenvalues, operator_scale(fo), opt);
  return rep;
}

Eigen::MatrixXcd fourier_block(const FullOperator& fo, const std::array<int, 3>& kv) {
  const int n = fo.n_cells;
  Eigen::MatrixXcd B = fo.L.cast<Complex>();
  for (int j = 0; j < fo.n_v; ++j) {
    const Vec3& v = fo.velocities[j];
    Complex s = 0.0;
    for (int a = 0; a < 3; ++a) {
      if (v[a] == 0.0) continue;
      const double th = 2.0 * std::numbers::pi * kv[a] / n;
      if (v[a] > 0.0)
        s -= v[a] * (1.0 - std::exp(Complex(0.0, -th))) / fo.dx();
      else
        s -= v[a] * (std::exp(Complex(0.0, th)) - 1.0) / fo.dx();
    }
    B(j, j) += s;
  }
  return B;
}

SpectralReport fourier_path(const FullOperator& fo, int k, const SpectralOptions& opt) {
  const int n = fo.n_cells;
  std::vector<Candidate> cands;
  std::vector<Complex> all;
  std::vector<std::array<int, 3>> blocks;
  for (int k0 = 0; k0 < n; ++k0)
    for (int k1 = 0; k1 < n; ++k1)
      for (int k2 = 0; k2 < n; ++k2) {
        const std::array<int, 3> kv = {k0, k1, k2};
        const std::array<int, 3> mk = {(n - k0) % n, (n - k1) % n, (n - k2) % n};
        if (mk < kv) continue;  // conjugate of a block already handled
        std::vector<Complex> lam;
        complex_eig(fourier_block(fo, kv), lam, nullptr);
        const int id = static_cast<int>(blocks.size());
        blocks.push_back(kv);
        int id_conj = id;
        if (mk != kv) {
          id_conj = static_cast<int>(blocks.size());
          blocks.push_back(mk);
        }
        for (const Complex& z : lam) {
          cands.push_back({z, id});
          all.push_back(z);
          if (mk != kv) {
            cands.push_back({std::conj(z), id_conj});
            all.push_back(std::conj(z));
          }
        }
      }
  std::sort(cands.begin(), cands.end(), [](const Candidate& a, const Candidate& b) {
    if (a.lambda.real() != b.lambda.real()) return a.lambda.real() > b.lambda.real();
    return a.lambda.imag() > b.lambda.imag();
  });
  SpectralReport rep;
  rep.method = "fourier_blocks_dense";
  rep.closure = "periodic";
  rep.dim = fo.dim();
  const int take = std::min<int>(k, static_cast<int>(cands.size()));
  // Residuals in the block picture equal those of the full Fourier-mode eigenvector.
  std::map<int, std::pair<std::vector<Complex>, Eigen::MatrixXcd>> solved;
  for (int i = 0; i < take; ++i) {
    const Candidate& cd = cands[i];
    auto it = solved.find(cd.block);
    if (it == solved.end()) {
      std::vector<Complex> lam;
      Eigen::MatrixXcd V;
      complex_eig(fourier_block(fo, blocks[cd.block]), lam, &V);
      it = solved.emplace(cd.block, std::make_pair(lam, V)).first;
    }
    const auto& [lam, V] = it->second;
    int best = 0;
    for (int m = 1; m < static_cast<int>(lam.size()); ++m)
      if (std::abs(lam[m] - cd.lambda) < std::abs(lam[best] - cd.lambda)) best = m;
    const Eigen::MatrixXcd B = fourier_block(fo, blocks[cd.block]);
    const Eigen::VectorXcd x = V.col(best);
    rep.eigenvalues.push_back(lam[best]);
    rep.residuals.push_back((B * x - lam[best] * x).norm() / x.norm());
  }
  finalize_report(rep, all, operator_scale(fo), opt);
  return rep;
}

SpectralReport arnoldi_path(const FullOperator& fo, int k, const SpectralOptions& opt) {
  const a_int N = fo.dim();
  const a_int nev = std::min<a_int>(k, N - 2);
  a_int ncv = opt.ncv > 0 ? opt.ncv : std::max<a_int>(2 * nev + 1, 40);
  ShiftedOperator A(fo, opt.shift);
  for (int attempt = 0; attempt < 2; ++attempt, ncv *= 2) {
    ncv = std::min<a_int>(ncv, N - 1);
    Eigen::GMRES<ShiftedOperator, SweepPreconditioner> gmres;
    gmres.setTolerance(opt.inner_tol);
    gmres.set_restart(60);
    gmres.setMaxIterations(2000);
    gmres.compute(A);

    std::vector<double> resid(N, 1.0), V(static_cast<std::size_t>(N) * ncv), workd(3 * N);
    const a_int lworkl = 3 * ncv * ncv + 6 * ncv;
    std::vector<double> workl(lworkl);
    a_int iparam[11] = {1, 0, 3000, 1, 0, 0, 3, 0, 0, 0, 0};
    a_int ipntr[14] = {0};
    a_int ido = 0, info = 1;  // info=1: use the supplied starting vector
    // Deterministic, generic starting vector.
    for (a_int i = 0; i < N; ++i) resid[i] = 1.0 + 0.5 * std::sin(0.7 * i + 0.3);
    while (true) {
      arpack::naupd(ido, arpack::bmat::identity, N, arpack::which::largest_magnitude, nev,
                    opt.arnoldi_tol, resid.data(), ncv, V.data(), N, iparam, ipntr, workd.data(),
                    workl.data(), lworkl, info);
      if (ido != -1 && ido != 1) break;
      Eigen::Map<const Vector> x(&workd[ipntr[0] - 1], N);
      Eigen::Map<Vector> y(&workd[ipntr[1] - 1], N);
      const Vector b = x;
      y = gmres.solve(b);
      if (gmres.info() != Eigen::Success) {
        std::ostringstream msg;
        msg << "inner GMRES solve failed after " << gmres.iterations()
            << " iterations, error " << gmres.error();
        throw NumericalError(msg.str());
      }
    }
    if (info < 0) throw NumericalError("ARPACK dnaupd error, info=" + std::to_string(info));
    if (info == 1) continue;  // maximum iterations: retry with a larger subspace
    std::vector<a_int> select(ncv, 1);
    std::vector<double> dr(nev + 1), di(nev + 1), Z(static_cast<std::size_t>(N) * (nev + 1)),
        workev(3 * ncv);
    a_int ierr = 0;
    arpack::neupd(1, arpack::howmny::ritz_vectors, select.data(), dr.data(), di.data(), Z.data(), N,
                  opt.shift, 0.0, workev.data(), arpack::bmat::identity, N,
                  arpack::which::largest_magnitude, nev, opt.arnoldi_tol, resid.data(), ncv,
                  V.data(), N, iparam, ipntr, workd.data(), workl.data(), lworkl, ierr);
    if (ierr != 0) throw NumericalError("ARPACK dneupd error, info=" + std::to_string(ierr));
    const a_int nconv = iparam[4];
    struct Pair {
      Complex lambda;
      Eigen::VectorXcd x;
    };
    std::vector<Pair> pairs;
    for (a_int i = 0; i < nconv; ++i) {
      Eigen::Map<const Vector> zr(&Z[static_cast<std::size_t>(i) * N], N);
      if (di[i] == 0.0) {
        pairs.push_back({Complex(dr[i], 0.0), zr.cast<Complex>()});
      } else if (i + 1 < nconv + 1) {
        Eigen::Map<const Vector> zi(&Z[static_cast<std::size_t>(i + 1) * N], N);
        Eigen::VectorXcd x(N);
        x.real() = zr;
        x.imag() = zi;
        pairs.push_back({Complex(dr[i], di[i]), x});
        if (i + 1 < nconv) pairs.push_back({Complex(dr[i], -di[i]), x.conjugate()});
        ++i;
      }
    }
    std::sort(pairs.begin(), pairs.end(), [](const Pair& a, const Pair& b) {
      if (a.lambda.real() != b.lambda.real()) return a.lambda.real() > b.lambda.real();
      return a.lambda.imag() > b.lambda.imag();
    });
    SpectralReport rep;
    rep.method = "arnoldi_shift_invert";
    rep.closure = fo.closure == Closure::Periodic ? "periodic" : "zero_inflow_upwind";
    rep.dim = fo.dim();
    std::vector<Complex> all;
    for (const Pair& p : pairs) {
      rep.eigenvalues.push_back(p.lambda);
      rep.residuals.push_back((fo.apply(p.x) - p.lambda * p.x).norm() / p.x.norm());
      all.push_back(p.lambda);
    }
    finalize_report(rep, all, operator_scale(fo), opt);
    bool ok = static_cast<int>(rep.eigenvalues.size()) >= std::min<int>(k, 1);
    for (double r : rep.residuals) ok = ok && r <= opt.residual_tol;
    if (ok) return rep;
  }
  throw NumericalError("Arnoldi iteration did not converge, also with an enlarged subspace");
}

}  // namespace

SpectralReport dense_rightmost(const Matrix& A, int k, const SpectralOptions& opt) {
  if (k < 1) throw std::invalid_argument("rightmost_eigenvalues: k must be >= 1");
  std::vector<Complex> lam;
  Eigen::MatrixXcd V;
  real_eig(A, lam, &V);
  std::vector<int> order(lam.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = static_cast<int>(i);
  std::sort(order.begin(), order.end(), [&](int a, int b) {
    if (lam[a].real() != lam[b].real()) return lam[a].real() > lam[b].real();
    return lam[a].imag() > lam[b].imag();
  });
  SpectralReport rep;
  rep.method = "dense";
  rep.dim = static_cast<int>(A.rows());
  const int take = std::min<int>(k, static_cast<int>(lam.size()));
  for (int i = 0; i < take; ++i) {
    const int m = order[i];
    const Eigen::VectorXcd x = V.col(m);
    rep.eigenvalues.push_back(lam[m]);
    rep.residuals.push_back((A.cast<Complex>() * x - lam[m] * x).norm() / x.norm());
  }
  finalize_report(rep, lam, std::max(1.0, A.cwiseAbs().maxCoeff()), opt);
  return rep;
}

SpectralReport rightmost_eigenvalues(const FullOperator& fullop, int k, const SpectralOptions& opt) {
  if (k < 1) throw std::invalid_argument("rightmost_eigenvalues: k must be >= 1");
  SpectralReport rep;
  if (fullop.dim() <= opt.dense_cap)
    rep = dense_path(fullop, k, opt);
  else if (fullop.closure == Closure::Periodic)
    rep = fourier_path(fullop, k, opt);
  else
    rep = arnoldi_path(fullop, k, opt);
  check_residuals(rep, opt);
  return rep;
}

// ---------------------------------------------------------------------------

namespace {

// Spatial matrix of Lambda = v.grad_x(upwind) + nu for one velocity.
Matrix lambda_block(const SpatialDomain& domain, const Vec3& v, double nu) {
  const int nx = domain.size();
  const bool periodic = domain.mode == DomainMode::Torus3;
  Matrix M = Matrix::Zero(nx, nx);
  for (int c = 0; c < nx; ++c) {
    M(c, c) = nu;
    for (int a = 0; a < 3; ++a) {
      if (v[a] == 0.0) continue;
      const double s = std::abs(v[a]) / domain.dx();
      M(c, c) += s;
      const int nb = upwind_neighbour(c, a, v[a], domain.n_cells, periodic);
      if (nb >= 0) M(c, nb) -= s;
    }
  }
  return M;
}

Vector w_squared(const SpatialDomain& domain, const WeightSpec& spec, const Vec3& v) {
  Vector w2(domain.size());
  for (int c = 0; c < domain.size(); ++c) {
    const double W = spec.W(domain.cell_center(c), v);
    w2[c] = W * W;
  }
  return w2;
}

}  // namespace

double rayleigh_quotient(const SpatialDomain& domain, const VelocityGrid& grid,
                         const CollisionOperator& op, const WeightSpec& spec, double C0,
                         const Vector& f) {
  const int nx = domain.size();
  const int nv = grid.size();
  if (f.size() != nx * nv) throw std::invalid_argument("rayleigh_quotient: length mismatch");
  double num = 0.0, den = 0.0;
  for (int j = 0; j < nv; ++j) {
    const Vec3& v = grid.node(j);
    Vector fj(nx);
    for (int c = 0; c < nx; ++c) fj[c] = f[c * nv + j];
    const Vector m = Vector::Constant(nx, C0) + w_squared(domain, spec, v);
    const Vector Lf = lambda_block(domain, v, op.nu[j]) * fj;
    num += (m.cwiseProduct(Lf)).dot(fj);
    den += japanese_bracket(v) * (m.cwiseProduct(fj)).dot(fj);
  }
  return num / den;
}

RayleighBound rayleigh_lower_bound(const SpatialDomain& domain, const VelocityGrid& grid,
                                   const CollisionOperator& op, const WeightSpec& spec,
                                   unsigned seed, int n_random) {
  domain.validate();
  spec.validate();
  if (domain.mode == DomainMode::Torus3 && spec.q != 0.0)
    throw std::invalid_argument("the phase weight is not periodic; use q = 0 on the torus");
  const int nx = domain.size();
  const int nv = grid.size();
  std::vector<Matrix> blocks(nv);
  std::vector<Vector> w2(nv);
  for (int j = 0; j < nv; ++j) {
    blocks[j] = lambda_block(domain, grid.node(j), op.nu[j]);
    w2[j] = w_squared(domain, spec, grid.node(j));
  }
  RayleighBound out;
  // C0 doubling: chain inequality on random vectors.
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> gauss;
  std::vector<Matrix> samples(n_random);
  for (auto& s : samples) {
    s.resize(nx, nv);
    for (int i = 0; i < s.size(); ++i) s.data()[i] = gauss(rng);
  }
  double C0 = 1.0;
  for (int it = 0; it < 60; ++it, C0 *= 2.0) {
    bool ok = true;
    for (const Matrix& f : samples) {
      double lhs = 0.0, rhs = 0.0;
      for (int j = 0; j < nv && ok; ++j) {
        const Vec3& v = grid.node(j);
        const Vector fj = f.col(j);
        const Vector Lf = blocks[j] * fj;
        lhs += C0 * Lf.dot(fj) + (w2[j].cwiseProduct(Lf)).dot(fj);
        rhs += 0.5 * C0 * op.nu[j] * fj.squaredNorm() +
               spec.absorption(v) * (w2[j].cwiseProduct(fj)).dot(fj);
      }
      if (!(lhs >= rhs * (1.0 - 1e-12))) {
        ok = false;
        break;
      }
    }
    if (ok) break;
  }
  out.C0 = C0;
  out.c0 = std::numeric_limits<double>::infinity();
  for (int j = 0; j < nv; ++j) {
    const Vector m = Vector::Constant(nx, C0) + w2[j];
    const Matrix S0 = m.asDiagonal() * blocks[j];
    const Matrix S = 0.5 * (S0 + S0.transpose());
    const Matrix B = japanese_bracket(grid.node(j)) * Matrix(m.asDiagonal());
    Eigen::GeneralizedSelfAdjointEigenSolver<Matrix> ges(S, B);
    if (ges.info() != Eigen::Success)
      throw NumericalError("rayleigh_lower_bound: generalized eigensolver failed");
    const double lo = ges.eigenvalues()[0];
    if (lo < out.c0) {
      out.c0 = lo;
      out.worst_velocity = j;
      out.worst_vector = ges.eigenvectors().col(0);
    }
  }
  return out;
}

// ---------------------------------------------------------------------------

std::vector<ScalingRow> scaling_experiment(const ScalingConfig& cfg) {
  std::vector<ScalingRow> rows;
  for (double vm : cfg.v_max_list) {
    const auto t0 = std::chrono::steady_clock::now();
    const double steps = 2.0 * vm / cfg.dv;
    const int n = static_cast<int>(std::lround(steps)) + 1;
    if (std::abs(steps - std::lround(steps)) > 1e-9 || n % 2 == 0)
      throw std::invalid_argument("scaling_experiment: v_max must be a multiple of dv giving an odd node count");
    const VelocityGrid grid(n, vm);
    CollisionOperator op = cached_collision_operator(grid, cfg.kernel, cfg.cache_dir);
    ScalingRow row;
    row.v_max = vm;
    row.n_per_axis = n;
    row.gap_L = plain_gap(op, grid);
    if (!cfg.collision_only) {
      SpatialDomain torus{DomainMode::Torus3, cfg.n_cells, cfg.side, {}};
      SpatialDomain box{DomainMode::InflowBox3, cfg.n_cells, cfg.side, {}};
      const SpectralReport rt =
          rightmost_eigenvalues(assemble_full_operator(torus, grid, op), cfg.k, cfg.spectral);
      row.gap_torus = -rt.gap_abscissa;
      const SpectralReport rb =
          rightmost_eigenvalues(assemble_full_operator(box, grid, op), cfg.k, cfg.spectral);
      row.gap_box = -rb.gap_abscissa;
      row.c0_rayleigh = rayleigh_lower_bound(box, grid, op, cfg.weight, cfg.seed).c0;
    }
    row.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    rows.push_back(row);
  }
  return rows;
}

}  // namespace kgap
