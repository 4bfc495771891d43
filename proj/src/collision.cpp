#include "kgap/collision.hpp"

#include "kgap/hash.hpp"

#include <json.hpp>

#include <cmath>
#include <cstdint>
#include <fstream>
#include <numbers>
#include <sstream>

namespace kgap {

void CollisionKernel::validate() const {
  if (!hard_control && !(gamma > -3.0 && gamma < 0.0))
    throw std::invalid_argument("kernel gamma must lie in (-3, 0) for soft potentials");
  if (hard_control && !(gamma > -3.0 && gamma <= 1.0))
    throw std::invalid_argument("control kernel gamma must lie in (-3, 1]");
  if (!(b_coeff > 0.0)) throw std::invalid_argument("kernel b_coeff must be positive");
  if (n_angle < 1) throw std::invalid_argument("kernel n_angle must be >= 1");
}

double CollisionKernel::epsilon(const VelocityGrid& grid) const {
  return epsilon_reg < 0.0 ? 0.5 * grid.dv() : epsilon_reg;
}

double CollisionKernel::speed_factor(double u2, const VelocityGrid& grid) const {
  const double e = epsilon(grid);
  return std::pow(u2 + e * e, 0.5 * gamma);
}

std::string CollisionKernel::describe() const {
  std::ostringstream s;
  s << std::hexfloat << "gamma=" << gamma << ";b=" << b_coeff << ";n_angle=" << n_angle
    << ";eps=" << epsilon_reg << ";control=" << hard_control;
  return s.str();
}

void gauss_legendre(int n, double lo, double hi, std::vector<double>& x, std::vector<double>& w) {
  Matrix J = Matrix::Zero(n, n);
  for (int k = 1; k < n; ++k) {
    const double beta = k / std::sqrt(4.0 * k * k - 1.0);
    J(k, k - 1) = beta;
    J(k - 1, k) = beta;
  }
  Eigen::SelfAdjointEigenSolver<Matrix> es(J);
  x.resize(n);
  w.resize(n);
  for (int k = 0; k < n; ++k) {
    const double v0 = es.eigenvectors()(0, k);
    x[k] = lo + 0.5 * (hi - lo) * (es.eigenvalues()[k] + 1.0);
    w[k] = (hi - lo) * v0 * v0;
  }
}

AngularRule make_angular_rule(const CollisionKernel& kernel) {
  AngularRule rule;
  std::vector<double> c, a;
  gauss_legendre(kernel.n_angle, 0.0, 1.0, c, a);
  const int n_phi = kernel.n_angle;
  const double dphi = 2.0 * std::numbers::pi / n_phi;
  for (int k = 0; k < kernel.n_angle; ++k) {
    rule.cos_theta.push_back(c[k]);
    rule.sin_theta.push_back(std::sqrt(std::max(0.0, 1.0 - c[k] * c[k])));
  }
  for (int l = 0; l < n_phi; ++l) {
    rule.cos_phi.push_back(std::cos(l * dphi));
    rule.sin_phi.push_back(std::sin(l * dphi));
  }
  for (int k = 0; k < kernel.n_angle; ++k)
    for (int l = 0; l < n_phi; ++l) {
      const double wgt = 2.0 * a[k] * kernel.b_coeff * c[k] * dphi;
      rule.weight.push_back(wgt);
      rule.total += wgt;
    }
  return rule;
}

namespace {

void orthonormal_frame(const Vec3& e3, Vec3& e1, Vec3& e2) {
  Vec3 t = Vec3::UnitX();
  if (std::abs(e3[0]) > std::abs(e3[1])) t = Vec3::UnitY();
  if (std::abs(e3[2]) < std::min(std::abs(e3[0]), std::abs(e3[1]))) t = Vec3::UnitZ();
  e1 = (t - t.dot(e3) * e3).normalized();
  e2 = e3.cross(e1);
}

// Calls visit(js, weight, v', v'_*) for every (v_*, omega) quadrature pair at
// node i; returns nothing. The weight contains w_*, the speed factor and the
// angular weight. loss(js, weight_sum) receives the omega-summed weight.
template <class Visit, class Loss>
void for_each_collision(const VelocityGrid& grid, const CollisionKernel& kernel,
                        const AngularRule& rule, int i, Visit&& visit, Loss&& loss) {
  const Vec3& v = grid.node(i);
  const int N = grid.size();
  const double wq = grid.cell_volume();
  for (int js = 0; js < N; ++js) {
    const Vec3& vs = grid.node(js);
    const Vec3 u = v - vs;
    const double r = u.norm();
    const double base = wq * kernel.speed_factor(r * r, grid);
    loss(js, base * rule.total);
    if (r == 0.0) {
      visit(js, base * rule.total, v, vs);
      continue;
    }
    const Vec3 e3 = u / r;
    Vec3 e1, e2;
    orthonormal_frame(e3, e1, e2);
    int kl = 0;
    for (int k = 0; k < rule.n_theta(); ++k) {
      const double c = rule.cos_theta[k];
      const double s = rule.sin_theta[k];
      for (int l = 0; l < rule.n_phi(); ++l, ++kl) {
        const Vec3 omega = c * e3 + s * (rule.cos_phi[l] * e1 + rule.sin_phi[l] * e2);
        const Vec3 shift = (r * c) * omega;
        visit(js, base * rule.weight[kl], Vec3(v - shift), Vec3(vs + shift));
      }
    }
  }
}

void check_dense_cap(int N, std::size_t max_bytes, const char* what) {
  const double bytes = static_cast<double>(N) * N * sizeof(double);
  if (bytes > static_cast<double>(max_bytes)) {
    std::ostringstream msg;
    msg << what << ": a dense " << N << "x" << N << " matrix needs " << bytes / (1 << 20)
        << " MiB, above the configured cap of " << max_bytes / (1 << 20)
        << " MiB; reduce the velocity grid";
    throw std::length_error(msg.str());
  }
}

}  // namespace

Vector collision_frequency(const VelocityGrid& grid, const CollisionKernel& kernel) {
  kernel.validate();
  const AngularRule rule = make_angular_rule(kernel);
  const int N = grid.size();
  Vector nu(N);
  const Vector& mh = grid.mu_half();
#pragma omp parallel for schedule(static)
  for (int i = 0; i < N; ++i) {
    double acc = 0.0;
    const Vec3& v = grid.node(i);
    for (int js = 0; js < N; ++js) {
      const double u2 = (v - grid.node(js)).squaredNorm();
      acc += kernel.speed_factor(u2, grid) * mh[js] * mh[js];
    }
    nu[i] = acc * grid.cell_volume() * rule.total;
  }
  return nu;
}

Matrix assemble_K(const VelocityGrid& grid, const CollisionKernel& kernel, std::size_t max_bytes) {
  kernel.validate();
  const int N = grid.size();
  check_dense_cap(N, max_bytes, "assemble_K");
  const AngularRule rule = make_angular_rule(kernel);
  const Vector& mh = grid.mu_half();
  Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor> K =
      Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>::Zero(N, N);
#pragma omp parallel for schedule(dynamic, 4)
  for (int i = 0; i < N; ++i) {
    double* row = K.row(i).data();
    std::array<int, 8> idx;
    std::array<double, 8> wt;
    for_each_collision(
        grid, kernel, rule, i,
        [&](int js, double weight, const Vec3& vp, const Vec3& vps) {
          const double w0 = weight * mh[js];
          const double mp = maxwellian_half(vp);
          const double mps = maxwellian_half(vps);
          int n = grid.stencil(vp, idx, wt);
          for (int e = 0; e < n; ++e) row[idx[e]] += w0 * mps * wt[e];
          n = grid.stencil(vps, idx, wt);
          for (int e = 0; e < n; ++e) row[idx[e]] += w0 * mp * wt[e];
        },
        [&](int js, double wsum) { row[js] -= wsum * mh[js] * mh[i]; });
  }
  return Matrix(K);
}

CollisionOperator assemble_L(const Vector& nu, const Matrix& K, const VelocityGrid& grid) {
  const int N = grid.size();
  if (nu.size() != N || K.rows() != N || K.cols() != N)
    throw std::invalid_argument("assemble_L: shape mismatch");
  CollisionOperator op;
  op.nu = nu;
  op.K = K;
  Matrix Ls = K;
  Ls.diagonal() -= nu;
  Ls = 0.5 * (Ls + Ls.transpose()).eval();
  // Q Ls Q with Q = I - U V^T, P = U V^T of rank five.
  const auto& U = grid.invariants_basis();
  const Matrix V =
      (grid.solve_gram(U.transpose() * grid.quad_weights().asDiagonal())).transpose();
  Matrix X = Ls - U * (V.transpose() * Ls);
  X -= (X * V) * U.transpose();
  // P is symmetric as a matrix (equal weights), so X is symmetric up to round-off.
  op.L = 0.5 * (X + X.transpose());
  return op;
}

CollisionOperator build_collision_operator(const VelocityGrid& grid,
                                           const CollisionKernel& kernel) {
  return assemble_L(collision_frequency(grid, kernel), assemble_K(grid, kernel), grid);
}

Matrix complement_basis(const VelocityGrid& grid) {
  const int N = grid.size();
  Eigen::HouseholderQR<Matrix> qr(Matrix(grid.invariants_basis()));
  Matrix Qfull = qr.householderQ() * Matrix::Identity(N, N);
  return Qfull.rightCols(N - 5);
}

double coercivity_constant(CollisionOperator& op, const VelocityGrid& grid) {
  const Matrix Z = complement_basis(grid);
  const Matrix A = Z.transpose() * (-op.L) * Z;
  const Matrix B = Z.transpose() * op.nu.asDiagonal() * Z;
  Eigen::GeneralizedSelfAdjointEigenSolver<Matrix> ges(0.5 * (A + A.transpose()),
                                                       0.5 * (B + B.transpose()),
                                                       Eigen::EigenvaluesOnly);
  if (ges.info() != Eigen::Success)
    throw NumericalError("coercivity_constant: generalized eigensolver failed");
  op.c1_estimate = ges.eigenvalues().minCoeff();
  return op.c1_estimate;
}

double plain_gap(const CollisionOperator& op, const VelocityGrid& grid) {
  const Matrix Z = complement_basis(grid);
  const Matrix A = Z.transpose() * (-op.L) * Z;
  Eigen::SelfAdjointEigenSolver<Matrix> es(0.5 * (A + A.transpose()), Eigen::EigenvaluesOnly);
  if (es.info() != Eigen::Success) throw NumericalError("plain_gap: eigensolver failed");
  return es.eigenvalues().minCoeff();
}

double k_boundedness_constant(const CollisionOperator& op) {
  const Vector s = op.nu.cwiseSqrt().cwiseInverse();
  const Matrix M = s.asDiagonal() * op.K * s.asDiagonal();
  Eigen::JacobiSVD<Matrix> svd(M);
  return svd.singularValues()[0];
}

Vector gamma_bilinear(const VelocityGrid& grid, const CollisionKernel& kernel, const Vector& f,
                      const Vector& g) {
  kernel.validate();
  const int N = grid.size();
  if (f.size() != N || g.size() != N) throw std::invalid_argument("gamma_bilinear: length");
  const AngularRule rule = make_angular_rule(kernel);
  const Vector& mh = grid.mu_half();
  Vector out(N);
#pragma omp parallel for schedule(dynamic, 4)
  for (int i = 0; i < N; ++i) {
    std::array<int, 8> idx;
    std::array<double, 8> wt;
    double acc = 0.0;
    for_each_collision(
        grid, kernel, rule, i,
        [&](int js, double weight, const Vec3& vp, const Vec3& vps) {
          int n = grid.stencil(vps, idx, wt);
          if (n == 0) return;
          double fs = 0.0;
          for (int e = 0; e < n; ++e) fs += wt[e] * f[idx[e]];
          n = grid.stencil(vp, idx, wt);
          double gp = 0.0;
          for (int e = 0; e < n; ++e) gp += wt[e] * g[idx[e]];
          acc += weight * mh[js] * fs * gp;
        },
        [&](int js, double wsum) { acc -= wsum * mh[js] * f[js] * g[i]; });
    out[i] = acc;
  }
  return out;
}

GammaTensor::GammaTensor(const VelocityGrid& grid, const CollisionKernel& kernel,
                         std::size_t max_bytes)
    : n_(grid.size()) {
  kernel.validate();
  const double bytes = static_cast<double>(n_) * n_ * n_ * sizeof(double);
  if (bytes > static_cast<double>(max_bytes))
    throw std::length_error("GammaTensor: tensor exceeds the memory cap; reduce the grid");
  const AngularRule rule = make_angular_rule(kernel);
  const Vector& mh = grid.mu_half();
  t_ = Matrix::Zero(static_cast<Eigen::Index>(n_) * n_, n_);
#pragma omp parallel for schedule(dynamic, 1)
  for (int i = 0; i < n_; ++i) {
    // Block for row i: (a, b) -> t_(i*n + a, b).
    auto block = t_.middleRows(static_cast<Eigen::Index>(i) * n_, n_);
    std::array<int, 8> ia, ib;
    std::array<double, 8> wa, wb;
    for_each_collision(
        grid, kernel, rule, i,
        [&](int js, double weight, const Vec3& vp, const Vec3& vps) {
          const int na = grid.stencil(vps, ia, wa);
          if (na == 0) return;
          const int nb = grid.stencil(vp, ib, wb);
          const double w0 = weight * mh[js];
          for (int x = 0; x < na; ++x)
            for (int y = 0; y < nb; ++y) block(ia[x], ib[y]) += w0 * wa[x] * wb[y];
        },
        [&](int js, double wsum) { block(js, i) -= wsum * mh[js]; });
  }
}

Vector GammaTensor::apply(const Vector& f, const Vector& g) const {
  return apply_columns(f, g).col(0);
}

Matrix GammaTensor::apply_columns(const Matrix& F, const Matrix& G) const {
  if (F.rows() != n_ || G.rows() != n_ || F.cols() != G.cols())
    throw std::invalid_argument("GammaTensor: shape mismatch");
  const Eigen::Index m = F.cols();
  // TG(i*n + a, c) = sum_b T(i, a, b) G(b, c)
  const Matrix TG = t_ * G;
  Matrix out(n_, m);
  for (int i = 0; i < n_; ++i) {
    const auto blk = TG.middleRows(static_cast<Eigen::Index>(i) * n_, n_);
    out.row(i) = (blk.array() * F.array()).colwise().sum();
  }
  return out;
}

std::string operator_cache_key(const VelocityGrid& grid, const CollisionKernel& kernel) {
  std::ostringstream s;
  s << std::hexfloat << "collision-operator-v1;n=" << grid.n_per_axis() << ";vmax=" << grid.v_max()
    << ";" << kernel.describe();
  return sha256_hex(s.str());
}

namespace {

constexpr char kMagic[8] = {'K', 'G', 'A', 'P', 'O', 'P', '0', '1'};

nlohmann::json cache_header(const VelocityGrid& grid, const CollisionKernel& kernel) {
  return {{"key", operator_cache_key(grid, kernel)},
          {"n_per_axis", grid.n_per_axis()},
          {"v_max", grid.v_max()},
          {"gamma", kernel.gamma},
          {"b_coeff", kernel.b_coeff},
          {"n_angle", kernel.n_angle},
          {"epsilon_reg", kernel.epsilon(grid)},
          {"layout", "nu[N], K[N*N] row-major, L[N*N] row-major, c1, float64 little-endian"}};
}

void write_row_major(std::ofstream& out, const Matrix& M) {
  const Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor> R = M;
  out.write(reinterpret_cast<const char*>(R.data()), sizeof(double) * R.size());
}

bool read_row_major(std::ifstream& in, Matrix& M, int N) {
  Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor> R(N, N);
  in.read(reinterpret_cast<char*>(R.data()), sizeof(double) * R.size());
  if (!in) return false;
  M = R;
  return true;
}

}  // namespace

void save_operator_cache(const std::filesystem::path& file, const VelocityGrid& grid,
                         const CollisionKernel& kernel, const CollisionOperator& op) {
  if (file.has_parent_path()) std::filesystem::create_directories(file.parent_path());
  std::ofstream out(file, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write cache file " + file.string());
  const std::string header = cache_header(grid, kernel).dump();
  const std::uint64_t hlen = header.size();
  const std::uint64_t N = grid.size();
  out.write(kMagic, sizeof(kMagic));
  out.write(reinterpret_cast<const char*>(&hlen), sizeof(hlen));
  out.write(header.data(), static_cast<std::streamsize>(hlen));
  out.write(reinterpret_cast<const char*>(&N), sizeof(N));
  out.write(reinterpret_cast<const char*>(op.nu.data()), sizeof(double) * N);
  write_row_major(out, op.K);
  write_row_major(out, op.L);
  out.write(reinterpret_cast<const char*>(&op.c1_estimate), sizeof(double));
}

bool load_operator_cache(const std::filesystem::path& file, const VelocityGrid& grid,
                         const CollisionKernel& kernel, CollisionOperator& op) {
  std::ifstream in(file, std::ios::binary);
  if (!in) return false;
  char magic[8];
  in.read(magic, sizeof(magic));
  if (!in || !std::equal(magic, magic + 8, kMagic)) return false;
  std::uint64_t hlen = 0, N = 0;
  in.read(reinterpret_cast<char*>(&hlen), sizeof(hlen));
  if (!in || hlen > (1u << 20)) return false;
  std::string header(hlen, '\0');
  in.read(header.data(), static_cast<std::streamsize>(hlen));
  if (!in || nlohmann::json::parse(header, nullptr, false) != cache_header(grid, kernel))
    return false;
  in.read(reinterpret_cast<char*>(&N), sizeof(N));
  if (!in || N != static_cast<std::uint64_t>(grid.size())) return false;
  CollisionOperator tmp;
  tmp.nu.resize(static_cast<Eigen::Index>(N));
  in.read(reinterpret_cast<char*>(tmp.nu.data()), sizeof(double) * N);
  if (!in || !read_row_major(in, tmp.K, static_cast<int>(N)) ||
      !read_row_major(in, tmp.L, static_cast<int>(N)))
    return false;
  in.read(reinterpret_cast<char*>(&tmp.c1_estimate), sizeof(double));
  if (!in) return false;
  op = std::move(tmp);
  return true;
}

CollisionOperator cached_collision_operator(const VelocityGrid& grid,
                                            const CollisionKernel& kernel,
                                            const std::filesystem::path& cache_dir) {
  if (cache_dir.empty()) return build_collision_operator(grid, kernel);
  const auto file = cache_dir / ("collision_" + operator_cache_key(grid, kernel).substr(0, 16) + ".bin");
  CollisionOperator op;
  if (load_operator_cache(file, grid, kernel, op)) return op;
  op = build_collision_operator(grid, kernel);
  save_operator_cache(file, grid, kernel, op);
  return op;
}

}  // namespace kgap
