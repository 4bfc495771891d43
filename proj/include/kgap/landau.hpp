#pragma once

#include "kgap/velocity_grid.hpp"

#include <utility>
#include <vector>

namespace kgap {

using Mat3 = Eigen::Matrix3d;

// sigma^{ij}(v) = int phi^{ij}(v - v') mu(v') dv' with
// phi(u) = (I - u u^T / (|u|^2 + eps^2)) (|u|^2 + eps^2)^{(gamma_L + 2) / 2}.
struct LandauCoefficients {
  double gamma_L = -3.0;
  double epsilon = 0.0;
  std::vector<Vec3> velocities;
  std::vector<Mat3> sigma_ij;
  std::vector<Vec3> sigma_i;  // sigma^{ij} v_j / 2
};

// Radial eigenvalues (lambda1 along v, lambda2 across) at speed r.
std::pair<double, double> landau_radial(double r, double gamma_L, double epsilon);

Mat3 sigma_at(const Vec3& v, double gamma_L, double epsilon);

// epsilon < 0 selects dv / 2.
LandauCoefficients assemble_sigma(const VelocityGrid& grid, double gamma_L,
                                  double epsilon = -1.0);

// (lambda1, lambda2); at v = 0 both equal the triple eigenvalue.
std::pair<double, double> landau_eigs(const LandauCoefficients& coeffs, int node);

// Centred differences inside, one-sided on the faces.
std::array<Vector, 3> velocity_gradient(const VelocityGrid& grid, const Vector& f);

double landau_dissipation_norm(const VelocityGrid& grid, const LandauCoefficients& coeffs,
                               const Vector& f);

// |<v>^{g/2} P_v grad f|^2 + |<v>^{(g+2)/2} (I - P_v) grad f|^2 + |<v>^{(g+2)/2} f|^2
double landau_surrogate_norm(const VelocityGrid& grid, double gamma_L, const Vector& f);

struct LandauProfileRow {
  double speed;
  double lambda1;
  double lambda2;
};

std::vector<LandauProfileRow> landau_profile(const LandauCoefficients& coeffs);

}  // namespace kgap
