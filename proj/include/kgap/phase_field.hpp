#pragma once

#include "kgap/domain.hpp"

namespace kgap {

enum class Representation { Plain, Weighted };

// f(x_c, v_j) stored as data(j, c): one column of velocities per spatial cell.
struct PhaseField {
  Matrix data;
  Representation rep = Representation::Plain;

  PhaseField() = default;
  PhaseField(const VelocityGrid& grid, const SpatialDomain& domain,
             Representation r = Representation::Plain)
      : data(Matrix::Zero(grid.size(), domain.size())), rep(r) {}

  static PhaseField from_function(const VelocityGrid& grid, const SpatialDomain& domain,
                                  const InitialFn& f, Representation r = Representation::Plain);

  int n_velocities() const { return static_cast<int>(data.rows()); }
  int n_cells() const { return static_cast<int>(data.cols()); }
  double max_abs() const { return data.cwiseAbs().maxCoeff(); }
  bool all_finite() const { return data.allFinite(); }
};

// Per-cell diagonal w(v) W(x_c, v), laid out like PhaseField::data.
Matrix weight_table(const VelocityGrid& grid, const SpatialDomain& domain, const WeightSpec& spec);

PhaseField to_weighted(const PhaseField& f, const VelocityGrid& grid, const SpatialDomain& domain,
                       const WeightSpec& spec);
PhaseField to_plain(const PhaseField& h, const VelocityGrid& grid, const SpatialDomain& domain,
                    const WeightSpec& spec);

// Semi-Lagrangian transport over dt starting at t_now. The absorption is
// q|v|^2/<v> for weighted fields (zero for plain ones) plus nu when given.
// Boundary values are (wW g) for weighted fields and g for plain ones.
PhaseField advect_step(const SpatialDomain& domain, const WeightSpec& spec,
                       const VelocityGrid& grid, const PhaseField& field, double dt,
                       double t_now, const Vector* nu = nullptr);

// Discrete L2 norm squared: sum f^2 * dx^3 * dv^3.
double l2_norm_sq(const PhaseField& f, const VelocityGrid& grid, const SpatialDomain& domain);

}  // namespace kgap
