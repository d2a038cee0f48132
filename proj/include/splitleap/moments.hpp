#pragma once

#include "splitleap/linalg.hpp"
#include "splitleap/network.hpp"
#include "splitleap/tau_leap.hpp"

namespace splitleap {

/// Mean vector and covariance matrix of the state.
struct MomentPair {
  Vector mu;
  Matrix sigma;

  static MomentPair deterministic(const Vector& x0);
};

/// Coefficients of the linear split-step recursion
/// Y^ = R1 Y + tau r2,  Y_{n+1} = R3 Y~ + tau r4.
struct SchemeMatrices {
  Matrix R1;
  Vector r2;
  Matrix R3;
  Vector r4;
};

/// Coefficients of the theta~ discretization of the exact moment equations.
struct ReferenceMatrices {
  Matrix P1;
  Vector p2;
  Matrix P3;
  Matrix P4;
  double tilde_theta = 1.0;
};

/// Right-hand side of the closed moment ODEs of a linear network:
/// mu' = nu C mu + nu d, Sigma' = nu C Sigma + Sigma (nu C)^T + nu diag(C mu + d) nu^T.
MomentPair moment_ode_rhs(const LinearizedPropensity& lin, const Matrix& nu, const MomentPair& m);

ReferenceMatrices reference_matrices(const LinearizedPropensity& lin, const Matrix& nu, double tau,
                                     double tilde_theta = 1.0);

/// mu_{n+1} = P1 mu_n + tau p2, and sigma_{n+1} from the Sylvester equation
/// P3 s + s P3^T = P4 sigma_n + sigma_n P4^T + tau nu diag(C mu_{n+1} + d) nu^T.
MomentPair reference_moment_step(const ReferenceMatrices& ref, const LinearizedPropensity& lin,
                                 const Matrix& nu, const MomentPair& m, double tau);

/// Throws SingularStage if a stage matrix cannot be inverted.
SchemeMatrices scheme_matrices(const LinearizedPropensity& lin, const Matrix& nu, double tau,
                               const SchemeParameters& params);

/// Exact mean/covariance propagation of the linear split-step scheme.
MomentPair scheme_moment_step(const SchemeMatrices& sm, const LinearizedPropensity& lin, const Matrix& nu,
                              const MomentPair& m, double tau);

/// Exact mean/covariance propagation of the linear theta tau-leap.
MomentPair theta_moment_step(const LinearizedPropensity& lin, const Matrix& nu, const MomentPair& m,
                             double tau, double theta);

/// Solves A X + X A^T = rhs by dense Kronecker vectorization. Throws
/// SingularSylvester when A (+) A is singular.
Matrix sylvester_solve(const Matrix& A, const Matrix& rhs);

/// nu diag(rates) nu^T.
Matrix noise_matrix(const Matrix& nu, const Vector& rates);

}  // namespace splitleap
