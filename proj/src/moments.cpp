#include "splitleap/moments.hpp"

#include "splitleap/errors.hpp"

namespace splitleap {

namespace {

Matrix symmetrized(const Matrix& s) { return 0.5 * (s + s.transpose()); }

Matrix stage_inverse(const Matrix& lhs, const char* which) {
  Eigen::FullPivLU<Matrix> lu(lhs);
  if (!lu.isInvertible()) throw SingularStage(std::string("scheme_matrices: singular ") + which + " stage matrix");
  return lu.inverse();
}

}  // namespace

MomentPair MomentPair::deterministic(const Vector& x0) {
  return {x0, Matrix::Zero(x0.size(), x0.size())};
}

Matrix noise_matrix(const Matrix& nu, const Vector& rates) {
  return nu * rates.asDiagonal() * nu.transpose();
}

MomentPair moment_ode_rhs(const LinearizedPropensity& lin, const Matrix& nu, const MomentPair& m) {
  const Matrix A = nu * lin.C;
  MomentPair d;
  d.mu = A * m.mu + nu * lin.d;
  d.sigma = A * m.sigma + m.sigma * A.transpose() + noise_matrix(nu, lin.C * m.mu + lin.d);
  return d;
}

ReferenceMatrices reference_matrices(const LinearizedPropensity& lin, const Matrix& nu, double tau,
                                     double tilde_theta) {
  const Matrix A = nu * lin.C;
  const Eigen::Index n = A.rows();
  const Matrix I = Matrix::Identity(n, n);
  ReferenceMatrices ref;
  ref.tilde_theta = tilde_theta;
  Eigen::PartialPivLU<Matrix> lu(I - tilde_theta * tau * A);
  ref.P1 = lu.solve(I + (1.0 - tilde_theta) * tau * A);
  ref.p2 = lu.solve(nu * lin.d);
  ref.P3 = 0.5 * I - tilde_theta * tau * A;
  ref.P4 = 0.5 * I + (1.0 - tilde_theta) * tau * A;
  return ref;
}

MomentPair reference_moment_step(const ReferenceMatrices& ref, const LinearizedPropensity& lin,
                                 const Matrix& nu, const MomentPair& m, double tau) {
  MomentPair next;
  next.mu = ref.P1 * m.mu + tau * ref.p2;
  const Matrix rhs = ref.P4 * m.sigma + m.sigma * ref.P4.transpose() +
                     tau * noise_matrix(nu, lin.C * next.mu + lin.d);
  next.sigma = sylvester_solve(ref.P3, symmetrized(rhs));
  return next;
}

SchemeMatrices scheme_matrices(const LinearizedPropensity& lin, const Matrix& nu, double tau,
                               const SchemeParameters& params) {
  const Eigen::Index n = nu.rows();
  const Matrix I = Matrix::Identity(n, n);
  const Eigen::ArrayXd one_minus_theta = 1.0 - params.theta.array();
  const Eigen::ArrayXd& theta = params.theta.array();

  const Vector w1_impl = (params.eta1.array() * one_minus_theta).matrix();
  const Vector w1_expl = ((1.0 - params.eta1.array()) * one_minus_theta).matrix();
  const Vector w3_impl = (params.eta2.array() * theta).matrix();
  const Vector w3_expl = ((1.0 - params.eta2.array()) * theta).matrix();

  SchemeMatrices sm;
  const Matrix inv1 = stage_inverse(I - tau * nu * w1_impl.asDiagonal() * lin.C, "first");
  sm.R1 = inv1 * (I + tau * nu * w1_expl.asDiagonal() * lin.C);
  sm.r2 = inv1 * (nu * (one_minus_theta * lin.d.array()).matrix());
  const Matrix inv3 = stage_inverse(I - tau * nu * w3_impl.asDiagonal() * lin.C, "third");
  sm.R3 = inv3 * (I + tau * nu * w3_expl.asDiagonal() * lin.C);
  sm.r4 = inv3 * (nu * (theta * lin.d.array()).matrix());
  return sm;
}

MomentPair scheme_moment_step(const SchemeMatrices& sm, const LinearizedPropensity& lin, const Matrix& nu,
                              const MomentPair& m, double tau) {
  const Vector mean_hat = sm.R1 * m.mu + tau * sm.r2;
  const Matrix cov_hat = sm.R1 * m.sigma * sm.R1.transpose();
  const Matrix cov_tilde = cov_hat + tau * noise_matrix(nu, lin.C * mean_hat + lin.d);
  MomentPair next;
  next.mu = sm.R3 * mean_hat + tau * sm.r4;
  next.sigma = symmetrized(sm.R3 * cov_tilde * sm.R3.transpose());
  return next;
}

MomentPair theta_moment_step(const LinearizedPropensity& lin, const Matrix& nu, const MomentPair& m,
                             double tau, double theta) {
  // (I - theta tau nu C) Y+ = Y + (1-theta) tau nu (C Y + d) + theta tau nu d + nu Pbar(a(Y) tau)
  const Eigen::Index n = nu.rows();
  const Matrix I = Matrix::Identity(n, n);
  const Matrix A = nu * lin.C;
  // Solves rather than an explicit inverse: the fast mode of the result is
  // small next to the conserved one and would drown in the inverse's rounding.
  Eigen::PartialPivLU<Matrix> lu(I - theta * tau * A);
  const Matrix explicit_map = I + (1.0 - theta) * tau * A;
  MomentPair next;
  next.mu = lu.solve(explicit_map * m.mu + tau * nu * lin.d);
  const Matrix inner = explicit_map * m.sigma * explicit_map.transpose() +
                       tau * noise_matrix(nu, lin.C * m.mu + lin.d);
  const Matrix half = lu.solve(inner);
  next.sigma = symmetrized(lu.solve(half.transpose()));
  return next;
}

Matrix sylvester_solve(const Matrix& A, const Matrix& rhs) {
  const Eigen::Index n = A.rows();
  const Matrix I = Matrix::Identity(n, n);
  Matrix K(n * n, n * n);
  // vec(A X) = (I kron A) vec(X); vec(X A^T) = (A kron I) vec(X).
  for (Eigen::Index i = 0; i < n; ++i)
    for (Eigen::Index j = 0; j < n; ++j)
      K.block(i * n, j * n, n, n) = I(i, j) * A + A(i, j) * I;
  Eigen::FullPivLU<Matrix> lu(K);
  if (!lu.isInvertible()) throw SingularSylvester("sylvester_solve: Kronecker sum is singular");
  const Vector x = lu.solve(rhs.reshaped());
  Matrix X = x.reshaped(n, n);
  return symmetrized(X);
}

}  // namespace splitleap
