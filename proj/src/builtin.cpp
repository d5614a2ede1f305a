#include "avgmpc/model.hpp"

namespace avgmpc {

SystemModel scalar_example_model() {
  SystemModel::Functions fns;
  fns.dynamics = [](const Vector& x, const Vector& u) { return Vector::Constant(1, x[0] * u[0]); };
  fns.stage_cost = [](const Vector& x, const Vector& u) {
    return (x[0] - 3.0) * (x[0] - 3.0) + u[0] * u[0];
  };
  fns.output = [](const Vector& x, const Vector& u) {
    return Vector::Constant(1, 2.0 * x[0] + u[0] - 5.0);
  };
  fns.linearize = [](const Vector& x, const Vector& u) {
    StageLinearization s;
    s.f = Vector::Constant(1, x[0] * u[0]);
    s.f_x = Matrix::Constant(1, 1, u[0]);
    s.f_u = Matrix::Constant(1, 1, x[0]);
    s.ell = (x[0] - 3.0) * (x[0] - 3.0) + u[0] * u[0];
    s.ell_x = Vector::Constant(1, 2.0 * (x[0] - 3.0));
    s.ell_u = Vector::Constant(1, 2.0 * u[0]);
    s.h = Vector::Constant(1, 2.0 * x[0] + u[0] - 5.0);
    s.h_x = Matrix::Constant(1, 1, 2.0);
    s.h_u = Matrix::Constant(1, 1, 1.0);
    return s;
  };
  const Box z1(Vector::Constant(1, -10.0), Vector::Constant(1, 10.0));
  return SystemModel(1, 1, 1, std::move(fns), z1, z1);
}

DissipativityCertificate scalar_example_certificate() {
  StorageFunction lambda(
      1, [](const Vector& x) { return 1.5 * (x[0] - 2.0); },
      [](const Vector&) { return Vector::Constant(1, 1.5); });
  return DissipativityCertificate(std::move(lambda), Vector::Constant(1, 1.0), 0.25, 2.0, 3.0);
}

}  // namespace avgmpc
