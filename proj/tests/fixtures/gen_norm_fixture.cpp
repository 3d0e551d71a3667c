// Writes rotation_norm_dense.json: the sup of the C1 integrand of rotations
// about z over 10^6 Fibonacci-lattice points. The integrand is computed here
// from scratch (chord displacement plus the largest singular value of
// Df - I on a tangent frame) so the fixture does not depend on the library.
//
//   gen_norm_fixture > tests/fixtures/rotation_norm_dense.json

#include <Eigen/Dense>

#include <cmath>
#include <cstdio>
#include <numbers>

int main() {
  constexpr int kSamples = 1000000;
  const double thetas[] = {0.002, 0.004, 0.008};
  const double golden = std::numbers::pi * (3.0 - std::sqrt(5.0));
  std::printf("{\n  \"samples\": %d,\n  \"cases\": [\n", kSamples);
  for (int c = 0; c < 3; ++c) {
    const double theta = thetas[c];
    const Eigen::Matrix3d R = Eigen::AngleAxisd(theta, Eigen::Vector3d::UnitZ()).toRotationMatrix();
    const Eigen::Matrix3d D = R - Eigen::Matrix3d::Identity();
    double best = 0.0;
    for (int i = 0; i < kSamples; ++i) {
      const double z = 1.0 - (2.0 * i + 1.0) / kSamples;
      const double r = std::sqrt(1.0 - z * z);
      const Eigen::Vector3d x(r * std::cos(golden * i), r * std::sin(golden * i), z);
      Eigen::Vector3d e1 = x.cross(std::abs(x.x()) < 0.9 ? Eigen::Vector3d::UnitX() : Eigen::Vector3d::UnitY());
      e1.normalize();
      const Eigen::Vector3d e2 = x.cross(e1);
      Eigen::Matrix<double, 3, 2> M;
      M.col(0) = D * e1;
      M.col(1) = D * e2;
      const double sigma = Eigen::JacobiSVD<Eigen::Matrix<double, 3, 2>>(M).singularValues()(0);
      best = std::max(best, (D * x).norm() + sigma);
    }
    std::printf("    {\"theta\": %.17g, \"dense_sup\": %.17g}%s\n", theta, best, c < 2 ? "," : "");
  }
  std::printf("  ]\n}\n");
}
