#include "xbcf/propensity.hpp"

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>

#include "xbcf/error.hpp"

namespace xbcf {
namespace {

constexpr int kMaxIterations = 50;
constexpr double kTolerance = 1e-8;
constexpr double kRidge = 1e-6;
constexpr double kClipLo = 0.001;
constexpr double kClipHi = 0.999;

double logistic(double eta) {
  if (eta >= 0.0) return 1.0 / (1.0 + std::exp(-eta));
  const double e = std::exp(eta);
  return e / (1.0 + e);
}

}  // namespace

PropensityFit estimate_propensity(const Matrix& X, std::span<const int> z) {
  const auto n = static_cast<Eigen::Index>(X.rows());
  const auto p = static_cast<Eigen::Index>(X.cols() + 1);
  if (static_cast<std::size_t>(n) != z.size()) {
    throw ValidationError("estimate_propensity: X and z lengths differ");
  }
  std::size_t treated = 0;
  for (int zi : z) {
    if (zi != 0 && zi != 1) throw ValidationError("estimate_propensity: z must be 0/1");
    treated += static_cast<std::size_t>(zi);
  }
  if (treated == 0 || treated == z.size()) {
    throw ValidationError("estimate_propensity: both treatment groups must be non-empty");
  }

  Eigen::MatrixXd design(n, p);
  Eigen::VectorXd target(n);
  for (Eigen::Index i = 0; i < n; ++i) {
    design(i, 0) = 1.0;
    for (Eigen::Index j = 1; j < p; ++j) design(i, j) = X(static_cast<std::size_t>(i), static_cast<std::size_t>(j - 1));
    target(i) = z[static_cast<std::size_t>(i)];
  }

  PropensityFit out;
  Eigen::VectorXd coef = Eigen::VectorXd::Zero(p);
  Eigen::VectorXd prob(n);
  Eigen::VectorXd weight(n);
  const Eigen::MatrixXd ridge = kRidge * Eigen::MatrixXd::Identity(p, p);
  for (int iter = 1; iter <= kMaxIterations; ++iter) {
    const Eigen::VectorXd eta = design * coef;
    for (Eigen::Index i = 0; i < n; ++i) {
      prob(i) = logistic(eta(i));
      weight(i) = prob(i) * (1.0 - prob(i));
    }
    const Eigen::MatrixXd hessian = design.transpose() * weight.asDiagonal() * design + ridge;
    const Eigen::VectorXd gradient = design.transpose() * (target - prob);
    const Eigen::VectorXd step = hessian.ldlt().solve(gradient);
    out.iterations = iter;
    if (!step.allFinite() || !(coef + step).allFinite()) break;
    coef += step;
    if (step.cwiseAbs().maxCoeff() < kTolerance) {
      out.converged = true;
      break;
    }
  }

  const Eigen::VectorXd eta = design * coef;
  out.pi.resize(static_cast<std::size_t>(n));
  for (Eigen::Index i = 0; i < n; ++i) {
    const double raw = logistic(eta(i));
    const double clipped = std::clamp(raw, kClipLo, kClipHi);
    if (clipped != raw) ++out.clipped;
    out.pi[static_cast<std::size_t>(i)] = clipped;
  }
  out.coefficients.assign(coef.data(), coef.data() + p);
  return out;
}

}  // namespace xbcf
