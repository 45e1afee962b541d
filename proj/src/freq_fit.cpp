#include "dosebma/freq_fit.hpp"

#include <Eigen/Cholesky>
#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

namespace dosebma {

namespace {

constexpr double kGradTol = 1e-8;
constexpr double kStepTol = 1e-10;
constexpr double kSeparationBeta = 1e6;
constexpr int kMaxIter = 500;

// chi-square(1) quantiles / 2 for the common levels; fall back to a
// Newton inversion for anything else.
double half_chisq1_quantile(double level) {
  if (std::abs(level - 0.95) < 1e-12) return 1.9207294103470628;
  if (std::abs(level - 0.90) < 1e-12) return 1.3527717270285024;
  if (std::abs(level - 0.99) < 1e-12) return 3.3174463296867883;
  // chi2(1) cdf = erf(sqrt(x/2)); invert by bisection.
  double lo = 0.0, hi = 50.0;
  for (int i = 0; i < 200; ++i) {
    const double mid = 0.5 * (lo + hi);
    if (std::erf(std::sqrt(mid / 2.0)) < level)
      lo = mid;
    else
      hi = mid;
  }
  return 0.5 * 0.5 * (lo + hi);
}

struct Objective {
  const LikelihoodData& data;

  double value(const Eigen::VectorXd& theta) const {
    RiskParams p = unpack(theta);
    return data.log_likelihood(p);
  }
  Eigen::VectorXd gradient(const Eigen::VectorXd& theta) const {
    RiskParams p = unpack(theta);
    Eigen::VectorXd g(theta.size());
    std::vector<double> buf(theta.size());
    data.gradient(p, buf);
    for (Eigen::Index i = 0; i < g.size(); ++i) g[i] = buf[i];
    return g;
  }
  Eigen::MatrixXd hessian(const Eigen::VectorXd& theta) const {
    RiskParams p = unpack(theta);
    const auto m = theta.size();
    std::vector<double> buf(m * m);
    data.hessian(p, buf);
    Eigen::MatrixXd h(m, m);
    for (Eigen::Index a = 0; a < m; ++a)
      for (Eigen::Index b = 0; b < m; ++b) h(a, b) = buf[a * m + b];
    return h;
  }
  RiskParams unpack(const Eigen::VectorXd& theta) const {
    RiskParams p;
    p.alpha.assign(theta.data(), theta.data() + data.j);
    p.beta = theta[static_cast<Eigen::Index>(data.j)];
    return p;
  }
};

// Projected gradient for maximization with beta >= 0: the beta component is
// zeroed at the boundary when it points outward.
Eigen::VectorXd projected_gradient(const Eigen::VectorXd& theta,
                                   const Eigen::VectorXd& g) {
  Eigen::VectorXd pg = g;
  const Eigen::Index b = theta.size() - 1;
  if (theta[b] <= 0.0 && g[b] < 0.0) pg[b] = 0.0;
  return pg;
}

// Maximize the log-likelihood over alpha with beta fixed (concave): damped
// Newton. Returns the profile value; alpha is updated in place.
double maximize_alpha(const LikelihoodData& data, std::vector<double>& alpha,
                      double beta) {
  const size_t j = data.j;
  RiskParams p{alpha, beta};
  std::vector<double> gbuf(j + 1), hbuf((j + 1) * (j + 1));
  double f = data.log_likelihood(p);
  for (int iter = 0; iter < 200; ++iter) {
    data.gradient(p, gbuf);
    Eigen::VectorXd g(j);
    for (size_t c = 0; c < j; ++c) g[static_cast<Eigen::Index>(c)] = gbuf[c];
    if (g.lpNorm<Eigen::Infinity>() < 1e-10) break;
    data.hessian(p, hbuf);
    Eigen::MatrixXd h(j, j);
    for (size_t a = 0; a < j; ++a)
      for (size_t b = 0; b < j; ++b)
        h(static_cast<Eigen::Index>(a), static_cast<Eigen::Index>(b)) =
            hbuf[a * (j + 1) + b];
    Eigen::MatrixXd neg_h = -h;
    Eigen::LLT<Eigen::MatrixXd> llt(neg_h);
    Eigen::VectorXd step;
    if (llt.info() == Eigen::Success) {
      step = llt.solve(g);
    } else {
      // Ridge fallback for ill-conditioned designs.
      neg_h.diagonal().array() += 1e-8 + 1e-8 * neg_h.diagonal().maxCoeff();
      step = neg_h.ldlt().solve(g);
    }
    double t = 1.0;
    bool accepted = false;
    for (int ls = 0; ls < 60; ++ls) {
      RiskParams trial = p;
      for (size_t c = 0; c < j; ++c) trial.alpha[c] = p.alpha[c] + t * step[c];
      const double ft = data.log_likelihood(trial);
      if (ft >= f - 1e-12 * (1.0 + std::abs(f))) {
        if (ft >= f || step.norm() * t < 1e-9) {
          p = trial;
          f = std::max(f, ft);
          accepted = true;
          break;
        }
      }
      t *= 0.5;
    }
    if (!accepted || step.norm() * t < 1e-12) break;
  }
  alpha = p.alpha;
  return f;
}

}  // namespace

FreqFitResult fit_ml(const Cohort& cohort, const DoseVector& dose,
                     const std::optional<RiskParams>& init) {
  cohort.validate();
  dose.validate();
  const auto data = LikelihoodData::from(cohort, dose.values);

  const bool any_case = std::any_of(data.y.begin(), data.y.end(),
                                    [](int y) { return y == 1; });
  const bool any_control = std::any_of(data.y.begin(), data.y.end(),
                                       [](int y) { return y == 0; });
  if (!any_case || !any_control)
    throw std::invalid_argument("need at least one case and one control");
  if (std::all_of(data.dose.begin(), data.dose.end(),
                  [](double d) { return d == 0.0; }))
    throw std::invalid_argument("slope unidentifiable: all doses are zero");

  const Eigen::Index dim = static_cast<Eigen::Index>(data.j) + 1;
  Objective obj{data};

  Eigen::VectorXd theta = Eigen::VectorXd::Zero(dim);
  theta[dim - 1] = 1.0;  // default init: alpha = 0, beta = 1
  if (init) {
    if (init->alpha.size() != data.j)
      throw std::invalid_argument("init alpha length mismatch");
    for (size_t c = 0; c < data.j; ++c)
      theta[static_cast<Eigen::Index>(c)] = init->alpha[c];
    theta[dim - 1] = std::max(0.0, init->beta);
  }

  FreqFitResult result;
  double f = obj.value(theta);
  Eigen::VectorXd g = obj.gradient(theta);
  Eigen::MatrixXd b_inv = Eigen::MatrixXd::Identity(dim, dim);
  double last_step = std::numeric_limits<double>::infinity();

  int iter = 0;
  for (; iter < kMaxIter; ++iter) {
    const Eigen::VectorXd pg = projected_gradient(theta, g);
    if (pg.norm() < kGradTol && last_step < kStepTol) break;

    Eigen::VectorXd dir = b_inv * pg;  // ascent direction
    // Keep the search direction from immediately leaving the feasible set.
    if (theta[dim - 1] <= 0.0 && dir[dim - 1] < 0.0) dir[dim - 1] = 0.0;
    if (dir.dot(pg) <= 0.0) {
      b_inv = Eigen::MatrixXd::Identity(dim, dim);
      dir = pg;
    }

    double t = 1.0;
    Eigen::VectorXd theta_new = theta;
    double f_new = f;
    bool moved = false;
    for (int ls = 0; ls < 80; ++ls) {
      Eigen::VectorXd cand = theta + t * dir;
      if (cand[dim - 1] < 1e-12) cand[dim - 1] = 0.0;  // projection with snap
      const double fc = obj.value(cand);
      const double armijo = f + 1e-4 * pg.dot(cand - theta);
      const bool endgame = (cand - theta).norm() < 1e-6 &&
                           fc >= f - 1e-12 * (1.0 + std::abs(f));
      if (fc >= armijo || endgame) {
        theta_new = cand;
        f_new = fc;
        moved = true;
        break;
      }
      t *= 0.5;
    }
    if (!moved) break;

    const Eigen::VectorXd g_new = obj.gradient(theta_new);
    const Eigen::VectorXd s = theta_new - theta;
    const Eigen::VectorXd yv = g - g_new;  // curvature pair for -loglik
    const double sy = s.dot(yv);
    if (sy > 1e-12 * s.norm() * yv.norm()) {
      // Sherman-Morrison BFGS update of the inverse Hessian of -loglik.
      const Eigen::VectorXd b_y = b_inv * yv;
      const double y_b_y = yv.dot(b_y);
      b_inv += ((sy + y_b_y) / (sy * sy)) * (s * s.transpose()) -
               (b_y * s.transpose() + s * b_y.transpose()) / sy;
    }

    last_step = s.norm();
    theta = theta_new;
    f = f_new;
    g = g_new;

    if (theta[dim - 1] > kSeparationBeta && g[dim - 1] > 0.0) {
      result.separation = true;
      break;
    }
  }

  // Exact-Hessian polish: a few damped Newton steps to land inside the
  // stated tolerances (skipped if separation was detected).
  if (!result.separation) {
    for (int polish = 0; polish < 30; ++polish) {
      const Eigen::VectorXd pg = projected_gradient(theta, g);
      if (pg.norm() < kGradTol && last_step < kStepTol) break;
      // A vanishing slope with an outward gradient is a KKT boundary
      // candidate: re-maximize alpha at beta = 0 and recheck.
      const bool near_boundary = theta[dim - 1] <= 1e-6 && g[dim - 1] < 0.0;
      if (near_boundary) {
        std::vector<double> alpha(theta.data(), theta.data() + data.j);
        const double f_boundary = maximize_alpha(data, alpha, 0.0);
        Eigen::VectorXd cand = theta;
        for (size_t c = 0; c < data.j; ++c)
          cand[static_cast<Eigen::Index>(c)] = alpha[c];
        cand[dim - 1] = 0.0;
        const Eigen::VectorXd g_boundary = obj.gradient(cand);
        if (g_boundary[dim - 1] <= 1e-10 &&
            f_boundary >= f - 1e-9 * (1.0 + std::abs(f))) {
          theta = cand;
          f = f_boundary;
          g = g_boundary;
          last_step = 0.0;
          break;
        }
      }
      Eigen::MatrixXd neg_h = -obj.hessian(theta);
      neg_h.diagonal().array() += 1e-12;
      Eigen::LLT<Eigen::MatrixXd> llt(neg_h);
      if (llt.info() != Eigen::Success) break;
      Eigen::VectorXd step = llt.solve(g);
      Eigen::VectorXd cand = theta + step;
      if (cand[dim - 1] < 0.0) cand[dim - 1] = 0.0;
      const double fc = obj.value(cand);
      if (fc < f - 1e-9 * (1.0 + std::abs(f))) break;
      last_step = (cand - theta).norm();
      theta = cand;
      f = std::max(f, fc);
      g = obj.gradient(theta);
      ++iter;
    }
  }

  result.params = obj.unpack(theta);
  result.beta_hat = result.params.beta;
  result.loglik = f;
  result.n_iter = iter;
  result.at_boundary = result.beta_hat <= 0.0;
  const Eigen::VectorXd pg = projected_gradient(theta, g);
  result.converged =
      !result.separation && pg.norm() < kGradTol && last_step < kStepTol;

  // Wald SE diagnostic from the observed information.
  {
    Eigen::MatrixXd neg_h = -obj.hessian(theta);
    neg_h.diagonal().array() += 1e-12;
    Eigen::LDLT<Eigen::MatrixXd> ldlt(neg_h);
    if (ldlt.info() == Eigen::Success) {
      Eigen::VectorXd e = Eigen::VectorXd::Zero(dim);
      e[dim - 1] = 1.0;
      const double v = e.dot(ldlt.solve(e));
      if (v > 0.0) result.wald_se = std::sqrt(v);
    }
  }

  if (result.converged) {
    const auto [lo, hi] = profile_ci(cohort, dose, result);
    result.ci_low = lo;
    result.ci_high = hi;
    result.ci_unbounded = !std::isfinite(hi);
  }
  return result;
}

std::pair<double, double> profile_ci(const Cohort& cohort, const DoseVector& dose,
                                     const FreqFitResult& fit, double level) {
  if (!fit.converged)
    throw std::logic_error("profile CI requires a converged fit");
  const auto data = LikelihoodData::from(cohort, dose.values);
  const double target = fit.loglik - half_chisq1_quantile(level);

  // Profile log-likelihood with warm-started alpha.
  std::vector<double> alpha_ws = fit.params.alpha;
  const auto profile = [&](double beta) {
    return maximize_alpha(data, alpha_ws, beta);
  };

  const double beta_hat = fit.beta_hat;
  constexpr double kBetaTol = 1e-4;

  // Lower bound: clipped at 0 when the profile never drops to the target.
  double lo = 0.0;
  if (beta_hat > kBetaTol && profile(0.0) < target) {
    double a = 0.0, b = beta_hat;
    alpha_ws = fit.params.alpha;
    while (b - a > kBetaTol) {
      const double mid = 0.5 * (a + b);
      if (profile(mid) < target)
        a = mid;
      else
        b = mid;
    }
    lo = 0.5 * (a + b);
  }

  // Upper bound: bracket by doubling, then bisect.
  alpha_ws = fit.params.alpha;
  double step = std::max(1.0, beta_hat);
  double a = beta_hat, b = beta_hat + step;
  bool bracketed = false;
  while (b < 1e9) {
    if (profile(b) < target) {
      bracketed = true;
      break;
    }
    a = b;
    step *= 2.0;
    b = a + step;
  }
  double hi = std::numeric_limits<double>::infinity();
  if (bracketed) {
    while (b - a > std::max(kBetaTol, 1e-7 * b)) {
      const double mid = 0.5 * (a + b);
      if (profile(mid) < target)
        b = mid;
      else
        a = mid;
    }
    hi = 0.5 * (a + b);
  }
  return {lo, hi};
}

}  // namespace dosebma
