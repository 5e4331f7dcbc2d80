#include "regimelr/estimation.hpp"

#include <Eigen/Eigenvalues>
#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "regimelr/optim.hpp"
#include "regimelr/parallel.hpp"
#include "regimelr/rng.hpp"

namespace regimelr {

AlphaGrid AlphaGrid::gmar_default() {
  AlphaGrid grid;
  grid.family = Family::GMAR;
  for (int k = 1; k <= 19; ++k) {
    Eigen::VectorXd a(1);
    a(0) = 0.05 * k;
    grid.points.push_back(a);
  }
  return grid;
}

AlphaGrid AlphaGrid::lmar_default_m1() {
  AlphaGrid grid;
  grid.family = Family::LMAR;
  const double a0s[] = {-2.0, -1.0, 0.0, 1.0, 2.0};
  std::vector<double> a1s;
  for (int k = 0; k < 4; ++k) a1s.push_back(-2.0 + k * (1.75 / 3.0));
  for (int k = 0; k < 4; ++k) a1s.push_back(0.25 + k * (1.75 / 3.0));
  for (const double a0 : a0s)
    for (const double a1 : a1s) {
      Eigen::VectorXd a(2);
      a << a0, a1;
      grid.points.push_back(a);
    }
  return grid;
}

namespace {

// Shrinks AR coefficients until stationary by pulling the lag-polynomial
// roots outward: scaling coefficient k by s^k scales every companion
// eigenvalue by s.
Eigen::VectorXd shrink_to_stationary(const Eigen::VectorXd& coeffs) {
  if (check_stationarity(coeffs)) return coeffs;
  const int p = static_cast<int>(coeffs.size());
  Eigen::MatrixXd a = Eigen::MatrixXd::Zero(p, p);
  a.row(0) = coeffs.transpose();
  if (p > 1) a.bottomLeftCorner(p - 1, p - 1).setIdentity();
  const double rho = a.eigenvalues().cwiseAbs().maxCoeff();
  const double s = 0.999 / rho;
  Eigen::VectorXd out(p);
  double sk = 1.0;
  for (int k = 0; k < p; ++k) {
    sk *= s;
    out(k) = coeffs(k) * sk;
  }
  return out;
}

class Fitter {
 public:
  Fitter(const MixtureSpec& spec, const Eigen::VectorXd& series,
         const Eigen::VectorXd& alpha, const ArFit& null_fit,
         const GaConfig& cfg)
      : spec_(spec),
        cfg_(cfg),
        loglik_(spec, series),
        rng_(cfg.seed),
        q1_(spec.q1()),
        q2_(spec.q2()),
        dim_(spec.q1() + 2 * spec.q2()) {
    spec_.validate();
    if (loglik_.t_count() <= 5 * (dim_ + static_cast<int>(alpha.size())))
      throw std::invalid_argument("series too short for mixture fit");

    const int t_count = loglik_.t_count();
    const Eigen::VectorXd obs = series.tail(t_count);
    const double mean = obs.mean();
    const double var =
        (obs.array() - mean).square().sum() / std::max(t_count - 1, 1);
    mean_ = mean;
    sd_ = std::sqrt(var);
    sigma2_lo_ = cfg.sigma2_lo_factor * var;
    sigma2_hi_ = cfg.sigma2_hi_factor * var;

    scratch_.alpha = alpha;
    scratch_.beta.resize(q1_);
    scratch_.phi.resize(q2_);
    scratch_.varphi.resize(q2_);

    // Per-coordinate scale used by crossover blending and mutation.
    range_.resize(dim_);
    for (int i = 0; i < dim_; ++i) {
      switch (coord_kind(i)) {
        case Kind::Intercept: range_(i) = sd_; break;
        case Kind::Coeff: range_(i) = 1.0; break;
        case Kind::Sigma2: range_(i) = var; break;
      }
    }
    null_point_ = make_null_point(null_fit);
  }

  FitResult run() {
    FitResult out;
    out.alpha = scratch_.alpha;
    if (cfg_.null_point_only) {
      out.params = unpack(null_point_);
      out.loglik = evaluate(null_point_);
      out.converged = true;
      out.evaluations = evaluations_;
      return out;
    }

    const int pop_size = std::max(cfg_.population, cfg_.elite + 2);
    std::vector<Eigen::VectorXd> pop;
    std::vector<double> fit;
    pop.reserve(pop_size);
    pop.push_back(null_point_);
    for (int i = 1; i < pop_size; ++i) pop.push_back(random_feasible());
    fit.resize(pop_size);
    for (int i = 0; i < pop_size; ++i) fit[i] = evaluate(pop[i]);

    for (int gen = 0; gen < cfg_.generations; ++gen) {
      const double decay = std::pow(cfg_.mutation_decay, gen);
      std::vector<int> order(pop_size);
      for (int i = 0; i < pop_size; ++i) order[i] = i;
      std::sort(order.begin(), order.end(),
                [&](int a, int b) { return fit[a] > fit[b]; });

      std::vector<Eigen::VectorXd> next;
      std::vector<double> next_fit;
      next.reserve(pop_size);
      for (int e = 0; e < cfg_.elite; ++e) {
        next.push_back(pop[order[e]]);
        next_fit.push_back(fit[order[e]]);
      }
      while (static_cast<int>(next.size()) < pop_size) {
        const Eigen::VectorXd& a = pop[tournament(fit)];
        const Eigen::VectorXd& b = pop[tournament(fit)];
        Eigen::VectorXd child(dim_);
        bool ok = false;
        for (int attempt = 0; attempt < 20 && !ok; ++attempt) {
          child = crossover(a, b);
          mutate(child, decay);
          ok = feasible(child);
        }
        if (!ok) child = a;  // parents are feasible by induction
        next.push_back(child);
        next_fit.push_back(evaluate(next.back()));
      }
      pop = std::move(next);
      fit = std::move(next_fit);
    }

    int best = 0;
    for (int i = 1; i < pop_size; ++i)
      if (fit[i] > fit[best]) best = i;
    Eigen::VectorXd best_x = pop[best];
    double best_value = fit[best];

    // Derivative-free polish; infeasible points cost +infinity.
    const auto cost = [&](const Eigen::VectorXd& x) {
      if (!feasible(x)) return std::numeric_limits<double>::infinity();
      return -evaluate(x);
    };
    Eigen::VectorXd step(dim_);
    for (int i = 0; i < dim_; ++i) {
      double s = 0.05 * range_(i);
      if (coord_kind(i) == Kind::Sigma2 && best_x(i) + s >= sigma2_hi_)
        s = -s;
      step(i) = s;
    }
    const LocalOptResult nm = nelder_mead_minimize(
        cost, best_x, step, cfg_.nm_tol_x, cfg_.nm_max_evaluations);
    if (std::isfinite(nm.value) && -nm.value > best_value) {
      best_x = nm.x;
      best_value = -nm.value;
    }

    // The injected null point keeps the mixture fit at or above the null.
    const double null_value = evaluate(null_point_);
    if (null_value > best_value) {
      best_x = null_point_;
      best_value = null_value;
    }

    canonicalize(best_x);
    out.params = unpack(best_x);
    out.loglik = best_value;
    out.converged = nm.converged;
    out.evaluations = evaluations_;
    return out;
  }

 private:
  enum class Kind { Intercept, Coeff, Sigma2 };

  // Layout: [beta (q1) | phi (q2) | varphi (q2)], each regime block in the
  // order (intercept when present, coefficients, variance).
  Kind coord_kind(int i) const {
    if (spec_.family == Family::GMAR) {
      if (i == 0) return Kind::Intercept;
      const int j = (i - 1) % q2_;
      return j < spec_.p ? Kind::Coeff : Kind::Sigma2;
    }
    const int j = i % q2_;
    if (j == 0) return Kind::Intercept;
    return j <= spec_.p ? Kind::Coeff : Kind::Sigma2;
  }

  MixtureParams unpack(const Eigen::VectorXd& x) const {
    MixtureParams p;
    p.alpha = scratch_.alpha;
    p.beta = x.head(q1_);
    p.phi = x.segment(q1_, q2_);
    p.varphi = x.tail(q2_);
    return p;
  }

  double evaluate(const Eigen::VectorXd& x) {
    scratch_.beta = x.head(q1_);
    scratch_.phi = x.segment(q1_, q2_);
    scratch_.varphi = x.tail(q2_);
    ++evaluations_;
    return loglik_.eval(scratch_);
  }

  bool feasible(const Eigen::VectorXd& x) const {
    if (!x.allFinite()) return false;
    for (int i = 0; i < dim_; ++i) {
      switch (coord_kind(i)) {
        case Kind::Intercept:
          if (std::abs(x(i) - mean_) > cfg_.intercept_sd_mult * sd_)
            return false;
          break;
        case Kind::Sigma2:
          if (x(i) < sigma2_lo_ || x(i) > sigma2_hi_) return false;
          break;
        case Kind::Coeff:
          break;
      }
    }
    const int p = spec_.p;
    const int coeff0 = q1_ + (spec_.family == Family::GMAR ? 0 : 1);
    if (!check_stationarity(x.segment(coeff0, p))) return false;
    if (!check_stationarity(x.segment(coeff0 + q2_, p))) return false;
    return true;
  }

  Eigen::VectorXd make_null_point(const ArFit& null_fit) const {
    ArParams ar = null_fit.params;
    ar.coeffs = shrink_to_stationary(ar.coeffs);
    ar.sigma2 = std::clamp(ar.sigma2, sigma2_lo_, sigma2_hi_);
    ar.intercept = std::clamp(ar.intercept, mean_ - cfg_.intercept_sd_mult * sd_,
                              mean_ + cfg_.intercept_sd_mult * sd_);
    Eigen::VectorXd x(dim_);
    if (spec_.family == Family::GMAR) {
      x(0) = ar.intercept;
      Eigen::VectorXd block(q2_);
      block.head(spec_.p) = ar.coeffs;
      block(spec_.p) = ar.sigma2;
      x.segment(1, q2_) = block;
      x.tail(q2_) = block;
    } else {
      Eigen::VectorXd block(q2_);
      block(0) = ar.intercept;
      block.segment(1, spec_.p) = ar.coeffs;
      block(spec_.p + 1) = ar.sigma2;
      x.head(q2_) = block;
      x.tail(q2_) = block;
    }
    return x;
  }

  Eigen::VectorXd random_feasible() {
    for (int attempt = 0; attempt < 1000; ++attempt) {
      Eigen::VectorXd x(dim_);
      for (int i = 0; i < dim_; ++i) {
        switch (coord_kind(i)) {
          case Kind::Intercept:
            x(i) = mean_ + sd_ * (2.0 * rng_.uniform() - 1.0) * 2.0;
            break;
          case Kind::Coeff:
            x(i) = 2.2 * rng_.uniform() - 1.1;
            break;
          case Kind::Sigma2: {
            const double lo = std::log(0.25 * sd_ * sd_ + sigma2_lo_);
            const double hi = std::log(4.0 * sd_ * sd_);
            x(i) = std::exp(lo + (hi - lo) * rng_.uniform());
            break;
          }
        }
      }
      if (feasible(x)) return x;
    }
    throw std::runtime_error("empty feasible set");
  }

  int tournament(const std::vector<double>& fit) {
    const int n = static_cast<int>(fit.size());
    int best = std::min(static_cast<int>(rng_.uniform() * n), n - 1);
    for (int k = 1; k < cfg_.tournament; ++k) {
      const int c = std::min(static_cast<int>(rng_.uniform() * n), n - 1);
      if (fit[c] > fit[best]) best = c;
    }
    return best;
  }

  Eigen::VectorXd crossover(const Eigen::VectorXd& a,
                            const Eigen::VectorXd& b) {
    Eigen::VectorXd child(dim_);
    for (int i = 0; i < dim_; ++i) {
      const double lo = std::min(a(i), b(i));
      const double hi = std::max(a(i), b(i));
      const double d = hi - lo;
      child(i) = lo - cfg_.blend_alpha * d +
                 (1.0 + 2.0 * cfg_.blend_alpha) * d * rng_.uniform();
    }
    return child;
  }

  void mutate(Eigen::VectorXd& x, double decay) {
    for (int i = 0; i < dim_; ++i)
      if (rng_.uniform() < cfg_.mutation_prob)
        x(i) += cfg_.mutation_scale * range_(i) * decay * rng_.normal();
  }

  // Regime labels are exchangeable only when the mixing weight is symmetric
  // (GMAR at alpha = 1/2); order the regimes by first block entry there.
  void canonicalize(Eigen::VectorXd& x) const {
    if (spec_.family != Family::GMAR || scratch_.alpha(0) != 0.5) return;
    if (x(q1_) > x(q1_ + q2_)) {
      const Eigen::VectorXd phi = x.segment(q1_, q2_);
      x.segment(q1_, q2_) = x.tail(q2_);
      x.tail(q2_) = phi;
    }
  }

  MixtureSpec spec_;
  GaConfig cfg_;
  MixtureLoglik loglik_;
  NormalRng rng_;
  int q1_, q2_, dim_;
  double mean_ = 0.0, sd_ = 1.0, sigma2_lo_ = 0.0, sigma2_hi_ = 1.0;
  Eigen::VectorXd range_;
  Eigen::VectorXd null_point_;
  MixtureParams scratch_;
  long evaluations_ = 0;
};

}  // namespace

FitResult fit_mixture_fixed_alpha(const MixtureSpec& spec,
                                  const Eigen::VectorXd& series,
                                  const Eigen::VectorXd& alpha,
                                  const ArFit& null_fit,
                                  const GaConfig& config) {
  return Fitter(spec, series, alpha, null_fit, config).run();
}

FitResult fit_mixture_fixed_alpha(const MixtureSpec& spec,
                                  const Eigen::VectorXd& series,
                                  const Eigen::VectorXd& alpha,
                                  const GaConfig& config) {
  const ArFit null_fit = fit_ar(series, spec.p);
  return fit_mixture_fixed_alpha(spec, series, alpha, null_fit, config);
}

std::vector<FitResult> profile_alpha(const MixtureSpec& spec,
                                     const Eigen::VectorXd& series,
                                     const AlphaGrid& grid,
                                     const ArFit& null_fit,
                                     const GaConfig& config, int threads) {
  if (grid.points.empty()) throw std::invalid_argument("empty alpha grid");
  std::vector<FitResult> results(grid.points.size());
  parallel_for(static_cast<int>(grid.points.size()), threads, [&](int i) {
    GaConfig cfg = config;
    cfg.seed = substream_seed(config.seed, static_cast<std::uint64_t>(i));
    results[i] =
        fit_mixture_fixed_alpha(spec, series, grid.points[i], null_fit, cfg);
  });
  return results;
}

}  // namespace regimelr
