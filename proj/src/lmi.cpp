#include "ftmas/lmi.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "ftmas/error.hpp"

namespace ftmas {

namespace {

struct ParamRef {
  int var;
  int i;
  int j;
};

// Vectorized view of the variables of a problem.
class Layout {
 public:
  explicit Layout(const std::vector<LmiVariable>& vars) : vars_(vars) {
    for (int v = 0; v < static_cast<int>(vars.size()); ++v) {
      const auto& var = vars[v];
      if (var.symmetric && var.rows != var.cols)
        throw Error(ErrorCode::InvalidArgument, "lmi: symmetric variable must be square");
      if (var.positive_definite && !var.symmetric)
        throw Error(ErrorCode::InvalidArgument, "lmi: positive definite variable must be symmetric");
      for (int j = 0; j < var.cols; ++j)
        for (int i = 0; i < var.rows; ++i)
          if (!var.symmetric || i <= j) params_.push_back({v, i, j});
    }
  }

  int size() const { return static_cast<int>(params_.size()); }
  const ParamRef& param(int k) const { return params_[k]; }

  VarMap unpack(const Vec& x) const {
    VarMap m;
    for (const auto& var : vars_) m[var.name] = Mat::Zero(var.rows, var.cols);
    for (int k = 0; k < size(); ++k) {
      const auto& p = params_[k];
      Mat& M = m[vars_[p.var].name];
      M(p.i, p.j) = x(k);
      if (vars_[p.var].symmetric) M(p.j, p.i) = x(k);
    }
    return m;
  }

  Vec pack(const VarMap& m) const {
    Vec x = Vec::Zero(size());
    for (int k = 0; k < size(); ++k) {
      const auto& p = params_[k];
      auto it = m.find(vars_[p.var].name);
      if (it == m.end()) continue;
      if (it->second.rows() != vars_[p.var].rows || it->second.cols() != vars_[p.var].cols) continue;
      x(k) = vars_[p.var].symmetric ? 0.5 * (it->second(p.i, p.j) + it->second(p.j, p.i))
                                    : it->second(p.i, p.j);
    }
    return x;
  }

 private:
  std::vector<LmiVariable> vars_;
  std::vector<ParamRef> params_;
};

// Affine symmetric block G(x) = G0 + sum_k x_k G_k, stored as flattened columns.
struct AffineBlock {
  int dim = 0;
  Mat G0;
  Mat coeffs;              // (dim*dim) x nparams
  std::vector<int> active;  // parameter indices with nonzero coefficient
};

Mat sym(const Mat& M) { return 0.5 * (M + M.transpose()); }

// Strictness required of lambda_max: the absolute tolerance, or a generous
// multiple of the eigenvalue roundoff bound n*eps*||F|| when F is large.
double certify_threshold(double feas_tol, int n, double norm) {
  const double eps = std::numeric_limits<double>::epsilon();
  return std::max(feas_tol, 1e3 * std::max(n, 1) * eps * norm);
}

struct Evaluation {
  double smooth = 0.0;
  double true_max = 0.0;
  double lmi_max = 0.0;
  double lmi_norm = 0.0;  // spectral norm of the expression block
  double pd_slack = 0.0;
  Vec grad;
};

class Engine {
 public:
  Engine(const LmiProblem& problem, const LmiOptions& opts)
      : opts_(opts), layout_(problem.variables) {
    const int d = layout_.size();
    Vec zero = Vec::Zero(d);
    Mat F0 = sym(problem.expression(layout_.unpack(zero)));
    AffineBlock main;
    main.dim = static_cast<int>(F0.rows());
    main.G0 = F0;
    main.coeffs = Mat::Zero(main.dim * main.dim, d);
    scale_ = Vec::Ones(d);
    for (int k = 0; k < d; ++k) {
      Vec e = zero;
      e(k) = 1.0;
      Mat Fk = sym(problem.expression(layout_.unpack(e))) - F0;
      main.coeffs.col(k) = Eigen::Map<const Vec>(Fk.data(), Fk.size());
      double nk = Fk.norm();
      if (nk > 0.0) {
        main.active.push_back(k);
        scale_(k) = 1.0 / nk;
      }
    }
    blocks_.push_back(std::move(main));

    for (int v = 0; v < static_cast<int>(problem.variables.size()); ++v) {
      const auto& var = problem.variables[v];
      if (!var.positive_definite) continue;
      AffineBlock b;
      b.dim = var.rows;
      b.G0 = opts.pd_floor * Mat::Identity(b.dim, b.dim);
      b.coeffs = Mat::Zero(b.dim * b.dim, d);
      for (int k = 0; k < d; ++k) {
        const auto& p = layout_.param(k);
        if (p.var != v) continue;
        Mat E = Mat::Zero(b.dim, b.dim);
        E(p.i, p.j) = -1.0;
        E(p.j, p.i) = -1.0;
        b.coeffs.col(k) = Eigen::Map<const Vec>(E.data(), E.size());
        b.active.push_back(k);
      }
      blocks_.push_back(std::move(b));
    }
  }

  int dim() const { return layout_.size(); }
  const Layout& layout() const { return layout_; }
  const Vec& scale() const { return scale_; }

  // Evaluates at scaled coordinates w (x = scale .* w).
  Evaluation evaluate(const Vec& w, double mu, bool need_grad) const {
    Vec x = scale_.cwiseProduct(w);
    Evaluation ev;
    ev.true_max = -std::numeric_limits<double>::infinity();
    ev.pd_slack = std::numeric_limits<double>::infinity();
    std::vector<Vec> eigvals(blocks_.size());
    std::vector<Mat> eigvecs(blocks_.size());
    for (size_t b = 0; b < blocks_.size(); ++b) {
      const auto& blk = blocks_[b];
      Vec flat = Eigen::Map<const Vec>(blk.G0.data(), blk.G0.size());
      for (int k : blk.active) flat += x(k) * blk.coeffs.col(k);
      Mat G = Eigen::Map<Mat>(flat.data(), blk.dim, blk.dim);
      G = sym(G);
      Eigen::SelfAdjointEigenSolver<Mat> es(G, need_grad ? Eigen::ComputeEigenvectors
                                                         : Eigen::EigenvaluesOnly);
      eigvals[b] = es.eigenvalues();
      if (need_grad) eigvecs[b] = es.eigenvectors();
      double mx = eigvals[b].maxCoeff();
      ev.true_max = std::max(ev.true_max, mx);
      if (b == 0) {
        ev.lmi_max = mx;
        ev.lmi_norm = std::max(std::abs(mx), std::abs(eigvals[b].minCoeff()));
      }
      else ev.pd_slack = std::min(ev.pd_slack, -mx);
    }
    // log-sum-exp smoothing of the joint spectrum
    double s = 0.0;
    for (const auto& lam : eigvals) s += ((lam.array() - ev.true_max) / mu).exp().sum();
    ev.smooth = ev.true_max + mu * std::log(s);
    if (need_grad) {
      ev.grad = Vec::Zero(dim());
      for (size_t b = 0; b < blocks_.size(); ++b) {
        const auto& blk = blocks_[b];
        Vec wts = ((eigvals[b].array() - ev.true_max) / mu).exp() / s;
        Mat W = eigvecs[b] * wts.asDiagonal() * eigvecs[b].transpose();
        Eigen::Map<const Vec> wflat(W.data(), W.size());
        for (int k : blk.active) ev.grad(k) += wflat.dot(blk.coeffs.col(k));
      }
      ev.grad = ev.grad.cwiseProduct(scale_);
    }
    return ev;
  }

  bool certified(const Evaluation& ev) const {
    return ev.lmi_max < -certify_threshold(opts_.feas_tol, blocks_[0].dim, ev.lmi_norm) &&
           ev.pd_slack >= 0.0;
  }

 private:
  LmiOptions opts_;
  Layout layout_;
  Vec scale_;
  std::vector<AffineBlock> blocks_;
};

}  // namespace

double lmi_margin(const LmiProblem& problem, const VarMap& vars) {
  return max_sym_eig(problem.expression(vars));
}

bool lmi_certify(const LmiProblem& problem, const VarMap& vars, const LmiOptions& opts) {
  for (const auto& var : problem.variables) {
    if (!var.positive_definite) continue;
    auto it = vars.find(var.name);
    if (it == vars.end()) return false;
    if (min_sym_eig(it->second) < opts.pd_floor) return false;
  }
  Mat F = problem.expression(vars);
  F = 0.5 * (F + F.transpose());
  Eigen::SelfAdjointEigenSolver<Mat> es(F, Eigen::EigenvaluesOnly);
  double mx = es.eigenvalues().maxCoeff();
  double nrm = std::max(std::abs(mx), std::abs(es.eigenvalues().minCoeff()));
  return mx < -certify_threshold(opts.feas_tol, static_cast<int>(F.rows()), nrm);
}

LmiSolution lmi_feasible(const LmiProblem& problem, const LmiOptions& opts,
                         const VarMap* warm_start) {
  Engine eng(problem, opts);
  const int d = eng.dim();

  Vec x0;
  if (warm_start) {
    x0 = eng.layout().pack(*warm_start);
  } else {
    x0 = Vec::Zero(d);
    for (int k = 0; k < d; ++k) {
      const auto& p = eng.layout().param(k);
      if (problem.variables[p.var].positive_definite && p.i == p.j) x0(k) = 1.0;
    }
  }
  Vec w = x0.cwiseQuotient(eng.scale());

  LmiSolution out;
  auto finish = [&](const Vec& wbest, const Evaluation& ev, int iters) {
    Vec x = eng.scale().cwiseProduct(wbest);
    out.variables = eng.layout().unpack(x);
    out.margin = ev.lmi_max;
    out.pd_slack = ev.pd_slack;
    out.objective = ev.true_max;
    out.iterations = iters;
    out.status = eng.certified(ev) ? LmiStatus::Feasible : LmiStatus::MaxIterExceeded;
    return out;
  };

  Evaluation cur = eng.evaluate(w, 1.0, false);
  if (d == 0 || eng.certified(cur)) return finish(w, cur, 0);

  Vec best_w = w;
  Evaluation best = cur;
  auto better = [&](const Evaluation& a, const Evaluation& b) {
    return a.true_max < b.true_max;
  };

  double mu = std::max(1e-3, 0.1 * std::abs(cur.true_max));
  const double mu_floor = 1e-13;
  Mat Hinv = Mat::Identity(d, d);
  int iters = 0;
  while (iters < opts.max_iter) {
    cur = eng.evaluate(w, mu, true);
    int stall = 0;
    int stage_iters = 0;
    while (iters < opts.max_iter && stage_iters < 400) {
      ++iters;
      ++stage_iters;
      Vec dir = -Hinv * cur.grad;
      double slope = dir.dot(cur.grad);
      if (!(slope < 0.0)) {
        Hinv.setIdentity();
        dir = -cur.grad;
        slope = -cur.grad.squaredNorm();
      }
      if (slope == 0.0) break;
      double step = 1.0;
      Evaluation nxt;
      Vec wn;
      bool ok = false;
      for (int ls = 0; ls < 60; ++ls) {
        wn = w + step * dir;
        nxt = eng.evaluate(wn, mu, true);
        if (std::isfinite(nxt.smooth) && nxt.smooth <= cur.smooth + 1e-4 * step * slope) {
          ok = true;
          break;
        }
        step *= 0.5;
      }
      if (!ok) break;
      Vec s = wn - w;
      Vec y = nxt.grad - cur.grad;
      double sy = s.dot(y);
      if (sy > 1e-300) {
        double rho = 1.0 / sy;
        Mat I = Mat::Identity(d, d);
        Hinv = (I - rho * s * y.transpose()) * Hinv * (I - rho * y * s.transpose()) +
               rho * s * s.transpose();
      }
      double decrease = cur.smooth - nxt.smooth;
      w = wn;
      cur = nxt;
      if (better(cur, best)) {
        best = cur;
        best_w = w;
      }
      if (eng.certified(cur)) return finish(w, cur, iters);
      if (decrease <= 1e-15 * (1.0 + std::abs(cur.smooth))) {
        if (++stall >= 3) break;
      } else {
        stall = 0;
      }
      if (cur.grad.lpNorm<Eigen::Infinity>() * mu < 1e-16) break;
    }
    if (mu <= mu_floor) break;
    mu = std::max(mu_floor, mu * 0.2);
    // the smoothed curvature scales like 1/mu
    Hinv *= 0.2;
  }
  return finish(best_w, best, iters);
}

AlphaResult lmi_maximize_alpha(const std::function<LmiProblem(double)>& family,
                               const AlphaSearchOptions& search, const LmiOptions& opts,
                               const AlphaAccept& accept) {
  AlphaResult res;
  auto ok = [&](double a, const LmiSolution& s) { return s.feasible() && (!accept || accept(a, s)); };
  double lo = search.lo, hi = search.hi;
  LmiProblem p_lo = family(lo);
  LmiSolution s_lo = lmi_feasible(p_lo, opts);
  ++res.feasibility_calls;
  if (!ok(lo, s_lo)) {
    res.solution = s_lo;
    return res;
  }
  res.found = true;
  res.alpha = lo;
  res.solution = s_lo;

  LmiSolution s_hi = lmi_feasible(family(hi), opts, &s_lo.variables);
  ++res.feasibility_calls;
  if (ok(hi, s_hi)) {
    res.alpha = hi;
    res.solution = s_hi;
    return res;
  }
  while (hi / lo > 1.0 + search.rel_width) {
    double mid = std::sqrt(lo * hi);
    LmiSolution s = lmi_feasible(family(mid), opts, &res.solution.variables);
    ++res.feasibility_calls;
    if (ok(mid, s)) {
      lo = mid;
      res.alpha = mid;
      res.solution = s;
    } else {
      hi = mid;
    }
  }
  return res;
}

}  // namespace ftmas
