#include "gelkit/profile_optimizer.hpp"

#include "gelkit/errors.hpp"

#include <Eigen/Cholesky>
#include <Eigen/QR>

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <vector>

namespace gelkit {

AffineSubspace make_subspace(const Vector& start, const Matrix& C, const Vector& v) {
  const Index p = start.size();
  AffineSubspace space;
  if (C.rows() == 0) {
    space.origin = start;
    space.basis = Matrix::Identity(p, p);
    return space;
  }
  if (C.cols() != p || v.size() != C.rows()) throw ArgumentError("make_subspace: constraint shape mismatch");
  // Full QR of C' splits R^p into range(C') and its orthogonal complement.
  const Eigen::ColPivHouseholderQR<Matrix> qr(C.transpose());
  const Index rank = qr.rank();
  if (rank < C.rows()) throw ArgumentError("make_subspace: redundant equality constraints");
  const Matrix q = qr.householderQ() * Matrix::Identity(p, p);
  space.basis = q.rightCols(p - rank);
  const Matrix cct = C * C.transpose();
  space.origin = start - C.transpose() * cct.ldlt().solve(C * start - v);
  return space;
}

namespace {

struct Evaluated {
  Vector u;
  double value;
  Vector grad;  // subspace gradient
  Vector theta_grad;
};

class SubspaceObjective {
 public:
  SubspaceObjective(const ProfileFn& fn, const AffineSubspace& space) : fn_(fn), space_(space) {}

  std::optional<Evaluated> operator()(const Vector& u) const {
    auto pt = fn_(space_.to_theta(u));
    if (!pt || !std::isfinite(pt->value)) return std::nullopt;
    Evaluated e{u, pt->value, space_.basis.transpose() * pt->grad, pt->grad};
    return e;
  }

  double value(const Vector& u) const {
    auto pt = fn_(space_.to_theta(u));
    return pt && std::isfinite(pt->value) ? pt->value : std::numeric_limits<double>::infinity();
  }

 private:
  const ProfileFn& fn_;
  const AffineSubspace& space_;
};

// Derivative-free restart for when the descent direction keeps running into
// the infeasible region.
Vector nelder_mead(const SubspaceObjective& obj, const Vector& start, double scale, int max_evals) {
  const Index k = start.size();
  std::vector<Vector> pts;
  std::vector<double> vals;
  pts.push_back(start);
  vals.push_back(obj.value(start));
  for (Index j = 0; j < k; ++j) {
    Vector p = start;
    p[j] += scale;
    pts.push_back(p);
    vals.push_back(obj.value(p));
  }
  int evals = static_cast<int>(k) + 1;
  std::vector<std::size_t> idx(pts.size());
  while (evals < max_evals) {
    std::iota(idx.begin(), idx.end(), 0);
    std::sort(idx.begin(), idx.end(), [&](auto a, auto b) { return vals[a] < vals[b]; });
    const auto best = idx.front();
    const auto worst = idx.back();
    const auto second = idx[idx.size() - 2];
    if (std::isfinite(vals[worst]) &&
        std::abs(vals[worst] - vals[best]) <= 1e-14 * (1.0 + std::abs(vals[best]))) {
      break;
    }
    Vector centroid = Vector::Zero(k);
    for (std::size_t i = 0; i + 1 < idx.size(); ++i) centroid += pts[idx[i]];
    centroid /= static_cast<double>(k);
    const Vector refl = centroid + (centroid - pts[worst]);
    const double f_refl = obj.value(refl);
    ++evals;
    if (f_refl < vals[best]) {
      const Vector expd = centroid + 2.0 * (centroid - pts[worst]);
      const double f_exp = obj.value(expd);
      ++evals;
      if (f_exp < f_refl) {
        pts[worst] = expd;
        vals[worst] = f_exp;
      } else {
        pts[worst] = refl;
        vals[worst] = f_refl;
      }
    } else if (f_refl < vals[second]) {
      pts[worst] = refl;
      vals[worst] = f_refl;
    } else {
      const Vector contr = centroid + 0.5 * (pts[worst] - centroid);
      const double f_con = obj.value(contr);
      ++evals;
      if (f_con < vals[worst]) {
        pts[worst] = contr;
        vals[worst] = f_con;
      } else {
        for (std::size_t i = 1; i < idx.size(); ++i) {
          pts[idx[i]] = pts[best] + 0.5 * (pts[idx[i]] - pts[best]);
          vals[idx[i]] = obj.value(pts[idx[i]]);
          ++evals;
        }
      }
    }
  }
  const auto it = std::min_element(vals.begin(), vals.end());
  return pts[static_cast<std::size_t>(it - vals.begin())];
}

Matrix seed_inverse_hessian(const Matrix& guess, Index k) {
  if (guess.rows() == k && guess.cols() == k && guess.allFinite()) {
    const Eigen::LLT<Matrix> llt(0.5 * (guess + guess.transpose()));
    if (llt.info() == Eigen::Success) {
      Matrix inv = llt.solve(Matrix::Identity(k, k));
      if (inv.allFinite()) return inv;
    }
  }
  return Matrix::Identity(k, k);
}

}  // namespace

ProfileMinimum minimize_profile(const ProfileFn& fn, const AffineSubspace& space,
                                const Matrix& hessian_guess, const ProfileMinimizeOptions& opts) {
  const Index k = space.dim();
  SubspaceObjective obj(fn, space);
  ProfileMinimum out;

  auto current = obj(Vector::Zero(k));
  if (!current) throw InfeasibleAtInit("profile objective infeasible at the starting value; try a different theta_init");
  if (k == 0) {
    out.theta = space.origin;
    out.value = current->value;
    out.converged = true;
    return out;
  }

  const Matrix h0 = seed_inverse_hessian(hessian_guess, k);
  Matrix hinv = h0;
  int restarts = 0;
  int it = 0;
  for (; it < opts.max_iter; ++it) {
    const double gnorm = current->grad.norm();
    if (gnorm <= opts.grad_tol) {
      out.converged = true;
      break;
    }
    Vector dir = -hinv * current->grad;
    double slope = current->grad.dot(dir);
    if (!(slope < 0.0)) {
      hinv = h0;
      dir = -hinv * current->grad;
      slope = current->grad.dot(dir);
    }

    std::optional<Evaluated> next;
    bool hit_infeasible = false;
    double t = 1.0;
    for (int h = 0; h < 50; ++h, t *= 0.5) {
      auto trial = obj(current->u + t * dir);
      if (!trial) {
        hit_infeasible = true;
        continue;
      }
      const bool armijo = trial->value <= current->value + 1e-4 * t * slope;
      // Near the optimum the value is flat to rounding; accept a full step that
      // still reduces the gradient.
      const bool flat = h == 0 &&
                        std::abs(trial->value - current->value) <= 1e-12 * std::max(1.0, std::abs(current->value)) &&
                        trial->grad.norm() < gnorm;
      if (armijo || flat) {
        next = std::move(trial);
        break;
      }
    }

    if (!next) {
      if (!hit_infeasible || restarts >= 3) break;
      ++restarts;
      const double scale = std::max(1e-8, 0.1 * dir.norm());
      const Vector u = nelder_mead(obj, current->u, scale, 200 * static_cast<int>(k + 1));
      auto restarted = obj(u);
      if (!restarted || !(restarted->value < current->value)) break;
      current = std::move(restarted);
      hinv = h0;
      continue;
    }

    const Vector s = next->u - current->u;
    const Vector y = next->grad - current->grad;
    const double sy = s.dot(y);
    if (sy > 1e-300 && std::isfinite(sy)) {
      const double rho = 1.0 / sy;
      const Matrix eye = Matrix::Identity(k, k);
      hinv = (eye - rho * s * y.transpose()) * hinv * (eye - rho * y * s.transpose()) + rho * s * s.transpose();
    }
    current = std::move(next);
  }

  out.theta = space.to_theta(current->u);
  out.value = current->value;
  out.grad_norm = current->grad.norm();
  out.iterations = it;
  out.simplex_restarts = restarts;
  if (out.grad_norm <= opts.grad_tol) out.converged = true;
  return out;
}

}  // namespace gelkit
