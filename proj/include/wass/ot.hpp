#pragma once

#include <algorithm>
#include <cstdint>
#include <deque>
#include <limits>
#include <numeric>
#include <utility>
#include <vector>

#include "wass/geometry.hpp"
#include "wass/measures.hpp"

namespace wass {

inline void check_cost_exponent(double p) {
  if (!std::isfinite(p) || p < 1.0)
    throw validation_error("cost exponent p must be finite and >= 1");
}

/// Coupling between two discrete measures. matrix(i, j) is the mass moved
/// from source atom i to target atom j; marginals must match the measure
/// weights within 1e-9.
struct TransportPlan {
  DiscreteMeasure source;
  DiscreteMeasure target;
  Eigen::MatrixXd matrix;

  TransportPlan(DiscreteMeasure mu, DiscreteMeasure nu, Eigen::MatrixXd gamma)
      : source(std::move(mu)), target(std::move(nu)), matrix(std::move(gamma)) {
    if (matrix.rows() != source.size() || matrix.cols() != target.size())
      throw validation_error("plan: matrix shape does not match marginals");
    for (Eigen::Index i = 0; i < matrix.rows(); ++i)
      for (Eigen::Index j = 0; j < matrix.cols(); ++j)
        if (!(matrix(i, j) >= -1e-12) || !std::isfinite(matrix(i, j)))
          throw validation_error("plan: entries must be nonnegative");
    Eigen::VectorXd row = matrix.rowwise().sum();
    Eigen::VectorXd col = matrix.colwise().sum().transpose();
    if ((row - source.weights()).lpNorm<Eigen::Infinity>() > 1e-9)
      throw validation_error("plan: row sums must equal source weights within 1e-9");
    if ((col - target.weights()).lpNorm<Eigen::Infinity>() > 1e-9)
      throw validation_error("plan: column sums must equal target weights within 1e-9");
  }
};

inline double plan_cost(const TransportPlan& plan, double p,
                        Ground ground = Ground::euclidean) {
  check_cost_exponent(p);
  if (plan.source.dim() != plan.target.dim())
    throw validation_error("plan_cost: dimension mismatch between marginals");
  double s = 0.0;
  for (int i = 0; i < plan.source.size(); ++i)
    for (int j = 0; j < plan.target.size(); ++j) {
      double g = plan.matrix(i, j);
      if (g > 0.0)
        s += g * std::pow(ground_distance(plan.source.atom(i), plan.target.atom(j), ground), p);
    }
  return s;
}

struct OtResult {
  TransportPlan plan;
  double cost;  // minimal integral of d^p
  double wp;    // cost^(1/p)
};

namespace detail {

struct CompressedInstance {
  std::vector<int> rows, cols;  // indices into the original measures
  Eigen::VectorXd a, b;
  Eigen::MatrixXd cost;
};

inline CompressedInstance compress(const DiscreteMeasure& mu, const DiscreteMeasure& nu,
                                   double p, Ground ground) {
  if (mu.dim() != nu.dim())
    throw validation_error("optimal transport: measures live in different dimensions");
  CompressedInstance inst;
  inst.rows = mu.support_indices();
  inst.cols = nu.support_indices();
  if (inst.rows.empty() || inst.cols.empty())
    throw validation_error("optimal transport: empty support");
  const int m = static_cast<int>(inst.rows.size());
  const int n = static_cast<int>(inst.cols.size());
  inst.a.resize(m);
  inst.b.resize(n);
  for (int i = 0; i < m; ++i) inst.a[i] = mu.weight(inst.rows[i]);
  for (int j = 0; j < n; ++j) inst.b[j] = nu.weight(inst.cols[j]);
  inst.cost.resize(m, n);
  for (int i = 0; i < m; ++i)
    for (int j = 0; j < n; ++j)
      inst.cost(i, j) =
          std::pow(ground_distance(mu.atom(inst.rows[i]), nu.atom(inst.cols[j]), ground), p);
  return inst;
}

/// Network simplex specialized to the transportation polytope. The basis
/// is a spanning tree over row and column nodes; pivots preserve the
/// marginals exactly, so the returned vertex is optimal up to roundoff.
class TransportSimplex {
 public:
  TransportSimplex(const Eigen::VectorXd& a, const Eigen::VectorXd& b,
                   const Eigen::MatrixXd& cost)
      : a_(a), b_(b), c_(cost), m_(static_cast<int>(a.size())),
        n_(static_cast<int>(b.size())) {}

  Eigen::MatrixXd solve() {
    build_initial_basis();
    const double tol = 1e-12 * (1.0 + c_.cwiseAbs().maxCoeff());
    const int max_iters = 2000 * (m_ + n_) + 20000;
    int degenerate_streak = 0;
    bool bland = false;
    for (int iter = 0; iter < max_iters; ++iter) {
      compute_potentials();
      int ei = -1, ej = -1;
      double best = -tol;
      for (int i = 0; i < m_ && !(bland && ei >= 0); ++i)
        for (int j = 0; j < n_; ++j) {
          if (in_basis_(i, j)) continue;
          double r = c_(i, j) - u_[i] - v_[j];
          if (r < best) {
            best = r;
            ei = i;
            ej = j;
            if (bland) break;
          }
        }
      if (ei < 0) return assemble();

      double theta = pivot(ei, ej);
      if (theta <= 1e-15) {
        if (++degenerate_streak > 100 + 10 * (m_ + n_)) bland = true;
      } else {
        degenerate_streak = 0;
      }
    }
    throw internal_error("transport simplex: iteration limit exceeded");
  }

 private:
  struct Arc {
    int i, j;
    double flow;
  };

  void build_initial_basis() {
    in_basis_ = Eigen::Matrix<bool, Eigen::Dynamic, Eigen::Dynamic>::Constant(m_, n_, false);
    arcs_.clear();
    Eigen::VectorXd ra = a_, rb = b_;
    int i = 0, j = 0;
    // Northwest-corner walk: m+n-1 arcs, possibly with zero allocations.
    while (true) {
      double q = std::min(ra[i], rb[j]);
      arcs_.push_back({i, j, q});
      in_basis_(i, j) = true;
      ra[i] -= q;
      rb[j] -= q;
      if (i == m_ - 1 && j == n_ - 1) break;
      if (i == m_ - 1)
        ++j;
      else if (j == n_ - 1)
        ++i;
      else if (ra[i] <= rb[j])
        ++i;
      else
        ++j;
    }
  }

  // Nodes 0..m-1 are rows, m..m+n-1 are columns.
  std::vector<std::vector<int>> adjacency() const {
    std::vector<std::vector<int>> adj(static_cast<std::size_t>(m_ + n_));
    for (std::size_t k = 0; k < arcs_.size(); ++k) {
      adj[static_cast<std::size_t>(arcs_[k].i)].push_back(static_cast<int>(k));
      adj[static_cast<std::size_t>(m_ + arcs_[k].j)].push_back(static_cast<int>(k));
    }
    return adj;
  }

  void compute_potentials() {
    u_.assign(static_cast<std::size_t>(m_), 0.0);
    v_.assign(static_cast<std::size_t>(n_), 0.0);
    std::vector<bool> seen(static_cast<std::size_t>(m_ + n_), false);
    auto adj = adjacency();
    std::deque<int> queue{0};
    seen[0] = true;
    while (!queue.empty()) {
      int node = queue.front();
      queue.pop_front();
      for (int k : adj[static_cast<std::size_t>(node)]) {
        const Arc& arc = arcs_[static_cast<std::size_t>(k)];
        int other = (node < m_) ? m_ + arc.j : arc.i;
        if (seen[static_cast<std::size_t>(other)]) continue;
        seen[static_cast<std::size_t>(other)] = true;
        if (other >= m_)
          v_[static_cast<std::size_t>(other - m_)] = c_(arc.i, arc.j) - u_[static_cast<std::size_t>(arc.i)];
        else
          u_[static_cast<std::size_t>(other)] = c_(arc.i, arc.j) - v_[static_cast<std::size_t>(arc.j)];
        queue.push_back(other);
      }
    }
    if (!std::all_of(seen.begin(), seen.end(), [](bool s) { return s; }))
      throw internal_error("transport simplex: basis not spanning");
  }

  /// Adds arc (ei, ej), shifts flow around the unique tree cycle, removes
  /// the first blocking arc. Returns the shifted amount.
  double pivot(int ei, int ej) {
    auto adj = adjacency();
    const int start = m_ + ej, goal = ei;
    std::vector<int> parent_arc(static_cast<std::size_t>(m_ + n_), -1);
    std::vector<int> parent_node(static_cast<std::size_t>(m_ + n_), -1);
    std::vector<bool> seen(static_cast<std::size_t>(m_ + n_), false);
    std::deque<int> queue{start};
    seen[static_cast<std::size_t>(start)] = true;
    while (!queue.empty()) {
      int node = queue.front();
      queue.pop_front();
      if (node == goal) break;
      for (int k : adj[static_cast<std::size_t>(node)]) {
        const Arc& arc = arcs_[static_cast<std::size_t>(k)];
        int other = (node < m_) ? m_ + arc.j : arc.i;
        if (seen[static_cast<std::size_t>(other)]) continue;
        seen[static_cast<std::size_t>(other)] = true;
        parent_arc[static_cast<std::size_t>(other)] = k;
        parent_node[static_cast<std::size_t>(other)] = node;
        queue.push_back(other);
      }
    }
    if (!seen[static_cast<std::size_t>(goal)])
      throw internal_error("transport simplex: entering arc closes no cycle");

    // Walk goal -> start;  arcs alternate +/- around the cycle with the
    // entering arc positive, so the arc adjacent to the goal (a row node)
    // is negative when walked in this direction.
    std::vector<int> path;
    for (int node = goal; node != start; node = parent_node[static_cast<std::size_t>(node)])
      path.push_back(parent_arc[static_cast<std::size_t>(node)]);

    double theta = std::numeric_limits<double>::infinity();
    int leaving = -1;
    for (std::size_t s = 0; s < path.size(); s += 2) {
      const Arc& arc = arcs_[static_cast<std::size_t>(path[s])];
      if (arc.flow < theta) {
        theta = arc.flow;
        leaving = path[s];
      }
    }
    if (leaving < 0) throw internal_error("transport simplex: no leaving arc");

    for (std::size_t s = 0; s < path.size(); ++s) {
      Arc& arc = arcs_[static_cast<std::size_t>(path[s])];
      arc.flow += (s % 2 == 0) ? -theta : theta;
      if (arc.flow < 0.0) arc.flow = 0.0;
    }

    Arc& out = arcs_[static_cast<std::size_t>(leaving)];
    in_basis_(out.i, out.j) = false;
    out = {ei, ej, theta};
    in_basis_(ei, ej) = true;
    return theta;
  }

  Eigen::MatrixXd assemble() const {
    Eigen::MatrixXd plan = Eigen::MatrixXd::Zero(m_, n_);
    for (const Arc& arc : arcs_) plan(arc.i, arc.j) = std::max(0.0, arc.flow);
    return plan;
  }

  Eigen::VectorXd a_, b_;
  Eigen::MatrixXd c_;
  int m_, n_;
  std::vector<Arc> arcs_;
  Eigen::Matrix<bool, Eigen::Dynamic, Eigen::Dynamic> in_basis_;
  std::vector<double> u_, v_;
};

inline OtResult expand_plan(const DiscreteMeasure& mu, const DiscreteMeasure& nu,
                            const CompressedInstance& inst, const Eigen::MatrixXd& compact,
                            double p) {
  Eigen::MatrixXd full = Eigen::MatrixXd::Zero(mu.size(), nu.size());
  double cost = 0.0;
  for (std::size_t i = 0; i < inst.rows.size(); ++i)
    for (std::size_t j = 0; j < inst.cols.size(); ++j) {
      double g = compact(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j));
      if (g > 0.0) {
        full(inst.rows[i], inst.cols[j]) = g;
        cost += g * inst.cost(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j));
      }
    }
  return OtResult{TransportPlan(mu, nu, std::move(full)), cost, std::pow(cost, 1.0 / p)};
}

}  // namespace detail

/// Exact optimal transport plan and W_p between two discrete measures.
inline OtResult optimal_plan(const DiscreteMeasure& mu, const DiscreteMeasure& nu, double p,
                             Ground ground = Ground::euclidean) {
  check_cost_exponent(p);
  detail::CompressedInstance inst = detail::compress(mu, nu, p, ground);
  detail::TransportSimplex simplex(inst.a, inst.b, inst.cost);
  return detail::expand_plan(mu, nu, inst, simplex.solve(), p);
}

inline double wasserstein(const DiscreteMeasure& mu, const DiscreteMeasure& nu, double p,
                          Ground ground = Ground::euclidean) {
  return optimal_plan(mu, nu, p, ground).wp;
}

/// Independent oracle for small instances: enumerates every basic feasible
/// solution of the marginal constraints (spanning-tree bases of the
/// transportation polytope) and takes the cheapest. Requires m*n <= 16.
inline OtResult brute_force_plan(const DiscreteMeasure& mu, const DiscreteMeasure& nu, double p,
                                 Ground ground = Ground::euclidean) {
  check_cost_exponent(p);
  detail::CompressedInstance inst = detail::compress(mu, nu, p, ground);
  const int m = static_cast<int>(inst.rows.size());
  const int n = static_cast<int>(inst.cols.size());
  if (m * n > 16)
    throw validation_error("brute_force_plan: instance too large (m*n must be <= 16)");

  const int cells = m * n;
  const int k = m + n - 1;
  std::vector<int> comb(static_cast<std::size_t>(k));
  std::iota(comb.begin(), comb.end(), 0);

  double best_cost = std::numeric_limits<double>::infinity();
  Eigen::MatrixXd best_plan;

  std::vector<int> uf(static_cast<std::size_t>(m + n));
  std::function<int(int)> find = [&](int x) {
    while (uf[static_cast<std::size_t>(x)] != x) {
      uf[static_cast<std::size_t>(x)] = uf[static_cast<std::size_t>(uf[static_cast<std::size_t>(x)])];
      x = uf[static_cast<std::size_t>(x)];
    }
    return x;
  };

  auto try_basis = [&](const std::vector<int>& basis) {
    std::iota(uf.begin(), uf.end(), 0);
    for (int cellidx : basis) {
      int i = cellidx / n, j = m + cellidx % n;
      int ri = find(i), rj = find(j);
      if (ri == rj) return;  // cycle
      uf[static_cast<std::size_t>(ri)] = rj;
    }
    // Spanning tree: solve allocations by repeated leaf elimination.
    std::vector<double> rem(static_cast<std::size_t>(m + n));
    for (int i = 0; i < m; ++i) rem[static_cast<std::size_t>(i)] = inst.a[i];
    for (int j = 0; j < n; ++j) rem[static_cast<std::size_t>(m + j)] = inst.b[j];
    std::vector<int> degree(static_cast<std::size_t>(m + n), 0);
    std::vector<bool> done(basis.size(), false);
    for (int cellidx : basis) {
      ++degree[static_cast<std::size_t>(cellidx / n)];
      ++degree[static_cast<std::size_t>(m + cellidx % n)];
    }
    std::vector<double> flow(basis.size(), 0.0);
    for (int round = 0; round < k; ++round) {
      int leaf = -1;
      for (int node = 0; node < m + n; ++node)
        if (degree[static_cast<std::size_t>(node)] == 1) {
          leaf = node;
          break;
        }
      if (leaf < 0) return;  // exhausted (defensive; cannot happen on a tree)
      for (std::size_t s = 0; s < basis.size(); ++s) {
        if (done[s]) continue;
        int i = basis[s] / n, jn = m + basis[s] % n;
        if (i != leaf && jn != leaf) continue;
        double q = rem[static_cast<std::size_t>(leaf)];
        flow[s] = q;
        int other = (i == leaf) ? jn : i;
        rem[static_cast<std::size_t>(other)] -= q;
        rem[static_cast<std::size_t>(leaf)] = 0.0;
        --degree[static_cast<std::size_t>(leaf)];
        --degree[static_cast<std::size_t>(other)];
        done[s] = true;
        break;
      }
    }
    double cost = 0.0;
    for (std::size_t s = 0; s < basis.size(); ++s) {
      if (flow[s] < -1e-12) return;  // infeasible vertex
      cost += std::max(0.0, flow[s]) * inst.cost(basis[s] / n, basis[s] % n);
    }
    if (cost < best_cost) {
      best_cost = cost;
      best_plan = Eigen::MatrixXd::Zero(m, n);
      for (std::size_t s = 0; s < basis.size(); ++s)
        best_plan(basis[s] / n, basis[s] % n) = std::max(0.0, flow[s]);
    }
  };

  while (true) {
    try_basis(comb);
    // next k-combination of {0..cells-1}
    int pos = k - 1;
    while (pos >= 0 && comb[static_cast<std::size_t>(pos)] == cells - k + pos) --pos;
    if (pos < 0) break;
    ++comb[static_cast<std::size_t>(pos)];
    for (int s = pos + 1; s < k; ++s)
      comb[static_cast<std::size_t>(s)] = comb[static_cast<std::size_t>(s - 1)] + 1;
  }

  if (!std::isfinite(best_cost))
    throw internal_error("brute_force_plan: no feasible vertex found");
  return detail::expand_plan(mu, nu, inst, best_plan, p);
}

/// McCann interpolation ((1-t) x + t y)#gamma of an optimal quadratic plan.
inline DiscreteMeasure displacement_interpolation(const DiscreteMeasure& mu,
                                                  const DiscreteMeasure& nu,
                                                  const TransportPlan& plan, double t) {
  if (!(t >= 0.0 && t <= 1.0)) throw validation_error("displacement: t outside [0,1]");
  if (!plan.source.same_base(mu) || !plan.target.same_base(nu))
    throw validation_error("displacement: plan marginals do not match the given measures");
  std::vector<Point> atoms;
  std::vector<double> weights;
  for (int i = 0; i < mu.size(); ++i)
    for (int j = 0; j < nu.size(); ++j) {
      double g = plan.matrix(i, j);
      if (g > 0.0) {
        atoms.push_back((1.0 - t) * mu.atom(i) + t * nu.atom(j));
        weights.push_back(g);
      }
    }
  Eigen::MatrixXd A(static_cast<Eigen::Index>(atoms.size()), mu.dim());
  Eigen::VectorXd w(static_cast<Eigen::Index>(weights.size()));
  for (std::size_t r = 0; r < atoms.size(); ++r) {
    A.row(static_cast<Eigen::Index>(r)) = atoms[r].transpose();
    w[static_cast<Eigen::Index>(r)] = weights[r];
  }
  return DiscreteMeasure::from_atoms(A, w);
}

}  // namespace wass
