#include "geodesign/matching.hpp"

#include <algorithm>
#include <deque>
#include <limits>

#include "geodesign/error.hpp"

namespace geodesign {
namespace {

// Primal-dual blossom matcher. Vertices are 1-based internally; ids in
// (n, n_x] are contracted blossoms. st[x] maps a vertex or blossom to the
// root of the contraction it currently lives in; flower[b] lists a blossom's
// children in cycle order with the base first; flower_from[b][u] names the
// child of b containing real vertex u.
//
// Dual bookkeeping follows the standard integer formulation: edge slack is
// lab[u] + lab[v] - 2w, so vertex labels stay integral when weights are
// integral and blossom labels stay even. Callers pass even weights, which
// keeps the halved dual adjustments exact.
class BlossomMatcher {
 public:
  explicit BlossomMatcher(int n, const std::vector<std::int64_t>& w) : n_(n) {
    const int cap = 2 * n_ + 1;
    g_.assign(static_cast<std::size_t>(cap) * cap, Edge{0, 0, 0});
    lab_.assign(cap, 0);
    match_.assign(cap, 0);
    slack_.assign(cap, 0);
    st_.assign(cap, 0);
    pa_.assign(cap, 0);
    state_.assign(cap, -1);
    vis_.assign(cap, 0);
    flower_.assign(cap, {});
    flower_from_.assign(static_cast<std::size_t>(cap) * (n_ + 1), 0);
    for (int u = 1; u <= n_; ++u) {
      for (int v = 1; v <= n_; ++v) {
        edge(u, v) = Edge{u, v, u == v ? 0 : w[static_cast<std::size_t>(u - 1) * n_ + (v - 1)]};
      }
    }
  }

  std::vector<int> solve() {
    n_x_ = n_;
    for (int x = 0; x <= n_; ++x) {
      st_[x] = x;
      flower_[x].clear();
    }
    std::int64_t w_max = 0;
    for (int u = 1; u <= n_; ++u) {
      for (int v = 1; v <= n_; ++v) {
        flower_from(u, v) = (u == v ? u : 0);
        w_max = std::max(w_max, edge(u, v).w);
      }
    }
    for (int u = 1; u <= n_; ++u) lab_[u] = w_max;
    while (grow_phase()) {
    }
    std::vector<int> mate(static_cast<std::size_t>(n_), -1);
    for (int u = 1; u <= n_; ++u) {
      if (match_[u]) mate[static_cast<std::size_t>(u - 1)] = match_[u] - 1;
    }
    return mate;
  }

 private:
  struct Edge {
    int u, v;
    std::int64_t w;
  };

  Edge& edge(int u, int v) { return g_[static_cast<std::size_t>(u) * (2 * n_ + 1) + v]; }
  int& flower_from(int b, int u) { return flower_from_[static_cast<std::size_t>(b) * (n_ + 1) + u]; }

  std::int64_t slack_of(const Edge& e) { return lab_[e.u] + lab_[e.v] - e.w * 2; }

  void update_slack(int u, int x) {
    if (!slack_[x] || slack_of(edge(u, x)) < slack_of(edge(slack_[x], x))) slack_[x] = u;
  }

  void set_slack(int x) {
    slack_[x] = 0;
    for (int u = 1; u <= n_; ++u) {
      if (edge(u, x).w > 0 && st_[u] != x && state_[st_[u]] == 0) update_slack(u, x);
    }
  }

  void queue_push(int x) {
    if (x <= n_) {
      queue_.push_back(x);
    } else {
      for (int i : flower_[x]) queue_push(i);
    }
  }

  void set_st(int x, int b) {
    st_[x] = b;
    if (x > n_) {
      for (int i : flower_[x]) set_st(i, b);
    }
  }

  // Position of child xr inside flower b, reorienting the cycle so the path
  // from the base to xr has even length.
  int get_pr(int b, int xr) {
    auto& f = flower_[b];
    const int pr = static_cast<int>(std::find(f.begin(), f.end(), xr) - f.begin());
    if (pr % 2 == 1) {
      std::reverse(f.begin() + 1, f.end());
      return static_cast<int>(f.size()) - pr;
    }
    return pr;
  }

  void set_match(int u, int v) {
    const Edge e = edge(u, v);
    match_[u] = e.v;
    if (u <= n_) return;
    const int xr = flower_from(u, e.u);
    const int pr = get_pr(u, xr);
    auto& f = flower_[u];
    for (int i = 0; i < pr; ++i) set_match(f[static_cast<std::size_t>(i)], f[static_cast<std::size_t>(i ^ 1)]);
    set_match(xr, v);
    std::rotate(f.begin(), f.begin() + pr, f.end());
  }

  void augment(int u, int v) {
    while (true) {
      const int xnv = st_[match_[u]];
      set_match(u, v);
      if (!xnv) return;
      set_match(xnv, st_[pa_[xnv]]);
      u = st_[pa_[xnv]];
      v = xnv;
    }
  }

  int get_lca(int u, int v) {
    for (++vis_time_; u || v; std::swap(u, v)) {
      if (u == 0) continue;
      if (vis_[u] == vis_time_) return u;
      vis_[u] = vis_time_;
      u = st_[match_[u]];
      if (u) u = st_[pa_[u]];
    }
    return 0;
  }

  void add_blossom(int u, int lca, int v) {
    int b = n_ + 1;
    while (b <= n_x_ && st_[b]) ++b;
    if (b > n_x_) ++n_x_;
    lab_[b] = 0;
    state_[b] = 0;
    match_[b] = match_[lca];
    auto& f = flower_[b];
    f.clear();
    f.push_back(lca);
    for (int x = u, y; x != lca; x = st_[pa_[y]]) {
      f.push_back(x);
      f.push_back(y = st_[match_[x]]);
      queue_push(y);
    }
    std::reverse(f.begin() + 1, f.end());
    for (int x = v, y; x != lca; x = st_[pa_[y]]) {
      f.push_back(x);
      f.push_back(y = st_[match_[x]]);
      queue_push(y);
    }
    set_st(b, b);
    for (int x = 1; x <= n_x_; ++x) edge(b, x).w = edge(x, b).w = 0;
    for (int x = 1; x <= n_; ++x) flower_from(b, x) = 0;
    for (const int xs : f) {
      for (int x = 1; x <= n_x_; ++x) {
        if (edge(b, x).w == 0 || slack_of(edge(xs, x)) < slack_of(edge(b, x))) {
          edge(b, x) = edge(xs, x);
          edge(x, b) = edge(x, xs);
        }
      }
      for (int x = 1; x <= n_; ++x) {
        if (flower_from(xs, x)) flower_from(b, x) = xs;
      }
    }
    set_slack(b);
  }

  void expand_blossom(int b) {
    for (const int i : flower_[b]) set_st(i, i);
    const int xr = flower_from(b, edge(b, pa_[b]).u);
    const int pr = get_pr(b, xr);
    auto& f = flower_[b];
    for (int i = 0; i < pr; i += 2) {
      const int xs = f[static_cast<std::size_t>(i)];
      const int xns = f[static_cast<std::size_t>(i + 1)];
      pa_[xs] = edge(xns, xs).u;
      state_[xs] = 1;
      state_[xns] = 0;
      slack_[xs] = 0;
      set_slack(xns);
      queue_push(xns);
    }
    state_[xr] = 1;
    pa_[xr] = pa_[b];
    for (int i = pr + 1; i < static_cast<int>(f.size()); ++i) {
      const int xs = f[static_cast<std::size_t>(i)];
      state_[xs] = -1;
      set_slack(xs);
    }
    st_[b] = 0;
  }

  bool on_found_edge(const Edge& e) {
    const int u = st_[e.u];
    const int v = st_[e.v];
    if (state_[v] == -1) {
      pa_[v] = e.u;
      state_[v] = 1;
      const int nu = st_[match_[v]];
      slack_[v] = slack_[nu] = 0;
      state_[nu] = 0;
      queue_push(nu);
    } else if (state_[v] == 0) {
      const int lca = get_lca(u, v);
      if (!lca) {
        augment(u, v);
        augment(v, u);
        return true;
      }
      add_blossom(u, lca, v);
    }
    return false;
  }

  // One phase: grow alternating trees from every unmatched root until an
  // augmenting path is found (true) or the duals prove none exists (false).
  bool grow_phase() {
    std::fill(state_.begin() + 1, state_.begin() + n_x_ + 1, -1);
    std::fill(slack_.begin() + 1, slack_.begin() + n_x_ + 1, 0);
    queue_.clear();
    for (int x = 1; x <= n_x_; ++x) {
      if (st_[x] == x && !match_[x]) {
        pa_[x] = 0;
        state_[x] = 0;
        queue_push(x);
      }
    }
    if (queue_.empty()) return false;

    long rounds = 0;
    const long round_cap = 64L * n_ * n_ + 4096;
    while (true) {
      if (++rounds > round_cap) {
        throw Error(ErrorCategory::internal, "matching failed to converge");
      }
      while (!queue_.empty()) {
        const int u = queue_.front();
        queue_.pop_front();
        if (state_[st_[u]] == 1) continue;
        for (int v = 1; v <= n_; ++v) {
          if (edge(u, v).w > 0 && st_[u] != st_[v]) {
            if (slack_of(edge(u, v)) == 0) {
              if (on_found_edge(edge(u, v))) return true;
            } else {
              update_slack(u, st_[v]);
            }
          }
        }
      }

      std::int64_t d = std::numeric_limits<std::int64_t>::max();
      for (int b = n_ + 1; b <= n_x_; ++b) {
        if (st_[b] == b && state_[b] == 1) d = std::min(d, lab_[b] / 2);
      }
      for (int x = 1; x <= n_x_; ++x) {
        if (st_[x] == x && slack_[x]) {
          if (state_[x] == -1) {
            d = std::min(d, slack_of(edge(slack_[x], x)));
          } else if (state_[x] == 0) {
            d = std::min(d, slack_of(edge(slack_[x], x)) / 2);
          }
        }
      }
      for (int u = 1; u <= n_; ++u) {
        if (state_[st_[u]] == 0) {
          if (lab_[u] <= d) return false;
          lab_[u] -= d;
        } else if (state_[st_[u]] == 1) {
          lab_[u] += d;
        }
      }
      for (int b = n_ + 1; b <= n_x_; ++b) {
        if (st_[b] == b) {
          if (state_[b] == 0) {
            lab_[b] += d * 2;
          } else if (state_[b] == 1) {
            lab_[b] -= d * 2;
          }
        }
      }

      queue_.clear();
      for (int x = 1; x <= n_x_; ++x) {
        if (st_[x] == x && slack_[x] && st_[slack_[x]] != x &&
            slack_of(edge(slack_[x], x)) == 0) {
          if (on_found_edge(edge(slack_[x], x))) return true;
        }
      }
      for (int b = n_ + 1; b <= n_x_; ++b) {
        if (st_[b] == b && state_[b] == 1 && lab_[b] == 0) expand_blossom(b);
      }
    }
  }

  int n_;
  int n_x_ = 0;
  int vis_time_ = 0;
  std::vector<Edge> g_;
  std::vector<std::int64_t> lab_;
  std::vector<int> match_, slack_, st_, pa_, state_, vis_;
  std::vector<std::vector<int>> flower_;
  std::vector<int> flower_from_;
  std::deque<int> queue_;
};

}  // namespace

std::vector<int> max_weight_matching(int num_vertices,
                                     const std::vector<std::int64_t>& weights) {
  if (num_vertices < 0 ||
      weights.size() != static_cast<std::size_t>(num_vertices) * num_vertices) {
    throw Error(ErrorCategory::internal, "max_weight_matching: bad weight matrix size");
  }
  if (num_vertices == 0) return {};
  for (int u = 0; u < num_vertices; ++u) {
    for (int v = 0; v < u; ++v) {
      const std::int64_t wuv = weights[static_cast<std::size_t>(u) * num_vertices + v];
      const std::int64_t wvu = weights[static_cast<std::size_t>(v) * num_vertices + u];
      if (wuv != wvu || wuv < 0) {
        throw Error(ErrorCategory::internal, "max_weight_matching: weights must be symmetric and >= 0");
      }
    }
  }
  BlossomMatcher matcher(num_vertices, weights);
  return matcher.solve();
}

}  // namespace geodesign
