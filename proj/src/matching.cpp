#include "gkpft/matching.hpp"

#include <algorithm>
#include <deque>
#include <limits>
#include <stdexcept>

namespace gkpft {

namespace {

using ll = long long;

// Maximum-weight perfect matching with blossoms (the classic O(n^3)
// primal-dual formulation: alternating trees grown from exposed vertices,
// blossoms contracted on odd cycles, duals adjusted by the minimum slack).
// Vertices are 1-based; ids above n are contracted blossoms.  All input
// weights are even and positive, which keeps every dual variable integral.
class Blossom {
 public:
  explicit Blossom(const std::vector<std::vector<ll>>& w) : n(int(w.size())) {
    const int N = 2 * n + 2;
    g.assign(N, std::vector<Edge>(N));
    lab.assign(N, 0);
    match.assign(N, 0);
    slack.assign(N, 0);
    st.assign(N, 0);
    pa.assign(N, 0);
    flower_from.assign(N, std::vector<int>(n + 1, 0));
    S.assign(N, 0);
    vis.assign(N, 0);
    flower.assign(N, {});

    ll w_max = 0;
    for (int u = 1; u <= n; ++u)
      for (int v = 1; v <= n; ++v) {
        g[u][v] = Edge{u, v, u == v ? 0 : w[u - 1][v - 1]};
        w_max = std::max(w_max, g[u][v].w);
      }
    n_x = n;
    for (int u = 1; u <= n; ++u) lab[u] = w_max;
    for (int u = 1; u <= n; ++u) {
      st[u] = u;
      flower_from[u][u] = u;
    }
  }

  // Runs phases until no augmenting path exists; returns matched partner of
  // each vertex (1-based), 0 if unmatched.
  std::vector<int> solve() {
    while (matching_phase()) {
    }
    return match;
  }

 private:
  struct Edge {
    int u = 0, v = 0;
    ll w = 0;
  };

  int n, n_x;
  std::vector<std::vector<Edge>> g;
  std::vector<ll> lab;
  std::vector<int> match, slack, st, pa, S, vis;
  std::vector<std::vector<int>> flower_from;
  std::vector<std::vector<int>> flower;
  std::deque<int> q;
  int timestamp = 0;

  // reduced cost of a (representative) edge; endpoints are always real
  // vertices, and vertex duals alone decide tightness across blossoms
  ll e_delta(const Edge& e) const {
    return lab[e.u] + lab[e.v] - 2 * g[e.u][e.v].w;
  }

  void update_slack(int u, int x) {
    if (!slack[x] || e_delta(g[u][x]) < e_delta(g[slack[x]][x])) slack[x] = u;
  }

  void set_slack(int x) {
    slack[x] = 0;
    for (int u = 1; u <= n; ++u)
      if (g[u][x].w > 0 && st[u] != x && S[st[u]] == 0) update_slack(u, x);
  }

  void q_push(int x) {
    if (x <= n) {
      q.push_back(x);
    } else {
      for (int i : flower[x]) q_push(i);
    }
  }

  void set_st(int x, int b) {
    st[x] = b;
    if (x > n)
      for (int i : flower[x]) set_st(i, b);
  }

  int get_pr(int b, int xr) {
    int pr = int(std::find(flower[b].begin(), flower[b].end(), xr) -
                 flower[b].begin());
    if (pr % 2 == 1) {  // walk the cycle the even way round
      std::reverse(flower[b].begin() + 1, flower[b].end());
      return int(flower[b].size()) - pr;
    }
    return pr;
  }

  void set_match(int u, int v) {
    match[u] = g[u][v].v;
    if (u <= n) return;
    const Edge& e = g[u][v];
    const int xr = flower_from[u][e.u];
    const int pr = get_pr(u, xr);
    for (int i = 0; i < pr; ++i) set_match(flower[u][i], flower[u][i ^ 1]);
    set_match(xr, v);
    std::rotate(flower[u].begin(), flower[u].begin() + pr, flower[u].end());
  }

  void augment(int u, int v) {
    while (true) {
      const int xnv = st[match[u]];
      set_match(u, v);
      if (!xnv) return;
      set_match(xnv, st[pa[xnv]]);
      u = st[pa[xnv]];
      v = xnv;
    }
  }

  int get_lca(int u, int v) {
    for (++timestamp; u || v; std::swap(u, v)) {
      if (!u) continue;
      if (vis[u] == timestamp) return u;
      vis[u] = timestamp;
      u = st[match[u]];
      if (u) u = st[pa[u]];
    }
    return 0;
  }

  void add_blossom(int u, int lca, int v) {
    int b = n + 1;
    while (b <= n_x && st[b]) ++b;
    if (b > n_x) ++n_x;
    lab[b] = 0;
    S[b] = 0;
    match[b] = match[lca];
    flower[b] = {lca};
    for (int x = u, y; x != lca; x = st[pa[y]]) {
      flower[b].push_back(x);
      flower[b].push_back(y = st[match[x]]);
      q_push(y);
    }
    std::reverse(flower[b].begin() + 1, flower[b].end());
    for (int x = v, y; x != lca; x = st[pa[y]]) {
      flower[b].push_back(x);
      flower[b].push_back(y = st[match[x]]);
      q_push(y);
    }
    set_st(b, b);
    for (int x = 1; x <= n_x; ++x) g[b][x].w = g[x][b].w = 0;
    for (int x = 1; x <= n; ++x) flower_from[b][x] = 0;
    for (int xs : flower[b]) {
      for (int x = 1; x <= n_x; ++x)
        if (g[b][x].w == 0 || e_delta(g[xs][x]) < e_delta(g[b][x])) {
          g[b][x] = g[xs][x];
          g[x][b] = g[x][xs];
        }
      for (int x = 1; x <= n; ++x)
        if (flower_from[xs][x]) flower_from[b][x] = xs;
    }
    set_slack(b);
  }

  void expand_blossom(int b) {
    for (int i : flower[b]) set_st(i, i);
    const int xr = flower_from[b][g[b][pa[b]].u];
    const int pr = get_pr(b, xr);
    for (int i = 0; i < pr; i += 2) {
      const int xs = flower[b][i], xns = flower[b][i + 1];
      pa[xs] = g[xns][xs].u;
      S[xs] = 1;
      S[xns] = 0;
      slack[xs] = 0;
      set_slack(xns);
      q_push(xns);
    }
    S[xr] = 1;
    pa[xr] = pa[b];
    for (std::size_t i = pr + 1; i < flower[b].size(); ++i) {
      const int xs = flower[b][i];
      S[xs] = -1;
      set_slack(xs);
    }
    st[b] = 0;
  }

  bool on_found_edge(const Edge& e) {
    const int u = st[e.u], v = st[e.v];
    if (S[v] == -1) {
      pa[v] = e.u;
      S[v] = 1;
      const int nu = st[match[v]];
      slack[v] = slack[nu] = 0;
      S[nu] = 0;
      q_push(nu);
    } else if (S[v] == 0) {
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

  bool matching_phase() {
    std::fill(S.begin() + 1, S.begin() + n_x + 1, -1);
    std::fill(slack.begin() + 1, slack.begin() + n_x + 1, 0);
    q.clear();
    for (int x = 1; x <= n_x; ++x)
      if (st[x] == x && !match[x]) {
        pa[x] = 0;
        S[x] = 0;
        q_push(x);
      }
    if (q.empty()) return false;

    while (true) {
      while (!q.empty()) {
        const int u = q.front();
        q.pop_front();
        if (S[st[u]] == 1) continue;
        for (int v = 1; v <= n; ++v)
          if (g[u][v].w > 0 && st[u] != st[v]) {
            if (e_delta(g[u][v]) == 0) {
              if (on_found_edge(g[u][v])) return true;
            } else {
              update_slack(u, st[v]);
            }
          }
      }
      ll d = std::numeric_limits<ll>::max();
      for (int u = 1; u <= n; ++u)
        if (S[st[u]] == 0) d = std::min(d, lab[u]);
      for (int b = n + 1; b <= n_x; ++b)
        if (st[b] == b && S[b] == 1) d = std::min(d, lab[b] / 2);
      for (int x = 1; x <= n_x; ++x)
        if (st[x] == x && slack[x]) {
          if (S[x] == -1)
            d = std::min(d, e_delta(g[slack[x]][x]));
          else if (S[x] == 0)
            d = std::min(d, e_delta(g[slack[x]][x]) / 2);
        }
      if (d == std::numeric_limits<ll>::max()) return false;
      for (int u = 1; u <= n; ++u) {
        if (S[st[u]] == 0)
          lab[u] -= d;
        else if (S[st[u]] == 1)
          lab[u] += d;
      }
      for (int b = n + 1; b <= n_x; ++b)
        if (st[b] == b) {
          if (S[b] == 0)
            lab[b] += 2 * d;
          else if (S[b] == 1)
            lab[b] -= 2 * d;
        }
      q.clear();
      for (int x = 1; x <= n_x; ++x)
        if (st[x] == x && slack[x] && st[slack[x]] != x &&
            e_delta(g[slack[x]][x]) == 0)
          if (on_found_edge(g[slack[x]][x])) return true;
      for (int b = n + 1; b <= n_x; ++b)
        if (st[b] == b && S[b] == 1 && lab[b] == 0) expand_blossom(b);
      // an outer label at zero means no positive-gain augmenting path is
      // left for this phase; with positive complete weights that only
      // happens once the matching is already maximum
      for (int u = 1; u <= n; ++u)
        if (S[st[u]] == 0 && lab[u] == 0) return false;
    }
  }
};

}  // namespace

std::vector<std::pair<int, int>> min_weight_perfect_matching(
    const std::vector<std::vector<std::int64_t>>& weights) {
  const int n = int(weights.size());
  if (n % 2 != 0) throw std::invalid_argument("perfect matching needs an even vertex count");
  if (n == 0) return {};
  for (const auto& row : weights)
    if (int(row.size()) != n) throw std::invalid_argument("weight matrix must be square");

  // flip minimization into maximization; doubling keeps the duals integral
  // and the +1 offset keeps every edge weight positive (0 means "no edge")
  std::int64_t w_max = 0;
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j)
      if (i != j) {
        if (weights[i][j] < 0) throw std::invalid_argument("weights must be non-negative");
        w_max = std::max(w_max, weights[i][j]);
      }
  std::vector<std::vector<ll>> flipped(n, std::vector<ll>(n, 0));
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j)
      if (i != j) flipped[i][j] = 2 * (w_max + 1 - weights[i][j]);

  const std::vector<int> match = Blossom(flipped).solve();
  std::vector<std::pair<int, int>> pairs;
  for (int u = 1; u <= n; ++u)
    if (match[u] > u) pairs.emplace_back(u - 1, match[u] - 1);
  if (int(pairs.size()) != n / 2)
    throw std::runtime_error("matching did not cover all vertices");
  return pairs;
}

std::int64_t matching_weight(const std::vector<std::pair<int, int>>& pairs,
                             const std::vector<std::vector<std::int64_t>>& weights) {
  std::int64_t total = 0;
  for (const auto& [a, b] : pairs) total += weights[a][b];
  return total;
}

}  // namespace gkpft
