#include "dcct/clustering.hpp"

#include <algorithm>
#include <cmath>
#include <deque>
#include <limits>
#include <numeric>
#include <stdexcept>

#include "dcct/rng.hpp"

namespace dcct {

int ClusterResult::num_outliers() const {
    return static_cast<int>(
        std::count(assignment.begin(), assignment.end(), -1));
}

ClusterResult dbscan(const Matrix& dist, double eps, int min_pts) {
    if (eps <= 0) throw std::invalid_argument("eps must be > 0");
    if (min_pts < 1) throw std::invalid_argument("min_pts must be >= 1");
    const int n = static_cast<int>(dist.rows());

    std::vector<std::vector<int>> neighbors(n);
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j)
            if (dist(i, j) <= eps) neighbors[i].push_back(j);  // includes self

    ClusterResult res;
    res.assignment.assign(n, -1);
    std::vector<bool> visited(n, false);
    int next_label = 0;

    for (int i = 0; i < n; ++i) {
        if (visited[i]) continue;
        visited[i] = true;
        if (static_cast<int>(neighbors[i].size()) < min_pts) continue;

        int label = next_label++;
        res.assignment[i] = label;
        std::deque<int> frontier(neighbors[i].begin(), neighbors[i].end());
        while (!frontier.empty()) {
            int p = frontier.front();
            frontier.pop_front();
            if (res.assignment[p] == -1) res.assignment[p] = label;
            if (visited[p]) continue;
            visited[p] = true;
            if (static_cast<int>(neighbors[p].size()) >= min_pts)
                frontier.insert(frontier.end(), neighbors[p].begin(),
                                neighbors[p].end());
        }
    }
    res.num_clusters = next_label;
    return res;
}

ClusterResult kmeans(const Matrix& embeddings, int k, std::uint64_t seed) {
    const int n = static_cast<int>(embeddings.rows());
    if (k < 1 || k > n) throw std::invalid_argument("need 1 <= k <= n");
    Rng rng(seed * 0xbf58476d1ce4e5b9ULL + 11);

    // k-means++ seeding.
    Matrix centroids(k, embeddings.cols());
    std::vector<double> d2(n, std::numeric_limits<double>::infinity());
    int first = rng.uniform_int(n);
    centroids.row(0) = embeddings.row(first);
    for (int c = 1; c < k; ++c) {
        double total = 0.0;
        for (int i = 0; i < n; ++i) {
            double d = (embeddings.row(i) - centroids.row(c - 1)).squaredNorm();
            d2[i] = std::min(d2[i], d);
            total += d2[i];
        }
        int pick = 0;
        if (total > 0) {
            double target = rng.uniform() * total;
            double acc = 0.0;
            for (int i = 0; i < n; ++i) {
                acc += d2[i];
                if (acc >= target) {
                    pick = i;
                    break;
                }
            }
        } else {
            pick = rng.uniform_int(n);
        }
        centroids.row(c) = embeddings.row(pick);
    }

    std::vector<int> assignment(n, -1);
    for (int iter = 0; iter < 100; ++iter) {
        bool changed = false;
        for (int i = 0; i < n; ++i) {
            int best = 0;
            double best_d = (embeddings.row(i) - centroids.row(0)).squaredNorm();
            for (int c = 1; c < k; ++c) {
                double d = (embeddings.row(i) - centroids.row(c)).squaredNorm();
                if (d < best_d) {
                    best_d = d;
                    best = c;
                }
            }
            if (assignment[i] != best) {
                assignment[i] = best;
                changed = true;
            }
        }
        if (!changed && iter > 0) break;

        Matrix sums = Matrix::Zero(k, embeddings.cols());
        std::vector<int> counts(k, 0);
        for (int i = 0; i < n; ++i) {
            sums.row(assignment[i]) += embeddings.row(i);
            ++counts[assignment[i]];
        }
        for (int c = 0; c < k; ++c) {
            if (counts[c] > 0) {
                centroids.row(c) = sums.row(c) / counts[c];
            } else {
                // Reseed an empty cluster from the farthest point.
                int far = 0;
                double far_d = -1.0;
                for (int i = 0; i < n; ++i) {
                    double d = (embeddings.row(i) -
                                centroids.row(assignment[i])).squaredNorm();
                    if (d > far_d) {
                        far_d = d;
                        far = i;
                    }
                }
                centroids.row(c) = embeddings.row(far);
            }
        }
    }

    ClusterResult res;
    res.assignment = std::move(assignment);
    // Compact labels in case some cluster ended empty.
    std::vector<int> remap(k, -1);
    int next = 0;
    for (int& a : res.assignment) {
        if (remap[a] == -1) remap[a] = next++;
        a = remap[a];
    }
    res.num_clusters = next;
    return res;
}

namespace {

inline double plogp(double x) { return x > 0 ? x * std::log2(x) : 0.0; }

// Weighted undirected graph in adjacency-list form with collapsed self-loops.
struct Graph {
    std::vector<std::vector<std::pair<int, double>>> adj;  // no self entries
    std::vector<double> self_loop;  // internal weight collapsed into the node
    std::vector<double> strength;   // sum of incident weights + 2*self_loop
    double total_weight = 0.0;      // sum over edges, each counted once

    int size() const { return static_cast<int>(adj.size()); }
};

// Module bookkeeping for the map equation: L is evaluated from per-module
// strength sums and exit weights, plus a partition-independent node term.
struct Partition {
    std::vector<int> module_of;
    std::vector<double> strength_sum;  // S_m
    std::vector<double> internal;      // intra-module weight incl. self-loops

    double two_w = 0.0;

    double exit_weight(int m) const {
        return strength_sum[m] - 2.0 * internal[m];
    }

    // Partition-dependent part of the map equation.
    double module_terms() const {
        double q_tot = 0.0, sum_plogp_q = 0.0, sum_plogp_qp = 0.0;
        for (size_t m = 0; m < strength_sum.size(); ++m) {
            if (strength_sum[m] <= 0) continue;
            double q = exit_weight(m) / two_w;
            q_tot += q;
            sum_plogp_q += plogp(q);
            sum_plogp_qp += plogp(q + strength_sum[m] / two_w);
        }
        return plogp(q_tot) - 2.0 * sum_plogp_q + sum_plogp_qp;
    }
};

Partition singleton_partition(const Graph& g) {
    Partition p;
    int n = g.size();
    p.module_of.resize(n);
    std::iota(p.module_of.begin(), p.module_of.end(), 0);
    p.strength_sum = g.strength;
    p.internal = g.self_loop;
    p.two_w = 2.0 * g.total_weight;
    return p;
}

// One pass of local moving in the given node order; returns the improvement.
double local_moving(const Graph& g, Partition& p,
                    const std::vector<int>& order) {
    double gained = 0.0;
    bool improved = true;
    while (improved) {
        improved = false;
        for (int i : order) {
            int a = p.module_of[i];
            // Weight from i to each neighboring module.
            std::vector<std::pair<int, double>> mod_weight;
            for (const auto& [j, w] : g.adj[i]) {
                int m = p.module_of[j];
                auto it = std::find_if(mod_weight.begin(), mod_weight.end(),
                                       [&](auto& mw) { return mw.first == m; });
                if (it == mod_weight.end())
                    mod_weight.emplace_back(m, w);
                else
                    it->second += w;
            }
            double w_ia = 0.0;
            for (auto& [m, w] : mod_weight)
                if (m == a) w_ia = w;
            // Also consider isolating i into a fresh module.
            p.strength_sum.push_back(0.0);
            p.internal.push_back(0.0);
            mod_weight.emplace_back(static_cast<int>(p.strength_sum.size()) - 1,
                                    0.0);

            double base = p.module_terms();
            double best_gain = 0.0;
            int best_mod = a;
            double best_w = w_ia;
            for (const auto& [b, w_ib] : mod_weight) {
                if (b == a) continue;
                // Tentatively move i: a loses it, b gains it.
                p.strength_sum[a] -= g.strength[i];
                p.internal[a] -= g.self_loop[i] + w_ia;
                p.strength_sum[b] += g.strength[i];
                p.internal[b] += g.self_loop[i] + w_ib;
                double gain = base - p.module_terms();
                p.strength_sum[a] += g.strength[i];
                p.internal[a] += g.self_loop[i] + w_ia;
                p.strength_sum[b] -= g.strength[i];
                p.internal[b] -= g.self_loop[i] + w_ib;
                if (gain > best_gain + 1e-15) {
                    best_gain = gain;
                    best_mod = b;
                    best_w = w_ib;
                }
            }
            int spare = static_cast<int>(p.strength_sum.size()) - 1;
            if (best_mod != a && best_gain > 1e-10) {
                p.strength_sum[a] -= g.strength[i];
                p.internal[a] -= g.self_loop[i] + w_ia;
                p.strength_sum[best_mod] += g.strength[i];
                p.internal[best_mod] += g.self_loop[i] + best_w;
                p.module_of[i] = best_mod;
                gained += best_gain;
                improved = true;
            }
            if (best_mod != spare) {
                p.strength_sum.pop_back();
                p.internal.pop_back();
            }
        }
    }
    return gained;
}

// Collapse modules into supernodes.
Graph aggregate(const Graph& g, const std::vector<int>& module_of,
                std::vector<int>& compact) {
    int max_mod = 0;
    for (int m : module_of) max_mod = std::max(max_mod, m);
    compact.assign(static_cast<size_t>(max_mod) + 1, -1);
    int next = 0;
    for (size_t i = 0; i < module_of.size(); ++i) {
        if (compact[module_of[i]] == -1) compact[module_of[i]] = next++;
    }
    // compact maps old module id -> supernode id (indexed by module id)
    std::vector<int> node_super(module_of.size());
    for (size_t i = 0; i < module_of.size(); ++i)
        node_super[i] = compact[module_of[i]];

    Graph h;
    h.adj.resize(next);
    h.self_loop.assign(next, 0.0);
    h.strength.assign(next, 0.0);
    h.total_weight = g.total_weight;
    std::vector<std::vector<double>> acc(next, std::vector<double>(next, 0.0));
    for (int i = 0; i < g.size(); ++i) {
        int si = node_super[i];
        h.self_loop[si] += g.self_loop[i];
        for (const auto& [j, w] : g.adj[i]) {
            int sj = node_super[j];
            if (si == sj)
                h.self_loop[si] += w / 2.0;  // each intra edge seen twice
            else
                acc[si][sj] += w;
        }
    }
    for (int a = 0; a < next; ++a)
        for (int b = 0; b < next; ++b)
            if (acc[a][b] > 0) h.adj[a].emplace_back(b, acc[a][b]);
    for (int a = 0; a < next; ++a) {
        h.strength[a] = 2.0 * h.self_loop[a];
        for (const auto& [_, w] : h.adj[a]) h.strength[a] += w;
    }
    compact = node_super;  // return node -> supernode
    return h;
}

// Louvain-style optimization of the map equation for one node order; returns
// the final partition-dependent score and fills labels (per original node).
double optimize_once(const Graph& g0, std::uint64_t order_seed,
                     std::vector<int>& labels) {
    Graph g = g0;
    int n0 = g0.size();
    std::vector<int> node_module(n0);
    std::iota(node_module.begin(), node_module.end(), 0);

    while (true) {
        Partition p = singleton_partition(g);
        std::vector<int> order(g.size());
        std::iota(order.begin(), order.end(), 0);
        if (order_seed != 0) {
            Rng rng(order_seed);
            rng.shuffle(order);
        }
        double gained = local_moving(g, p, order);

        std::vector<int> node_super;
        Graph h = aggregate(g, p.module_of, node_super);
        for (int i = 0; i < n0; ++i)
            node_module[i] = node_super[node_module[i]];
        if (gained <= 1e-10 || h.size() == g.size()) {
            labels = node_module;
            Partition final_p = singleton_partition(h);
            return final_p.module_terms();
        }
        g = std::move(h);
    }
}

}  // namespace

double map_equation(const Matrix& adjacency, const std::vector<int>& modules) {
    const int n = static_cast<int>(adjacency.rows());
    double two_w = adjacency.sum();
    if (two_w <= 0) return 0.0;

    int K = 0;
    for (int m : modules) K = std::max(K, m + 1);
    std::vector<double> s_sum(K, 0.0), exit(K, 0.0);
    double node_term = 0.0;
    for (int i = 0; i < n; ++i) {
        double s = adjacency.row(i).sum();
        node_term -= plogp(s / two_w);
        if (modules[i] < 0) continue;
        s_sum[modules[i]] += s;
        for (int j = 0; j < n; ++j)
            if (modules[j] != modules[i]) exit[modules[i]] += adjacency(i, j);
    }
    double q_tot = 0.0, sum_q = 0.0, sum_qp = 0.0;
    for (int m = 0; m < K; ++m) {
        double q = exit[m] / two_w;
        q_tot += q;
        sum_q += plogp(q);
        sum_qp += plogp(q + s_sum[m] / two_w);
    }
    return plogp(q_tot) - 2.0 * sum_q + sum_qp + node_term;
}

ClusterResult infomap(const Matrix& dist, double psi) {
    if (psi <= 0 || psi > 1) throw std::invalid_argument("psi must be in (0,1]");
    const int n = static_cast<int>(dist.rows());

    Graph g;
    g.adj.resize(n);
    g.self_loop.assign(n, 0.0);
    g.strength.assign(n, 0.0);
    for (int i = 0; i < n; ++i) {
        for (int j = 0; j < n; ++j) {
            if (j == i) continue;
            if (dist(i, j) < psi) {
                double w = 1.0 - dist(i, j);
                g.adj[i].emplace_back(j, w);
                g.strength[i] += w;
                if (j > i) g.total_weight += w;
            }
        }
    }

    ClusterResult res;
    res.assignment.assign(n, -1);
    if (g.total_weight <= 0) {
        res.num_clusters = 0;
        return res;
    }

    // Deterministic restarts over node orderings; keep the best partition.
    std::vector<int> best_labels;
    double best_score = std::numeric_limits<double>::infinity();
    const std::uint64_t order_seeds[] = {0, 101, 202, 303, 404, 505, 606, 707};
    for (std::uint64_t s : order_seeds) {
        std::vector<int> labels;
        double score = optimize_once(g, s, labels);
        if (score < best_score - 1e-12) {
            best_score = score;
            best_labels = labels;
        }
    }

    // Isolated nodes stay outliers; compact the remaining labels.
    std::vector<int> remap;
    int next = 0;
    for (int i = 0; i < n; ++i) {
        if (g.strength[i] <= 0) continue;
        int m = best_labels[i];
        if (m >= static_cast<int>(remap.size())) remap.resize(m + 1, -1);
        if (remap[m] == -1) remap[m] = next++;
        res.assignment[i] = remap[m];
    }
    res.num_clusters = next;
    return res;
}

std::optional<double> davies_bouldin(const Matrix& embeddings,
                                     const std::vector<int>& assignment) {
    int K = 0;
    for (int a : assignment) K = std::max(K, a + 1);
    if (K < 2) return std::nullopt;

    const int d = static_cast<int>(embeddings.cols());
    Matrix centroids = Matrix::Zero(K, d);
    std::vector<int> counts(K, 0);
    for (size_t i = 0; i < assignment.size(); ++i) {
        if (assignment[i] < 0) continue;
        centroids.row(assignment[i]) += embeddings.row(static_cast<int>(i));
        ++counts[assignment[i]];
    }
    for (int k = 0; k < K; ++k) {
        if (counts[k] == 0) return std::nullopt;  // ill-formed result
        centroids.row(k) /= counts[k];
    }

    std::vector<double> scatter(K, 0.0);
    for (size_t i = 0; i < assignment.size(); ++i) {
        if (assignment[i] < 0) continue;
        scatter[assignment[i]] +=
            (embeddings.row(static_cast<int>(i)) - centroids.row(assignment[i]))
                .norm();
    }
    for (int k = 0; k < K; ++k) scatter[k] /= counts[k];

    double total = 0.0;
    for (int i = 0; i < K; ++i) {
        double worst = 0.0;
        for (int j = 0; j < K; ++j) {
            if (j == i) continue;
            double d_ij = (centroids.row(i) - centroids.row(j)).norm();
            if (d_ij <= 0) continue;
            worst = std::max(worst, (scatter[i] + scatter[j]) / d_ij);
        }
        total += worst;
    }
    return total / K;
}

PseudoLabels pseudo_labels(const ClusterResult& result) {
    PseudoLabels out;
    std::vector<int> remap;
    for (size_t i = 0; i < result.assignment.size(); ++i) {
        int a = result.assignment[i];
        if (a < 0) continue;
        if (a >= static_cast<int>(remap.size())) remap.resize(a + 1, -1);
        if (remap[a] == -1) remap[a] = out.num_clusters++;
        out.kept.push_back(static_cast<int>(i));
        out.labels.push_back(remap[a]);
    }
    return out;
}

}  // namespace dcct
