#include "mango/hac.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <stdexcept>

namespace mango::consolidate {

void validate(const HacParams& params) {
  if (!(params.distance_threshold > 0.0)) {
    throw std::invalid_argument("distance_threshold must be > 0");
  }
}

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

// Upper-triangular condensed storage of squared distances, i < j.
class CondensedMatrix {
public:
  explicit CondensedMatrix(std::size_t n) : n_(n), data_(n * (n - 1) / 2, 0.0) {}

  double& at(std::size_t i, std::size_t j) {
    if (i > j) std::swap(i, j);
    return data_[offset(i) + (j - i - 1)];
  }

private:
  std::size_t offset(std::size_t i) const { return i * (2 * n_ - i - 1) / 2; }

  std::size_t n_;
  std::vector<double> data_;
};

void check_points(std::span<const std::vector<double>> points) {
  if (points.empty()) throw std::invalid_argument("hac_ward needs at least one vector");
  const std::size_t d = points.front().size();
  for (const auto& p : points) {
    if (p.size() != d) throw std::invalid_argument("hac_ward: dimension mismatch");
  }
}

}  // namespace

Dendrogram ward_dendrogram(std::span<const std::vector<double>> points) {
  check_points(points);
  const std::size_t n = points.size();
  Dendrogram out;
  out.leaf_count = n;
  if (n == 1) return out;
  out.merges.reserve(n - 1);

  CondensedMatrix dist(n);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = i + 1; j < n; ++j) {
      double s = 0.0;
      for (std::size_t k = 0; k < points[i].size(); ++k) {
        const double diff = points[i][k] - points[j][k];
        s += diff * diff;
      }
      dist.at(i, j) = s;
    }
  }

  // Slot i holds the cluster whose smallest leaf is i.
  std::vector<bool> active(n, true);
  std::vector<std::size_t> size(n, 1);
  std::vector<std::size_t> node_id(n);
  std::iota(node_id.begin(), node_id.end(), std::size_t{0});

  // Per-row nearest neighbour among active slots with a larger index; lowest index wins ties.
  std::vector<std::size_t> nn(n, n);
  std::vector<double> nn_dist(n, kInf);
  auto rescan_row = [&](std::size_t i) {
    nn[i] = n;
    nn_dist[i] = kInf;
    for (std::size_t j = i + 1; j < n; ++j) {
      if (!active[j]) continue;
      const double d = dist.at(i, j);
      if (d < nn_dist[i]) {
        nn_dist[i] = d;
        nn[i] = j;
      }
    }
  };
  for (std::size_t i = 0; i + 1 < n; ++i) rescan_row(i);

  for (std::size_t step = 0; step + 1 < n; ++step) {
    std::size_t a = n;
    double best = kInf;
    for (std::size_t i = 0; i < n; ++i) {
      if (active[i] && nn[i] < n && nn_dist[i] < best) {
        best = nn_dist[i];
        a = i;
      }
    }
    const std::size_t b = nn[a];
    const double d_ab = best;
    const double na = static_cast<double>(size[a]);
    const double nb = static_cast<double>(size[b]);

    out.merges.push_back({node_id[a], node_id[b], std::sqrt(std::max(0.0, d_ab)), size[a] + size[b]});

    for (std::size_t k = 0; k < n; ++k) {
      if (!active[k] || k == a || k == b) continue;
      const double nk = static_cast<double>(size[k]);
      const double updated =
          ((na + nk) * dist.at(a, k) + (nb + nk) * dist.at(b, k) - nk * d_ab) / (na + nb + nk);
      dist.at(a, k) = std::max(0.0, updated);
    }
    active[b] = false;
    size[a] += size[b];
    node_id[a] = n + step;
    nn[b] = n;
    nn_dist[b] = kInf;

    rescan_row(a);
    for (std::size_t k = 0; k < n; ++k) {
      if (!active[k] || k == a) continue;
      if (nn[k] == a || nn[k] == b) {
        if (k < a || nn[k] == b) rescan_row(k);
        continue;
      }
      if (k < a) {
        const double d = dist.at(k, a);
        if (d < nn_dist[k] || (d == nn_dist[k] && a < nn[k])) {
          nn_dist[k] = d;
          nn[k] = a;
        }
      }
    }
  }
  return out;
}

std::vector<std::size_t> cut_dendrogram(const Dendrogram& dendrogram, double threshold) {
  const std::size_t n = dendrogram.leaf_count;
  // Union-find over leaves; node ids >= n map to a representative leaf.
  std::vector<std::size_t> parent(n);
  std::iota(parent.begin(), parent.end(), std::size_t{0});
  auto find = [&](std::size_t x) {
    while (parent[x] != x) {
      parent[x] = parent[parent[x]];
      x = parent[x];
    }
    return x;
  };
  std::vector<std::size_t> node_leaf(n + dendrogram.merges.size());
  std::iota(node_leaf.begin(), node_leaf.begin() + static_cast<std::ptrdiff_t>(n), std::size_t{0});

  for (std::size_t k = 0; k < dendrogram.merges.size(); ++k) {
    const Merge& m = dendrogram.merges[k];
    if (m.distance > threshold) break;
    const std::size_t ra = find(node_leaf[m.cluster_a]);
    const std::size_t rb = find(node_leaf[m.cluster_b]);
    parent[std::max(ra, rb)] = std::min(ra, rb);
    node_leaf[n + k] = std::min(ra, rb);
  }

  std::vector<std::size_t> labels(n);
  std::vector<std::size_t> label_of_root(n, n);
  std::size_t next = 0;
  for (std::size_t i = 0; i < n; ++i) {
    const std::size_t r = find(i);
    if (label_of_root[r] == n) label_of_root[r] = next++;
    labels[i] = label_of_root[r];
  }
  return labels;
}

std::vector<std::size_t> hac_ward(std::span<const std::vector<double>> points,
                                  const HacParams& params) {
  validate(params);
  return cut_dendrogram(ward_dendrogram(points), params.distance_threshold);
}

std::vector<std::size_t> hac_ward(std::span<const embedding::EmbeddingVector> vectors,
                                  const HacParams& params) {
  std::vector<std::vector<double>> points;
  points.reserve(vectors.size());
  for (const auto& v : vectors) points.push_back(v.values);
  return hac_ward(std::span<const std::vector<double>>(points), params);
}

std::size_t cluster_count(std::span<const std::size_t> labels) {
  if (labels.empty()) return 0;
  return *std::max_element(labels.begin(), labels.end()) + 1;
}

}  // namespace mango::consolidate
