// Copyright 2026 The diarkit Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include "diarkit/clustering.hpp"

#include <cmath>
#include <limits>
#include <numeric>
#include <string>

#include "diarkit/error.hpp"

namespace diarkit::clustering {

namespace {

constexpr std::size_t kNone = std::numeric_limits<std::size_t>::max();

void check_scores(const Eigen::MatrixXd& s) {
  if (s.rows() != s.cols())
    throw ValidationError("score matrix is not square");
  for (Eigen::Index i = 0; i < s.rows(); ++i) {
    for (Eigen::Index j = i + 1; j < s.cols(); ++j) {
      if (std::isnan(s(i, j)) || std::isnan(s(j, i)))
        throw ValidationError("score matrix has NaN at (" + std::to_string(i) +
                              ", " + std::to_string(j) + ")");
      if (std::abs(s(i, j) - s(j, i)) > 1e-9)
        throw ValidationError("score matrix is asymmetric at (" +
                              std::to_string(i) + ", " + std::to_string(j) + ")");
    }
  }
}

}  // namespace

std::vector<Merge> dendrogram(const Eigen::MatrixXd& scores) {
  check_scores(scores);
  const auto n = static_cast<std::size_t>(scores.rows());
  // sums(i, j): total pairwise score between clusters i and j (upper part
  // is authoritative). Cluster slots are their smallest member index.
  Eigen::MatrixXd sums = scores;
  std::vector<double> size(n, 1.0);
  std::vector<char> active(n, 1);
  std::vector<std::size_t> best(n, kNone);
  std::vector<double> best_value(n, -std::numeric_limits<double>::infinity());

  auto linkage = [&](std::size_t i, std::size_t j) {
    return sums(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) /
           (size[i] * size[j]);
  };
  // Best partner j > i for row i; ties keep the smallest j.
  auto rescan = [&](std::size_t i) {
    best[i] = kNone;
    best_value[i] = -std::numeric_limits<double>::infinity();
    for (std::size_t j = i + 1; j < n; ++j) {
      if (!active[j]) continue;
      const double v = linkage(i, j);
      if (best[i] == kNone || v > best_value[i]) {
        best[i] = j;
        best_value[i] = v;
      }
    }
  };
  for (std::size_t i = 0; i < n; ++i) rescan(i);

  std::vector<Merge> merges;
  merges.reserve(n > 0 ? n - 1 : 0);
  for (std::size_t step = 0; step + 1 < n; ++step) {
    std::size_t a = kNone;
    for (std::size_t i = 0; i < n; ++i) {
      if (!active[i] || best[i] == kNone) continue;
      if (a == kNone || best_value[i] > best_value[a]) a = i;
    }
    const std::size_t b = best[a];
    merges.push_back({a, b, best_value[a]});

    active[b] = 0;
    for (std::size_t c = 0; c < n; ++c) {
      if (!active[c] || c == a) continue;
      const auto ia = static_cast<Eigen::Index>(a);
      const auto ib = static_cast<Eigen::Index>(b);
      const auto ic = static_cast<Eigen::Index>(c);
      const double merged = sums(ia, ic) + sums(ib, ic);
      sums(ia, ic) = merged;
      sums(ic, ia) = merged;
    }
    size[a] += size[b];

    for (std::size_t i = 0; i < n; ++i) {
      if (!active[i]) continue;
      if (i == a || best[i] == a || best[i] == b) {
        rescan(i);
      } else if (i < a) {
        const double v = linkage(i, a);
        if (v > best_value[i] || (v == best_value[i] && a < best[i])) {
          best[i] = a;
          best_value[i] = v;
        }
      }
    }
  }
  return merges;
}

Assignment cut(std::size_t n, const std::vector<Merge>& merges,
               double threshold) {
  std::vector<std::size_t> parent(n);
  std::iota(parent.begin(), parent.end(), std::size_t{0});
  auto find = [&](std::size_t x) {
    while (parent[x] != x) x = parent[x] = parent[parent[x]];
    return x;
  };
  Assignment out;
  for (const auto& m : merges) {
    if (!(m.score >= threshold)) break;
    parent[find(m.b)] = find(m.a);
    out.merge_trace.push_back(m);
  }
  out.labels.assign(n, kNone);
  std::vector<std::size_t> root_label(n, kNone);
  for (std::size_t i = 0; i < n; ++i) {
    const std::size_t r = find(i);
    if (root_label[r] == kNone) root_label[r] = out.n_clusters++;
    out.labels[i] = root_label[r];
  }
  return out;
}

Assignment ahc_cluster(const Eigen::MatrixXd& scores, double threshold) {
  if (std::isnan(threshold)) throw ValidationError("threshold is NaN");
  const auto n = static_cast<std::size_t>(scores.rows());
  return cut(n, dendrogram(scores), threshold);
}

}  // namespace diarkit::clustering
