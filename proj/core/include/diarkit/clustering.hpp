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

#pragma once

#include <cstddef>
#include <vector>

#include <Eigen/Dense>

namespace diarkit::clustering {

struct Merge {
  // Clusters are named by their smallest member index; a < b.
  std::size_t a = 0;
  std::size_t b = 0;
  double score = 0.0;  // average linkage at the time of the merge
};

struct Assignment {
  // Contiguous ids in [0, n_clusters), numbered by first member segment.
  std::vector<std::size_t> labels;
  std::size_t n_clusters = 0;
  std::vector<Merge> merge_trace;
};

// Full average-linkage merge sequence (n - 1 merges). Highest average
// pairwise score merges first; ties go to the smallest (a, b). The diagonal
// is ignored. Throws ValidationError on NaN or asymmetry above 1e-9.
std::vector<Merge> dendrogram(const Eigen::MatrixXd& scores);

// Applies the first merges of `merges` up to (excluding) the first whose
// score is below `threshold`.
Assignment cut(std::size_t n, const std::vector<Merge>& merges,
               double threshold);

// Agglomerative clustering that stops once the best linkage drops below
// `threshold`. Equivalent to cut(n, dendrogram(scores), threshold).
Assignment ahc_cluster(const Eigen::MatrixXd& scores, double threshold);

}  // namespace diarkit::clustering
