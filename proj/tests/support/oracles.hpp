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

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "diarkit/formats.hpp"
#include "diarkit/plda.hpp"
#include "diarkit/rng.hpp"

// Slow, obviously-correct reference implementations used by the unit and
// acceptance tests. Nothing here shares code with the library beyond the
// plain data types.
namespace oracle {

using diarkit::Annotation;
using diarkit::ScoringRegions;
using Mapping = std::map<std::string, std::string>;

// 10 ms frame-level scoring. Every time in the inputs must be a multiple of
// 10 ms.
struct FrameScore {
  long long miss = 0;  // frame counts
  long long false_alarm = 0;
  long long confusion = 0;
  long long total_ref = 0;
  double jer = 0.0;  // mean over ref speakers; 0 when there are none
  std::map<std::string, double> jer_per_speaker;
  Mapping mapping;

  double seconds(long long frames) const { return static_cast<double>(frames) / 100.0; }
  double der() const {
    return static_cast<double>(miss + false_alarm + confusion) /
           static_cast<double>(total_ref);
  }
};

// Exhaustive search over every injective partial mapping that pairs only
// speakers with positive overlap. Maximal total overlap wins; among ties
// the mapping whose hyp choices, read in ref-name order, are
// lexicographically smallest wins, with "unmapped" ordered last.
Mapping exhaustive_mapping(const Annotation& ref, const Annotation& hyp,
                           const ScoringRegions& regions);

// Frame-level DER/JER under `mapping`.
FrameScore frame_score(const Annotation& ref, const Annotation& hyp,
                       const ScoringRegions& regions, const Mapping& mapping);

// Frame-level DER/JER under the exhaustive mapping.
FrameScore frame_score(const Annotation& ref, const Annotation& hyp,
                       const ScoringRegions& regions);

// Total ref/hyp overlap (frames) of a mapping.
long long mapped_overlap(const Annotation& ref, const Annotation& hyp,
                         const ScoringRegions& regions, const Mapping& mapping);

// log N(z; 0, cov) by Cholesky.
double mvn_logpdf(const Eigen::VectorXd& z, const Eigen::MatrixXd& cov);

// Same-speaker vs different-speaker log-likelihood ratio from the two
// 2D-dimensional joint Gaussians.
double direct_llr(const diarkit::plda::Model& model, const Eigen::VectorXd& x1,
                  const Eigen::VectorXd& x2);

// Average-linkage AHC recomputing every linkage from scratch at each step.
std::vector<std::size_t> naive_ahc(const Eigen::MatrixXd& scores, double threshold);

struct PathPosteriors {
  Eigen::MatrixXd posteriors;
  double log_evidence = 0.0;
};
// Sums over all S^T state paths.
PathPosteriors enumerate_paths(const Eigen::MatrixXd& log_emissions, double loop);

// Generators for randomized tests.
Annotation random_annotation(diarkit::Rng& rng, const std::string& recording,
                             std::size_t n_speakers, std::size_t n_turns,
                             long long max_frames);
ScoringRegions random_regions(diarkit::Rng& rng, const std::string& recording,
                              long long max_frames);
Eigen::MatrixXd random_spd(diarkit::Rng& rng, Eigen::Index dim, double floor);
Eigen::VectorXd random_vector(diarkit::Rng& rng, Eigen::Index dim, double scale);

// Relative Frobenius error |a - b| / |b|.
double rel_frobenius(const Eigen::MatrixXd& a, const Eigen::MatrixXd& b);

// Samples from the two-covariance model: `n_speakers` latents, `per_speaker`
// observations each. Labels are "s<i>".
struct PldaSample {
  Eigen::MatrixXd x;
  std::vector<std::string> labels;
};
PldaSample sample_plda(diarkit::Rng& rng, const Eigen::VectorXd& mean,
                       const Eigen::MatrixXd& between, const Eigen::MatrixXd& within,
                       std::size_t n_speakers, std::size_t per_speaker);

}  // namespace oracle
