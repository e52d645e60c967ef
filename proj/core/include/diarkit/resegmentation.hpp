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

#include "diarkit/plda.hpp"

// VB-HMM refinement of first-pass speaker labels over sub-segment embeddings.
namespace diarkit::reseg {

struct VbConfig {
  double loop_probability = 0.9;
  double ll_scale = 0.3;
  std::size_t max_iters = 10;
  double elbo_tol = 1e-4;
  double min_speaker_posterior = 0.05;
};

void validate(const VbConfig& cfg);

struct ForwardBackward {
  Eigen::MatrixXd posteriors;  // T x S
  double log_evidence = 0.0;
};

// Exact HMM smoothing in log space: uniform initial state, stay with
// probability loop_probability, otherwise switch uniformly to another state.
ForwardBackward forward_backward(const Eigen::MatrixXd& log_emissions,
                                 double loop_probability);

struct VbResult {
  std::vector<std::size_t> labels;  // indices into the input speaker set
  Eigen::MatrixXd posteriors;       // T x S; pruned speakers are zero columns
  std::vector<double> elbo_trace;   // one value per completed iteration
  double final_elbo = 0.0;          // after pruning and the last E-step
  std::vector<std::size_t> kept_speakers;
};

// segments: T x D rows in time order, in the original embedding space;
// they and the model are projected with `proj` before inference.
// init_labels: first-pass speaker index per segment.
VbResult vb_resegment(const Eigen::MatrixXd& segments,
                      const std::vector<std::size_t>& init_labels,
                      const plda::Model& model,
                      const plda::PcaProjection& proj, const VbConfig& cfg);

// Same, with segments already projected and the model already in that space.
VbResult vb_resegment_projected(const Eigen::MatrixXd& projected_segments,
                                const std::vector<std::size_t>& init_labels,
                                const plda::Model& projected_model,
                                const VbConfig& cfg);

}  // namespace diarkit::reseg
