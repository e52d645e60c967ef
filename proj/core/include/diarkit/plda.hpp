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

#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include <Eigen/Dense>

// Two-covariance PLDA: x = mean + y + e, y ~ N(0, between), e ~ N(0, within).
namespace diarkit::plda {

using Eigen::MatrixXd;
using Eigen::VectorXd;

struct AdaptationConfig {
  double within_share = 0.75;
  double between_share = 0.25;
};

struct Metadata {
  std::string training_hash;
  std::size_t n_speakers = 0;
  std::size_t n_samples = 0;
  bool length_normalize = true;
  std::optional<AdaptationConfig> adaptation;
};

struct Model {
  VectorXd mean;
  MatrixXd between;
  MatrixXd within;
  Metadata meta;

  Eigen::Index dim() const { return mean.size(); }
};

// Symmetry within 1e-10, matching dimensions, within PD and between PSD.
void validate(const Model& model);

// Adds 1e-8 * trace(reference)/D to the diagonal of cov when its smallest
// eigenvalue is below 1e-12. Returns true if it did.
bool apply_jitter(MatrixXd& cov, const MatrixXd& reference);

// Rescales every row to norm sqrt(D); zero rows are left untouched.
void length_normalize_rows(MatrixXd& rows);

struct TrainResult {
  Model model;
  // Exact marginal log-likelihood after initialisation and each iteration.
  std::vector<double> log_likelihood;
  std::size_t jitter_events = 0;
};

// EM on rows of `samples` (N x D) grouped by speaker label. The mean is the
// global sample mean; only the covariances are iterated.
TrainResult train_em(const MatrixXd& samples,
                     const std::vector<std::string>& speakers,
                     std::size_t iters);

// log p(samples | model) with speaker latents integrated out.
double log_likelihood(const Model& model, const MatrixXd& samples,
                      const std::vector<std::string>& speakers);

// Unsupervised adaptation to pooled unlabelled data (M x D). In the space
// whitened by between+within, every direction whose pooled variance exceeds
// 1 gets the excess added back, split between the two covariances.
Model adapt(const Model& model, const MatrixXd& pooled,
            const AdaptationConfig& cfg);

struct PcaProjection {
  MatrixXd basis;  // k x D, orthonormal rows
  double retained_fraction = 1.0;
  // n < 2 or zero variance: basis is the first unit vector.
  bool degenerate = false;

  Eigen::Index k() const { return basis.rows(); }
};

// Smallest k whose leading eigenvalues of the segments' own covariance
// reach `energy` of the total.
PcaProjection recording_pca(const MatrixXd& segments, double energy);

Model project_model(const Model& model, const PcaProjection& proj);

// Closed-form same/different-speaker log-likelihood ratio. Construction
// precomputes everything that depends only on the model.
class PairScorer {
 public:
  explicit PairScorer(const Model& model);

  double score(const VectorXd& x1, const VectorXd& x2) const;
  // Full symmetric matrix over rows of `points`; diagonal is +inf.
  MatrixXd score_all(const MatrixXd& points) const;

 private:
  VectorXd mean_;
  MatrixXd sum_precision_;   // acts on x1 + x2
  MatrixXd diff_precision_;  // acts on x1 - x2
  double offset_ = 0.0;
};

double score_pair(const Model& model, const VectorXd& x1, const VectorXd& x2);

struct RecordingScores {
  MatrixXd scores;
  PcaProjection projection;
  Model projected_model;
  MatrixXd projected_segments;  // n x k
};

// Recording-dependent PCA, projection of model and segments, pairwise LLRs.
RecordingScores score_recording(const Model& model, const MatrixXd& segments,
                                double energy);
MatrixXd score_matrix(const Model& model, const MatrixXd& segments,
                      double energy);

std::string to_json(const Model& model);
Model model_from_json(std::string_view text);

}  // namespace diarkit::plda
