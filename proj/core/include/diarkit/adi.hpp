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
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "diarkit/formats.hpp"

// Acoustic domain identification: nearest-neighbour classification of
// utterance embeddings by cosine similarity.
namespace diarkit::adi {

// a.b / (|a||b|). Throws DomainError on zero norm or mismatched size.
double cosine_similarity(std::span<const double> a, std::span<const double> b);

struct Model {
  std::size_t dim = 0;
  // Neighbours voting in predict(); 1 is plain nearest neighbour.
  std::size_t k = 1;
  std::vector<std::string> ids;
  std::vector<std::string> labels;
  // Row-major N x dim, rows stored verbatim in fit order.
  std::vector<double> vectors;
  // Cached 1/|row| so predict() does not recompute norms.
  std::vector<double> inv_norms;

  std::size_t size() const { return labels.size(); }
  std::span<const double> row(std::size_t i) const {
    return {vectors.data() + i * dim, dim};
  }
};

struct Prediction {
  std::string domain;
  double similarity = 0.0;
  std::size_t index = 0;  // winning training row
};

// Memorises every labelled row. Rows without a domain or with zero norm are
// rejected with ValidationError.
Model fit(const UtteranceTable& table, std::size_t k = 1);

// Highest cosine wins; equal similarities go to the lexicographically
// smallest label, then the smallest training index. With k > 1 the k best
// rows vote and vote ties go to the smallest label.
Prediction predict(const Model& model, std::span<const double> query);

std::string to_json(const Model& model);
Model model_from_json(std::string_view text);

struct TrialConfig {
  std::size_t n_train = 200;
  std::size_t n_trials = 1000;
  std::uint64_t seed = 0;
  bool require_all_domains_in_train = false;
  std::size_t k = 1;
};

struct DomainTally {
  std::uint64_t correct = 0;
  std::uint64_t tested = 0;
  double accuracy() const {
    return tested ? static_cast<double>(correct) / tested : 0.0;
  }
};

struct Report {
  double mean_accuracy = 0.0;
  double std_accuracy = 0.0;
  std::size_t n_trials = 0;
  std::size_t n_train = 0;
  std::size_t n_test = 0;
  std::vector<double> trial_accuracy;
  // Domains never scored (always in training) are absent.
  std::map<std::string, DomainTally> per_domain;
  std::map<std::pair<std::string, std::string>, std::uint64_t> confusion;
};

// Repeated random train/test splits; see TrialConfig. Trials draw from RNG
// streams derived from (seed, trial index) and are reduced in trial order,
// so the report does not depend on how trials are scheduled.
Report benchmark(const UtteranceTable& table, const TrialConfig& cfg);

std::string to_json(const Report& report);
// Columns: domain, accuracy, n_test.
std::string per_domain_csv(const Report& report);

}  // namespace diarkit::adi
