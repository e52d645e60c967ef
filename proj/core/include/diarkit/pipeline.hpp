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

#include <map>
#include <optional>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "diarkit/formats.hpp"
#include "diarkit/plda.hpp"
#include "diarkit/resegmentation.hpp"

namespace diarkit::pipeline {

// Energy fraction the baseline keeps in recording-dependent PCA.
inline constexpr double kBaselineEnergy = 0.30;

// One recording's sub-segment embeddings in time order.
struct Recording {
  std::string id;
  Eigen::MatrixXd segments;  // T x D, preprocessed for the PLDA model
  std::vector<Region> spans;
};

// Groups a segment table by recording; rows are length-normalised when the
// model was trained that way.
std::vector<Recording> recordings_from_table(const SegmentTable& table,
                                             bool length_normalize);

struct RunOptions {
  bool reseg = false;
  reseg::VbConfig vb;
};

struct RecordingOutcome {
  Annotation hypothesis;
  std::size_t n_clusters = 0;
  std::vector<double> elbo_trace;
};

// Turns per-segment labels into a hypothesis: overlapping neighbours are
// split at the midpoint of their overlap and contiguous equal labels merge.
Annotation labels_to_annotation(const std::string& recording_id,
                                const std::vector<Region>& spans,
                                const std::vector<std::size_t>& labels);

// score matrix -> AHC -> optional VB-HMM for a single recording. Speakers
// are named "spk<k>".
RecordingOutcome diarize_recording(const plda::Model& model,
                                   const Recording& recording, double threshold,
                                   double energy, const RunOptions& opts);

// Same over a group of recordings, processed concurrently.
std::map<std::string, RecordingOutcome> run_config(
    const std::vector<Recording>& recordings, const plda::Model& model,
    double threshold, double energy, const RunOptions& opts);

enum class Mode { baseline, domain_threshold, domain_threshold_and_pca };

Mode parse_mode(const std::string& text);  // "B", "M1", "M2"
std::string to_string(Mode mode);

// B: fallback profile at the baseline energy. M1: the domain's threshold at
// the baseline energy. M2: the domain's profile as tuned. Unknown domains
// use the fallback; the returned flag says whether that happened.
std::pair<DomainProfile, bool> select_profile(
    const ProfileSet& profiles, Mode mode,
    const std::optional<std::string>& domain);

}  // namespace diarkit::pipeline
