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
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "diarkit/formats.hpp"

// Diarization error rate and Jaccard error rate, overlap-aware, restricted
// to scoring regions, with one optimal speaker mapping per recording.
namespace diarkit::metrics {

// ref speaker -> hyp speaker, one-to-one, only pairs with positive overlap.
using Mapping = std::map<std::string, std::string>;

// Per speaker, the sorted disjoint union of its turns clipped to regions.
std::map<std::string, std::vector<Region>> speaker_times(
    const Annotation& annotation, const ScoringRegions& regions);

// Solves min-cost assignment on a rows x cols matrix (rows <= cols); returns
// the column assigned to each row.
std::vector<std::size_t> hungarian(const std::vector<std::vector<double>>& cost);

// Maximises total ref/hyp overlap inside the regions. Among optimal mappings
// the first ref speaker (by name) takes the first-named hyp speaker that
// still allows the optimum, and so on; leaving a ref speaker unmapped is the
// last resort.
Mapping optimal_mapping(const Annotation& ref, const Annotation& hyp,
                        const ScoringRegions& regions);

struct DerComponents {
  double miss = 0.0;
  double false_alarm = 0.0;
  double confusion = 0.0;
  double total_ref = 0.0;

  // Throws when total_ref is zero.
  double der() const;
};

DerComponents compute_der(const Annotation& ref, const Annotation& hyp,
                          const ScoringRegions& regions, const Mapping& mapping);

struct JerResult {
  std::map<std::string, double> per_speaker;
  // Mean over ref speakers; nullopt when there are none.
  std::optional<double> jer;
};

JerResult compute_jer(const Annotation& ref, const Annotation& hyp,
                      const ScoringRegions& regions, const Mapping& mapping);

// Removes +-collar seconds around every ref turn boundary from the regions.
ScoringRegions apply_collar(const ScoringRegions& regions, const Annotation& ref,
                            double collar);

struct RecordingScore {
  DerComponents der;
  JerResult jer;
  Mapping mapping;
  bool der_defined = false;
};

struct ScoreReport {
  double der = 0.0;
  double jer = 0.0;
  double miss = 0.0;
  double false_alarm = 0.0;
  double confusion = 0.0;
  double total_ref = 0.0;
  std::size_t n_ref_speakers = 0;
  std::map<std::string, RecordingScore> per_recording;
  std::vector<std::string> warnings;
};

struct ScoreOptions {
  double collar = 0.0;
};

// Scores every ref recording; a missing hypothesis scores as empty, a
// missing UEM entry falls back to the ref extent (with a warning). A hyp
// recording unknown to the reference is a ValidationError.
ScoreReport score_report(const AnnotationSet& ref, const AnnotationSet& hyp,
                         const RegionSet* uem, const ScoreOptions& opts = {});

std::string to_json(const ScoreReport& report);
// Columns: recording_id, der, jer, miss, fa, conf, total_ref; last row "ALL".
std::string to_csv(const ScoreReport& report);

}  // namespace diarkit::metrics
