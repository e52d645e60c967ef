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

#include "diarkit/pipeline.hpp"

#include "diarkit/clustering.hpp"
#include "diarkit/error.hpp"
#include "diarkit/parallel.hpp"

namespace diarkit::pipeline {

std::vector<Recording> recordings_from_table(const SegmentTable& table,
                                             bool length_normalize) {
  std::vector<Recording> out;
  for (const auto& [id, rows] : table.by_recording()) {
    Recording rec;
    rec.id = id;
    rec.segments.resize(static_cast<Eigen::Index>(rows.size()),
                        static_cast<Eigen::Index>(table.dim));
    for (std::size_t i = 0; i < rows.size(); ++i) {
      for (std::size_t j = 0; j < table.dim; ++j)
        rec.segments(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) =
            rows[i].vector[j];
      rec.spans.push_back({rows[i].onset, rows[i].offset});
    }
    if (length_normalize) plda::length_normalize_rows(rec.segments);
    out.push_back(std::move(rec));
  }
  return out;
}

Annotation labels_to_annotation(const std::string& recording_id,
                                const std::vector<Region>& spans,
                                const std::vector<std::size_t>& labels) {
  Annotation ann{recording_id, {}};
  const std::size_t n = spans.size();
  std::vector<Region> cut = spans;
  for (std::size_t i = 0; i + 1 < n; ++i) {
    if (cut[i].offset > spans[i + 1].onset) {
      const double mid = 0.5 * (spans[i].offset + spans[i + 1].onset);
      cut[i].offset = mid;
      cut[i + 1].onset = mid;
    }
  }
  for (std::size_t i = 0; i < n; ++i) {
    if (!(cut[i].offset > cut[i].onset)) continue;
    const std::string spk = "spk" + std::to_string(labels[i]);
    if (!ann.turns.empty() && ann.turns.back().speaker == spk &&
        ann.turns.back().offset() == cut[i].onset) {
      ann.turns.back().duration = cut[i].offset - ann.turns.back().onset;
    } else {
      ann.turns.push_back({recording_id, cut[i].onset,
                           cut[i].offset - cut[i].onset, spk});
    }
  }
  ann.sort();
  return ann;
}

RecordingOutcome diarize_recording(const plda::Model& model,
                                   const Recording& recording, double threshold,
                                   double energy, const RunOptions& opts) {
  RecordingOutcome out;
  if (recording.segments.rows() == 0) {
    out.hypothesis.recording_id = recording.id;
    return out;
  }
  auto scored = plda::score_recording(model, recording.segments, energy);
  auto assignment = clustering::ahc_cluster(scored.scores, threshold);
  std::vector<std::size_t> labels = assignment.labels;
  if (opts.reseg) {
    auto vb = reseg::vb_resegment_projected(scored.projected_segments, labels,
                                            scored.projected_model, opts.vb);
    labels = std::move(vb.labels);
    out.elbo_trace = std::move(vb.elbo_trace);
  }
  out.hypothesis = labels_to_annotation(recording.id, recording.spans, labels);
  std::vector<char> seen(assignment.n_clusters, 0);
  for (auto l : labels) seen[l] = 1;
  for (char s : seen) out.n_clusters += s;
  return out;
}

std::map<std::string, RecordingOutcome> run_config(
    const std::vector<Recording>& recordings, const plda::Model& model,
    double threshold, double energy, const RunOptions& opts) {
  std::vector<RecordingOutcome> slots(recordings.size());
  parallel_for(recordings.size(), [&](std::size_t i) {
    slots[i] = diarize_recording(model, recordings[i], threshold, energy, opts);
  });
  std::map<std::string, RecordingOutcome> out;
  for (std::size_t i = 0; i < recordings.size(); ++i)
    out.emplace(recordings[i].id, std::move(slots[i]));
  return out;
}

Mode parse_mode(const std::string& text) {
  if (text == "B") return Mode::baseline;
  if (text == "M1") return Mode::domain_threshold;
  if (text == "M2") return Mode::domain_threshold_and_pca;
  throw ConfigError("unknown mode '" + text + "' (expected B, M1 or M2)");
}

std::string to_string(Mode mode) {
  switch (mode) {
    case Mode::baseline:
      return "B";
    case Mode::domain_threshold:
      return "M1";
    case Mode::domain_threshold_and_pca:
      return "M2";
  }
  return "?";
}

std::pair<DomainProfile, bool> select_profile(
    const ProfileSet& profiles, Mode mode,
    const std::optional<std::string>& domain) {
  const DomainProfile* chosen = nullptr;
  bool fell_back = false;
  if (mode != Mode::baseline && domain) {
    if (auto it = profiles.domains.find(*domain); it != profiles.domains.end())
      chosen = &it->second;
  }
  if (!chosen) {
    if (!profiles.fallback)
      throw ConfigError(domain ? "no profile for domain '" + *domain +
                                     "' and no fallback profile"
                               : std::string("no fallback profile"));
    chosen = &*profiles.fallback;
    fell_back = mode != Mode::baseline;
  }
  DomainProfile p = *chosen;
  if (mode != Mode::domain_threshold_and_pca) p.pca_energy = kBaselineEnergy;
  return {p, fell_back};
}

}  // namespace diarkit::pipeline
