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

#include "diarkit/formats.hpp"

// Deterministic synthetic corpora: domain-labelled embeddings drawn from
// x = domain_mean + speaker_latent + noise, with matching RTTM/UEM.
namespace diarkit::synth {

struct SynthConfig {
  std::size_t n_domains = 3;
  std::size_t recordings_per_domain = 4;
  // When non-zero, overrides n_domains * recordings_per_domain; recordings
  // are dealt to domains round-robin.
  std::size_t n_recordings = 0;
  std::size_t min_speakers = 2;
  std::size_t max_speakers = 4;
  std::size_t dim = 16;
  double domain_spread = 3.0;
  double between_scale = 1.0;
  double within_scale = 0.3;
  // Optional per-domain multiplier of within_scale (cycled if shorter).
  std::vector<double> domain_within_factors;
  double min_turn = 2.0;
  double max_turn = 6.0;
  double recording_duration = 60.0;
  double subsegment_hop = 1.0;
  // Fraction of turns followed by a short overlapping interjection by
  // another speaker. 0 keeps references non-overlapping.
  double overlap_fraction = 0.0;
  std::uint64_t seed = 1;
  // Seed for the domain means; 0 means "use seed". Corpora that share it
  // share their domains.
  std::uint64_t domain_seed = 0;
  std::string id_prefix = "rec";

  // Throws ConfigError on an infeasible configuration.
  void validate() const;
};

struct Corpus {
  UtteranceTable utterances;  // one row per recording, labelled
  SegmentTable segments;
  AnnotationSet references;
  RegionSet regions;
  // recording -> domain and number of speakers
  std::map<std::string, std::string> domains;
  std::map<std::string, std::size_t> n_speakers;
  // True speaker per segment row, aligned with segments.rows.
  std::vector<std::string> segment_speakers;
};

std::string domain_name(std::size_t index);

Corpus generate_corpus(const SynthConfig& cfg);

// Columns: recording_id, domain, n_speakers.
std::string truth_csv(const Corpus& corpus);

}  // namespace diarkit::synth
