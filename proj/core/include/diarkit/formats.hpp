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
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

namespace diarkit {

// A speaker-labelled interval of one recording, in seconds.
struct Turn {
  std::string recording_id;
  double onset = 0.0;
  double duration = 0.0;
  std::string speaker;

  double offset() const { return onset + duration; }
  bool operator==(const Turn&) const = default;
};

// All turns of one recording, kept sorted by (onset, speaker, duration).
struct Annotation {
  std::string recording_id;
  std::vector<Turn> turns;

  void sort();
  bool operator==(const Annotation&) const = default;
};

using AnnotationSet = std::map<std::string, Annotation>;

struct Region {
  double onset = 0.0;
  double offset = 0.0;

  double duration() const { return offset - onset; }
  bool operator==(const Region&) const = default;
};

// Sorted, non-overlapping [onset, offset) intervals of one recording.
struct ScoringRegions {
  std::string recording_id;
  std::vector<Region> regions;

  double total() const;
  bool operator==(const ScoringRegions&) const = default;
};

using RegionSet = std::map<std::string, ScoringRegions>;

struct UtteranceEmbedding {
  std::string utterance_id;
  std::optional<std::string> domain;
  std::vector<double> vector;

  bool operator==(const UtteranceEmbedding&) const = default;
};

struct SegmentEmbedding {
  std::string recording_id;
  double onset = 0.0;
  double offset = 0.0;
  std::vector<double> vector;

  bool operator==(const SegmentEmbedding&) const = default;
};

struct UtteranceTable {
  std::size_t dim = 0;
  std::vector<UtteranceEmbedding> rows;

  bool operator==(const UtteranceTable&) const = default;
};

struct SegmentTable {
  std::size_t dim = 0;
  std::vector<SegmentEmbedding> rows;

  // Rows grouped by recording, each group in time order.
  std::map<std::string, std::vector<SegmentEmbedding>> by_recording() const;
  bool operator==(const SegmentTable&) const = default;
};

enum class EmbeddingForm { utterance, segment };

using EmbeddingTable = std::variant<UtteranceTable, SegmentTable>;

struct DomainProfile {
  std::string domain;
  double ahc_threshold = 0.0;
  double pca_energy = 0.30;

  bool operator==(const DomainProfile&) const = default;
};

struct ProfileSet {
  std::map<std::string, DomainProfile> domains;
  std::optional<DomainProfile> fallback;

  bool operator==(const ProfileSet&) const = default;
};

// Throws ValidationError when an invariant of the type does not hold.
void validate(const Turn& turn);
void validate(const ScoringRegions& regions);
void validate(const DomainProfile& profile);

// RTTM: "SPEAKER <rec> <chan> <onset> <dur> <NA> <NA> <spk> <NA> <NA>".
AnnotationSet parse_rttm(std::string_view text);
std::string write_rttm(const AnnotationSet& annotations);

// UEM: "<rec> <chan> <onset> <offset>".
RegionSet parse_uem(std::string_view text);
std::string write_uem(const RegionSet& regions);

// Embedding tables are whitespace-separated text; '#' starts a comment.
EmbeddingTable parse_embeddings(std::string_view text, EmbeddingForm form);
UtteranceTable parse_utterance_embeddings(std::string_view text);
SegmentTable parse_segment_embeddings(std::string_view text);
std::string write_embeddings(const UtteranceTable& table);
std::string write_embeddings(const SegmentTable& table);

// CSV with a header row: first column is the id, the column named "domain"
// holds the label. Other columns are ignored.
std::map<std::string, std::string> parse_domain_map(std::string_view text);
std::string write_domain_map(const std::map<std::string, std::string>& map);

ProfileSet read_profiles(std::string_view json_text);
std::string write_profiles(const ProfileSet& profiles);

// Shortest decimal text that parses back to the same double.
std::string format_double(double value);

std::string read_text_file(const std::filesystem::path& path);
// Writes through a sibling temporary file and renames it into place.
void write_text_file_atomic(const std::filesystem::path& path,
                            std::string_view content);

}  // namespace diarkit
