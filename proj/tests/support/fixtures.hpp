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

#include <vector>

#include "diarkit/pipeline.hpp"
#include "diarkit/plda.hpp"
#include "diarkit/synth.hpp"

namespace fixture {

struct Trained {
  diarkit::synth::Corpus corpus;
  diarkit::plda::Model model;
  std::vector<diarkit::pipeline::Recording> recordings;
};

// Generates a corpus, trains PLDA on its own segments with the true speaker
// labels and adapts it on the pooled segments.
Trained trained_corpus(const diarkit::synth::SynthConfig& cfg, bool adapt = true);

// Segment rows of a table as a matrix, optionally length-normalised.
Eigen::MatrixXd segment_matrix(const diarkit::SegmentTable& table, bool length_normalize);

}  // namespace fixture
