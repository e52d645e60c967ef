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

#include "fixtures.hpp"

namespace fixture {

Eigen::MatrixXd segment_matrix(const diarkit::SegmentTable& table, bool length_normalize) {
  Eigen::MatrixXd x(static_cast<Eigen::Index>(table.rows.size()),
                    static_cast<Eigen::Index>(table.dim));
  for (std::size_t i = 0; i < table.rows.size(); ++i)
    for (std::size_t j = 0; j < table.dim; ++j)
      x(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = table.rows[i].vector[j];
  if (length_normalize) diarkit::plda::length_normalize_rows(x);
  return x;
}

Trained trained_corpus(const diarkit::synth::SynthConfig& cfg, bool adapt) {
  Trained t;
  t.corpus = diarkit::synth::generate_corpus(cfg);
  const Eigen::MatrixXd x = segment_matrix(t.corpus.segments, true);
  t.model = diarkit::plda::train_em(x, t.corpus.segment_speakers, 10).model;
  t.model.meta.length_normalize = true;
  if (adapt) t.model = diarkit::plda::adapt(t.model, x, {});
  t.recordings = diarkit::pipeline::recordings_from_table(t.corpus.segments, true);
  return t;
}

}  // namespace fixture
