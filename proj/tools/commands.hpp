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
#include <string>
#include <vector>

#include "diarkit/adi.hpp"
#include "diarkit/plda.hpp"
#include "diarkit/resegmentation.hpp"
#include "diarkit/synth.hpp"

namespace diarkit::cli {

// Key/value view of the resolved options plus the input files to digest;
// filled by main() and written next to every output.
struct Invocation {
  std::string command;
  std::vector<std::pair<std::string, std::string>> options;
  std::vector<std::pair<std::string, std::string>> inputs;  // option -> path
};

struct SynthArgs {
  synth::SynthConfig cfg;
  std::string out_dir;
};

struct AdiArgs {
  std::string embeddings;
  std::string labels;
  std::string model;
  std::string out;
  std::string out_csv;
  std::size_t trials = 1000;
  std::size_t train_size = 200;
  std::uint64_t seed = 0;
  std::size_t k = 1;
  bool require_all_domains = false;
};

struct PldaArgs {
  std::string segments;
  std::string ref;
  std::string plda;
  std::string embeddings;
  std::string form = "segment";
  std::string out;
  std::size_t iters = 20;
  bool no_length_norm = false;
  double within_share = 0.75;
};

struct DiarizeArgs {
  std::string segments;
  std::string plda;
  std::string profiles;
  std::string adi_model;
  std::string utterances;
  std::string domains;
  std::string mode = "M2";
  bool reseg = false;
  reseg::VbConfig vb;
  std::string out;
  std::string diag;
};

struct ScoreArgs {
  std::string ref;
  std::string hyp;
  std::string uem;
  double collar = 0.0;
  std::string out;
  std::string out_csv;
};

struct SweepArgs {
  std::string dev_segments;
  std::string dev_ref;
  std::string uem;
  std::string plda;
  std::string domains;
  std::string grid_thresholds;
  std::string grid_energies;
  bool reseg = false;
  reseg::VbConfig vb;
  std::string out_profiles;
  std::string out_profiles_m1;
  std::string out_grid;
};

int cmd_synth(const SynthArgs& args, const Invocation& inv);
int cmd_adi_train(const AdiArgs& args, const Invocation& inv);
int cmd_adi_predict(const AdiArgs& args, const Invocation& inv);
int cmd_adi_bench(const AdiArgs& args, const Invocation& inv);
int cmd_plda_train(const PldaArgs& args, const Invocation& inv);
int cmd_plda_adapt(const PldaArgs& args, const Invocation& inv);
int cmd_diarize(const DiarizeArgs& args, const Invocation& inv);
int cmd_score(const ScoreArgs& args, const Invocation& inv);
int cmd_sweep(const SweepArgs& args, const Invocation& inv);

// "lo:step:hi" or a comma-separated list.
std::vector<double> parse_grid_axis(const std::string& text);

}  // namespace diarkit::cli
