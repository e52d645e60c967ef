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
#include <string>
#include <vector>

#include "diarkit/formats.hpp"
#include "diarkit/pipeline.hpp"
#include "diarkit/plda.hpp"

// Exhaustive per-domain search over (AHC threshold, PCA energy).
namespace diarkit::sweep {

struct SweepGrid {
  std::vector<double> thresholds;
  std::vector<double> energies;

  // Thresholds -2.0..2.0 step 0.1; energies 0.10..0.95 step 0.05.
  static SweepGrid defaults();
  // Non-empty, strictly ascending, energies in (0, 1].
  void validate() const;
};

struct GridPoint {
  double threshold = 0.0;
  double energy = 0.0;
  double der = 0.0;
  double jer = 0.0;
};

// Error components accumulated over a set of recordings at one grid point.
struct Tally {
  double miss = 0.0;
  double false_alarm = 0.0;
  double confusion = 0.0;
  double total_ref = 0.0;
  double jer_sum = 0.0;
  std::size_t n_ref_speakers = 0;

  Tally& operator+=(const Tally& other);
  double der() const;
  double jer() const;
};

// Per recording, one Tally per grid point (energy-major, then threshold).
struct GridEvaluation {
  SweepGrid grid;
  std::map<std::string, std::vector<Tally>> per_recording;

  std::size_t index(std::size_t energy_idx, std::size_t threshold_idx) const {
    return energy_idx * grid.thresholds.size() + threshold_idx;
  }
  // Pooled tallies over the listed recordings.
  std::vector<Tally> pooled(const std::vector<std::string>& ids) const;
};

// Runs the pipeline at every grid point. Each (recording, energy) pair is
// scored and clustered once; thresholds are cuts of the same merge sequence.
GridEvaluation evaluate_grid(const std::vector<pipeline::Recording>& recordings,
                             const AnnotationSet& refs, const RegionSet* uem,
                             const plda::Model& model, const SweepGrid& grid,
                             const pipeline::RunOptions& opts);

struct DomainSweep {
  DomainProfile best;           // full grid (M2)
  double best_der = 0.0;
  DomainProfile best_baseline;  // threshold only, energy 0.30 (M1)
  double best_baseline_der = 0.0;
  std::vector<GridPoint> table;
};

// Argmin of pooled DER over `ids`. DER ties prefer the smaller energy, then
// the smaller threshold.
DomainSweep select(const GridEvaluation& eval, const std::vector<std::string>& ids,
                   const std::string& domain);

DomainSweep sweep_domain(const std::vector<pipeline::Recording>& recordings,
                         const AnnotationSet& refs, const RegionSet* uem,
                         const plda::Model& model, const SweepGrid& grid,
                         const pipeline::RunOptions& opts,
                         const std::string& domain);

struct SweepResult {
  std::map<std::string, DomainSweep> per_domain;
  DomainSweep global;  // one profile for all data
  // Pooled DER over all recordings when each domain uses its own profile.
  double pooled_domain_der = 0.0;           // M2 profiles
  double pooled_domain_baseline_der = 0.0;  // M1 profiles

  // M2 profiles; the fallback is the global baseline-energy profile.
  ProfileSet profiles() const;
  // M1 profiles (baseline energy), same fallback.
  ProfileSet baseline_profiles() const;
  // Columns: domain, threshold, energy, der, jer ("*" is the global sweep).
  std::string grid_csv() const;
};

// Every recording needs a domain in `domains`.
SweepResult sweep_all(const std::vector<pipeline::Recording>& recordings,
                      const std::map<std::string, std::string>& domains,
                      const AnnotationSet& refs, const RegionSet* uem,
                      const plda::Model& model, const SweepGrid& grid,
                      const pipeline::RunOptions& opts);

}  // namespace diarkit::sweep
