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

#include "diarkit/sweep.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <set>

#include "diarkit/clustering.hpp"
#include "diarkit/error.hpp"
#include "diarkit/metrics.hpp"
#include "diarkit/parallel.hpp"
#include "diarkit/resegmentation.hpp"

namespace diarkit::sweep {

namespace {

Tally tally_of(const Annotation& ref, const Annotation& hyp,
               const ScoringRegions& regions) {
  const auto mapping = metrics::optimal_mapping(ref, hyp, regions);
  const auto der = metrics::compute_der(ref, hyp, regions, mapping);
  const auto jer = metrics::compute_jer(ref, hyp, regions, mapping);
  Tally t;
  t.miss = der.miss;
  t.false_alarm = der.false_alarm;
  t.confusion = der.confusion;
  t.total_ref = der.total_ref;
  for (const auto& [s, e] : jer.per_speaker) {
    t.jer_sum += e;
    ++t.n_ref_speakers;
  }
  return t;
}

ScoringRegions regions_for(const std::string& id, const Annotation& ref,
                           const RegionSet* uem) {
  if (uem) {
    if (auto it = uem->find(id); it != uem->end()) return it->second;
  }
  ScoringRegions r{id, {}};
  double lo = std::numeric_limits<double>::infinity(), hi = 0.0;
  for (const auto& t : ref.turns) {
    lo = std::min(lo, t.onset);
    hi = std::max(hi, t.offset());
  }
  if (hi > lo) r.regions.push_back({lo, hi});
  return r;
}

std::size_t nearest_baseline_energy(const std::vector<double>& energies) {
  std::size_t best = 0;
  for (std::size_t i = 1; i < energies.size(); ++i)
    if (std::abs(energies[i] - pipeline::kBaselineEnergy) <
        std::abs(energies[best] - pipeline::kBaselineEnergy))
      best = i;
  return best;
}

}  // namespace

SweepGrid SweepGrid::defaults() {
  SweepGrid g;
  for (int i = -20; i <= 20; ++i) g.thresholds.push_back(i / 10.0);
  for (int i = 2; i <= 19; ++i) g.energies.push_back(i / 20.0);
  return g;
}

void SweepGrid::validate() const {
  if (thresholds.empty() || energies.empty())
    throw ConfigError("sweep grid must have at least one threshold and energy");
  for (std::size_t i = 0; i < thresholds.size(); ++i) {
    if (!std::isfinite(thresholds[i]))
      throw ConfigError("sweep thresholds must be finite");
    if (i > 0 && !(thresholds[i] > thresholds[i - 1]))
      throw ConfigError("sweep thresholds must be strictly ascending");
  }
  for (std::size_t i = 0; i < energies.size(); ++i) {
    if (!(energies[i] > 0.0 && energies[i] <= 1.0))
      throw ConfigError("sweep energies must lie in (0, 1]");
    if (i > 0 && !(energies[i] > energies[i - 1]))
      throw ConfigError("sweep energies must be strictly ascending");
  }
}

Tally& Tally::operator+=(const Tally& o) {
  miss += o.miss;
  false_alarm += o.false_alarm;
  confusion += o.confusion;
  total_ref += o.total_ref;
  jer_sum += o.jer_sum;
  n_ref_speakers += o.n_ref_speakers;
  return *this;
}

double Tally::der() const {
  if (!(total_ref > 0.0))
    throw ConfigError("no reference speech to score in this group");
  return (miss + false_alarm + confusion) / total_ref;
}

double Tally::jer() const {
  return n_ref_speakers ? jer_sum / static_cast<double>(n_ref_speakers) : 0.0;
}

std::vector<Tally> GridEvaluation::pooled(const std::vector<std::string>& ids) const {
  std::vector<Tally> out(grid.thresholds.size() * grid.energies.size());
  for (const auto& id : ids) {
    const auto& rows = per_recording.at(id);
    for (std::size_t i = 0; i < out.size(); ++i) out[i] += rows[i];
  }
  return out;
}

GridEvaluation evaluate_grid(const std::vector<pipeline::Recording>& recordings,
                             const AnnotationSet& refs, const RegionSet* uem,
                             const plda::Model& model, const SweepGrid& grid,
                             const pipeline::RunOptions& opts) {
  grid.validate();
  GridEvaluation eval;
  eval.grid = grid;
  const std::size_t n_e = grid.energies.size();
  const std::size_t n_t = grid.thresholds.size();
  std::vector<std::vector<Tally>> slots(recordings.size(),
                                        std::vector<Tally>(n_e * n_t));

  parallel_for(recordings.size() * n_e, [&](std::size_t job) {
    const std::size_t r = job / n_e;
    const std::size_t e = job % n_e;
    const auto& rec = recordings[r];
    Annotation empty_ref{rec.id, {}};
    auto ref_it = refs.find(rec.id);
    const Annotation& ref = ref_it == refs.end() ? empty_ref : ref_it->second;
    const ScoringRegions regions = regions_for(rec.id, ref, uem);
    auto& out = slots[r];

    if (rec.segments.rows() == 0) {
      const Tally t = tally_of(ref, Annotation{rec.id, {}}, regions);
      for (std::size_t ti = 0; ti < n_t; ++ti) out[e * n_t + ti] = t;
      return;
    }
    const auto scored =
        plda::score_recording(model, rec.segments, grid.energies[e]);
    const auto merges = clustering::dendrogram(scored.scores);
    const auto n = static_cast<std::size_t>(rec.segments.rows());
    // Without resegmentation the result depends only on how many merges the
    // threshold admits, so equal cut depths share one evaluation.
    std::map<std::size_t, Tally> by_depth;
    for (std::size_t ti = 0; ti < n_t; ++ti) {
      auto cut = clustering::cut(n, merges, grid.thresholds[ti]);
      const std::size_t depth = cut.merge_trace.size();
      if (!opts.reseg) {
        if (auto hit = by_depth.find(depth); hit != by_depth.end()) {
          out[e * n_t + ti] = hit->second;
          continue;
        }
      }
      std::vector<std::size_t> labels = std::move(cut.labels);
      if (opts.reseg) {
        labels = reseg::vb_resegment_projected(scored.projected_segments, labels,
                                               scored.projected_model, opts.vb)
                     .labels;
      }
      const Tally t = tally_of(
          ref, pipeline::labels_to_annotation(rec.id, rec.spans, labels), regions);
      out[e * n_t + ti] = t;
      if (!opts.reseg) by_depth.emplace(depth, t);
    }
  });

  for (std::size_t r = 0; r < recordings.size(); ++r)
    eval.per_recording.emplace(recordings[r].id, std::move(slots[r]));
  return eval;
}

DomainSweep select(const GridEvaluation& eval, const std::vector<std::string>& ids,
                   const std::string& domain) {
  if (ids.empty()) throw ConfigError("domain '" + domain + "' has no recordings");
  const auto pooled = eval.pooled(ids);
  const auto& g = eval.grid;
  const std::size_t base_e = nearest_baseline_energy(g.energies);
  DomainSweep out;
  bool have = false, have_base = false;
  for (std::size_t e = 0; e < g.energies.size(); ++e) {
    for (std::size_t t = 0; t < g.thresholds.size(); ++t) {
      const Tally& tally = pooled[eval.index(e, t)];
      GridPoint pt{g.thresholds[t], g.energies[e], tally.der(), tally.jer()};
      out.table.push_back(pt);
      // Iteration is energy-major ascending, so strict '<' keeps the
      // smaller energy, then the smaller threshold, on ties.
      if (!have || pt.der < out.best_der) {
        out.best = {domain, pt.threshold, pt.energy};
        out.best_der = pt.der;
        have = true;
      }
      if (e == base_e && (!have_base || pt.der < out.best_baseline_der)) {
        out.best_baseline = {domain, pt.threshold, pt.energy};
        out.best_baseline_der = pt.der;
        have_base = true;
      }
    }
  }
  return out;
}

DomainSweep sweep_domain(const std::vector<pipeline::Recording>& recordings,
                         const AnnotationSet& refs, const RegionSet* uem,
                         const plda::Model& model, const SweepGrid& grid,
                         const pipeline::RunOptions& opts,
                         const std::string& domain) {
  if (recordings.empty())
    throw ConfigError("domain '" + domain + "' has no recordings");
  const auto eval = evaluate_grid(recordings, refs, uem, model, grid, opts);
  std::vector<std::string> ids;
  for (const auto& r : recordings) ids.push_back(r.id);
  return select(eval, ids, domain);
}

SweepResult sweep_all(const std::vector<pipeline::Recording>& recordings,
                      const std::map<std::string, std::string>& domains,
                      const AnnotationSet& refs, const RegionSet* uem,
                      const plda::Model& model, const SweepGrid& grid,
                      const pipeline::RunOptions& opts) {
  if (recordings.empty()) throw ConfigError("sweep needs at least one recording");
  std::map<std::string, std::vector<std::string>> groups;
  std::vector<std::string> all;
  for (const auto& r : recordings) {
    auto it = domains.find(r.id);
    if (it == domains.end())
      throw ConfigError("recording '" + r.id + "' has no domain label");
    groups[it->second].push_back(r.id);
    all.push_back(r.id);
  }
  const auto eval = evaluate_grid(recordings, refs, uem, model, grid, opts);
  SweepResult result;
  for (const auto& [domain, ids] : groups)
    result.per_domain.emplace(domain, select(eval, ids, domain));
  result.global = select(eval, all, "*");

  // Pool each domain's own operating point over the whole corpus.
  Tally m2, m1;
  const auto& g = eval.grid;
  auto locate = [&](const DomainProfile& p) {
    const auto e = static_cast<std::size_t>(
        std::find(g.energies.begin(), g.energies.end(), p.pca_energy) -
        g.energies.begin());
    const auto t = static_cast<std::size_t>(
        std::find(g.thresholds.begin(), g.thresholds.end(), p.ahc_threshold) -
        g.thresholds.begin());
    return eval.index(e, t);
  };
  for (const auto& [domain, ids] : groups) {
    const auto& ds = result.per_domain.at(domain);
    const std::size_t i2 = locate(ds.best);
    const std::size_t i1 = locate(ds.best_baseline);
    for (const auto& id : ids) {
      m2 += eval.per_recording.at(id)[i2];
      m1 += eval.per_recording.at(id)[i1];
    }
  }
  result.pooled_domain_der = m2.der();
  result.pooled_domain_baseline_der = m1.der();
  return result;
}

ProfileSet SweepResult::profiles() const {
  ProfileSet set;
  for (const auto& [d, ds] : per_domain) set.domains.emplace(d, ds.best);
  DomainProfile fb = global.best_baseline;
  fb.domain = "*";
  set.fallback = fb;
  return set;
}

ProfileSet SweepResult::baseline_profiles() const {
  ProfileSet set;
  for (const auto& [d, ds] : per_domain) set.domains.emplace(d, ds.best_baseline);
  DomainProfile fb = global.best_baseline;
  fb.domain = "*";
  set.fallback = fb;
  return set;
}

std::string SweepResult::grid_csv() const {
  std::string out = "domain,threshold,energy,der,jer\n";
  auto emit = [&](const std::string& d, const DomainSweep& ds) {
    for (const auto& p : ds.table)
      out += d + "," + format_double(p.threshold) + "," + format_double(p.energy) +
             "," + format_double(p.der) + "," + format_double(p.jer) + "\n";
  };
  for (const auto& [d, ds] : per_domain) emit(d, ds);
  emit("*", global);
  return out;
}

}  // namespace diarkit::sweep
