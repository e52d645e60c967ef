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

#include "diarkit/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <set>

#include <nlohmann/json.hpp>

#include "diarkit/error.hpp"

namespace diarkit::metrics {

namespace {

using json = nlohmann::json;

std::vector<Region> merge_intervals(std::vector<Region> v) {
  std::sort(v.begin(), v.end(), [](const Region& a, const Region& b) {
    return a.onset < b.onset || (a.onset == b.onset && a.offset < b.offset);
  });
  std::vector<Region> out;
  for (const auto& r : v) {
    if (!(r.offset > r.onset)) continue;
    if (!out.empty() && r.onset <= out.back().offset)
      out.back().offset = std::max(out.back().offset, r.offset);
    else
      out.push_back(r);
  }
  return out;
}

std::vector<Region> intersect(const std::vector<Region>& a,
                              const std::vector<Region>& b) {
  std::vector<Region> out;
  std::size_t i = 0, j = 0;
  while (i < a.size() && j < b.size()) {
    const double lo = std::max(a[i].onset, b[j].onset);
    const double hi = std::min(a[i].offset, b[j].offset);
    if (hi > lo) out.push_back({lo, hi});
    if (a[i].offset < b[j].offset)
      ++i;
    else
      ++j;
  }
  return out;
}

double total_length(const std::vector<Region>& v) {
  double t = 0.0;
  for (const auto& r : v) t += r.duration();
  return t;
}

double overlap(const std::vector<Region>& a, const std::vector<Region>& b) {
  return total_length(intersect(a, b));
}

constexpr std::size_t kUnmapped = std::numeric_limits<std::size_t>::max();

// Largest total weight of a one-to-one partial assignment of the rows not
// in `row_used` to the columns not in `col_used`. Weights are >= 0.
double best_total(const std::vector<std::vector<double>>& w,
                  const std::vector<char>& row_used,
                  const std::vector<char>& col_used) {
  std::vector<std::size_t> rows, cols;
  for (std::size_t r = 0; r < w.size(); ++r)
    if (!row_used[r]) rows.push_back(r);
  for (std::size_t c = 0; c < col_used.size(); ++c)
    if (!col_used[c]) cols.push_back(c);
  if (rows.empty() || cols.empty()) return 0.0;
  const std::size_t n = std::max(rows.size(), cols.size());
  std::vector<std::vector<double>> cost(n, std::vector<double>(n, 0.0));
  for (std::size_t i = 0; i < rows.size(); ++i)
    for (std::size_t j = 0; j < cols.size(); ++j)
      cost[i][j] = -w[rows[i]][cols[j]];
  const auto assign = hungarian(cost);
  double total = 0.0;
  for (std::size_t i = 0; i < rows.size(); ++i)
    if (assign[i] < cols.size()) total += w[rows[i]][cols[assign[i]]];
  return total;
}

}  // namespace

std::map<std::string, std::vector<Region>> speaker_times(
    const Annotation& annotation, const ScoringRegions& regions) {
  std::map<std::string, std::vector<Region>> raw;
  for (const auto& t : annotation.turns)
    raw[t.speaker].push_back({t.onset, t.offset()});
  std::map<std::string, std::vector<Region>> out;
  for (auto& [spk, v] : raw) {
    auto clipped = intersect(merge_intervals(std::move(v)), regions.regions);
    if (!clipped.empty()) out.emplace(spk, std::move(clipped));
  }
  return out;
}

std::vector<std::size_t> hungarian(const std::vector<std::vector<double>>& cost) {
  const std::size_t n = cost.size();
  if (n == 0) return {};
  const std::size_t m = cost[0].size();
  if (m < n) throw DomainError("hungarian: more rows than columns");
  constexpr double inf = std::numeric_limits<double>::infinity();
  // Shortest augmenting paths with potentials; 1-based with column 0 as a
  // virtual start.
  std::vector<double> u(n + 1, 0.0), v(m + 1, 0.0);
  std::vector<std::size_t> p(m + 1, 0), way(m + 1, 0);
  for (std::size_t i = 1; i <= n; ++i) {
    p[0] = i;
    std::size_t j0 = 0;
    std::vector<double> minv(m + 1, inf);
    std::vector<char> used(m + 1, 0);
    do {
      used[j0] = 1;
      const std::size_t i0 = p[j0];
      double delta = inf;
      std::size_t j1 = 0;
      for (std::size_t j = 1; j <= m; ++j) {
        if (used[j]) continue;
        const double cur = cost[i0 - 1][j - 1] - u[i0] - v[j];
        if (cur < minv[j]) {
          minv[j] = cur;
          way[j] = j0;
        }
        if (minv[j] < delta) {
          delta = minv[j];
          j1 = j;
        }
      }
      for (std::size_t j = 0; j <= m; ++j) {
        if (used[j]) {
          u[p[j]] += delta;
          v[j] -= delta;
        } else {
          minv[j] -= delta;
        }
      }
      j0 = j1;
    } while (p[j0] != 0);
    do {
      const std::size_t j1 = way[j0];
      p[j0] = p[j1];
      j0 = j1;
    } while (j0 != 0);
  }
  std::vector<std::size_t> assign(n, 0);
  for (std::size_t j = 1; j <= m; ++j)
    if (p[j] != 0) assign[p[j] - 1] = j - 1;
  return assign;
}

Mapping optimal_mapping(const Annotation& ref, const Annotation& hyp,
                        const ScoringRegions& regions) {
  const auto ref_times = speaker_times(ref, regions);
  const auto hyp_times = speaker_times(hyp, regions);
  std::vector<std::string> refs, hyps;
  for (const auto& [s, _] : ref_times) refs.push_back(s);
  for (const auto& [s, _] : hyp_times) hyps.push_back(s);
  if (refs.empty() || hyps.empty()) return {};

  std::vector<std::vector<double>> w(refs.size(),
                                     std::vector<double>(hyps.size(), 0.0));
  for (std::size_t r = 0; r < refs.size(); ++r)
    for (std::size_t h = 0; h < hyps.size(); ++h)
      w[r][h] = overlap(ref_times.at(refs[r]), hyp_times.at(hyps[h]));

  std::vector<char> row_used(refs.size(), 0), col_used(hyps.size(), 0);
  const double best = best_total(w, row_used, col_used);
  const double eps = 1e-9 * std::max(1.0, best);
  double fixed = 0.0;
  Mapping mapping;
  for (std::size_t r = 0; r < refs.size(); ++r) {
    row_used[r] = 1;
    std::size_t chosen = kUnmapped;
    for (std::size_t h = 0; h < hyps.size(); ++h) {
      if (col_used[h] || !(w[r][h] > 0.0)) continue;
      col_used[h] = 1;
      if (fixed + w[r][h] + best_total(w, row_used, col_used) >= best - eps) {
        chosen = h;
        break;
      }
      col_used[h] = 0;
    }
    if (chosen != kUnmapped) {
      fixed += w[r][chosen];
      mapping.emplace(refs[r], hyps[chosen]);
    }
  }
  return mapping;
}

double DerComponents::der() const {
  if (!(total_ref > 0.0))
    throw ValidationError("DER undefined: no reference speech in scoring regions");
  return (miss + false_alarm + confusion) / total_ref;
}

DerComponents compute_der(const Annotation& ref, const Annotation& hyp,
                          const ScoringRegions& regions, const Mapping& mapping) {
  const auto ref_times = speaker_times(ref, regions);
  const auto hyp_times = speaker_times(hyp, regions);

  // Index speakers: refs first, then hyps.
  std::vector<const std::vector<Region>*> lists;
  std::map<std::string, std::size_t> ref_idx, hyp_idx;
  for (const auto& [s, v] : ref_times) {
    ref_idx[s] = lists.size();
    lists.push_back(&v);
  }
  const std::size_t n_ref = lists.size();
  for (const auto& [s, v] : hyp_times) {
    hyp_idx[s] = lists.size();
    lists.push_back(&v);
  }
  std::vector<std::pair<std::size_t, std::size_t>> pairs;
  for (const auto& [r, h] : mapping) {
    auto ri = ref_idx.find(r);
    auto hi = hyp_idx.find(h);
    if (ri != ref_idx.end() && hi != hyp_idx.end())
      pairs.emplace_back(ri->second, hi->second);
  }

  struct Event {
    double time;
    int delta;
    std::size_t who;
  };
  std::vector<Event> events;
  for (std::size_t i = 0; i < lists.size(); ++i) {
    for (const auto& iv : *lists[i]) {
      events.push_back({iv.onset, +1, i});
      events.push_back({iv.offset, -1, i});
    }
  }
  std::sort(events.begin(), events.end(), [](const Event& a, const Event& b) {
    return a.time < b.time;
  });

  DerComponents out;
  std::vector<char> active(lists.size(), 0);
  int r = 0, h = 0;
  std::size_t e = 0;
  while (e < events.size()) {
    const double t = events[e].time;
    for (; e < events.size() && events[e].time == t; ++e) {
      const auto& ev = events[e];
      active[ev.who] = static_cast<char>(active[ev.who] + ev.delta);
      (ev.who < n_ref ? r : h) += ev.delta;
    }
    if (e == events.size()) break;
    const double d = events[e].time - t;
    if (r == 0 && h == 0) continue;
    int c = 0;
    for (const auto& [ri, hi] : pairs) c += active[ri] && active[hi];
    out.miss += std::max(0, r - h) * d;
    out.false_alarm += std::max(0, h - r) * d;
    out.confusion += (std::min(r, h) - c) * d;
    out.total_ref += r * d;
  }
  return out;
}

JerResult compute_jer(const Annotation& ref, const Annotation& hyp,
                      const ScoringRegions& regions, const Mapping& mapping) {
  const auto ref_times = speaker_times(ref, regions);
  const auto hyp_times = speaker_times(hyp, regions);
  JerResult out;
  double sum = 0.0;
  for (const auto& [s, times] : ref_times) {
    double err = 1.0;
    if (auto m = mapping.find(s); m != mapping.end()) {
      if (auto ht = hyp_times.find(m->second); ht != hyp_times.end()) {
        const double inter = overlap(times, ht->second);
        const double uni = total_length(times) + total_length(ht->second) - inter;
        err = 1.0 - inter / uni;
      }
    }
    out.per_speaker[s] = err;
    sum += err;
  }
  if (!ref_times.empty()) out.jer = sum / static_cast<double>(ref_times.size());
  return out;
}

ScoringRegions apply_collar(const ScoringRegions& regions, const Annotation& ref,
                            double collar) {
  if (!(collar > 0.0)) return regions;
  std::vector<Region> holes;
  for (const auto& t : ref.turns) {
    holes.push_back({t.onset - collar, t.onset + collar});
    holes.push_back({t.offset() - collar, t.offset() + collar});
  }
  holes = merge_intervals(std::move(holes));
  ScoringRegions out{regions.recording_id, {}};
  std::size_t j = 0;
  for (const auto& r : regions.regions) {
    double start = r.onset;
    while (j < holes.size() && holes[j].offset <= start) ++j;
    std::size_t k = j;
    while (k < holes.size() && holes[k].onset < r.offset) {
      if (holes[k].onset > start) out.regions.push_back({start, holes[k].onset});
      start = std::max(start, holes[k].offset);
      ++k;
    }
    if (r.offset > start) out.regions.push_back({start, r.offset});
  }
  return out;
}

ScoreReport score_report(const AnnotationSet& ref, const AnnotationSet& hyp,
                         const RegionSet* uem, const ScoreOptions& opts) {
  for (const auto& [id, _] : hyp)
    if (!ref.contains(id))
      throw ValidationError("hypothesis recording '" + id +
                            "' has no reference");
  ScoreReport report;
  double jer_sum = 0.0;
  for (const auto& [id, ref_ann] : ref) {
    ScoringRegions regions{id, {}};
    if (uem && uem->contains(id)) {
      regions = uem->at(id);
    } else {
      double lo = std::numeric_limits<double>::infinity(), hi = 0.0;
      for (const auto& t : ref_ann.turns) {
        lo = std::min(lo, t.onset);
        hi = std::max(hi, t.offset());
      }
      if (hi > lo) regions.regions.push_back({lo, hi});
      report.warnings.push_back("recording '" + id +
                                "' not in UEM; scoring full reference extent");
    }
    regions = apply_collar(regions, ref_ann, opts.collar);
    Annotation empty{id, {}};
    const auto hit = hyp.find(id);
    const Annotation& hyp_ann = hit == hyp.end() ? empty : hit->second;

    RecordingScore rs;
    rs.mapping = optimal_mapping(ref_ann, hyp_ann, regions);
    rs.der = compute_der(ref_ann, hyp_ann, regions, rs.mapping);
    rs.jer = compute_jer(ref_ann, hyp_ann, regions, rs.mapping);
    rs.der_defined = rs.der.total_ref > 0.0;
    if (rs.der_defined) {
      report.miss += rs.der.miss;
      report.false_alarm += rs.der.false_alarm;
      report.confusion += rs.der.confusion;
      report.total_ref += rs.der.total_ref;
    } else {
      report.warnings.push_back("recording '" + id +
                                "' has no reference speech; excluded from DER");
    }
    for (const auto& [s, e] : rs.jer.per_speaker) {
      jer_sum += e;
      ++report.n_ref_speakers;
    }
    report.per_recording.emplace(id, std::move(rs));
  }
  if (report.total_ref > 0.0)
    report.der = (report.miss + report.false_alarm + report.confusion) /
                 report.total_ref;
  if (report.n_ref_speakers > 0)
    report.jer = jer_sum / static_cast<double>(report.n_ref_speakers);
  return report;
}

std::string to_json(const ScoreReport& report) {
  json per = json::object();
  for (const auto& [id, rs] : report.per_recording) {
    json entry{{"miss", rs.der.miss},
               {"false_alarm", rs.der.false_alarm},
               {"confusion", rs.der.confusion},
               {"total_ref", rs.der.total_ref},
               {"mapping", rs.mapping}};
    entry["der"] = rs.der_defined ? json(rs.der.der()) : json(nullptr);
    entry["jer"] = rs.jer.jer ? json(*rs.jer.jer) : json(nullptr);
    entry["jer_per_speaker"] = rs.jer.per_speaker;
    per[id] = std::move(entry);
  }
  json doc{{"der", report.der},
           {"jer", report.jer},
           {"miss", report.miss},
           {"false_alarm", report.false_alarm},
           {"confusion", report.confusion},
           {"total_ref", report.total_ref},
           {"n_ref_speakers", report.n_ref_speakers},
           {"per_recording", std::move(per)},
           {"warnings", report.warnings}};
  return doc.dump(2) + "\n";
}

std::string to_csv(const ScoreReport& report) {
  std::string out = "recording_id,der,jer,miss,fa,conf,total_ref\n";
  auto row = [&](const std::string& id, std::optional<double> der,
                 std::optional<double> jer, double miss, double fa, double conf,
                 double total) {
    out += id + "," + (der ? format_double(*der) : "") + "," +
           (jer ? format_double(*jer) : "") + "," + format_double(miss) + "," +
           format_double(fa) + "," + format_double(conf) + "," +
           format_double(total) + "\n";
  };
  for (const auto& [id, rs] : report.per_recording)
    row(id, rs.der_defined ? std::optional(rs.der.der()) : std::nullopt,
        rs.jer.jer, rs.der.miss, rs.der.false_alarm, rs.der.confusion,
        rs.der.total_ref);
  row("ALL", report.der, report.jer, report.miss, report.false_alarm,
      report.confusion, report.total_ref);
  return out;
}

}  // namespace diarkit::metrics
