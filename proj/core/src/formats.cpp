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

#include "diarkit/formats.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <set>
#include <span>
#include <sstream>
#include <tuple>

#include <nlohmann/json.hpp>

#include "diarkit/error.hpp"

namespace diarkit {

namespace {

using json = nlohmann::json;

std::vector<std::string_view> split_fields(std::string_view line) {
  std::vector<std::string_view> fields;
  std::size_t i = 0;
  while (i < line.size()) {
    while (i < line.size() && std::isspace(static_cast<unsigned char>(line[i])))
      ++i;
    const std::size_t start = i;
    while (i < line.size() && !std::isspace(static_cast<unsigned char>(line[i])))
      ++i;
    if (i > start) fields.push_back(line.substr(start, i - start));
  }
  return fields;
}

// Calls fn(line_number, fields) for every non-blank line, with '#' comments
// stripped when strip_comments is set.
template <typename Fn>
void for_each_line(std::string_view text, bool strip_comments, Fn&& fn) {
  std::size_t line_no = 0;
  std::size_t pos = 0;
  while (pos <= text.size()) {
    std::size_t end = text.find('\n', pos);
    if (end == std::string_view::npos) end = text.size();
    std::string_view line = text.substr(pos, end - pos);
    ++line_no;
    if (strip_comments) {
      if (auto hash = line.find('#'); hash != std::string_view::npos)
        line = line.substr(0, hash);
    }
    auto fields = split_fields(line);
    if (!fields.empty()) fn(line_no, fields);
    if (end == text.size()) break;
    pos = end + 1;
  }
}

double parse_real(std::string_view field, std::size_t line_no,
                  const char* what) {
  double value = 0.0;
  const char* first = field.data();
  const char* last = field.data() + field.size();
  if (!field.empty() && *first == '+') ++first;
  auto [ptr, ec] = std::from_chars(first, last, value);
  if (ec != std::errc() || ptr != last) {
    throw ParseError(line_no, std::string("non-numeric ") + what + " '" +
                                  std::string(field) + "'");
  }
  if (!std::isfinite(value)) {
    throw ParseError(line_no, std::string("non-finite ") + what);
  }
  return value;
}

std::vector<double> parse_vector(std::span<const std::string_view> fields,
                                 std::size_t line_no) {
  std::vector<double> v;
  v.reserve(fields.size());
  for (auto f : fields) {
    double value = 0.0;
    auto [ptr, ec] = std::from_chars(f.data(), f.data() + f.size(), value);
    if (ec != std::errc() || ptr != f.data() + f.size() ||
        !std::isfinite(value)) {
      throw FormatError("line " + std::to_string(line_no) +
                        ": non-finite or non-numeric embedding value '" +
                        std::string(f) + "'");
    }
    v.push_back(value);
  }
  return v;
}

void check_dim(std::size_t& dim, std::size_t got, std::size_t line_no) {
  if (got == 0) {
    throw FormatError("line " + std::to_string(line_no) +
                      ": embedding has no values");
  }
  if (dim == 0) {
    dim = got;
  } else if (dim != got) {
    throw FormatError("line " + std::to_string(line_no) + ": dimension " +
                      std::to_string(got) + " differs from " +
                      std::to_string(dim) + " on earlier lines");
  }
}

std::string fixed3(double v) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.3f", v);
  return buf;
}

json profile_to_json(const DomainProfile& p) {
  return json{{"domain", p.domain},
              {"ahc_threshold", p.ahc_threshold},
              {"pca_energy", p.pca_energy}};
}

DomainProfile profile_from_json(const json& j, bool domain_required) {
  if (!j.is_object()) throw ValidationError("profile entry is not an object");
  DomainProfile p;
  if (j.contains("domain")) {
    p.domain = j.at("domain").get<std::string>();
  } else if (domain_required) {
    throw ValidationError("profile entry lacks \"domain\"");
  }
  if (!j.contains("ahc_threshold") || !j.at("ahc_threshold").is_number())
    throw ValidationError("profile '" + p.domain +
                          "' lacks numeric \"ahc_threshold\"");
  if (!j.contains("pca_energy") || !j.at("pca_energy").is_number())
    throw ValidationError("profile '" + p.domain +
                          "' lacks numeric \"pca_energy\"");
  p.ahc_threshold = j.at("ahc_threshold").get<double>();
  p.pca_energy = j.at("pca_energy").get<double>();
  validate(p);
  return p;
}

}  // namespace

void Annotation::sort() {
  std::sort(turns.begin(), turns.end(), [](const Turn& a, const Turn& b) {
    return std::tie(a.onset, a.speaker, a.duration) <
           std::tie(b.onset, b.speaker, b.duration);
  });
}

double ScoringRegions::total() const {
  double t = 0.0;
  for (const auto& r : regions) t += r.duration();
  return t;
}

std::map<std::string, std::vector<SegmentEmbedding>>
SegmentTable::by_recording() const {
  std::map<std::string, std::vector<SegmentEmbedding>> out;
  for (const auto& row : rows) out[row.recording_id].push_back(row);
  for (auto& [id, segs] : out) {
    std::stable_sort(segs.begin(), segs.end(), [](const auto& a, const auto& b) {
      return std::tie(a.onset, a.offset) < std::tie(b.onset, b.offset);
    });
  }
  return out;
}

void validate(const Turn& turn) {
  if (turn.recording_id.empty() || turn.speaker.empty())
    throw ValidationError("turn has an empty recording id or speaker");
  if (!(turn.onset >= 0.0))
    throw ValidationError("turn onset " + format_double(turn.onset) +
                          " is negative");
  if (!(turn.duration > 0.0))
    throw ValidationError("turn duration " + format_double(turn.duration) +
                          " is not positive");
}

void validate(const ScoringRegions& regions) {
  for (std::size_t i = 0; i < regions.regions.size(); ++i) {
    const auto& r = regions.regions[i];
    if (!(r.offset > r.onset))
      throw ValidationError("region [" + format_double(r.onset) + ", " +
                            format_double(r.offset) + ") of " +
                            regions.recording_id + " is empty or reversed");
    if (i > 0 && r.onset < regions.regions[i - 1].offset)
      throw ValidationError("overlapping scoring regions in " +
                            regions.recording_id);
  }
}

void validate(const DomainProfile& profile) {
  if (!std::isfinite(profile.ahc_threshold))
    throw ValidationError("profile '" + profile.domain +
                          "' has a non-finite threshold");
  if (!(profile.pca_energy > 0.0 && profile.pca_energy <= 1.0))
    throw ValidationError("profile '" + profile.domain + "' pca_energy " +
                          format_double(profile.pca_energy) +
                          " outside (0, 1]");
}

AnnotationSet parse_rttm(std::string_view text) {
  AnnotationSet out;
  for_each_line(text, false, [&](std::size_t line_no, const auto& f) {
    if (f.size() < 9)
      throw ParseError(line_no, "expected at least 9 fields, got " +
                                    std::to_string(f.size()));
    if (f[0] != "SPEAKER")
      throw ParseError(line_no, "first field must be SPEAKER, got '" +
                                    std::string(f[0]) + "'");
    Turn t;
    t.recording_id = std::string(f[1]);
    t.onset = parse_real(f[3], line_no, "onset");
    t.duration = parse_real(f[4], line_no, "duration");
    t.speaker = std::string(f[7]);
    try {
      validate(t);
    } catch (const ValidationError& e) {
      throw ValidationError("line " + std::to_string(line_no) + ": " +
                            e.what());
    }
    auto& ann = out[t.recording_id];
    ann.recording_id = t.recording_id;
    ann.turns.push_back(std::move(t));
  });
  for (auto& [id, ann] : out) ann.sort();
  return out;
}

std::string write_rttm(const AnnotationSet& annotations) {
  std::string out;
  for (const auto& [id, ann] : annotations) {
    for (const auto& t : ann.turns) {
      validate(t);
      out += "SPEAKER " + t.recording_id + " 1 " + fixed3(t.onset) + " " +
             fixed3(t.duration) + " <NA> <NA> " + t.speaker + " <NA> <NA>\n";
    }
  }
  return out;
}

RegionSet parse_uem(std::string_view text) {
  RegionSet out;
  for_each_line(text, true, [&](std::size_t line_no, const auto& f) {
    if (f.size() != 4)
      throw ParseError(line_no,
                       "expected 4 fields, got " + std::to_string(f.size()));
    Region r{parse_real(f[2], line_no, "onset"),
             parse_real(f[3], line_no, "offset")};
    if (!(r.offset > r.onset))
      throw ValidationError("line " + std::to_string(line_no) +
                            ": offset must exceed onset");
    auto& sr = out[std::string(f[0])];
    sr.recording_id = std::string(f[0]);
    sr.regions.push_back(r);
  });
  for (auto& [id, sr] : out) {
    std::sort(sr.regions.begin(), sr.regions.end(),
              [](const Region& a, const Region& b) {
                return std::tie(a.onset, a.offset) < std::tie(b.onset, b.offset);
              });
    validate(sr);
  }
  return out;
}

std::string write_uem(const RegionSet& regions) {
  std::string out;
  for (const auto& [id, sr] : regions) {
    validate(sr);
    for (const auto& r : sr.regions)
      out += id + " 1 " + format_double(r.onset) + " " +
             format_double(r.offset) + "\n";
  }
  return out;
}

UtteranceTable parse_utterance_embeddings(std::string_view text) {
  UtteranceTable table;
  for_each_line(text, true, [&](std::size_t line_no, const auto& f) {
    UtteranceEmbedding row;
    row.utterance_id = std::string(f[0]);
    row.vector = parse_vector(std::span(f).subspan(1), line_no);
    check_dim(table.dim, row.vector.size(), line_no);
    table.rows.push_back(std::move(row));
  });
  return table;
}

SegmentTable parse_segment_embeddings(std::string_view text) {
  SegmentTable table;
  for_each_line(text, true, [&](std::size_t line_no, const auto& f) {
    if (f.size() < 4)
      throw ParseError(line_no, "segment row needs <rec> <onset> <offset> and "
                                "at least one value");
    SegmentEmbedding row;
    row.recording_id = std::string(f[0]);
    row.onset = parse_real(f[1], line_no, "onset");
    row.offset = parse_real(f[2], line_no, "offset");
    if (!(row.offset > row.onset))
      throw ValidationError("line " + std::to_string(line_no) +
                            ": segment offset must exceed onset");
    row.vector = parse_vector(std::span(f).subspan(3), line_no);
    check_dim(table.dim, row.vector.size(), line_no);
    table.rows.push_back(std::move(row));
  });
  return table;
}

EmbeddingTable parse_embeddings(std::string_view text, EmbeddingForm form) {
  if (form == EmbeddingForm::segment) return parse_segment_embeddings(text);
  return parse_utterance_embeddings(text);
}

std::string write_embeddings(const UtteranceTable& table) {
  std::string out;
  for (const auto& row : table.rows) {
    out += row.utterance_id;
    for (double v : row.vector) out += " " + format_double(v);
    out += "\n";
  }
  return out;
}

std::string write_embeddings(const SegmentTable& table) {
  std::string out;
  for (const auto& row : table.rows) {
    out += row.recording_id + " " + format_double(row.onset) + " " +
           format_double(row.offset);
    for (double v : row.vector) out += " " + format_double(v);
    out += "\n";
  }
  return out;
}

std::map<std::string, std::string> parse_domain_map(std::string_view text) {
  std::map<std::string, std::string> out;
  std::optional<std::size_t> domain_col;
  std::size_t line_no = 0;
  std::istringstream in{std::string(text)};
  std::string line;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.find_first_not_of(" \t") == std::string::npos) continue;
    std::vector<std::string> cols;
    std::stringstream ls(line);
    for (std::string c; std::getline(ls, c, ',');) {
      auto b = c.find_first_not_of(" \t");
      auto e = c.find_last_not_of(" \t");
      cols.push_back(b == std::string::npos ? "" : c.substr(b, e - b + 1));
    }
    if (!domain_col) {
      auto it = std::find(cols.begin(), cols.end(), "domain");
      if (it == cols.end() || it == cols.begin())
        throw ParseError(line_no,
                         "header must name an id column and a 'domain' column");
      domain_col = static_cast<std::size_t>(it - cols.begin());
      continue;
    }
    if (cols.size() <= *domain_col || cols[0].empty() ||
        cols[*domain_col].empty())
      throw ParseError(line_no, "missing id or domain");
    if (!out.emplace(cols[0], cols[*domain_col]).second)
      throw ValidationError("line " + std::to_string(line_no) +
                            ": duplicate id '" + cols[0] + "'");
  }
  return out;
}

std::string write_domain_map(const std::map<std::string, std::string>& map) {
  std::string out = "id,domain\n";
  for (const auto& [id, domain] : map) out += id + "," + domain + "\n";
  return out;
}

ProfileSet read_profiles(std::string_view json_text) {
  json doc;
  try {
    doc = json::parse(json_text);
  } catch (const json::parse_error& e) {
    throw ParseError(0, std::string("profiles JSON: ") + e.what());
  }
  ProfileSet set;
  const json* array = nullptr;
  if (doc.is_array()) {
    array = &doc;
  } else if (doc.is_object()) {
    if (doc.contains("profiles")) array = &doc.at("profiles");
    if (doc.contains("fallback"))
      set.fallback = profile_from_json(doc.at("fallback"), false);
  } else {
    throw ValidationError("profiles JSON must be an array or an object");
  }
  if (array) {
    if (!array->is_array())
      throw ValidationError("\"profiles\" must be an array");
    for (const auto& entry : *array) {
      auto p = profile_from_json(entry, true);
      if (set.domains.contains(p.domain))
        throw ValidationError("duplicate domain '" + p.domain + "'");
      set.domains.emplace(p.domain, std::move(p));
    }
  }
  return set;
}

std::string write_profiles(const ProfileSet& profiles) {
  json doc = json::object();
  json arr = json::array();
  for (const auto& [name, p] : profiles.domains) {
    validate(p);
    arr.push_back(profile_to_json(p));
  }
  doc["profiles"] = std::move(arr);
  if (profiles.fallback) {
    validate(*profiles.fallback);
    doc["fallback"] = profile_to_json(*profiles.fallback);
  }
  return doc.dump(2) + "\n";
}

std::string format_double(double value) {
  char buf[64];
  auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), value);
  return std::string(buf, ptr);
}

std::string read_text_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw UsageError("cannot open " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_text_file_atomic(const std::filesystem::path& path,
                            std::string_view content) {
  if (path.has_parent_path())
    std::filesystem::create_directories(path.parent_path());
  auto tmp = path;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw UsageError("cannot write " + path.string());
    out.write(content.data(), static_cast<std::streamsize>(content.size()));
    if (!out) throw Error("short write to " + tmp.string());
  }
  std::filesystem::rename(tmp, path);
}

}  // namespace diarkit
