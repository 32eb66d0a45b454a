#include "absorb/data_model.hpp"

#include <algorithm>
#include <array>
#include <cctype>
#include <charconv>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <fstream>
#include <map>
#include <set>
#include <sstream>

namespace absorb {

ReportPattern StudyRecord::pattern() const {
  if (y1 && y2) return ReportPattern::Both;
  if (y1) return ReportPattern::FirstOnly;
  if (y2) return ReportPattern::SecondOnly;
  return ReportPattern::Neither;
}

std::string ValidationReport::error_summary() const {
  std::string out;
  for (const auto& e : errors) {
    if (!out.empty()) out += '\n';
    out += e.study_id.empty() ? e.message : e.study_id + ": " + e.message;
  }
  return out;
}

namespace {

constexpr std::array<const char*, 6> kColumns = {"study_id", "n", "y1", "s1", "y2", "s2"};

std::string_view trim(std::string_view s) {
  while (!s.empty() && std::isspace(static_cast<unsigned char>(s.front()))) s.remove_prefix(1);
  while (!s.empty() && std::isspace(static_cast<unsigned char>(s.back()))) s.remove_suffix(1);
  return s;
}

std::string lower(std::string_view s) {
  std::string out(s);
  std::transform(out.begin(), out.end(), out.begin(),
                 [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
  return out;
}

// Splits one CSV record; double-quoted fields may contain commas and "" escapes.
std::vector<std::string> split_csv_line(std::string_view line) {
  std::vector<std::string> fields;
  std::string current;
  bool quoted = false;
  for (std::size_t i = 0; i < line.size(); ++i) {
    const char c = line[i];
    if (quoted) {
      if (c == '"') {
        if (i + 1 < line.size() && line[i + 1] == '"') {
          current += '"';
          ++i;
        } else {
          quoted = false;
        }
      } else {
        current += c;
      }
    } else if (c == '"') {
      quoted = true;
    } else if (c == ',') {
      fields.push_back(std::move(current));
      current.clear();
    } else {
      current += c;
    }
  }
  fields.push_back(std::move(current));
  return fields;
}

std::vector<std::string_view> split_lines(std::string_view text) {
  std::vector<std::string_view> lines;
  std::size_t start = 0;
  while (start <= text.size()) {
    std::size_t end = text.find('\n', start);
    if (end == std::string_view::npos) end = text.size();
    std::string_view line = text.substr(start, end - start);
    if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
    lines.push_back(line);
    if (end == text.size()) break;
    start = end + 1;
  }
  return lines;
}

bool is_missing_cell(std::string_view cell) {
  return cell.empty() || lower(cell) == "na";
}

std::optional<double> parse_real(std::string_view cell) {
  if (!cell.empty() && cell.front() == '+') cell.remove_prefix(1);
  double value = 0.0;
  const auto [ptr, ec] = std::from_chars(cell.data(), cell.data() + cell.size(), value);
  if (ec != std::errc() || ptr != cell.data() + cell.size()) return std::nullopt;
  return value;
}

std::optional<long long> parse_integer(std::string_view cell) {
  long long value = 0;
  const auto [ptr, ec] = std::from_chars(cell.data(), cell.data() + cell.size(), value);
  if (ec == std::errc() && ptr == cell.data() + cell.size()) return value;
  // Accept integral decimals such as "40.0".
  if (auto real = parse_real(cell); real && std::isfinite(*real) && *real == std::floor(*real) &&
                                    std::abs(*real) < 1e15) {
    return static_cast<long long>(*real);
  }
  return std::nullopt;
}

void check_study(const StudyRecord& s, std::vector<ValidationIssue>& errors) {
  if (s.sample_size < 2) errors.push_back({s.study_id, "sample size n < 2"});
  for (int j = 1; j <= 2; ++j) {
    const auto y = s.y(j);
    const auto se = s.s(j);
    const std::string tag = "endpoint " + std::to_string(j) + ": ";
    if (y && !se) errors.push_back({s.study_id, tag + "y present without s"});
    if (!y && se) errors.push_back({s.study_id, tag + "s present without y"});
    if (y && !std::isfinite(*y)) errors.push_back({s.study_id, tag + "y is not finite"});
    if (se && !(std::isfinite(*se) && *se > 0.0)) {
      errors.push_back({s.study_id, tag + "s must be positive and finite"});
    }
  }
}

}  // namespace

namespace detail {

BivariateDataset partition_unchecked(std::vector<StudyRecord> studies) {
  BivariateDataset out;
  out.studies.reserve(studies.size());
  for (auto pattern : {ReportPattern::Both, ReportPattern::FirstOnly, ReportPattern::SecondOnly}) {
    for (auto& s : studies) {
      if (s.pattern() == pattern) out.studies.push_back(std::move(s));
    }
  }
  for (const auto& s : out.studies) {
    switch (s.pattern()) {
      case ReportPattern::Both: ++out.m1; break;
      case ReportPattern::FirstOnly: ++out.m2; break;
      case ReportPattern::SecondOnly: ++out.m3; break;
      case ReportPattern::Neither: break;
    }
  }
  return out;
}

std::string format_double(double value) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.17g", value);
  return buf;
}

}  // namespace detail

ParseResult parse_dataset(std::string_view csv_text, const ParseOptions& options) {
  ParseResult result;
  auto& report = result.report;

  if (csv_text.size() >= 3 && csv_text.substr(0, 3) == "\xEF\xBB\xBF") csv_text.remove_prefix(3);
  const auto lines = split_lines(csv_text);
  std::size_t header_line = 0;
  while (header_line < lines.size() && trim(lines[header_line]).empty()) ++header_line;
  if (header_line == lines.size()) throw DataError("malformed header: input is empty");

  const auto header = split_csv_line(lines[header_line]);
  std::map<std::string, std::size_t> column_index;
  for (std::size_t c = 0; c < header.size(); ++c) {
    const std::string name = lower(trim(header[c]));
    if (column_index.count(name)) throw DataError("malformed header: duplicate column '" + name + "'");
    column_index[name] = c;
  }
  for (const char* required : kColumns) {
    if (!column_index.count(required)) {
      throw DataError(std::string("malformed header: missing column '") + required +
                      "' (expected study_id,n,y1,s1,y2,s2)");
    }
  }
  for (const auto& [name, idx] : column_index) {
    if (std::find_if(kColumns.begin(), kColumns.end(),
                     [&](const char* c) { return name == c; }) == kColumns.end()) {
      report.warnings.push_back({"", "ignoring unknown column '" + name + "'"});
    }
  }

  std::vector<StudyRecord> studies;
  std::set<std::string> seen_ids;
  for (std::size_t li = header_line + 1; li < lines.size(); ++li) {
    if (trim(lines[li]).empty()) continue;
    const auto fields = split_csv_line(lines[li]);
    const std::string row_label = "row " + std::to_string(li + 1);
    if (fields.size() != header.size()) {
      report.errors.push_back({row_label, "expected " + std::to_string(header.size()) +
                                              " fields, found " + std::to_string(fields.size())});
      continue;
    }
    auto cell = [&](const char* name) { return trim(fields[column_index.at(name)]); };

    StudyRecord study;
    study.study_id = std::string(cell("study_id"));
    if (study.study_id.empty()) study.study_id = row_label;
    const std::string& id = study.study_id;
    bool row_ok = true;

    if (auto n = parse_integer(cell("n"))) {
      study.sample_size = static_cast<int>(std::clamp<long long>(*n, -1, 1'000'000'000));
    } else {
      report.errors.push_back({id, "non-numeric cell in column n"});
      row_ok = false;
    }

    auto read_optional = [&](const char* name, std::optional<double>& target) {
      const auto text = cell(name);
      if (is_missing_cell(text)) return;
      if (auto v = parse_real(text)) {
        target = *v;
      } else {
        report.errors.push_back({id, std::string("non-numeric cell in column ") + name});
        row_ok = false;
      }
    };
    read_optional("y1", study.y1);
    read_optional("s1", study.s1);
    read_optional("y2", study.y2);
    read_optional("s2", study.s2);
    if (!row_ok) continue;

    std::vector<ValidationIssue> row_errors;
    check_study(study, row_errors);
    for (int j = 1; j <= 2; ++j) {
      const bool transform = j == 1 ? options.log_transform_y1 : options.log_transform_y2;
      auto& y = j == 1 ? study.y1 : study.y2;
      if (!transform || !y) continue;
      if (!(*y > 0.0)) {
        row_errors.push_back({id, "endpoint " + std::to_string(j) + ": log transform needs y > 0"});
      } else {
        y = std::log(*y);
      }
    }
    if (!row_errors.empty()) {
      report.errors.insert(report.errors.end(), row_errors.begin(), row_errors.end());
      continue;
    }
    if (!seen_ids.insert(id).second) {
      report.errors.push_back({id, "duplicate study_id"});
      continue;
    }

    if (study.pattern() == ReportPattern::Neither) {
      if (options.ism_mode) {
        ++result.dataset.k_missing;
      } else {
        report.warnings.push_back({id, "reports neither outcome; excluded"});
        ++report.n_excluded;
      }
      continue;
    }
    studies.push_back(std::move(study));
  }

  const std::size_t k_missing = result.dataset.k_missing;
  result.dataset = detail::partition_unchecked(std::move(studies));
  result.dataset.k_missing = k_missing;
  if (result.dataset.m1 == 0) {
    report.errors.push_back({"", "no study reports both outcomes"});
  }
  return result;
}

BivariateDataset load_dataset(const std::string& path, const ParseOptions& options) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open data file '" + path + "'");
  std::ostringstream buffer;
  buffer << in.rdbuf();
  auto parsed = parse_dataset(buffer.str(), options);
  if (!parsed.report.ok()) throw DataError(parsed.report.error_summary());
  return std::move(parsed.dataset);
}

BivariateDataset partition(std::vector<StudyRecord> studies) {
  if (studies.empty()) throw DataError("cannot partition an empty study list");
  for (const auto& s : studies) {
    if (s.pattern() == ReportPattern::Neither) {
      throw DataError("study '" + s.study_id + "' reports neither outcome");
    }
  }
  auto out = detail::partition_unchecked(std::move(studies));
  if (out.m1 == 0) throw DataError("no study reports both outcomes");
  return out;
}

ValidationReport validate(const BivariateDataset& dataset) {
  ValidationReport report;
  std::set<std::string> ids;
  for (std::size_t i = 0; i < dataset.studies.size(); ++i) {
    const auto& s = dataset.studies[i];
    check_study(s, report.errors);
    if (!ids.insert(s.study_id).second) report.errors.push_back({s.study_id, "duplicate study_id"});
    const ReportPattern expected = i < dataset.m1                ? ReportPattern::Both
                                   : i < dataset.m1 + dataset.m2 ? ReportPattern::FirstOnly
                                                                 : ReportPattern::SecondOnly;
    if (s.pattern() != expected) {
      report.errors.push_back({s.study_id, "study is out of place in the m1/m2/m3 partition"});
    }
  }
  if (dataset.m1 + dataset.m2 + dataset.m3 != dataset.studies.size()) {
    report.errors.push_back({"", "m1 + m2 + m3 does not match the number of studies"});
  }
  if (dataset.m1 == 0) report.errors.push_back({"", "no study reports both outcomes"});
  return report;
}

std::string serialize_dataset(const BivariateDataset& dataset) {
  std::string out = "study_id,n,y1,s1,y2,s2\n";
  auto opt = [](const std::optional<double>& v) { return v ? detail::format_double(*v) : ""; };
  for (const auto& s : dataset.studies) {
    std::string id = s.study_id;
    if (id.find_first_of(",\"\n") != std::string::npos) {
      std::string quoted = "\"";
      for (char c : id) {
        if (c == '"') quoted += '"';
        quoted += c;
      }
      id = quoted + "\"";
    }
    out += id + ',' + std::to_string(s.sample_size) + ',' + opt(s.y1) + ',' + opt(s.s1) + ',' +
           opt(s.y2) + ',' + opt(s.s2) + '\n';
  }
  return out;
}

std::string dataset_fingerprint(const BivariateDataset& dataset) {
  const std::string text = serialize_dataset(dataset) + "k_missing=" + std::to_string(dataset.k_missing);
  std::uint64_t hash = 0xcbf29ce484222325ULL;
  for (unsigned char c : text) {
    hash ^= c;
    hash *= 0x100000001b3ULL;
  }
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(hash));
  return buf;
}

}  // namespace absorb
