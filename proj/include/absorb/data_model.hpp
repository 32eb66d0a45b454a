#pragma once

#include <cstddef>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace absorb {

/// Raised for input data that cannot be turned into a fit-eligible dataset.
class DataError : public std::runtime_error {
public:
  using std::runtime_error::runtime_error;
};

enum class ReportPattern { Both, FirstOnly, SecondOnly, Neither };

/// One study row: sample size plus the (optional) effect size and standard
/// error for each endpoint.
struct StudyRecord {
  std::string study_id;
  int sample_size = 0;
  std::optional<double> y1;
  std::optional<double> s1;
  std::optional<double> y2;
  std::optional<double> s2;

  ReportPattern pattern() const;
  bool reports(int endpoint) const { return endpoint == 1 ? y1.has_value() : y2.has_value(); }
  std::optional<double> y(int endpoint) const { return endpoint == 1 ? y1 : y2; }
  std::optional<double> s(int endpoint) const { return endpoint == 1 ? s1 : s2; }

  bool operator==(const StudyRecord&) const = default;
};

/// Studies ordered as [both-reported | first-only | second-only].
struct BivariateDataset {
  std::vector<StudyRecord> studies;
  std::size_t m1 = 0;
  std::size_t m2 = 0;
  std::size_t m3 = 0;
  /// Number of studies reporting neither outcome; only the ISM model uses it.
  std::size_t k_missing = 0;

  std::size_t n() const { return studies.size(); }
  bool operator==(const BivariateDataset&) const = default;
};

struct ValidationIssue {
  std::string study_id;
  std::string message;
};

struct ValidationReport {
  std::vector<ValidationIssue> errors;
  std::vector<ValidationIssue> warnings;
  std::size_t n_excluded = 0;

  bool ok() const { return errors.empty(); }
  /// All errors joined on separate lines, for exception messages.
  std::string error_summary() const;
};

struct ParseOptions {
  bool log_transform_y1 = false;
  bool log_transform_y2 = false;
  bool ism_mode = false;
};

struct ParseResult {
  BivariateDataset dataset;
  ValidationReport report;
};

/// Parses `study_id,n,y1,s1,y2,s2` CSV text. Row-level problems land in the
/// report; a missing or malformed header throws DataError.
///
/// With a log-transform flag set, the corresponding y column is replaced by
/// ln(y) and its s column is taken to be on the log scale already.
ParseResult parse_dataset(std::string_view csv_text, const ParseOptions& options = {});

/// Reads and parses a file; throws DataError when the report has errors.
BivariateDataset load_dataset(const std::string& path, const ParseOptions& options = {});

/// Stable reorder into the m1/m2/m3 blocks. Throws DataError on empty input,
/// on a study reporting neither outcome, or when no study reports both.
BivariateDataset partition(std::vector<StudyRecord> studies);

/// Lists every invariant violation; never throws.
ValidationReport validate(const BivariateDataset& dataset);

/// CSV text in the parse_dataset schema; numbers written with 17 significant
/// digits so that parsing the output reproduces the dataset exactly.
std::string serialize_dataset(const BivariateDataset& dataset);

/// Hex FNV-1a hash of the serialized dataset (including k_missing).
std::string dataset_fingerprint(const BivariateDataset& dataset);

namespace detail {
BivariateDataset partition_unchecked(std::vector<StudyRecord> studies);
std::string format_double(double value);
}  // namespace detail

}  // namespace absorb
