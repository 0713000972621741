#pragma once

#include <array>
#include <cstddef>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "json.hpp"

namespace riskint {

/// One subject: binary outcome, two binary exposures and real covariates.
struct SubjectRecord {
  int y = 0;
  int z1 = 0;
  int z2 = 0;
  std::vector<double> x;

  friend bool operator==(const SubjectRecord&, const SubjectRecord&) = default;
};

/// Records in file order. The record list doubles as the empirical
/// covariate distribution used for standardization.
class Cohort {
 public:
  Cohort(std::vector<SubjectRecord> records,
         std::vector<std::string> covariate_names);

  const std::vector<SubjectRecord>& records() const { return records_; }
  const std::vector<std::string>& covariate_names() const {
    return covariate_names_;
  }
  std::size_t size() const { return records_.size(); }
  std::size_t covariate_count() const { return covariate_names_.size(); }

  /// Index of a covariate by name, or nullopt.
  std::optional<std::size_t> covariate_index(const std::string& name) const;

 private:
  std::vector<SubjectRecord> records_;
  std::vector<std::string> covariate_names_;
};

/// Which CSV columns feed which field. An empty covariate list means
/// "every column not mapped to y, z1 or z2, in header order".
struct CohortSchema {
  std::string outcome = "y";
  std::string exposure1 = "z1";
  std::string exposure2 = "z2";
  std::vector<std::string> covariates;
};

/// Reads a headered CSV. Any bad row rejects the whole file.
Cohort load_cohort(const std::filesystem::path& path,
                   const CohortSchema& schema = {});
Cohort parse_cohort_csv(const std::string& text,
                        const CohortSchema& schema = {});

/// Canonical CSV: header y,z1,z2,<covariates>, shortest round-trip numbers.
std::string cohort_to_csv(const Cohort& cohort);
void save_cohort(const Cohort& cohort, const std::filesystem::path& path);

struct EventCount {
  std::size_t events = 0;
  std::size_t total = 0;

  friend bool operator==(const EventCount&, const EventCount&) = default;
};

/// Exposure cells in the column order of the descriptive table:
/// (1,1), (0,1), (1,0), (0,0).
inline constexpr std::array<std::array<int, 2>, 4> kExposureCells{
    {{1, 1}, {0, 1}, {1, 0}, {0, 0}}};

std::size_t exposure_cell_index(int z1, int z2);

struct DescriptiveRow {
  std::string label;
  std::array<EventCount, 4> cells;
};

struct DescriptiveGroup {
  std::string covariate;
  bool binary = false;
  double cut = 0.0;  // split point for continuous covariates
  std::vector<DescriptiveRow> rows;
};

struct DescriptiveTable {
  DescriptiveRow overall;
  std::vector<DescriptiveGroup> groups;
  std::size_t n = 0;

  nlohmann::json to_json() const;
  std::string to_text() const;
};

/// Lower median: the element of rank ceil(n/2) among the sorted values.
double lower_median(std::vector<double> values);

/// Events/totals by exposure cell, overall and within covariate levels.
/// Binary covariates split by level; continuous ones at the lower median
/// unless a cut is supplied in `cuts` (keyed by covariate name). Values equal
/// to the cut fall in the "<=" bucket.
DescriptiveTable describe(const Cohort& cohort,
                          const std::map<std::string, double>& cuts = {});

}  // namespace riskint
