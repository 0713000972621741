#include "riskint/dataset.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <numeric>
#include <sstream>

#include "riskint/errors.hpp"
#include "riskint/format.hpp"

namespace riskint {

namespace {

std::string trim(std::string_view s) {
  std::size_t b = 0, e = s.size();
  while (b < e && std::isspace(static_cast<unsigned char>(s[b]))) ++b;
  while (e > b && std::isspace(static_cast<unsigned char>(s[e - 1]))) --e;
  return std::string(s.substr(b, e - b));
}

// RFC-4180-ish field splitting; quotes may wrap a field and "" escapes a quote.
std::vector<std::string> split_csv_line(std::string_view line) {
  std::vector<std::string> fields;
  std::string cur;
  bool quoted = false;
  for (std::size_t i = 0; i < line.size(); ++i) {
    char c = line[i];
    if (quoted) {
      if (c == '"') {
        if (i + 1 < line.size() && line[i + 1] == '"') {
          cur.push_back('"');
          ++i;
        } else {
          quoted = false;
        }
      } else {
        cur.push_back(c);
      }
    } else if (c == '"') {
      quoted = true;
    } else if (c == ',') {
      fields.push_back(trim(cur));
      cur.clear();
    } else {
      cur.push_back(c);
    }
  }
  fields.push_back(trim(cur));
  return fields;
}

bool is_missing_token(const std::string& s) {
  return s.empty() || s == "NA" || s == "na" || s == "NaN" || s == "nan" ||
         s == "." || s == "?";
}

}  // namespace

Cohort::Cohort(std::vector<SubjectRecord> records,
               std::vector<std::string> covariate_names)
    : records_(std::move(records)), covariate_names_(std::move(covariate_names)) {
  if (records_.empty()) {
    throw data_error("EmptyFile", "cohort has no records");
  }
  for (std::size_t i = 0; i < records_.size(); ++i) {
    const auto& r = records_[i];
    if (r.x.size() != covariate_names_.size()) {
      throw data_error("CovariateLengthMismatch",
                       "record " + std::to_string(i + 1) + " has " +
                           std::to_string(r.x.size()) + " covariates, expected " +
                           std::to_string(covariate_names_.size()),
                       {{"row", i + 1}});
    }
    for (auto [name, v] : {std::pair{"y", r.y}, {"z1", r.z1}, {"z2", r.z2}}) {
      if (v != 0 && v != 1) {
        throw data_error("NonBinaryValue",
                         std::string("record ") + std::to_string(i + 1) +
                             ": column " + name + " must be 0 or 1",
                         {{"row", i + 1}, {"column", name}});
      }
    }
  }
}

std::optional<std::size_t> Cohort::covariate_index(const std::string& name) const {
  auto it = std::find(covariate_names_.begin(), covariate_names_.end(), name);
  if (it == covariate_names_.end()) return std::nullopt;
  return static_cast<std::size_t>(it - covariate_names_.begin());
}

Cohort parse_cohort_csv(const std::string& text, const CohortSchema& schema) {
  std::istringstream in(text);
  std::string line;
  std::vector<std::string> header;
  while (std::getline(in, line)) {
    if (!trim(line).empty()) {
      header = split_csv_line(line);
      break;
    }
  }
  if (header.empty()) throw data_error("EmptyFile", "input has no header row");
  if (!header.empty() && header[0].rfind("\xEF\xBB\xBF", 0) == 0) {
    header[0].erase(0, 3);  // UTF-8 BOM
  }

  auto column_of = [&](const std::string& name) -> std::size_t {
    auto it = std::find(header.begin(), header.end(), name);
    if (it == header.end()) {
      throw data_error("MissingColumn", "column '" + name + "' not found in header",
                       {{"column", name}});
    }
    return static_cast<std::size_t>(it - header.begin());
  };

  const std::size_t col_y = column_of(schema.outcome);
  const std::size_t col_z1 = column_of(schema.exposure1);
  const std::size_t col_z2 = column_of(schema.exposure2);

  std::vector<std::string> cov_names = schema.covariates;
  if (cov_names.empty()) {
    for (std::size_t j = 0; j < header.size(); ++j) {
      if (j != col_y && j != col_z1 && j != col_z2) cov_names.push_back(header[j]);
    }
  }
  std::vector<std::size_t> cov_cols;
  for (const auto& name : cov_names) cov_cols.push_back(column_of(name));

  std::vector<SubjectRecord> records;
  std::size_t row = 0;
  while (std::getline(in, line)) {
    if (trim(line).empty()) continue;
    ++row;
    auto fields = split_csv_line(line);
    if (fields.size() != header.size()) {
      throw data_error("MalformedRow",
                       "row " + std::to_string(row) + " has " +
                           std::to_string(fields.size()) + " fields, header has " +
                           std::to_string(header.size()),
                       {{"row", row}});
    }
    auto numeric = [&](std::size_t col) {
      const auto& s = fields[col];
      if (is_missing_token(s)) {
        throw data_error("MissingValue",
                         "row " + std::to_string(row) + ", column '" + header[col] +
                             "' is missing",
                         {{"row", row}, {"column", header[col]}});
      }
      auto v = parse_double(s);
      if (!v || !std::isfinite(*v)) {
        throw data_error("NonNumericValue",
                         "row " + std::to_string(row) + ", column '" + header[col] +
                             "' is not a finite number: '" + s + "'",
                         {{"row", row}, {"column", header[col]}, {"value", s}});
      }
      return *v;
    };
    auto binary = [&](std::size_t col) {
      double v = numeric(col);
      if (v != 0.0 && v != 1.0) {
        throw data_error("NonBinaryValue",
                         "row " + std::to_string(row) + ", column '" + header[col] +
                             "' must be 0 or 1, got '" + fields[col] + "'",
                         {{"row", row}, {"column", header[col]}, {"value", fields[col]}});
      }
      return static_cast<int>(v);
    };
    SubjectRecord rec;
    rec.y = binary(col_y);
    rec.z1 = binary(col_z1);
    rec.z2 = binary(col_z2);
    rec.x.reserve(cov_cols.size());
    for (auto c : cov_cols) rec.x.push_back(numeric(c));
    records.push_back(std::move(rec));
  }
  if (records.empty()) throw data_error("EmptyFile", "input has no data rows");
  return Cohort(std::move(records), std::move(cov_names));
}

Cohort load_cohort(const std::filesystem::path& path, const CohortSchema& schema) {
  std::ifstream in(path, std::ios::binary);
  if (!in) {
    throw data_error("FileNotFound", "cannot open '" + path.string() + "'",
                     {{"path", path.string()}});
  }
  std::ostringstream ss;
  ss << in.rdbuf();
  return parse_cohort_csv(ss.str(), schema);
}

std::string cohort_to_csv(const Cohort& cohort) {
  std::string out = "y,z1,z2";
  for (const auto& n : cohort.covariate_names()) out += "," + n;
  out += "\n";
  for (const auto& r : cohort.records()) {
    out += std::to_string(r.y) + "," + std::to_string(r.z1) + "," + std::to_string(r.z2);
    for (double v : r.x) out += "," + format_double(v);
    out += "\n";
  }
  return out;
}

void save_cohort(const Cohort& cohort, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw data_error("WriteFailed", "cannot write '" + path.string() + "'");
  out << cohort_to_csv(cohort);
}

std::size_t exposure_cell_index(int z1, int z2) {
  // (1,1) -> 0, (0,1) -> 1, (1,0) -> 2, (0,0) -> 3
  return static_cast<std::size_t>((1 - z2) * 2 + (1 - z1));
}

double lower_median(std::vector<double> values) {
  if (values.empty()) throw data_error("EmptyFile", "median of empty sample");
  std::sort(values.begin(), values.end());
  const std::size_t rank = (values.size() + 1) / 2;  // ceil(n/2), 1-based
  return values[rank - 1];
}

DescriptiveTable describe(const Cohort& cohort,
                          const std::map<std::string, double>& cuts) {
  DescriptiveTable table;
  table.n = cohort.size();
  table.overall.label = "Overall";

  auto tally = [](std::array<EventCount, 4>& cells, const SubjectRecord& r) {
    auto& c = cells[exposure_cell_index(r.z1, r.z2)];
    c.events += static_cast<std::size_t>(r.y);
    c.total += 1;
  };

  for (const auto& r : cohort.records()) tally(table.overall.cells, r);

  for (std::size_t j = 0; j < cohort.covariate_count(); ++j) {
    const auto& name = cohort.covariate_names()[j];
    std::vector<double> col;
    col.reserve(cohort.size());
    for (const auto& r : cohort.records()) col.push_back(r.x[j]);
    const bool binary =
        std::all_of(col.begin(), col.end(), [](double v) { return v == 0.0 || v == 1.0; });

    DescriptiveGroup group;
    group.covariate = name;
    group.binary = binary;
    if (binary) {
      group.rows = {{name + " = 0", {}}, {name + " = 1", {}}};
      for (const auto& r : cohort.records()) {
        tally(group.rows[r.x[j] == 1.0 ? 1 : 0].cells, r);
      }
    } else {
      auto it = cuts.find(name);
      group.cut = it != cuts.end() ? it->second : lower_median(col);
      const std::string cut = format_double(group.cut);
      const std::string kind = it != cuts.end() ? "cut" : "median";
      group.rows = {{"<= " + kind + " (" + cut + ")", {}}, {"> " + kind, {}}};
      for (const auto& r : cohort.records()) {
        tally(group.rows[r.x[j] <= group.cut ? 0 : 1].cells, r);
      }
    }
    table.groups.push_back(std::move(group));
  }
  return table;
}

nlohmann::json DescriptiveTable::to_json() const {
  auto cells_json = [](const std::array<EventCount, 4>& cells) {
    nlohmann::json arr = nlohmann::json::array();
    for (std::size_t k = 0; k < 4; ++k) {
      arr.push_back({{"z1", kExposureCells[k][0]},
                     {"z2", kExposureCells[k][1]},
                     {"events", cells[k].events},
                     {"total", cells[k].total}});
    }
    return arr;
  };
  nlohmann::json j;
  j["n"] = n;
  j["overall"] = cells_json(overall.cells);
  j["groups"] = nlohmann::json::array();
  for (const auto& g : groups) {
    nlohmann::json gj{{"covariate", g.covariate}, {"binary", g.binary}};
    if (!g.binary) gj["cut"] = g.cut;
    gj["rows"] = nlohmann::json::array();
    for (const auto& r : g.rows) {
      gj["rows"].push_back({{"label", r.label}, {"cells", cells_json(r.cells)}});
    }
    j["groups"].push_back(std::move(gj));
  }
  return j;
}

std::string DescriptiveTable::to_text() const {
  std::vector<std::pair<std::string, const std::array<EventCount, 4>*>> lines;
  lines.emplace_back(overall.label, &overall.cells);
  for (const auto& g : groups) {
    lines.emplace_back(g.covariate, nullptr);
    for (const auto& r : g.rows) lines.emplace_back("  " + r.label, &r.cells);
  }
  std::size_t w = 0;
  for (const auto& [label, _] : lines) w = std::max(w, label.size());
  constexpr int kCell = 12;

  std::ostringstream os;
  os << std::left << std::setw(static_cast<int>(w)) << "(z1, z2)";
  for (const auto& c : kExposureCells) {
    os << std::right << std::setw(kCell)
       << ("(" + std::to_string(c[0]) + ", " + std::to_string(c[1]) + ")");
  }
  os << "\n";
  for (const auto& [label, cells] : lines) {
    os << std::left << std::setw(static_cast<int>(w)) << label;
    if (cells) {
      for (const auto& c : *cells) {
        os << std::right << std::setw(kCell)
           << (std::to_string(c.events) + "/" + std::to_string(c.total));
      }
    }
    os << "\n";
  }
  return os.str();
}

}  // namespace riskint
