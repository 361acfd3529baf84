#pragma once

#include <algorithm>
#include <charconv>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <map>
#include <numeric>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

#include "fui/error.hpp"
#include "fui/models/dataset.hpp"
#include "fui/vecnum/rng.hpp"

namespace fui::data {

enum class ColumnKind { kNumeric, kCategorical, kLabel, kIgnore };

inline const char* to_string(ColumnKind k) {
  switch (k) {
    case ColumnKind::kNumeric: return "numeric";
    case ColumnKind::kCategorical: return "categorical";
    case ColumnKind::kLabel: return "label";
    case ColumnKind::kIgnore: return "ignore";
  }
  return "?";
}

namespace detail {

inline std::string_view trim(std::string_view s) {
  const auto ws = " \t\r\n";
  const auto b = s.find_first_not_of(ws);
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(ws);
  return s.substr(b, e - b + 1);
}

inline bool parse_double(std::string_view s, double& out) {
  s = trim(s);
  if (s.empty()) return false;
  if (s.front() == '+') s.remove_prefix(1);
  const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), out);
  return ec == std::errc() && ptr == s.data() + s.size() && std::isfinite(out);
}

// Comma split with double-quoted fields ("" escapes a quote).
inline std::vector<std::string> split_csv_line(std::string_view line) {
  std::vector<std::string> out;
  std::string cur;
  bool quoted = false;
  for (std::size_t i = 0; i < line.size(); ++i) {
    const char c = line[i];
    if (quoted) {
      if (c == '"' && i + 1 < line.size() && line[i + 1] == '"') {
        cur += '"';
        ++i;
      } else if (c == '"') {
        quoted = false;
      } else {
        cur += c;
      }
    } else if (c == '"') {
      quoted = true;
    } else if (c == ',') {
      out.emplace_back(trim(cur));
      cur.clear();
    } else {
      cur += c;
    }
  }
  out.emplace_back(trim(cur));
  return out;
}

}  // namespace detail

/// Column typing read from a flat `column = kind` file.
struct Schema {
  std::map<std::string, ColumnKind> columns;

  static Schema parse(std::string_view text) {
    Schema schema;
    std::istringstream in{std::string(text)};
    std::string line;
    int lineno = 0;
    while (std::getline(in, line)) {
      ++lineno;
      auto body = detail::trim(std::string_view(line).substr(0, line.find('#')));
      if (body.empty()) continue;
      const auto eq = body.find('=');
      if (eq == std::string_view::npos)
        throw IoError("schema line " + std::to_string(lineno) + ": expected 'column = kind'");
      const std::string key(detail::trim(body.substr(0, eq)));
      const std::string value(detail::trim(body.substr(eq + 1)));
      ColumnKind kind;
      if (value == "numeric") kind = ColumnKind::kNumeric;
      else if (value == "categorical") kind = ColumnKind::kCategorical;
      else if (value == "label") kind = ColumnKind::kLabel;
      else if (value == "ignore") kind = ColumnKind::kIgnore;
      else throw IoError("schema line " + std::to_string(lineno) + ": unknown column kind '" + value + "'");
      schema.columns[key] = kind;
    }
    return schema;
  }

  static Schema load(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open schema file " + path.string());
    std::stringstream ss;
    ss << in.rdbuf();
    return parse(ss.str());
  }
};

/// Raw CSV contents: header plus string cells, with source line numbers.
struct CsvTable {
  std::vector<std::string> header;
  std::vector<std::vector<std::string>> rows;
  std::vector<std::size_t> line_numbers;

  std::size_t column(const std::string& name) const {
    const auto it = std::find(header.begin(), header.end(), name);
    if (it == header.end()) throw IoError("CSV has no column '" + name + "'");
    return static_cast<std::size_t>(it - header.begin());
  }
};

inline CsvTable read_csv(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open CSV file " + path.string());
  CsvTable table;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (lineno == 1 && line.size() >= 3 && line.compare(0, 3, "\xEF\xBB\xBF") == 0) line.erase(0, 3);
    if (detail::trim(line).empty()) continue;
    auto cells = detail::split_csv_line(line);
    if (table.header.empty()) {
      table.header = std::move(cells);
      continue;
    }
    if (cells.size() != table.header.size())
      throw IoError(path.string() + ":" + std::to_string(lineno) + ": expected " +
                    std::to_string(table.header.size()) + " fields, found " + std::to_string(cells.size()));
    table.rows.push_back(std::move(cells));
    table.line_numbers.push_back(lineno);
  }
  if (table.header.empty()) throw IoError(path.string() + ": empty CSV file");
  if (table.rows.empty()) throw IoError(path.string() + ": CSV file has a header but no rows");
  return table;
}

/// Column encoders fitted on training rows: z-scored numeric columns and
/// one-hot categorical columns, emitted in header order; labels mapped to
/// dense ids in first-appearance order.
struct TabularEncoder {
  struct Feature {
    std::string name;
    ColumnKind kind = ColumnKind::kNumeric;
    double mean = 0.0;
    double stddev = 1.0;
    std::vector<std::string> categories;
  };

  std::vector<Feature> features;
  std::string label_column;
  std::vector<std::string> label_values;

  std::size_t input_dim() const {
    std::size_t d = 0;
    for (const auto& f : features) d += f.kind == ColumnKind::kNumeric ? 1 : f.categories.size();
    return d;
  }

  static TabularEncoder fit(const CsvTable& table, std::span<const std::size_t> rows, const Schema& schema,
                            const std::string& label_column) {
    if (rows.empty()) throw IoError("TabularEncoder::fit: no training rows");
    TabularEncoder enc;
    enc.label_column = label_column;
    const std::size_t label_idx = table.column(label_column);
    for (std::size_t c = 0; c < table.header.size(); ++c) {
      const auto& name = table.header[c];
      if (c == label_idx) continue;
      const auto it = schema.columns.find(name);
      if (it == schema.columns.end()) throw IoError("schema does not type column '" + name + "'");
      if (it->second == ColumnKind::kIgnore) continue;
      if (it->second == ColumnKind::kLabel)
        throw IoError("column '" + name + "' is typed label but the label column is '" + label_column + "'");
      Feature f;
      f.name = name;
      f.kind = it->second;
      if (f.kind == ColumnKind::kNumeric) {
        double sum = 0.0, sq = 0.0;
        for (std::size_t r : rows) {
          double v;
          if (!detail::parse_double(table.rows[r][c], v))
            throw IoError("line " + std::to_string(table.line_numbers[r]) + ": column '" + name +
                          "' is not numeric: '" + table.rows[r][c] + "'");
          sum += v;
          sq += v * v;
        }
        const double n = static_cast<double>(rows.size());
        f.mean = sum / n;
        const double var = std::max(0.0, sq / n - f.mean * f.mean);
        f.stddev = var > 0.0 ? std::sqrt(var) : 1.0;
      } else {
        for (std::size_t r : rows) {
          const auto& v = table.rows[r][c];
          if (std::find(f.categories.begin(), f.categories.end(), v) == f.categories.end())
            f.categories.push_back(v);
        }
      }
      enc.features.push_back(std::move(f));
    }
    if (enc.features.empty()) throw IoError("schema leaves no feature columns");
    for (std::size_t r : rows) {
      const auto& v = table.rows[r][label_idx];
      if (std::find(enc.label_values.begin(), enc.label_values.end(), v) == enc.label_values.end())
        enc.label_values.push_back(v);
    }
    if (enc.label_values.size() < 2) throw IoError("label column '" + label_column + "' has fewer than 2 values");
    return enc;
  }

  /// Unseen categories encode as all-zero; an unseen label is an error.
  models::LabeledDataset encode(const CsvTable& table, std::span<const std::size_t> rows) const {
    const std::size_t d = input_dim();
    const std::size_t label_idx = table.column(label_column);
    std::vector<std::size_t> cols;
    for (const auto& f : features) cols.push_back(table.column(f.name));
    std::vector<double> x;
    std::vector<int> y;
    x.reserve(rows.size() * d);
    for (std::size_t r : rows) {
      const auto& cells = table.rows[r];
      for (std::size_t k = 0; k < features.size(); ++k) {
        const auto& f = features[k];
        const auto& cell = cells[cols[k]];
        if (f.kind == ColumnKind::kNumeric) {
          double v;
          if (!detail::parse_double(cell, v))
            throw IoError("line " + std::to_string(table.line_numbers[r]) + ": column '" + f.name +
                          "' is not numeric: '" + cell + "'");
          x.push_back((v - f.mean) / f.stddev);
        } else {
          for (const auto& cat : f.categories) x.push_back(cat == cell ? 1.0 : 0.0);
        }
      }
      const auto& lv = cells[label_idx];
      const auto it = std::find(label_values.begin(), label_values.end(), lv);
      if (it == label_values.end())
        throw IoError("line " + std::to_string(table.line_numbers[r]) + ": unknown label value '" + lv + "'");
      y.push_back(static_cast<int>(it - label_values.begin()));
    }
    return models::LabeledDataset(d, static_cast<int>(label_values.size()), std::move(x), std::move(y));
  }
};

/// Loads every row as training data.
inline models::LabeledDataset load_csv(const std::filesystem::path& path, const std::string& label_column,
                                       const Schema& schema) {
  const CsvTable table = read_csv(path);
  std::vector<std::size_t> rows(table.rows.size());
  std::iota(rows.begin(), rows.end(), std::size_t{0});
  return TabularEncoder::fit(table, rows, schema, label_column).encode(table, rows);
}

/// Label column named in the schema.
inline std::string schema_label_column(const Schema& schema) {
  std::string label;
  for (const auto& [name, kind] : schema.columns) {
    if (kind != ColumnKind::kLabel) continue;
    if (!label.empty()) throw IoError("schema names more than one label column");
    label = name;
  }
  if (label.empty()) throw IoError("schema names no label column");
  return label;
}

struct CsvSplit {
  models::LabeledDataset train;
  models::LabeledDataset test;
  TabularEncoder encoder;
};

/// Seeded train/test split; encoders are fitted on the training rows only.
inline CsvSplit load_csv_split(const std::filesystem::path& path, const Schema& schema, double test_fraction,
                               const vecnum::RngStream& rng) {
  if (!(test_fraction > 0.0 && test_fraction < 1.0))
    throw ParameterError("load_csv_split: test_fraction must be in (0, 1)");
  const CsvTable table = read_csv(path);
  std::vector<std::size_t> order(table.rows.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  auto eng = rng.engine();
  std::shuffle(order.begin(), order.end(), eng);
  const auto n_test = static_cast<std::size_t>(std::llround(test_fraction * static_cast<double>(order.size())));
  if (n_test == 0 || n_test >= order.size()) throw IoError(path.string() + ": too few rows to split");
  std::vector<std::size_t> test_rows(order.begin(), order.begin() + static_cast<std::ptrdiff_t>(n_test));
  std::vector<std::size_t> train_rows(order.begin() + static_cast<std::ptrdiff_t>(n_test), order.end());
  CsvSplit out;
  out.encoder = TabularEncoder::fit(table, train_rows, schema, schema_label_column(schema));
  out.train = out.encoder.encode(table, train_rows);
  out.test = out.encoder.encode(table, test_rows);
  return out;
}

}  // namespace fui::data
