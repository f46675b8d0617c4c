#pragma once

#include <cstdio>
#include <istream>
#include <optional>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

#include "tropic/errors.hpp"
#include "tropic/ingestion.hpp"
#include "tropic/scoring.hpp"

namespace tropic {

inline constexpr std::string_view export_header =
    "publisher,state,score,confidence,label,n_voters,n_nec_urls,n_urls,n_shares";

// One CSV line of the results export, as text-level values.
struct ExportRow {
  std::string publisher;
  char state = 'U';
  std::optional<double> score;
  double confidence = 0.0;
  std::optional<char> label;
  std::size_t n_voters = 0;
  std::size_t n_nec_urls = 0;
  std::size_t n_urls = 0;
  std::size_t n_shares = 0;

  friend bool operator==(const ExportRow&, const ExportRow&) = default;
};

inline ExportRow to_export_row(const PublisherRecord& r) {
  ExportRow row;
  row.publisher = r.publisher.str();
  row.state = state_code(r.state);
  row.score = r.score;
  row.confidence = r.confidence;
  if (r.label) row.label = label_code(*r.label);
  row.n_voters = r.stats.n_voters;
  row.n_nec_urls = r.stats.n_nec_urls;
  row.n_urls = r.stats.n_urls;
  row.n_shares = r.stats.n_shares;
  return row;
}

inline std::string format_row(const ExportRow& row) {
  char score[32] = "";
  char confidence[32];
  if (row.score) std::snprintf(score, sizeof score, "%.2f", *row.score);
  std::snprintf(confidence, sizeof confidence, "%.4f", row.confidence);
  std::string out = row.publisher;
  out += ',';
  out += row.state;
  out += ',';
  out += score;
  out += ',';
  out += confidence;
  out += ',';
  if (row.label) out += *row.label;
  for (auto n : {row.n_voters, row.n_nec_urls, row.n_urls, row.n_shares}) {
    out += ',';
    out += std::to_string(n);
  }
  return out;
}

inline std::string write_export_rows(const std::vector<ExportRow>& rows) {
  std::string out(export_header);
  out += '\n';
  for (const auto& row : rows) {
    out += format_row(row);
    out += '\n';
  }
  return out;
}

// Records are already in publisher order; `only_annotated` keeps state A.
inline std::string export_csv(const std::vector<PublisherRecord>& records, bool only_annotated = false) {
  std::vector<ExportRow> rows;
  rows.reserve(records.size());
  for (const auto& r : records)
    if (!only_annotated || r.state == RecordState::annotated) rows.push_back(to_export_row(r));
  return write_export_rows(rows);
}

inline std::vector<ExportRow> parse_export_csv(std::istream& in) {
  std::vector<ExportRow> rows;
  std::string line;
  std::size_t line_no = 0;
  auto fail = [&](const std::string& why) { throw malformed_input({{line_no, why}}, false); };
  while (std::getline(in, line)) {
    ++line_no;
    if (line_no == 1) {
      if (line != export_header) fail("unexpected header");
      continue;
    }
    if (line.empty()) continue;
    std::vector<std::string> f;
    std::stringstream ss(line);
    std::string field;
    while (std::getline(ss, field, ',')) f.push_back(field);
    if (!line.empty() && line.back() == ',') f.emplace_back();
    if (f.size() != 9 || f[1].size() != 1) fail("expected 9 fields");
    ExportRow row;
    row.publisher = f[0];
    row.state = f[1][0];
    try {
      if (!f[2].empty()) row.score = std::stod(f[2]);
      row.confidence = std::stod(f[3]);
      if (!f[4].empty()) row.label = f[4][0];
      row.n_voters = std::stoull(f[5]);
      row.n_nec_urls = std::stoull(f[6]);
      row.n_urls = std::stoull(f[7]);
      row.n_shares = std::stoull(f[8]);
    } catch (const std::logic_error&) {
      fail("non-numeric field");
    }
    rows.push_back(std::move(row));
  }
  return rows;
}

}  // namespace tropic
