#include <gtest/gtest.h>

#include <sstream>

#include "tropic/export.hpp"
#include "tropic/guidance.hpp"
#include "tropic/synthetic.hpp"

using namespace tropic;

namespace {

PublisherRecord record(const char* id, RecordState st, std::optional<double> score, double conf,
                       std::optional<Label> label, PublisherStats stats = {}) {
  PublisherRecord r;
  r.publisher = PublisherId::from_normalized(id);
  r.state = st;
  r.score = score;
  r.confidence = conf;
  r.label = label;
  r.stats = stats;
  return r;
}

}  // namespace

TEST(ExportCsv, AnnotatedRow) {
  auto csv = export_csv({record("ex.com", RecordState::annotated, 75, 1.0, Label::trustworthy, {3, 2, 4, 9})});
  EXPECT_EQ(csv, std::string(export_header) + "\nex.com,A,75.00,1.0000,T,3,2,4,9\n");
}

TEST(ExportCsv, UnclassifiedRow) {
  auto csv = export_csv({record("u.org", RecordState::unclassified, std::nullopt, 0.0, std::nullopt, {0, 0, 1, 1})});
  EXPECT_EQ(csv, std::string(export_header) + "\nu.org,U,,0.0000,,0,0,1,1\n");
}

TEST(ExportCsv, PredictedRounding) {
  auto csv = export_csv({record("p.net", RecordState::predicted, 59.996, 1.0 / 6.0, Label::untrustworthy)});
  EXPECT_EQ(csv, std::string(export_header) + "\np.net,P,60.00,0.1667,N,0,0,0,0\n");
}

TEST(ExportCsv, OnlyAnnotatedFilter) {
  std::vector<PublisherRecord> rs{record("a.com", RecordState::annotated, 10, 1.0, Label::untrustworthy),
                                  record("b.com", RecordState::predicted, 80, 0.5, Label::trustworthy)};
  EXPECT_EQ(export_csv(rs, true), std::string(export_header) + "\na.com,A,10.00,1.0000,N,0,0,0,0\n");
}

TEST(ExportCsv, HeaderOnlyWhenEmpty) { EXPECT_EQ(export_csv({}), std::string(export_header) + "\n"); }

TEST(ExportCsv, RoundTripOnPipelineOutput) {
  auto data = synthetic::planted_discussion({});
  auto state = run_pipeline(data.edges, data.annotated, PipelineConfig{});
  const auto csv = export_csv(state.records);
  EXPECT_EQ(csv.find('\r'), std::string::npos);
  std::istringstream in(csv);
  auto rows = parse_export_csv(in);
  ASSERT_EQ(rows.size(), state.records.size());
  for (std::size_t k = 0; k < rows.size(); ++k) {
    const auto expected = to_export_row(state.records[k]);
    EXPECT_EQ(rows[k].publisher, expected.publisher);
    EXPECT_EQ(rows[k].state, expected.state);
    EXPECT_EQ(rows[k].label, expected.label);
    EXPECT_EQ(rows[k].score.has_value(), expected.score.has_value());
    if (rows[k].score) {
      EXPECT_NEAR(*rows[k].score, *expected.score, 0.005);
    }
    EXPECT_NEAR(rows[k].confidence, expected.confidence, 0.00005);
    EXPECT_EQ(rows[k].n_voters, expected.n_voters);
    EXPECT_EQ(rows[k].n_shares, expected.n_shares);
    EXPECT_EQ(format_row(rows[k]), format_row(expected));
  }
  std::istringstream in2(write_export_rows(rows));
  EXPECT_EQ(parse_export_csv(in2), rows);
}

TEST(ParseExportCsv, RejectsBadInput) {
  std::istringstream bad_header("publisher,state\n");
  EXPECT_THROW(parse_export_csv(bad_header), malformed_input);
  std::istringstream short_row(std::string(export_header) + "\na.com,A,1\n");
  EXPECT_THROW(parse_export_csv(short_row), malformed_input);
}
