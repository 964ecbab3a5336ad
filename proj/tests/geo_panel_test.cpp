#include <sstream>
#include <string>

#include "doctest.h"
#include "geodesign/error.hpp"
#include "geodesign/geo_panel.hpp"

using namespace geodesign;

namespace {

GeoPanel panel_from(const std::string& csv) {
  std::istringstream in(csv);
  return load_panel(in);
}

std::string message_of(const std::string& csv) {
  std::istringstream in(csv);
  try {
    load_panel(in);
  } catch (const Error& e) {
    CHECK(e.category() == ErrorCategory::data);
    return e.what();
  }
  return "<no error>";
}

}  // namespace

TEST_CASE("load_panel accepts unordered rows and sorts geos") {
  const GeoPanel p = panel_from(
      "date,geo,response\n"
      "2024-01-02,b,4\n"
      "2024-01-01,b,3\n"
      "2024-01-02,a,2\n"
      "2024-01-01,a,1\n");
  CHECK(p.n_geos() == 2);
  CHECK(p.n_days() == 2);
  CHECK(p.geo(0) == "a");
  CHECK(p.geo(1) == "b");
  CHECK(p.start_date() == Date::from_ymd(2024, 1, 1));
  CHECK(p.response(0, 0) == 1.0);
  CHECK(p.response(0, 1) == 2.0);
  CHECK(p.response(1, 0) == 3.0);
  CHECK(p.response(1, 1) == 4.0);
  CHECK_FALSE(p.has_spend());
  CHECK(p.geo_index("b") == 1);
  CHECK(p.geo_index("zzz") == -1);
  CHECK(p.day_index(Date::from_ymd(2024, 1, 2)) == 1);
}

TEST_CASE("load_panel reads the spend column when present") {
  const GeoPanel p = panel_from(
      "date,geo,response,spend\n"
      "2024-01-01,a,1,0.5\n"
      "2024-01-01,b,2,0\n");
  CHECK(p.has_spend());
  CHECK(p.spend(0, 0) == 0.5);
  CHECK(p.spend(1, 0) == 0.0);
}

TEST_CASE("load_panel errors carry 1-based line numbers") {
  SUBCASE("bad header") {
    const std::string m = message_of("when,geo,response\n2024-01-01,a,1\n");
    CHECK(m.find("line 1") != std::string::npos);
    CHECK(m.find("expected header") != std::string::npos);
  }
  SUBCASE("empty input") {
    CHECK(message_of("") == "empty input: no header row");
  }
  SUBCASE("header only") {
    CHECK(message_of("date,geo,response\n") == "no data rows");
  }
  SUBCASE("ragged row") {
    const std::string m = message_of(
        "date,geo,response\n"
        "2024-01-01,a,1\n"
        "2024-01-02,a\n");
    CHECK(m.find("line 3") != std::string::npos);
    CHECK(m.find("expected 3 fields, got 2") != std::string::npos);
  }
  SUBCASE("bad date") {
    const std::string m = message_of(
        "date,geo,response\n"
        "01/02/2024,a,1\n");
    CHECK(m.find("line 2") != std::string::npos);
    CHECK(m.find("bad date") != std::string::npos);
  }
  SUBCASE("bad numeric value") {
    const std::string m = message_of(
        "date,geo,response\n"
        "2024-01-01,a,abc\n");
    CHECK(m.find("line 2") != std::string::npos);
    CHECK(m.find("bad response value 'abc'") != std::string::npos);
  }
  SUBCASE("negative response") {
    const std::string m = message_of(
        "date,geo,response\n"
        "2024-01-01,a,-1\n");
    CHECK(m.find("line 2") != std::string::npos);
    CHECK(m.find("negative response") != std::string::npos);
  }
  SUBCASE("negative spend") {
    const std::string m = message_of(
        "date,geo,response,spend\n"
        "2024-01-01,a,1,-0.5\n");
    CHECK(m.find("line 2") != std::string::npos);
    CHECK(m.find("negative spend") != std::string::npos);
  }
  SUBCASE("duplicate geo-date row names both lines") {
    const std::string m = message_of(
        "date,geo,response\n"
        "2024-01-01,a,1\n"
        "2024-01-01,a,2\n");
    CHECK(m.find("line 3") != std::string::npos);
    CHECK(m.find("first at line 2") != std::string::npos);
  }
  SUBCASE("missing day names the geo and the gap") {
    const std::string m = message_of(
        "date,geo,response\n"
        "2024-01-01,a,1\n"
        "2024-01-02,a,1\n"
        "2024-01-03,a,1\n"
        "2024-01-01,b,1\n"
        "2024-01-03,b,1\n");
    CHECK(m.find("geo 'b' is missing 2024-01-02") != std::string::npos);
  }
  SUBCASE("empty geo id") {
    const std::string m = message_of(
        "date,geo,response\n"
        "2024-01-01,,1\n");
    CHECK(m.find("line 2") != std::string::npos);
    CHECK(m.find("empty geo id") != std::string::npos);
  }
}

TEST_CASE("write_panel then load_panel is an exact round trip") {
  const GeoPanel p = panel_from(
      "date,geo,response,spend\n"
      "2024-02-28,g2,0.1,0.25\n"
      "2024-02-29,g2,1e-3,0.125\n"
      "2024-03-01,g2,3,0\n"
      "2024-02-28,g1,2.5631031310892008,1\n"
      "2024-02-29,g1,100000,2\n"
      "2024-03-01,g1,0,3\n");
  std::ostringstream first;
  write_panel(first, p);
  std::istringstream back(first.str());
  const GeoPanel q = load_panel(back);
  std::ostringstream second;
  write_panel(second, q);
  CHECK(first.str() == second.str());
  CHECK(q.n_geos() == p.n_geos());
  CHECK(q.n_days() == p.n_days());
  for (int g = 0; g < p.n_geos(); ++g) {
    for (int t = 0; t < p.n_days(); ++t) {
      CHECK(q.response(g, t) == p.response(g, t));
      CHECK(q.spend(g, t) == p.spend(g, t));
    }
  }
}

TEST_CASE("split_periods carves evaluation first, pairing last, whole blocks") {
  // 42 days starting 2024-01-01; evaluation = first 14; pairing = remaining
  // 28 (a multiple of 7 already).
  const GeoPanel p = [] {
    std::ostringstream csv;
    csv << "date,geo,response\n";
    for (int t = 0; t < 42; ++t) csv << (Date::from_ymd(2024, 1, 1) + t).iso() << ",a,1\n";
    return panel_from(csv.str());
  }();

  SUBCASE("exact fit") {
    const PeriodSplit s = split_periods(p, 14, 7);
    CHECK(s.evaluation.first == Date::from_ymd(2024, 1, 1));
    CHECK(s.evaluation.last == Date::from_ymd(2024, 1, 14));
    CHECK(s.pairing.first == Date::from_ymd(2024, 1, 15));
    CHECK(s.pairing.last == Date::from_ymd(2024, 2, 11));
    CHECK(s.pairing.length() == 28);
    CHECK(s.block_length_days == 7);
  }
  SUBCASE("truncation drops oldest pairing days") {
    // eval 12 days leaves 30; only 28 fit whole weeks, so the 2 oldest of
    // the remainder are dropped and the pairing period stays anchored at the
    // panel's last day.
    const PeriodSplit s = split_periods(p, 12, 7);
    CHECK(s.evaluation.last == Date::from_ymd(2024, 1, 12));
    CHECK(s.pairing.length() == 28);
    CHECK(s.pairing.last == p.date_range().last);
    CHECK(s.pairing.first == Date::from_ymd(2024, 1, 15));
  }
  SUBCASE("block length one keeps every remaining day") {
    const PeriodSplit s = split_periods(p, 12, 1);
    CHECK(s.pairing.length() == 30);
    CHECK(s.pairing.first == Date::from_ymd(2024, 1, 13));
  }
  SUBCASE("degenerate requests throw") {
    CHECK_THROWS_AS(split_periods(p, 0, 7), Error);
    CHECK_THROWS_AS(split_periods(p, 42, 7), Error);
    CHECK_THROWS_AS(split_periods(p, 14, 0), Error);
    // 41 eval days leave 1 day: no full week.
    CHECK_THROWS_AS(split_periods(p, 41, 7), Error);
  }
  SUBCASE("explicit evaluation range variant") {
    const PeriodSplit s =
        split_periods_at(p, DateRange{Date::from_ymd(2024, 1, 3), Date::from_ymd(2024, 1, 9)}, 7);
    CHECK(s.evaluation.length() == 7);
    CHECK(s.pairing.last == p.date_range().last);
    CHECK(s.pairing.length() == 28);  // 33 days after eval -> 4 whole weeks
    CHECK_THROWS_AS(
        split_periods_at(p, DateRange{Date::from_ymd(2023, 12, 31), Date::from_ymd(2024, 1, 5)}, 7), Error);
  }
}

TEST_CASE("block_totals sums consecutive blocks per geo") {
  const GeoPanel p = panel_from(
      "date,geo,response\n"
      "2024-01-01,a,1\n"
      "2024-01-02,a,2\n"
      "2024-01-03,a,3\n"
      "2024-01-04,a,4\n"
      "2024-01-01,b,10\n"
      "2024-01-02,b,20\n"
      "2024-01-03,b,30\n"
      "2024-01-04,b,40\n");
  const auto bt = block_totals(p, p.date_range(), 2);
  REQUIRE(bt.size() == 2);
  CHECK(bt[0].geo == "a");
  REQUIRE(bt[0].totals.size() == 2);
  CHECK(bt[0].totals[0] == 3.0);
  CHECK(bt[0].totals[1] == 7.0);
  CHECK(bt[1].totals[0] == 30.0);
  CHECK(bt[1].totals[1] == 70.0);

  // Length must divide evenly.
  CHECK_THROWS_AS(block_totals(p, DateRange{Date::from_ymd(2024, 1, 1), Date::from_ymd(2024, 1, 3)}, 2), Error);
  // Block length of 1 yields the daily series.
  const auto daily = block_totals(p, p.date_range(), 1);
  CHECK(daily[0].totals == std::vector<double>{1.0, 2.0, 3.0, 4.0});
}

TEST_CASE("period_totals sums the requested geos over the range") {
  const GeoPanel p = panel_from(
      "date,geo,response\n"
      "2024-01-01,a,1\n"
      "2024-01-02,a,2\n"
      "2024-01-01,b,5\n"
      "2024-01-02,b,7\n");
  const auto totals = period_totals(p, {"b", "a"}, p.date_range());
  CHECK(totals.at("a") == 3.0);
  CHECK(totals.at("b") == 12.0);
  const auto one_day = period_totals(p, {"a"}, DateRange{Date::from_ymd(2024, 1, 2), Date::from_ymd(2024, 1, 2)});
  CHECK(one_day.at("a") == 2.0);
  CHECK_THROWS_AS(period_totals(p, {"nope"}, p.date_range()), Error);
}
