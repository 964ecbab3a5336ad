#pragma once

#include <iosfwd>
#include <map>
#include <optional>
#include <string>
#include <unordered_map>
#include <vector>

#include "geodesign/date.hpp"

namespace geodesign {

// Pretest panel: one response value per (geo, day), optionally spend too.
// Dates are a single contiguous daily range shared by every geo; geos are
// held in lexicographic id order so all downstream output is independent of
// input row order.
class GeoPanel {
 public:
  GeoPanel(std::vector<std::string> geos, Date start_date, int n_days,
           std::vector<double> response, std::optional<std::vector<double>> spend);

  int n_geos() const { return static_cast<int>(geos_.size()); }
  int n_days() const { return n_days_; }
  const std::vector<std::string>& geos() const { return geos_; }
  const std::string& geo(int g) const { return geos_[static_cast<std::size_t>(g)]; }
  // -1 when the id is unknown.
  int geo_index(const std::string& id) const;

  Date start_date() const { return start_; }
  Date date(int t) const { return start_ + t; }
  DateRange date_range() const { return {start_, start_ + (n_days_ - 1)}; }
  // Day offset of d within the panel; throws when out of range.
  int day_index(Date d) const;

  double response(int g, int t) const {
    return response_[static_cast<std::size_t>(g) * n_days_ + t];
  }
  bool has_spend() const { return spend_.has_value(); }
  double spend(int g, int t) const {
    return (*spend_)[static_cast<std::size_t>(g) * n_days_ + t];
  }

 private:
  std::vector<std::string> geos_;
  std::unordered_map<std::string, int> index_;
  Date start_;
  int n_days_;
  std::vector<double> response_;              // geo-major, n_geos * n_days
  std::optional<std::vector<double>> spend_;  // same layout when present
};

// Parses "date,geo,response[,spend]". Rows may arrive in any order. Failures
// throw Error{data} naming the offending 1-based line where one exists:
// unparseable cells, negative values, duplicate (geo, date) rows, a geo
// missing some day of the panel range, or a ragged spend column.
GeoPanel load_panel(std::istream& in);

// Inverse of load_panel: header, then rows sorted by (geo, date), values in
// shortest round-trip decimal form. load_panel(write_panel(p)) == p exactly.
void write_panel(std::ostream& out, const GeoPanel& panel);

// How the pretest range is carved up for a design run.
struct PeriodSplit {
  DateRange pairing;     // most recent days; drives pair construction
  DateRange evaluation;  // earliest days; drives the RMSE evaluation
  int block_length_days;
};

// The evaluation period takes the earliest eval_days; the pairing period
// takes the rest, truncated at its oldest end so its length is a multiple of
// block_length_days. Throws Error{config} on a degenerate request and
// Error{data} when no full block survives truncation.
PeriodSplit split_periods(const GeoPanel& panel, int eval_days, int block_length_days);

// Same carve-up around an explicit evaluation range (must lie inside the
// panel; pairing period = days after it, truncated to whole blocks).
PeriodSplit split_periods_at(const GeoPanel& panel, DateRange evaluation, int block_length_days);

// Per-geo totals of consecutive non-overlapping blocks anchored at the start
// of `range`; range length must be a positive multiple of block_length_days.
struct BlockTotals {
  std::string geo;
  std::vector<double> totals;
};
std::vector<BlockTotals> block_totals(const GeoPanel& panel, DateRange range,
                                      int block_length_days);

// Response totals per geo over `range`, for the given subset of geo ids.
std::map<std::string, double> period_totals(const GeoPanel& panel,
                                            const std::vector<std::string>& geos,
                                            DateRange range);

}  // namespace geodesign
