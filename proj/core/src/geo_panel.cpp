#include "geodesign/geo_panel.hpp"

#include <algorithm>
#include <limits>
#include <ostream>
#include <sstream>

#include "geodesign/csv.hpp"
#include "geodesign/error.hpp"

namespace geodesign {

namespace {

[[noreturn]] void data_error(long line, const std::string& what) {
  std::ostringstream os;
  os << "line " << line << ": " << what;
  throw Error(ErrorCategory::data, os.str());
}

}  // namespace

GeoPanel::GeoPanel(std::vector<std::string> geos, Date start_date, int n_days,
                   std::vector<double> response, std::optional<std::vector<double>> spend)
    : geos_(std::move(geos)),
      start_(start_date),
      n_days_(n_days),
      response_(std::move(response)),
      spend_(std::move(spend)) {
  if (n_days_ < 1 || geos_.empty()) {
    throw Error(ErrorCategory::data, "panel requires at least one geo and one day");
  }
  const std::size_t cells = geos_.size() * static_cast<std::size_t>(n_days_);
  if (response_.size() != cells || (spend_ && spend_->size() != cells)) {
    throw Error(ErrorCategory::internal, "panel value buffers do not match geo/day grid");
  }
  if (!std::is_sorted(geos_.begin(), geos_.end())) {
    throw Error(ErrorCategory::internal, "panel geos must be sorted");
  }
  for (int g = 0; g < n_geos(); ++g) {
    if (g > 0 && geos_[static_cast<std::size_t>(g)] == geos_[static_cast<std::size_t>(g) - 1]) {
      throw Error(ErrorCategory::data, "duplicate geo id: " + geos_[static_cast<std::size_t>(g)]);
    }
    index_.emplace(geos_[static_cast<std::size_t>(g)], g);
  }
}

int GeoPanel::geo_index(const std::string& id) const {
  const auto it = index_.find(id);
  return it == index_.end() ? -1 : it->second;
}

int GeoPanel::day_index(Date d) const {
  const int t = d - start_;
  if (t < 0 || t >= n_days_) {
    throw Error(ErrorCategory::internal, "date " + d.iso() + " outside panel range");
  }
  return t;
}

GeoPanel load_panel(std::istream& in) {
  const std::vector<CsvRow> rows = read_csv(in);
  if (rows.empty()) throw Error(ErrorCategory::data, "empty input: no header row");

  const CsvRow& header = rows.front();
  const bool has_spend = header.fields.size() == 4;
  if (!(header.fields.size() == 3 || has_spend) || header.fields[0] != "date" ||
      header.fields[1] != "geo" || header.fields[2] != "response" ||
      (has_spend && header.fields[3] != "spend")) {
    data_error(header.line, "expected header 'date,geo,response' or 'date,geo,response,spend'");
  }
  if (rows.size() == 1) throw Error(ErrorCategory::data, "no data rows");

  struct Cell {
    double response;
    double spend;
    long line;
  };
  // (geo, date serial) -> cell; ordered so the panel assembles sorted.
  std::map<std::pair<std::string, std::int32_t>, Cell> cells;
  std::int32_t min_serial = std::numeric_limits<std::int32_t>::max();
  std::int32_t max_serial = std::numeric_limits<std::int32_t>::min();

  for (std::size_t r = 1; r < rows.size(); ++r) {
    const CsvRow& row = rows[r];
    if (row.fields.size() != header.fields.size()) {
      data_error(row.line, "expected " + std::to_string(header.fields.size()) +
                               " fields, got " + std::to_string(row.fields.size()));
    }
    const std::optional<Date> d = Date::parse(row.fields[0]);
    if (!d) data_error(row.line, "bad date '" + row.fields[0] + "' (want YYYY-MM-DD)");
    if (row.fields[1].empty()) data_error(row.line, "empty geo id");
    Cell cell{0.0, 0.0, row.line};
    if (!parse_double(row.fields[2], cell.response)) {
      data_error(row.line, "bad response value '" + row.fields[2] + "'");
    }
    if (cell.response < 0.0) data_error(row.line, "negative response");
    if (has_spend) {
      if (!parse_double(row.fields[3], cell.spend)) {
        data_error(row.line, "bad spend value '" + row.fields[3] + "'");
      }
      if (cell.spend < 0.0) data_error(row.line, "negative spend");
    }
    const auto key = std::make_pair(row.fields[1], d->serial());
    const auto [it, inserted] = cells.emplace(key, cell);
    if (!inserted) {
      data_error(row.line, "duplicate row for geo '" + row.fields[1] + "' on " + d->iso() +
                               " (first at line " + std::to_string(it->second.line) + ")");
    }
    min_serial = std::min(min_serial, d->serial());
    max_serial = std::max(max_serial, d->serial());
  }

  const int n_days = max_serial - min_serial + 1;
  std::vector<std::string> geos;
  for (const auto& [key, cell] : cells) {
    if (geos.empty() || geos.back() != key.first) geos.push_back(key.first);
  }

  // Every geo must cover the full panel range, one row per day.
  const std::size_t n_cells = geos.size() * static_cast<std::size_t>(n_days);
  std::vector<double> response(n_cells, 0.0);
  std::optional<std::vector<double>> spend;
  if (has_spend) spend.emplace(n_cells, 0.0);
  std::vector<int> seen(geos.size(), 0);
  {
    std::size_t g = 0;
    for (const auto& [key, cell] : cells) {
      while (geos[g] != key.first) ++g;
      const int t = key.second - min_serial;
      response[g * static_cast<std::size_t>(n_days) + static_cast<std::size_t>(t)] =
          cell.response;
      if (has_spend) {
        (*spend)[g * static_cast<std::size_t>(n_days) + static_cast<std::size_t>(t)] = cell.spend;
      }
      ++seen[g];
    }
  }
  for (std::size_t g = 0; g < geos.size(); ++g) {
    if (seen[g] != n_days) {
      // Name the first missing date to make the gap easy to locate.
      for (int t = 0; t < n_days; ++t) {
        const auto key = std::make_pair(geos[g], min_serial + t);
        if (cells.find(key) == cells.end()) {
          throw Error(ErrorCategory::data,
                      "geo '" + geos[g] + "' is missing " + Date(min_serial + t).iso() +
                          "; panel dates must be contiguous with every geo present each day");
        }
      }
    }
  }

  return GeoPanel(std::move(geos), Date(min_serial), n_days, std::move(response),
                  std::move(spend));
}

void write_panel(std::ostream& out, const GeoPanel& panel) {
  out << (panel.has_spend() ? "date,geo,response,spend\n" : "date,geo,response\n");
  for (int g = 0; g < panel.n_geos(); ++g) {
    for (int t = 0; t < panel.n_days(); ++t) {
      out << panel.date(t).iso() << ',' << panel.geo(g) << ','
          << format_double(panel.response(g, t));
      if (panel.has_spend()) out << ',' << format_double(panel.spend(g, t));
      out << '\n';
    }
  }
}

PeriodSplit split_periods(const GeoPanel& panel, int eval_days, int block_length_days) {
  if (eval_days < 1) throw Error(ErrorCategory::config, "eval_days must be >= 1");
  if (eval_days >= panel.n_days()) {
    throw Error(ErrorCategory::data, "evaluation period (" + std::to_string(eval_days) +
                                         " days) leaves no pairing days in a " +
                                         std::to_string(panel.n_days()) + "-day panel");
  }
  const DateRange evaluation{panel.start_date(), panel.start_date() + (eval_days - 1)};
  return split_periods_at(panel, evaluation, block_length_days);
}

PeriodSplit split_periods_at(const GeoPanel& panel, DateRange evaluation,
                             int block_length_days) {
  if (block_length_days < 1) {
    throw Error(ErrorCategory::config, "block_length_days must be >= 1");
  }
  if (evaluation.first > evaluation.last || evaluation.first < panel.start_date() ||
      evaluation.last > panel.date_range().last) {
    throw Error(ErrorCategory::config, "evaluation range outside panel");
  }
  const Date pairing_last = panel.date_range().last;
  const int available = pairing_last - evaluation.last;  // days after evaluation
  const int usable = (available / block_length_days) * block_length_days;
  if (usable < block_length_days) {
    throw Error(ErrorCategory::data,
                "no full " + std::to_string(block_length_days) +
                    "-day block available for the pairing period after the evaluation period");
  }
  const DateRange pairing{pairing_last - (usable - 1), pairing_last};
  return PeriodSplit{pairing, evaluation, block_length_days};
}

std::vector<BlockTotals> block_totals(const GeoPanel& panel, DateRange range,
                                      int block_length_days) {
  if (block_length_days < 1) {
    throw Error(ErrorCategory::config, "block_length_days must be >= 1");
  }
  const int len = range.length();
  if (len <= 0 || len % block_length_days != 0) {
    throw Error(ErrorCategory::config,
                "range length " + std::to_string(len) + " is not a positive multiple of " +
                    std::to_string(block_length_days));
  }
  const int t0 = panel.day_index(range.first);
  panel.day_index(range.last);  // bounds check
  const int n_blocks = len / block_length_days;
  std::vector<BlockTotals> out;
  out.reserve(static_cast<std::size_t>(panel.n_geos()));
  for (int g = 0; g < panel.n_geos(); ++g) {
    BlockTotals bt;
    bt.geo = panel.geo(g);
    bt.totals.resize(static_cast<std::size_t>(n_blocks), 0.0);
    for (int b = 0; b < n_blocks; ++b) {
      double sum = 0.0;
      for (int k = 0; k < block_length_days; ++k) {
        sum += panel.response(g, t0 + b * block_length_days + k);
      }
      bt.totals[static_cast<std::size_t>(b)] = sum;
    }
    out.push_back(std::move(bt));
  }
  return out;
}

std::map<std::string, double> period_totals(const GeoPanel& panel,
                                            const std::vector<std::string>& geos,
                                            DateRange range) {
  const int t0 = panel.day_index(range.first);
  const int t1 = panel.day_index(range.last);
  std::map<std::string, double> out;
  for (const std::string& id : geos) {
    const int g = panel.geo_index(id);
    if (g < 0) throw Error(ErrorCategory::data, "unknown geo id '" + id + "'");
    double sum = 0.0;
    for (int t = t0; t <= t1; ++t) sum += panel.response(g, t);
    out[id] = sum;
  }
  return out;
}

}  // namespace geodesign
