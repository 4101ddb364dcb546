#include <charconv>
#include <cmath>
#include <fstream>
#include <sstream>

#include "csv_util.hpp"
#include "sabr/errors.hpp"
#include "sabr/market_data.hpp"

namespace sabr {
namespace detail {

std::string trim(const std::string& s) {
  const auto first = s.find_first_not_of(" \t\r\n");
  if (first == std::string::npos) return {};
  const auto last = s.find_last_not_of(" \t\r\n");
  return s.substr(first, last - first + 1);
}

std::vector<std::string> split_csv_line(const std::string& line) {
  std::vector<std::string> out;
  std::string field;
  std::stringstream ss(line);
  while (std::getline(ss, field, ',')) out.push_back(trim(field));
  if (!line.empty() && line.back() == ',') out.emplace_back();
  return out;
}

std::string read_text_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open '" + path.string() + "' for reading");
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_text_file(const std::filesystem::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot open '" + path.string() + "' for writing");
  out << text;
  if (!out) throw IoError("write to '" + path.string() + "' failed");
}

CsvTable CsvTable::parse(const std::string& text) {
  CsvTable table;
  std::stringstream ss(text);
  std::string line;
  std::size_t line_no = 0;
  bool have_header = false;
  while (std::getline(ss, line)) {
    ++line_no;
    const std::string t = trim(line);
    if (t.empty() || t.front() == '#') continue;
    auto fields = split_csv_line(t);
    if (!have_header) {
      for (std::size_t i = 0; i < fields.size(); ++i) table.index_[fields[i]] = i;
      have_header = true;
      continue;
    }
    table.rows_.push_back(std::move(fields));
    table.lines_.push_back(line_no);
  }
  if (!have_header) throw MalformedQuote("CSV input has no header line");
  return table;
}

std::string CsvTable::cell(std::size_t row, const std::string& column) const {
  const auto it = index_.find(column);
  if (it == index_.end()) return {};
  const auto& r = rows_.at(row);
  return it->second < r.size() ? r[it->second] : std::string{};
}

std::optional<double> CsvTable::optional_number(std::size_t row, const std::string& column) const {
  const std::string text = cell(row, column);
  if (text.empty()) return std::nullopt;
  double value = 0.0;
  const auto* end = text.data() + text.size();
  const auto [ptr, ec] = std::from_chars(text.data(), end, value);
  if (ec != std::errc{} || ptr != end) {
    throw MalformedQuote("line " + std::to_string(lines_.at(row)) + ": column '" + column +
                         "' is not a number: '" + text + "'");
  }
  return value;
}

double CsvTable::number(std::size_t row, const std::string& column) const {
  const auto v = optional_number(row, column);
  if (!v) {
    throw MalformedQuote("line " + std::to_string(lines_.at(row)) + ": missing value for '" +
                         column + "'");
  }
  return *v;
}

std::string fmt9(double x) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.9g", x);
  return buf;
}

}  // namespace detail

using namespace std::chrono;

year_month_day parse_date(const std::string& iso) {
  int y = 0;
  unsigned m = 0;
  unsigned d = 0;
  char dash1 = 0;
  char dash2 = 0;
  std::istringstream ss(detail::trim(iso));
  ss >> y >> dash1 >> m >> dash2 >> d;
  const year_month_day ymd{year{y}, month{m}, day{d}};
  if (!ss || dash1 != '-' || dash2 != '-' || !ymd.ok()) {
    throw MalformedQuote("invalid date '" + iso + "', expected YYYY-MM-DD");
  }
  return ymd;
}

std::string format_date(const year_month_day& d) {
  char buf[16];
  std::snprintf(buf, sizeof buf, "%04d-%02u-%02u", static_cast<int>(d.year()),
                static_cast<unsigned>(d.month()), static_cast<unsigned>(d.day()));
  return buf;
}

year_month_day add_tenor(const year_month_day& start, const std::string& tenor) {
  const std::string t = detail::trim(tenor);
  if (t.size() < 2) throw MalformedQuote("invalid tenor '" + tenor + "'");
  int n = 0;
  const auto [ptr, ec] = std::from_chars(t.data(), t.data() + t.size() - 1, n);
  if (ec != std::errc{} || ptr != t.data() + t.size() - 1 || n <= 0) {
    throw MalformedQuote("invalid tenor '" + tenor + "'");
  }
  const char unit = static_cast<char>(std::toupper(static_cast<unsigned char>(t.back())));
  auto clamp_eom = [](year_month_day ymd) {
    if (ymd.ok()) return ymd;
    return year_month_day{year_month_day_last{ymd.year(), month_day_last{ymd.month()}}};
  };
  switch (unit) {
    case 'D':
      return year_month_day{sys_days{start} + days{n}};
    case 'W':
      return year_month_day{sys_days{start} + days{7 * n}};
    case 'M':
      return clamp_eom(start + months{n});
    case 'Y':
      return clamp_eom(start + years{n});
    default:
      throw MalformedQuote("invalid tenor unit in '" + tenor + "'");
  }
}

double act365(const year_month_day& from, const year_month_day& to) {
  return static_cast<double>((sys_days{to} - sys_days{from}).count()) / 365.0;
}

namespace {

constexpr std::array<const char*, 5> kDeltaColumns = {"vol_10p", "vol_25p", "vol_atm", "vol_25c",
                                                      "vol_10c"};
constexpr std::array<const char*, 5> kBrokerColumns = {"atm", "rr25", "rr10", "str25", "str10"};

BidAsk read_bid_ask(const detail::CsvTable& table, std::size_t row, const std::string& stem) {
  return {table.number(row, stem + "_bid"), table.number(row, stem + "_ask")};
}

}  // namespace

std::vector<SmileQuoteRow> parse_quotes_csv(const std::string& text) {
  const auto table = detail::CsvTable::parse(text);
  for (const char* col : {"date", "tenor", "spot", "r_dom", "r_for"}) {
    if (!table.has_column(col)) throw MalformedQuote(std::string("missing column '") + col + "'");
  }
  const bool delta_layout = table.has_column("vol_atm_bid");
  const bool broker_layout = table.has_column("atm_bid");
  if (delta_layout == broker_layout) {
    throw MalformedQuote("quote file must carry exactly one payload layout (vol_* or atm/rr/str)");
  }

  std::vector<SmileQuoteRow> rows;
  rows.reserve(table.rows());
  for (std::size_t i = 0; i < table.rows(); ++i) {
    SmileQuoteRow row;
    row.observation_date = parse_date(table.cell(i, "date"));
    row.tenor = table.cell(i, "tenor");
    row.spot = table.number(i, "spot");
    row.rates = {table.number(i, "r_dom"), table.number(i, "r_for")};
    if (const auto t = table.optional_number(i, "T")) {
      row.expiry = *t;
    } else {
      row.expiry = act365(row.observation_date, add_tenor(row.observation_date, row.tenor));
    }
    if (delta_layout) {
      DeltaVolPayload p;
      for (std::size_t k = 0; k < 5; ++k) p.vols[k] = read_bid_ask(table, i, kDeltaColumns[k]);
      row.payload = p;
    } else {
      BrokerPayload p;
      p.atm = read_bid_ask(table, i, kBrokerColumns[0]);
      p.rr25 = read_bid_ask(table, i, kBrokerColumns[1]);
      p.rr10 = read_bid_ask(table, i, kBrokerColumns[2]);
      p.str25 = read_bid_ask(table, i, kBrokerColumns[3]);
      p.str10 = read_bid_ask(table, i, kBrokerColumns[4]);
      row.payload = p;
    }
    try {
      row.validate();
    } catch (const MalformedQuote& e) {
      throw MalformedQuote("line " + std::to_string(table.line_of(i)) + ": " + e.what());
    }
    rows.push_back(std::move(row));
  }
  return rows;
}

std::vector<SmileQuoteRow> read_quotes_csv(const std::filesystem::path& path) {
  return parse_quotes_csv(detail::read_text_file(path));
}

std::string format_quotes_csv(const std::vector<SmileQuoteRow>& rows) {
  using detail::fmt9;
  const bool broker = !rows.empty() && std::holds_alternative<BrokerPayload>(rows.front().payload);
  std::string out = "date,tenor,T,spot,r_dom,r_for";
  for (const char* stem : broker ? kBrokerColumns : kDeltaColumns) {
    out += std::string(",") + stem + "_bid," + stem + "_ask";
  }
  out += '\n';
  for (const auto& row : rows) {
    if (std::holds_alternative<BrokerPayload>(row.payload) != broker) {
      throw InvalidInput("format_quotes_csv: rows mix payload layouts");
    }
    out += format_date(row.observation_date) + ',' + row.tenor + ',' + fmt9(row.expiry) + ',' +
           fmt9(row.spot) + ',' + fmt9(row.rates.domestic_rate) + ',' +
           fmt9(row.rates.foreign_rate);
    auto put = [&](const BidAsk& q) { out += ',' + fmt9(q.bid) + ',' + fmt9(q.ask); };
    if (broker) {
      const auto& p = std::get<BrokerPayload>(row.payload);
      for (const BidAsk* q : {&p.atm, &p.rr25, &p.rr10, &p.str25, &p.str10}) put(*q);
    } else {
      for (const auto& q : std::get<DeltaVolPayload>(row.payload).vols) put(q);
    }
    out += '\n';
  }
  return out;
}

}  // namespace sabr
