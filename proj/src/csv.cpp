#include "calnet/csv.hpp"

#include <cstdio>
#include <fstream>
#include <sstream>

namespace calnet {

std::string format_double(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

namespace {

std::vector<std::string> split_line(const std::string& line) {
  std::vector<std::string> fields;
  std::string field;
  std::istringstream ss(line);
  while (std::getline(ss, field, ',')) fields.push_back(field);
  if (!line.empty() && line.back() == ',') fields.push_back("");
  return fields;
}

[[noreturn]] void fail(const std::string& path, std::size_t line, const std::string& what) {
  throw DataError(path + ":" + std::to_string(line) + ": " + what);
}

double parse_double(const std::string& s, const std::string& path, std::size_t line) {
  try {
    std::size_t pos = 0;
    const double v = std::stod(s, &pos);
    if (pos != s.size()) fail(path, line, "trailing characters in number '" + s + "'");
    return v;
  } catch (const DataError&) {
    throw;
  } catch (const std::exception&) {
    fail(path, line, "malformed number '" + s + "'");
  }
}

long parse_long(const std::string& s, const std::string& path, std::size_t line) {
  try {
    std::size_t pos = 0;
    const long v = std::stol(s, &pos);
    if (pos != s.size()) fail(path, line, "trailing characters in integer '" + s + "'");
    return v;
  } catch (const DataError&) {
    throw;
  } catch (const std::exception&) {
    fail(path, line, "malformed integer '" + s + "'");
  }
}

int parse_int(const std::string& s, const std::string& path, std::size_t line) {
  return static_cast<int>(parse_long(s, path, line));
}

class CsvReader {
 public:
  CsvReader(const std::string& path, const std::string& expected_header) : path_(path), in_(path) {
    if (!in_) throw DataError("cannot open " + path);
    std::string header;
    if (!std::getline(in_, header)) fail(path_, 1, "missing header row");
    if (!header.empty() && header.back() == '\r') header.pop_back();
    if (header != expected_header)
      fail(path_, 1, "unexpected header '" + header + "', expected '" + expected_header + "'");
    line_ = 1;
  }

  bool next(std::vector<std::string>& fields, std::size_t expected) {
    std::string line;
    while (std::getline(in_, line)) {
      ++line_;
      if (!line.empty() && line.back() == '\r') line.pop_back();
      if (line.empty()) continue;
      fields = split_line(line);
      if (fields.size() != expected)
        fail(path_, line_, "expected " + std::to_string(expected) + " fields, got " +
                               std::to_string(fields.size()));
      return true;
    }
    return false;
  }

  const std::string& path() const { return path_; }
  std::size_t line() const { return line_; }

 private:
  std::string path_;
  std::ifstream in_;
  std::size_t line_ = 0;
};

std::ofstream open_out(const std::string& path) {
  std::ofstream out(path);
  if (!out) throw DataError("cannot write " + path);
  return out;
}

}  // namespace

std::vector<ColocationRecord> read_colocation_csv(const std::string& path) {
  CsvReader reader(path, "t1,t2,sensor1,sensor2,y1,y2");
  std::vector<ColocationRecord> records;
  std::vector<std::string> f;
  while (reader.next(f, 6)) {
    ColocationRecord rec;
    rec.t1 = parse_double(f[0], path, reader.line());
    rec.t2 = parse_double(f[1], path, reader.line());
    rec.s1 = parse_int(f[2], path, reader.line());
    rec.s2 = parse_int(f[3], path, reader.line());
    rec.y1 = parse_double(f[4], path, reader.line());
    rec.y2 = parse_double(f[5], path, reader.line());
    records.push_back(rec);
  }
  return records;
}

void write_colocation_csv(const std::string& path, const std::vector<ColocationRecord>& records) {
  auto out = open_out(path);
  out << "t1,t2,sensor1,sensor2,y1,y2\n";
  for (const auto& r : records)
    out << format_double(r.t1) << ',' << format_double(r.t2) << ',' << r.s1 << ',' << r.s2 << ','
        << format_double(r.y1) << ',' << format_double(r.y2) << '\n';
}

SensorTable read_sensor_csv(const std::string& path) {
  CsvReader reader(path, "id,type,is_reference");
  SensorTable table;
  std::vector<std::string> f;
  while (reader.next(f, 3)) {
    SensorInfo info;
    info.id = parse_int(f[0], path, reader.line());
    if (f[1] == "static")
      info.kind = SensorKind::Static;
    else if (f[1] == "mobile")
      info.kind = SensorKind::Mobile;
    else
      fail(path, reader.line(), "sensor type must be 'static' or 'mobile', got '" + f[1] + "'");
    if (f[2] == "1" || f[2] == "true")
      info.is_reference = true;
    else if (f[2] == "0" || f[2] == "false")
      info.is_reference = false;
    else
      fail(path, reader.line(), "is_reference must be 0/1, got '" + f[2] + "'");
    table.add(info);
  }
  return table;
}

void write_sensor_csv(const std::string& path, const SensorTable& sensors) {
  auto out = open_out(path);
  out << "id,type,is_reference\n";
  for (const auto& s : sensors.all())
    out << s.id << ',' << (s.kind == SensorKind::Mobile ? "mobile" : "static") << ','
        << (s.is_reference ? 1 : 0) << '\n';
}

std::vector<LabelRow> read_label_csv(const std::string& path) {
  CsvReader reader(path, "item_id,labeler_id,label,order_index");
  std::vector<LabelRow> rows;
  std::vector<std::string> f;
  while (reader.next(f, 4)) {
    LabelRow row;
    row.item = parse_long(f[0], path, reader.line());
    row.labeler = parse_int(f[1], path, reader.line());
    row.label = parse_int(f[2], path, reader.line());
    row.order_index = parse_long(f[3], path, reader.line());
    rows.push_back(row);
  }
  return rows;
}

void write_label_csv(const std::string& path, const std::vector<LabelRow>& rows) {
  auto out = open_out(path);
  out << "item_id,labeler_id,label,order_index\n";
  for (const auto& r : rows)
    out << r.item << ',' << r.labeler << ',' << r.label << ',' << r.order_index << '\n';
}

std::vector<std::pair<long, int>> read_item_truth_csv(const std::string& path) {
  CsvReader reader(path, "item_id,label");
  std::vector<std::pair<long, int>> rows;
  std::vector<std::string> f;
  while (reader.next(f, 2))
    rows.emplace_back(parse_long(f[0], path, reader.line()),
                      parse_int(f[1], path, reader.line()));
  return rows;
}

void write_item_truth_csv(const std::string& path,
                          const std::vector<std::pair<long, int>>& rows) {
  auto out = open_out(path);
  out << "item_id,label\n";
  for (const auto& [item, label] : rows) out << item << ',' << label << '\n';
}

std::vector<EvalRow> read_truth_csv(const std::string& path) {
  CsvReader reader(path, "sensor,time,y_raw,true_scaling,true_pollution");
  std::vector<EvalRow> rows;
  std::vector<std::string> f;
  while (reader.next(f, 5)) {
    EvalRow row;
    row.sensor = parse_int(f[0], path, reader.line());
    row.time = parse_double(f[1], path, reader.line());
    row.y_raw = parse_double(f[2], path, reader.line());
    row.true_scaling = parse_double(f[3], path, reader.line());
    row.true_pollution = parse_double(f[4], path, reader.line());
    rows.push_back(row);
  }
  return rows;
}

void write_truth_csv(const std::string& path, const std::vector<EvalRow>& rows) {
  auto out = open_out(path);
  out << "sensor,time,y_raw,true_scaling,true_pollution\n";
  for (const auto& r : rows)
    out << r.sensor << ',' << format_double(r.time) << ',' << format_double(r.y_raw) << ','
        << format_double(r.true_scaling) << ',' << format_double(r.true_pollution) << '\n';
}

std::vector<CalibratedRow> read_calibrated_csv(const std::string& path) {
  CsvReader reader(path, "sensor,time,y_raw,cal_mean,cal_std");
  std::vector<CalibratedRow> rows;
  std::vector<std::string> f;
  while (reader.next(f, 5)) {
    CalibratedRow row;
    row.sensor = parse_int(f[0], path, reader.line());
    row.time = parse_double(f[1], path, reader.line());
    row.y_raw = parse_double(f[2], path, reader.line());
    row.cal_mean = parse_double(f[3], path, reader.line());
    row.cal_std = parse_double(f[4], path, reader.line());
    rows.push_back(row);
  }
  return rows;
}

void write_calibrated_csv(const std::string& path, const std::vector<CalibratedRow>& rows) {
  auto out = open_out(path);
  out << "sensor,time,y_raw,cal_mean,cal_std\n";
  for (const auto& r : rows)
    out << r.sensor << ',' << format_double(r.time) << ',' << format_double(r.y_raw) << ','
        << format_double(r.cal_mean) << ',' << format_double(r.cal_std) << '\n';
}

void write_param_posterior_csv(const std::string& path,
                               const std::vector<ParamPosteriorRow>& rows) {
  auto out = open_out(path);
  const std::size_t P = rows.empty() ? 0 : rows.front().samples.size();
  out << "sensor,time,param,post_mean,post_std";
  for (std::size_t p = 0; p < P; ++p) out << ",sample_" << p;
  out << '\n';
  for (const auto& r : rows) {
    if (r.samples.size() != P) throw DataError("inconsistent sample counts in posterior rows");
    out << r.sensor << ',' << format_double(r.time) << ',' << r.param << ','
        << format_double(r.post_mean) << ',' << format_double(r.post_std);
    for (double s : r.samples) out << ',' << format_double(s);
    out << '\n';
  }
}

std::vector<PosteriorRow> read_posterior_csv(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open " + path);
  std::string header;
  if (!std::getline(in, header)) throw DataError(path + ":1: missing header row");
  if (!header.empty() && header.back() == '\r') header.pop_back();
  const auto head = split_line(header);
  if (head.size() < 2 || head[0] != "item_id")
    throw DataError(path + ":1: expected header item_id,p_0,...");
  const std::size_t A = head.size() - 1;
  std::vector<PosteriorRow> rows;
  std::string line;
  std::size_t lineno = 1;
  while (std::getline(in, line)) {
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    const auto f = split_line(line);
    if (f.size() != A + 1) fail(path, lineno, "wrong field count");
    PosteriorRow row;
    row.item = parse_long(f[0], path, lineno);
    row.p.resize(static_cast<Eigen::Index>(A));
    for (std::size_t c = 0; c < A; ++c)
      row.p(static_cast<Eigen::Index>(c)) = parse_double(f[c + 1], path, lineno);
    rows.push_back(std::move(row));
  }
  return rows;
}

void write_posterior_csv(const std::string& path, const std::vector<PosteriorRow>& rows) {
  auto out = open_out(path);
  const Eigen::Index A = rows.empty() ? 0 : rows.front().p.size();
  out << "item_id";
  for (Eigen::Index c = 0; c < A; ++c) out << ",p_" << c;
  out << '\n';
  for (const auto& r : rows) {
    if (r.p.size() != A) throw DataError("inconsistent class counts in posterior rows");
    out << r.item;
    for (Eigen::Index c = 0; c < A; ++c) out << ',' << format_double(r.p(c));
    out << '\n';
  }
}

std::vector<ColocationRecord> preprocess_records(const std::vector<ColocationRecord>& records,
                                                 const IngestFilters& filters) {
  if (filters.average_block < 0) throw ConfigError("average_block must be >= 0");
  std::vector<ColocationRecord> kept;
  kept.reserve(records.size());
  for (const auto& r : records) {
    if (filters.min_value && (r.y1 < *filters.min_value || r.y2 < *filters.min_value)) continue;
    if (filters.max_value && (r.y1 > *filters.max_value || r.y2 > *filters.max_value)) continue;
    kept.push_back(r);
  }
  if (filters.average_block <= 1) return kept;

  // Block-average consecutive runs of the same sensor pair.
  std::vector<ColocationRecord> out;
  std::size_t i = 0;
  const std::size_t block = static_cast<std::size_t>(filters.average_block);
  while (i < kept.size()) {
    std::size_t j = i;
    while (j < kept.size() && kept[j].s1 == kept[i].s1 && kept[j].s2 == kept[i].s2 &&
           j - i < block)
      ++j;
    ColocationRecord avg;
    avg.s1 = kept[i].s1;
    avg.s2 = kept[i].s2;
    const double n = static_cast<double>(j - i);
    for (std::size_t k = i; k < j; ++k) {
      avg.t1 += kept[k].t1 / n;
      avg.t2 += kept[k].t2 / n;
      avg.y1 += kept[k].y1 / n;
      avg.y2 += kept[k].y2 / n;
    }
    out.push_back(avg);
    i = j;
  }
  return out;
}

std::vector<ColocationRecord> ingest(const std::string& colocation_csv,
                                     const IngestFilters& filters) {
  return preprocess_records(read_colocation_csv(colocation_csv), filters);
}

}  // namespace calnet
