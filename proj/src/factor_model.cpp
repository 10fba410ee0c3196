#include "cfrank/factor_model.hpp"

#include <cmath>
#include <istream>
#include <limits>
#include <ostream>

#include "cfrank/error.hpp"
#include "text_util.hpp"

namespace cfrank {

std::vector<double> FactorModel::scores(std::size_t user) const {
  std::vector<double> s(n_items());
  auto u = user_factors.row(user);
  for (std::size_t j = 0; j < s.size(); ++j) s[j] = dot(u, item_factors.row(j));
  return s;
}

namespace {

void write_rows(std::ostream& out, const Matrix& m) {
  for (std::size_t i = 0; i < m.rows(); ++i) {
    auto row = m.row(i);
    for (std::size_t t = 0; t < row.size(); ++t) {
      if (t) out << ' ';
      out << detail::format_double(row[t]);
    }
    out << '\n';
  }
}

class LineReader {
 public:
  explicit LineReader(std::istream& in) : in_(in) {}

  std::string next(const char* what) {
    std::string line;
    while (std::getline(in_, line)) {
      ++line_no_;
      if (!detail::trim(line).empty()) return line;
    }
    throw ParseError(std::string("unexpected end of file, expected ") + what, line_no_);
  }
  std::size_t line_no() const { return line_no_; }

 private:
  std::istream& in_;
  std::size_t line_no_ = 0;
};

Matrix read_rows(LineReader& reader, std::size_t rows, std::size_t cols) {
  Matrix m(rows, cols);
  for (std::size_t i = 0; i < rows; ++i) {
    auto line = reader.next("factor row");
    auto f = detail::split_fields(line, detail::Separator::kSpace);
    if (f.size() != cols)
      throw ParseError("expected " + std::to_string(cols) + " values, got " +
                           std::to_string(f.size()),
                       reader.line_no());
    for (std::size_t t = 0; t < cols; ++t)
      m(i, t) = detail::require_number<double>(f[t], reader.line_no(), "factor value");
  }
  return m;
}

std::size_t expect_count(LineReader& reader, const std::string& key) {
  auto line = reader.next(key.c_str());
  auto f = detail::split_fields(line, detail::Separator::kSpace);
  if (f.size() != 2 || f[0] != key) throw ParseError("expected '" + key + " <count>'", reader.line_no());
  return detail::require_number<std::size_t>(f[1], reader.line_no(), key.c_str());
}

}  // namespace

void save_model(std::ostream& out, const FactorModel& model) {
  if (model.user_factors.cols() != model.item_factors.cols())
    throw DataError("user and item factors have different ranks");
  out << "CF-MODEL v1\n"
      << "mode " << (model.algorithm.empty() ? "unknown" : model.algorithm) << '\n'
      << model.n_users() << ' ' << model.n_items() << ' ' << model.rank() << '\n';
  out << "U " << model.n_users() << '\n';
  write_rows(out, model.user_factors);
  out << "V " << model.n_items() << '\n';
  write_rows(out, model.item_factors);
  if (model.side_factors) {
    out << "VPRIME " << model.side_factors->rows() << '\n';
    write_rows(out, *model.side_factors);
  }
}

FactorModel load_model(std::istream& in) {
  LineReader reader(in);
  if (detail::trim(reader.next("header")) != "CF-MODEL v1")
    throw ParseError("missing 'CF-MODEL v1' header", reader.line_no());
  FactorModel model;
  {
    const std::string mode_line = reader.next("mode");
    auto f = detail::split_fields(mode_line, detail::Separator::kSpace);
    if (f.size() != 2 || f[0] != "mode") throw ParseError("expected 'mode <tag>'", reader.line_no());
    model.algorithm = std::string(f[1]);
  }
  const std::string dims_line = reader.next("dimensions");
  auto dims = detail::split_fields(dims_line, detail::Separator::kSpace);
  if (dims.size() != 3) throw ParseError("expected 'n m r'", reader.line_no());
  auto n = detail::require_number<std::size_t>(dims[0], reader.line_no(), "n");
  auto m = detail::require_number<std::size_t>(dims[1], reader.line_no(), "m");
  auto r = detail::require_number<std::size_t>(dims[2], reader.line_no(), "r");
  if (expect_count(reader, "U") != n) throw ParseError("U row count mismatch", reader.line_no());
  model.user_factors = read_rows(reader, n, r);
  if (expect_count(reader, "V") != m) throw ParseError("V row count mismatch", reader.line_no());
  model.item_factors = read_rows(reader, m, r);
  std::string line;
  while (std::getline(in, line)) {
    if (detail::trim(line).empty()) continue;
    auto f = detail::split_fields(line, detail::Separator::kSpace);
    if (f.size() != 2 || f[0] != "VPRIME") throw ParseError("unexpected trailing content", reader.line_no() + 1);
    auto rows = detail::require_number<std::size_t>(f[1], reader.line_no() + 1, "VPRIME");
    model.side_factors = read_rows(reader, rows, r);
    break;
  }
  return model;
}

void save_model_file(const std::string& path, const FactorModel& model) {
  auto out = detail::open_output(path);
  save_model(out, model);
}

FactorModel load_model_file(const std::string& path) {
  auto in = detail::open_input(path);
  return load_model(in);
}

void save_log(std::ostream& out, const std::vector<EpochRecord>& log) {
  auto fmt = [](double x) { return std::isnan(x) ? std::string("nan") : detail::format_double(x); };
  out << "# epoch\tobjective\tmetric\tseconds\tmetric2\n";
  for (const auto& r : log)
    out << r.epoch << '\t' << detail::format_double(r.objective) << '\t' << fmt(r.metric) << '\t'
        << detail::format_double(r.seconds) << '\t' << fmt(r.metric2) << '\n';
}

std::vector<EpochRecord> load_log(std::istream& in) {
  std::vector<EpochRecord> log;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (detail::is_skippable(line)) continue;
    auto f = detail::split_fields(line, detail::Separator::kTab);
    if (f.size() != 4 && f.size() != 5)
      throw ParseError("expected 4 or 5 tab-separated fields", line_no);
    auto metric = [&](std::string_view field, const char* what) {
      return field == "nan" ? std::numeric_limits<double>::quiet_NaN()
                            : detail::require_number<double>(field, line_no, what);
    };
    EpochRecord r;
    r.epoch = detail::require_number<int>(f[0], line_no, "epoch");
    r.objective = detail::require_number<double>(f[1], line_no, "objective");
    r.metric = metric(f[2], "metric");
    r.seconds = detail::require_number<double>(f[3], line_no, "seconds");
    if (f.size() == 5) r.metric2 = metric(f[4], "metric");
    log.push_back(r);
  }
  return log;
}

}  // namespace cfrank
