#include <ismoe/dataset.hpp>

#include <ismoe/errors.hpp>

#include <charconv>
#include <cmath>
#include <fstream>
#include <sstream>

namespace ismoe {

namespace {

std::vector<std::string> split_line(const std::string &line) {
  std::vector<std::string> out;
  std::string field;
  std::istringstream in(line);
  while (std::getline(in, field, ',')) {
    while (!field.empty() && (field.back() == '\r' || field.back() == ' ')) {
      field.pop_back();
    }
    std::size_t start = field.find_first_not_of(' ');
    out.push_back(start == std::string::npos ? std::string{} : field.substr(start));
  }
  if (!line.empty() && line.back() == ',') {
    out.emplace_back();
  }
  return out;
}

double parse_double(const std::string &text, const std::filesystem::path &path,
                    std::size_t line_no) {
  double value = 0.0;
  const char *begin = text.data();
  const char *end = begin + text.size();
  const auto [ptr, ec] = std::from_chars(begin, end, value);
  if (ec != std::errc{} || ptr != end || text.empty()) {
    std::ostringstream msg;
    msg << path.string() << ":" << line_no << ": cannot parse number '" << text << "'";
    throw InvalidArgument(msg.str());
  }
  return value;
}

} // namespace

void Dataset::validate() const {
  if (inputs.rows() < 1) {
    throw InvalidArgument("dataset must contain at least one row");
  }
  if (inputs.cols() < 1) {
    throw InvalidArgument("dataset inputs need at least one column");
  }
  if (outputs.size() != inputs.rows()) {
    throw ShapeError("dataset outputs and inputs have different row counts");
  }
  if (!inputs.allFinite() || !outputs.allFinite()) {
    throw InvalidArgument("dataset contains non-finite values");
  }
  if (true_function && true_function->size() != outputs.size()) {
    throw ShapeError("dataset true-function metadata has the wrong length");
  }
  if (labels && static_cast<Index>(labels->size()) != outputs.size()) {
    throw ShapeError("dataset label metadata has the wrong length");
  }
}

Dataset Dataset::subset(std::span<const Index> rows) const {
  Dataset out;
  const Index m = static_cast<Index>(rows.size());
  out.inputs.resize(m, inputs.cols());
  out.outputs.resize(m);
  if (true_function) {
    out.true_function = Vector(m);
  }
  if (labels) {
    out.labels = std::vector<int>(static_cast<std::size_t>(m));
  }
  for (Index i = 0; i < m; ++i) {
    const Index r = rows[static_cast<std::size_t>(i)];
    if (r < 0 || r >= size()) {
      throw InvalidArgument("dataset subset index out of range");
    }
    out.inputs.row(i) = inputs.row(r);
    out.outputs(i) = outputs(r);
    if (true_function) {
      (*out.true_function)(i) = (*true_function)(r);
    }
    if (labels) {
      (*out.labels)[static_cast<std::size_t>(i)] = (*labels)[static_cast<std::size_t>(r)];
    }
  }
  return out;
}

std::string format_double(double v) {
  char buf[32];
  const auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), v,
                                       std::chars_format::general, 17);
  if (ec != std::errc{}) {
    throw InvalidArgument("cannot format floating-point value");
  }
  return std::string(buf, ptr);
}

void write_csv(const Dataset &data, const std::filesystem::path &path) {
  data.validate();
  std::ofstream out(path, std::ios::binary);
  if (!out) {
    throw IoError("cannot open '" + path.string() + "' for writing");
  }
  for (Index d = 0; d < data.dim(); ++d) {
    out << 'x' << d << ',';
  }
  out << "y\n";
  for (Index i = 0; i < data.size(); ++i) {
    for (Index d = 0; d < data.dim(); ++d) {
      out << format_double(data.inputs(i, d)) << ',';
    }
    out << format_double(data.outputs(i)) << '\n';
  }
  if (!out) {
    throw IoError("write failed for '" + path.string() + "'");
  }
}

Dataset read_csv(const std::filesystem::path &path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) {
    throw IoError("cannot open '" + path.string() + "' for reading");
  }
  std::string line;
  if (!std::getline(in, line)) {
    throw InvalidArgument(path.string() + ": missing CSV header");
  }
  const auto header = split_line(line);
  if (header.size() < 2 || header.back() != "y") {
    throw InvalidArgument(path.string() + ": header must be x0,...,x{D-1},y");
  }
  for (std::size_t d = 0; d + 1 < header.size(); ++d) {
    if (header[d] != "x" + std::to_string(d)) {
      throw InvalidArgument(path.string() + ": unexpected header column '" + header[d] +
                            "'");
    }
  }
  const std::size_t n_cols = header.size();

  std::vector<double> values;
  std::size_t line_no = 1;
  std::size_t rows = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty() || line == "\r") {
      continue;
    }
    const auto fields = split_line(line);
    if (fields.size() != n_cols) {
      std::ostringstream msg;
      msg << path.string() << ":" << line_no << ": expected " << n_cols
          << " columns, found " << fields.size();
      throw InvalidArgument(msg.str());
    }
    for (const auto &f : fields) {
      values.push_back(parse_double(f, path, line_no));
    }
    ++rows;
  }

  Dataset data;
  const Index n = static_cast<Index>(rows);
  const Index dim = static_cast<Index>(n_cols - 1);
  data.inputs.resize(n, dim);
  data.outputs.resize(n);
  for (Index i = 0; i < n; ++i) {
    for (Index d = 0; d < dim; ++d) {
      data.inputs(i, d) = values[static_cast<std::size_t>(i * (dim + 1) + d)];
    }
    data.outputs(i) = values[static_cast<std::size_t>(i * (dim + 1) + dim)];
  }
  data.validate();
  return data;
}

} // namespace ismoe
