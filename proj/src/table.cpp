#include "divrel/table.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <sstream>
#include <unordered_map>
#include <unordered_set>

namespace divrel {

std::string format_double(double v) {
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, res.ptr);
}

std::optional<double> parse_double(const std::string& s) {
  if (s.empty()) return std::nullopt;
  double v = 0.0;
  const char* first = s.data();
  const char* last = s.data() + s.size();
  const auto res = std::from_chars(first, last, v);
  if (res.ec != std::errc{} || res.ptr != last) return std::nullopt;
  return v;
}

Eigen::Index Table::find_column(const std::string& name) const {
  for (std::size_t i = 0; i < columns.size(); ++i)
    if (columns[i] == name) return static_cast<Eigen::Index>(i);
  return -1;
}

bool Table::column_is_numeric(Eigen::Index col) const {
  for (const auto& row : rows)
    if (!parse_double(row[static_cast<std::size_t>(col)])) return false;
  return true;
}

namespace {

bool needs_quoting(const std::string& cell) {
  return cell.find_first_of(",\"\r\n") != std::string::npos;
}

void write_cell(std::string& out, const std::string& cell) {
  if (!needs_quoting(cell)) {
    out += cell;
    return;
  }
  out += '"';
  for (const char c : cell) {
    if (c == '"') out += '"';
    out += c;
  }
  out += '"';
}

// one record, RFC-4180 quoting; advances pos past the trailing newline.
// line is maintained for error messages.
std::vector<std::string> read_record(const std::string& text, std::size_t& pos,
                                     std::size_t& line) {
  std::vector<std::string> cells;
  std::string cell;
  bool quoted = false;
  const std::size_t start_line = line;
  while (true) {
    if (pos >= text.size()) {
      if (quoted) throw ParseError("line " + std::to_string(start_line) +
                                   ": unterminated quoted field");
      cells.push_back(cell);
      return cells;
    }
    const char c = text[pos];
    if (quoted) {
      if (c == '"') {
        if (pos + 1 < text.size() && text[pos + 1] == '"') {
          cell += '"';
          pos += 2;
        } else {
          quoted = false;
          ++pos;
        }
      } else {
        if (c == '\n') ++line;
        cell += c;
        ++pos;
      }
      continue;
    }
    switch (c) {
      case '"':
        quoted = true;
        ++pos;
        break;
      case ',':
        cells.push_back(cell);
        cell.clear();
        ++pos;
        break;
      case '\r':
        ++pos;
        if (pos < text.size() && text[pos] == '\n') ++pos;
        ++line;
        cells.push_back(cell);
        return cells;
      case '\n':
        ++pos;
        ++line;
        cells.push_back(cell);
        return cells;
      default:
        cell += c;
        ++pos;
    }
  }
}

}  // namespace

Table parse_csv(const std::string& text) {
  if (text.empty()) throw ParseError("line 1: empty input, header expected");
  std::size_t pos = 0;
  std::size_t line = 1;
  Table table;
  table.columns = read_record(text, pos, line);
  {
    std::unordered_set<std::string> seen;
    for (const auto& name : table.columns)
      if (!seen.insert(name).second)
        throw ParseError("line 1: duplicate header '" + name + "'");
  }
  while (pos < text.size()) {
    const std::size_t record_line = line;
    auto cells = read_record(text, pos, line);
    if (cells.size() == 1 && cells[0].empty() && pos >= text.size())
      break;  // trailing newline
    if (cells.size() != table.columns.size())
      throw ParseError("line " + std::to_string(record_line) + ": expected " +
                       std::to_string(table.columns.size()) + " fields, got " +
                       std::to_string(cells.size()));
    table.rows.push_back(std::move(cells));
  }
  return table;
}

Table load_csv(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ParseError("cannot open '" + path + "'");
  std::ostringstream buf;
  buf << in.rdbuf();
  return parse_csv(buf.str());
}

std::string write_csv(const Table& table) {
  std::string out;
  for (std::size_t i = 0; i < table.columns.size(); ++i) {
    if (i) out += ',';
    write_cell(out, table.columns[i]);
  }
  out += '\n';
  for (const auto& row : table.rows) {
    for (std::size_t i = 0; i < row.size(); ++i) {
      if (i) out += ',';
      write_cell(out, row[i]);
    }
    out += '\n';
  }
  return out;
}

void save_csv(const Table& table, const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw ParseError("cannot write '" + path + "'");
  out << write_csv(table);
  if (!out) throw ParseError("write failed for '" + path + "'");
}

Table table_from_matrix(const Eigen::MatrixXd& m) {
  Table t;
  t.columns.reserve(static_cast<std::size_t>(m.cols()));
  for (Eigen::Index j = 0; j < m.cols(); ++j)
    t.columns.push_back("x" + std::to_string(j));
  t.rows.reserve(static_cast<std::size_t>(m.rows()));
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    std::vector<std::string> row;
    row.reserve(static_cast<std::size_t>(m.cols()));
    for (Eigen::Index j = 0; j < m.cols(); ++j)
      row.push_back(format_double(m(i, j)));
    t.rows.push_back(std::move(row));
  }
  return t;
}

Eigen::MatrixXd matrix_from_table(const Table& table) {
  Eigen::MatrixXd m(static_cast<Eigen::Index>(table.rows.size()),
                    static_cast<Eigen::Index>(table.columns.size()));
  for (std::size_t j = 0; j < table.columns.size(); ++j) {
    if (!table.column_is_numeric(static_cast<Eigen::Index>(j)))
      throw SchemaError("column '" + table.columns[j] + "' is not numeric");
    for (std::size_t i = 0; i < table.rows.size(); ++i)
      m(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) =
          *parse_double(table.rows[i][j]);
  }
  return m;
}

namespace {

bool atom_matches(const PredicateAtom& atom, const std::string& cell, bool numeric_col) {
  const bool relational = atom.op == CompareOp::Lt || atom.op == CompareOp::Le ||
                          atom.op == CompareOp::Gt || atom.op == CompareOp::Ge;
  if (std::holds_alternative<double>(atom.literal) ||
      std::holds_alternative<std::vector<double>>(atom.literal)) {
    if (!numeric_col)
      throw SchemaError("numeric literal against non-numeric column '" + atom.column + "'");
    const double v = *parse_double(cell);
    if (atom.op == CompareOp::In) {
      const auto& set = std::get<std::vector<double>>(atom.literal);
      return std::find(set.begin(), set.end(), v) != set.end();
    }
    const double lit = std::get<double>(atom.literal);
    switch (atom.op) {
      case CompareOp::Eq: return v == lit;
      case CompareOp::Ne: return v != lit;
      case CompareOp::Lt: return v < lit;
      case CompareOp::Le: return v <= lit;
      case CompareOp::Gt: return v > lit;
      case CompareOp::Ge: return v >= lit;
      default: break;
    }
    return false;
  }
  if (relational)
    throw SchemaError("ordering comparison needs a numeric column and literal");
  if (atom.op == CompareOp::In) {
    const auto& set = std::get<std::vector<std::string>>(atom.literal);
    return std::find(set.begin(), set.end(), cell) != set.end();
  }
  const auto& lit = std::get<std::string>(atom.literal);
  return atom.op == CompareOp::Eq ? cell == lit : cell != lit;
}

}  // namespace

Table filter_rows(const Table& table, const Predicate& predicate) {
  struct Bound {
    std::size_t col;
    bool numeric;
  };
  std::vector<Bound> bound;
  bound.reserve(predicate.atoms.size());
  for (const auto& atom : predicate.atoms) {
    const Eigen::Index col = table.find_column(atom.column);
    if (col < 0) throw SchemaError("unknown column '" + atom.column + "'");
    const bool numeric = table.column_is_numeric(col);
    const bool wants_number = std::holds_alternative<double>(atom.literal) ||
                              std::holds_alternative<std::vector<double>>(atom.literal);
    if (wants_number && !numeric)
      throw SchemaError("numeric literal against non-numeric column '" + atom.column + "'");
    bound.push_back({static_cast<std::size_t>(col), numeric});
  }
  Table out;
  out.columns = table.columns;
  for (const auto& row : table.rows) {
    bool keep = true;
    for (std::size_t a = 0; a < predicate.atoms.size(); ++a) {
      if (!atom_matches(predicate.atoms[a], row[bound[a].col], bound[a].numeric)) {
        keep = false;
        break;
      }
    }
    if (keep) out.rows.push_back(row);
  }
  return out;
}

Eigen::MatrixXd numeric_matrix(const Table& table,
                               const std::vector<std::string>& columns,
                               Encoding encoding) {
  if (columns.empty()) throw SchemaError("no columns selected");

  struct Plan {
    std::size_t col;
    bool numeric;
    std::vector<std::string> categories;  // first-appearance order
  };
  std::vector<Plan> plans;
  Eigen::Index width = 0;
  for (const auto& name : columns) {
    const Eigen::Index col = table.find_column(name);
    if (col < 0) throw SchemaError("unknown column '" + name + "'");
    Plan plan;
    plan.col = static_cast<std::size_t>(col);
    plan.numeric = table.column_is_numeric(col);
    if (!plan.numeric) {
      std::unordered_map<std::string, std::size_t> index;
      for (const auto& row : table.rows) {
        const auto& cell = row[plan.col];
        if (index.emplace(cell, plan.categories.size()).second)
          plan.categories.push_back(cell);
      }
    }
    width += plan.numeric ? 1
             : encoding == Encoding::OneHot
                 ? static_cast<Eigen::Index>(plan.categories.size())
                 : 1;
    plans.push_back(std::move(plan));
  }

  Eigen::MatrixXd m =
      Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(table.rows.size()), width);
  for (std::size_t i = 0; i < table.rows.size(); ++i) {
    Eigen::Index out_col = 0;
    for (const auto& plan : plans) {
      const auto& cell = table.rows[i][plan.col];
      if (plan.numeric) {
        m(static_cast<Eigen::Index>(i), out_col++) = *parse_double(cell);
      } else {
        const auto it = std::find(plan.categories.begin(), plan.categories.end(), cell);
        const auto idx = static_cast<Eigen::Index>(it - plan.categories.begin());
        if (encoding == Encoding::OneHot) {
          m(static_cast<Eigen::Index>(i), out_col + idx) = 1.0;
          out_col += static_cast<Eigen::Index>(plan.categories.size());
        } else {
          m(static_cast<Eigen::Index>(i), out_col++) = static_cast<double>(idx);
        }
      }
    }
  }
  return m;
}

}  // namespace divrel
