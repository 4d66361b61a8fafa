#pragma once

#include <optional>
#include <string>
#include <variant>
#include <vector>

#include <Eigen/Core>

#include "divrel/errors.hpp"

namespace divrel {

// round-trip-exact shortest decimal form
std::string format_double(double v);
std::optional<double> parse_double(const std::string& s);

// rectangular cells of strings; numeric-ness of a column is decided by
// whether every cell in it parses as a double
struct Table {
  std::vector<std::string> columns;
  std::vector<std::vector<std::string>> rows;

  Eigen::Index find_column(const std::string& name) const;  // -1 if absent
  bool column_is_numeric(Eigen::Index col) const;
};

Table load_csv(const std::string& path);
Table parse_csv(const std::string& text);
void save_csv(const Table& table, const std::string& path);
std::string write_csv(const Table& table);

Table table_from_matrix(const Eigen::MatrixXd& m);
Eigen::MatrixXd matrix_from_table(const Table& table);  // all columns, all numeric

enum class CompareOp { Eq, Ne, Lt, Le, Gt, Ge, In };

struct PredicateAtom {
  std::string column;
  CompareOp op = CompareOp::Eq;
  // scalar literal for the six comparisons, the set for In
  std::variant<double, std::string, std::vector<std::string>, std::vector<double>> literal;
};

// conjunction of atoms
struct Predicate {
  std::vector<PredicateAtom> atoms;
};

Table filter_rows(const Table& table, const Predicate& predicate);

enum class Encoding { OneHot, Ordinal };

Eigen::MatrixXd numeric_matrix(const Table& table,
                               const std::vector<std::string>& columns,
                               Encoding encoding = Encoding::OneHot);

}  // namespace divrel
