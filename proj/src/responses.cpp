#include "polyselect/responses.hpp"

#include <algorithm>
#include <charconv>
#include <fstream>
#include <sstream>

#include "polyselect/model.hpp"

namespace polyselect {

ResponseMatrix::ResponseMatrix(int examinees, int items, int categories)
    : n_(examinees), j_(items), m_(categories) {
  if (examinees < 0 || items < 0) throw std::invalid_argument("negative response matrix shape");
  if (categories < 2 || categories > kMaxCategories)
    throw std::invalid_argument("category count must lie in 2.." + std::to_string(kMaxCategories));
  data_.assign(static_cast<std::size_t>(n_) * j_, 0);
}

ResponseMatrix ResponseMatrix::from_rows(const std::vector<std::vector<int>>& rows,
                                         int categories) {
  const int n = static_cast<int>(rows.size());
  const int j = n == 0 ? 0 : static_cast<int>(rows.front().size());
  ResponseMatrix out(n, j, categories);
  for (int i = 0; i < n; ++i) {
    if (static_cast<int>(rows[i].size()) != j)
      throw std::invalid_argument("ragged response rows");
    for (int c = 0; c < j; ++c) out.set(i, c, rows[i][c]);
  }
  return out;
}

void ResponseMatrix::set(int i, int j, int category) {
  if (category < 0 || category >= m_)
    throw std::invalid_argument("response category " + std::to_string(category) +
                                " outside 0.." + std::to_string(m_ - 1));
  data_[static_cast<std::size_t>(j) * n_ + i] = static_cast<std::uint8_t>(category);
}

std::vector<int> ResponseMatrix::category_counts(int j) const {
  std::vector<int> counts(m_, 0);
  for (auto u : item_column(j)) ++counts[u];
  return counts;
}

std::vector<int> ResponseMatrix::items_with_null_category() const {
  std::vector<int> out;
  for (int j = 0; j < j_; ++j) {
    auto counts = category_counts(j);
    if (std::find(counts.begin(), counts.end(), 0) != counts.end()) out.push_back(j);
  }
  return out;
}

ResponseMatrix ResponseMatrix::select_rows(std::span<const int> order) const {
  ResponseMatrix out(static_cast<int>(order.size()), j_, m_);
  for (int r = 0; r < out.n_; ++r)
    for (int j = 0; j < j_; ++j) out.set(r, j, (*this)(order[r], j));
  return out;
}

namespace {

std::string null_category_message(const std::vector<int>& items) {
  std::ostringstream msg;
  msg << "null category in item(s)";
  for (int j : items) msg << " item" << (j + 1);
  return msg.str();
}

}  // namespace

NullCategoryError::NullCategoryError(std::vector<int> items)
    : std::invalid_argument(null_category_message(items)), items_(std::move(items)) {}

void require_no_null_category(const ResponseMatrix& responses) {
  auto bad = responses.items_with_null_category();
  if (!bad.empty()) throw NullCategoryError(std::move(bad));
}

void write_responses_csv(std::ostream& out, const ResponseMatrix& responses) {
  for (int j = 0; j < responses.items(); ++j) out << (j ? "," : "") << "item" << (j + 1);
  out << '\n';
  for (int i = 0; i < responses.examinees(); ++i) {
    for (int j = 0; j < responses.items(); ++j) out << (j ? "," : "") << responses(i, j);
    out << '\n';
  }
}

void write_responses_csv(const std::filesystem::path& path, const ResponseMatrix& responses) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  write_responses_csv(out, responses);
}

namespace {

std::vector<std::string_view> split_commas(std::string_view line) {
  std::vector<std::string_view> fields;
  std::size_t start = 0;
  while (true) {
    auto pos = line.find(',', start);
    fields.push_back(line.substr(start, pos == std::string_view::npos ? pos : pos - start));
    if (pos == std::string_view::npos) break;
    start = pos + 1;
  }
  return fields;
}

std::string_view trim(std::string_view s) {
  while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
  while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) s.remove_suffix(1);
  return s;
}

}  // namespace

ResponseMatrix read_responses_csv(std::istream& in, int categories) {
  std::string line;
  if (!std::getline(in, line)) throw std::runtime_error("empty response file");
  const auto header = split_commas(trim(line));
  const int items = static_cast<int>(header.size());
  if (items == 0 || trim(header.front()).empty())
    throw std::runtime_error("response file has no header row");

  std::vector<std::vector<int>> rows;
  int largest = 0;
  int line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    auto body = trim(line);
    if (body.empty()) continue;
    auto fields = split_commas(body);
    if (static_cast<int>(fields.size()) != items)
      throw std::runtime_error("line " + std::to_string(line_no) + ": expected " +
                               std::to_string(items) + " fields");
    std::vector<int> row(items);
    for (int j = 0; j < items; ++j) {
      auto field = trim(fields[j]);
      int value = 0;
      auto [ptr, ec] = std::from_chars(field.data(), field.data() + field.size(), value);
      if (ec != std::errc{} || ptr != field.data() + field.size() || value < 0)
        throw std::runtime_error("line " + std::to_string(line_no) +
                                 ": non-negative integer expected in column " +
                                 std::to_string(j + 1));
      largest = std::max(largest, value);
      row[j] = value;
    }
    rows.push_back(std::move(row));
  }
  if (rows.empty()) throw std::runtime_error("response file has no data rows");
  const int m = categories > 0 ? categories : largest + 1;
  if (largest >= m)
    throw std::runtime_error("response value " + std::to_string(largest) +
                             " exceeds category count " + std::to_string(m));
  return ResponseMatrix::from_rows(rows, m);
}

ResponseMatrix read_responses_csv(const std::filesystem::path& path, int categories) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot read " + path.string());
  return read_responses_csv(in, categories);
}

}  // namespace polyselect
