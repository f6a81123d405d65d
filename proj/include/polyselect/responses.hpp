#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace polyselect {

/// N x J matrix of 0-based category responses with a common category count.
/// Stored item-major so that a single item's column is contiguous.
class ResponseMatrix {
 public:
  ResponseMatrix() = default;
  ResponseMatrix(int examinees, int items, int categories);
  /// Builds from examinee rows; every entry must lie in 0..categories-1.
  static ResponseMatrix from_rows(const std::vector<std::vector<int>>& rows, int categories);

  int examinees() const { return n_; }
  int items() const { return j_; }
  int categories() const { return m_; }

  int operator()(int i, int j) const { return data_[static_cast<std::size_t>(j) * n_ + i]; }
  void set(int i, int j, int category);

  std::span<const std::uint8_t> item_column(int j) const {
    return {data_.data() + static_cast<std::size_t>(j) * n_, static_cast<std::size_t>(n_)};
  }

  /// Observed frequency of each category for item j.
  std::vector<int> category_counts(int j) const;
  /// 0-based indices of items with at least one unobserved category.
  std::vector<int> items_with_null_category() const;

  /// Rows reordered (or subset) by `order`.
  ResponseMatrix select_rows(std::span<const int> order) const;

  bool operator==(const ResponseMatrix&) const = default;

 private:
  int n_ = 0;
  int j_ = 0;
  int m_ = 0;
  std::vector<std::uint8_t> data_;
};

/// Raised when an item lacks one or more response categories.
class NullCategoryError : public std::invalid_argument {
 public:
  explicit NullCategoryError(std::vector<int> items);
  const std::vector<int>& items() const { return items_; }

 private:
  std::vector<int> items_;
};

/// Throws NullCategoryError naming every offending item (1-based in the message).
void require_no_null_category(const ResponseMatrix& responses);

/// CSV with header `item1,...,itemJ` and one integer row per examinee.
void write_responses_csv(std::ostream& out, const ResponseMatrix& responses);
void write_responses_csv(const std::filesystem::path& path, const ResponseMatrix& responses);

/// Reads the CSV format above. When `categories` is 0 the category count is
/// inferred as (largest observed value + 1). Throws std::runtime_error with
/// a line number on malformed input.
ResponseMatrix read_responses_csv(std::istream& in, int categories = 0);
ResponseMatrix read_responses_csv(const std::filesystem::path& path, int categories = 0);

}  // namespace polyselect
