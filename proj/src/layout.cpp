#include "polyselect/layout.hpp"

#include <array>
#include <cmath>
#include <stdexcept>

namespace polyselect {

namespace {

std::string indexed(const char* name, int a) { return std::string(name) + "[" + std::to_string(a) + "]"; }

std::string indexed(const char* name, int a, int b) {
  return std::string(name) + "[" + std::to_string(a) + "," + std::to_string(b) + "]";
}

}  // namespace

std::vector<double> complete_steps(std::span<const double> free_steps) {
  std::vector<double> tau(free_steps.begin(), free_steps.end());
  double sum = 0.0;
  for (double t : free_steps) sum += t;
  tau.push_back(-sum);
  return tau;
}

ParameterLayout::ParameterLayout(ModelKind model, int items, int categories)
    : model_(model), items_(items), m_(categories) {
  if (items < 1) throw std::invalid_argument("layout needs at least one item");
  if (categories < 2 || categories > kMaxCategories)
    throw std::invalid_argument("unsupported category count");
  switch (model) {
    case ModelKind::grm:
      item_block_ = m_;
      natural_item_block_ = m_;
      break;
    case ModelKind::gpcm:
      item_block_ = m_;
      natural_item_block_ = m_ + 1;
      break;
    case ModelKind::pcm:
      item_block_ = m_ - 1;
      natural_item_block_ = m_;
      break;
    case ModelKind::rsm:
      item_block_ = 1;
      shared_block_ = m_ - 2;
      natural_item_block_ = 1;
      natural_shared_block_ = m_ - 1;
      break;
  }
}

int ParameterLayout::owner(int c) const {
  if (c < 0 || c >= free_count()) throw std::out_of_range("free coordinate out of range");
  if (c >= shared_offset()) return kShared;
  return c / item_block_;
}

std::vector<std::string> ParameterLayout::free_names() const {
  std::vector<std::string> names;
  names.reserve(free_count());
  for (int j = 1; j <= items_; ++j) {
    switch (model_) {
      case ModelKind::grm:
        names.push_back(indexed("log_a", j));
        names.push_back(indexed("b", j, 1));
        for (int k = 1; k <= m_ - 2; ++k) names.push_back(indexed("log_gap", j, k));
        break;
      case ModelKind::gpcm:
        names.push_back(indexed("log_a", j));
        [[fallthrough]];
      case ModelKind::pcm:
        names.push_back(indexed("delta", j));
        for (int k = 1; k <= m_ - 2; ++k) names.push_back(indexed("tau", j, k));
        break;
      case ModelKind::rsm:
        names.push_back(indexed("delta", j));
        break;
    }
  }
  for (int k = 1; k <= shared_block_; ++k) names.push_back(indexed("tau", k));
  return names;
}

std::vector<std::string> ParameterLayout::natural_names() const {
  std::vector<std::string> names;
  names.reserve(natural_count());
  for (int j = 1; j <= items_; ++j) {
    switch (model_) {
      case ModelKind::grm:
        names.push_back(indexed("a", j));
        for (int k = 1; k <= m_ - 1; ++k) names.push_back(indexed("b", j, k));
        break;
      case ModelKind::gpcm:
        names.push_back(indexed("a", j));
        [[fallthrough]];
      case ModelKind::pcm:
        names.push_back(indexed("delta", j));
        for (int k = 1; k <= m_ - 1; ++k) names.push_back(indexed("tau", j, k));
        break;
      case ModelKind::rsm:
        names.push_back(indexed("delta", j));
        break;
    }
  }
  for (int k = 1; k <= natural_shared_block_; ++k) names.push_back(indexed("tau", k));
  return names;
}

void ParameterLayout::check_bank(const ItemBank& bank) const {
  if (bank.model() != model_ || bank.size() != items_ || bank.categories() != m_)
    throw std::invalid_argument("item bank does not match parameter layout");
}

std::vector<double> ParameterLayout::to_free(const ItemBank& bank) const {
  check_bank(bank);
  std::vector<double> out;
  out.reserve(free_count());
  for (int j = 0; j < items_; ++j) {
    if (model_ == ModelKind::grm) {
      const auto& item = bank.grm_items()[j];
      out.push_back(std::log(item.a));
      out.push_back(item.b[0]);
      for (int k = 1; k < m_ - 1; ++k) out.push_back(std::log(item.b[k] - item.b[k - 1]));
      continue;
    }
    const auto& item = bank.gpcm_items()[j];
    if (model_ == ModelKind::gpcm) out.push_back(std::log(item.a));
    out.push_back(item.delta);
    if (model_ != ModelKind::rsm)
      for (int k = 0; k < m_ - 2; ++k) out.push_back(item.tau[k]);
  }
  if (model_ == ModelKind::rsm)
    for (int k = 0; k < m_ - 2; ++k) out.push_back((*bank.shared_tau())[k]);
  return out;
}

ItemBank ParameterLayout::from_free(std::span<const double> coords) const {
  if (static_cast<int>(coords.size()) != free_count())
    throw std::invalid_argument("free coordinate vector has wrong length");
  if (model_ == ModelKind::grm) {
    std::vector<GrmItem> items(items_);
    for (int j = 0; j < items_; ++j) {
      const double* c = coords.data() + item_offset(j);
      items[j].a = std::exp(c[0]);
      items[j].b.resize(m_ - 1);
      items[j].b[0] = c[1];
      for (int k = 1; k < m_ - 1; ++k) items[j].b[k] = items[j].b[k - 1] + std::exp(c[k + 1]);
    }
    return ItemBank::graded(std::move(items));
  }
  std::vector<GpcmItem> items(items_);
  for (int j = 0; j < items_; ++j) {
    const double* c = coords.data() + item_offset(j);
    int pos = 0;
    items[j].a = model_ == ModelKind::gpcm ? std::exp(c[pos++]) : 1.0;
    items[j].delta = c[pos++];
    if (model_ != ModelKind::rsm) items[j].tau = complete_steps({c + pos, static_cast<std::size_t>(m_ - 2)});
  }
  switch (model_) {
    case ModelKind::gpcm: return ItemBank::gpcm(std::move(items));
    case ModelKind::pcm: return ItemBank::pcm(std::move(items));
    default:
      return ItemBank::rsm(std::move(items),
                           complete_steps(coords.subspan(shared_offset(), shared_block_)));
  }
}

std::vector<double> ParameterLayout::to_natural(const ItemBank& bank) const {
  check_bank(bank);
  std::vector<double> out;
  out.reserve(natural_count());
  for (int j = 0; j < items_; ++j) {
    if (model_ == ModelKind::grm) {
      const auto& item = bank.grm_items()[j];
      out.push_back(item.a);
      out.insert(out.end(), item.b.begin(), item.b.end());
      continue;
    }
    const auto& item = bank.gpcm_items()[j];
    if (model_ == ModelKind::gpcm) out.push_back(item.a);
    out.push_back(item.delta);
    if (model_ != ModelKind::rsm) out.insert(out.end(), item.tau.begin(), item.tau.end());
  }
  if (model_ == ModelKind::rsm)
    out.insert(out.end(), bank.shared_tau()->begin(), bank.shared_tau()->end());
  return out;
}

ItemBank ParameterLayout::from_natural(std::span<const double> values) const {
  if (static_cast<int>(values.size()) != natural_count())
    throw std::invalid_argument("natural parameter vector has wrong length");
  if (model_ == ModelKind::grm) {
    std::vector<GrmItem> items(items_);
    for (int j = 0; j < items_; ++j) {
      const double* v = values.data() + j * natural_item_block_;
      items[j].a = v[0];
      items[j].b.assign(v + 1, v + m_);
    }
    return ItemBank::graded(std::move(items));
  }
  std::vector<GpcmItem> items(items_);
  for (int j = 0; j < items_; ++j) {
    const double* v = values.data() + j * natural_item_block_;
    int pos = 0;
    items[j].a = model_ == ModelKind::gpcm ? v[pos++] : 1.0;
    items[j].delta = v[pos++];
    if (model_ != ModelKind::rsm) items[j].tau.assign(v + pos, v + pos + m_ - 1);
  }
  switch (model_) {
    case ModelKind::gpcm: return ItemBank::gpcm(std::move(items));
    case ModelKind::pcm: return ItemBank::pcm(std::move(items));
    default: {
      auto shared = values.subspan(items_ * natural_item_block_, natural_shared_block_);
      return ItemBank::rsm(std::move(items), {shared.begin(), shared.end()});
    }
  }
}

ItemKernel ParameterLayout::kernel_from_free(std::span<const double> coords, int j) const {
  const double* c = coords.data() + item_offset(j);
  std::array<double, kMaxCategories> steps{};
  const int gaps = m_ - 1;
  if (model_ == ModelKind::grm) {
    steps[0] = c[1];
    for (int k = 1; k < gaps; ++k) steps[k] = steps[k - 1] + std::exp(c[k + 1]);
    return ItemKernel::graded(std::exp(c[0]), {steps.data(), static_cast<std::size_t>(gaps)});
  }
  int pos = 0;
  const double a = model_ == ModelKind::gpcm ? std::exp(c[pos++]) : 1.0;
  const double delta = c[pos++];
  const double* free_steps = model_ == ModelKind::rsm ? coords.data() + shared_offset() : c + pos;
  double sum = 0.0;
  for (int k = 0; k < gaps - 1; ++k) {
    steps[k] = free_steps[k];
    sum += free_steps[k];
  }
  steps[gaps - 1] = -sum;
  return ItemKernel::partial_credit(a, delta, {steps.data(), static_cast<std::size_t>(gaps)});
}

}  // namespace polyselect
