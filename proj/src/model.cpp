#include "polyselect/model.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>

#include "polyselect/responses.hpp"

namespace polyselect {

namespace {

// exp() arguments in the single-exponential fast paths stay below this bound.
constexpr double kFastPathLimit = 600.0;

void require_finite(double value, const char* what) {
  if (!std::isfinite(value)) throw InvalidParameter(std::string(what) + " must be finite");
}

void check_discrimination(double a) {
  require_finite(a, "discrimination");
  if (a <= 0.0) throw InvalidParameter("discrimination must be positive");
}

void check_category_count(int m) {
  if (m < 2 || m > kMaxCategories)
    throw InvalidParameter("category count must lie in 2.." + std::to_string(kMaxCategories));
}

void check_ordered(std::span<const double> b) {
  for (std::size_t k = 0; k < b.size(); ++k) {
    require_finite(b[k], "category difficulty");
    if (k > 0 && !(b[k] > b[k - 1]))
      throw InvalidParameter("GRM category difficulties must be strictly increasing");
  }
}

}  // namespace

std::string_view to_string(ModelKind model) {
  switch (model) {
    case ModelKind::grm: return "GRM";
    case ModelKind::gpcm: return "GPCM";
    case ModelKind::pcm: return "PCM";
    case ModelKind::rsm: return "RSM";
  }
  return "?";
}

ModelKind parse_model_kind(std::string_view name) {
  std::string lower(name);
  std::transform(lower.begin(), lower.end(), lower.begin(),
                 [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
  if (lower == "grm") return ModelKind::grm;
  if (lower == "gpcm") return ModelKind::gpcm;
  if (lower == "pcm") return ModelKind::pcm;
  if (lower == "rsm") return ModelKind::rsm;
  throw std::invalid_argument("unknown model '" + std::string(name) + "'");
}

double logistic(double x) {
  if (x >= 0.0) return 1.0 / (1.0 + std::exp(-x));
  const double e = std::exp(x);
  return e / (1.0 + e);
}

double softplus(double x) {
  return x > 0.0 ? x + std::log1p(std::exp(-x)) : std::log1p(std::exp(x));
}

// ---------------------------------------------------------------------------
// ItemKernel

ItemKernel ItemKernel::graded(double a, std::span<const double> b) {
  check_discrimination(a);
  check_category_count(static_cast<int>(b.size()) + 1);
  check_ordered(b);
  ItemKernel k;
  k.graded_ = true;
  k.m_ = static_cast<int>(b.size()) + 1;
  k.a_ = a;
  double reach = 0.0;
  for (int c = 1; c < k.m_; ++c) {
    k.p_[c] = b[c - 1];
    k.e_[c] = std::exp(a * b[c - 1]);
    reach = std::max(reach, std::abs(a * b[c - 1]));
  }
  for (int c = 1; c + 1 < k.m_; ++c) k.gap_[c] = std::log(-std::expm1(-a * (b[c] - b[c - 1])));
  k.reach_ = reach;
  return k;
}

ItemKernel ItemKernel::partial_credit(double a, double delta, std::span<const double> tau) {
  check_discrimination(a);
  require_finite(delta, "item location");
  check_category_count(static_cast<int>(tau.size()) + 1);
  ItemKernel k;
  k.graded_ = false;
  k.m_ = static_cast<int>(tau.size()) + 1;
  k.a_ = a;
  double cumulative = 0.0;
  double reach = 0.0;
  k.p_[0] = 0.0;
  k.e_[0] = 1.0;
  for (int c = 1; c < k.m_; ++c) {
    require_finite(tau[c - 1], "step parameter");
    cumulative += tau[c - 1];
    k.p_[c] = a * (cumulative - c * delta);
    k.e_[c] = std::exp(k.p_[c]);
    reach = std::max(reach, std::abs(k.p_[c]));
  }
  k.reach_ = reach;
  return k;
}

double ItemKernel::log_prob(int k, double theta) const {
  const double lp = graded_ ? graded_log_prob(k, theta) : partial_credit_log_prob(k, theta);
  return lp > kLogProbFloor ? lp : kLogProbFloor;
}

// log P(k) = log s(y_k) + log s(-y_{k+1}) + log(1 - exp(-a (b_{k+1} - b_k))),
// y_k = a (theta - b_k); the identity avoids subtracting two near-equal
// cumulative probabilities.
double ItemKernel::graded_log_prob(int k, double theta) const {
  const double x = a_ * theta;
  if (std::abs(x) + reach_ < kFastPathLimit) {
    const double e_neg = std::exp(-x);  // exp(-y_k) = e_neg * exp(a b_k)
    if (k == 0) return -std::log1p(1.0 / (e_neg * e_[1]));
    if (k == m_ - 1) return -std::log1p(e_neg * e_[k]);
    // At most one of the two factors is large, so the product cannot overflow.
    return gap_[k] - std::log((1.0 + e_neg * e_[k]) * (1.0 + 1.0 / (e_neg * e_[k + 1])));
  }
  if (k == 0) return -softplus(x - a_ * p_[1]);
  if (k == m_ - 1) return -softplus(a_ * p_[k] - x);
  return gap_[k] - softplus(a_ * p_[k] - x) - softplus(x - a_ * p_[k + 1]);
}

double ItemKernel::partial_credit_log_prob(int k, double theta) const {
  const double x = a_ * theta;
  if (std::abs(x) * (m_ - 1) + reach_ < kFastPathLimit) {
    const double y = std::exp(x);
    double total = e_[m_ - 1];
    for (int c = m_ - 2; c >= 0; --c) total = total * y + e_[c];
    return k * x + p_[k] - std::log(total);
  }
  double zmax = 0.0;
  for (int c = 1; c < m_; ++c) zmax = std::max(zmax, c * x + p_[c]);
  double total = 0.0;
  for (int c = 0; c < m_; ++c) total += std::exp(c * x + p_[c] - zmax);
  return k * x + p_[k] - zmax - std::log(total);
}

double ItemKernel::log_probs(std::span<const std::uint8_t> u, std::span<const double> theta,
                             std::span<double> out) const {
  const std::size_t n = u.size();
  if (theta.size() != n || out.size() != n) throw std::invalid_argument("log_probs length mismatch");
  double total = 0.0;
  if (graded_) {
    for (std::size_t i = 0; i < n; ++i) {
      const double lp = graded_log_prob(u[i], theta[i]);
      out[i] = lp > kLogProbFloor ? lp : kLogProbFloor;
      total += out[i];
    }
  } else {
    for (std::size_t i = 0; i < n; ++i) {
      const double lp = partial_credit_log_prob(u[i], theta[i]);
      out[i] = lp > kLogProbFloor ? lp : kLogProbFloor;
      total += out[i];
    }
  }
  return total;
}

void ItemKernel::probabilities(double theta, std::span<double> out) const {
  if (static_cast<int>(out.size()) != m_) throw std::invalid_argument("probability buffer size");
  if (graded_) {
    for (int c = 0; c < m_; ++c) out[c] = std::exp(graded_log_prob(c, theta));
    return;
  }
  const double x = a_ * theta;
  double zmax = 0.0;
  for (int c = 1; c < m_; ++c) zmax = std::max(zmax, c * x + p_[c]);
  double total = 0.0;
  for (int c = 0; c < m_; ++c) {
    out[c] = std::exp(c * x + p_[c] - zmax);
    total += out[c];
  }
  for (int c = 0; c < m_; ++c) out[c] /= total;
}

// ---------------------------------------------------------------------------
// ItemBank

ItemBank ItemBank::graded(std::vector<GrmItem> items) {
  ItemBank bank;
  bank.model_ = ModelKind::grm;
  bank.grm_ = std::move(items);
  bank.validate();
  return bank;
}

ItemBank ItemBank::gpcm(std::vector<GpcmItem> items) {
  ItemBank bank;
  bank.model_ = ModelKind::gpcm;
  bank.gpcm_ = std::move(items);
  bank.validate();
  return bank;
}

ItemBank ItemBank::pcm(std::vector<GpcmItem> items) {
  ItemBank bank;
  bank.model_ = ModelKind::pcm;
  bank.gpcm_ = std::move(items);
  bank.validate();
  return bank;
}

ItemBank ItemBank::rsm(std::vector<GpcmItem> items, std::vector<double> shared_tau) {
  ItemBank bank;
  bank.model_ = ModelKind::rsm;
  bank.gpcm_ = std::move(items);
  bank.shared_tau_ = std::move(shared_tau);
  bank.validate();
  return bank;
}

int ItemBank::size() const {
  return static_cast<int>(model_ == ModelKind::grm ? grm_.size() : gpcm_.size());
}

void ItemBank::validate() {
  if (size() == 0) throw InvalidParameter("item bank is empty");
  if (model_ == ModelKind::grm) {
    m_ = grm_.front().categories();
    for (const auto& item : grm_) {
      if (item.categories() != m_) throw InvalidParameter("items differ in category count");
      check_discrimination(item.a);
      check_ordered(item.b);
    }
    check_category_count(m_);
    return;
  }
  if (model_ == ModelKind::rsm) {
    if (!shared_tau_) throw InvalidParameter("RSM bank needs a shared step vector");
    m_ = static_cast<int>(shared_tau_->size()) + 1;
  } else {
    m_ = gpcm_.front().categories();
  }
  check_category_count(m_);
  for (const auto& item : gpcm_) {
    check_discrimination(item.a);
    require_finite(item.delta, "item location");
    if (model_ != ModelKind::gpcm && item.a != 1.0)
      throw InvalidParameter("PCM/RSM discriminations are fixed to 1");
    if (model_ == ModelKind::rsm) {
      if (!item.tau.empty()) throw InvalidParameter("RSM items must not carry their own steps");
    } else if (item.categories() != m_) {
      throw InvalidParameter("items differ in category count");
    }
    for (double t : item.tau) require_finite(t, "step parameter");
  }
  if (shared_tau_)
    for (double t : *shared_tau_) require_finite(t, "step parameter");
}

double ItemBank::discrimination(int j) const {
  return model_ == ModelKind::grm ? grm_.at(j).a : gpcm_.at(j).a;
}

std::span<const double> ItemBank::tau(int j) const {
  if (model_ == ModelKind::grm) throw std::logic_error("GRM items have no step parameters");
  if (model_ == ModelKind::rsm) return *shared_tau_;
  return gpcm_.at(j).tau;
}

ItemKernel ItemBank::kernel(int j) const {
  if (model_ == ModelKind::grm) return ItemKernel::graded(grm_.at(j).a, grm_.at(j).b);
  const auto& item = gpcm_.at(j);
  return ItemKernel::partial_credit(item.a, item.delta, tau(j));
}

std::vector<ItemKernel> ItemBank::kernels() const {
  std::vector<ItemKernel> out;
  out.reserve(size());
  for (int j = 0; j < size(); ++j) out.push_back(kernel(j));
  return out;
}

// ---------------------------------------------------------------------------

std::vector<double> category_probabilities(const GrmItem& item, double theta) {
  require_finite(theta, "ability");
  auto kernel = ItemKernel::graded(item.a, item.b);
  std::vector<double> out(kernel.categories());
  kernel.probabilities(theta, out);
  return out;
}

std::vector<double> category_probabilities(const GpcmItem& item, double theta) {
  require_finite(theta, "ability");
  auto kernel = ItemKernel::partial_credit(item.a, item.delta, item.tau);
  std::vector<double> out(kernel.categories());
  kernel.probabilities(theta, out);
  return out;
}

std::vector<double> category_probabilities(const ItemBank& bank, int j, double theta) {
  require_finite(theta, "ability");
  auto kernel = bank.kernel(j);
  std::vector<double> out(kernel.categories());
  kernel.probabilities(theta, out);
  return out;
}

double joint_log_likelihood(const ItemBank& bank, const ResponseMatrix& responses,
                            std::span<const double> thetas) {
  if (responses.items() != bank.size())
    throw std::invalid_argument("response matrix has " + std::to_string(responses.items()) +
                                " items, bank has " + std::to_string(bank.size()));
  if (static_cast<int>(thetas.size()) != responses.examinees())
    throw std::invalid_argument("ability vector length does not match examinee count");
  if (responses.categories() != bank.categories())
    throw std::invalid_argument("category count mismatch between responses and bank");
  const auto kernels = bank.kernels();
  double total = 0.0;
  for (int i = 0; i < responses.examinees(); ++i) {
    double row = 0.0;
    for (int j = 0; j < responses.items(); ++j) row += kernels[j].log_prob(responses(i, j), thetas[i]);
    total += row;
  }
  return total;
}

}  // namespace polyselect
