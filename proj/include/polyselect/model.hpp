#pragma once

// Category-probability kernels for the graded response model (GRM) and the
// generalized partial credit family (GPCM, PCM, RSM).
//
// Categories are 0-based: an item with m categories takes values 0..m-1.

#include <array>
#include <cstdint>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace polyselect {

class ResponseMatrix;

enum class ModelKind { grm, gpcm, pcm, rsm };

inline constexpr std::array<ModelKind, 4> kAllModels{ModelKind::grm, ModelKind::gpcm,
                                                      ModelKind::pcm, ModelKind::rsm};

std::string_view to_string(ModelKind model);
/// Case-insensitive; throws std::invalid_argument on unknown names.
ModelKind parse_model_kind(std::string_view name);

inline bool is_partial_credit_family(ModelKind model) { return model != ModelKind::grm; }

/// Floor applied to every per-cell log probability (exp(-745) is the
/// smallest positive double).
inline constexpr double kLogProbFloor = -745.0;

/// Largest supported category count.
inline constexpr int kMaxCategories = 12;

/// Thrown for item parameters outside the model's support.
class InvalidParameter : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

struct GrmItem {
  double a = 1.0;         // discrimination
  std::vector<double> b;  // category difficulties b_1 < ... < b_{m-1}

  int categories() const { return static_cast<int>(b.size()) + 1; }
};

struct GpcmItem {
  double a = 1.0;           // discrimination, fixed to 1 under PCM/RSM
  double delta = 0.0;       // item location
  std::vector<double> tau;  // step parameters tau_1..tau_{m-1}; empty for RSM items

  int categories() const { return static_cast<int>(tau.size()) + 1; }
};

/// Precomputed per-item constants for fast evaluation of log P(u | theta).
///
/// GRM:  P(k) = P*(k) - P*(k+1), P*(k) = logistic(a (theta - b_k)).
/// GPCM: P(k) proportional to exp(sum_{h<=k} a (theta - delta + tau_h)),
///       the empty sum for k = 0 being 0.
class ItemKernel {
 public:
  static ItemKernel graded(double a, std::span<const double> b);
  static ItemKernel partial_credit(double a, double delta, std::span<const double> tau);

  int categories() const { return m_; }
  bool is_graded() const { return graded_; }

  /// log P(u = k | theta), floored at kLogProbFloor.
  double log_prob(int k, double theta) const;

  /// out[i] = log_prob(u[i], theta[i]) for every i; returns the sum of out.
  double log_probs(std::span<const std::uint8_t> u, std::span<const double> theta,
                   std::span<double> out) const;

  /// Writes all m category probabilities into `out`.
  void probabilities(double theta, std::span<double> out) const;

 private:
  double graded_log_prob(int k, double theta) const;
  double partial_credit_log_prob(int k, double theta) const;

  bool graded_ = false;
  int m_ = 0;
  double a_ = 1.0;
  // GRM: b_k, exp(a b_k), log(1 - exp(-a (b_{k+1} - b_k))), indexed by k = 1..m-1.
  // GPCM: offsets o_k = a (T_k - k delta) with T_k = sum_{h<=k} tau_h, and exp(o_k).
  std::array<double, kMaxCategories> p_{};
  std::array<double, kMaxCategories> e_{};
  std::array<double, kMaxCategories> gap_{};
  double reach_ = 0.0;  // fast path is safe when |a theta| * span + reach_ stays small
};

/// One calibrated item bank: homogeneous items for a single model with a
/// common category count.
class ItemBank {
 public:
  static ItemBank graded(std::vector<GrmItem> items);
  static ItemBank gpcm(std::vector<GpcmItem> items);
  /// Every discrimination must equal 1.
  static ItemBank pcm(std::vector<GpcmItem> items);
  /// Items carry a = 1 and an empty tau; `shared_tau` has length m - 1.
  static ItemBank rsm(std::vector<GpcmItem> items, std::vector<double> shared_tau);

  ModelKind model() const { return model_; }
  int size() const;
  int categories() const { return m_; }

  const std::vector<GrmItem>& grm_items() const { return grm_; }
  const std::vector<GpcmItem>& gpcm_items() const { return gpcm_; }
  const std::optional<std::vector<double>>& shared_tau() const { return shared_tau_; }

  /// Discrimination of item j (1 under PCM/RSM).
  double discrimination(int j) const;
  /// Effective step vector of a GPCM-family item (the shared one under RSM).
  std::span<const double> tau(int j) const;

  ItemKernel kernel(int j) const;
  std::vector<ItemKernel> kernels() const;

 private:
  ItemBank() = default;
  void validate();

  ModelKind model_ = ModelKind::grm;
  int m_ = 0;
  std::vector<GrmItem> grm_;
  std::vector<GpcmItem> gpcm_;
  std::optional<std::vector<double>> shared_tau_;
};

/// Category probabilities for a single GRM item.
std::vector<double> category_probabilities(const GrmItem& item, double theta);
/// Category probabilities for a GPCM-family item. PCM/RSM are the same
/// kernel with a = 1 (and the shared steps for RSM).
std::vector<double> category_probabilities(const GpcmItem& item, double theta);
/// Category probabilities for item j of a bank.
std::vector<double> category_probabilities(const ItemBank& bank, int j, double theta);

/// sum_i sum_j log P(u_ij | theta_i, item_j).
double joint_log_likelihood(const ItemBank& bank, const ResponseMatrix& responses,
                            std::span<const double> thetas);

/// Logistic function computed without overflow.
double logistic(double x);
/// log(1 + exp(x)) computed without overflow.
double softplus(double x);

}  // namespace polyselect
