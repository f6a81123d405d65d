#include "polyselect/mcmc.hpp"

#include <Eigen/Cholesky>

#include <algorithm>
#include <cmath>
#include <exception>
#include <limits>
#include <numeric>
#include <random>
#include <thread>

#include "polyselect/mle.hpp"
#include "polyselect/rng.hpp"

namespace polyselect {

namespace {

constexpr double kInitialItemStep = 0.15;
constexpr double kInitialAbilityStep = 1.0;
constexpr double kAdaptGain = 3.0;
constexpr double kMinStep = 1e-12;
constexpr double kBlockTarget = 0.234;  // multivariate random-walk target
constexpr int kMinBlockSamples = 50;

double normal_log_density(double x, double mean, double sd) {
  const double z = (x - mean) / sd;
  return -0.5 * z * z - std::log(sd);
}

// Prior of the coordinates owned by item j (free scale).
double item_block_prior(const ParameterLayout& layout, std::span<const double> coords, int j,
                        const PriorSpec& priors) {
  const double* c = coords.data() + layout.item_offset(j);
  const int m = layout.categories();
  double lp = 0.0;
  switch (layout.model()) {
    case ModelKind::grm: {
      lp += normal_log_density(c[0], priors.log_a_mean, priors.log_a_sd);
      double b = c[1];
      lp += normal_log_density(b, 0.0, priors.threshold_sd);
      for (int k = 1; k < m - 1; ++k) {
        b += std::exp(c[k + 1]);
        lp += normal_log_density(b, 0.0, priors.threshold_sd) + c[k + 1];  // Jacobian of exp
      }
      break;
    }
    case ModelKind::gpcm:
      lp += normal_log_density(c[0], priors.log_a_mean, priors.log_a_sd);
      lp += normal_log_density(c[1], priors.location_mean, priors.location_sd);
      for (int k = 0; k < m - 2; ++k) lp += normal_log_density(c[2 + k], 0.0, priors.threshold_sd);
      break;
    case ModelKind::pcm:
      lp += normal_log_density(c[0], priors.location_mean, priors.location_sd);
      for (int k = 0; k < m - 2; ++k) lp += normal_log_density(c[1 + k], 0.0, priors.threshold_sd);
      break;
    case ModelKind::rsm:
      lp += normal_log_density(c[0], priors.location_mean, priors.location_sd);
      break;
  }
  return lp;
}

double shared_block_prior(const ParameterLayout& layout, std::span<const double> coords,
                          const PriorSpec& priors) {
  double lp = 0.0;
  for (int k = 0; k < layout.shared_block(); ++k)
    lp += normal_log_density(coords[layout.shared_offset() + k], 0.0, priors.threshold_sd);
  return lp;
}

// Natural parameters written straight from free coordinates.
void free_to_natural(const ParameterLayout& layout, std::span<const double> coords, double* out) {
  const int m = layout.categories();
  for (int j = 0; j < layout.items(); ++j) {
    const double* c = coords.data() + layout.item_offset(j);
    if (layout.model() == ModelKind::grm) {
      *out++ = std::exp(c[0]);
      double b = c[1];
      *out++ = b;
      for (int k = 1; k < m - 1; ++k) *out++ = b += std::exp(c[k + 1]);
      continue;
    }
    int pos = 0;
    if (layout.model() == ModelKind::gpcm) *out++ = std::exp(c[pos++]);
    *out++ = c[pos++];
    if (layout.model() == ModelKind::rsm) continue;
    for (double t : complete_steps({c + pos, static_cast<std::size_t>(m - 2)})) *out++ = t;
  }
  if (layout.model() == ModelKind::rsm)
    for (double t : complete_steps(coords.subspan(layout.shared_offset(), layout.shared_block())))
      *out++ = t;
}

class Chain {
 public:
  Chain(const ParameterLayout& layout, const ResponseMatrix& responses, const PriorSpec& priors,
        const McmcConfig& config, int index)
      : layout_(layout),
        responses_(responses),
        priors_(priors),
        config_(config),
        index_(index),
        n_(responses.examinees()),
        items_(responses.items()),
        rng_(derive_seed(config.seed, {tag(Stream::chain), static_cast<std::uint64_t>(index)})) {
    initialize();
  }

  void run(DrawMatrix& out, std::vector<AdaptationEvent>& log, double& item_rate,
           double& ability_rate) {
    const int kept = config_.iterations - config_.warmup;
    out.resize(kept, layout_.natural_count() + n_);
    std::vector<long> item_accepts_total(x_.size(), 0);
    std::vector<long> ability_accepts_total(n_, 0);
    int batch = 0;
    for (int it = 0; it < config_.iterations; ++it) {
      update_items();
      update_abilities();
      if (it >= config_.warmup / 4 && it < config_.warmup) record_block_moments();
      if (it < config_.warmup) {
        if ((it + 1) % config_.adapt_batch == 0) {
          adapt(++batch);
          log.push_back({index_, it});
        }
      } else {
        for (std::size_t c = 0; c < x_.size(); ++c) item_accepts_total[c] += item_accepts_[c];
        for (int i = 0; i < n_; ++i) ability_accepts_total[i] += ability_accepts_[i];
        double* row = out.row(it - config_.warmup).data();
        free_to_natural(layout_, x_, row);
        std::copy(theta_.begin(), theta_.end(), row + layout_.natural_count());
      }
      if (it < config_.warmup && (it + 1) % config_.adapt_batch != 0) continue;
      std::fill(item_accepts_.begin(), item_accepts_.end(), 0);
      std::fill(ability_accepts_.begin(), ability_accepts_.end(), 0);
    }
    if (kept > 0) {
      item_rate = std::accumulate(item_accepts_total.begin(), item_accepts_total.end(), 0.0) /
                  (static_cast<double>(kept) * x_.size());
      ability_rate = std::accumulate(ability_accepts_total.begin(), ability_accepts_total.end(), 0.0) /
                     (static_cast<double>(kept) * n_);
    }
  }

 private:
  void initialize() {
    std::normal_distribution<double> normal;
    x_ = starting_values(layout_.model(), responses_);
    for (double& v : x_) v += 0.1 * normal(rng_);

    std::vector<double> score(n_, 0.0);
    for (int i = 0; i < n_; ++i)
      for (int j = 0; j < items_; ++j) score[i] += responses_(i, j);
    const double mean = std::accumulate(score.begin(), score.end(), 0.0) / n_;
    double var = 0.0;
    for (double s : score) var += (s - mean) * (s - mean);
    const double sd = n_ > 1 ? std::sqrt(var / (n_ - 1)) : 0.0;
    theta_.resize(n_);
    for (int i = 0; i < n_; ++i)
      theta_[i] = (sd > 0.0 ? (score[i] - mean) / sd : 0.0) + 0.3 * normal(rng_);

    kernels_.clear();
    for (int j = 0; j < items_; ++j) kernels_.push_back(layout_.kernel_from_free(x_, j));
    cells_.assign(items_, std::vector<double>(n_));
    spare_.assign(items_, std::vector<double>(n_));
    item_ll_.assign(items_, 0.0);
    for (int j = 0; j < items_; ++j) fill_cells(kernels_[j], j, cells_[j]);
    double total = 0.0;
    for (int j = 0; j < items_; ++j) total += sum(cells_[j]);
    for (int j = 0; j < items_; ++j) total += item_block_prior(layout_, x_, j, priors_);
    if (!std::isfinite(total)) throw SamplerError("posterior density is not finite at the initial values");

    item_step_.assign(x_.size(), kInitialItemStep);
    ability_step_.assign(n_, kInitialAbilityStep);
    item_accepts_.assign(x_.size(), 0);
    ability_accepts_.assign(n_, 0);

    blocks_.clear();
    auto add_block = [&](int owner, int offset, int size) {
      if (size < 2) return;
      Block block;
      block.owner = owner;
      block.coords.resize(size);
      std::iota(block.coords.begin(), block.coords.end(), offset);
      block.mean = Eigen::VectorXd::Zero(size);
      block.m2 = Eigen::MatrixXd::Zero(size, size);
      blocks_.push_back(std::move(block));
    };
    for (int j = 0; j < items_; ++j) add_block(j, layout_.item_offset(j), layout_.item_block());
    add_block(ParameterLayout::kShared, layout_.shared_offset(), layout_.shared_block());
  }

  static double sum(const std::vector<double>& v) { return std::accumulate(v.begin(), v.end(), 0.0); }

  double fill_cells(const ItemKernel& kernel, int j, std::vector<double>& out) const {
    return kernel.log_probs(responses_.item_column(j), theta_, out);
  }

  // Metropolis step that moves the listed coordinates, all owned by one item
  // (or all by the shared step vector), to `values`.
  bool propose(int owner, std::span<const int> coords, std::span<const double> values) {
    std::uniform_real_distribution<double> uniform;
    const bool shared = owner == ParameterLayout::kShared;
    auto prior = [&] {
      return shared ? shared_block_prior(layout_, x_, priors_)
                    : item_block_prior(layout_, x_, owner, priors_);
    };
    const double old_prior = prior();
    saved_.resize(coords.size());
    for (std::size_t s = 0; s < coords.size(); ++s) {
      saved_[s] = x_[coords[s]];
      x_[coords[s]] = values[s];
    }
    const double new_prior = prior();
    const int first = shared ? 0 : owner;
    const int last = shared ? items_ : owner + 1;

    proposed_.clear();
    new_ll_.resize(last - first);
    bool valid = std::isfinite(new_prior);
    double delta = new_prior - old_prior;
    for (int j = first; j < last && valid; ++j) {
      try {
        proposed_.push_back(layout_.kernel_from_free(x_, j));
      } catch (const InvalidParameter&) {
        valid = false;
        break;
      }
      new_ll_[j - first] = fill_cells(proposed_.back(), j, spare_[j]);
      delta += new_ll_[j - first] - item_ll_[j];
    }
    if (valid && std::isfinite(delta) && std::log(uniform(rng_)) < delta) {
      for (int j = first; j < last; ++j) {
        kernels_[j] = proposed_[j - first];
        std::swap(cells_[j], spare_[j]);
        item_ll_[j] = new_ll_[j - first];
      }
      return true;
    }
    for (std::size_t s = 0; s < coords.size(); ++s) x_[coords[s]] = saved_[s];
    return false;
  }

  void update_items() {
    std::normal_distribution<double> normal;
    for (int j = 0; j < items_; ++j) item_ll_[j] = sum(cells_[j]);

    for (int c = 0; c < layout_.free_count(); ++c) {
      const int coord[1] = {c};
      const double value[1] = {x_[c] + item_step_[c] * normal(rng_)};
      if (propose(layout_.owner(c), coord, value)) ++item_accepts_[c];
    }

    for (auto& block : blocks_) {
      if (!block.active) continue;
      Eigen::VectorXd z(block.coords.size());
      for (auto& v : z) v = normal(rng_);
      const Eigen::VectorXd step = block.scale * (block.chol * z);
      std::vector<double> values(block.coords.size());
      for (std::size_t s = 0; s < values.size(); ++s) values[s] = x_[block.coords[s]] + step[s];
      if (propose(block.owner, block.coords, values)) ++block.accepts;
    }
  }

  // Running moments of each block, accumulated during the second half of the
  // early warmup and used to shape the block proposals.
  void record_block_moments() {
    for (auto& block : blocks_) {
      const int d = static_cast<int>(block.coords.size());
      Eigen::VectorXd v(d);
      for (int s = 0; s < d; ++s) v[s] = x_[block.coords[s]];
      ++block.count;
      const Eigen::VectorXd diff = v - block.mean;
      block.mean += diff / block.count;
      block.m2 += diff * (v - block.mean).transpose();
    }
  }

  void update_abilities() {
    std::normal_distribution<double> normal;
    std::uniform_real_distribution<double> uniform;
    std::vector<double> fresh(items_);
    for (int i = 0; i < n_; ++i) {
      const double old_theta = theta_[i];
      const double new_theta = old_theta + ability_step_[i] * normal(rng_);
      double delta = normal_log_density(new_theta, 0.0, priors_.ability_sd) -
                     normal_log_density(old_theta, 0.0, priors_.ability_sd);
      for (int j = 0; j < items_; ++j) {
        fresh[j] = kernels_[j].log_prob(responses_(i, j), new_theta);
        delta += fresh[j] - cells_[j][i];
      }
      if (std::log(uniform(rng_)) < delta) {
        theta_[i] = new_theta;
        for (int j = 0; j < items_; ++j) cells_[j][i] = fresh[j];
        ++ability_accepts_[i];
      }
    }
  }

  void adapt(int batch) {
    const double scale = kAdaptGain / std::sqrt(static_cast<double>(batch));
    auto tune = [&](double& step, int accepts) {
      const double rate = static_cast<double>(accepts) / config_.adapt_batch;
      step *= std::exp(std::clamp((rate - config_.target_acceptance) * scale, -1.0, 1.0));
      if (!(step > kMinStep)) throw SamplerError("random-walk step size collapsed to zero");
    };
    for (std::size_t c = 0; c < x_.size(); ++c) tune(item_step_[c], item_accepts_[c]);
    for (int i = 0; i < n_; ++i) tune(ability_step_[i], ability_accepts_[i]);
    for (auto& block : blocks_) {
      const int d = static_cast<int>(block.coords.size());
      if (block.active) {
        const double rate = static_cast<double>(block.accepts) / config_.adapt_batch;
        block.scale *= std::exp(std::clamp((rate - kBlockTarget) * scale, -1.0, 1.0));
      }
      block.accepts = 0;
      if (block.count < std::max(kMinBlockSamples, 4 * d)) continue;
      Eigen::MatrixXd cov = block.m2 / (block.count - 1.0);
      cov.diagonal().array() += 1e-8;
      Eigen::LLT<Eigen::MatrixXd> llt(cov);
      if (llt.info() != Eigen::Success) continue;
      block.chol = llt.matrixL();
      if (!block.active) block.scale = 2.38 / std::sqrt(static_cast<double>(d));
      block.active = true;
    }
  }

  struct Block {
    int owner = 0;
    std::vector<int> coords;
    Eigen::VectorXd mean;
    Eigen::MatrixXd m2;
    Eigen::MatrixXd chol;
    long count = 0;
    double scale = 1.0;
    int accepts = 0;
    bool active = false;
  };

  const ParameterLayout& layout_;
  const ResponseMatrix& responses_;
  const PriorSpec& priors_;
  const McmcConfig& config_;
  int index_;
  int n_;
  int items_;
  Rng rng_;

  std::vector<double> x_;
  std::vector<double> theta_;
  std::vector<ItemKernel> kernels_;
  std::vector<ItemKernel> proposed_;
  std::vector<std::vector<double>> cells_;  // cells_[j][i] = log P(u_ij | current state)
  std::vector<std::vector<double>> spare_;
  std::vector<double> item_ll_;
  std::vector<double> item_step_;
  std::vector<double> ability_step_;
  std::vector<int> item_accepts_;
  std::vector<int> ability_accepts_;
  std::vector<Block> blocks_;
  std::vector<double> saved_;
  std::vector<double> new_ll_;
};

}  // namespace

int PosteriorDraws::column(const std::string& name) const {
  auto it = std::find(names.begin(), names.end(), name);
  if (it == names.end()) throw std::out_of_range("no parameter named " + name);
  return static_cast<int>(it - names.begin());
}

ItemBank PosteriorDraws::bank(int chain, int row) const {
  const auto& m = chains.at(chain);
  return layout().from_natural({m.row(row).data(), static_cast<std::size_t>(item_parameter_count())});
}

std::span<const double> PosteriorDraws::abilities(int chain, int row) const {
  const auto& m = chains.at(chain);
  return {m.row(row).data() + item_parameter_count(), static_cast<std::size_t>(examinees)};
}

double PosteriorDraws::mean(int col) const {
  double total = 0.0;
  for (const auto& c : chains) total += c.col(col).sum();
  return total / total_draws();
}

double log_prior_items(const ParameterLayout& layout, std::span<const double> coords,
                       const PriorSpec& priors) {
  double lp = shared_block_prior(layout, coords, priors);
  for (int j = 0; j < layout.items(); ++j) lp += item_block_prior(layout, coords, j, priors);
  return lp;
}

PosteriorDraws sample_posterior(ModelKind model, const ResponseMatrix& responses,
                                const PriorSpec& priors, const McmcConfig& config) {
  if (config.chains < 2) throw std::invalid_argument("at least two chains are required");
  if (config.warmup < 0 || config.iterations <= config.warmup)
    throw std::invalid_argument("iterations must exceed warmup");
  if (config.adapt_batch < 1) throw std::invalid_argument("adaptation batch must be positive");
  if (responses.examinees() < 1) throw std::invalid_argument("no examinees");

  const ParameterLayout layout(model, responses.items(), responses.categories());
  PosteriorDraws draws;
  draws.model = model;
  draws.items = responses.items();
  draws.categories = responses.categories();
  draws.examinees = responses.examinees();
  draws.names = layout.natural_names();
  for (int i = 1; i <= draws.examinees; ++i) draws.names.push_back("theta[" + std::to_string(i) + "]");
  draws.warmup_discarded = config.warmup;
  draws.seed = config.seed;
  draws.chains.resize(config.chains);

  std::vector<std::vector<AdaptationEvent>> logs(config.chains);
  std::vector<double> item_rates(config.chains, 0.0), ability_rates(config.chains, 0.0);
  std::vector<std::exception_ptr> errors(config.chains);
  auto run_chain = [&](int c) {
    try {
      Chain chain(layout, responses, priors, config, c);
      chain.run(draws.chains[c], logs[c], item_rates[c], ability_rates[c]);
    } catch (...) {
      errors[c] = std::current_exception();
    }
  };
  if (config.threads > 1) {
    std::vector<std::jthread> workers;
    for (int c = 0; c < config.chains; ++c) {
      workers.emplace_back(run_chain, c);
      if (static_cast<int>(workers.size()) == config.threads) workers.clear();
    }
  } else {
    for (int c = 0; c < config.chains; ++c) run_chain(c);
  }
  for (auto& e : errors)
    if (e) std::rethrow_exception(e);

  for (auto& log : logs) draws.adaptation_log.insert(draws.adaptation_log.end(), log.begin(), log.end());
  draws.item_acceptance = std::accumulate(item_rates.begin(), item_rates.end(), 0.0) / config.chains;
  draws.ability_acceptance =
      std::accumulate(ability_rates.begin(), ability_rates.end(), 0.0) / config.chains;
  return draws;
}

double psrf(std::span<const std::vector<double>> chains) {
  if (chains.size() < 2) throw std::invalid_argument("PSRF needs at least two chains");
  const std::size_t n = chains.front().size();
  if (n < 10) throw std::invalid_argument("PSRF needs at least ten draws per chain");
  for (const auto& c : chains)
    if (c.size() != n) throw std::invalid_argument("chains differ in length");
  const double nd = static_cast<double>(n);
  const double cd = static_cast<double>(chains.size());

  std::vector<double> means;
  double within = 0.0;
  for (const auto& c : chains) {
    const double mu = std::accumulate(c.begin(), c.end(), 0.0) / nd;
    double ss = 0.0;
    for (double v : c) ss += (v - mu) * (v - mu);
    within += ss / (nd - 1.0);
    means.push_back(mu);
  }
  within /= cd;
  const double grand = std::accumulate(means.begin(), means.end(), 0.0) / cd;
  double between = 0.0;
  for (double mu : means) between += (mu - grand) * (mu - grand);
  between *= nd / (cd - 1.0);

  if (within == 0.0) return between == 0.0 ? 1.0 : std::numeric_limits<double>::infinity();
  const double pooled = (nd - 1.0) / nd * within + between / nd;
  return std::sqrt(pooled / within);
}

double psrf(const PosteriorDraws& draws, int col) {
  std::vector<std::vector<double>> chains;
  for (const auto& m : draws.chains) {
    std::vector<double> v(m.rows());
    for (Eigen::Index r = 0; r < m.rows(); ++r) v[r] = m(r, col);
    chains.push_back(std::move(v));
  }
  return psrf(chains);
}

double psrf(const PosteriorDraws& draws, const std::string& name) {
  return psrf(draws, draws.column(name));
}

PsrfSummary psrf_summary(const PosteriorDraws& draws, double threshold) {
  PsrfSummary out;
  const int cols = static_cast<int>(draws.names.size());
  out.values.resize(cols);
  out.max = -std::numeric_limits<double>::infinity();
  for (int c = 0; c < cols; ++c) {
    out.values[c] = psrf(draws, c);
    if (out.values[c] >= threshold || std::isnan(out.values[c])) ++out.above_threshold;
    if (out.values[c] > out.max || std::isnan(out.values[c])) {
      out.max = std::isnan(out.values[c]) ? std::numeric_limits<double>::infinity() : out.values[c];
      out.worst = draws.names[c];
    }
  }
  return out;
}

PointwiseLogLik pointwise_log_likelihood(const PosteriorDraws& draws,
                                         const ResponseMatrix& responses, PointwiseUnit unit) {
  if (responses.examinees() != draws.examinees || responses.items() != draws.items ||
      responses.categories() != draws.categories)
    throw std::invalid_argument("draws and responses describe different data");
  const int n = draws.examinees;
  const int items = draws.items;
  PointwiseLogLik out;
  out.unit = unit;
  out.values.resize(draws.total_draws(), unit == PointwiseUnit::examinee ? n : n * items);
  int s = 0;
  for (int c = 0; c < draws.n_chains(); ++c) {
    for (int r = 0; r < draws.draws_per_chain(); ++r, ++s) {
      const auto kernels = draws.bank(c, r).kernels();
      const auto theta = draws.abilities(c, r);
      for (int i = 0; i < n; ++i) {
        double row = 0.0;
        for (int j = 0; j < items; ++j) {
          const double lp = kernels[j].log_prob(responses(i, j), theta[i]);
          if (unit == PointwiseUnit::cell) out.values(s, i * items + j) = lp;
          row += lp;
        }
        if (unit == PointwiseUnit::examinee) out.values(s, i) = row;
      }
    }
  }
  return out;
}

}  // namespace polyselect
