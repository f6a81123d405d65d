#pragma once

// Mapping between an ItemBank and flat parameter vectors.
//
// Two coordinate systems are used:
//  * unconstrained ("free") coordinates, one per free parameter, in which
//    every real vector is a valid bank: log a; GRM b_1 followed by the logs
//    of successive gaps b_{k+1} - b_k; GPCM-family steps tau_1..tau_{m-2}
//    with tau_{m-1} = -(tau_1 + ... + tau_{m-2}).
//  * natural coordinates (a, b, delta, every tau), used for posterior draw
//    storage and reporting.

#include <span>
#include <string>
#include <vector>

#include "polyselect/model.hpp"

namespace polyselect {

class ParameterLayout {
 public:
  static constexpr int kShared = -1;

  ParameterLayout(ModelKind model, int items, int categories);

  ModelKind model() const { return model_; }
  int items() const { return items_; }
  int categories() const { return m_; }

  /// Number of free parameters; equals count_free_parameters().
  int free_count() const { return items_ * item_block_ + shared_block_; }
  int item_block() const { return item_block_; }
  int shared_block() const { return shared_block_; }
  int item_offset(int j) const { return j * item_block_; }
  int shared_offset() const { return items_ * item_block_; }
  /// Item owning free coordinate `c`, or kShared for the RSM step vector.
  int owner(int c) const;

  int natural_count() const { return items_ * natural_item_block_ + natural_shared_block_; }
  int natural_item_block() const { return natural_item_block_; }

  std::vector<std::string> free_names() const;
  std::vector<std::string> natural_names() const;

  std::vector<double> to_free(const ItemBank& bank) const;
  ItemBank from_free(std::span<const double> coords) const;
  std::vector<double> to_natural(const ItemBank& bank) const;
  ItemBank from_natural(std::span<const double> values) const;

  /// Kernel of item j built directly from free coordinates.
  ItemKernel kernel_from_free(std::span<const double> coords, int j) const;

 private:
  void check_bank(const ItemBank& bank) const;

  ModelKind model_;
  int items_;
  int m_;
  int item_block_ = 0;
  int shared_block_ = 0;
  int natural_item_block_ = 0;
  int natural_shared_block_ = 0;
};

/// Completes m-2 free steps with tau_{m-1} = -sum so that the steps sum to zero.
std::vector<double> complete_steps(std::span<const double> free_steps);

}  // namespace polyselect
