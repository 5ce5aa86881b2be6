#pragma once

#include <cstdint>
#include <optional>
#include <vector>

#include "carstat/rng.hpp"

namespace carstat {

enum class Method { SR, SBR, SBCD, MIN };

const char* method_name(Method m);

// Randomization design: method, target proportion and the method's balance
// parameter q(s) used by the modified tests. q is pi(1-pi) under SR, 0 under
// SBR/SBCD (strong balance) and unknown under minimization.
struct DesignSpec {
  Method method = Method::SR;
  double pi = 0.5;
  int block_size = 6;    // SBR
  double coin_p = 0.75;  // SBCD / MIN, in (1/2, 1]

  // nullopt when the design does not pin q(s) (minimization).
  std::optional<double> q(int /*stratum*/) const {
    switch (method) {
      case Method::SR:
        return pi * (1.0 - pi);
      case Method::SBR:
      case Method::SBCD:
        return 0.0;
      case Method::MIN:
        return std::nullopt;
    }
    return std::nullopt;
  }

  void validate() const;  // throws invalid_pi / invalid_params
};

// Sequential assignment state for one realization: per-stratum history,
// per-stratum block buffers (SBR), per-margin counts (MIN) and the RNG
// stream. One logical owner at a time; distinct states may run in parallel.
class RandomizerState {
 public:
  // margin_sizes: number of levels of each minimization margin (MIN only,
  // empty otherwise).
  RandomizerState(const DesignSpec& spec, int num_strata, std::vector<int> margin_sizes,
                  Rng rng);

  int num_strata() const { return static_cast<int>(count_s_.size()); }
  int count(int s) const { return count_s_[s]; }
  int treated(int s) const { return treated_s_[s]; }
  double imbalance(int s) const { return treated_s_[s] - pi_ * count_s_[s]; }

  friend int assign_next(RandomizerState& state, const DesignSpec& spec, int s,
                         const std::vector<int>* margins);

 private:
  double pi_;
  std::vector<int> count_s_;
  std::vector<int> treated_s_;
  std::vector<std::vector<int>> block_buf_;  // SBR: remaining arms of the current block
  std::vector<int> margin_offset_;           // MIN: flat index base per margin
  std::vector<int> margin_count_;            // MIN: n per (margin, level)
  std::vector<int> margin_treated_;          // MIN: n1 per (margin, level)
  Rng rng_;
};

// Draws the next assignment for a unit in stratum s and updates state.
// margins describes the unit's level on each minimization margin (MIN only).
int assign_next(RandomizerState& state, const DesignSpec& spec, int s,
                const std::vector<int>* margins = nullptr);

// Assigns a whole sequence with a fresh state seeded by (seed, stream).
// Deterministic given inputs; equal to folding assign_next.
std::vector<int> assign_all(const DesignSpec& spec, const std::vector<int>& strata_seq,
                            const std::vector<std::vector<int>>* margins_seq, int num_strata,
                            std::uint64_t seed, std::uint64_t stream = 0);

}  // namespace carstat
