#include "carstat/randomization.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "carstat/errors.hpp"

namespace carstat {

const char* method_name(Method m) {
  switch (m) {
    case Method::SR: return "SR";
    case Method::SBR: return "SBR";
    case Method::SBCD: return "SBCD";
    case Method::MIN: return "MIN";
  }
  return "?";
}

void DesignSpec::validate() const {
  if (!(pi > 0.0 && pi < 1.0)) fail(Err::invalid_pi, "pi must lie in (0,1)");
  if (method == Method::SBR) {
    if (block_size < 1) fail(Err::invalid_params, "block_size must be positive");
    double ones = block_size * pi;
    if (std::fabs(ones - std::llround(ones)) > 1e-9) {
      fail(Err::invalid_params, "block_size * pi must be an integer");
    }
  }
  if (method == Method::SBCD || method == Method::MIN) {
    if (!(coin_p > 0.5 && coin_p <= 1.0)) {
      fail(Err::invalid_params, "coin_p must lie in (1/2, 1]");
    }
  }
}

RandomizerState::RandomizerState(const DesignSpec& spec, int num_strata,
                                 std::vector<int> margin_sizes, Rng rng)
    : pi_(spec.pi),
      count_s_(num_strata, 0),
      treated_s_(num_strata, 0),
      block_buf_(num_strata),
      rng_(rng) {
  spec.validate();
  if (spec.method == Method::MIN && margin_sizes.empty()) {
    fail(Err::missing_margins, "minimization requires margin sizes");
  }
  margin_offset_.reserve(margin_sizes.size() + 1);
  int offset = 0;
  for (int sz : margin_sizes) {
    margin_offset_.push_back(offset);
    offset += sz;
  }
  margin_offset_.push_back(offset);
  margin_count_.assign(offset, 0);
  margin_treated_.assign(offset, 0);
}

namespace {

// Fresh permuted block with exactly block_size * pi treated slots.
std::vector<int> make_block(int block_size, double pi, Rng& rng) {
  int ones = static_cast<int>(std::llround(block_size * pi));
  std::vector<int> block(block_size, 0);
  std::fill(block.begin(), block.begin() + ones, 1);
  for (int i = block_size - 1; i > 0; --i) {
    auto j = static_cast<int>(rng.next_below(static_cast<std::uint64_t>(i) + 1));
    std::swap(block[i], block[j]);
  }
  return block;
}

}  // namespace

int assign_next(RandomizerState& state, const DesignSpec& spec, int s,
                const std::vector<int>* margins) {
  if (s < 0 || s >= state.num_strata()) fail(Err::unknown_stratum, "stratum id out of range");

  int arm = 0;
  switch (spec.method) {
    case Method::SR:
      arm = state.rng_.next_bernoulli(spec.pi) ? 1 : 0;
      break;
    case Method::SBR: {
      auto& buf = state.block_buf_[s];
      if (buf.empty()) {
        buf = make_block(spec.block_size, spec.pi, state.rng_);
        std::reverse(buf.begin(), buf.end());  // pop_back yields block order
      }
      arm = buf.back();
      buf.pop_back();
      break;
    }
    case Method::SBCD: {
      double d = state.imbalance(s);
      double p;
      if (d == 0.0) {
        p = spec.pi;
      } else if (d < 0.0) {
        p = spec.coin_p;
      } else {
        p = 1.0 - spec.coin_p;
      }
      arm = state.rng_.next_bernoulli(p) ? 1 : 0;
      break;
    }
    case Method::MIN: {
      if (margins == nullptr ||
          margins->size() + 1 != state.margin_offset_.size()) {
        fail(Err::missing_margins, "minimization requires a covariate profile");
      }
      // Total |imbalance| over margins after each hypothetical assignment,
      // pi-centered, unit weights.
      double imb[2] = {0.0, 0.0};
      for (std::size_t m = 0; m < margins->size(); ++m) {
        int idx = state.margin_offset_[m] + (*margins)[m];
        if (idx < 0 || idx >= state.margin_offset_[m + 1]) {
          fail(Err::out_of_range, "margin level out of range");
        }
        double n1 = state.margin_treated_[idx];
        double nn = state.margin_count_[idx];
        for (int a = 0; a < 2; ++a) {
          imb[a] += std::fabs((n1 + a) - spec.pi * (nn + 1.0));
        }
      }
      double p;
      if (imb[1] < imb[0]) {
        p = spec.coin_p;
      } else if (imb[1] > imb[0]) {
        p = 1.0 - spec.coin_p;
      } else {
        p = spec.pi;
      }
      arm = state.rng_.next_bernoulli(p) ? 1 : 0;
      for (std::size_t m = 0; m < margins->size(); ++m) {
        int idx = state.margin_offset_[m] + (*margins)[m];
        state.margin_count_[idx]++;
        state.margin_treated_[idx] += arm;
      }
      break;
    }
  }
  state.count_s_[s]++;
  state.treated_s_[s] += arm;
  return arm;
}

std::vector<int> assign_all(const DesignSpec& spec, const std::vector<int>& strata_seq,
                            const std::vector<std::vector<int>>* margins_seq, int num_strata,
                            std::uint64_t seed, std::uint64_t stream) {
  if (margins_seq != nullptr && margins_seq->size() != strata_seq.size()) {
    fail(Err::length_mismatch, "margins_seq length differs from strata_seq");
  }
  std::vector<int> margin_sizes;
  if (spec.method == Method::MIN) {
    if (margins_seq == nullptr || margins_seq->empty()) {
      fail(Err::missing_margins, "minimization requires margins");
    }
    margin_sizes.assign((*margins_seq)[0].size(), 0);
    for (const auto& prof : *margins_seq) {
      if (prof.size() != margin_sizes.size()) {
        fail(Err::length_mismatch, "inconsistent margin profile length");
      }
      for (std::size_t m = 0; m < prof.size(); ++m) {
        margin_sizes[m] = std::max(margin_sizes[m], prof[m] + 1);
      }
    }
  }
  RandomizerState state(spec, num_strata, margin_sizes, Rng(seed, stream));
  std::vector<int> arms;
  arms.reserve(strata_seq.size());
  for (std::size_t i = 0; i < strata_seq.size(); ++i) {
    const std::vector<int>* prof = margins_seq ? &(*margins_seq)[i] : nullptr;
    arms.push_back(assign_next(state, spec, strata_seq[i], prof));
  }
  return arms;
}

}  // namespace carstat
