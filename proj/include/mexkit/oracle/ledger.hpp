#pragma once

#include <numeric>
#include <ostream>
#include <vector>

#include "mexkit/common.hpp"

namespace mexkit::oracle {

// Strict query accounting. `used` never decreases and always equals the sum
// of the per-round tallies; batches are all-or-nothing against the budget.
class QueryLedger {
 public:
  explicit QueryLedger(long long budget) : budget_(budget) {
    require(budget_ > 0, "ledger: budget must be positive");
  }

  long long budget() const { return budget_; }
  long long used() const { return used_; }
  long long remaining() const { return budget_ - used_; }
  const std::vector<long long>& round_tallies() const { return tallies_; }

  void charge_batch(long long n) {
    require(n > 0, "ledger: batch must be non-empty");
    if (used_ + n > budget_)
      throw BudgetExhausted("ledger: batch of " + std::to_string(n) +
                            " exceeds remaining budget " +
                            std::to_string(budget_ - used_));
    used_ += n;
    tallies_.push_back(n);
  }

  // Line-delimited audit export: round index, batch size, cumulative used.
  void export_log(std::ostream& os) const {
    long long cum = 0;
    for (std::size_t i = 0; i < tallies_.size(); ++i) {
      cum += tallies_[i];
      os << i << "," << tallies_[i] << "," << cum << "\n";
    }
  }

 private:
  long long budget_;
  long long used_ = 0;
  std::vector<long long> tallies_;
};

}  // namespace mexkit::oracle
