#pragma once

#include <cstddef>
#include <map>
#include <string>
#include <vector>

#include "zubov/verify.hpp"

namespace zubov {

/// Collects auxiliary (define-fun name () Real term) lines while terms are built.
class SmtContext {
 public:
  explicit SmtContext(std::size_t n) : n_(n) {}

  std::size_t n() const { return n_; }
  /// Registers `term` under a fresh name derived from `hint` and returns the name.
  std::string define(const std::string& hint, const std::string& term);
  const std::vector<std::string>& definitions() const { return definitions_; }
  /// Names registered earlier under `key` (e.g. one network unfolded once per script).
  const std::vector<std::string>* recall(const std::string& key) const {
    auto it = memo_.find(key);
    return it == memo_.end() ? nullptr : &it->second;
  }
  void remember(const std::string& key, std::vector<std::string> names) { memo_[key] = std::move(names); }

 private:
  std::size_t n_;
  std::size_t counter_ = 0;
  std::vector<std::string> definitions_;
  std::map<std::string, std::vector<std::string>> memo_;
};

/// SMT-LIB2 script asserting the domain, the region and the negated
/// threshold, so that "unsat" certifies the condition.
std::string export_smt(const Condition& cond);

}  // namespace zubov
