#pragma once

#include <map>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "homnet/tensor.hpp"

namespace homnet {

/// Ordered collection of uniquely named tensors. Insertion order is the
/// canonical order for initialization, optimizer updates and checkpoints.
template <typename T>
class ParamStore {
 public:
  using Entry = std::pair<std::string, Tensor<T>>;

  void add(std::string name, Tensor<T> value) {
    if (index_.contains(name)) throw Error(ErrorCode::InvariantViolation, "duplicate tensor name " + name);
    index_.emplace(name, entries_.size());
    entries_.emplace_back(std::move(name), std::move(value));
  }

  bool contains(std::string_view name) const { return index_.find(std::string(name)) != index_.end(); }

  Tensor<T>& at(std::string_view name) { return entries_[locate(name)].second; }
  const Tensor<T>& at(std::string_view name) const { return entries_[locate(name)].second; }

  std::vector<Entry>& entries() { return entries_; }
  const std::vector<Entry>& entries() const { return entries_; }
  std::size_t size() const { return entries_.size(); }

  std::size_t element_count() const {
    std::size_t n = 0;
    for (const auto& [_, t] : entries_) n += t.size();
    return n;
  }

  template <typename U>
  ParamStore<U> cast() const {
    ParamStore<U> out;
    for (const auto& [name, t] : entries_) out.add(name, t.template cast<U>());
    return out;
  }

  friend bool operator==(const ParamStore& a, const ParamStore& b) { return a.entries_ == b.entries_; }

 private:
  std::size_t locate(std::string_view name) const {
    const auto it = index_.find(std::string(name));
    if (it == index_.end()) throw Error(ErrorCode::InvariantViolation, "unknown tensor " + std::string(name));
    return it->second;
  }

  std::vector<Entry> entries_;
  std::map<std::string, std::size_t> index_;
};

}  // namespace homnet
