#pragma once

#include <memory>
#include <optional>
#include <set>
#include <stdexcept>
#include <string>
#include <vector>

#include "kset/types.hpp"

namespace kset {

/// Opaque per-process state. describe() is the canonical protocol-visible
/// record: two states are considered equal exactly when their descriptions
/// match, which is the equality used for run indistinguishability.
class AlgorithmState {
 public:
  virtual ~AlgorithmState() = default;
  virtual std::string describe() const = 0;
};

using StatePtr = std::unique_ptr<const AlgorithmState>;

struct Outgoing {
  ProcessId receiver = 0;
  Payload payload;
};

/// A deterministic message-passing algorithm. One step works on a fixed
/// schedule: the process reads the delivered batch and optional
/// failure-detector value, emits sending(state, delivered) computed from the
/// pre-step state, and moves to transition(state, delivered, fd). Both
/// functions must be pure; emission order must be deterministic because
/// message ids are assigned in that order.
class Algorithm {
 public:
  virtual ~Algorithm() = default;
  virtual std::string name() const = 0;
  virtual StatePtr initial_state(ProcessId pid, const SystemParams& params, Value input) const = 0;
  virtual StatePtr transition(const AlgorithmState& state, const std::vector<Message>& delivered,
                              const std::optional<FdValue>& fd) const = 0;
  virtual std::vector<Outgoing> sending(const AlgorithmState& state,
                                        const std::vector<Message>& delivered) const = 0;
  virtual std::optional<Value> decision(const AlgorithmState& state) const = 0;
};

using AlgorithmPtr = std::shared_ptr<const Algorithm>;

namespace detail {

class RestrictedAlgorithm final : public Algorithm {
 public:
  RestrictedAlgorithm(AlgorithmPtr inner, std::set<ProcessId> keep)
      : inner_(std::move(inner)), keep_(std::move(keep)) {}

  std::string name() const override {
    return inner_->name() + "|" + join_ids(keep_);
  }
  StatePtr initial_state(ProcessId pid, const SystemParams& params, Value input) const override {
    return inner_->initial_state(pid, params, input);
  }
  StatePtr transition(const AlgorithmState& state, const std::vector<Message>& delivered,
                      const std::optional<FdValue>& fd) const override {
    return inner_->transition(state, delivered, fd);
  }
  std::vector<Outgoing> sending(const AlgorithmState& state,
                                const std::vector<Message>& delivered) const override {
    std::vector<Outgoing> out;
    for (auto& m : inner_->sending(state, delivered))
      if (keep_.count(m.receiver)) out.push_back(std::move(m));
    return out;
  }
  std::optional<Value> decision(const AlgorithmState& state) const override {
    return inner_->decision(state);
  }

 private:
  AlgorithmPtr inner_;
  std::set<ProcessId> keep_;
};

}  // namespace detail

/// Restriction to a process set D: identical state logic (transitions still
/// reason about the full n), but messages addressed outside D are never
/// emitted. Restricting to the full process set is the identity.
inline AlgorithmPtr restrict_algorithm(AlgorithmPtr algorithm, std::set<ProcessId> keep) {
  if (!algorithm) throw std::invalid_argument("restrict_algorithm: null algorithm");
  if (keep.empty()) throw std::invalid_argument("restrict_algorithm: empty restriction set");
  return std::make_shared<detail::RestrictedAlgorithm>(std::move(algorithm), std::move(keep));
}

}  // namespace kset
