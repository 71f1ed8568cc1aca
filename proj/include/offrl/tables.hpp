#pragma once

#include <cassert>
#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

namespace offrl {

/// Dense table indexed by (step, state, action), stored row-major so that
/// the action axis is contiguous.
template <typename T>
class StepStateActionTable {
public:
    StepStateActionTable() = default;
    StepStateActionTable(int steps, int states, int actions, T init = T{})
        : steps_(steps), states_(states), actions_(actions),
          data_(static_cast<std::size_t>(steps) * states * actions, init) {}

    int steps() const { return steps_; }
    int states() const { return states_; }
    int actions() const { return actions_; }

    std::size_t index(int h, int s, int a) const {
        assert(h >= 0 && h < steps_ && s >= 0 && s < states_ && a >= 0 && a < actions_);
        return (static_cast<std::size_t>(h) * states_ + s) * actions_ + a;
    }

    T& operator()(int h, int s, int a) { return data_[index(h, s, a)]; }
    const T& operator()(int h, int s, int a) const { return data_[index(h, s, a)]; }

    std::span<T> row(int h, int s) { return {data_.data() + index(h, s, 0), static_cast<std::size_t>(actions_)}; }
    std::span<const T> row(int h, int s) const {
        return {data_.data() + index(h, s, 0), static_cast<std::size_t>(actions_)};
    }

    std::vector<T>& data() { return data_; }
    const std::vector<T>& data() const { return data_; }

    bool same_shape(const StepStateActionTable& other) const {
        return steps_ == other.steps_ && states_ == other.states_ && actions_ == other.actions_;
    }

    friend bool operator==(const StepStateActionTable&, const StepStateActionTable&) = default;

private:
    int steps_ = 0;
    int states_ = 0;
    int actions_ = 0;
    std::vector<T> data_;
};

/// Dense table indexed by (step, state).
template <typename T>
class StepStateTable {
public:
    StepStateTable() = default;
    StepStateTable(int steps, int states, T init = T{})
        : steps_(steps), states_(states), data_(static_cast<std::size_t>(steps) * states, init) {}

    int steps() const { return steps_; }
    int states() const { return states_; }

    T& operator()(int h, int s) { return data_[static_cast<std::size_t>(h) * states_ + s]; }
    const T& operator()(int h, int s) const { return data_[static_cast<std::size_t>(h) * states_ + s]; }

    std::span<T> row(int h) { return {data_.data() + static_cast<std::size_t>(h) * states_, static_cast<std::size_t>(states_)}; }
    std::span<const T> row(int h) const {
        return {data_.data() + static_cast<std::size_t>(h) * states_, static_cast<std::size_t>(states_)};
    }

    std::vector<T>& data() { return data_; }
    const std::vector<T>& data() const { return data_; }

    friend bool operator==(const StepStateTable&, const StepStateTable&) = default;

private:
    int steps_ = 0;
    int states_ = 0;
    std::vector<T> data_;
};

using SATable = StepStateActionTable<double>;
using StateTable = StepStateTable<double>;
/// Boolean mask over (step, state, action); uint8_t avoids vector<bool>.
using SAMask = StepStateActionTable<std::uint8_t>;

inline double dot(std::span<const double> x, std::span<const double> y) {
    assert(x.size() == y.size());
    double acc = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) acc += x[i] * y[i];
    return acc;
}

}  // namespace offrl
