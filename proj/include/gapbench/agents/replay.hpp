#pragma once

#include <deque>
#include <vector>

#include "gapbench/core/error.hpp"
#include "gapbench/core/rng.hpp"
#include "gapbench/dyncore/types.hpp"

namespace gapbench::agents {

using dyncore::Mat;
using dyncore::Vec;

struct Transition {
    Vec obs;        // policy input at decision time (may include a condition vector)
    Vec act;
    double reward = 0.0;
    Vec next_obs;
    bool terminated = false;  // true termination; truncation still bootstraps
    int episode = 0;
    int t = 0;
};

// Fixed-capacity ring with uniform sampling. Window sampling returns runs of
// consecutive steps from a single episode for recurrent actors.
class ReplayBuffer {
   public:
    explicit ReplayBuffer(std::size_t capacity) : capacity_(capacity) {
        require(capacity > 0, "ReplayBuffer: capacity must be positive");
    }

    void push(Transition tr) {
        if (data_.size() < capacity_) {
            data_.push_back(std::move(tr));
        } else {
            data_[head_] = std::move(tr);
            head_ = (head_ + 1) % capacity_;
        }
    }

    std::size_t size() const { return data_.size(); }
    const Transition& at(std::size_t i) const { return data_[i]; }

    std::vector<std::size_t> sample_indices(std::size_t batch, Rng& rng) const {
        require(!data_.empty(), "ReplayBuffer: sample from empty buffer");
        std::vector<std::size_t> idx(batch);
        for (auto& i : idx) i = rng.uniform_index(data_.size());
        return idx;
    }

    // A window ending at a uniformly drawn transition, walking back through
    // contiguous steps of the same episode. May be shorter than `len` near
    // episode starts or the ring seam.
    std::vector<std::size_t> sample_window(std::size_t len, Rng& rng) const {
        require(!data_.empty(), "ReplayBuffer: sample from empty buffer");
        require(len > 0, "ReplayBuffer: window length must be positive");
        const std::size_t end = rng.uniform_index(data_.size());
        std::vector<std::size_t> idx{end};
        std::size_t cur = end;
        while (idx.size() < len) {
            const std::size_t prev = (cur + data_.size() - 1) % data_.size();
            if (prev == end) break;  // wrapped the whole buffer
            const Transition& a = data_[prev];
            const Transition& b = data_[cur];
            if (a.episode != b.episode || a.t + 1 != b.t) break;
            idx.push_back(prev);
            cur = prev;
        }
        std::reverse(idx.begin(), idx.end());
        return idx;
    }

   private:
    std::size_t capacity_;
    std::size_t head_ = 0;
    std::vector<Transition> data_;
};

// Most-recent-first is the wrong order for sequence models; the stack keeps
// slots oldest to newest and zero-fills the oldest end until full.
class HistoryStack {
   public:
    HistoryStack(int depth, int slot_dim) : depth_(depth), slot_dim_(slot_dim) {
        require(depth > 0 && slot_dim > 0, "HistoryStack: positive dims");
    }

    void reset() { slots_.clear(); }

    void push(const Vec& slot) {
        require(slot.size() == slot_dim_, "HistoryStack: slot size mismatch");
        slots_.push_back(slot);
        if (static_cast<int>(slots_.size()) > depth_) slots_.pop_front();
    }

    Vec vector() const {
        Vec out = Vec::Zero(static_cast<long>(depth_) * slot_dim_);
        const int pad = depth_ - static_cast<int>(slots_.size());
        for (std::size_t k = 0; k < slots_.size(); ++k)
            out.segment(static_cast<long>(pad + k) * slot_dim_, slot_dim_) = slots_[k];
        return out;
    }

    int dim() const { return depth_ * slot_dim_; }
    int depth() const { return depth_; }

   private:
    int depth_, slot_dim_;
    std::deque<Vec> slots_;
};

}  // namespace gapbench::agents
