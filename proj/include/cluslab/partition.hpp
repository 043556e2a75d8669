#pragma once

#include <algorithm>
#include <cstdint>
#include <stdexcept>
#include <vector>

namespace cluslab {

// Label assignment of n points to K groups. Labels live in [0, K); empty
// groups are allowed (random labelings produce them for tiny n).
struct Partition {
    std::vector<int> labels;
    int K = 0;

    Partition() = default;
    Partition(std::vector<int> lab, int k) : labels(std::move(lab)), K(k) {
        for (int v : labels)
            if (v < 0 || v >= K) throw std::invalid_argument("Partition: label out of range");
    }

    int n() const { return static_cast<int>(labels.size()); }

    std::vector<int> group_sizes() const {
        std::vector<int> sizes(K, 0);
        for (int v : labels) ++sizes[v];
        return sizes;
    }

    int nonempty_groups() const {
        int c = 0;
        for (int s : group_sizes())
            if (s > 0) ++c;
        return c;
    }

    // Relabel groups in order of first occurrence; makes partitions from
    // different algorithms comparable bitwise.
    Partition canonical() const {
        std::vector<int> remap(K, -1);
        std::vector<int> out(labels.size());
        int next = 0;
        for (std::size_t i = 0; i < labels.size(); ++i) {
            int& m = remap[labels[i]];
            if (m < 0) m = next++;
            out[i] = m;
        }
        return Partition(std::move(out), K);
    }

    bool operator==(const Partition& other) const = default;
};

inline bool same_partition(const Partition& a, const Partition& b) {
    return a.n() == b.n() && a.canonical().labels == b.canonical().labels;
}

// Visits every set partition of [0, n) into at most max_groups nonempty
// groups, in restricted-growth-string order (rgs[i] may reuse an existing
// group or open the next one). The visitor sees the rgs buffer by const
// reference and must not keep it.
template <typename Visitor>
void for_each_set_partition(int n, int max_groups, Visitor&& visit) {
    if (n <= 0 || max_groups <= 0) return;
    std::vector<int> rgs(n, 0);
    auto rec = [&](auto&& self, int i, int used) -> void {
        if (i == n) {
            visit(const_cast<const std::vector<int>&>(rgs));
            return;
        }
        const int cap = std::min(used, max_groups - 1);
        for (int g = 0; g <= cap; ++g) {
            rgs[i] = g;
            self(self, i + 1, std::max(used, g + 1));
        }
    };
    rec(rec, 0, 0);
}

}  // namespace cluslab
