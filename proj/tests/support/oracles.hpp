#pragma once

// Brute-force reference computations used only by tests. Nothing here calls
// into the code under test's algorithms.

#include <algorithm>
#include <cstdint>
#include <functional>
#include <map>
#include <vector>

namespace oracle {

// Calls `visit` with every partition of {0..n*groups-1} into `groups`
// unlabeled blocks of size n (as a group-of vector, canonical labels).
inline void for_each_partition(int n, int groups, const std::function<void(const std::vector<int>&)>& visit) {
    const int total = n * groups;
    std::vector<int> label(total, -1);
    std::vector<int> fill(groups, 0);
    std::function<void(int, int)> rec = [&](int item, int opened) {
        if (item == total) {
            visit(label);
            return;
        }
        for (int g = 0; g < std::min(opened + 1, groups); ++g) {
            if (fill[g] == n) continue;
            label[item] = g;
            ++fill[g];
            rec(item + 1, std::max(opened, g + 1));
            --fill[g];
            label[item] = -1;
        }
    };
    rec(0, 0);
}

// Twice the pairwise trend count: sum over ordered group pairs i < j of
// 2 * #(b > a) + #(b == a), computed by direct pair comparison.
inline long twice_trend(const std::vector<std::vector<double>>& groups) {
    long s = 0;
    for (std::size_t i = 0; i < groups.size(); ++i)
        for (std::size_t j = i + 1; j < groups.size(); ++j)
            for (double a : groups[i])
                for (double b : groups[j]) s += b > a ? 2 : (b == a ? 1 : 0);
    return s;
}

// Enumerates every assignment of the pooled (labelled) values into groups
// with the given sizes and returns the histogram of twice_trend.
inline std::map<long, long> trend_histogram(const std::vector<double>& pooled,
                                            const std::vector<int>& sizes) {
    std::map<long, long> hist;
    const int total = static_cast<int>(pooled.size());
    std::vector<int> owner(total, -1);
    std::vector<int> room(sizes);
    std::function<void(int)> rec = [&](int item) {
        if (item == total) {
            std::vector<std::vector<double>> groups(sizes.size());
            for (int i = 0; i < total; ++i) groups[owner[i]].push_back(pooled[i]);
            ++hist[twice_trend(groups)];
            return;
        }
        for (std::size_t g = 0; g < sizes.size(); ++g) {
            if (room[g] == 0) continue;
            --room[g];
            owner[item] = static_cast<int>(g);
            rec(item + 1);
            ++room[g];
        }
    };
    rec(0);
    return hist;
}

struct TailProbabilities {
    double upper;  // P(S >= s)
    double both;   // P(|S - mean| >= |s - mean|)
};

inline TailProbabilities tails(const std::map<long, long>& hist, long s, long mean2) {
    long total = 0;
    long up = 0;
    long both = 0;
    for (const auto& [v, c] : hist) {
        total += c;
        if (v >= s) up += c;
        if (std::labs(v - mean2) >= std::labs(s - mean2)) both += c;
    }
    return {static_cast<double>(up) / total, static_cast<double>(both) / total};
}

}  // namespace oracle
