#pragma once

// Batch partition strategies. All three produce ceil(n / B) batches whose
// sizes differ by at most one, cover every id exactly once, and are
// deterministic functions of their inputs.

#include <algorithm>
#include <cmath>
#include <map>
#include <string>
#include <vector>

#include "batcheval/errors.hpp"
#include "batcheval/rng.hpp"

namespace batcheval {

struct Partition {
    int round = 0;
    std::vector<std::vector<std::string>> batches;

    std::size_t total() const {
        std::size_t t = 0;
        for (const auto& b : batches) t += b.size();
        return t;
    }
};

namespace detail {

inline void check_partition_args(std::size_t n, int batch_size) {
    if (n == 0) throw MetricError(MetricError::Kind::empty_input, "partition: no ids");
    if (batch_size < 1) throw ConfigError("partition: batch_size must be >= 1");
}

// ids sorted by (score ascending, id ascending); every id must have a score.
inline std::vector<std::string> sorted_by_score(const std::vector<std::string>& ids,
                                                const std::map<std::string, double>& scores) {
    std::vector<std::string> order = ids;
    for (const auto& id : order)
        if (!scores.count(id)) throw MissingScore(id);
    std::sort(order.begin(), order.end(), [&](const std::string& a, const std::string& b) {
        double sa = scores.at(a), sb = scores.at(b);
        if (sa != sb) return sa < sb;
        return a < b;
    });
    return order;
}

}  // namespace detail

// Uniform random partition: shuffle, then cut into consecutive chunks of
// batch_size (last chunk possibly short).
inline Partition partition_random(const std::vector<std::string>& ids, int batch_size, Rng& rng) {
    detail::check_partition_args(ids.size(), batch_size);
    std::vector<std::string> pool = ids;
    rng.shuffle(pool);
    Partition part;
    for (std::size_t i = 0; i < pool.size(); i += static_cast<std::size_t>(batch_size)) {
        std::size_t end = std::min(pool.size(), i + static_cast<std::size_t>(batch_size));
        part.batches.emplace_back(pool.begin() + static_cast<std::ptrdiff_t>(i),
                                  pool.begin() + static_cast<std::ptrdiff_t>(end));
    }
    return part;
}

// Similar scores together: sort ascending and cut into consecutive chunks,
// so batch k holds score ranks (k-1)*B+1 .. k*B.
inline Partition partition_homogeneous(const std::vector<std::string>& ids,
                                       const std::map<std::string, double>& scores, int batch_size) {
    detail::check_partition_args(ids.size(), batch_size);
    std::vector<std::string> order = detail::sorted_by_score(ids, scores);
    Partition part;
    for (std::size_t i = 0; i < order.size(); i += static_cast<std::size_t>(batch_size)) {
        std::size_t end = std::min(order.size(), i + static_cast<std::size_t>(batch_size));
        part.batches.emplace_back(order.begin() + static_cast<std::ptrdiff_t>(i),
                                  order.begin() + static_cast<std::ptrdiff_t>(end));
    }
    return part;
}

// Spread the score range across every batch: cut the ascending order into
// batch_size quantile splits of length L = ceil(n / batch_size) (the last
// split possibly short), then have batch b take the b-th element of each
// split, so no batch holds two ids from the same split. rotation shifts
// which element of split j lands in which batch -- element e of split j
// goes to batch (e + rotation * j) mod L -- giving distinct groupings of
// the same quantile structure across rounds.
inline Partition partition_heterogeneous(const std::vector<std::string>& ids,
                                         const std::map<std::string, double>& scores, int batch_size,
                                         int rotation = 0) {
    detail::check_partition_args(ids.size(), batch_size);
    std::vector<std::string> order = detail::sorted_by_score(ids, scores);
    std::size_t n = order.size();
    std::size_t B = static_cast<std::size_t>(batch_size);
    std::size_t L = (n + B - 1) / B;  // batches, and also the split length
    Partition part;
    part.batches.assign(L, {});
    std::size_t rot = static_cast<std::size_t>(rotation % static_cast<int>(L) + static_cast<int>(L)) % L;
    for (std::size_t idx = 0; idx < n; ++idx) {
        std::size_t split = idx / L;    // quantile split index j
        std::size_t elem = idx % L;     // position e within the split
        std::size_t target = (elem + rot * split) % L;
        part.batches[target].push_back(order[idx]);
    }
    // Order within each batch follows ascending score order by construction
    // (splits are visited low to high). All L batches are non-empty: split 0
    // has a full L elements and maps onto every batch index bijectively.
    return part;
}

}  // namespace batcheval
