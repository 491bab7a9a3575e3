#pragma once

#include <algorithm>
#include <cstdint>
#include <map>
#include <memory>
#include <numeric>
#include <ostream>
#include <stdexcept>
#include <vector>

namespace ofjet {

/// Element of N_0^d. Indexes one mixed partial derivative in θ.
class MultiIndex {
public:
    MultiIndex() = default;

    explicit MultiIndex(std::vector<int> entries) : entries_(std::move(entries))
    {
        for (int e : entries_) {
            if (e < 0) {
                throw std::invalid_argument("MultiIndex: negative entry");
            }
        }
    }

    MultiIndex(std::initializer_list<int> entries) : MultiIndex(std::vector<int>(entries)) {}

    static MultiIndex zero(int d) { return MultiIndex(std::vector<int>(static_cast<std::size_t>(d), 0)); }

    static MultiIndex unit(int d, int i)
    {
        if (i < 0 || i >= d) {
            throw std::out_of_range("MultiIndex::unit: coordinate out of range");
        }
        std::vector<int> e(static_cast<std::size_t>(d), 0);
        e[static_cast<std::size_t>(i)] = 1;
        return MultiIndex(std::move(e));
    }

    int dimension() const { return static_cast<int>(entries_.size()); }
    int degree() const { return std::accumulate(entries_.begin(), entries_.end(), 0); }
    bool is_zero() const { return degree() == 0; }

    int operator[](int i) const { return entries_.at(static_cast<std::size_t>(i)); }
    const std::vector<int>& entries() const { return entries_; }

    friend bool operator==(const MultiIndex&, const MultiIndex&) = default;
    friend auto operator<=>(const MultiIndex& a, const MultiIndex& b) { return a.entries_ <=> b.entries_; }

    friend MultiIndex operator+(const MultiIndex& a, const MultiIndex& b)
    {
        check_same_dimension(a, b);
        std::vector<int> out(a.entries_);
        for (std::size_t i = 0; i < out.size(); ++i) {
            out[i] += b.entries_[i];
        }
        return MultiIndex(std::move(out));
    }

    /// Componentwise difference; requires b <= a.
    friend MultiIndex operator-(const MultiIndex& a, const MultiIndex& b)
    {
        check_same_dimension(a, b);
        std::vector<int> out(a.entries_);
        for (std::size_t i = 0; i < out.size(); ++i) {
            out[i] -= b.entries_[i];
            if (out[i] < 0) {
                throw std::invalid_argument("MultiIndex: difference would be negative");
            }
        }
        return MultiIndex(std::move(out));
    }

    friend std::ostream& operator<<(std::ostream& os, const MultiIndex& a)
    {
        os << '(';
        for (std::size_t i = 0; i < a.entries_.size(); ++i) {
            os << (i ? "," : "") << a.entries_[i];
        }
        return os << ')';
    }

    static void check_same_dimension(const MultiIndex& a, const MultiIndex& b)
    {
        if (a.dimension() != b.dimension()) {
            throw std::invalid_argument("MultiIndex: dimension mismatch");
        }
    }

private:
    std::vector<int> entries_;
};

/// Componentwise order: beta <= alpha iff beta_i <= alpha_i for every i.
inline bool leq(const MultiIndex& beta, const MultiIndex& alpha)
{
    MultiIndex::check_same_dimension(beta, alpha);
    for (int i = 0; i < alpha.dimension(); ++i) {
        if (beta[i] > alpha[i]) {
            return false;
        }
    }
    return true;
}

inline std::int64_t binomial(int n, int k)
{
    if (k < 0 || k > n) {
        return 0;
    }
    k = std::min(k, n - k);
    std::int64_t out = 1;
    for (int i = 1; i <= k; ++i) {
        out = out * (n - k + i) / i;
    }
    return out;
}

/// Product of per-coordinate binomials C(alpha_i, beta_i).
inline std::int64_t multinomial(const MultiIndex& alpha, const MultiIndex& beta)
{
    if (!leq(beta, alpha)) {
        throw std::invalid_argument("multinomial: beta is not <= alpha");
    }
    std::int64_t out = 1;
    for (int i = 0; i < alpha.dimension(); ++i) {
        out *= binomial(alpha[i], beta[i]);
    }
    return out;
}

/// Unit vector e_i for the smallest i with alpha_i >= 1.
inline MultiIndex e_selector(const MultiIndex& alpha)
{
    for (int i = 0; i < alpha.dimension(); ++i) {
        if (alpha[i] >= 1) {
            return MultiIndex::unit(alpha.dimension(), i);
        }
    }
    throw std::invalid_argument("e_selector: zero multi-index");
}

/// Number of multi-indices in N_0^d with degree <= p.
inline std::int64_t index_count(int d, int p)
{
    std::int64_t total = 0;
    for (int k = 0; k <= p; ++k) {
        total += binomial(d + k - 1, k);
    }
    return total;
}

/**
 * All multi-indices of dimension d and degree <= p, stored in graded order
 * (degree ascending; within a degree, descending lexicographic so that
 * (1,0) precedes (0,1)). Slot 0 is the zero index.
 *
 * Each slot also carries its lower set {beta <= alpha} with the multinomial
 * weights, which is what the filter and log-likelihood recursions iterate.
 */
class IndexSet {
public:
    struct Term {
        int beta;        ///< slot of beta
        int complement;  ///< slot of alpha - beta
        std::int64_t weight;
    };

    IndexSet(int d, int p) : dimension_(d), order_(p)
    {
        if (d < 1) {
            throw std::invalid_argument("IndexSet: dimension must be >= 1");
        }
        if (p < 0) {
            throw std::invalid_argument("IndexSet: order must be >= 0");
        }
        for (int k = 0; k <= p; ++k) {
            std::vector<int> current(static_cast<std::size_t>(d), 0);
            append_degree(current, 0, k);
        }
        for (std::size_t s = 0; s < indices_.size(); ++s) {
            position_.emplace(indices_[s], static_cast<int>(s));
        }
        lower_.resize(indices_.size());
        for (std::size_t a = 0; a < indices_.size(); ++a) {
            for (std::size_t b = 0; b <= a; ++b) {
                if (leq(indices_[b], indices_[a])) {
                    lower_[a].push_back({static_cast<int>(b), slot(indices_[a] - indices_[b]),
                                         multinomial(indices_[a], indices_[b])});
                }
            }
        }
    }

    int dimension() const { return dimension_; }
    int order() const { return order_; }
    int size() const { return static_cast<int>(indices_.size()); }

    const MultiIndex& operator[](int slot) const { return indices_.at(static_cast<std::size_t>(slot)); }
    const std::vector<MultiIndex>& indices() const { return indices_; }

    bool contains(const MultiIndex& alpha) const { return position_.count(alpha) != 0; }

    int slot(const MultiIndex& alpha) const
    {
        auto it = position_.find(alpha);
        if (it == position_.end()) {
            throw std::out_of_range("IndexSet: multi-index not in set");
        }
        return it->second;
    }

    /// beta <= alpha pairs for the multi-index at `slot`, beta ascending in slot order.
    const std::vector<Term>& lower_set(int slot) const { return lower_.at(static_cast<std::size_t>(slot)); }

    auto begin() const { return indices_.begin(); }
    auto end() const { return indices_.end(); }

private:
    void append_degree(std::vector<int>& current, int coord, int remaining)
    {
        if (coord == dimension_ - 1) {
            current[static_cast<std::size_t>(coord)] = remaining;
            indices_.emplace_back(current);
            return;
        }
        for (int v = remaining; v >= 0; --v) {
            current[static_cast<std::size_t>(coord)] = v;
            append_degree(current, coord + 1, remaining - v);
        }
        current[static_cast<std::size_t>(coord)] = 0;
    }

    int dimension_;
    int order_;
    std::vector<MultiIndex> indices_;
    std::map<MultiIndex, int> position_;
    std::vector<std::vector<Term>> lower_;
};

inline std::shared_ptr<const IndexSet> enumerate(int d, int p)
{
    return std::make_shared<const IndexSet>(d, p);
}

}  // namespace ofjet
