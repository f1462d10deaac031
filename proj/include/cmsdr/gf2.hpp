#pragma once

#include <algorithm>
#include <cstdint>
#include <numeric>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "cmsdr/errors.hpp"
#include "cmsdr/random.hpp"

namespace cmsdr {

// Sparse binary parity-check matrix kept as row and column adjacency lists.
struct ParityCheckMatrix {
    int rows = 0;
    int cols = 0;
    std::vector<std::vector<int>> row_support;  // sorted 0-based column indices
    std::vector<std::vector<int>> col_support;  // sorted 0-based row indices

    static ParityCheckMatrix from_rows(int cols, std::vector<std::vector<int>> rows_in) {
        ParityCheckMatrix h;
        h.rows = static_cast<int>(rows_in.size());
        h.cols = cols;
        h.row_support = std::move(rows_in);
        h.col_support.assign(static_cast<std::size_t>(cols), {});
        for (int m = 0; m < h.rows; ++m) {
            auto& r = h.row_support[static_cast<std::size_t>(m)];
            std::sort(r.begin(), r.end());
            for (int n : r) {
                if (n < 0 || n >= cols) throw ValueError("column index out of range");
                h.col_support[static_cast<std::size_t>(n)].push_back(m);
            }
        }
        h.validate();
        return h;
    }

    void validate() const {
        if (rows <= 0 || cols <= 0) throw ValueError("parity-check matrix must be nonempty");
        for (int m = 0; m < rows; ++m) {
            const auto& r = row_support[static_cast<std::size_t>(m)];
            if (r.empty()) throw ValueError("all-zero parity-check row " + std::to_string(m + 1));
            for (std::size_t i = 1; i < r.size(); ++i)
                if (r[i] == r[i - 1]) throw ValueError("duplicate entry in row " + std::to_string(m + 1));
        }
        for (int n = 0; n < cols; ++n)
            if (col_support[static_cast<std::size_t>(n)].empty())
                throw ValueError("all-zero parity-check column " + std::to_string(n + 1));
    }

    int row_degree(int m) const { return static_cast<int>(row_support[static_cast<std::size_t>(m)].size()); }
    int max_row_degree() const {
        int d = 0;
        for (const auto& r : row_support) d = std::max(d, static_cast<int>(r.size()));
        return d;
    }
    int max_col_degree() const {
        int d = 0;
        for (const auto& c : col_support) d = std::max(d, static_cast<int>(c.size()));
        return d;
    }
};

// One Feldman parity inequality: sum_{F} f - sum_{N_m \ F} f <= |F| - 1.
struct ParityInequality {
    int check = 0;
    std::vector<int> positive;  // F, odd cardinality
    std::vector<int> negative;  // N_m \ F
    int rhs = 0;

    double lhs(const std::vector<double>& f) const {
        double v = 0.0;
        for (int i : positive) v += f[static_cast<std::size_t>(i)];
        for (int i : negative) v -= f[static_cast<std::size_t>(i)];
        return v;
    }

    bool satisfied(const std::vector<double>& f, double tol = 0.0) const {
        return lhs(f) <= static_cast<double>(rhs) + tol;
    }
};

namespace detail {

// Dense GF(2) matrix over 64-bit words, enough for the elimination work.
class Gf2Dense {
  public:
    Gf2Dense(int rows, int cols)
        : rows_(rows), cols_(cols), words_per_row_((cols + 63) / 64),
          data_(static_cast<std::size_t>(rows) * static_cast<std::size_t>(words_per_row_), 0) {}

    static Gf2Dense from(const ParityCheckMatrix& h) {
        Gf2Dense m(h.rows, h.cols);
        for (int r = 0; r < h.rows; ++r)
            for (int c : h.row_support[static_cast<std::size_t>(r)]) m.set(r, c);
        return m;
    }

    void set(int r, int c) { word(r, c / 64) |= (1ULL << (c % 64)); }
    bool get(int r, int c) const { return (word(r, c / 64) >> (c % 64)) & 1ULL; }

    void xor_rows(int dst, int src) {
        for (int w = 0; w < words_per_row_; ++w) word(dst, w) ^= word(src, w);
    }
    void swap_rows(int a, int b) {
        if (a == b) return;
        for (int w = 0; w < words_per_row_; ++w) std::swap(word(a, w), word(b, w));
    }

    // In-place reduced row echelon form; returns pivot columns in row order.
    std::vector<int> rref() {
        std::vector<int> pivots;
        int r = 0;
        for (int c = 0; c < cols_ && r < rows_; ++c) {
            int sel = -1;
            for (int i = r; i < rows_; ++i)
                if (get(i, c)) { sel = i; break; }
            if (sel < 0) continue;
            swap_rows(sel, r);
            for (int i = 0; i < rows_; ++i)
                if (i != r && get(i, c)) xor_rows(i, r);
            pivots.push_back(c);
            ++r;
        }
        return pivots;
    }

    int rows() const { return rows_; }
    int cols() const { return cols_; }

  private:
    std::uint64_t& word(int r, int w) {
        return data_[static_cast<std::size_t>(r) * static_cast<std::size_t>(words_per_row_) + static_cast<std::size_t>(w)];
    }
    const std::uint64_t& word(int r, int w) const {
        return data_[static_cast<std::size_t>(r) * static_cast<std::size_t>(words_per_row_) + static_cast<std::size_t>(w)];
    }

    int rows_, cols_, words_per_row_;
    std::vector<std::uint64_t> data_;
};

}  // namespace detail

inline int gf2_rank(const ParityCheckMatrix& h) {
    auto m = detail::Gf2Dense::from(h);
    return static_cast<int>(m.rref().size());
}

inline bool is_codeword(const std::vector<int>& bits, const ParityCheckMatrix& h) {
    if (static_cast<int>(bits.size()) != h.cols) throw ValueError("codeword length mismatch");
    for (const auto& row : h.row_support) {
        int parity = 0;
        for (int n : row) parity ^= (bits[static_cast<std::size_t>(n)] & 1);
        if (parity) return false;
    }
    return true;
}

struct AsymmetryVerdict {
    bool asymmetric = false;
    std::optional<int> odd_row;  // certificate: 0-based index of an odd-weight row
};

// A code is asymmetric iff the all-ones word fails some check, i.e. some row
// of H has odd weight. GF(2) sums of even-weight rows stay even-weight, so
// single rows are the only candidates.
inline AsymmetryVerdict is_asymmetric(const ParityCheckMatrix& h) {
    for (int m = 0; m < h.rows; ++m) {
        if (h.row_degree(m) % 2 == 1) return {true, m};
    }
    return {false, std::nullopt};
}

// Systematic encoding through GF(2) elimination of H. Information bits are
// placed on the non-pivot columns; pivot columns carry the parity solution.
struct Encoder {
    explicit Encoder(const ParityCheckMatrix& h) : cols_(h.cols) {
        auto m = detail::Gf2Dense::from(h);
        pivots_ = m.rref();
        if (static_cast<int>(pivots_.size()) != h.rows)
            throw RankError("parity-check matrix is rank deficient: rank " +
                            std::to_string(pivots_.size()) + " < " + std::to_string(h.rows) + " rows");
        std::vector<char> is_pivot(static_cast<std::size_t>(h.cols), 0);
        for (int c : pivots_) is_pivot[static_cast<std::size_t>(c)] = 1;
        for (int c = 0; c < h.cols; ++c)
            if (!is_pivot[static_cast<std::size_t>(c)]) info_positions_.push_back(c);
        // Row r of the RREF pins pivot column pivots_[r] to the sum of the
        // free columns present in that row.
        row_free_.resize(pivots_.size());
        for (std::size_t r = 0; r < pivots_.size(); ++r) {
            for (int c : info_positions_)
                if (m.get(static_cast<int>(r), c)) row_free_[r].push_back(c);
        }
    }

    int info_length() const { return static_cast<int>(info_positions_.size()); }
    const std::vector<int>& info_positions() const { return info_positions_; }

    std::vector<int> encode(const std::vector<int>& info_bits) const {
        if (static_cast<int>(info_bits.size()) != info_length())
            throw ValueError("expected " + std::to_string(info_length()) + " information bits");
        std::vector<int> c(static_cast<std::size_t>(cols_), 0);
        for (std::size_t i = 0; i < info_positions_.size(); ++i)
            c[static_cast<std::size_t>(info_positions_[i])] = info_bits[i] & 1;
        for (std::size_t r = 0; r < pivots_.size(); ++r) {
            int parity = 0;
            for (int fc : row_free_[r]) parity ^= c[static_cast<std::size_t>(fc)];
            c[static_cast<std::size_t>(pivots_[r])] = parity;
        }
        return c;
    }

    std::vector<int> extract_info(const std::vector<int>& codeword) const {
        if (static_cast<int>(codeword.size()) != cols_) throw ValueError("codeword length mismatch");
        std::vector<int> info;
        info.reserve(info_positions_.size());
        for (int c : info_positions_) info.push_back(codeword[static_cast<std::size_t>(c)] & 1);
        return info;
    }

  private:
    int cols_;
    std::vector<int> pivots_;
    std::vector<int> info_positions_;
    std::vector<std::vector<int>> row_free_;
};

inline std::vector<int> encode(const std::vector<int>& info_bits, const ParityCheckMatrix& h) {
    return Encoder(h).encode(info_bits);
}

// All parity inequalities of a check of degree d: one per odd-cardinality
// subset, 2^(d-1) in total. Degrees above d_max are refused since the count
// doubles per extra edge.
inline std::vector<ParityInequality> enumerate_parity_inequalities(const ParityCheckMatrix& h,
                                                                   int d_max = 8) {
    std::vector<ParityInequality> out;
    for (int m = 0; m < h.rows; ++m) {
        const auto& nb = h.row_support[static_cast<std::size_t>(m)];
        const int d = static_cast<int>(nb.size());
        if (d > d_max)
            throw ValueError("check " + std::to_string(m + 1) + " has degree " + std::to_string(d) +
                             " > d_max " + std::to_string(d_max));
        for (std::uint32_t mask = 1; mask < (1u << d); ++mask) {
            if (__builtin_popcount(mask) % 2 == 0) continue;
            ParityInequality q;
            q.check = m;
            for (int i = 0; i < d; ++i) {
                if (mask & (1u << i))
                    q.positive.push_back(nb[static_cast<std::size_t>(i)]);
                else
                    q.negative.push_back(nb[static_cast<std::size_t>(i)]);
            }
            q.rhs = static_cast<int>(q.positive.size()) - 1;
            out.push_back(std::move(q));
        }
    }
    return out;
}

// ---------------------------------------------------------------------------
// alist interchange format (1-based indices, zero-padded adjacency lines)

inline ParityCheckMatrix load_alist(const std::string& text) {
    std::istringstream in(text);
    std::string line;
    int lineno = 0;
    auto next_tokens = [&](std::vector<long>& toks) {
        toks.clear();
        while (std::getline(in, line)) {
            ++lineno;
            std::istringstream ls(line);
            long v;
            while (ls >> v) toks.push_back(v);
            std::string trailing;
            if (ls.clear(), ls >> trailing)
                throw ParseError("alist line " + std::to_string(lineno) + ": non-numeric token");
            if (!toks.empty()) return true;
        }
        return false;
    };
    auto fail = [&](const std::string& what) -> ParseError {
        return ParseError("alist line " + std::to_string(lineno) + ": " + what);
    };

    std::vector<long> t;
    if (!next_tokens(t) || t.size() != 2) throw fail("expected 'N M' header");
    const int n = static_cast<int>(t[0]);
    const int m = static_cast<int>(t[1]);
    if (n <= 0 || m <= 0) throw fail("dimensions must be positive");
    if (!next_tokens(t) || t.size() != 2) throw fail("expected max column/row degrees");
    const int max_cdeg = static_cast<int>(t[0]);
    const int max_rdeg = static_cast<int>(t[1]);

    if (!next_tokens(t) || static_cast<int>(t.size()) != n) throw fail("expected " + std::to_string(n) + " column degrees");
    std::vector<int> cdeg(t.begin(), t.end());
    if (!next_tokens(t) || static_cast<int>(t.size()) != m) throw fail("expected " + std::to_string(m) + " row degrees");
    std::vector<int> rdeg(t.begin(), t.end());
    for (int j = 0; j < n; ++j)
        if (cdeg[static_cast<std::size_t>(j)] < 0 || cdeg[static_cast<std::size_t>(j)] > max_cdeg)
            throw fail("column degree out of range");
    for (int i = 0; i < m; ++i)
        if (rdeg[static_cast<std::size_t>(i)] < 0 || rdeg[static_cast<std::size_t>(i)] > max_rdeg)
            throw fail("row degree out of range");

    auto read_adjacency = [&](int count, const std::vector<int>& deg, int limit, const char* kind) {
        std::vector<std::vector<int>> adj(static_cast<std::size_t>(count));
        for (int i = 0; i < count; ++i) {
            if (!next_tokens(t)) throw fail(std::string("missing ") + kind + " adjacency line");
            const int d = deg[static_cast<std::size_t>(i)];
            if (static_cast<int>(t.size()) != d && static_cast<int>(t.size()) != std::max(d, (kind[0] == 'c') ? max_cdeg : max_rdeg))
                throw fail(std::string(kind) + " " + std::to_string(i + 1) + " lists " + std::to_string(t.size()) +
                           " entries, declared degree " + std::to_string(d));
            for (std::size_t k = 0; k < t.size(); ++k) {
                const long v = t[k];
                if (static_cast<int>(k) < d) {
                    if (v < 1 || v > limit)
                        throw fail(std::string(kind) + " " + std::to_string(i + 1) + ": index " + std::to_string(v) +
                                   " out of range [1, " + std::to_string(limit) + "]");
                    adj[static_cast<std::size_t>(i)].push_back(static_cast<int>(v - 1));
                } else if (v != 0) {
                    throw fail(std::string(kind) + " " + std::to_string(i + 1) + ": nonzero padding beyond declared degree");
                }
            }
        }
        return adj;
    };

    auto cols = read_adjacency(n, cdeg, m, "column");
    auto rows = read_adjacency(m, rdeg, n, "row");

    // Cross-check the two adjacency views before building.
    std::vector<std::vector<int>> cols_from_rows(static_cast<std::size_t>(n));
    for (int i = 0; i < m; ++i)
        for (int j : rows[static_cast<std::size_t>(i)]) cols_from_rows[static_cast<std::size_t>(j)].push_back(i);
    for (int j = 0; j < n; ++j) {
        auto a = cols[static_cast<std::size_t>(j)];
        auto b = cols_from_rows[static_cast<std::size_t>(j)];
        std::sort(a.begin(), a.end());
        std::sort(b.begin(), b.end());
        if (a != b)
            throw ParseError("alist: column " + std::to_string(j + 1) + " adjacency disagrees with row lists");
    }

    return ParityCheckMatrix::from_rows(n, std::move(rows));
}

inline std::string to_alist(const ParityCheckMatrix& h) {
    std::ostringstream out;
    const int max_c = h.max_col_degree();
    const int max_r = h.max_row_degree();
    out << h.cols << ' ' << h.rows << '\n';
    out << max_c << ' ' << max_r << '\n';
    for (int j = 0; j < h.cols; ++j)
        out << h.col_support[static_cast<std::size_t>(j)].size() << (j + 1 < h.cols ? ' ' : '\n');
    for (int i = 0; i < h.rows; ++i)
        out << h.row_support[static_cast<std::size_t>(i)].size() << (i + 1 < h.rows ? ' ' : '\n');
    for (int j = 0; j < h.cols; ++j) {
        const auto& c = h.col_support[static_cast<std::size_t>(j)];
        for (int k = 0; k < max_c; ++k)
            out << (k < static_cast<int>(c.size()) ? c[static_cast<std::size_t>(k)] + 1 : 0) << (k + 1 < max_c ? ' ' : '\n');
    }
    for (int i = 0; i < h.rows; ++i) {
        const auto& r = h.row_support[static_cast<std::size_t>(i)];
        for (int k = 0; k < max_r; ++k)
            out << (k < static_cast<int>(r.size()) ? r[static_cast<std::size_t>(k)] + 1 : 0) << (k + 1 < max_r ? ' ' : '\n');
    }
    return out.str();
}

// Random regular-ish asymmetric code: rows get row_degree entries spread over
// the least-loaded columns, one row is widened/narrowed to odd degree when
// row_degree is even, and the draw is retried until H has full GF(2) rank.
inline ParityCheckMatrix generate_asymmetric_code(int n_code, int m, int row_degree,
                                                  std::uint64_t seed, int max_attempts = 100) {
    if (n_code <= 0 || m <= 0) throw ValueError("code dimensions must be positive");
    if (m > n_code) throw ValueError("more checks than variables");
    if (row_degree < 1 || row_degree > n_code) throw ValueError("row degree out of range");
    if (static_cast<long>(m) * row_degree < n_code)
        throw GenerationError("degree profile cannot cover every column: m * row_degree < n_code");

    Rng rng(mix_seed(seed, seed_tag::code_generation));
    for (int attempt = 0; attempt < max_attempts; ++attempt) {
        std::vector<int> col_load(static_cast<std::size_t>(n_code), 0);
        std::vector<std::vector<int>> rows(static_cast<std::size_t>(m));
        for (int r = 0; r < m; ++r) {
            int deg = row_degree;
            if (row_degree % 2 == 0 && r == m - 1) deg = (row_degree + 1 <= n_code) ? row_degree + 1 : row_degree - 1;
            // Least-loaded columns first, ties broken by a random key.
            std::vector<std::pair<std::uint64_t, int>> order;
            order.reserve(static_cast<std::size_t>(n_code));
            for (int c = 0; c < n_code; ++c)
                order.emplace_back((static_cast<std::uint64_t>(col_load[static_cast<std::size_t>(c)]) << 48) ^ (rng.next() >> 16), c);
            std::sort(order.begin(), order.end());
            for (int k = 0; k < deg; ++k) {
                const int c = order[static_cast<std::size_t>(k)].second;
                rows[static_cast<std::size_t>(r)].push_back(c);
                ++col_load[static_cast<std::size_t>(c)];
            }
        }
        bool covered = true;
        for (int c = 0; c < n_code; ++c) covered = covered && col_load[static_cast<std::size_t>(c)] > 0;
        if (!covered) continue;
        ParityCheckMatrix h = ParityCheckMatrix::from_rows(n_code, rows);
        if (!is_asymmetric(h).asymmetric) continue;
        if (gf2_rank(h) != m) continue;
        return h;
    }
    throw GenerationError("could not draw a full-rank asymmetric code after " +
                          std::to_string(max_attempts) + " attempts");
}

}  // namespace cmsdr
