#include "rauzy/iet.hpp"

#include <algorithm>
#include <type_traits>
#include <map>
#include <queue>
#include <set>

#include <nlohmann/json.hpp>

#include "rauzy/rng.hpp"

namespace rauzy::iet {

int Permutation::inverse(int p) const {
    for (int i = 1; i <= size(); ++i)
        if (pi[std::size_t(i) - 1] == p) return i;
    throw ConfigError("Permutation::inverse: value out of range");
}

bool Permutation::is_bijection() const {
    std::vector<bool> seen(pi.size(), false);
    for (int v : pi) {
        if (v < 1 || v > size() || seen[std::size_t(v) - 1]) return false;
        seen[std::size_t(v) - 1] = true;
    }
    return true;
}

bool Permutation::irreducible() const {
    int mx = 0;
    for (int k = 1; k < size(); ++k) {
        mx = std::max(mx, pi[std::size_t(k) - 1]);
        if (mx == k) return false;
    }
    return true;
}

void Permutation::validate() const {
    if (size() < 2) throw ConfigError("permutation needs at least 2 intervals");
    if (!is_bijection()) throw ConfigError("permutation is not a bijection");
    if (!irreducible()) throw ConfigError("permutation is reducible");
}

BigMat RauzyStep::length_matrix() const {
    BigMat A = BigMat::identity(m);
    A.at(winner - 1, loser - 1) = 1;
    return A;
}

BigMat RauzyStep::incidence() const {
    BigMat A = BigMat::identity(m);
    A.at(loser - 1, winner - 1) = 1;
    return A;
}

subst::Substitution RauzyStep::substitution() const {
    subst::Substitution z = subst::Substitution::identity(m);
    // loser's tower passes first through the winner when the image-last
    // interval wins, and through itself first when the domain-last wins
    if (kind == StepKind::a)
        z.images[std::size_t(loser) - 1] = {std::uint8_t(winner), std::uint8_t(loser)};
    else
        z.images[std::size_t(loser) - 1] = {std::uint8_t(loser), std::uint8_t(winner)};
    return z;
}

template <class Len>
IetT<Len> IetT<Len>::from(const Permutation& pi, std::vector<Len> lambda_domain) {
    pi.validate();
    const int m = pi.size();
    if (int(lambda_domain.size()) != m) throw ConfigError("IET: length vector size mismatch");
    for (const Len& l : lambda_domain)
        if (!(l > Len(0))) throw ConfigError("IET: lengths must be positive");
    if constexpr (std::is_same_v<Len, Rat>)
        for (Len& l : lambda_domain) l.canonicalize();
    IetT T;
    T.m = m;
    T.top.resize(m);
    T.bottom.resize(m);
    for (int i = 1; i <= m; ++i) {
        T.top[std::size_t(i) - 1] = i;
        T.bottom[std::size_t(pi(i)) - 1] = i;
    }
    T.len = std::move(lambda_domain);
    T.normalize();
    return T;
}

template <class Len>
Permutation IetT<Len>::monodromy() const {
    std::vector<int> posb(m + 1);
    for (int p = 1; p <= m; ++p) posb[std::size_t(bottom[std::size_t(p) - 1])] = p;
    Permutation pi;
    pi.pi.resize(m);
    for (int i = 1; i <= m; ++i) pi.pi[std::size_t(i) - 1] = posb[std::size_t(top[std::size_t(i) - 1])];
    return pi;
}

template <class Len>
std::vector<Len> IetT<Len>::lambda_domain() const {
    std::vector<Len> out(m);
    for (int i = 0; i < m; ++i) out[std::size_t(i)] = len[std::size_t(top[std::size_t(i)] - 1)];
    return out;
}

template <class Len>
Len IetT<Len>::total() const {
    Len s(0);
    for (const Len& l : len) s += l;
    return s;
}

template <class Len>
void IetT<Len>::normalize() {
    Len t = total();
    for (Len& l : len) l /= t;
}

IetExact to_exact(const Iet& T) {
    IetExact out;
    out.m = T.m;
    out.top = T.top;
    out.bottom = T.bottom;
    for (double l : T.len) out.len.push_back(rat_of_double(l));
    out.normalize();
    return out;
}

Iet to_double(const IetExact& T) {
    Iet out;
    out.m = T.m;
    out.top = T.top;
    out.bottom = T.bottom;
    for (const Rat& l : T.len) out.len.push_back(l.get_d());
    return out;
}

namespace {

inline bool lengths_tie(double a, double b) {
    return std::fabs(a - b) < kTieRelTol * std::max(a, b);
}
inline bool lengths_tie(const Rat& a, const Rat& b) { return a == b; }

inline double as_double(double x) { return x; }
inline double as_double(const Rat& x) { return x.get_d(); }

} // namespace

template <class Len>
StepResult<Len> rauzy_step(const IetT<Len>& T) {
    const int at = T.top.back();    // last interval of the domain
    const int ab = T.bottom.back(); // interval occupying the last slot of the image
    if (at == ab) throw DegeneracyError("rauzy_step: permutation fixes the last interval");
    const Len la = T.len[std::size_t(at) - 1];
    const Len lb = T.len[std::size_t(ab) - 1];
    if (lengths_tie(la, lb))
        throw TieError("rauzy_step: degenerate tie lambda_m == lambda_{pi^-1(m)}", 0);

    StepResult<Len> out;
    out.next = T;
    RauzyStep& st = out.step;
    st.m = T.m;
    if (lb > la) {
        // image-last interval wins
        st.kind = StepKind::a;
        st.winner = ab;
        st.loser = at;
        auto& top = out.next.top;
        top.pop_back();
        auto it = std::find(top.begin(), top.end(), ab);
        top.insert(it + 1, at);
    } else {
        // domain-last interval wins
        st.kind = StepKind::b;
        st.winner = at;
        st.loser = ab;
        auto& bot = out.next.bottom;
        bot.pop_back();
        auto it = std::find(bot.begin(), bot.end(), at);
        bot.insert(it + 1, ab);
    }
    out.next.len[std::size_t(st.winner) - 1] -= out.next.len[std::size_t(st.loser) - 1];
    const Len total_new = out.next.total();
    out.log_contraction = -std::log(as_double(total_new) / as_double(T.total()));
    out.next.normalize();
    return out;
}

template <class Len>
RauzyPathT<Len> rauzy_path(const IetT<Len>& T, std::size_t n) {
    RauzyPathT<Len> path;
    path.start = T;
    path.steps.reserve(n);
    path.lambda_log.reserve(n);
    path.vertices.push_back(T.monodromy());
    path.tops.push_back(T.top);
    IetT<Len> cur = T;
    double acc = 0;
    for (std::size_t k = 0; k < n; ++k) {
        StepResult<Len> r;
        try {
            r = rauzy_step(cur);
        } catch (const TieError& e) {
            throw TieError(std::string(e.what()) + " (step " + std::to_string(k) + ")", k);
        }
        cur = std::move(r.next);
        acc += r.log_contraction;
        path.steps.push_back(r.step);
        path.lambda_log.push_back(acc);
        path.vertices.push_back(cur.monodromy());
        path.tops.push_back(cur.top);
    }
    path.final_state = std::move(cur);
    return path;
}

template <class Len>
std::string RauzyPathT<Len>::kinds() const {
    std::string s;
    s.reserve(steps.size());
    for (const auto& st : steps) s.push_back(char(st.kind));
    return s;
}

template <class Len>
BigMat RauzyPathT<Len>::cocycle_matrix(std::size_t i0, std::size_t i1) const {
    const int m = start.m;
    BigMat M = BigMat::identity(m);
    // left-multiplying by I + E_{l,w} adds row w to row l
    for (std::size_t k = i0; k < i1; ++k) {
        const auto& st = steps[k];
        for (int j = 0; j < m; ++j) M.at(st.loser - 1, j) += M.at(st.winner - 1, j);
    }
    return M;
}

Iet sample_iet(const Permutation& pi, std::uint64_t seed) {
    pi.validate();
    CounterRng rng(seed, 0x1e7u);
    std::vector<double> lam(std::size_t(pi.size()));
    for (double& l : lam) l = rng.next_exp();
    return Iet::from(pi, lam);
}

Permutation apply_move(const Permutation& pi, StepKind k) {
    const int m = pi.size();
    std::vector<int> p = pi.pi; // 0-based copy
    Permutation out;
    if (k == StepKind::a) {
        int kpos = 0;
        while (p[std::size_t(kpos)] != m) ++kpos;
        std::vector<int> q(p.begin(), p.end() - 1);
        q.insert(q.begin() + kpos + 1, p[std::size_t(m) - 1]);
        out.pi = std::move(q);
    } else {
        const int pm = p[std::size_t(m) - 1];
        auto q = std::vector<int>(std::size_t(m));
        for (int i = 0; i < m; ++i) {
            int v = p[std::size_t(i)];
            if (v <= pm)
                q[std::size_t(i)] = v;
            else if (v == m)
                q[std::size_t(i)] = pm + 1;
            else
                q[std::size_t(i)] = v + 1;
        }
        out.pi = std::move(q);
    }
    return out;
}

int RauzyClass::index_of(const Permutation& p) const {
    for (std::size_t i = 0; i < permutations.size(); ++i)
        if (permutations[i] == p) return int(i);
    return -1;
}

bool RauzyClass::strongly_connected() const {
    const std::size_t n = permutations.size();
    auto reach = [&](bool reversed) {
        std::vector<bool> vis(n, false);
        std::queue<int> q;
        q.push(0);
        vis[0] = true;
        while (!q.empty()) {
            int v = q.front();
            q.pop();
            for (std::size_t i = 0; i < n; ++i) {
                if (reversed) {
                    if (!vis[i] && (edges[i][0] == v || edges[i][1] == v)) {
                        vis[i] = true;
                        q.push(int(i));
                    }
                } else if (i == std::size_t(v)) {
                    for (int t : edges[i])
                        if (!vis[std::size_t(t)]) {
                            vis[std::size_t(t)] = true;
                            q.push(t);
                        }
                }
            }
        }
        return vis;
    };
    auto fwd = reach(false), bwd = reach(true);
    for (std::size_t i = 0; i < n; ++i)
        if (!fwd[i] || !bwd[i]) return false;
    return true;
}

std::vector<StepKind> RauzyClass::pure_cycle(int i, StepKind k) const {
    std::vector<StepKind> word;
    int v = i;
    for (std::size_t guard = 0; guard <= permutations.size(); ++guard) {
        v = edges[std::size_t(v)][k == StepKind::a ? 0 : 1];
        word.push_back(k);
        if (v == i) return word;
    }
    throw Error("pure_cycle: vertex not on its own cycle");
}

RauzyClass rauzy_class(const Permutation& pi) {
    pi.validate();
    RauzyClass cls;
    std::map<std::vector<int>, int> index;
    std::queue<int> work;
    cls.permutations.push_back(pi);
    index[pi.pi] = 0;
    work.push(0);
    while (!work.empty()) {
        int i = work.front();
        work.pop();
        if (int(cls.edges.size()) <= i) cls.edges.resize(std::size_t(i) + 1);
        Permutation cur = cls.permutations[std::size_t(i)];
        for (StepKind k : {StepKind::a, StepKind::b}) {
            Permutation nxt = apply_move(cur, k);
            if (!nxt.is_bijection() || !nxt.irreducible())
                throw Error("rauzy_class: move left the irreducible permutations");
            auto it = index.find(nxt.pi);
            int j;
            if (it == index.end()) {
                j = int(cls.permutations.size());
                index[nxt.pi] = j;
                cls.permutations.push_back(nxt);
                work.push(j);
            } else {
                j = it->second;
            }
            cls.edges[std::size_t(i)][k == StepKind::a ? 0 : 1] = j;
        }
    }
    return cls;
}

subst::Substitution abstract_step_substitution(const Permutation& pi, StepKind kind) {
    const int m = pi.size();
    const int k = pi.inverse(m); // domain position mapped to the last image slot
    subst::Substitution z;
    z.m = m;
    z.images.resize(std::size_t(m));
    if (kind == StepKind::a) {
        for (int p = 1; p <= m; ++p) {
            if (p <= k)
                z.images[std::size_t(p) - 1] = {std::uint8_t(p)};
            else if (p == k + 1)
                z.images[std::size_t(p) - 1] = {std::uint8_t(k), std::uint8_t(m)};
            else
                z.images[std::size_t(p) - 1] = {std::uint8_t(p - 1)};
        }
    } else {
        for (int p = 1; p <= m; ++p) {
            if (p == k)
                z.images[std::size_t(p) - 1] = {std::uint8_t(k), std::uint8_t(m)};
            else
                z.images[std::size_t(p) - 1] = {std::uint8_t(p)};
        }
    }
    return z;
}

subst::Substitution abstract_path_substitution(const Permutation& pi,
                                               const std::vector<StepKind>& word) {
    subst::Substitution acc = subst::Substitution::identity(pi.size());
    Permutation cur = pi;
    for (StepKind k : word) {
        acc = subst::compose(acc, abstract_step_substitution(cur, k));
        cur = apply_move(cur, k);
    }
    return acc;
}

template <class Len>
subst::Substitution path_substitution(const RauzyPathT<Len>& path) {
    subst::Substitution acc = subst::Substitution::identity(path.start.m);
    for (const auto& st : path.steps) acc = subst::compose(acc, st.substitution());
    return acc;
}

namespace {

template <class Len>
struct Tower {
    std::vector<Len> x;   // cumulative domain endpoints of the original exchange
    std::vector<Len> w;   // translation per domain position
    std::vector<int> lab; // original label per domain position
};

template <class Len>
Tower<Len> original_data(const IetT<Len>& T) {
    const int m = T.m;
    Tower<Len> t;
    auto lam = T.lambda_domain();
    Permutation pi = T.monodromy();
    t.x.resize(std::size_t(m) + 1);
    t.x[0] = Len(0);
    for (int p = 1; p <= m; ++p) t.x[std::size_t(p)] = t.x[std::size_t(p) - 1] + lam[std::size_t(p) - 1];
    t.w.resize(std::size_t(m));
    for (int p = 1; p <= m; ++p) {
        Len target(0);
        for (int i = 1; i <= m; ++i)
            if (pi(i) < pi(p)) target += lam[std::size_t(i) - 1];
        t.w[std::size_t(p) - 1] = target - t.x[std::size_t(p) - 1];
    }
    t.lab = T.top;
    return t;
}

template <class Len>
Len slack(const Len& scale) {
    if constexpr (std::is_same_v<Len, double>)
        return 1e-12 * std::max(1.0, scale);
    else
        return Len(0);
}

} // namespace

template <class Len>
subst::Substitution block_substitution(const IetT<Len>& T, const RauzyPathT<Len>& path) {
    if (path.steps.empty()) throw ConfigError("block_substitution: empty path");
    if (T.top != path.start.top || T.bottom != path.start.bottom)
        throw ConfigError("block_substitution: path does not start at the given exchange");
    const int m = T.m;

    // Replay the induction without normalization to get the exact induced
    // interval in original coordinates.
    std::vector<Len> len = T.len;
    for (const auto& st : path.steps)
        len[std::size_t(st.winner) - 1] -= len[std::size_t(st.loser) - 1];
    Len delta(0);
    for (const Len& l : len) delta += l;

    // Floor budget: total tower height.
    BigMat coc = path.cocycle_matrix();
    BigInt hsum = 0;
    for (int j = 0; j < m; ++j) hsum += coc.column_sum(j);
    if (hsum > 10'000'000) throw DegeneracyError("block_substitution: tower height exceeds budget");
    const long maxfloors = long(hsum.get_d()) + 4;

    Tower<Len> orig = original_data(T);
    const auto& top_fin = path.final_state.top;

    subst::Substitution z;
    z.m = m;
    z.images.resize(std::size_t(m));

    Len a(0);
    for (int i = 1; i <= m; ++i) {
        const int label = top_fin[std::size_t(i) - 1];
        Len b = a + len[std::size_t(label) - 1];
        Len lo = a, hi = b;
        subst::Word word;
        for (long floor = 0;; ++floor) {
            if (floor > maxfloors)
                throw DegeneracyError("block_substitution: floor iteration exceeded budget");
            if (floor > 0 && !(hi > delta + slack(delta))) break; // returned to J
            // Floor endpoints lie on discontinuity orbits, so classify by the
            // midpoint and only then check both endpoints against the cell.
            Len mid = (lo + hi) / 2;
            int p = m;
            for (int q = 1; q <= m; ++q)
                if (mid < orig.x[std::size_t(q)]) { p = q; break; }
            if (hi > orig.x[std::size_t(p)] + slack(orig.x[std::size_t(p)]) ||
                lo + slack(orig.x[std::size_t(p)]) < orig.x[std::size_t(p) - 1])
                throw DegeneracyError("block_substitution: floor " + std::to_string(floor) +
                                      " of tower " + std::to_string(i) +
                                      " straddles an original discontinuity");
            word.push_back(std::uint8_t(orig.lab[std::size_t(p) - 1]));
            lo += orig.w[std::size_t(p) - 1];
            hi += orig.w[std::size_t(p) - 1];
        }
        z.images[std::size_t(label) - 1] = std::move(word);
        a = b;
    }
    return z;
}

bool word_is_simple(const std::vector<StepKind>& w) {
    const std::size_t k = w.size();
    for (std::size_t len = 1; len < k; ++len) {
        bool eq = true;
        for (std::size_t i = 0; i < len && eq; ++i) eq = (w[k - len + i] == w[i]);
        if (eq) return false;
    }
    return true;
}

namespace {

// first-letter map of a substitution: letter -> first letter of its image
std::vector<int> first_letter_map(const subst::Substitution& z) {
    std::vector<int> f(std::size_t(z.m) + 1);
    for (int b = 1; b <= z.m; ++b) f[std::size_t(b)] = z.image(b).front();
    return f;
}

bool is_constant_map(const std::vector<int>& f, int m) {
    for (int b = 2; b <= m; ++b)
        if (f[std::size_t(b)] != f[1]) return false;
    return true;
}

} // namespace

SimpleLoop find_positive_simple_loop(const RauzyClass& cls, std::size_t max_len) {
    const int m = cls.permutations.front().size();
    if (m > 8) throw ConfigError("find_positive_simple_loop: supported up to 8 intervals");
    const int nv = int(cls.size());
    const std::uint64_t full = (m * m == 64) ? ~0ull : ((1ull << (m * m)) - 1);

    auto bool_mat = [&](const subst::Substitution& z) {
        std::uint64_t mask = 0;
        BigMat S = subst::matrix_of(z);
        for (int i = 0; i < m; ++i)
            for (int j = 0; j < m; ++j)
                if (S.at(i, j) > 0) mask |= 1ull << (i * m + j);
        return mask;
    };
    auto bool_mul = [&](std::uint64_t A, std::uint64_t B) {
        std::uint64_t C = 0;
        for (int i = 0; i < m; ++i)
            for (int k = 0; k < m; ++k)
                if (A & (1ull << (i * m + k)))
                    for (int j = 0; j < m; ++j)
                        if (B & (1ull << (k * m + j))) C |= 1ull << (i * m + j);
        return C;
    };

    std::uint64_t ident = 0;
    for (int i = 0; i < m; ++i) ident |= 1ull << (i * m + i);
    auto step_mask = std::vector<std::array<std::uint64_t, 2>>(std::size_t(nv));
    for (int v = 0; v < nv; ++v)
        for (int kk = 0; kk < 2; ++kk)
            step_mask[std::size_t(v)][std::size_t(kk)] = bool_mat(abstract_step_substitution(
                cls.permutations[std::size_t(v)], kk == 0 ? StepKind::a : StepKind::b));

    for (int base = 0; base < nv; ++base) {
        // shortest loop at `base` with an all-positive substitution matrix:
        // BFS over (vertex, positivity pattern) states, a-edges first
        struct Node {
            int vertex;
            std::uint64_t pattern;
            int parent; // index into `nodes`
            int kind;   // 0 = a, 1 = b
        };
        std::vector<Node> nodes;
        std::set<std::pair<int, std::uint64_t>> seen;
        std::queue<int> q;
        nodes.push_back({base, ident, -1, -1});
        seen.insert({base, ident});
        q.push(0);
        std::vector<StepKind> loop_word;
        bool found = false;
        while (!q.empty() && !found) {
            int ni = q.front();
            q.pop();
            for (int kk = 0; kk < 2 && !found; ++kk) {
                const Node nd = nodes[std::size_t(ni)];
                int nxt = cls.edges[std::size_t(nd.vertex)][std::size_t(kk)];
                std::uint64_t pat =
                    bool_mul(nd.pattern, step_mask[std::size_t(nd.vertex)][std::size_t(kk)]);
                if (!seen.insert({nxt, pat}).second) continue;
                nodes.push_back({nxt, pat, ni, kk});
                if (nxt == base && pat == full) {
                    std::vector<StepKind> rev;
                    for (int cur = int(nodes.size()) - 1; nodes[std::size_t(cur)].parent >= 0;
                         cur = nodes[std::size_t(cur)].parent)
                        rev.push_back(nodes[std::size_t(cur)].kind == 0 ? StepKind::a : StepKind::b);
                    loop_word.assign(rev.rbegin(), rev.rend());
                    found = true;
                } else {
                    q.push(int(nodes.size()) - 1);
                }
            }
        }
        if (!found) continue;

        const Permutation& bp = cls.permutations[std::size_t(base)];
        // power up until all images share a first letter
        subst::Substitution eta = abstract_path_substitution(bp, loop_word);
        std::vector<StepKind> w0 = loop_word;
        subst::Substitution zeta = eta;
        bool constant = false;
        for (int rep = 1; rep <= 3 * m; ++rep) {
            if (is_constant_map(first_letter_map(zeta), m)) {
                constant = true;
                break;
            }
            w0.insert(w0.end(), loop_word.begin(), loop_word.end());
            zeta = subst::compose(zeta, eta);
        }
        if (!constant) continue;

        // append pure cycles until the word is simple
        std::vector<StepKind> ca = cls.pure_cycle(base, StepKind::a);
        std::vector<StepKind> cb = cls.pure_cycle(base, StepKind::b);
        std::vector<std::vector<StepKind>> suffixes = {
            {}, ca, cb};
        auto cat = [](std::vector<StepKind> x, const std::vector<StepKind>& y) {
            x.insert(x.end(), y.begin(), y.end());
            return x;
        };
        suffixes.push_back(cat(ca, cb));
        suffixes.push_back(cat(cb, ca));
        suffixes.push_back(cat(ca, ca));
        suffixes.push_back(cat(cb, cb));
        suffixes.push_back(cat(cat(ca, ca), cb));
        suffixes.push_back(cat(cat(cb, cb), ca));
        suffixes.push_back(cat(cat(ca, cb), cb));
        suffixes.push_back(cat(cat(cb, ca), ca));
        for (const auto& suf : suffixes) {
            std::vector<StepKind> cand = cat(w0, suf);
            if (cand.size() > max_len || !word_is_simple(cand)) continue;
            subst::Substitution zc = abstract_path_substitution(bp, cand);
            if (!subst::matrix_of(zc).strictly_positive()) continue;
            auto f = first_letter_map(zc);
            if (!is_constant_map(f, m)) continue;
            SimpleLoop out;
            out.base = base;
            out.word = std::move(cand);
            out.zeta = std::move(zc);
            out.common_first_letter = f[1];
            return out;
        }
    }
    throw DegeneracyError("find_positive_simple_loop: search budget exceeded");
}

nlohmann::json to_json(const Iet& T) {
    nlohmann::json j;
    j["pi"] = T.monodromy().pi;
    j["lambda"] = T.lambda_domain();
    return j;
}

Iet iet_from_json(const nlohmann::json& j) {
    Permutation pi;
    pi.pi = j.at("pi").get<std::vector<int>>();
    auto lam = j.at("lambda").get<std::vector<double>>();
    return Iet::from(pi, lam);
}

// explicit instantiations
template struct IetT<double>;
template struct IetT<Rat>;
template struct RauzyPathT<double>;
template struct RauzyPathT<Rat>;
template StepResult<double> rauzy_step(const IetT<double>&);
template StepResult<Rat> rauzy_step(const IetT<Rat>&);
template RauzyPathT<double> rauzy_path(const IetT<double>&, std::size_t);
template RauzyPathT<Rat> rauzy_path(const IetT<Rat>&, std::size_t);
template subst::Substitution path_substitution(const RauzyPathT<double>&);
template subst::Substitution path_substitution(const RauzyPathT<Rat>&);
template subst::Substitution block_substitution(const IetT<double>&, const RauzyPathT<double>&);
template subst::Substitution block_substitution(const IetT<Rat>&, const RauzyPathT<Rat>&);

} // namespace rauzy::iet
