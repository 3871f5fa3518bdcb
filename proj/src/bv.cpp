#include "rauzy/bv.hpp"

#include <algorithm>
#include <nlohmann/json.hpp>

namespace rauzy::bv {

SeqStep SeqStep::of(subst::Substitution z) {
    z.validate();
    SeqStep s;
    s.mat = subst::matrix_of(z);
    s.chain = {std::move(z)};
    return s;
}

SeqStep SeqStep::of_chain(std::vector<subst::Substitution> chain) {
    if (chain.empty()) throw ConfigError("SeqStep: empty chain");
    SeqStep s;
    chain.front().validate();
    s.mat = subst::matrix_of(chain.front());
    for (std::size_t i = 1; i < chain.size(); ++i) {
        chain[i].validate();
        s.mat = s.mat * subst::matrix_of(chain[i]);
    }
    s.chain = std::move(chain);
    return s;
}

SubstitutionSequence::SubstitutionSequence(std::vector<subst::Substitution> steps,
                                           std::optional<CanonicalMarker> marker) {
    std::vector<SeqStep> ss;
    ss.reserve(steps.size());
    for (auto& z : steps) ss.push_back(SeqStep::of(std::move(z)));
    *this = from_chains(std::move(ss), std::move(marker));
}

SubstitutionSequence SubstitutionSequence::from_chains(std::vector<SeqStep> steps,
                                                       std::optional<CanonicalMarker> marker) {
    if (steps.empty()) throw ConfigError("SubstitutionSequence: no steps");
    SubstitutionSequence seq;
    seq.m_ = steps.front().chain.front().m;
    for (const auto& s : steps)
        for (const auto& z : s.chain)
            if (z.m != seq.m_) throw ConfigError("SubstitutionSequence: arity mismatch");
    seq.steps_ = std::make_shared<std::vector<SeqStep>>(std::move(steps));
    seq.marker_ = std::move(marker);
    seq.cache_ = std::make_shared<Cache>();
    seq.cache_->materialized.resize(seq.steps_->size());
    return seq;
}

const SeqStep& SubstitutionSequence::step(std::size_t k) const {
    if (k < 1 || k > size()) throw ConfigError("step index out of range");
    return (*steps_)[k - 1];
}

const BigMat& SubstitutionSequence::step_matrix(std::size_t k) const { return step(k).mat; }

const subst::Substitution& SubstitutionSequence::step_substitution(std::size_t k) const {
    const SeqStep& s = step(k);
    std::lock_guard<std::mutex> lock(cache_->mu);
    auto& slot = cache_->materialized[k - 1];
    if (!slot) {
        subst::Substitution z = s.chain.front();
        for (std::size_t i = 1; i < s.chain.size(); ++i) z = subst::compose(z, s.chain[i]);
        slot = std::move(z);
    }
    return *slot;
}

BigMat SubstitutionSequence::product(std::size_t n) const {
    if (n > size()) throw ConfigError("product: level beyond sequence length");
    std::lock_guard<std::mutex> lock(cache_->mu);
    auto& prefix = cache_->prefix;
    if (prefix.empty()) prefix.push_back(BigMat::identity(m_));
    while (prefix.size() <= n) prefix.push_back(prefix.back() * (*steps_)[prefix.size() - 1].mat);
    return prefix[n];
}

BigMat SubstitutionSequence::product(std::size_t n1, std::size_t n2) const {
    if (n1 < 1) throw ConfigError("product: n1 must be >= 1");
    if (n2 + 1 == n1) return BigMat::identity(m_); // empty range
    if (n2 < n1 || n2 > size()) throw ConfigError("product: bad range");
    BigMat out = step_matrix(n1);
    for (std::size_t k = n1 + 1; k <= n2; ++k) out = out * step_matrix(k);
    return out;
}

std::int64_t SubstitutionSequence::image_length(std::size_t k, int b) const {
    BigInt len = step(k).mat.column_sum(b - 1);
    if (len > BigInt(std::int64_t(1) << 62)) throw DegeneracyError("image_length overflows");
    return std::int64_t(len.get_d());
}

int SubstitutionSequence::image_letter(std::size_t k, int b, std::int64_t pos) const {
    if (pos < 0 || pos >= image_length(k, b))
        throw ConfigError("image_letter: position out of range");
    const auto& chain = step(k).chain;
    const std::size_t R = chain.size();
    // pref[i] = matrix of chain[0] o ... o chain[i-1]; its column sums are
    // the expansion lengths of single letters through the outer part
    std::vector<BigMat> pref(R + 1);
    pref[0] = BigMat::identity(m_);
    for (std::size_t i = 0; i < R; ++i) pref[i + 1] = pref[i] * subst::matrix_of(chain[i]);
    // the image of b is chain[0](chain[1](...chain[R-1](b)...)); descend from
    // the innermost letter, narrowing the position block by block
    int cur = b;
    std::int64_t offset = pos;
    for (std::size_t i = R; i-- > 0;) {
        const subst::Word& im = chain[i].image(cur);
        std::int64_t acc = 0;
        bool found = false;
        for (auto c : im) {
            std::int64_t bl = std::int64_t(pref[i].column_sum(int(c) - 1).get_d());
            if (offset < acc + bl) {
                cur = c;
                offset -= acc;
                found = true;
                break;
            }
            acc += bl;
        }
        if (!found) throw Error("image_letter: descent failed");
    }
    return cur;
}

std::vector<const subst::Substitution*> SubstitutionSequence::raw_view(std::size_t n1,
                                                                       std::size_t n2) const {
    std::vector<const subst::Substitution*> out;
    for (std::size_t k = n1; k <= n2; ++k)
        for (const auto& z : step(k).chain) out.push_back(&z);
    return out;
}

std::vector<BigInt> heights(const SubstitutionSequence& seq, std::size_t n) {
    BigMat P = seq.product(n);
    std::vector<BigInt> h(std::size_t(seq.arity()));
    for (int i = 0; i < seq.arity(); ++i) h[std::size_t(i)] = P.column_sum(i);
    return h;
}

namespace {

std::vector<std::vector<double>> normalized_columns(const BigMat& P) {
    const int m = P.rows();
    auto cols = std::vector<std::vector<double>>(std::size_t(m), std::vector<double>(std::size_t(m)));
    for (int j = 0; j < m; ++j) {
        BigInt s = P.column_sum(j);
        if (s == 0) throw DegeneracyError("invariant_measure: zero column in cone image");
        for (int i = 0; i < m; ++i) {
            Rat r(P.at(i, j), s);
            r.canonicalize();
            cols[std::size_t(j)][std::size_t(i)] = r.get_d();
        }
    }
    return cols;
}

double cone_gap(const BigMat& P) {
    auto cols = normalized_columns(P);
    double gap = 0;
    for (std::size_t a = 0; a < cols.size(); ++a)
        for (std::size_t b = a + 1; b < cols.size(); ++b) {
            double d = 0;
            for (std::size_t i = 0; i < cols.size(); ++i) d += std::fabs(cols[a][i] - cols[b][i]);
            gap = std::max(gap, d);
        }
    return gap;
}

std::vector<double> cone_direction(const BigMat& P) {
    auto cols = normalized_columns(P);
    const std::size_t m = cols.size();
    std::vector<double> dir(m, 0.0);
    for (const auto& c : cols)
        for (std::size_t i = 0; i < m; ++i) dir[i] += c[i] / double(m);
    return dir;
}

void normalize_l1_exact(std::vector<double>& v) {
    double s = 0;
    for (double x : v) s += x;
    for (double& x : v) x /= s;
    double partial = 0;
    for (std::size_t i = 0; i + 1 < v.size(); ++i) partial += v[i];
    v.back() = 1.0 - partial;
}

} // namespace

MeasureData invariant_measure(const SubstitutionSequence& seq, std::size_t depth, double gap_tol) {
    depth = std::min(depth, seq.size());
    std::size_t used = 0;
    double gap = 2.0;
    bool positive = false;
    for (std::size_t n = 1; n <= depth; ++n) {
        BigMat P = seq.product(n);
        if (P.strictly_positive()) {
            positive = true;
            used = n;
            gap = cone_gap(P);
            if (gap < gap_tol) break;
        }
    }
    if (!positive)
        throw DegeneracyError("invariant_measure: no strictly positive block within depth " +
                              std::to_string(depth));

    MeasureData md;
    md.convergence_gap = gap;
    md.z.push_back(cone_direction(seq.product(used)));
    normalize_l1_exact(md.z[0]);
    // deeper levels are reported only as long as their own cone is resolved:
    // the linkage z^{(l-1)} = S_l z^{(l)} must hold within the reported gap
    for (std::size_t l = 1; l < used; ++l) {
        BigMat tail = seq.product(l + 1, used);
        if (!tail.strictly_positive()) break;
        std::vector<double> dir = cone_direction(tail);
        const BigMat& S = seq.step_matrix(l);
        std::vector<double> img(std::size_t(seq.arity()), 0.0);
        for (int i = 0; i < seq.arity(); ++i)
            for (int j = 0; j < seq.arity(); ++j)
                img[std::size_t(i)] += S.at(i, j).get_d() * dir[std::size_t(j)];
        double mass_prev = 0, mass_img = 0;
        for (int i = 0; i < seq.arity(); ++i) {
            mass_prev += md.z[l - 1][std::size_t(i)];
            mass_img += img[std::size_t(i)];
        }
        double c = mass_prev / mass_img;
        double resid = 0;
        for (int i = 0; i < seq.arity(); ++i)
            resid += std::fabs(md.z[l - 1][std::size_t(i)] - c * img[std::size_t(i)]);
        if (resid > std::max(gap, 1e-15)) break;
        std::vector<double> zl(std::size_t(seq.arity()));
        for (int i = 0; i < seq.arity(); ++i) zl[std::size_t(i)] = c * dir[std::size_t(i)];
        md.z.push_back(std::move(zl));
    }
    md.depth_used = md.z.size() - 1;
    return md;
}

namespace {

// iterative expansion of letters through the flattened substitution list
// raw[0..R) (outermost first); appends to `out` until `limit` letters
struct Expander {
    const std::vector<const subst::Substitution*>& raw;
    subst::Word& out;
    std::size_t limit;

    bool expand(int letter) {
        struct Frame {
            std::size_t depth; // how many outer substitutions remain
            int letter;
            std::size_t next;
        };
        std::vector<Frame> stack;
        stack.push_back({raw.size(), letter, 0});
        while (!stack.empty()) {
            Frame& f = stack.back();
            if (f.depth == 0) {
                if (out.size() >= limit) return false;
                out.push_back(std::uint8_t(f.letter));
                stack.pop_back();
                continue;
            }
            // at depth d the innermost remaining substitution raw[d-1] splits
            // the letter; raw[0] (outermost) produces the leaves
            const subst::Word& im = raw[f.depth - 1]->image(f.letter);
            if (f.next >= im.size()) {
                stack.pop_back();
                continue;
            }
            if (out.size() >= limit) return false;
            int c = im[f.next++];
            stack.push_back({f.depth - 1, c, 0});
        }
        return true;
    }
};

} // namespace

subst::Word horizontal_word(const SubstitutionSequence& seq, int b, std::size_t n,
                            std::size_t window, std::size_t budget) {
    if (n > seq.size()) throw ConfigError("horizontal_word: level beyond sequence");
    if (b < 1 || b > seq.arity()) throw ConfigError("horizontal_word: letter out of range");
    std::size_t limit = window == 0 ? budget : std::min(window, budget);
    if (window == 0) {
        BigInt len = seq.product(n).column_sum(b - 1);
        if (len > long(budget))
            throw DegeneracyError("horizontal_word: materialization exceeds budget");
    }
    subst::Word out;
    auto raw = seq.raw_view(1, n);
    Expander ex{raw, out, limit};
    ex.expand(b);
    return out;
}

PathPrefix minimal_prefix(const SubstitutionSequence& seq, int b, std::size_t n) {
    if (n > seq.size()) throw ConfigError("minimal_prefix: level beyond sequence");
    PathPrefix p;
    p.vertices.assign(n + 1, 0);
    p.positions.assign(n, 0);
    p.vertices[n] = b;
    for (std::size_t k = n; k >= 1; --k)
        p.vertices[k - 1] = seq.image_letter(k, p.vertices[k], 0);
    return p;
}

void validate_prefix(const SubstitutionSequence& seq, const PathPrefix& p) {
    const std::size_t n = p.length();
    if (p.vertices.size() != n + 1) throw ConfigError("PathPrefix: vertex count mismatch");
    for (std::size_t k = 1; k <= n; ++k) {
        std::int64_t len = seq.image_length(k, p.vertices[k]);
        if (p.positions[k - 1] < 0 || p.positions[k - 1] >= len)
            throw ConfigError("PathPrefix: position out of range at level " + std::to_string(k));
        if (seq.image_letter(k, p.vertices[k], p.positions[k - 1]) != p.vertices[k - 1])
            throw ConfigError("PathPrefix: inconsistent vertex at level " + std::to_string(k));
    }
}

PathPrefix vershik_successor(const SubstitutionSequence& seq, const PathPrefix& p) {
    PathPrefix q = p;
    const std::size_t n = p.length();
    for (std::size_t k = 1; k <= n; ++k) {
        std::int64_t len = seq.image_length(k, q.vertices[k]);
        if (q.positions[k - 1] + 1 < len) {
            ++q.positions[k - 1];
            q.vertices[k - 1] = seq.image_letter(k, q.vertices[k], q.positions[k - 1]);
            for (std::size_t j = k - 1; j >= 1; --j) {
                q.positions[j - 1] = 0;
                q.vertices[j - 1] = seq.image_letter(j, q.vertices[j], 0);
            }
            return q;
        }
    }
    throw DegeneracyError("vershik_successor: path is maximal (carry overflow)");
}

std::vector<subst::Word> prefix_suffix_decomposition(const SubstitutionSequence& seq,
                                                     const PathPrefix& p) {
    std::vector<subst::Word> v(p.length());
    for (std::size_t k = 1; k <= p.length(); ++k) {
        std::int64_t len = seq.image_length(k, p.vertices[k]);
        subst::Word w;
        for (std::int64_t pos = p.positions[k - 1] + 1; pos < len; ++pos)
            w.push_back(std::uint8_t(seq.image_letter(k, p.vertices[k], pos)));
        v[k - 1] = std::move(w);
    }
    return v;
}

subst::Word forward_word(const SubstitutionSequence& seq, const PathPrefix& p, std::size_t count,
                         std::size_t budget) {
    std::size_t limit = count == 0 ? budget : std::min(count, budget);
    subst::Word out;
    out.push_back(std::uint8_t(p.vertices[0]));
    auto suffixes = prefix_suffix_decomposition(seq, p);
    for (std::size_t k = 1; k <= p.length() && out.size() < limit; ++k) {
        auto raw = seq.raw_view(1, k - 1);
        Expander ex{raw, out, limit};
        bool more = true;
        for (auto c : suffixes[k - 1]) {
            more = ex.expand(c);
            if (!more) break;
        }
    }
    if (count != 0 && out.size() < count)
        throw InsufficientDataError("forward_word: prefix too short for requested letters");
    return out;
}

SubstitutionSequence telescope_canonical(const SubstitutionSequence& raw,
                                         const subst::Substitution& q_block, std::size_t q_len,
                                         const std::vector<std::size_t>& boundaries) {
    if (boundaries.size() < 2)
        throw ConfigError("telescope_canonical: need at least two boundaries");
    for (std::size_t i = 0; i + 1 < boundaries.size(); ++i)
        if (boundaries[i + 1] < boundaries[i] + 2 * q_len)
            throw ConfigError("telescope_canonical: blocks must hold two disjoint marker copies");
    if (boundaries.back() > raw.size())
        throw ConfigError("telescope_canonical: boundary beyond sequence");

    auto compose_range = [&](std::size_t lo, std::size_t hi) {
        subst::Substitution z = subst::Substitution::identity(raw.arity());
        for (std::size_t k = lo; k < hi; ++k) z = subst::compose(z, raw.step_substitution(k + 1));
        return z;
    };

    std::vector<SeqStep> steps;
    for (std::size_t i = 0; i + 1 < boundaries.size(); ++i) {
        std::size_t lo = boundaries[i], hi = boundaries[i + 1];
        if (compose_range(lo, lo + q_len) != q_block || compose_range(hi - q_len, hi) != q_block)
            throw ConfigError("telescope_canonical: marker not found at block boundary " +
                              std::to_string(i));
        std::vector<subst::Substitution> chain;
        for (std::size_t k = lo; k < hi; ++k)
            for (const auto& z : raw.step(k + 1).chain) chain.push_back(z);
        steps.push_back(SeqStep::of_chain(std::move(chain)));
    }
    CanonicalMarker marker{q_block, q_len};
    return SubstitutionSequence::from_chains(std::move(steps), marker);
}

std::vector<double> level_roof(const SubstitutionSequence& seq, const std::vector<double>& s,
                               std::size_t l) {
    BigMat P = seq.product(l);
    std::vector<double> out(std::size_t(seq.arity()), 0.0);
    for (int j = 0; j < seq.arity(); ++j)
        for (int i = 0; i < seq.arity(); ++i)
            out[std::size_t(j)] += P.at(i, j).get_d() * s[std::size_t(i)];
    return out;
}

std::vector<Rat> level_roof(const SubstitutionSequence& seq, const std::vector<Rat>& s,
                            std::size_t l) {
    return seq.product(l).apply_transpose(s);
}

std::vector<Tile> suspension_itinerary(const SubstitutionSequence& seq, const PathPrefix& p,
                                       const std::vector<double>& s, double T,
                                       std::size_t budget) {
    double smin = *std::min_element(s.begin(), s.end());
    if (smin <= 0) throw ConfigError("suspension_itinerary: roof must be positive");
    std::size_t need = std::size_t(T / smin) + 2;
    if (need > budget)
        throw InsufficientDataError("suspension_itinerary: word budget exhausted before T");
    subst::Word w = forward_word(seq, p, 0, budget);
    std::vector<Tile> tiles;
    double t = 0;
    for (auto c : w) {
        if (t >= T) break;
        tiles.push_back({int(c), t, s[std::size_t(c) - 1]});
        t += s[std::size_t(c) - 1];
    }
    if (t < T)
        throw InsufficientDataError("suspension_itinerary: word budget exhausted before T");
    return tiles;
}

nlohmann::json to_json(const SubstitutionSequence& seq) {
    nlohmann::json j;
    std::vector<nlohmann::json> steps;
    for (std::size_t k = 1; k <= seq.size(); ++k) {
        std::vector<nlohmann::json> chain;
        for (const auto& z : seq.step(k).chain) chain.push_back(subst::to_json(z));
        steps.push_back(std::move(chain));
    }
    j["steps"] = steps;
    if (seq.canonical()) {
        j["canonical"] = {{"q", subst::to_json(seq.canonical()->q)},
                          {"q_chain_len", seq.canonical()->q_chain_len}};
    }
    return j;
}

SubstitutionSequence sequence_from_json(const nlohmann::json& j) {
    std::vector<SeqStep> steps;
    for (const auto& cj : j.at("steps")) {
        std::vector<subst::Substitution> chain;
        for (const auto& zj : cj) chain.push_back(subst::substitution_from_json(zj));
        steps.push_back(SeqStep::of_chain(std::move(chain)));
    }
    std::optional<CanonicalMarker> marker;
    if (j.contains("canonical"))
        marker = CanonicalMarker{subst::substitution_from_json(j.at("canonical").at("q")),
                                 j.at("canonical").at("q_chain_len").get<std::size_t>()};
    return SubstitutionSequence::from_chains(std::move(steps), std::move(marker));
}

} // namespace rauzy::bv
