#pragma once

// shared generators for the test suites

#include <map>

#include "rauzy/bv.hpp"
#include "rauzy/iet.hpp"
#include "rauzy/rng.hpp"
#include "rauzy/subst.hpp"

namespace testutil {

using rauzy::CounterRng;
using rauzy::subst::Substitution;
using rauzy::subst::Word;

inline Substitution fib() {
    Substitution z;
    z.m = 2;
    z.images = {rauzy::subst::word_from_string("12"), rauzy::subst::word_from_string("1")};
    return z;
}

inline std::vector<double> random_roof(CounterRng& rng, int m) {
    auto s = std::vector<double>(std::size_t(m));
    double total = 0;
    for (auto& x : s) {
        x = 0.2 + rng.next_unit();
        total += x;
    }
    for (auto& x : s) x /= total;
    return s;
}

inline Substitution random_subst(CounterRng& rng, int m, int max_image_len) {
    Substitution z;
    z.m = m;
    z.images.resize(std::size_t(m));
    for (int b = 0; b < m; ++b) {
        int len = int(rng.next_below(std::uint64_t(max_image_len))) + 1;
        Word w;
        for (int i = 0; i < len; ++i)
            w.push_back(std::uint8_t(rng.next_below(std::uint64_t(m)) + 1));
        z.images[std::size_t(b)] = w;
    }
    for (int a = 1; a <= m; ++a) {
        bool found = false;
        for (const auto& w : z.images)
            for (auto c : w)
                if (c == a) found = true;
        if (!found) z.images[rng.next_below(std::uint64_t(m))].push_back(std::uint8_t(a));
    }
    return z;
}

// product of elementary moves (one letter absorbs another), so the matrix
// is unimodular and the step is invertible
inline Substitution random_unimodular_subst(CounterRng& rng, int m, int moves) {
    Substitution z = Substitution::identity(m);
    for (int i = 0; i < moves; ++i) {
        int w = 1 + int(rng.next_below(std::uint64_t(m)));
        int l = 1 + int(rng.next_below(std::uint64_t(m)));
        if (w == l) continue;
        Substitution e = Substitution::identity(m);
        if (rng.next_below(2))
            e.images[std::size_t(l) - 1] = {std::uint8_t(w), std::uint8_t(l)};
        else
            e.images[std::size_t(l) - 1] = {std::uint8_t(l), std::uint8_t(w)};
        z = rauzy::subst::compose(z, e);
    }
    return z;
}

// loop substitution of the renewal class: strictly positive matrix, all
// images sharing a first letter, unimodular (so cocycle steps invert)
inline const Substitution& loop_base(int m) {
    static std::map<int, Substitution> cache;
    auto it = cache.find(m);
    if (it == cache.end()) {
        std::vector<int> rev;
        for (int i = m; i >= 1; --i) rev.push_back(i);
        auto cls = rauzy::iet::rauzy_class(rauzy::iet::Permutation{rev});
        auto loop = rauzy::iet::find_positive_simple_loop(cls);
        it = cache.emplace(m, loop.zeta).first;
    }
    return it->second;
}

// positive substitution with a common first letter and determinant +-1;
// its images are good return words of its cube
inline Substitution random_tower_base(CounterRng& rng, int m) {
    return rauzy::subst::compose(loop_base(m), random_unimodular_subst(rng, m, 3));
}

struct CanonicalInstance {
    rauzy::bv::SubstitutionSequence seq;
    Substitution eta;
    std::vector<Word> returns;
};

inline CanonicalInstance random_canonical(CounterRng& rng, int m, std::size_t levels) {
    Substitution eta = random_tower_base(rng, m);
    Substitution zeta = rauzy::subst::compose(rauzy::subst::compose(eta, eta), eta);
    std::vector<rauzy::bv::SeqStep> steps;
    for (std::size_t n = 0; n < levels; ++n) {
        std::vector<Substitution> chain = {eta, eta, eta,
                                           random_unimodular_subst(rng, m, 2 + int(rng.next_below(3))),
                                           eta, eta, eta};
        steps.push_back(rauzy::bv::SeqStep::of_chain(std::move(chain)));
    }
    rauzy::bv::CanonicalMarker mk{zeta, 3};
    std::vector<Word> rets;
    for (int j = 1; j <= m; ++j) rets.push_back(eta.image(j));
    return {rauzy::bv::SubstitutionSequence::from_chains(std::move(steps), mk), eta, rets};
}

} // namespace testutil
