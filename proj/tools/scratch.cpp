#include <cstdio>
#include <map>
#include <string>
#include <vector>

#include "rauzy/iet.hpp"
#include "rauzy/rng.hpp"

using namespace rauzy;
using namespace rauzy::iet;

static int gr_rank(const subst::Substitution& z, const std::vector<subst::Word>& gr) {
    if (gr.empty()) return 0;
    BigMat P(z.m, int(gr.size()));
    for (int j = 0; j < int(gr.size()); ++j) {
        auto pop = subst::population_vector(gr[std::size_t(j)], z.m);
        for (int i = 0; i < z.m; ++i) P.at(i, j) = long(pop[std::size_t(i)]);
    }
    return rank_exact(P);
}

int main() {
    Permutation pi{{4, 3, 2, 1}};
    RauzyClass cls = rauzy_class(pi);

    // stream a long path, store kinds and vertex indices compactly
    const std::size_t n = 30000000;
    std::string kinds(n, '?');
    std::vector<std::uint8_t> vid(n + 1);
    {
        Iet cur = sample_iet(pi, 1);
        for (std::size_t s = 0; s < n; ++s) {
            vid[s] = std::uint8_t(cls.index_of(cur.monodromy()));
            auto r = rauzy_step(cur);
            cur = r.next;
            kinds[s] = char(r.step.kind);
        }
        vid[n] = std::uint8_t(cls.index_of(cur.monodromy()));
    }
    std::printf("path of %zu steps built\n", n);

    for (std::size_t L : {10, 11, 12, 13, 14}) {
        // count anchored qq windows
        std::map<std::string, std::size_t> counts; // key = vid + word
        for (std::size_t j = L; j + L <= n; ++j) {
            if (kinds.compare(j - L, L, kinds, j, L) != 0) continue;
            std::string key;
            key.push_back(char('0' + vid[j - L]));
            key += kinds.substr(j - L, L);
            ++counts[key];
        }
        std::vector<std::pair<std::size_t, std::string>> top;
        for (auto& [k, c] : counts) top.push_back({c, k});
        std::sort(top.rbegin(), top.rend());
        std::printf("== L=%zu: %zu distinct anchored qq patterns\n", L, top.size());
        int shown = 0;
        for (auto& [c, key] : top) {
            if (shown >= 6) break;
            int base = key[0] - '0';
            std::vector<StepKind> w;
            for (std::size_t i = 1; i < key.size(); ++i)
                w.push_back(key[i] == 'a' ? StepKind::a : StepKind::b);
            auto z = abstract_path_substitution(cls.permutations[std::size_t(base)], w);
            bool pos = subst::matrix_of(z).strictly_positive();
            int rk = 0;
            std::size_t grn = 0;
            if (pos) {
                std::size_t shortest = std::size_t(1e9);
                for (auto& im : z.images) shortest = std::min(shortest, im.size());
                auto gr = subst::good_return_words(z, shortest);
                grn = gr.size();
                rk = gr_rank(z, gr);
            }
            std::printf("  count=%zu base=%d w=%s pos=%d |GR|=%zu rank=%d simple=%d\n", c, base,
                        key.substr(1).c_str(), int(pos), grn, rk, int(word_is_simple(w)));
            ++shown;
        }
        // also best positive+rank4 candidate regardless of count ranking
        for (auto& [c, key] : top) {
            int base = key[0] - '0';
            std::vector<StepKind> w;
            for (std::size_t i = 1; i < key.size(); ++i)
                w.push_back(key[i] == 'a' ? StepKind::a : StepKind::b);
            auto z = abstract_path_substitution(cls.permutations[std::size_t(base)], w);
            if (!subst::matrix_of(z).strictly_positive()) continue;
            std::size_t shortest = std::size_t(1e9);
            for (auto& im : z.images) shortest = std::min(shortest, im.size());
            auto gr = subst::good_return_words(z, shortest);
            if (gr_rank(z, gr) == int(z.m)) {
                std::printf("  BEST rank-4: count=%zu base=%d w=%s simple=%d\n", c, base,
                            key.substr(1).c_str(), int(word_is_simple(w)));
                break;
            }
        }
    }
    return 0;
}
