#include "rauzy/subst.hpp"

#include <algorithm>
#include <set>
#include <sstream>

#include <nlohmann/json.hpp>

namespace rauzy::subst {

Word word_from_string(const std::string& s, int m) {
    Word w;
    if (m <= 9) {
        for (char c : s) {
            if (c < '1' || c > '9') throw ConfigError("word letter out of range: " + s);
            w.push_back(std::uint8_t(c - '0'));
        }
    } else {
        std::stringstream ss(s);
        std::string tok;
        while (std::getline(ss, tok, ',')) {
            int v = std::stoi(tok);
            if (v < 1 || v > 255) throw ConfigError("word letter out of range: " + tok);
            w.push_back(std::uint8_t(v));
        }
    }
    return w;
}

std::string word_to_string(const Word& w, int m) {
    std::string out;
    for (std::size_t i = 0; i < w.size(); ++i) {
        if (m <= 9) {
            out.push_back(char('0' + w[i]));
        } else {
            if (i) out.push_back(',');
            out += std::to_string(int(w[i]));
        }
    }
    return out;
}

void Substitution::validate() const {
    if (m < 2) throw ConfigError("substitution arity must be at least 2");
    if (int(images.size()) != m) throw ConfigError("substitution needs one image per letter");
    for (const auto& w : images) {
        if (w.empty()) throw ConfigError("substitution image must be nonempty");
        for (auto c : w)
            if (c < 1 || int(c) > m) throw ConfigError("substitution image letter out of range");
    }
}

Substitution Substitution::identity(int m) {
    Substitution z;
    z.m = m;
    z.images.resize(m);
    for (int b = 1; b <= m; ++b) z.images[b - 1] = Word{std::uint8_t(b)};
    return z;
}

BigMat matrix_of(const Substitution& z) {
    BigMat S(z.m, z.m);
    for (int b = 1; b <= z.m; ++b)
        for (auto a : z.image(b)) S.at(a - 1, b - 1) += 1;
    return S;
}

Substitution compose(const Substitution& outer, const Substitution& inner,
                     std::size_t budget) {
    if (outer.m != inner.m) throw ConfigError("compose: arity mismatch");
    Substitution out;
    out.m = outer.m;
    out.images.resize(out.m);
    std::size_t total = 0;
    for (int b = 1; b <= out.m; ++b) {
        Word& w = out.images[b - 1];
        std::size_t len = 0;
        for (auto c : inner.image(b)) len += outer.image(c).size();
        total += len;
        if (len > budget || total > budget)
            throw DegeneracyError("compose: image materialization exceeds budget");
        w.reserve(len);
        for (auto c : inner.image(b)) {
            const Word& oc = outer.image(c);
            w.insert(w.end(), oc.begin(), oc.end());
        }
    }
    return out;
}

std::vector<std::int64_t> population_vector(const Word& v, int m) {
    std::vector<std::int64_t> out(m, 0);
    for (auto c : v) {
        if (c < 1 || int(c) > m) throw ConfigError("population_vector: letter out of range");
        ++out[c - 1];
    }
    return out;
}

double tiling_length(const Word& v, const std::vector<double>& s) {
    double total = 0;
    for (auto c : v) total += s.at(std::size_t(c) - 1);
    return total;
}

Rat tiling_length(const Word& v, const std::vector<Rat>& s) {
    Rat total = 0;
    for (auto c : v) total += s.at(std::size_t(c) - 1);
    return total;
}

bool occurs(const Word& haystack, const Word& needle) {
    return std::search(haystack.begin(), haystack.end(), needle.begin(), needle.end()) !=
           haystack.end();
}

std::size_t default_return_length(const Substitution& z) {
    std::size_t best = 0;
    for (const auto& w : z.images) best = std::max(best, w.size());
    return best;
}

std::vector<Word> good_return_words(const Substitution& z, std::size_t max_len) {
    if (max_len < 1) throw ConfigError("good_return_words: max_len must be >= 1");
    z.validate();
    // Any good return word v is a factor of every image (vc occurs in each),
    // so candidates can be collected from the shortest image alone.
    std::size_t shortest = 0;
    for (int b = 2; b <= z.m; ++b)
        if (z.image(b).size() < z.image(shortest + 1).size()) shortest = std::size_t(b - 1);
    const Word& base = z.images[shortest];
    std::set<Word> cand;
    for (std::size_t i = 0; i < base.size(); ++i)
        for (std::size_t len = 1; len <= max_len && i + len <= base.size(); ++len)
            cand.insert(Word(base.begin() + i, base.begin() + i + len));
    std::vector<Word> out;
    for (const auto& v : cand) {
        Word vc = v;
        vc.push_back(v.front());
        bool ok = true;
        for (int b = 1; b <= z.m && ok; ++b) ok = occurs(z.image(b), vc);
        if (ok) out.push_back(v);
    }
    std::sort(out.begin(), out.end(), [](const Word& a, const Word& b) {
        if (a.size() != b.size()) return a.size() < b.size();
        return a < b;
    });
    return out;
}

std::optional<std::vector<Word>> select_return_basis(const Substitution& z,
                                                     std::size_t max_len) {
    auto cands = good_return_words(z, max_len);
    const int m = z.m;
    std::vector<Word> chosen;
    std::vector<std::vector<Rat>> echelon; // reduced rows of population vectors
    for (const auto& v : cands) {
        auto pop = population_vector(v, m);
        std::vector<Rat> row(m);
        for (int j = 0; j < m; ++j) row[j] = Rat(long(pop[j]));
        for (const auto& e : echelon) {
            int lead = -1;
            for (int j = 0; j < m; ++j)
                if (e[j] != 0) { lead = j; break; }
            if (lead >= 0 && row[lead] != 0) {
                Rat f = row[lead] / e[lead];
                for (int j = 0; j < m; ++j) row[j] -= f * e[j];
            }
        }
        bool zero = std::all_of(row.begin(), row.end(), [](const Rat& x) { return x == 0; });
        if (!zero) {
            echelon.push_back(row);
            chosen.push_back(v);
            if (int(chosen.size()) == m) break;
        }
    }
    if (int(chosen.size()) != m) return std::nullopt;
    // Postcondition: exact integer determinant of the population matrix is nonzero.
    BigMat P(m, m);
    for (int j = 0; j < m; ++j) {
        auto pop = population_vector(chosen[j], m);
        for (int i = 0; i < m; ++i) P.at(i, j) = long(pop[i]);
    }
    if (det_exact(P) == 0) throw Error("select_return_basis: internal rank check failed");
    return chosen;
}

DecayConstants decay_constants(const BigMat& Q) {
    if (!Q.strictly_positive()) throw ConfigError("decay_constants: matrix must be strictly positive");
    const int m = Q.rows();
    // col(Q^t): columns of Q^t are rows of Q.
    double col = 0;
    for (int i = 0; i < m; ++i) {
        double mx = 0, mn = 0;
        for (int j = 0; j < m; ++j) {
            double v = Q.at(i, j).get_d();
            if (j == 0 || v > mx) mx = v;
            if (j == 0 || v < mn) mn = v;
        }
        col = std::max(col, mx / mn);
    }
    double qmax = Q.max_entry().get_d();
    double c1 = 1.0 / (2.0 * m * qmax * col);
    return {col, c1};
}

nlohmann::json to_json(const Substitution& z) {
    nlohmann::json j;
    j["m"] = z.m;
    std::vector<std::string> im;
    for (const auto& w : z.images) im.push_back(word_to_string(w, z.m));
    j["images"] = im;
    return j;
}

Substitution substitution_from_json(const nlohmann::json& j) {
    Substitution z;
    z.m = j.at("m").get<int>();
    for (const auto& s : j.at("images"))
        z.images.push_back(word_from_string(s.get<std::string>(), z.m));
    z.validate();
    return z;
}

} // namespace rauzy::subst
