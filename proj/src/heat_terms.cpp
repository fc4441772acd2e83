#include "qads/heat_terms.hpp"

#include <algorithm>
#include <mutex>
#include <stdexcept>
#include <tuple>

namespace qads {

namespace {

std::mutex g_cache_mutex;

using Key = std::tuple<int, int, int, int>;
Key key_of(const HeatTerm& t) {
    return {t.t_power, t.delta_power, t.inv_sinh_power, t.cosh_power};
}

// ---- dense power series over Rational in x = delta^2 ----

using Series = std::vector<Rational>;

Series ps_mul(const Series& a, const Series& b, size_t len) {
    Series r(len, Rational(0));
    for (size_t i = 0; i < a.size() && i < len; ++i) {
        if (a[i] == 0) continue;
        for (size_t j = 0; j < b.size() && i + j < len; ++j)
            r[i + j] += a[i] * b[j];
    }
    return r;
}

Series ps_recip(const Series& a, size_t len) {
    // a[0] != 0 required
    Series r(len, Rational(0));
    r[0] = Rational(1) / a[0];
    for (size_t k = 1; k < len; ++k) {
        Rational s(0);
        for (size_t j = 1; j <= k && j < a.size(); ++j) s += a[j] * r[k - j];
        r[k] = -s / a[0];
    }
    return r;
}

Series ps_pow(const Series& a, int k, size_t len) {
    Series base = a;
    if (k < 0) {
        base = ps_recip(a, len);
        k = -k;
    }
    Series r(len, Rational(0));
    r[0] = 1;
    while (k) {
        if (k & 1) r = ps_mul(r, base, len);
        base = ps_mul(base, base, len);
        k >>= 1;
    }
    return r;
}

Series sinh_over_delta_series(size_t len) {
    // sinh d / d = sum x^k / (2k+1)!,  x = d^2
    Series s(len, Rational(0));
    boost::multiprecision::cpp_int fact = 1;
    for (size_t k = 0; k < len; ++k) {
        if (k > 0) fact *= boost::multiprecision::cpp_int(2 * k) * (2 * k + 1);
        s[k] = Rational(1, fact);
    }
    return s;
}

Series cosh_series(size_t len) {
    Series s(len, Rational(0));
    boost::multiprecision::cpp_int fact = 1;
    for (size_t k = 0; k < len; ++k) {
        if (k > 0) fact *= boost::multiprecision::cpp_int(2 * k - 1) * (2 * k);
        s[k] = Rational(1, fact);
    }
    return s;
}

}  // namespace

HeatTermSum merge(HeatTermSum s) {
    std::sort(s.terms.begin(), s.terms.end(),
              [](const HeatTerm& x, const HeatTerm& y) { return key_of(x) < key_of(y); });
    std::vector<HeatTerm> out;
    for (auto& t : s.terms) {
        if (!out.empty() && key_of(out.back()) == key_of(t)) {
            out.back().coeff += t.coeff;
        } else {
            out.push_back(t);
        }
    }
    out.erase(std::remove_if(out.begin(), out.end(),
                             [](const HeatTerm& t) { return t.coeff == 0; }),
              out.end());
    s.terms = std::move(out);
    return s;
}

HeatTermSum derivative_with_gaussian(const HeatTermSum& s) {
    HeatTermSum r;
    for (const auto& t : s.terms) {
        if (t.delta_power != 0)
            r.terms.push_back({t.coeff * t.delta_power, t.t_power, t.delta_power - 1,
                               t.inv_sinh_power, t.cosh_power});
        if (t.inv_sinh_power != 0)
            r.terms.push_back({-t.coeff * t.inv_sinh_power, t.t_power, t.delta_power,
                               t.inv_sinh_power + 1, t.cosh_power + 1});
        if (t.cosh_power != 0)
            r.terms.push_back({t.coeff * t.cosh_power, t.t_power, t.delta_power,
                               t.inv_sinh_power - 1, t.cosh_power - 1});
        // chain rule through e^{-d^2/4t}
        r.terms.push_back({-t.coeff / 2, t.t_power + 1, t.delta_power + 1,
                           t.inv_sinh_power, t.cosh_power});
    }
    return merge(std::move(r));
}

HeatTermSum apply_descent(const HeatTermSum& s) {
    HeatTermSum d = derivative_with_gaussian(s);
    for (auto& t : d.terms) {
        t.coeff = -t.coeff;
        t.inv_sinh_power += 1;
    }
    return d;
}

HeatTermSum multiply_coth(const HeatTermSum& s) {
    HeatTermSum r = s;
    for (auto& t : r.terms) {
        t.inv_sinh_power += 1;
        t.cosh_power += 1;
    }
    return r;
}

HeatTermSum scale(const HeatTermSum& s, const Rational& c, int extra_tpow) {
    HeatTermSum r = s;
    for (auto& t : r.terms) {
        t.coeff *= c;
        t.t_power += extra_tpow;
    }
    return r;
}

HeatTermSum add(const HeatTermSum& x, const HeatTermSum& y) {
    HeatTermSum r = x;
    r.terms.insert(r.terms.end(), y.terms.begin(), y.terms.end());
    return merge(std::move(r));
}

const HeatTermSum& q_termsum(int d) {
    if (d < 3 || d % 2 == 0)
        throw std::domain_error("q_termsum: dimension must be odd and >= 3");
    static std::map<int, HeatTermSum> cache;
    std::lock_guard<std::mutex> lk(g_cache_mutex);
    auto it = cache.find(d);
    if (it != cache.end()) return it->second;
    HeatTermSum s;
    s.terms.push_back({Rational(1), 0, 0, 0, 0});
    for (int k = 0; k < (d - 1) / 2; ++k) s = apply_descent(s);
    s.dimension = d;
    return cache.emplace(d, std::move(s)).first->second;
}

const HeatTermSum& q_dt_termsum(int d) {
    static std::map<int, HeatTermSum> cache;
    const HeatTermSum& T = q_termsum(d);
    std::lock_guard<std::mutex> lk(g_cache_mutex);
    auto it = cache.find(d);
    if (it != cache.end()) return it->second;
    int nu = (d - 1) / 2;
    // (d_t q)/(P G) = (d_t log P) T + d_t T + T d^2/(4 t^2)
    HeatTermSum r = scale(T, Rational(-nu) * nu, 0);
    r = add(r, scale(T, Rational(-1, 2), 1));
    HeatTermSum dt;
    for (const auto& t : T.terms) {
        if (t.t_power != 0)
            dt.terms.push_back({-t.coeff * t.t_power, t.t_power + 1, t.delta_power,
                                t.inv_sinh_power, t.cosh_power});
        dt.terms.push_back({t.coeff / 4, t.t_power + 2, t.delta_power + 2,
                            t.inv_sinh_power, t.cosh_power});
    }
    r = add(r, merge(std::move(dt)));
    r.dimension = d;
    return cache.emplace(d, std::move(r)).first->second;
}

const HeatTermSum& q_lap_termsum(int d) {
    static std::map<int, HeatTermSum> cache;
    const HeatTermSum& T = q_termsum(d);
    std::lock_guard<std::mutex> lk(g_cache_mutex);
    auto it = cache.find(d);
    if (it != cache.end()) return it->second;
    HeatTermSum d1 = derivative_with_gaussian(T);
    HeatTermSum d2 = derivative_with_gaussian(d1);
    HeatTermSum r = add(d2, scale(multiply_coth(d1), Rational(d - 1), 0));
    r.dimension = d;
    return cache.emplace(d, std::move(r)).first->second;
}

const HeatTermSum& q_ddelta_termsum(int d) {
    static std::map<int, HeatTermSum> cache;
    const HeatTermSum& T = q_termsum(d);
    std::lock_guard<std::mutex> lk(g_cache_mutex);
    auto it = cache.find(d);
    if (it != cache.end()) return it->second;
    HeatTermSum r = derivative_with_gaussian(T);
    r.dimension = d;
    return cache.emplace(d, std::move(r)).first->second;
}

bool heat_defect_is_zero(int d) {
    HeatTermSum diff = add(q_dt_termsum(d), scale(q_lap_termsum(d), Rational(-1), 0));
    return diff.terms.empty();
}

DeltaSeries expand_small_delta(const HeatTermSum& s, int max_delta_pow) {
    DeltaSeries out;
    out.max_delta_pow = max_delta_pow;
    int minp = 0;
    for (const auto& t : s.terms)
        minp = std::min(minp, t.delta_power - t.inv_sinh_power);
    out.min_delta_pow = minp;
    size_t len = static_cast<size_t>((max_delta_pow - minp) / 2 + 2);
    Series S = sinh_over_delta_series(len);
    Series C = cosh_series(len);
    for (const auto& t : s.terms) {
        // d^a sinh^{-b} cosh^c = d^{a-b} (sinh d/d)^{-b} cosh^c
        Series e = ps_mul(ps_pow(S, -t.inv_sinh_power, len), ps_pow(C, t.cosh_power, len), len);
        int base = t.delta_power - t.inv_sinh_power;
        for (size_t q = 0; q < len; ++q) {
            if (e[q] == 0) continue;
            int j = base + 2 * static_cast<int>(q);
            if (j > max_delta_pow) break;
            out.c[{t.t_power, j}] += t.coeff * e[q];
        }
    }
    for (auto it = out.c.begin(); it != out.c.end();)
        it = (it->second == 0) ? out.c.erase(it) : std::next(it);
    return out;
}

const std::vector<OriginResidueTerm>& origin_residue_terms(int d) {
    static std::map<int, std::vector<OriginResidueTerm>> cache;
    const HeatTermSum& T = q_termsum(d);
    std::lock_guard<std::mutex> lk(g_cache_mutex);
    auto it = cache.find(d);
    if (it != cache.end()) return it->second;
    std::vector<OriginResidueTerm> v;
    for (const auto& t : T.terms) {
        if (t.inv_sinh_power < 2) continue;  // f-term sinh^{1-b}: analytic, no pole
        OriginResidueTerm rt;
        rt.coeff = t.coeff;
        rt.t_power = t.t_power;
        rt.a = t.delta_power;
        rt.b = t.inv_sinh_power;
        rt.c = t.cosh_power;
        size_t qmax = static_cast<size_t>((rt.b - 2) / 2);
        size_t len = qmax + 1;
        Series S = sinh_over_delta_series(len);
        Series C = cosh_series(len);
        Series Q = ps_mul(ps_pow(S, 1 - rt.b, len), ps_pow(C, rt.c, len), len);
        rt.Q.assign(Q.begin(), Q.end());
        v.push_back(std::move(rt));
    }
    return cache.emplace(d, std::move(v)).first->second;
}

}  // namespace qads
