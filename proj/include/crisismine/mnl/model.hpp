#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <fstream>
#include <limits>
#include <map>
#include <string>
#include <vector>

#include <json.hpp>

#include "crisismine/labels.hpp"
#include "crisismine/util/error.hpp"
#include "crisismine/util/rng.hpp"

namespace cm::mnl {

// Value 1 for alternative-specific constants; anything else looks up the
// observation's attribute map.
inline constexpr const char* kAscVariable = "asc";

struct UtilityTerm {
    std::string variable;
    std::vector<int> alternatives;  // alternatives sharing this parameter
    int parameter_id = -1;
};

struct UtilitySpec {
    std::vector<std::string> alternative_names;  // size M
    int reference = 0;
    std::vector<UtilityTerm> terms;
    int num_params = 0;

    int num_alternatives() const { return static_cast<int>(alternative_names.size()); }

    void validate() const {
        if (num_alternatives() < 2) throw ConfigError("need at least 2 alternatives");
        if (reference < 0 || reference >= num_alternatives())
            throw ConfigError("reference alternative index out of range");
        std::vector<bool> used(num_params, false);
        for (const auto& t : terms) {
            if (t.parameter_id < 0 || t.parameter_id >= num_params)
                throw ConfigError("term parameter_id out of range for variable " + t.variable);
            used[t.parameter_id] = true;
            if (t.alternatives.empty())
                throw ConfigError("term for " + t.variable + " applies to no alternative");
            for (int a : t.alternatives) {
                if (a < 0 || a >= num_alternatives())
                    throw ConfigError("term alternative index out of range");
                if (t.variable == kAscVariable && a == reference)
                    throw ConfigError("ASC on the reference alternative is not identified");
            }
        }
        for (int p = 0; p < num_params; ++p)
            if (!used[p])
                throw ConfigError("parameter " + std::to_string(p) +
                                  " is referenced by no term");
    }
};

struct ChoiceObservation {
    std::map<std::string, double> attrs;  // decision-maker attributes
    int chosen = 0;
};

struct MNLEstimate {
    std::vector<double> beta;
    std::vector<double> std_errors;
    std::vector<double> t_stats;
    double loglik = 0.0;
    double loglik_null = 0.0;
    double rho_squared = 0.0;
    bool converged = false;
    int iterations = 0;
};

struct EstimateSettings {
    int max_iter = 50;
    double tol = 1e-6;       // gradient infinity norm
    double ridge = 0.0;      // added to the information diagonal when solving
};

namespace detail {

inline double attr_value(const ChoiceObservation& obs, const std::string& var) {
    if (var == kAscVariable) return 1.0;
    auto it = obs.attrs.find(var);
    if (it == obs.attrs.end())
        throw DataError("observation is missing covariate: " + var);
    return it->second;
}

// term activation matrix X (M x P) for one observation
inline void activation(const UtilitySpec& spec, const ChoiceObservation& obs,
                       std::vector<double>& x) {
    int M = spec.num_alternatives();
    x.assign(static_cast<std::size_t>(M) * spec.num_params, 0.0);
    for (const auto& t : spec.terms) {
        double v = attr_value(obs, t.variable);
        if (v == 0.0) continue;
        for (int a : t.alternatives)
            x[static_cast<std::size_t>(a) * spec.num_params + t.parameter_id] += v;
    }
}

}  // namespace detail

// Eq-6 closed form with max-subtraction; strictly positive, sums to 1.
inline std::vector<double> probabilities(const UtilitySpec& spec,
                                         const std::vector<double>& beta,
                                         const ChoiceObservation& obs) {
    int M = spec.num_alternatives();
    std::vector<double> v(M, 0.0);
    for (const auto& t : spec.terms) {
        double x = detail::attr_value(obs, t.variable);
        if (x == 0.0) continue;
        double contrib = beta[t.parameter_id] * x;
        for (int a : t.alternatives) v[a] += contrib;
    }
    double mx = v[0];
    for (double u : v) {
        if (!std::isfinite(u)) throw NumericError("non-finite utility");
        mx = std::max(mx, u);
    }
    double z = 0.0;
    for (double& u : v) {
        u = std::exp(u - mx);
        z += u;
    }
    for (double& u : v) u /= z;
    return v;
}

inline double log_likelihood(const UtilitySpec& spec, const std::vector<double>& beta,
                             const std::vector<ChoiceObservation>& data) {
    if (data.empty()) throw DataError("empty estimation data");
    double ll = 0.0;
    for (std::size_t i = 0; i < data.size(); ++i) {
        std::vector<double> p = probabilities(spec, beta, data[i]);
        double pi = p[data[i].chosen];
        if (pi <= 0.0)
            throw NumericError("probability underflow at observation " + std::to_string(i));
        ll += std::log(pi);
    }
    return ll;
}

// Equal-shares null: N * ln(1/M).
inline double null_log_likelihood(std::size_t n, int m) {
    if (n < 1 || m < 2) throw ConfigError("null_log_likelihood needs N >= 1, M >= 2");
    return static_cast<double>(n) * std::log(1.0 / static_cast<double>(m));
}

inline double rho_squared(double loglik, double loglik_null) {
    if (!(loglik_null < 0.0)) throw ConfigError("null loglikelihood must be negative");
    if (loglik < loglik_null)
        throw NumericError("model loglikelihood is below the null; estimation is broken");
    return 1.0 - loglik / loglik_null;
}

// dLL/dbeta_p = sum_i sum_m (y_im - P_im) x_imp
inline std::vector<double> gradient(const UtilitySpec& spec, const std::vector<double>& beta,
                                    const std::vector<ChoiceObservation>& data) {
    std::vector<double> g(spec.num_params, 0.0);
    std::vector<double> x;
    int M = spec.num_alternatives();
    for (const auto& obs : data) {
        std::vector<double> p = probabilities(spec, beta, obs);
        detail::activation(spec, obs, x);
        for (int m = 0; m < M; ++m) {
            double w = (m == obs.chosen ? 1.0 : 0.0) - p[m];
            if (w == 0.0) continue;
            const double* xr = &x[static_cast<std::size_t>(m) * spec.num_params];
            for (int q = 0; q < spec.num_params; ++q) g[q] += w * xr[q];
        }
    }
    return g;
}

// Hessian of LL (negative semi-definite): -sum_i X' (diag(P) - P P') X
inline std::vector<double> hessian(const UtilitySpec& spec, const std::vector<double>& beta,
                                   const std::vector<ChoiceObservation>& data) {
    int P = spec.num_params;
    int M = spec.num_alternatives();
    std::vector<double> h(static_cast<std::size_t>(P) * P, 0.0);
    std::vector<double> x;
    std::vector<double> xbar(P);
    for (const auto& obs : data) {
        std::vector<double> p = probabilities(spec, beta, obs);
        detail::activation(spec, obs, x);
        std::fill(xbar.begin(), xbar.end(), 0.0);
        for (int m = 0; m < M; ++m) {
            const double* xr = &x[static_cast<std::size_t>(m) * P];
            for (int q = 0; q < P; ++q) xbar[q] += p[m] * xr[q];
        }
        for (int m = 0; m < M; ++m) {
            const double* xr = &x[static_cast<std::size_t>(m) * P];
            for (int a = 0; a < P; ++a) {
                double da = xr[a] - xbar[a];
                for (int b = 0; b < P; ++b)
                    h[static_cast<std::size_t>(a) * P + b] -= p[m] * da * (xr[b] - xbar[b]);
            }
        }
    }
    return h;
}

namespace detail {

// Cholesky solve of (A + ridge I) y = b for symmetric positive definite A.
// Returns false (and the offending column) on pivot breakdown.
struct CholResult {
    bool ok = true;
    int bad_column = -1;
    std::vector<double> chol;  // lower factor, row-major
};

inline CholResult cholesky(const std::vector<double>& a, int n, double ridge) {
    CholResult r;
    r.chol.assign(a.begin(), a.end());
    auto& L = r.chol;
    double max_diag = 0.0;
    for (int i = 0; i < n; ++i)
        max_diag = std::max(max_diag, std::abs(a[static_cast<std::size_t>(i) * n + i]));
    double floor_pivot = std::max(max_diag, 1.0) * 1e-12;
    for (int i = 0; i < n; ++i) {
        for (int j = 0; j <= i; ++j) {
            double s = L[static_cast<std::size_t>(i) * n + j];
            if (i == j) s += ridge;
            for (int k = 0; k < j; ++k)
                s -= L[static_cast<std::size_t>(i) * n + k] * L[static_cast<std::size_t>(j) * n + k];
            if (i == j) {
                if (s <= floor_pivot) {
                    r.ok = false;
                    r.bad_column = i;
                    return r;
                }
                L[static_cast<std::size_t>(i) * n + j] = std::sqrt(s);
            } else {
                L[static_cast<std::size_t>(i) * n + j] = s / L[static_cast<std::size_t>(j) * n + j];
            }
        }
    }
    return r;
}

inline std::vector<double> chol_solve(const std::vector<double>& L, int n,
                                      const std::vector<double>& b) {
    std::vector<double> y(n), x(n);
    for (int i = 0; i < n; ++i) {
        double s = b[i];
        for (int k = 0; k < i; ++k) s -= L[static_cast<std::size_t>(i) * n + k] * y[k];
        y[i] = s / L[static_cast<std::size_t>(i) * n + i];
    }
    for (int i = n - 1; i >= 0; --i) {
        double s = y[i];
        for (int k = i + 1; k < n; ++k) s -= L[static_cast<std::size_t>(k) * n + i] * x[k];
        x[i] = s / L[static_cast<std::size_t>(i) * n + i];
    }
    return x;
}

}  // namespace detail

// Newton-Raphson from beta0 = 0, step-halving on non-improvement, SEs from
// the inverse observed information.
inline MNLEstimate estimate(const UtilitySpec& spec,
                            const std::vector<ChoiceObservation>& data,
                            const EstimateSettings& settings = {}) {
    spec.validate();
    if (data.empty()) throw DataError("empty estimation data");
    for (const auto& obs : data)
        if (obs.chosen < 0 || obs.chosen >= spec.num_alternatives())
            throw DataError("chosen alternative index out of range");

    int P = spec.num_params;
    MNLEstimate est;
    est.beta.assign(P, 0.0);
    est.loglik_null = null_log_likelihood(data.size(), spec.num_alternatives());

    double ll = log_likelihood(spec, est.beta, data);
    bool converged = false;
    int iter = 0;
    int forced = 0;
    for (; iter < settings.max_iter; ++iter) {
        std::vector<double> g = gradient(spec, est.beta, data);
        double gmax = 0.0;
        for (double v : g) gmax = std::max(gmax, std::abs(v));
        if (gmax < settings.tol) {
            converged = true;
            break;
        }
        std::vector<double> h = hessian(spec, est.beta, data);
        // information = -H
        std::vector<double> info(h.size());
        for (std::size_t i = 0; i < h.size(); ++i) info[i] = -h[i];
        detail::CholResult chol = detail::cholesky(info, P, settings.ridge);
        if (!chol.ok) {
            std::string var = "?";
            int count = 0;
            for (const auto& t : spec.terms)
                if (t.parameter_id == chol.bad_column) {
                    var = t.variable;
                    ++count;
                }
            throw NumericError("identification failure: information matrix is rank "
                               "deficient at parameter column " +
                               std::to_string(chol.bad_column) + " (variable '" + var + "')");
        }
        std::vector<double> step = detail::chol_solve(chol.chol, P, g);
        double step_scale = 1.0;
        bool improved = false;
        for (int half = 0; half < 40; ++half) {
            std::vector<double> cand = est.beta;
            for (int q = 0; q < P; ++q) cand[q] += step_scale * step[q];
            double cand_ll;
            try {
                cand_ll = log_likelihood(spec, cand, data);
            } catch (const NumericError&) {
                step_scale *= 0.5;
                continue;
            }
            if (cand_ll > ll - 1e-14) {
                est.beta = std::move(cand);
                ll = cand_ll;
                improved = true;
                break;
            }
            step_scale *= 0.5;
        }
        if (!improved) {
            // the line search hit the rounding floor of the loglikelihood; if
            // the Newton decrement g'(-H)^{-1}g confirms the quadratic model
            // predicts only sub-floor gains, take the full step on trust so the
            // gradient criterion itself can be met on the next pass
            double decrement = 0.0;
            for (int q = 0; q < P; ++q) decrement += g[q] * step[q];
            if (0.5 * decrement >= 1e-9 * std::max(1.0, std::abs(ll)) || forced >= 3) break;
            ++forced;
            for (int q = 0; q < P; ++q) est.beta[q] += step[q];
            try {
                ll = log_likelihood(spec, est.beta, data);
            } catch (const NumericError&) {
                break;
            }
        }
    }
    est.iterations = iter;
    est.converged = converged;
    est.loglik = ll;
    est.rho_squared = rho_squared(est.loglik, est.loglik_null);

    // standard errors at the optimum: sqrt(diag(inv(-H)))
    std::vector<double> h = hessian(spec, est.beta, data);
    std::vector<double> info(h.size());
    for (std::size_t i = 0; i < h.size(); ++i) info[i] = -h[i];
    detail::CholResult chol = detail::cholesky(info, P, 0.0);
    est.std_errors.assign(P, std::numeric_limits<double>::quiet_NaN());
    est.t_stats.assign(P, std::numeric_limits<double>::quiet_NaN());
    if (chol.ok) {
        std::vector<double> e(P, 0.0);
        for (int q = 0; q < P; ++q) {
            std::fill(e.begin(), e.end(), 0.0);
            e[q] = 1.0;
            std::vector<double> col = detail::chol_solve(chol.chol, P, e);
            est.std_errors[q] = std::sqrt(std::max(col[q], 0.0));
            est.t_stats[q] = est.beta[q] / est.std_errors[q];
        }
    }
    return est;
}

// Oracle for estimate(): draws choices by inverse CDF on a seeded stream.
inline std::vector<ChoiceObservation> simulate(
    const UtilitySpec& spec, const std::vector<double>& beta,
    const std::vector<std::map<std::string, double>>& covariate_rows,
    std::uint64_t seed) {
    Rng rng(seed);
    std::vector<ChoiceObservation> out;
    out.reserve(covariate_rows.size());
    for (const auto& attrs : covariate_rows) {
        ChoiceObservation obs;
        obs.attrs = attrs;
        std::vector<double> p = probabilities(spec, beta, obs);
        double u = rng.uniform();
        double acc = 0.0;
        int chosen = spec.num_alternatives() - 1;
        for (int m = 0; m < spec.num_alternatives(); ++m) {
            acc += p[m];
            if (u < acc) {
                chosen = m;
                break;
            }
        }
        obs.chosen = chosen;
        out.push_back(std::move(obs));
    }
    return out;
}

inline UtilitySpec spec_from_json(const nlohmann::json& j) {
    UtilitySpec spec;
    spec.alternative_names = j.at("alternatives").get<std::vector<std::string>>();
    std::string ref = j.at("reference").get<std::string>();
    auto it = std::find(spec.alternative_names.begin(), spec.alternative_names.end(), ref);
    if (it == spec.alternative_names.end())
        throw ConfigError("reference alternative not in alternative list: " + ref);
    spec.reference = static_cast<int>(it - spec.alternative_names.begin());
    int max_param = -1;
    for (const auto& jt : j.at("terms")) {
        UtilityTerm t;
        t.variable = jt.at("variable").get<std::string>();
        for (const auto& an : jt.at("alternatives")) {
            std::string name = an.get<std::string>();
            auto ait = std::find(spec.alternative_names.begin(), spec.alternative_names.end(), name);
            if (ait == spec.alternative_names.end())
                throw ConfigError("term alternative not in alternative list: " + name);
            t.alternatives.push_back(static_cast<int>(ait - spec.alternative_names.begin()));
        }
        t.parameter_id = jt.at("parameter_id").get<int>();
        max_param = std::max(max_param, t.parameter_id);
        spec.terms.push_back(std::move(t));
    }
    spec.num_params = max_param + 1;
    spec.validate();
    return spec;
}

inline UtilitySpec load_spec(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw DataError("cannot open MNL spec: " + path);
    nlohmann::json j;
    try {
        in >> j;
    } catch (const std::exception& e) {
        throw DataError(std::string("invalid MNL spec JSON: ") + e.what());
    }
    return spec_from_json(j);
}

}  // namespace cm::mnl
