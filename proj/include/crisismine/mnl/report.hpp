#pragma once

#include <cstdio>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include "crisismine/mnl/model.hpp"
#include "crisismine/util/csv.hpp"

namespace cm::mnl {

struct ReportRow {
    std::string variable;
    std::string utility;  // alternative names, comma-joined when tied
    double estimate = 0.0;
    double t_stat = 0.0;
};

struct EstimationTable {
    std::size_t num_observations = 0;
    double loglik = 0.0;
    double loglik_null = 0.0;
    double rho_squared = 0.0;
    bool converged = true;
    std::vector<ReportRow> rows;
};

// Rows grouped by variable (ASCs first, then covariates in spec order),
// one row per parameter; tied alternatives share the row.
inline EstimationTable report_table(const MNLEstimate& est, const UtilitySpec& spec,
                                    std::size_t num_observations) {
    EstimationTable t;
    t.num_observations = num_observations;
    t.loglik = est.loglik;
    t.loglik_null = est.loglik_null;
    t.rho_squared = est.rho_squared;
    t.converged = est.converged;

    auto alt_list = [&](const UtilityTerm& term) {
        std::string s;
        for (std::size_t i = 0; i < term.alternatives.size(); ++i) {
            if (i) s += ", ";
            s += spec.alternative_names[term.alternatives[i]];
        }
        return s;
    };

    std::vector<bool> emitted(spec.num_params, false);
    auto emit_terms = [&](bool asc_pass) {
        for (const auto& term : spec.terms) {
            bool is_asc = term.variable == kAscVariable;
            if (is_asc != asc_pass || emitted[term.parameter_id]) continue;
            emitted[term.parameter_id] = true;
            ReportRow row;
            row.variable = is_asc ? "Alternative Specific Constant (ASC)" : term.variable;
            row.utility = alt_list(term);
            row.estimate = est.beta[term.parameter_id];
            row.t_stat = est.t_stats[term.parameter_id];
            t.rows.push_back(std::move(row));
        }
    };
    emit_terms(true);
    emit_terms(false);
    return t;
}

namespace detail {

inline std::string fmt(double v, int digits) {
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%.*f", digits, v);
    return buf;
}

}  // namespace detail

inline std::string table_csv(const EstimationTable& t) {
    std::string out;
    if (!t.converged) out += "NON-CONVERGED,,,\n";
    out += "Number of observations," + std::to_string(t.num_observations) + ",,\n";
    out += "Loglikelihood of estimated model," + detail::fmt(t.loglik, 3) + ",,\n";
    out += "Loglikelihood of null model," + detail::fmt(t.loglik_null, 3) + ",,\n";
    out += "Rho-squared against null model," + detail::fmt(t.rho_squared, 3) + ",,\n";
    out += "Variable,Utility,Parameter Estimate,t-stat\n";
    for (const auto& r : t.rows) {
        out += csv::quote(r.variable) + "," + csv::quote(r.utility) + "," +
               detail::fmt(r.estimate, 3) + "," + detail::fmt(r.t_stat, 3) + "\n";
    }
    return out;
}

inline std::string table_text(const EstimationTable& t) {
    std::ostringstream os;
    if (!t.converged) os << "*** NON-CONVERGED ***\n";
    os << "Number of observations            " << t.num_observations << "\n";
    os << "Loglikelihood of estimated model  " << detail::fmt(t.loglik, 3) << "\n";
    os << "Loglikelihood of null model       " << detail::fmt(t.loglik_null, 3) << "\n";
    os << "Rho-squared against null model    " << detail::fmt(t.rho_squared, 3) << "\n";
    os << "\n";
    std::size_t wv = 8, wu = 7;
    for (const auto& r : t.rows) {
        wv = std::max(wv, r.variable.size());
        wu = std::max(wu, r.utility.size());
    }
    auto pad = [](const std::string& s, std::size_t w) {
        return s + std::string(w - s.size() + 2, ' ');
    };
    os << pad("Variable", wv) << pad("Utility", wu) << "Estimate    t-stat\n";
    std::string prev;
    for (const auto& r : t.rows) {
        os << pad(r.variable == prev ? "" : r.variable, wv) << pad(r.utility, wu)
           << detail::fmt(r.estimate, 3) << "    " << detail::fmt(r.t_stat, 3) << "\n";
        prev = r.variable;
    }
    return os.str();
}

// Inverse of table_csv, to printed precision.
inline EstimationTable parse_table_csv(const std::string& text) {
    EstimationTable t;
    std::istringstream in(text);
    std::string line;
    bool in_body = false;
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        auto f = csv::split_line(line);
        if (f[0] == "NON-CONVERGED") { t.converged = false; continue; }
        if (f[0] == "Number of observations") { t.num_observations = std::stoull(f[1]); continue; }
        if (f[0] == "Loglikelihood of estimated model") { t.loglik = std::stod(f[1]); continue; }
        if (f[0] == "Loglikelihood of null model") { t.loglik_null = std::stod(f[1]); continue; }
        if (f[0] == "Rho-squared against null model") { t.rho_squared = std::stod(f[1]); continue; }
        if (f[0] == "Variable") { in_body = true; continue; }
        if (!in_body || f.size() < 4) throw DataError("malformed estimation table row: " + line);
        ReportRow r;
        r.variable = f[0];
        r.utility = f[1];
        r.estimate = std::stod(f[2]);
        r.t_stat = std::stod(f[3]);
        t.rows.push_back(std::move(r));
    }
    return t;
}

}  // namespace cm::mnl
