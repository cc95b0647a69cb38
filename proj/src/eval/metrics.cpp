#include "lfi/eval/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <map>
#include <numeric>
#include <set>
#include <sstream>

namespace lfi::eval {

density::GmmModel approx_density_from_samples(const Mat& samples, std::uint64_t seed) {
    require(samples.rows() >= 200, "approx_density_from_samples: need at least 200 samples");
    return density::gmm_fit_em(samples, 8, seed);
}

double posterior_sample_jsd(const Mat& posterior_samples, const TruthPosterior& truth,
                            std::uint64_t seed, GridJsdResult* detail) {
    const density::GmmModel gmm = approx_density_from_samples(posterior_samples, seed);
    const Vec log_q =
        eval_on_grid([&gmm](const Vec& th) { return gmm.log_density(th); }, truth.grid);
    const GridJsdResult r = grid_jsd_values(truth.grid_log_density, log_q, truth.grid);
    if (detail) *detail = r;
    return r.value;
}

namespace {

Vec average_rank(const Vec& v) {
    const Eigen::Index n = v.size();
    std::vector<Eigen::Index> idx(static_cast<std::size_t>(n));
    std::iota(idx.begin(), idx.end(), Eigen::Index{0});
    std::sort(idx.begin(), idx.end(),
              [&v](Eigen::Index a, Eigen::Index b) { return v[a] < v[b]; });
    Vec ranks(n);
    Eigen::Index i = 0;
    while (i < n) {
        Eigen::Index j = i;
        while (j + 1 < n && v[idx[static_cast<std::size_t>(j + 1)]] ==
                                v[idx[static_cast<std::size_t>(i)]])
            ++j;
        const double r = 0.5 * (i + j) + 1.0;  // average of ranks i+1 .. j+1
        for (Eigen::Index t = i; t <= j; ++t) ranks[idx[static_cast<std::size_t>(t)]] = r;
        i = j + 1;
    }
    return ranks;
}

double pearson(const Vec& a, const Vec& b) {
    const double ma = a.mean(), mb = b.mean();
    const Vec da = a.array() - ma, db = b.array() - mb;
    const double denom = std::sqrt(da.squaredNorm() * db.squaredNorm());
    if (!(denom > 0.0))
        throw NumericalError("spearman_rho: a statistic is constant over the probe set");
    return da.dot(db) / denom;
}

}  // namespace

double spearman_rho(const Vec& a, const Vec& b) {
    require(a.size() == b.size() && a.size() >= 3, "spearman_rho: need matched series, n >= 3");
    return pearson(average_rank(a), average_rank(b));
}

SufficiencyProbe sufficiency_monotonicity(const std::function<Vec(const Vec&)>& statistic,
                                          const sim::ModelSpec& spec, int n_probe,
                                          std::uint64_t seed) {
    require(static_cast<bool>(spec.known_sufficient_statistic),
            "sufficiency_monotonicity: model lacks a known sufficient statistic");
    require(n_probe >= 500, "sufficiency_monotonicity: need at least 500 probe draws");

    Vec s_star(n_probe), s_learned(n_probe);
    bool multi = false;
    Rng prior_rng = make_rng(seed, stream::proposal);
    for (int i = 0; i < n_probe; ++i) {
        const Vec theta = spec.prior.sample(prior_rng);
        const Vec x = spec.simulate(theta, mix_seed(seed, stream::simulate,
                                                    static_cast<std::uint64_t>(i)));
        s_star[i] = spec.known_sufficient_statistic(x);
        const Vec s = statistic(x);
        require(s.size() >= 1, "sufficiency_monotonicity: statistic returned nothing");
        if (s.size() > 1) multi = true;
        s_learned[i] = s[0];
    }

    SufficiencyProbe probe;
    probe.spearman = spearman_rho(s_star, s_learned);
    probe.first_coord_only = multi;
    probe.scatter.resize(n_probe, 2);
    probe.scatter.col(0) = s_star;
    probe.scatter.col(1) = s_learned;
    return probe;
}

std::string scatter_csv(const Mat& scatter) {
    require(scatter.cols() == 2, "scatter_csv: expected two columns");
    std::ostringstream out;
    out << "s_star,s_learned\n";
    for (Eigen::Index i = 0; i < scatter.rows(); ++i)
        out << format_double(scatter(i, 0)) << ',' << format_double(scatter(i, 1)) << '\n';
    return out.str();
}

// --- run aggregation ------------------------------------------------------

std::vector<CellSummary> aggregate_runs(const std::vector<RunRecord>& records) {
    require(!records.empty(), "aggregate_runs: no records");

    using CellKey = std::pair<std::string, std::string>;  // (model, method)
    std::map<CellKey, std::map<std::uint64_t, std::map<int, const RunRecord*>>> byCell;
    for (const auto& r : records) {
        auto& seeds = byCell[{r.model, r.method}];
        auto [it, fresh] = seeds[r.run_seed].try_emplace(r.round, &r);
        require(fresh, "aggregate_runs: duplicate record for " + r.model + "/" + r.method +
                           " seed " + std::to_string(r.run_seed) + " round " +
                           std::to_string(r.round));
    }

    std::vector<CellSummary> cells;
    for (const auto& [key, seeds] : byCell) {
        // every seed must cover the same round set
        const auto& first_rounds = seeds.begin()->second;
        for (const auto& [seed, rounds] : seeds) {
            require(rounds.size() == first_rounds.size(),
                    "aggregate_runs: mismatched round counts in " + key.first + "/" +
                        key.second);
            for (const auto& [round, rec] : first_rounds)
                require(rounds.count(round) == 1,
                        "aggregate_runs: mismatched rounds in " + key.first + "/" + key.second);
        }

        for (const auto& [round, rec0] : first_rounds) {
            CellSummary c;
            c.model = key.first;
            c.method = key.second;
            c.round = round;
            c.sims_cumulative = rec0->sims_cumulative;
            c.n_runs = static_cast<int>(seeds.size());
            c.single_run = c.n_runs == 1;

            double sum = 0.0;
            for (const auto& [seed, rounds] : seeds) {
                const RunRecord* r = rounds.at(round);
                require(r->sims_cumulative == c.sims_cumulative,
                        "aggregate_runs: simulation counts disagree across seeds");
                sum += r->jsd;
            }
            c.mean_jsd = sum / c.n_runs;
            if (c.n_runs > 1) {
                double ss = 0.0;
                for (const auto& [seed, rounds] : seeds) {
                    const double d = rounds.at(round)->jsd - c.mean_jsd;
                    ss += d * d;
                }
                c.se_jsd = std::sqrt(ss / (c.n_runs - 1)) /
                           std::sqrt(static_cast<double>(c.n_runs));
            }
            cells.push_back(std::move(c));
        }
    }
    return cells;
}

namespace {

constexpr const char* results_header = "model,method,run_seed,round,sims_cumulative,jsd,wall_time_s";

std::vector<std::string> split_csv_row(const std::string& line) {
    std::vector<std::string> f;
    std::string cur;
    for (char ch : line) {
        if (ch == ',') {
            f.push_back(cur);
            cur.clear();
        } else if (ch != '\r') {
            cur += ch;
        }
    }
    f.push_back(cur);
    return f;
}

// canonical row/column order for the summary tables
int method_rank(const std::string& m) {
    static const std::vector<std::string> order = {"smc-abc+", "smc-abc", "smc-abc-expert",
                                                   "snl+",     "snl",     "snl-expert"};
    const auto it = std::find(order.begin(), order.end(), m);
    return it == order.end() ? static_cast<int>(order.size()) : static_cast<int>(it - order.begin());
}

int model_rank(const std::string& m) {
    static const std::vector<std::string> order = {"ising", "gaussian_copula", "ou"};
    const auto it = std::find(order.begin(), order.end(), m);
    return it == order.end() ? static_cast<int>(order.size()) : static_cast<int>(it - order.begin());
}

template <typename Rank>
std::vector<std::string> ordered_unique(const std::vector<std::string>& names, Rank rank) {
    std::vector<std::string> v(names);
    std::sort(v.begin(), v.end(), [&](const std::string& a, const std::string& b) {
        const int ra = rank(a), rb = rank(b);
        return ra != rb ? ra < rb : a < b;
    });
    v.erase(std::unique(v.begin(), v.end()), v.end());
    return v;
}

std::string cell_text(const CellSummary& c) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.3f +- %.3f", c.mean_jsd, c.se_jsd);
    return buf;
}

// final-round cells arranged as [method][model]
struct TableLayout {
    std::vector<std::string> methods, models;
    std::map<std::pair<std::string, std::string>, const CellSummary*> at;
};

TableLayout layout_final_round(const std::vector<CellSummary>& cells) {
    TableLayout t;
    std::map<std::pair<std::string, std::string>, const CellSummary*> last;
    std::vector<std::string> methods, models;
    for (const auto& c : cells) {
        auto& slot = last[{c.method, c.model}];
        if (!slot || c.round > slot->round) slot = &c;
    }
    for (const auto& [key, c] : last) {
        methods.push_back(key.first);
        models.push_back(key.second);
    }
    t.methods = ordered_unique(methods, method_rank);
    t.models = ordered_unique(models, model_rank);
    t.at = std::move(last);
    return t;
}

}  // namespace

std::string results_csv(const std::vector<RunRecord>& records) {
    std::ostringstream out;
    out << results_header << '\n';
    for (const auto& r : records)
        out << r.model << ',' << r.method << ',' << r.run_seed << ',' << r.round << ','
            << r.sims_cumulative << ',' << format_double(r.jsd) << ','
            << format_double(r.wall_time_s) << '\n';
    return out.str();
}

std::vector<RunRecord> parse_results_csv(const std::string& text) {
    std::istringstream in(text);
    std::string line;
    require(static_cast<bool>(std::getline(in, line)), "results csv: empty input");
    if (!line.empty() && line.back() == '\r') line.pop_back();
    require(line == results_header, "results csv: unexpected header: " + line);

    std::vector<RunRecord> records;
    while (std::getline(in, line)) {
        if (line.empty() || line == "\r") continue;
        const auto f = split_csv_row(line);
        require(f.size() == 7, "results csv: malformed row: " + line);
        RunRecord r;
        r.model = f[0];
        r.method = f[1];
        r.run_seed = std::stoull(f[2]);
        r.round = std::stoi(f[3]);
        r.sims_cumulative = std::stoll(f[4]);
        r.jsd = std::stod(f[5]);
        r.wall_time_s = std::stod(f[6]);
        records.push_back(std::move(r));
    }
    return records;
}

std::string aggregate_csv(const std::vector<CellSummary>& cells) {
    std::ostringstream out;
    out << "model,method,round,sims_cumulative,mean_jsd,se_jsd,n_runs\n";
    for (const auto& c : cells)
        out << c.model << ',' << c.method << ',' << c.round << ',' << c.sims_cumulative << ','
            << format_double(c.mean_jsd) << ',' << format_double(c.se_jsd) << ',' << c.n_runs
            << '\n';
    return out.str();
}

std::string final_table_csv(const std::vector<CellSummary>& cells) {
    const TableLayout t = layout_final_round(cells);
    std::ostringstream out;
    out << "method";
    for (const auto& model : t.models) out << ',' << model;
    out << '\n';
    for (const auto& method : t.methods) {
        out << method;
        for (const auto& model : t.models) {
            const auto it = t.at.find({method, model});
            out << ',' << (it == t.at.end() ? std::string("-") : cell_text(*it->second));
        }
        out << '\n';
    }
    return out.str();
}

std::string final_table_text(const std::vector<CellSummary>& cells) {
    const TableLayout t = layout_final_round(cells);
    std::vector<std::size_t> widths;
    std::size_t head = std::string("method").size();
    for (const auto& m : t.methods) head = std::max(head, m.size());
    widths.push_back(head);
    for (const auto& model : t.models) {
        std::size_t w = model.size();
        for (const auto& method : t.methods) {
            const auto it = t.at.find({method, model});
            if (it != t.at.end()) w = std::max(w, cell_text(*it->second).size());
        }
        widths.push_back(w);
    }

    std::ostringstream out;
    auto pad = [&out](const std::string& s, std::size_t w) {
        out << s << std::string(w - s.size() + 2, ' ');
    };
    pad("method", widths[0]);
    for (std::size_t j = 0; j < t.models.size(); ++j) pad(t.models[j], widths[j + 1]);
    out << '\n';
    for (const auto& method : t.methods) {
        pad(method, widths[0]);
        for (std::size_t j = 0; j < t.models.size(); ++j) {
            const auto it = t.at.find({method, t.models[j]});
            pad(it == t.at.end() ? std::string("-") : cell_text(*it->second), widths[j + 1]);
        }
        out << '\n';
    }
    return out.str();
}

}  // namespace lfi::eval
