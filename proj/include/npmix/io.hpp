#pragma once
// CSV loaders and writers for the dataset schemas, plus fit-file JSON.

#include <npmix/baseball.hpp>
#include <npmix/core.hpp>
#include <npmix/glucose.hpp>
#include <npmix/grid.hpp>
#include <npmix/kernels.hpp>
#include <npmix/posterior.hpp>

#include <Eigen/Core>
#include <json.hpp>

#include <algorithm>
#include <cstdint>
#include <cstdio>
#include <fstream>
#include <map>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

namespace npmix {

namespace detail {

inline std::vector<std::string> read_lines(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw Error("cannot open " + path);
    std::vector<std::string> lines;
    std::string line;
    while (std::getline(in, line)) {
        if (!line.empty() && line.back() == '\r') line.pop_back();
        lines.push_back(std::move(line));
    }
    return lines;
}

inline std::vector<std::string> split_csv(const std::string& line) {
    std::vector<std::string> out;
    std::string::size_type start = 0;
    while (true) {
        const auto pos = line.find(',', start);
        if (pos == std::string::npos) {
            out.push_back(line.substr(start));
            return out;
        }
        out.push_back(line.substr(start, pos - start));
        start = pos + 1;
    }
}

inline std::string trim(const std::string& s) {
    const auto b = s.find_first_not_of(" \t");
    if (b == std::string::npos) return "";
    const auto e = s.find_last_not_of(" \t");
    return s.substr(b, e - b + 1);
}

inline bool is_blank(const std::string& s) { return trim(s).empty(); }

inline bool try_parse_double(const std::string& field, double* out) {
    const std::string t = trim(field);
    if (t.empty()) return false;
    try {
        std::size_t used = 0;
        *out = std::stod(t, &used);
        return used == t.size();
    } catch (const std::exception&) {
        return false;
    }
}

inline double parse_double(const std::string& field, long line_no, const char* what) {
    double v = 0.0;
    if (!try_parse_double(field, &v))
        throw SchemaError(std::string(what) + ": cannot parse '" + field + "' as a number",
                          line_no);
    return v;
}

inline long parse_long(const std::string& field, long line_no, const char* what) {
    const std::string t = trim(field);
    try {
        std::size_t used = 0;
        const long v = std::stol(t, &used);
        if (used != t.size() || t.empty()) throw std::invalid_argument("");
        return v;
    } catch (const std::exception&) {
        throw SchemaError(std::string(what) + ": cannot parse '" + field + "' as an integer",
                          line_no);
    }
}

inline std::string fmt_g17(double x) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", x);
    return buf;
}

inline void write_file(const std::string& path, const std::string& content) {
    std::ofstream out(path);
    if (!out) throw Error("cannot write " + path);
    out << content;
    if (!out) throw Error("write failed for " + path);
}

inline void expect_header(const std::vector<std::string>& fields,
                          const std::vector<std::string>& want, const char* what) {
    bool ok = fields.size() == want.size();
    for (std::size_t i = 0; ok && i < want.size(); ++i)
        if (trim(fields[i]) != want[i]) ok = false;
    if (!ok) {
        std::string expect;
        for (std::size_t i = 0; i < want.size(); ++i) {
            if (i) expect += ',';
            expect += want[i];
        }
        throw SchemaError(std::string(what) + ": header must be " + expect, 1);
    }
}

}  // namespace detail

// ---- baseball: player_id,is_pitcher,ab1,h1,ab2,h2 ----

inline std::vector<BaseballRecord> load_baseball_csv(const std::string& path) {
    const std::vector<std::string> lines = detail::read_lines(path);
    if (lines.empty()) throw SchemaError("baseball csv: empty file");
    detail::expect_header(detail::split_csv(lines[0]),
                          {"player_id", "is_pitcher", "ab1", "h1", "ab2", "h2"}, "baseball csv");
    std::vector<BaseballRecord> out;
    for (std::size_t i = 1; i < lines.size(); ++i) {
        if (detail::is_blank(lines[i])) continue;
        const long line_no = static_cast<long>(i + 1);
        const std::vector<std::string> f = detail::split_csv(lines[i]);
        if (f.size() != 6)
            throw SchemaError("baseball csv: expected 6 fields, got " + std::to_string(f.size()),
                              line_no);
        const long pitch = detail::parse_long(f[1], line_no, "is_pitcher");
        if (pitch != 0 && pitch != 1)
            throw SchemaError("is_pitcher must be 0 or 1", line_no);
        try {
            out.emplace_back(detail::trim(f[0]), pitch == 1,
                             detail::parse_long(f[2], line_no, "ab1"),
                             detail::parse_long(f[3], line_no, "h1"),
                             detail::parse_long(f[4], line_no, "ab2"),
                             detail::parse_long(f[5], line_no, "h2"));
        } catch (const SchemaError&) {
            throw;
        } catch (const std::exception& e) {
            throw SchemaError(e.what(), line_no);
        }
    }
    if (out.empty()) throw SchemaError("baseball csv: no records");
    return out;
}

inline void save_baseball_csv(const std::vector<BaseballRecord>& records,
                              const std::string& path) {
    std::string out = "player_id,is_pitcher,ab1,h1,ab2,h2\n";
    for (const BaseballRecord& r : records) {
        out += r.player_id;
        out += r.is_pitcher ? ",1," : ",0,";
        out += std::to_string(r.ab1) + ',' + std::to_string(r.h1) + ',' + std::to_string(r.ab2) +
               ',' + std::to_string(r.h2) + '\n';
    }
    detail::write_file(path, out);
}

// ---- numeric matrix, one row per line, optional single header line ----

struct MatrixCsv {
    Eigen::MatrixXd values;
    std::vector<std::string> header;  // empty when the first line is numeric
};

inline MatrixCsv load_matrix_csv(const std::string& path) {
    const std::vector<std::string> lines = detail::read_lines(path);
    MatrixCsv out;
    std::vector<std::vector<double>> rows;
    std::size_t width = 0;
    bool first_content = true;
    for (std::size_t i = 0; i < lines.size(); ++i) {
        if (detail::is_blank(lines[i])) continue;
        const long line_no = static_cast<long>(i + 1);
        const std::vector<std::string> f = detail::split_csv(lines[i]);
        if (first_content) {
            first_content = false;
            double probe = 0.0;
            bool numeric = true;
            for (const std::string& s : f)
                if (!detail::try_parse_double(s, &probe)) numeric = false;
            if (!numeric) {
                for (const std::string& s : f) out.header.push_back(detail::trim(s));
                width = f.size();
                continue;
            }
            width = f.size();
        }
        if (f.size() != width)
            throw SchemaError("matrix csv: row has " + std::to_string(f.size()) +
                                  " fields, expected " + std::to_string(width),
                              line_no);
        std::vector<double> row(width);
        for (std::size_t c = 0; c < width; ++c)
            row[c] = detail::parse_double(f[c], line_no, "matrix csv");
        rows.push_back(std::move(row));
    }
    if (rows.empty()) throw SchemaError("matrix csv: no data rows");
    out.values.resize(static_cast<Eigen::Index>(rows.size()), static_cast<Eigen::Index>(width));
    for (std::size_t r = 0; r < rows.size(); ++r)
        for (std::size_t c = 0; c < width; ++c)
            out.values(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(c)) = rows[r][c];
    return out;
}

inline void save_matrix_csv(const Eigen::MatrixXd& values, const std::string& path,
                            const std::vector<std::string>& header = {}) {
    std::string out;
    if (!header.empty()) {
        if (static_cast<Eigen::Index>(header.size()) != values.cols())
            throw IncompatibleError("save_matrix_csv: header width mismatch");
        for (std::size_t i = 0; i < header.size(); ++i) {
            if (i) out += ',';
            out += header[i];
        }
        out += '\n';
    }
    for (Eigen::Index r = 0; r < values.rows(); ++r) {
        for (Eigen::Index c = 0; c < values.cols(); ++c) {
            if (c) out += ',';
            out += detail::fmt_g17(values(r, c));
        }
        out += '\n';
    }
    detail::write_file(path, out);
}

// ---- glucose: subject_id,timestamp,fs,isig,cgm ----
// Rows with a blank fs are ISIG-only and skipped. Each subject's rows are
// ordered by timestamp; the first (n+1)/2 become training data and the rest
// the evaluation half. The cgm column feeds the baseline only when present on
// every evaluation row of the subject.

inline std::vector<GlucoseSubject> load_glucose_csv(const std::string& path) {
    const std::vector<std::string> lines = detail::read_lines(path);
    if (lines.empty()) throw SchemaError("glucose csv: empty file");
    detail::expect_header(detail::split_csv(lines[0]),
                          {"subject_id", "timestamp", "fs", "isig", "cgm"}, "glucose csv");

    struct Row {
        double time, fs, isig;
        bool has_cgm;
        double cgm;
    };
    std::vector<std::string> order;
    std::map<std::string, std::vector<Row>> by_subject;
    for (std::size_t i = 1; i < lines.size(); ++i) {
        if (detail::is_blank(lines[i])) continue;
        const long line_no = static_cast<long>(i + 1);
        const std::vector<std::string> f = detail::split_csv(lines[i]);
        if (f.size() != 5)
            throw SchemaError("glucose csv: expected 5 fields, got " + std::to_string(f.size()),
                              line_no);
        if (detail::is_blank(f[2])) continue;  // ISIG-only row
        const std::string id = detail::trim(f[0]);
        if (id.empty()) throw SchemaError("glucose csv: blank subject_id", line_no);
        Row row;
        row.time = detail::parse_double(f[1], line_no, "timestamp");
        row.fs = detail::parse_double(f[2], line_no, "fs");
        row.isig = detail::parse_double(f[3], line_no, "isig");
        row.has_cgm = !detail::is_blank(f[4]);
        row.cgm = row.has_cgm ? detail::parse_double(f[4], line_no, "cgm") : 0.0;
        auto it = by_subject.find(id);
        if (it == by_subject.end()) {
            order.push_back(id);
            it = by_subject.emplace(id, std::vector<Row>{}).first;
        }
        it->second.push_back(row);
    }

    std::vector<GlucoseSubject> out;
    for (const std::string& id : order) {
        std::vector<Row>& rows = by_subject[id];
        std::stable_sort(rows.begin(), rows.end(),
                         [](const Row& a, const Row& b) { return a.time < b.time; });
        const std::size_t n_train = (rows.size() + 1) / 2;
        std::vector<double> fs, isig, times, test_fs, test_isig, cgm;
        bool cgm_all = rows.size() > n_train;
        for (std::size_t i = 0; i < rows.size(); ++i) {
            if (i < n_train) {
                fs.push_back(rows[i].fs);
                isig.push_back(rows[i].isig);
                times.push_back(rows[i].time);
            } else {
                test_fs.push_back(rows[i].fs);
                test_isig.push_back(rows[i].isig);
                if (rows[i].has_cgm)
                    cgm.push_back(rows[i].cgm);
                else
                    cgm_all = false;
            }
        }
        if (!cgm_all) cgm.clear();
        try {
            out.emplace_back(id, SeriesObs(std::move(fs), std::move(isig), std::move(times)),
                             std::move(test_fs), std::move(test_isig), std::move(cgm));
        } catch (const std::exception& e) {
            throw SchemaError("subject " + id + ": " + e.what());
        }
    }
    if (out.empty()) throw SchemaError("glucose csv: no usable rows");
    return out;
}

inline void save_glucose_csv(const std::vector<GlucoseSubject>& subjects,
                             const std::string& path) {
    std::string out = "subject_id,timestamp,fs,isig,cgm\n";
    for (const GlucoseSubject& s : subjects) {
        const std::size_t n = s.train.n();
        for (std::size_t i = 0; i < n; ++i) {
            const double t = s.train.times.empty() ? static_cast<double>(i) : s.train.times[i];
            out += s.id + ',' + detail::fmt_g17(t) + ',' + detail::fmt_g17(s.train.values[i]) +
                   ',' + detail::fmt_g17(s.train.covariates[i]) + ",\n";
        }
        for (std::size_t i = 0; i < s.n_test(); ++i) {
            out += s.id + ',' + detail::fmt_g17(static_cast<double>(n + i)) + ',' +
                   detail::fmt_g17(s.test_fs[i]) + ',' + detail::fmt_g17(s.test_isig[i]) + ',';
            if (!s.test_cgm.empty()) out += detail::fmt_g17(s.test_cgm[i]);
            out += '\n';
        }
    }
    detail::write_file(path, out);
}

// ---- per-kernel observation files ----
// gaussian-location: header value,variance.
// gaussian-location-scale: headerless, each row the replicates of one unit.
// poisson-binomial: header at_bats,hits.
// two-class-gaussian: headerless, first row the 0/1 labels, then one row of
//   values per feature.
// linear-regression: headerless, each row interleaved y,x pairs.
// local-level-ss: headerless, each row interleaved y,c pairs.

inline std::vector<Observation> load_observations_csv(KernelId id, const std::string& path) {
    const std::vector<std::string> lines = detail::read_lines(path);
    std::vector<Observation> out;
    std::vector<int> labels;  // two-class only
    bool saw_header = false, saw_labels = false;
    for (std::size_t i = 0; i < lines.size(); ++i) {
        if (detail::is_blank(lines[i])) continue;
        const long line_no = static_cast<long>(i + 1);
        const std::vector<std::string> f = detail::split_csv(lines[i]);
        try {
            switch (id) {
                case KernelId::GaussianLocation: {
                    if (!saw_header) {
                        detail::expect_header(f, {"value", "variance"}, "gaussian-location csv");
                        saw_header = true;
                        break;
                    }
                    if (f.size() != 2) throw SchemaError("expected 2 fields", line_no);
                    out.emplace_back(KnownVarObs(detail::parse_double(f[0], line_no, "value"),
                                                 detail::parse_double(f[1], line_no, "variance")));
                    break;
                }
                case KernelId::GaussianLocationScale: {
                    std::vector<double> v(f.size());
                    for (std::size_t c = 0; c < f.size(); ++c)
                        v[c] = detail::parse_double(f[c], line_no, "replicate");
                    out.emplace_back(ReplicateObs(std::move(v)));
                    break;
                }
                case KernelId::PoissonBinomial: {
                    if (!saw_header) {
                        detail::expect_header(f, {"at_bats", "hits"}, "poisson-binomial csv");
                        saw_header = true;
                        break;
                    }
                    if (f.size() != 2) throw SchemaError("expected 2 fields", line_no);
                    out.emplace_back(CountPairObs(detail::parse_long(f[0], line_no, "at_bats"),
                                                  detail::parse_long(f[1], line_no, "hits")));
                    break;
                }
                case KernelId::TwoClassGaussian: {
                    if (!saw_labels) {
                        for (const std::string& s : f) {
                            const long l = detail::parse_long(s, line_no, "label");
                            if (l != 0 && l != 1)
                                throw SchemaError("labels must be 0 or 1", line_no);
                            labels.push_back(static_cast<int>(l));
                        }
                        saw_labels = true;
                        break;
                    }
                    if (f.size() != labels.size())
                        throw SchemaError("expected " + std::to_string(labels.size()) +
                                              " values to match the label row",
                                          line_no);
                    std::vector<double> v(f.size());
                    for (std::size_t c = 0; c < f.size(); ++c)
                        v[c] = detail::parse_double(f[c], line_no, "value");
                    out.emplace_back(TwoClassObs(std::move(v), labels));
                    break;
                }
                case KernelId::LinearRegression:
                case KernelId::LocalLevelStateSpace: {
                    if (f.size() % 2 != 0)
                        throw SchemaError("expected an even number of fields (pairs)", line_no);
                    std::vector<double> y(f.size() / 2), x(f.size() / 2);
                    for (std::size_t c = 0; c < f.size(); c += 2) {
                        y[c / 2] = detail::parse_double(f[c], line_no, "response");
                        x[c / 2] = detail::parse_double(f[c + 1], line_no, "covariate");
                    }
                    if (id == KernelId::LinearRegression)
                        out.emplace_back(RegressionObs(std::move(y), std::move(x)));
                    else
                        out.emplace_back(SeriesObs(std::move(y), std::move(x)));
                    break;
                }
            }
        } catch (const SchemaError&) {
            throw;
        } catch (const std::exception& e) {
            throw SchemaError(e.what(), line_no);
        }
    }
    if (out.empty())
        throw SchemaError(std::string(kernel_name(id)) + " csv: no observations");
    return out;
}

inline void save_observations_csv(KernelId id, const std::vector<Observation>& data,
                                  const std::string& path) {
    std::string out;
    if (id == KernelId::GaussianLocation) out = "value,variance\n";
    if (id == KernelId::PoissonBinomial) out = "at_bats,hits\n";
    const std::vector<int>* labels = nullptr;
    for (const Observation& obs : data) {
        switch (id) {
            case KernelId::GaussianLocation: {
                const auto& o = detail::expect_obs<KnownVarObs>(id, obs, "save_observations_csv");
                out += detail::fmt_g17(o.value) + ',' + detail::fmt_g17(o.variance) + '\n';
                break;
            }
            case KernelId::GaussianLocationScale: {
                const auto& o = detail::expect_obs<ReplicateObs>(id, obs, "save_observations_csv");
                for (std::size_t i = 0; i < o.values.size(); ++i) {
                    if (i) out += ',';
                    out += detail::fmt_g17(o.values[i]);
                }
                out += '\n';
                break;
            }
            case KernelId::PoissonBinomial: {
                const auto& o = detail::expect_obs<CountPairObs>(id, obs, "save_observations_csv");
                out += std::to_string(o.at_bats) + ',' + std::to_string(o.hits) + '\n';
                break;
            }
            case KernelId::TwoClassGaussian: {
                const auto& o = detail::expect_obs<TwoClassObs>(id, obs, "save_observations_csv");
                if (!labels) {
                    labels = &o.labels;
                    for (std::size_t i = 0; i < o.labels.size(); ++i) {
                        if (i) out += ',';
                        out += std::to_string(o.labels[i]);
                    }
                    out += '\n';
                } else if (o.labels != *labels) {
                    throw IncompatibleError(
                        "save_observations_csv: two-class observations disagree on labels");
                }
                for (std::size_t i = 0; i < o.values.size(); ++i) {
                    if (i) out += ',';
                    out += detail::fmt_g17(o.values[i]);
                }
                out += '\n';
                break;
            }
            case KernelId::LinearRegression: {
                const auto& o = detail::expect_obs<RegressionObs>(id, obs, "save_observations_csv");
                for (std::size_t i = 0; i < o.response.size(); ++i) {
                    if (i) out += ',';
                    out += detail::fmt_g17(o.response[i]) + ',' + detail::fmt_g17(o.covariate[i]);
                }
                out += '\n';
                break;
            }
            case KernelId::LocalLevelStateSpace: {
                const auto& o = detail::expect_obs<SeriesObs>(id, obs, "save_observations_csv");
                for (std::size_t i = 0; i < o.values.size(); ++i) {
                    if (i) out += ',';
                    out += detail::fmt_g17(o.values[i]) + ',' + detail::fmt_g17(o.covariates[i]);
                }
                out += '\n';
                break;
            }
        }
    }
    detail::write_file(path, out);
}

// ---- fit files ----
// Weights below 1e-12 are written as exact zeros to keep the files friendly
// to sparse post-processing; the mass lost this way is far below the solver
// tolerance and weights are renormalized on load.

struct FitFile {
    KernelId kernel = KernelId::GaussianLocation;
    Grid grid;
    std::vector<int> per_dim_counts;
    FitResult fit;
    std::uint64_t seed = 0;
};

inline nlohmann::json fit_to_json(const FitFile& f) {
    nlohmann::json atoms = nlohmann::json::array();
    for (const Atom& a : f.grid.atoms()) atoms.push_back(a.coords);
    nlohmann::json bounds = nlohmann::json::array();
    for (std::size_t d = 0; d < f.grid.dim(); ++d) {
        double lo = f.grid.atom(0)[d], hi = lo;
        for (const Atom& a : f.grid.atoms()) {
            lo = std::min(lo, a[d]);
            hi = std::max(hi, a[d]);
        }
        bounds.push_back({lo, hi});
    }
    std::vector<double> weights(f.grid.size());
    for (std::size_t k = 0; k < weights.size(); ++k) {
        const double w = f.fit.weights[k];
        weights[k] = w < 1e-12 ? 0.0 : w;
    }
    nlohmann::json j;
    j["kernel"] = kernel_name(f.kernel);
    j["grid"] = {{"atoms", atoms}, {"per_dim_counts", f.per_dim_counts}, {"bounds", bounds}};
    j["weights"] = weights;
    j["neg_log_lik"] = f.fit.neg_log_lik;
    j["iterations"] = f.fit.iterations;
    j["kkt_gap"] = f.fit.kkt_gap;
    j["converged"] = f.fit.converged;
    j["solver"] = f.fit.solver;
    j["seed"] = f.seed;
    j["wall_seconds"] = f.fit.seconds;
    return j;
}

inline void save_fit_json(const FitFile& f, const std::string& path) {
    detail::write_file(path, fit_to_json(f).dump(2) + "\n");
}

inline FitFile load_fit_json(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw Error("cannot open " + path);
    nlohmann::json j;
    try {
        in >> j;
    } catch (const nlohmann::json::exception& e) {
        throw SchemaError(std::string("fit json: ") + e.what());
    }
    try {
        FitFile f;
        f.kernel = kernel_from_name(j.at("kernel").get<std::string>());
        std::vector<Atom> atoms;
        for (const auto& coords : j.at("grid").at("atoms"))
            atoms.emplace_back(coords.get<std::vector<double>>());
        f.grid = Grid(std::move(atoms));
        f.per_dim_counts = j.at("grid").at("per_dim_counts").get<std::vector<int>>();
        Eigen::VectorXd w(static_cast<Eigen::Index>(j.at("weights").size()));
        for (Eigen::Index k = 0; k < w.size(); ++k)
            w(k) = j.at("weights")[static_cast<std::size_t>(k)].get<double>();
        f.fit.weights = MixingWeights(std::move(w));
        f.fit.neg_log_lik = j.at("neg_log_lik").get<double>();
        f.fit.iterations = j.at("iterations").get<long>();
        f.fit.kkt_gap = j.at("kkt_gap").get<double>();
        f.fit.converged = j.at("converged").get<bool>();
        f.fit.solver = j.at("solver").get<std::string>();
        f.fit.seconds = j.at("wall_seconds").get<double>();
        f.seed = j.at("seed").get<std::uint64_t>();
        if (f.fit.weights.size() != f.grid.size())
            throw IncompatibleError("fit json: weights/atoms size mismatch");
        return f;
    } catch (const nlohmann::json::exception& e) {
        throw SchemaError(std::string("fit json: ") + e.what());
    }
}

// ---- plot-ready emitters ----

inline std::string marginal_csv(const Grid& grid, const MixingWeights& w, std::size_t dim) {
    std::string out = "value,weight\n";
    for (const auto& [value, weight] : marginalize(grid, w, dim))
        out += detail::fmt_g17(value) + ',' + detail::fmt_g17(weight) + '\n';
    return out;
}

inline std::string posterior_csv(const LogLikelihoodMatrix& L, const Grid& grid,
                                 const MixingWeights& w, const std::vector<std::size_t>& dims) {
    if (dims.empty()) throw std::invalid_argument("posterior_csv: no coordinates requested");
    std::string out = "observation";
    for (std::size_t d : dims) out += ",mean_" + std::to_string(d);
    out += '\n';
    std::vector<std::vector<double>> cols;
    for (std::size_t d : dims) cols.push_back(posterior_means(L, grid, w, d));
    for (Eigen::Index j = 0; j < L.rows(); ++j) {
        out += std::to_string(j);
        for (const std::vector<double>& col : cols)
            out += ',' + detail::fmt_g17(col[static_cast<std::size_t>(j)]);
        out += '\n';
    }
    return out;
}

}  // namespace npmix
