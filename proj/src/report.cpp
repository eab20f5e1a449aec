#include <cmath>
#include <fstream>
#include <limits>
#include <sstream>
#include <string>

#include <fmt/format.h>
#include <fmt/ostream.h>
#include <json.hpp>

#include "kabc/harness.hpp"

namespace kabc {

namespace {

using nlohmann::json;

// JSON has no NaN/inf; non-finite values are written as strings.
json num(double x)
{
    if (std::isnan(x)) return "nan";
    if (std::isinf(x)) return x > 0 ? "inf" : "-inf";
    return x;
}

double from_num(const json& j)
{
    if (j.is_string()) {
        const auto s = j.get<std::string>();
        if (s == "nan") return std::numeric_limits<double>::quiet_NaN();
        if (s == "inf") return std::numeric_limits<double>::infinity();
        if (s == "-inf") return -std::numeric_limits<double>::infinity();
        throw std::runtime_error("report: bad numeric value '" + s + "'");
    }
    return j.get<double>();
}

json nums(const std::vector<double>& v)
{
    json a = json::array();
    for (double x : v) a.push_back(num(x));
    return a;
}

std::vector<double> from_nums(const json& j)
{
    std::vector<double> v;
    for (const auto& x : j) v.push_back(from_num(x));
    return v;
}

json num_map(const std::map<std::string, double>& m)
{
    json o = json::object();
    for (const auto& [k, v] : m) o[k] = num(v);
    return o;
}

std::map<std::string, double> from_num_map(const json& j)
{
    std::map<std::string, double> m;
    for (const auto& [k, v] : j.items()) m[k] = from_num(v);
    return m;
}

bool same(double a, double b)
{
    return (std::isnan(a) && std::isnan(b)) || a == b;
}

bool same(const std::vector<double>& a, const std::vector<double>& b)
{
    if (a.size() != b.size()) return false;
    for (std::size_t i = 0; i < a.size(); ++i)
        if (!same(a[i], b[i])) return false;
    return true;
}

bool same(const std::map<std::string, double>& a, const std::map<std::string, double>& b)
{
    if (a.size() != b.size()) return false;
    for (auto ia = a.begin(), ib = b.begin(); ia != a.end(); ++ia, ++ib)
        if (ia->first != ib->first || !same(ia->second, ib->second)) return false;
    return true;
}

std::vector<std::string> split_csv(const std::string& line)
{
    std::vector<std::string> out;
    std::stringstream ss(line);
    std::string cell;
    while (std::getline(ss, cell, ',')) out.push_back(cell);
    return out;
}

double parse_cell(const std::string& s)
{
    if (s == "nan") return std::numeric_limits<double>::quiet_NaN();
    std::size_t pos = 0;
    const double v = std::stod(s, &pos);
    if (pos != s.size()) throw std::runtime_error("particles.csv: bad cell '" + s + "'");
    return v;
}

} // namespace

bool ExperimentReport::operator==(const ExperimentReport& o) const
{
    if (particles.size() != o.particles.size()) return false;
    for (std::size_t i = 0; i < particles.size(); ++i)
        if (!same(particles[i], o.particles[i])) return false;
    return library_version == o.library_version && seed == o.seed && config == o.config
           && data_source == o.data_source && parameter_names == o.parameter_names
           && same(posterior_mean, o.posterior_mean) && same(posterior_q05, o.posterior_q05)
           && same(posterior_q50, o.posterior_q50) && same(posterior_q95, o.posterior_q95)
           && same(true_theta, o.true_theta) && same(metrics, o.metrics) && same(diagnostics, o.diagnostics)
           && diagnostic_series.size() == o.diagnostic_series.size()
           && std::equal(diagnostic_series.begin(), diagnostic_series.end(), o.diagnostic_series.begin(),
                         [](const auto& a, const auto& b) { return a.first == b.first && same(a.second, b.second); })
           && flags == o.flags && same(wall_time_seconds, o.wall_time_seconds) && exit_code == o.exit_code
           && same(weights, o.weights);
}

void write_particles_csv(std::ostream& os, const std::vector<std::string>& names, const std::vector<Theta>& particles,
                         const std::vector<double>& weights)
{
    for (const auto& n : names) os << n << ',';
    os << "weight\n";
    for (std::size_t i = 0; i < particles.size(); ++i) {
        for (double x : particles[i]) fmt::print(os, "{:.17g},", x);
        fmt::print(os, "{:.17g}\n", weights[i]);
    }
}

void write_report(const ExperimentReport& r, const std::filesystem::path& dir)
{
    std::error_code ec;
    std::filesystem::create_directories(dir, ec);
    if (ec) throw std::runtime_error(fmt::format("cannot create output directory '{}': {}", dir.string(), ec.message()));

    json config = json::object();
    std::istringstream cfg(config_to_text(r.config));
    for (std::string line; std::getline(cfg, line);) {
        const auto eq = line.find(" = ");
        config[line.substr(0, eq)] = line.substr(eq + 3);
    }

    json series = json::object();
    for (const auto& [k, v] : r.diagnostic_series) series[k] = nums(v);

    const json j = {
        {"library_version", r.library_version},
        {"seed", r.seed},
        {"config", config},
        {"data_source", r.data_source},
        {"parameter_names", r.parameter_names},
        {"posterior", {{"mean", nums(r.posterior_mean)},
                       {"q05", nums(r.posterior_q05)},
                       {"q50", nums(r.posterior_q50)},
                       {"q95", nums(r.posterior_q95)}}},
        {"true_theta", nums(r.true_theta)},
        {"metrics", num_map(r.metrics)},
        {"diagnostics", {{"scalars", num_map(r.diagnostics)}, {"series", series}, {"flags", r.flags}}},
        {"wall_time_seconds", num(r.wall_time_seconds)},
        {"exit_code", r.exit_code},
        {"n_particles", r.particles.size()},
    };

    auto open = [&](const char* name) {
        std::ofstream out(dir / name);
        if (!out) throw std::runtime_error(fmt::format("cannot write '{}'", (dir / name).string()));
        return out;
    };
    {
        auto out = open("report.json");
        out << j.dump(2) << '\n';
    }
    {
        auto out = open("particles.csv");
        write_particles_csv(out, r.parameter_names, r.particles, r.weights);
    }
    {
        auto out = open("metrics.csv");
        out << "metric,value\n";
        for (const auto& [k, v] : r.metrics) fmt::print(out, "{},{:.17g}\n", k, v);
        for (const auto& [k, v] : r.diagnostics) fmt::print(out, "diagnostics.{},{:.17g}\n", k, v);
    }
}

ExperimentReport read_report(const std::filesystem::path& dir)
{
    std::ifstream in(dir / "report.json");
    if (!in) throw std::runtime_error(fmt::format("cannot read '{}'", (dir / "report.json").string()));
    const json j = json::parse(in);

    ExperimentReport r;
    r.library_version = j.at("library_version").get<std::string>();
    r.seed = j.at("seed").get<std::uint64_t>();
    ExperimentConfig c;
    for (const auto& [k, v] : j.at("config").items()) set_config_value(c, k, v.get<std::string>());
    r.config = c;
    r.data_source = j.at("data_source").get<std::string>();
    r.parameter_names = j.at("parameter_names").get<std::vector<std::string>>();
    const auto& post = j.at("posterior");
    r.posterior_mean = from_nums(post.at("mean"));
    r.posterior_q05 = from_nums(post.at("q05"));
    r.posterior_q50 = from_nums(post.at("q50"));
    r.posterior_q95 = from_nums(post.at("q95"));
    r.true_theta = from_nums(j.at("true_theta"));
    r.metrics = from_num_map(j.at("metrics"));
    const auto& diag = j.at("diagnostics");
    r.diagnostics = from_num_map(diag.at("scalars"));
    for (const auto& [k, v] : diag.at("series").items()) r.diagnostic_series[k] = from_nums(v);
    r.flags = diag.at("flags").get<std::vector<std::string>>();
    r.wall_time_seconds = from_num(j.at("wall_time_seconds"));
    r.exit_code = j.at("exit_code").get<int>();

    std::ifstream pin(dir / "particles.csv");
    if (!pin) throw std::runtime_error(fmt::format("cannot read '{}'", (dir / "particles.csv").string()));
    std::string line;
    std::getline(pin, line);  // header
    while (std::getline(pin, line)) {
        if (line.empty()) continue;
        const auto cells = split_csv(line);
        if (cells.size() != r.parameter_names.size() + 1)
            throw std::runtime_error("particles.csv: unexpected column count");
        Theta t;
        for (std::size_t i = 0; i + 1 < cells.size(); ++i) t.push_back(parse_cell(cells[i]));
        r.particles.push_back(std::move(t));
        r.weights.push_back(parse_cell(cells.back()));
    }
    return r;
}

} // namespace kabc
