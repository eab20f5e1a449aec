#include <charconv>
#include <fstream>
#include <sstream>
#include <string>

#include <fmt/format.h>

#include "kabc/harness.hpp"

namespace kabc {

namespace {

std::string_view trim(std::string_view s)
{
    const auto first = s.find_first_not_of(" \t\r\n");
    if (first == std::string_view::npos) return {};
    const auto last = s.find_last_not_of(" \t\r\n");
    return s.substr(first, last - first + 1);
}

std::vector<std::string_view> split(std::string_view s, char sep)
{
    std::vector<std::string_view> parts;
    std::size_t pos = 0;
    while (true) {
        const auto next = s.find(sep, pos);
        parts.push_back(trim(s.substr(pos, next == std::string_view::npos ? std::string_view::npos : next - pos)));
        if (next == std::string_view::npos) break;
        pos = next + 1;
    }
    return parts;
}

double parse_double(std::string_view key, std::string_view v)
{
    v = trim(v);
    if (v == "inf" || v == "+inf") return std::numeric_limits<double>::infinity();
    double out = 0.0;
    const auto [ptr, ec] = std::from_chars(v.data(), v.data() + v.size(), out);
    if (ec != std::errc{} || ptr != v.data() + v.size() || v.empty())
        throw ConfigError(fmt::format("config key '{}': '{}' is not a number", key, v));
    return out;
}

std::uint64_t parse_uint(std::string_view key, std::string_view v)
{
    v = trim(v);
    std::uint64_t out = 0;
    const auto [ptr, ec] = std::from_chars(v.data(), v.data() + v.size(), out);
    if (ec != std::errc{} || ptr != v.data() + v.size() || v.empty())
        throw ConfigError(fmt::format("config key '{}': '{}' is not a nonnegative integer", key, v));
    return out;
}

std::string fmt_double(double x)
{
    return fmt::format("{:.17g}", x);
}

std::string join_doubles(const std::vector<double>& v)
{
    std::string s;
    for (std::size_t i = 0; i < v.size(); ++i) s += (i ? "," : "") + fmt_double(v[i]);
    return s;
}

const std::vector<double>& paper_schedule(Experiment e)
{
    static const std::vector<double> toy{0.5, 0.01, 0.005, 0.001, 0.0005};
    static const std::vector<double> blowfly{2, 1, 0.5, 0.35, 0.25, 0.2, 0.15};
    return e == Experiment::toy ? toy : blowfly;
}

double paper_abc_epsilon(Experiment e)
{
    return e == Experiment::toy ? 0.002 : 0.35;
}

} // namespace

std::string_view to_string(Experiment e)
{
    return e == Experiment::toy ? "toy" : "blowfly";
}

Experiment parse_experiment(std::string_view name)
{
    if (name == "toy") return Experiment::toy;
    if (name == "blowfly") return Experiment::blowfly;
    throw ConfigError(fmt::format("unknown experiment '{}'", name));
}

void set_config_value(ExperimentConfig& c, std::string_view key, std::string_view raw)
{
    const std::string_view v = trim(raw);
    try {
        if (key == "experiment") c.experiment = parse_experiment(v);
        else if (key == "method") c.method = parse_method(v);
        else if (key == "n_observations") c.n_observations = v == "auto" ? std::nullopt : std::optional(parse_uint(key, v));
        else if (key == "n_sims") c.n_sims = parse_uint(key, v);
        else if (key == "epsilon") c.epsilon = v == "auto" ? std::nullopt : std::optional(parse_double(key, v));
        else if (key == "epsilon_quantile") c.epsilon_quantile = parse_double(key, v);
        else if (key == "epsilon_schedule") {
            c.epsilon_schedule.clear();
            if (!v.empty())
                for (auto part : split(v, ',')) c.epsilon_schedule.push_back(parse_double(key, part));
        }
        else if (key == "n_particles") c.n_particles = parse_uint(key, v);
        else if (key == "perturb_variance") c.perturb_variance = parse_double(key, v);
        else if (key == "seed") c.seed = parse_uint(key, v);
        else if (key == "threads") c.threads = parse_uint(key, v);
        else if (key == "data_path") c.data_path = v.empty() ? std::nullopt : std::optional(std::string(v));
        else if (key == "output_path") c.output_path = std::string(v);
        else if (key == "sweep.start") c.sweep_start = parse_uint(key, v);
        else if (key == "sweep.stop") c.sweep_stop = parse_uint(key, v);
        else if (key == "sweep.step") c.sweep_step = parse_uint(key, v);
        else if (key == "sweep.methods") {
            c.sweep_methods.clear();
            for (auto part : split(v, ',')) c.sweep_methods.push_back(parse_method(part));
        }
        else if (key == "rho.draws") c.rho_draws = parse_uint(key, v);
        else if (key == "rho.keep") c.rho_keep = parse_uint(key, v);
        else throw ConfigError(fmt::format("unknown config key '{}'", key));
    } catch (const ConfigError&) {
        throw;
    } catch (const std::exception& e) {
        throw ConfigError(fmt::format("config key '{}': {}", key, e.what()));
    }
}

ExperimentConfig parse_config(std::istream& in)
{
    ExperimentConfig c;
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        std::string_view s = line;
        if (const auto hash = s.find('#'); hash != std::string_view::npos) s = s.substr(0, hash);
        s = trim(s);
        if (s.empty()) continue;
        const auto eq = s.find('=');
        if (eq == std::string_view::npos) throw ConfigError(fmt::format("config line {}: expected 'key = value'", lineno));
        set_config_value(c, trim(s.substr(0, eq)), s.substr(eq + 1));
    }
    return c;
}

ExperimentConfig load_config_file(const std::filesystem::path& path)
{
    std::ifstream in(path);
    if (!in) throw ConfigError(fmt::format("cannot open config file '{}'", path.string()));
    return parse_config(in);
}

std::string config_to_text(const ExperimentConfig& c)
{
    std::string methods;
    for (std::size_t i = 0; i < c.sweep_methods.size(); ++i)
        methods += (i ? "," : "") + std::string(to_string(c.sweep_methods[i]));
    std::string out;
    auto line = [&](std::string_view k, const std::string& v) { out += fmt::format("{} = {}\n", k, v); };
    line("experiment", std::string(to_string(c.experiment)));
    line("method", std::string(to_string(c.method)));
    line("n_observations", c.n_observations ? std::to_string(*c.n_observations) : "auto");
    line("n_sims", std::to_string(c.n_sims));
    line("epsilon", c.epsilon ? fmt_double(*c.epsilon) : "auto");
    line("epsilon_quantile", fmt_double(c.epsilon_quantile));
    line("epsilon_schedule", join_doubles(c.epsilon_schedule));
    line("n_particles", std::to_string(c.n_particles));
    line("perturb_variance", fmt_double(c.perturb_variance));
    line("seed", std::to_string(c.seed));
    line("threads", std::to_string(c.threads));
    line("data_path", c.data_path.value_or(""));
    line("output_path", c.output_path);
    line("sweep.start", std::to_string(c.sweep_start));
    line("sweep.stop", std::to_string(c.sweep_stop));
    line("sweep.step", std::to_string(c.sweep_step));
    line("sweep.methods", methods);
    line("rho.draws", std::to_string(c.rho_draws));
    line("rho.keep", std::to_string(c.rho_keep));
    return out;
}

ExperimentConfig resolve_config(ExperimentConfig c)
{
    if (!c.epsilon_schedule.empty() && !is_smc(c.method))
        throw ConfigError(fmt::format("epsilon_schedule given but method '{}' is not an SMC variant", to_string(c.method)));
    if (is_smc(c.method) && c.epsilon_schedule.empty()) c.epsilon_schedule = paper_schedule(c.experiment);
    if (is_smc(c.method)) {
        SmcSchedule s{c.epsilon_schedule, c.n_particles, c.perturb_variance};
        try {
            s.validate();
        } catch (const std::invalid_argument& e) {
            throw ConfigError(e.what());
        }
    }
    if (c.method == Method::abc && !c.epsilon) c.epsilon = paper_abc_epsilon(c.experiment);
    if (c.epsilon && !(*c.epsilon > 0.0)) throw ConfigError("epsilon must be positive");
    if (!(c.epsilon_quantile > 0.0 && c.epsilon_quantile <= 1.0))
        throw ConfigError("epsilon_quantile must lie in (0, 1]");
    if (c.n_sims == 0) throw ConfigError("n_sims must be >= 1");
    if (c.threads == 0) throw ConfigError("threads must be >= 1");
    if (c.experiment == Experiment::toy && c.data_path) throw ConfigError("data_path is only used by the blowfly experiment");
    if (c.experiment == Experiment::toy && !c.n_observations) c.n_observations = 400;
    if (c.n_observations && *c.n_observations < 5) throw ConfigError("n_observations must be >= 5");
    if (c.rho_keep == 0 || c.rho_draws < c.rho_keep) throw ConfigError("require rho.draws >= rho.keep >= 1");
    if (c.sweep_step == 0 || c.sweep_start == 0 || c.sweep_stop < c.sweep_start)
        throw ConfigError("invalid sweep grid");
    if (c.sweep_methods.empty()) throw ConfigError("sweep.methods is empty");
    return c;
}

MethodSettings method_settings(const ExperimentConfig& c)
{
    MethodSettings s;
    s.n_sims = c.n_sims;
    if (c.method == Method::abc) {
        s.abc_epsilon = c.epsilon.value_or(paper_abc_epsilon(c.experiment));
    } else {
        s.abc_epsilon = paper_abc_epsilon(c.experiment);
        s.kernel_epsilon = c.epsilon;
    }
    s.epsilon_quantile = c.epsilon_quantile;
    s.schedule = c.epsilon_schedule;
    s.n_particles = c.n_particles;
    s.perturb_variance = c.perturb_variance;
    s.threads = c.threads;
    return s;
}

} // namespace kabc
