#include "absorb/draws_io.hpp"

#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <json.hpp>
#include <sstream>

#include "absorb/orb_impact.hpp"

namespace absorb {

namespace {

using nlohmann::json;

std::vector<std::string_view> split(std::string_view line) {
  std::vector<std::string_view> out;
  std::size_t start = 0;
  for (;;) {
    const auto pos = line.find(',', start);
    out.push_back(line.substr(start, pos == std::string_view::npos ? pos : pos - start));
    if (pos == std::string_view::npos) return out;
    start = pos + 1;
  }
}

double to_double(std::string_view s) {
  double v = 0.0;
  const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc() || ptr != s.data() + s.size()) {
    throw DataError("bad number '" + std::string(s) + "' in draws file");
  }
  return v;
}

std::string read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot read " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

}  // namespace

std::string draws_csv(const PosteriorDraws& draws) {
  const auto params = model_params(draws.model);
  std::string out = "chain,iter";
  for (Param p : params) {
    out += ',';
    out += param_name(p);
  }
  out += '\n';
  char buf[32];
  for (const auto& chain : draws.chains) {
    for (std::size_t t = 0; t < chain.size(); ++t) {
      const long iter = draws.config.burn_in + static_cast<long>(t) * draws.config.thin + 1;
      out += std::to_string(chain.chain_index) + ',' + std::to_string(iter);
      for (Param p : params) {
        std::snprintf(buf, sizeof buf, ",%.17g", chain.column(p)[t]);
        out += buf;
      }
      out += '\n';
    }
  }
  return out;
}

PosteriorDraws parse_draws_csv(std::string_view text) {
  std::istringstream in{std::string(text)};
  std::string line;
  if (!std::getline(in, line)) throw DataError("empty draws file");
  if (!line.empty() && line.back() == '\r') line.pop_back();
  const auto header = split(line);
  if (header.size() < 3 || header[0] != "chain" || header[1] != "iter") {
    throw DataError("draws file must start with columns chain,iter");
  }
  std::vector<Param> cols;
  for (std::size_t i = 2; i < header.size(); ++i) {
    const auto p = param_from_name(header[i]);
    if (!p) throw DataError("unknown draws column '" + std::string(header[i]) + "'");
    cols.push_back(*p);
  }
  PosteriorDraws draws;
  draws.model = cols.size() == model_params(Model::Nbc).size() ? Model::Nbc : Model::Absorb;
  if (cols != model_params(draws.model)) throw DataError("draws columns do not match any model");

  std::vector<long> first_iters;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    const auto cells = split(line);
    if (cells.size() != header.size()) throw DataError("ragged row in draws file");
    const int c = static_cast<int>(to_double(cells[0]));
    if (c < 0 || c > static_cast<int>(draws.chains.size())) throw DataError("chains out of order in draws file");
    if (c == static_cast<int>(draws.chains.size())) {
      draws.chains.emplace_back();
      draws.chains.back().chain_index = c;
      first_iters.push_back(static_cast<long>(to_double(cells[1])));
    }
    auto& chain = draws.chains[c];
    for (std::size_t k = 0; k < cols.size(); ++k) {
      chain.draws[static_cast<int>(cols[k])].push_back(to_double(cells[k + 2]));
    }
  }
  if (draws.chains.empty()) throw DataError("draws file has no rows");
  draws.config.n_chains = static_cast<int>(draws.chains.size());
  draws.config.burn_in = first_iters.front() - 1;
  draws.config.n_iter = draws.config.burn_in + static_cast<long>(draws.chains.front().size());
  return draws;
}

std::string summary_json(const PosteriorDraws& draws) {
  json j;
  j["model"] = to_string(draws.model);
  j["dataset_fingerprint"] = draws.dataset_fingerprint;
  j["n_chains"] = draws.chains.size();
  j["draws_per_chain"] = draws.chains.empty() ? 0 : draws.chains.front().size();
  json params = json::object();
  for (Param p : model_params(draws.model)) {
    const auto x = draws.combined(p);
    double mean = 0.0;
    for (double v : x) mean += v;
    mean /= static_cast<double>(x.size());
    double ss = 0.0;
    for (double v : x) ss += (v - mean) * (v - mean);
    const auto ci = credible_interval(x);
    params[std::string(param_name(p))] = {{"mean", mean},
                                          {"sd", std::sqrt(ss / static_cast<double>(x.size() - 1))},
                                          {"ci95", json::array({ci.lower, ci.upper})}};
  }
  j["parameters"] = params;
  return j.dump(2) + "\n";
}

std::string diagnostics_json(const DiagnosticsReport& report) {
  json j;
  j["ess"] = report.ess;
  j["split_rhat"] = report.split_rhat;
  j["converged"] = report.converged;
  j["iterations_used"] = report.iterations_used;
  j["doublings"] = report.doublings;
  j["warnings"] = report.warnings;
  return j.dump(2) + "\n";
}

PosteriorDraws load_fit(const std::filesystem::path& dir) {
  auto draws = parse_draws_csv(read_file(dir / "draws.csv"));
  json summary;
  try {
    summary = json::parse(read_file(dir / "summary.json"));
    const Model model = parse_model(summary.at("model").get<std::string>());
    if ((model == Model::Nbc) != (draws.model == Model::Nbc)) {
      throw DataError("summary.json model does not match draws.csv in " + dir.string());
    }
    draws.model = model;
    draws.dataset_fingerprint = summary.at("dataset_fingerprint").get<std::string>();
  } catch (const json::exception& e) {
    throw DataError("bad summary.json in " + dir.string() + ": " + e.what());
  } catch (const std::invalid_argument& e) {
    throw DataError("bad summary.json in " + dir.string() + ": " + e.what());
  }
  return draws;
}

}  // namespace absorb
