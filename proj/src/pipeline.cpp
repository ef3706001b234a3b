#include "pvgrid/pipeline.hpp"

#include <algorithm>
#include <atomic>
#include <fstream>
#include <memory>
#include <sstream>
#include <thread>

#include <fmt/format.h>
#include <json.hpp>
#include <openssl/evp.h>

#include "pvgrid/lp.hpp"
#include "pvgrid/scenario.hpp"
#include "pvgrid/table.hpp"

namespace pvgrid {

namespace fs = std::filesystem;
using Json = nlohmann::ordered_json;

namespace {

std::string read_file(const fs::path &p) {
  std::ifstream in(p, std::ios::binary);
  if (!in)
    throw InputError(p.string(), 0, "cannot open file");
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_file(const fs::path &p, const std::string &text) {
  fs::create_directories(p.parent_path());
  std::ofstream out(p, std::ios::binary);
  if (!out)
    throw InputError(p.string(), 0, "cannot write file");
  out << text;
}

void write_json(const fs::path &p, const Json &j) { write_file(p, j.dump(2) + "\n"); }

Json config_json(const Config &cfg) {
  Json j = Json::object();
  for (const auto &[key, value] : cfg.values())
    std::visit([&](const auto &v) { j[key] = v; }, value);
  return j;
}

void record_stage(const RunContext &ctx, const std::string &stage, const std::string &status,
                  const std::vector<std::string> &outputs) {
  const fs::path path = ctx.out / "manifest.json";
  Json old = fs::exists(path) ? Json::parse(read_file(path)) : Json::object();
  Json m;
  m["tool"] = tool_version;
  m["bundle"] = ctx.bundle.generic_string();
  m["bundle_hash"] = ctx.hash;
  m["config"] = config_json(ctx.pc.config);
  m["seeds"] = {{"partition", ctx.pc.config.integer("partition.seed", 7)}};
  m["stages"] = old.contains("stages") ? old["stages"] : Json::object();
  m["stages"][stage] = {{"status", status}, {"outputs", outputs}};
  write_json(path, m);
}

std::string csv_safe(std::string s) {
  std::replace(s.begin(), s.end(), ',', ';');
  std::replace(s.begin(), s.end(), '\n', ' ');
  return s;
}

std::string level_dir(double level) { return "level_" + format_number(level); }

std::string markdown_table(const CsvTable &t) {
  std::string s = "|";
  for (const auto &h : t.header())
    s += " " + h + " |";
  s += "\n|";
  for (std::size_t i = 0; i < t.header().size(); ++i)
    s += " --- |";
  s += "\n";
  for (std::size_t r = 0; r < t.rows(); ++r) {
    s += "|";
    for (const auto &h : t.header())
      s += " " + t.text(r, h) + " |";
    s += "\n";
  }
  return s;
}

void write_pv_distribution(const PlanningCase &pc, const ExpansionSolution &sol,
                           const fs::path &path) {
  std::vector<std::string> header{"region", "existing_pv_mw"};
  for (int y = 1; y <= pc.horizon.n_years; ++y)
    header.push_back(fmt::format("built_units_y{}", y));
  header.insert(header.end(), {"final_pv_mw", "validated_total_mw", "cap_utilization"});
  std::vector<std::vector<std::string>> rows;
  for (std::size_t r = 0; r < pc.regions.size(); ++r) {
    auto g = pc.pv_unit(r);
    double existing = g ? pc.units[*g].p_max * pc.units[*g].existing_count : 0.0;
    std::vector<std::string> row{pc.regions[r].id, format_number(existing)};
    for (int y = 1; y <= pc.horizon.n_years; ++y)
      row.push_back(format_number(sol.pv_built[r][y - 1]));
    double final_mw = pv_capacity_mw(pc, sol, r, pc.horizon.n_years);
    double total = pc.regions[r].validated_dispatch_total;
    row.push_back(format_number(final_mw));
    row.push_back(format_number(total));
    row.push_back(format_number(total > 0 ? final_mw / total : 0.0));
    rows.push_back(std::move(row));
  }
  write_csv(path, header, rows);
}

SweepRow run_level(const PlanningCase &pc, const ExpansionSolution &sol, const TimeBlock &block,
                   double level, const SimConfig &sim, const fs::path &dir) {
  SweepRow row;
  row.level = level;
  try {
    auto dc = build_dynamic_case(pc, sol, block, level);
    row.pv_share = dc.pv_share();
    row.stored_energy = dc.stored_energy();
    fs::create_directories(dir);
    write_dynamic_case_json(dc, dir / "scenario.json");
    auto flat = flat_run(dc, sim);
    row.flat_max_deviation = flat.max_deviation;
    row.flat_pass = flat.pass;
    write_trace_csv(flat.trace, dir / "flat.csv");
    auto trace = simulate_contingency(dc, sim);
    write_trace_csv(trace, dir / "trace.csv");
    row.metrics = compute_metrics(trace, sim);
    write_metrics_json(row.metrics, dir / "metrics.json");
  } catch (const ScenarioError &e) {
    row.status = "unbuildable";
    row.shortfall_mw = e.shortfall_mw();
    row.note = e.what();
  } catch (const NumericalError &e) {
    row.status = "unstable";
    row.note = e.what();
  } catch (const InputError &e) {
    row.status = "failed";
    row.note = e.what();
  }
  return row;
}

} // namespace

std::string bundle_hash(const fs::path &bundle) {
  std::vector<fs::path> files;
  for (const auto &e : fs::recursive_directory_iterator(bundle))
    if (e.is_regular_file())
      files.push_back(e.path());
  std::vector<std::pair<std::string, fs::path>> named;
  for (const auto &f : files)
    named.emplace_back(fs::relative(f, bundle).generic_string(), f);
  std::sort(named.begin(), named.end());

  std::unique_ptr<EVP_MD_CTX, decltype(&EVP_MD_CTX_free)> md(EVP_MD_CTX_new(), EVP_MD_CTX_free);
  if (!md || EVP_DigestInit_ex(md.get(), EVP_sha256(), nullptr) != 1)
    throw std::runtime_error("sha256 unavailable");
  for (const auto &[name, path] : named) {
    std::string content = read_file(path);
    std::string head = fmt::format("{}\n{}\n", name, content.size());
    EVP_DigestUpdate(md.get(), head.data(), head.size());
    EVP_DigestUpdate(md.get(), content.data(), content.size());
  }
  unsigned char digest[EVP_MAX_MD_SIZE];
  unsigned int len = 0;
  EVP_DigestFinal_ex(md.get(), digest, &len);
  std::string hex;
  for (unsigned int i = 0; i < len; ++i)
    hex += fmt::format("{:02x}", digest[i]);
  return hex;
}

RunContext open_run(const fs::path &bundle, const fs::path &out,
                    const std::optional<fs::path> &config_path, std::optional<std::uint64_t> seed) {
  RunContext ctx;
  ctx.bundle = bundle;
  ctx.out = out;
  ctx.pc = load_case_bundle(bundle);
  if (config_path) {
    auto extra = Config::read(*config_path);
    for (const auto &[key, value] : extra.values())
      if (key.rfind("horizon.", 0) == 0)
        throw InputError(config_path->string(), 0,
                         fmt::format("'{}' can only be set in the bundle's config.toml", key));
    ctx.pc.config.merge(extra);
  }
  if (seed)
    ctx.pc.config.set("partition.seed", static_cast<double>(*seed));
  auto report = validate_case(ctx.pc);
  if (!report.ok())
    throw InputError(bundle.string(), 0, "bundle failed validation:\n" + report.to_string());
  ctx.hash = bundle_hash(bundle);
  fs::create_directories(out);
  return ctx;
}

SweepSpec SweepSpec::from_config(const PlanningCase &pc) {
  const auto &cfg = pc.config;
  SweepSpec s;
  s.levels = cfg.numbers("sweep.levels", s.levels);
  if (s.levels.empty())
    throw InputError("sweep.levels is empty");
  for (std::size_t i = 0; i < s.levels.size(); ++i) {
    if (!(s.levels[i] >= 0.0 && s.levels[i] < 1.0))
      throw InputError(fmt::format("sweep level {} is outside [0, 1)", s.levels[i]));
    if (i > 0 && s.levels[i] <= s.levels[i - 1])
      throw InputError("sweep.levels must be strictly increasing");
  }
  s.block = cfg.text("sweep.block", s.block);
  s.trip_region = cfg.text("sweep.trip_region", pc.regions.empty() ? "" : pc.regions[0].id);
  if (!pc.find_region(s.trip_region))
    throw InputError(fmt::format("sweep.trip_region '{}' is not a region", s.trip_region));
  if (cfg.contains("sweep.trip_mw")) {
    s.trip_mw = cfg.number("sweep.trip_mw", 0.0);
  } else {
    double load = 0.0;
    for (const auto &r : pc.regions)
      load += r.validated_dispatch_total;
    s.trip_mw = cfg.number("sweep.trip_fraction_of_load", 0.003) * load;
  }
  if (s.trip_mw < 0.0)
    throw InputError("sweep trip must be non-negative");
  s.workers = static_cast<int>(std::max<long long>(1, cfg.integer("sweep.workers", 1)));
  return s;
}

std::vector<SweepRow> run_sweep(const PlanningCase &pc, const BlockSchedule &sched,
                                const ExpansionSolution &sol, const SweepSpec &spec,
                                const SimConfig &sim, const fs::path &dir) {
  const TimeBlock &block = select_block(pc, sched, sol, spec.block);
  SimConfig cfg = sim;
  cfg.disturbance.region = *pc.find_region(spec.trip_region);
  cfg.disturbance.mw = spec.trip_mw;
  fs::create_directories(dir);

  std::vector<SweepRow> rows(spec.levels.size());
  std::atomic<std::size_t> next{0};
  auto worker = [&] {
    for (std::size_t i = next++; i < rows.size(); i = next++)
      rows[i] = run_level(pc, sol, block, spec.levels[i], cfg, dir / level_dir(spec.levels[i]));
  };
  std::size_t n = std::min<std::size_t>(static_cast<std::size_t>(spec.workers), rows.size());
  std::vector<std::jthread> pool;
  for (std::size_t t = 1; t < n; ++t)
    pool.emplace_back(worker);
  worker();
  return rows;
}

int cmd_partition(const RunContext &ctx, std::optional<std::size_t> k) {
  const auto &cfg = ctx.pc.config;
  std::size_t blocks = k.value_or(static_cast<std::size_t>(cfg.integer("partition.k_per_year", 8)));
  auto seed = static_cast<std::uint64_t>(cfg.integer("partition.seed", 7));
  auto sched = partition_blocks(ctx.pc, blocks, seed);
  write_block_schedule(sched, ctx.pc, ctx.out / "blocks");
  auto rep = partition_report(sched, ctx.pc);
  Json j = Json::array();
  for (const auto &y : rep.years)
    j.push_back({{"year", y.year},
                 {"blocks", y.blocks},
                 {"duration_sum", y.duration_sum},
                 {"max_relative_energy_error", y.max_relative_energy_error},
                 {"zero_cf_blocks", y.zero_cf_blocks},
                 {"within_sse", y.within_sse}});
  write_json(ctx.out / "blocks" / "partition_report.json", {{"k_per_year", blocks},
                                                             {"seed", seed},
                                                             {"years", j}});
  record_stage(ctx, "partition", "ok",
               {"blocks/blocks.csv", "blocks/assignment.csv", "blocks/partition_report.json"});
  return exit_ok;
}

int cmd_plan(const RunContext &ctx) {
  const auto dir = ctx.out / "plan";
  fs::create_directories(dir);
  auto sched = read_block_schedule(ctx.out / "blocks", ctx.pc);
  auto solver = SolverOptions::from_config(ctx.pc.config);
  std::ostringstream node_log;
  solver.log = &node_log;
  auto res = plan_expansion(ctx.pc, sched, solver, ExpansionOptions::from_config(ctx.pc.config));
  write_mps(res.spec, dir / "model.mps");
  write_file(dir / "node_log.txt", node_log.str());
  std::vector<std::string> outputs{"plan/model.mps", "plan/node_log.txt"};
  const std::string status(to_string(res.milp.status));
  if (!res.milp.has_incumbent) {
    write_json(dir / "status.json", {{"status", status}});
    outputs.push_back("plan/status.json");
    record_stage(ctx, "plan", status, outputs);
    fmt::print(stderr, "plan: solver finished with status {} and no solution\n", status);
    return exit_solver;
  }
  write_solution_json(ctx.pc, res.solution, ctx.hash, dir / "solution.json");
  auto audit = audit_solution(ctx.pc, sched, res.solution, 1e-6);
  Json fam = Json::array();
  for (const auto &f : audit.families)
    fam.push_back({{"family", f.name}, {"max_residual", f.max_residual}, {"worst", f.worst}});
  write_json(dir / "audit.json",
             {{"tolerance", audit.tol}, {"pass", audit.pass()}, {"families", fam}});
  std::vector<std::vector<std::string>> cost_rows;
  for (const auto &[name, value] : res.solution.cost.items())
    cost_rows.push_back({name, format_number(value)});
  write_csv(dir / "cost_breakdown.csv", {"item", "usd"}, cost_rows);
  write_pv_distribution(ctx.pc, res.solution, dir / "pv_distribution.csv");
  outputs.insert(outputs.end(), {"plan/solution.json", "plan/audit.json",
                                 "plan/cost_breakdown.csv", "plan/pv_distribution.csv"});
  record_stage(ctx, "plan", status, outputs);
  if (res.milp.status != MilpStatus::optimal) {
    fmt::print(stderr, "plan: solver stopped with status {}\n", status);
    return exit_solver;
  }
  if (!audit.pass()) {
    fmt::print(stderr, "plan: audit failed, max residual {}\n", audit.max_residual());
    return exit_internal;
  }
  return exit_ok;
}

int cmd_sweep(const RunContext &ctx, const std::optional<fs::path> &solution) {
  auto sched = read_block_schedule(ctx.out / "blocks", ctx.pc);
  const fs::path sol_path = solution.value_or(ctx.out / "plan" / "solution.json");
  auto [sol, hash] = read_solution_json(ctx.pc, sched, sol_path);
  if (hash != ctx.hash)
    throw InputError(sol_path.string(), 0,
                     fmt::format("solution was produced from bundle {}, not {}", hash, ctx.hash));
  auto spec = SweepSpec::from_config(ctx.pc);
  auto sim = SimConfig::from_config(ctx.pc.config);
  const auto dir = ctx.out / "sweep";
  auto rows = run_sweep(ctx.pc, sched, sol, spec, sim, dir);

  std::vector<std::vector<std::string>> table;
  std::vector<std::string> outputs;
  for (const auto &r : rows) {
    bool ok = r.status == "ok";
    auto num = [&](double v) { return ok ? format_number(v) : std::string(); };
    table.push_back({format_number(r.level), r.status, num(r.pv_share), num(r.stored_energy),
                     num(r.flat_max_deviation), ok ? (r.flat_pass ? "pass" : "fail") : "",
                     num(r.metrics.nadir), num(r.metrics.rocof), num(r.metrics.settling_time),
                     num(r.metrics.settling_frequency), format_number(r.shortfall_mw),
                     csv_safe(r.note)});
    if (ok)
      for (const char *f : {"scenario.json", "flat.csv", "trace.csv", "metrics.json"})
        outputs.push_back(fmt::format("sweep/{}/{}", level_dir(r.level), f));
  }
  write_csv(dir / "summary.csv",
            {"level", "status", "pv_share", "stored_energy_mws", "flat_max_deviation_hz",
             "flat_run", "nadir_hz", "rocof_mhz_per_s", "settling_time_s",
             "settling_frequency_hz", "shortfall_mw", "note"},
            table);
  outputs.insert(outputs.begin(), "sweep/summary.csv");
  record_stage(ctx, "sweep", "ok", outputs);
  return exit_ok;
}

int cmd_report(const fs::path &out) {
  const fs::path manifest_path = out / "manifest.json";
  if (!fs::exists(manifest_path)) {
    fmt::print(stderr, "report: {} not found\n", manifest_path.string());
    return exit_input;
  }
  Json m = Json::parse(read_file(manifest_path));
  std::string r = "# Run report\n\n## Run\n\n";
  r += fmt::format("- tool: {}\n", m.value("tool", std::string("?")));
  r += fmt::format("- bundle: {}\n", m.value("bundle", std::string("?")));
  r += fmt::format("- bundle hash: {}\n", m.value("bundle_hash", std::string("?")));
  if (m.contains("seeds"))
    for (const auto &[name, v] : m["seeds"].items())
      r += fmt::format("- seed ({}): {}\n", name, v.dump());
  if (m.contains("stages"))
    for (const auto &[name, st] : m["stages"].items())
      if (name != "report")
        r += fmt::format("- stage {}: {}\n", name, st.value("status", std::string("?")));

  auto section = [&](const std::string &title, const std::string &rel) {
    r += "\n## " + title + "\n\n";
    if (!fs::exists(out / rel)) {
      r += fmt::format("Incomplete: {} is missing.\n", rel);
      return std::optional<CsvTable>{};
    }
    auto t = CsvTable::read(out / rel);
    r += markdown_table(t);
    return std::optional<CsvTable>{t};
  };
  section("Cost breakdown", "plan/cost_breakdown.csv");
  section("PV distribution by region", "plan/pv_distribution.csv");
  if (auto sweep = section("Sweep summary", "sweep/summary.csv")) {
    std::vector<std::string> missing;
    for (std::size_t i = 0; i < sweep->rows(); ++i)
      if (sweep->text(i, "status") == "ok") {
        auto rel = fmt::format("sweep/{}/trace.csv", level_dir(sweep->number(i, "level")));
        if (!fs::exists(out / rel))
          missing.push_back(rel);
      }
    if (!missing.empty()) {
      r += "\nIncomplete: missing traces:\n";
      for (const auto &p : missing)
        r += "- " + p + "\n";
    }
  }
  write_file(out / "report.md", r);

  Json stages = m.contains("stages") ? m["stages"] : Json::object();
  stages["report"] = {{"status", "ok"}, {"outputs", {"report.md"}}};
  m["stages"] = stages;
  write_json(manifest_path, m);
  return exit_ok;
}

int cmd_run_all(const RunContext &ctx) {
  int code = cmd_partition(ctx);
  if (code == exit_ok)
    code = cmd_plan(ctx);
  if (code == exit_ok)
    code = cmd_sweep(ctx);
  int report = cmd_report(ctx.out);
  return code != exit_ok ? code : report;
}

} // namespace pvgrid
