#include "irpg/bench.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <map>
#include <sstream>
#include <stdexcept>
#include <thread>
#include <tuple>

#include <Eigen/SVD>
#include <json.hpp>

#include "irpg/rng.hpp"

namespace irpg {

Matrix gen_data(int m, int n, std::uint64_t seed) {
  if (m < 2) throw std::invalid_argument("gen_data: need m >= 2");
  if (n < 1) throw std::invalid_argument("gen_data: need n >= 1");
  Rng rng(seed);
  Matrix A = rng.normal_matrix(m, n);
  for (int j = 0; j < n; ++j) {
    const double mean = A.col(j).mean();
    A.col(j).array() -= mean;
    const double sd = std::sqrt(A.col(j).squaredNorm() / (m - 1));
    if (sd == 0.0) throw std::runtime_error("gen_data: degenerate column");
    A.col(j) /= sd;
  }
  return A;
}

StiefelPoint init_point(const Matrix& A, int p) {
  const int n = static_cast<int>(A.cols());
  const int m = static_cast<int>(A.rows());
  if (p > std::min(m, n))
    throw std::invalid_argument("init_point: p exceeds rank bound");
  Eigen::BDCSVD<Matrix> svd(A, Eigen::ComputeThinV);
  Matrix V = svd.matrixV().leftCols(p);
  return StiefelPoint(std::move(V));
}

double default_L0(const Matrix& A) {
  Eigen::BDCSVD<Matrix> svd(A);
  const double s = svd.singularValues()(0);
  return 2.0 * s * s;
}

double sparsity_fraction(const Matrix& X, double tol) {
  const auto zeros =
      (X.array().abs() < tol).cast<double>().sum();
  return zeros / static_cast<double>(X.size());
}

std::vector<ReportRow> run_cell(const GridConfig& gc, std::uint64_t seed,
                                const std::vector<Variant>& variants,
                                int max_outer, const std::string& trace_dir) {
  const Matrix A = gen_data(gc.m, gc.n, seed);
  const StiefelPoint x0 = init_point(A, gc.p);
  CompositeProblem pb = make_spca_problem(A, gc.p, gc.lambda);
  SolverConfig cfg = make_config(default_L0(A));
  cfg.max_outer = max_outer;

  auto trace_path = [&](Variant v) {
    std::ostringstream os;
    os << trace_dir << "/trace_n" << gc.n << "_p" << gc.p << "_m" << gc.m
       << "_l" << gc.lambda << "_s" << seed << "_" << to_string(v) << ".csv";
    return os.str();
  };

  std::vector<ReportRow> rows;
  std::vector<Matrix> finals;
  double target = std::numeric_limits<double>::quiet_NaN();

  // G first; its final objective becomes the target of U and L.
  std::vector<Variant> order;
  if (std::find(variants.begin(), variants.end(), Variant::G) !=
      variants.end())
    order.push_back(Variant::G);
  for (Variant v : variants)
    if (v != Variant::G) order.push_back(v);

  for (Variant v : order) {
    RunTrace tr = irpg_run(pb, x0, cfg, make_policy(v),
                           v == Variant::G
                               ? std::numeric_limits<double>::quiet_NaN()
                               : target);
    if (v == Variant::G && !tr.rows.empty())
      target = tr.rows.back().F_after;

    ReportRow row;
    row.n = gc.n;
    row.p = gc.p;
    row.m = gc.m;
    row.lambda = gc.lambda;
    row.seed = seed;
    row.variant = v;
    row.iterations = static_cast<int>(tr.rows.size());
    row.seconds = tr.rows.empty() ? 0.0 : tr.rows.back().seconds;
    row.final_F = tr.rows.empty() ? pb.F(x0.matrix()) : tr.rows.back().F_after;
    row.final_sparsity =
        sparsity_fraction(tr.final_X.size() ? tr.final_X : x0.matrix());
    row.status = tr.status;
    rows.push_back(row);
    finals.push_back(tr.final_X.size() ? tr.final_X : x0.matrix());

    if (!trace_dir.empty()) write_trace_csv(trace_path(v), tr);
  }

  // Figure-caption agreement rule: flag the whole seed when any pair of
  // variant solutions differs by >= 1e-2.
  bool flag = false;
  for (size_t i = 0; i < finals.size(); ++i)
    for (size_t j = i + 1; j < finals.size(); ++j)
      if ((finals[i] - finals[j]).norm() >= 1e-2) flag = true;
  for (auto& r : rows) r.flagged = flag;
  return rows;
}

std::vector<ReportRow> run_grid(const ExperimentGrid& grid) {
  struct Cell {
    GridConfig gc;
    std::uint64_t seed;
  };
  std::vector<Cell> cells;
  for (int n : grid.n_values)
    for (int p : grid.p_values)
      for (int m : grid.m_values)
        for (double lambda : grid.lambda_values)
          for (std::uint64_t s : grid.seeds)
            cells.push_back({GridConfig{n, p, m, lambda}, s});

  std::string trace_dir;
  if (grid.write_traces && !grid.out_dir.empty()) {
    trace_dir = grid.out_dir;
    std::filesystem::create_directories(trace_dir);
  }

  int threads = 1;
  if (const char* env = std::getenv("SPCA_BENCH_THREADS")) {
    threads = std::max(1, std::atoi(env));
  }
  threads = std::min<int>(threads, static_cast<int>(cells.size()));

  std::vector<std::vector<ReportRow>> results(cells.size());
  std::atomic<size_t> next{0};
  auto worker = [&] {
    while (true) {
      const size_t i = next.fetch_add(1);
      if (i >= cells.size()) return;
      results[i] = run_cell(cells[i].gc, cells[i].seed, grid.variants,
                            grid.max_outer, trace_dir);
    }
  };
  if (threads <= 1) {
    worker();
  } else {
    std::vector<std::thread> pool;
    for (int t = 0; t < threads; ++t) pool.emplace_back(worker);
    for (auto& t : pool) t.join();
  }

  std::vector<ReportRow> rows;
  for (auto& r : results) rows.insert(rows.end(), r.begin(), r.end());
  return rows;
}

namespace {

const char* kReportHeader =
    "n,p,m,lambda,seed,variant,iterations,seconds,final_F,final_sparsity,"
    "status,flagged";

}  // namespace

void write_report_csv(const std::string& path,
                      const std::vector<ReportRow>& rows) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot open report file: " + path);
  out << kReportHeader << "\n";
  char buf[512];
  for (const auto& r : rows) {
    std::snprintf(buf, sizeof(buf),
                  "%d,%d,%d,%.17g,%llu,%s,%d,%.6f,%.17g,%.17g,%s,%d\n", r.n,
                  r.p, r.m, r.lambda,
                  static_cast<unsigned long long>(r.seed),
                  to_string(r.variant).c_str(), r.iterations, r.seconds,
                  r.final_F, r.final_sparsity, to_string(r.status).c_str(),
                  r.flagged ? 1 : 0);
    out << buf;
  }
}

std::vector<ReportRow> read_report_csv(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open report file: " + path);
  std::string line;
  if (!std::getline(in, line) || line != kReportHeader)
    throw std::runtime_error("unexpected report header in " + path);
  std::vector<ReportRow> rows;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    std::istringstream is(line);
    std::string cell;
    auto next_cell = [&] {
      if (!std::getline(is, cell, ','))
        throw std::runtime_error("short report row in " + path);
      return cell;
    };
    ReportRow r;
    r.n = std::stoi(next_cell());
    r.p = std::stoi(next_cell());
    r.m = std::stoi(next_cell());
    r.lambda = std::stod(next_cell());
    r.seed = std::stoull(next_cell());
    const std::string v = next_cell();
    r.variant = v == "G" ? Variant::G : (v == "U" ? Variant::U : Variant::L);
    r.iterations = std::stoi(next_cell());
    r.seconds = std::stod(next_cell());
    r.final_F = std::stod(next_cell());
    r.final_sparsity = std::stod(next_cell());
    const std::string st = next_cell();
    r.status = st == "converged"
                   ? RunStatus::Converged
                   : st == "target-reached"
                         ? RunStatus::TargetReached
                         : st == "cap-reached" ? RunStatus::CapReached
                                               : RunStatus::EscalationFailed;
    r.flagged = std::stoi(next_cell()) != 0;
    rows.push_back(r);
  }
  return rows;
}

std::vector<SummaryRow> summarize(const std::vector<ReportRow>& rows) {
  struct Key {
    int n, p, m;
    double lambda;
    Variant v;
    bool operator<(const Key& o) const {
      return std::tie(n, p, m, lambda, v) <
             std::tie(o.n, o.p, o.m, o.lambda, o.v);
    }
  };
  std::map<Key, std::vector<const ReportRow*>> groups;
  for (const auto& r : rows)
    groups[Key{r.n, r.p, r.m, r.lambda, r.variant}].push_back(&r);

  std::vector<SummaryRow> out;
  for (const auto& [key, rs] : groups) {
    SummaryRow s;
    s.n = key.n;
    s.p = key.p;
    s.m = key.m;
    s.lambda = key.lambda;
    s.variant = key.v;
    s.seeds_total = static_cast<int>(rs.size());
    double it = 0, sec = 0, ff = 0, sp = 0;
    for (const auto* r : rs) {
      if (r->flagged) continue;
      ++s.seeds_used;
      it += r->iterations;
      sec += r->seconds;
      ff += r->final_F;
      sp += r->final_sparsity;
    }
    if (s.seeds_used > 0) {
      s.mean_iterations = it / s.seeds_used;
      s.mean_seconds = sec / s.seeds_used;
      s.mean_final_F = ff / s.seeds_used;
      s.mean_sparsity = sp / s.seeds_used;
    }
    out.push_back(s);
  }
  return out;
}

void write_summary_csv(const std::string& path,
                       const std::vector<SummaryRow>& rows) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot open summary file: " + path);
  out << "n,p,m,lambda,variant,seeds_total,seeds_used,mean_iterations,"
         "mean_seconds,mean_final_F,mean_sparsity\n";
  char buf[512];
  for (const auto& s : rows) {
    std::snprintf(buf, sizeof(buf),
                  "%d,%d,%d,%.17g,%s,%d,%d,%.6f,%.6f,%.17g,%.6f\n", s.n, s.p,
                  s.m, s.lambda, to_string(s.variant).c_str(), s.seeds_total,
                  s.seeds_used, s.mean_iterations, s.mean_seconds,
                  s.mean_final_F, s.mean_sparsity);
    out << buf;
  }
}

void write_summary_json(const std::string& path,
                        const std::vector<SummaryRow>& rows) {
  nlohmann::json j = nlohmann::json::array();
  for (const auto& s : rows) {
    j.push_back({{"n", s.n},
                 {"p", s.p},
                 {"m", s.m},
                 {"lambda", s.lambda},
                 {"variant", to_string(s.variant)},
                 {"seeds_total", s.seeds_total},
                 {"seeds_used", s.seeds_used},
                 {"mean_iterations", s.mean_iterations},
                 {"mean_seconds", s.mean_seconds},
                 {"mean_final_F", s.mean_final_F},
                 {"mean_sparsity", s.mean_sparsity}});
  }
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot open summary file: " + path);
  out << j.dump(2) << "\n";
}

ExperimentGrid parse_grid_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open grid file: " + path);
  ExperimentGrid g;
  std::string line;
  auto parse_ints = [](const std::string& s) {
    std::vector<int> out;
    std::istringstream is(s);
    std::string tok;
    while (std::getline(is, tok, ',')) out.push_back(std::stoi(tok));
    return out;
  };
  auto parse_doubles = [](const std::string& s) {
    std::vector<double> out;
    std::istringstream is(s);
    std::string tok;
    while (std::getline(is, tok, ',')) out.push_back(std::stod(tok));
    return out;
  };
  while (std::getline(in, line)) {
    if (line.empty() || line[0] == '#') continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos)
      throw std::runtime_error("bad grid line: " + line);
    const std::string key = line.substr(0, eq);
    const std::string val = line.substr(eq + 1);
    if (key == "n") {
      g.n_values = parse_ints(val);
    } else if (key == "p") {
      g.p_values = parse_ints(val);
    } else if (key == "m") {
      g.m_values = parse_ints(val);
    } else if (key == "lambda") {
      g.lambda_values = parse_doubles(val);
    } else if (key == "seeds") {
      g.seeds.clear();
      const auto dots = val.find("..");
      if (dots != std::string::npos) {
        const std::uint64_t a = std::stoull(val.substr(0, dots));
        const std::uint64_t b = std::stoull(val.substr(dots + 2));
        for (std::uint64_t s = a; s <= b; ++s) g.seeds.push_back(s);
      } else {
        std::istringstream is(val);
        std::string tok;
        while (std::getline(is, tok, ',')) g.seeds.push_back(std::stoull(tok));
      }
    } else if (key == "variants") {
      g.variants.clear();
      std::istringstream is(val);
      std::string tok;
      while (std::getline(is, tok, ',')) {
        if (tok == "G") g.variants.push_back(Variant::G);
        else if (tok == "U") g.variants.push_back(Variant::U);
        else if (tok == "L") g.variants.push_back(Variant::L);
        else throw std::runtime_error("unknown variant: " + tok);
      }
    } else if (key == "max_outer") {
      g.max_outer = std::stoi(val);
    } else if (key == "traces") {
      g.write_traces = std::stoi(val) != 0;
    } else if (key == "out_dir") {
      g.out_dir = val;
    } else {
      throw std::runtime_error("unknown grid key: " + key);
    }
  }
  return g;
}

}  // namespace irpg
