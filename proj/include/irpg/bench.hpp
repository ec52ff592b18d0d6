#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "irpg/driver.hpp"

namespace irpg {

// m x n data matrix with standard-normal entries, then columns shifted and
// scaled to sample mean zero and sample standard deviation one (divisor
// m - 1). Deterministic per seed; see Rng for the pinned stream.
Matrix gen_data(int m, int n, std::uint64_t seed);

// Leading p right singular vectors of A.
StiefelPoint init_point(const Matrix& A, int p);

// 2 sigma_max(A)^2.
double default_L0(const Matrix& A);

// Fraction of entries with |x| < 1e-5 (retracted iterates carry roundoff, so
// exact zeros are thresholded the way sparse-PCA reports usually do).
double sparsity_fraction(const Matrix& X, double tol = 1e-5);

struct GridConfig {
  int n = 0, p = 0, m = 0;
  double lambda = 0.0;
};

struct ExperimentGrid {
  std::vector<int> n_values{256};
  std::vector<int> p_values{4};
  std::vector<int> m_values{20};
  std::vector<double> lambda_values{2.0};
  std::vector<std::uint64_t> seeds{1};
  std::vector<Variant> variants{Variant::G, Variant::U, Variant::L};
  int max_outer = 5000;
  std::string out_dir;
  bool write_traces = false;
};

struct ReportRow {
  int n = 0, p = 0, m = 0;
  double lambda = 0.0;
  std::uint64_t seed = 0;
  Variant variant = Variant::G;
  int iterations = 0;
  double seconds = 0.0;
  double final_F = 0.0;
  double final_sparsity = 0.0;
  RunStatus status = RunStatus::CapReached;
  bool flagged = false;  // variants disagreed beyond 1e-2 on this seed
};

// Paired-target protocol for one (config, seed): run G, feed its final F to
// U and L as the stopping target, flag the seed when any two final iterates
// differ by >= 1e-2 in Frobenius norm.
std::vector<ReportRow> run_cell(const GridConfig& gc, std::uint64_t seed,
                                const std::vector<Variant>& variants,
                                int max_outer, const std::string& trace_dir);

// Full grid; cells run on a worker pool (SPCA_BENCH_THREADS, default 1) and
// rows come back in deterministic order.
std::vector<ReportRow> run_grid(const ExperimentGrid& grid);

void write_report_csv(const std::string& path,
                      const std::vector<ReportRow>& rows);
std::vector<ReportRow> read_report_csv(const std::string& path);

// Per-config means over unflagged seeds (plus raw/filtered counts);
// serialized as CSV and JSON.
struct SummaryRow {
  int n = 0, p = 0, m = 0;
  double lambda = 0.0;
  Variant variant = Variant::G;
  int seeds_total = 0;
  int seeds_used = 0;  // after the agreement filter
  double mean_iterations = 0.0;
  double mean_seconds = 0.0;
  double mean_final_F = 0.0;
  double mean_sparsity = 0.0;
};
std::vector<SummaryRow> summarize(const std::vector<ReportRow>& rows);
void write_summary_csv(const std::string& path,
                       const std::vector<SummaryRow>& rows);
void write_summary_json(const std::string& path,
                        const std::vector<SummaryRow>& rows);

// Flat key=value grid file: n, p, m, lambda, seeds (comma lists or a..b
// ranges for seeds), variants (subset of G,U,L), max_outer, traces (0/1).
ExperimentGrid parse_grid_file(const std::string& path);

}  // namespace irpg
