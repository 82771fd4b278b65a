#include "contrastlab/harness/experiment.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <exception>
#include <limits>
#include <mutex>
#include <optional>
#include <thread>

#include "contrastlab/datagen.hpp"
#include "contrastlab/error.hpp"
#include "contrastlab/harness/report.hpp"
#include "contrastlab/harness/validate.hpp"
#include "contrastlab/metrics.hpp"
#include "contrastlab/optim.hpp"

namespace contrastlab::harness {

namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

// Sub-stream indices under a work item's seed.
enum Stream : std::uint64_t {
  kBasis = 0,
  kUnlabeled = 1,
  kTestTask = 2,
  kGdInit = 3,
  kGdMasks = 4,
  kProbe = 5,
  kTaskVectors = 6,
  kMixture = 7,
  kSourceTasks = 100,
};

struct Outcome {
  double sin_theta = kNaN;
  double excess = kNaN;
  double std_error = kNaN;
  double ms = 0.0;
  std::string status = "ok";
};

template <class F>
Outcome guarded(F&& body) {
  Outcome out;
  try {
    body(out);
  } catch (const Error& e) {
    out = Outcome{};
    out.status = std::string(to_string(e.kind()));
  } catch (const std::exception&) {
    out = Outcome{};
    out.status = "exception";
  }
  return out;
}

template <class F>
MatrixXd timed(bool timing, double& ms, F&& body) {
  const auto t0 = std::chrono::steady_clock::now();
  MatrixXd u = body();
  if (timing) {
    ms = std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - t0).count();
  }
  return u;
}

SpikedModel make_model(const ExperimentConfig& cfg, int d, Seed item_seed) {
  return SpikedModel(sample_uniform_orthobasis(d, cfg.r, derive_seed(item_seed, {kBasis})), cfg.nu,
                     cfg.noise_sigma(d));
}

TaskSpec haar_task(int r, Seed seed) {
  VectorXd w = sample_uniform_orthobasis(r, 1, seed).col(0);
  w /= w.norm();
  return TaskSpec(w, 0.0);
}

// Downstream excess risk of subspace u for the configured probe and test task.
// task_basis spans the directions a new task is drawn from under source-rule.
void score_regression(const ExperimentConfig& cfg, const SpikedModel& model, const MatrixXd& u,
                      Seed item_seed, Outcome& out, const MatrixXd& task_basis = MatrixXd()) {
  const TaskSpec base = haar_task(model.r(), derive_seed(item_seed, {kTestTask}));
  const TaskSpec task(base.w_star(), cfg.sigma_eps);
  if (cfg.probe == ProbeMode::Population) {
    RiskReport rep;
    if (cfg.test_task == TestTask::Haar) rep = regression_excess_risk(u, model, task);
    else if (cfg.test_task == TestTask::SourceRule && task_basis.size() > 0)
      rep = mean_regression_excess_risk(u, model, cfg.sigma_eps, task_basis);
    else rep = mean_regression_excess_risk(u, model, cfg.sigma_eps);
    out.excess = rep.excess_risk;
    out.std_error = rep.std_error;
    return;
  }
  // Least-squares probe on fresh labeled data, scored at the population level.
  const Seed probe_seed = derive_seed(item_seed, {kProbe});
  const SampleBatch batch = sample_spiked(model, cfg.probe_m, probe_seed);
  Rng noise_rng(derive_seed(probe_seed, {1}));
  VectorXd y = batch.z.transpose() * task.w_star() / model.nu();
  for (Eigen::Index i = 0; i < y.size(); ++i) y(i) += cfg.sigma_eps * noise_rng.normal();
  const MatrixXd feats = (u.transpose() * batch.x).transpose();
  const VectorXd w = feats.colPivHouseholderQr().solve(y);
  const double risk_star = regression_excess_risk(model.u_star(), model, task).absolute_risk;
  out.excess = probe_risk(u, w, model, task) - risk_star;
  out.std_error = 0.0;
}

MatrixXd top_basis(const SymTarget& t, int r, const EigenSolver& solver) {
  return top_r_eigenbasis(t, r, solver).basis;
}

MatrixXd gd_subspace(const ExperimentConfig& cfg, const MatrixXd& x, int r, Seed item_seed) {
  LossSpec spec;
  spec.kind = LossKind::SelfCon;
  spec.mask_policy = MaskPolicy::Resample;
  LossData data;
  data.x = x;
  GDConfig gd;
  gd.step_size = cfg.gd_step_scale * default_step_size(spec, data);
  gd.max_iters = cfg.gd_iters;
  gd.seed = derive_seed(item_seed, {kGdMasks});
  const MatrixXd init = default_init(r, static_cast<int>(x.rows()), derive_seed(item_seed, {kGdInit}));
  return row_space(minimize(spec, data, init, gd).w);
}

ResultRow base_row(const ExperimentConfig& cfg, SolverKind s, int grid, double value, int rep,
                   Seed seed) {
  ResultRow row;
  row.experiment = std::string(to_string(cfg.experiment));
  row.solver = std::string(to_string(s));
  row.sweep_var = cfg.sweep_variable();
  row.sweep_value = value;
  row.grid_index = grid;
  row.replicate = rep;
  row.seed = seed;
  return row;
}

void fill(ResultRow& row, const Outcome& o) {
  row.sin_theta_f = o.sin_theta;
  row.excess_risk = o.excess;
  row.std_error = o.std_error;
  row.wall_time_ms = o.ms;
  row.status = o.status;
}

std::vector<ResultRow> recovery_item(const ExperimentConfig& cfg, int grid, int rep,
                                     const EigenSolver& solver) {
  const bool sweep_d = cfg.experiment == ExperimentKind::RecoverSweepD;
  const int d = sweep_d ? cfg.d[grid] : cfg.d.front();
  const int n = sweep_d ? cfg.n.front() : cfg.n[grid];
  const double value = sweep_d ? d : n;
  const Seed seed = derive_seed(cfg.seed, {static_cast<std::uint64_t>(grid),
                                           static_cast<std::uint64_t>(rep)});
  std::vector<ResultRow> rows;
  std::optional<SpikedModel> model;
  MatrixXd x;
  std::string data_status = "ok";
  try {
    model.emplace(make_model(cfg, d, seed));
    x = sample_spiked(*model, n, derive_seed(seed, {kUnlabeled})).x;
  } catch (const Error& e) {
    data_status = std::string(to_string(e.kind()));
  }
  for (SolverKind s : cfg.solvers) {
    ResultRow row = base_row(cfg, s, grid, value, rep, seed);
    Outcome o;
    if (data_status != "ok") {
      o.status = data_status;
    } else {
      o = guarded([&](Outcome& out) {
        const MatrixXd u = timed(cfg.timing, out.ms, [&]() -> MatrixXd {
          switch (s) {
            case SolverKind::ClMasking: return top_basis(masking_expectation_matrix(x), cfg.r, solver);
            case SolverKind::Autoencoder: return top_basis(pca_matrix(x), cfg.r, solver);
            case SolverKind::MaskedAe: return top_basis(masked_ae_matrix(x), cfg.r, solver);
            case SolverKind::ClGd: return gd_subspace(cfg, x, cfg.r, seed);
            default: fail(ErrorKind::Config, "solver not valid in a recovery sweep");
          }
        });
        out.sin_theta = sin_theta(u, model->u_star()).value;
        score_regression(cfg, *model, u, seed, out);
      });
    }
    fill(row, o);
    rows.push_back(std::move(row));
  }
  return rows;
}

struct SourceTasks {
  std::vector<VectorXd> w;
  MatrixXd test_basis;  // a new task is uniform on the unit sphere of its span
};

// Source-task coefficient vectors: orthonormal for T < r, otherwise Haar
// unit vectors resampled until sum w w^T is well conditioned. A new task
// follows the same rule, so for T < r it is orthogonal to every source task.
SourceTasks source_tasks(int t, int r, Seed seed) {
  SourceTasks st;
  if (t < r) {
    const MatrixXd q = sample_uniform_orthobasis(r, r, seed);
    for (int i = 0; i < t; ++i) st.w.push_back(q.col(i));
    st.test_basis = q.rightCols(r - t);
    return st;
  }
  st.test_basis = MatrixXd::Identity(r, r);
  std::vector<VectorXd>& out = st.w;
  const double floor = 0.1;
  for (std::uint64_t attempt = 0;; ++attempt) {
    out.clear();
    MatrixXd gram = MatrixXd::Zero(r, r);
    for (int i = 0; i < t; ++i) {
      VectorXd w = sample_uniform_orthobasis(
          r, 1, derive_seed(seed, {attempt, static_cast<std::uint64_t>(i)})).col(0);
      w /= w.norm();
      gram += w * w.transpose();
      out.push_back(std::move(w));
    }
    Eigen::SelfAdjointEigenSolver<MatrixXd> es(gram, Eigen::EigenvaluesOnly);
    if (es.eigenvalues()(0) > floor || attempt >= 1000) return st;
  }
}

std::vector<std::vector<ResultRow>> transfer_item(const ExperimentConfig& cfg, int rep,
                                                  const EigenSolver& solver) {
  const int d = cfg.d.front();
  const int n = cfg.n.front();
  const int m = cfg.m.front();
  const Seed seed = derive_seed(cfg.seed, {0, static_cast<std::uint64_t>(rep)});
  const std::size_t grid = cfg.alpha_grid.size();
  std::vector<std::vector<ResultRow>> rows(grid);

  std::optional<SpikedModel> model;
  MatrixXd x;
  std::vector<LabeledTask> tasks;
  MatrixXd test_basis;
  std::string data_status = "ok";
  try {
    model.emplace(make_model(cfg, d, seed));
    x = sample_spiked(*model, n, derive_seed(seed, {kUnlabeled})).x;
    SourceTasks st = source_tasks(cfg.t, cfg.r, derive_seed(seed, {kTaskVectors}));
    const auto& ws = st.w;
    test_basis = std::move(st.test_basis);
    for (std::size_t i = 0; i < ws.size(); ++i) {
      const RegressionBatch b =
          sample_regression_task(*model, ws[i], m, derive_seed(seed, {kSourceTasks + i}));
      tasks.push_back(LabeledTask{b.x, b.y});
    }
  } catch (const Error& e) {
    data_status = std::string(to_string(e.kind()));
  }

  // The self-supervised target does not depend on alpha.
  std::optional<Outcome> self_outcome;
  for (std::size_t g = 0; g < grid; ++g) {
    const double log_alpha = cfg.alpha_grid[g];
    for (SolverKind s : cfg.solvers) {
      ResultRow row = base_row(cfg, s, static_cast<int>(g), log_alpha, rep, seed);
      Outcome o;
      if (data_status != "ok") {
        o.status = data_status;
      } else if (s == SolverKind::ClMasking && self_outcome) {
        o = *self_outcome;
      } else {
        o = guarded([&](Outcome& out) {
          const MatrixXd u = timed(cfg.timing, out.ms, [&]() -> MatrixXd {
            if (s == SolverKind::ClMasking) return top_basis(masking_expectation_matrix(x), cfg.r, solver);
            const std::vector<double> alpha(tasks.size(), std::exp(log_alpha));
            return top_basis(transfer_hybrid_matrix(x, tasks, alpha), cfg.r, solver);
          });
          out.sin_theta = sin_theta(u, model->u_star()).value;
          score_regression(cfg, *model, u, seed, out, test_basis);
        });
        if (s == SolverKind::ClMasking) self_outcome = o;
      }
      fill(row, o);
      rows[g].push_back(std::move(row));
    }
  }
  return rows;
}

std::vector<ResultRow> supcon_item(const ExperimentConfig& cfg, int grid, int rep,
                                   const EigenSolver& solver) {
  const int d = cfg.d.front();
  const int m = cfg.m[grid];
  const int k = cfg.r + 1;
  const Seed seed = derive_seed(cfg.seed, {static_cast<std::uint64_t>(grid),
                                           static_cast<std::uint64_t>(rep)});
  std::vector<ResultRow> rows;
  std::optional<MixtureModel> gmm;
  LabeledBatch batch;
  std::string data_status = "ok";
  try {
    gmm.emplace(make_mixture(d, cfg.r, cfg.nu, cfg.noise_sigma(d),
                             std::vector<double>(k, 1.0 / k), derive_seed(seed, {kMixture})));
    const std::vector<int> counts(k, m);
    batch = sample_mixture(*gmm, counts, derive_seed(seed, {kUnlabeled}));
  } catch (const Error& e) {
    data_status = std::string(to_string(e.kind()));
  }
  for (SolverKind s : cfg.solvers) {
    ResultRow row = base_row(cfg, s, grid, m, rep, seed);
    Outcome o;
    if (data_status != "ok") {
      o.status = data_status;
    } else {
      o = guarded([&](Outcome& out) {
        const MatrixXd u = timed(cfg.timing, out.ms, [&]() -> MatrixXd {
          switch (s) {
            case SolverKind::Supcon: {
              const std::vector<MatrixXd> blocks = batch.blocks();
              const std::vector<double> alpha(blocks.size(), 1.0);
              const MatrixXd none(d, 0);
              return top_basis(supcon_hybrid_matrix(none, blocks, alpha), cfg.r, solver);
            }
            case SolverKind::ClMasking: return top_basis(masking_expectation_matrix(batch.x), cfg.r, solver);
            case SolverKind::Autoencoder: return top_basis(pca_matrix(batch.x), cfg.r, solver);
            case SolverKind::MaskedAe: return top_basis(masked_ae_matrix(batch.x), cfg.r, solver);
            default: fail(ErrorKind::Config, "solver not valid in supcon-sweep-m");
          }
        });
        out.sin_theta = sin_theta(u, gmm->signal_basis()).value;
      });
    }
    fill(row, o);
    rows.push_back(std::move(row));
  }
  return rows;
}

}  // namespace

void parallel_for(int count, int threads, const std::function<void(int)>& fn) {
  if (count <= 0) return;
  int workers = threads > 0 ? threads : static_cast<int>(std::thread::hardware_concurrency());
  workers = std::clamp(workers, 1, count);
  if (workers == 1) {
    for (int i = 0; i < count; ++i) fn(i);
    return;
  }
  std::atomic<int> next{0};
  std::exception_ptr first_error;
  std::mutex error_mutex;
  std::vector<std::thread> pool;
  for (int w = 0; w < workers; ++w) {
    pool.emplace_back([&]() {
      for (int i = next.fetch_add(1); i < count; i = next.fetch_add(1)) {
        try {
          fn(i);
        } catch (...) {
          std::lock_guard<std::mutex> lock(error_mutex);
          if (!first_error) first_error = std::current_exception();
        }
      }
    });
  }
  for (std::thread& t : pool) t.join();
  if (first_error) std::rethrow_exception(first_error);
}

std::vector<ResultRow> run_experiment(const ExperimentConfig& cfg) {
  return run_experiment(cfg, EigenSolver(dense_top_r));
}

std::vector<ResultRow> run_experiment(const ExperimentConfig& cfg, const EigenSolver& solver) {
  cfg.validate();
  require(cfg.experiment != ExperimentKind::Validate, ErrorKind::Config,
          "validate is not a sweep; use validate_suite");
  const int reps = cfg.replicates;
  const int grid = static_cast<int>(cfg.sweep_values().size());
  // [grid][solver][replicate]
  std::vector<std::vector<std::vector<ResultRow>>> table(
      grid, std::vector<std::vector<ResultRow>>(cfg.solvers.size(), std::vector<ResultRow>(reps)));

  if (cfg.experiment == ExperimentKind::TransferSweepAlpha) {
    parallel_for(reps, cfg.threads, [&](int rep) {
      auto rows = transfer_item(cfg, rep, solver);
      for (int g = 0; g < grid; ++g)
        for (std::size_t s = 0; s < cfg.solvers.size(); ++s) table[g][s][rep] = std::move(rows[g][s]);
    });
  } else {
    parallel_for(grid * reps, cfg.threads, [&](int item) {
      const int g = item / reps;
      const int rep = item % reps;
      auto rows = cfg.experiment == ExperimentKind::SupconSweepM ? supcon_item(cfg, g, rep, solver)
                                                                 : recovery_item(cfg, g, rep, solver);
      for (std::size_t s = 0; s < cfg.solvers.size(); ++s) table[g][s][rep] = std::move(rows[s]);
    });
  }

  std::vector<ResultRow> out;
  out.reserve(static_cast<std::size_t>(grid) * cfg.solvers.size() * reps);
  for (auto& by_solver : table)
    for (auto& by_rep : by_solver)
      for (auto& row : by_rep) out.push_back(std::move(row));
  return out;
}

std::vector<ResultRow> run_and_write(const ExperimentConfig& cfg) {
  cfg.validate();
  // Fail on an unwritable destination before spending time on the sweep.
  write_outputs(cfg.out, cfg, {});
  std::vector<ResultRow> rows = run_experiment(cfg);
  write_outputs(cfg.out, cfg, rows);
  return rows;
}

}  // namespace contrastlab::harness
