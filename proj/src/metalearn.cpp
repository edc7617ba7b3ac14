#include "rmeta/metalearn.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>

#include <json.hpp>

#include "rmeta/errors.hpp"
#include "rmeta/param_vector.hpp"

namespace rmeta::meta {

std::vector<double> MetaState::eta_layers() const {
  std::vector<double> out(eta_u.size());
  for (std::size_t i = 0; i < eta_u.size(); ++i) out[i] = ad::softplus_scalar(eta_u[i]);
  return out;
}

MetaState init_meta_state(const harness::ExperimentConfig& cfg) {
  cfg.validate();
  MetaState st;
  st.cfg = cfg.model;
  st.params = model::init_mlp(cfg.model, Rng::child(cfg.seed, 0).next_u64(), cfg.init_scale);
  st.eta_u.assign(static_cast<std::size_t>(cfg.model.layer_count()),
                  ad::softplus_inv_scalar(cfg.inner_lr_init));

  st.adversary.kind = criteria::adversary_kind_for(cfg.criterion);
  st.adversary.r = cfg.r;
  if (st.adversary.kind == criteria::AdversaryKind::minimax) {
    // tau_u = 0: softmax gives the uniform distribution exactly
    st.adversary.tau_u_amp.assign(tasks::kAtomsPerAxis, 0.0);
    st.adversary.tau_u_phase.assign(tasks::kAtomsPerAxis, 0.0);
  } else if (st.adversary.kind == criteria::AdversaryKind::neyman_pearson) {
    // one multiplier per atom-pair bucket; softplus(lambda_u) = 1/batch
    const double init = ad::softplus_inv_scalar(1.0 / static_cast<double>(cfg.tasks_per_iter));
    st.adversary.lambda_u.assign(
        static_cast<std::size_t>(tasks::kAtomsPerAxis) * static_cast<std::size_t>(tasks::kAtomsPerAxis), init);
  }

  st.opt.mode = cfg.optimizer;
  st.opt.eta = cfg.eta;
  st.opt.eta_max = cfg.eta_adversary;
  st.opt.beta1 = cfg.beta1;
  st.opt.beta2 = cfg.beta2;
  st.opt.epsilon = cfg.epsilon;
  const std::size_t min_len = st.params.params.size() + st.eta_u.size();
  st.opt.init_moments(opt::PlayerSplit{min_len, st.adversary.flat_size()});
  return st;
}

namespace {

// Per-iteration cache of everything the criterion and the game optimizer
// need from one evaluated batch.
struct BatchCache {
  TrainingBatch batch;
  std::vector<EpisodeOutputs> outs;
  std::vector<double> losses;
  std::vector<double> layer_dots;  // [b * n_layers + l] = <query_grad, support_grad_sum> on layer l
};

struct OuterContext {
  const harness::ExperimentConfig& cfg;
  const ad::Layout& layout;
  std::size_t n_params;
  std::size_t n_layers;
  std::size_t adv_len;
  tasks::TaskRange range;
  tasks::AtomGrid grid;  // unused for bayes
};

TrainingBatch sample_with_logits(const harness::ExperimentConfig& cfg, const tasks::TaskRange& range,
                                 const tasks::AtomGrid& grid, std::span<const double> tau_u_amp,
                                 std::span<const double> tau_u_phase, std::int64_t iter) {
  TrainingBatch out;
  Rng rng = Rng::child(cfg.seed, 0x10000 + static_cast<std::uint64_t>(iter));
  for (int b = 0; b < cfg.tasks_per_iter; ++b) {
    tasks::TaskSpec task;
    if (cfg.criterion == criteria::Criterion::minimax) {
      if (cfg.adversarial_sampling) {
        const tasks::AtomDraw d = tasks::sample_adversarial_task(grid, tau_u_amp, tau_u_phase, rng);
        task = d.task;
        out.amp_idx.push_back(d.amp_index);
        out.phase_idx.push_back(d.phase_index);
      } else {
        // uniform proposal over the atom grid; tau enters only through the
        // importance weights so the estimator stays fully differentiable
        const int i = static_cast<int>(rng.next_u64() % tasks::kAtomsPerAxis);
        const int j = static_cast<int>(rng.next_u64() % tasks::kAtomsPerAxis);
        task = {grid.amp_atoms[static_cast<std::size_t>(i)], grid.phase_atoms[static_cast<std::size_t>(j)]};
        out.amp_idx.push_back(i);
        out.phase_idx.push_back(j);
      }
    } else {
      task = tasks::sample_task(range, rng);
      if (cfg.criterion == criteria::Criterion::neyman_pearson) {
        out.buckets.push_back(grid.bucket_index(task));
      }
    }
    out.episodes.push_back(tasks::make_episode(task, cfg.train_shots, cfg.query_size, rng));
  }
  return out;
}

void compute_layer_dots(const OuterContext& ctx, BatchCache& bc) {
  const std::size_t B = bc.outs.size();
  bc.layer_dots.assign(B * ctx.n_layers, 0.0);
  for (std::size_t b = 0; b < B; ++b) {
    const EpisodeOutputs& eo = bc.outs[b];
    for (std::size_t s = 0; s < ctx.layout.segment_count(); ++s) {
      const std::size_t l = static_cast<std::size_t>(ctx.layout.segment(s).layer);
      const std::size_t off = ctx.layout.offset(s);
      const std::size_t len = ctx.layout.segment(s).size();
      double acc = 0.0;
      for (std::size_t j = 0; j < len; ++j) acc += eo.query_grad[off + j] * eo.support_grad_sum[off + j];
      bc.layer_dots[b * ctx.n_layers + l] += acc;
    }
  }
}

// Criterion weights w_b = dR/dL_b for the current adversary values.
std::vector<double> loss_weights(const OuterContext& ctx, const BatchCache& bc, std::span<const double> alpha) {
  const std::size_t B = bc.losses.size();
  std::vector<double> w(B);
  switch (ctx.cfg.criterion) {
    case criteria::Criterion::bayes: {
      std::fill(w.begin(), w.end(), 1.0 / static_cast<double>(B));
      break;
    }
    case criteria::Criterion::minimax: {
      // two-factor product at the sampled atoms, self-normalized over the
      // batch; identical to softmax of the gathered logit sums
      std::vector<double> logits(B);
      for (std::size_t b = 0; b < B; ++b) {
        logits[b] = alpha[static_cast<std::size_t>(bc.batch.amp_idx[b])] +
                    alpha[tasks::kAtomsPerAxis + static_cast<std::size_t>(bc.batch.phase_idx[b])];
      }
      w = criteria::reparam_simplex(logits);
      break;
    }
    case criteria::Criterion::neyman_pearson: {
      const double unif = 1.0 / static_cast<double>(B);
      for (std::size_t b = 0; b < B; ++b) {
        w[b] = unif + ad::softplus_scalar(alpha[bc.batch.buckets[b]]);
      }
      break;
    }
  }
  return w;
}

double criterion_risk(const OuterContext& ctx, const BatchCache& bc, std::span<const double> alpha) {
  const std::size_t B = bc.losses.size();
  switch (ctx.cfg.criterion) {
    case criteria::Criterion::bayes: {
      const std::vector<double> prior(B, 1.0 / static_cast<double>(B));
      return criteria::bayes_risk(bc.losses, prior);
    }
    case criteria::Criterion::minimax: {
      std::vector<double> logits(B);
      for (std::size_t b = 0; b < B; ++b) {
        logits[b] = alpha[static_cast<std::size_t>(bc.batch.amp_idx[b])] +
                    alpha[tasks::kAtomsPerAxis + static_cast<std::size_t>(bc.batch.phase_idx[b])];
      }
      return criteria::minimax_risk(bc.losses, logits);
    }
    case criteria::Criterion::neyman_pearson: {
      std::vector<double> lam_u(B);
      for (std::size_t b = 0; b < B; ++b) lam_u[b] = alpha[bc.batch.buckets[b]];
      return criteria::np_risk(bc.losses, lam_u, ctx.cfg.r);
    }
  }
  return 0.0;
}

// First-order gradient of the criterion risk with respect to the minimizer
// block (model parameters followed by the unconstrained per-layer rates):
//   d/dtheta  = sum_b w_b * query_grad_b
//   d/deta_ul = -sigmoid(eta_ul) * sum_b w_b * <query_grad_b, support_grad_sum_b>_l
std::vector<double> assemble_min_grad(const OuterContext& ctx, const BatchCache& bc,
                                      std::span<const double> w, std::span<const double> min_flat) {
  std::vector<double> g(ctx.n_params + ctx.n_layers, 0.0);
  for (std::size_t b = 0; b < bc.outs.size(); ++b) {
    const double wb = w[b];
    const std::vector<double>& qg = bc.outs[b].query_grad;
    for (std::size_t p = 0; p < ctx.n_params; ++p) g[p] += wb * qg[p];
  }
  for (std::size_t l = 0; l < ctx.n_layers; ++l) {
    double acc = 0.0;
    for (std::size_t b = 0; b < bc.outs.size(); ++b) acc += w[b] * bc.layer_dots[b * ctx.n_layers + l];
    g[ctx.n_params + l] = -ad::sigmoid_scalar(min_flat[ctx.n_params + l]) * acc;
  }
  return g;
}

// Gradient of the criterion risk with respect to the full adversary vector,
// given batch losses. Nonzero only at the atoms/buckets the batch visited.
std::vector<double> assemble_adv_grad(const OuterContext& ctx, const BatchCache& bc,
                                      std::span<const double> losses, std::span<const double> alpha) {
  std::vector<double> g(ctx.adv_len, 0.0);
  const std::size_t B = losses.size();
  if (ctx.cfg.criterion == criteria::Criterion::minimax) {
    std::vector<double> logits(B);
    for (std::size_t b = 0; b < B; ++b) {
      logits[b] = alpha[static_cast<std::size_t>(bc.batch.amp_idx[b])] +
                  alpha[tasks::kAtomsPerAxis + static_cast<std::size_t>(bc.batch.phase_idx[b])];
    }
    const std::vector<double> w = criteria::reparam_simplex(logits);
    double risk = 0.0;
    for (std::size_t b = 0; b < B; ++b) risk += w[b] * losses[b];
    for (std::size_t b = 0; b < B; ++b) {
      const double gl = w[b] * (losses[b] - risk);
      g[static_cast<std::size_t>(bc.batch.amp_idx[b])] += gl;
      g[tasks::kAtomsPerAxis + static_cast<std::size_t>(bc.batch.phase_idx[b])] += gl;
    }
  } else if (ctx.cfg.criterion == criteria::Criterion::neyman_pearson) {
    for (std::size_t b = 0; b < B; ++b) {
      const std::size_t idx = bc.batch.buckets[b];
      g[idx] += ad::sigmoid_scalar(alpha[idx]) * (losses[b] - ctx.cfg.r);
    }
  }
  return g;
}

void model_from_flat(std::span<const double> min_flat, const OuterContext& ctx, model::ModelParams& params,
                     std::vector<double>& eta_layers) {
  std::copy_n(min_flat.begin(), ctx.n_params, params.params.values.begin());
  eta_layers.resize(ctx.n_layers);
  for (std::size_t l = 0; l < ctx.n_layers; ++l) {
    eta_layers[l] = ad::softplus_scalar(min_flat[ctx.n_params + l]);
  }
}

nlohmann::json adversary_summary(const OuterContext& ctx, std::span<const double> alpha) {
  nlohmann::json j = nlohmann::json::object();
  auto axis_summary = [](std::span<const double> tau_u) {
    const std::vector<double> p = criteria::reparam_simplex(tau_u);
    double mx = 0.0, ent = 0.0;
    std::size_t arg = 0;
    for (std::size_t i = 0; i < p.size(); ++i) {
      if (p[i] > mx) {
        mx = p[i];
        arg = i;
      }
      if (p[i] > 0.0) ent -= p[i] * std::log(p[i]);
    }
    return nlohmann::json{{"max", mx}, {"entropy", ent}, {"argmax", arg}};
  };
  if (ctx.cfg.criterion == criteria::Criterion::minimax) {
    j["tau_amp"] = axis_summary(alpha.subspan(0, tasks::kAtomsPerAxis));
    j["tau_phase"] = axis_summary(alpha.subspan(tasks::kAtomsPerAxis, tasks::kAtomsPerAxis));
  } else if (ctx.cfg.criterion == criteria::Criterion::neyman_pearson) {
    double mx = -std::numeric_limits<double>::infinity(), total = 0.0;
    std::size_t arg = 0;
    for (std::size_t i = 0; i < alpha.size(); ++i) {
      const double lam = ad::softplus_scalar(alpha[i]);
      total += lam;
      if (lam > mx) {
        mx = lam;
        arg = i;
      }
    }
    j["lambda"] = {{"max", mx}, {"sum", total}, {"argmax", arg}};
  }
  return j;
}

}  // namespace

TrainingBatch training_batch(const harness::ExperimentConfig& cfg, const criteria::AdversaryParams& adversary,
                             std::int64_t iter) {
  const tasks::TaskRange range = tasks::train_range(cfg.distribution);
  tasks::AtomGrid grid;
  if (cfg.criterion != criteria::Criterion::bayes) grid = tasks::AtomGrid::over(range);
  return sample_with_logits(cfg, range, grid, adversary.tau_u_amp, adversary.tau_u_phase, iter);
}

MetaTrainResult meta_train(const harness::ExperimentConfig& cfg) {
  cfg.validate();
  MetaState st = init_meta_state(cfg);

  OuterContext ctx{cfg,
                   *st.params.params.layout,
                   st.params.params.size(),
                   st.eta_u.size(),
                   st.adversary.flat_size(),
                   tasks::train_range(cfg.distribution),
                   {}};
  if (cfg.criterion != criteria::Criterion::bayes) {
    ctx.grid = tasks::AtomGrid::over(ctx.range);
  }

  std::vector<double> min_flat(ctx.n_params + ctx.n_layers);
  std::copy(st.params.params.values.begin(), st.params.params.values.end(), min_flat.begin());
  std::copy(st.eta_u.begin(), st.eta_u.end(), min_flat.begin() + static_cast<std::ptrdiff_t>(ctx.n_params));
  std::vector<double> alpha_flat;
  st.adversary.to_flat(alpha_flat);

  MetaTrainResult result;
  TrainLog& log = result.log;

  model::ModelParams work_params = st.params;  // reused value buffer
  std::vector<double> eta_layers;
  BatchCache bc;
  const std::size_t B = static_cast<std::size_t>(cfg.tasks_per_iter);

  for (std::int64_t iter = 0; iter < cfg.iterations; ++iter) {
    model_from_flat(min_flat, ctx, work_params, eta_layers);
    {
      const std::span<const double> al(alpha_flat);
      bc.batch = cfg.criterion == criteria::Criterion::minimax
                     ? sample_with_logits(cfg, ctx.range, ctx.grid, al.subspan(0, tasks::kAtomsPerAxis),
                                          al.subspan(tasks::kAtomsPerAxis, tasks::kAtomsPerAxis), iter)
                     : sample_with_logits(cfg, ctx.range, ctx.grid, {}, {}, iter);
    }
    try {
      eval_batch(work_params, cfg.model, eta_layers, bc.batch.episodes, cfg.inner_steps, /*want_grads=*/true,
                 bc.outs, cfg.exec);
    } catch (const NonFiniteError& e) {
      throw NonFiniteError(std::string(e.what()) + " (outer iteration " + std::to_string(iter) + ")", iter);
    }

    bc.losses.resize(B);
    for (std::size_t b = 0; b < B; ++b) bc.losses[b] = bc.outs[b].query_loss;
    compute_layer_dots(ctx, bc);

    const double risk = criterion_risk(ctx, bc, alpha_flat);
    if (!std::isfinite(risk)) {
      throw NonFiniteError("non-finite " + criteria::to_string(cfg.criterion) + " risk at iteration " +
                               std::to_string(iter),
                           iter);
    }

    const std::vector<double> w = loss_weights(ctx, bc, alpha_flat);
    std::vector<double> g_min = assemble_min_grad(ctx, bc, w, min_flat);

    if (cfg.optimizer == opt::OptMode::adam) {
      opt::adam_step(st.opt, g_min, min_flat);
    } else {
      std::vector<double> g_max = assemble_adv_grad(ctx, bc, bc.losses, alpha_flat);
      opt::GameFunction game;
      game.grads = [&](std::span<const double>, std::span<const double>) {
        return opt::GameGrads{g_min, g_max};
      };
      game.hvps = [&](std::span<const double> th, std::span<const double> al,
                      const opt::GameGrads& g) {
        opt::GameHvps h;
        const double sqrt_eps = std::sqrt(std::numeric_limits<double>::epsilon());

        // D2_{theta,alpha} R . grad_alpha R: the adversary enters the risk
        // only through the loss weights, so perturbing it just reweights the
        // cached per-episode gradients.
        h.cross_min.assign(ctx.n_params + ctx.n_layers, 0.0);
        const double v_inf = ad::max_abs(g.maximizer);
        if (v_inf > 0.0) {
          const double eps1 = sqrt_eps * (1.0 + ad::max_abs(al)) / v_inf;
          std::vector<double> shifted(al.begin(), al.end());
          for (std::size_t i = 0; i < shifted.size(); ++i) shifted[i] += eps1 * g.maximizer[i];
          const std::vector<double> wp = loss_weights(ctx, bc, shifted);
          for (std::size_t i = 0; i < shifted.size(); ++i) shifted[i] -= 2.0 * eps1 * g.maximizer[i];
          const std::vector<double> wm = loss_weights(ctx, bc, shifted);
          const std::vector<double> gp = assemble_min_grad(ctx, bc, wp, th);
          const std::vector<double> gm = assemble_min_grad(ctx, bc, wm, th);
          for (std::size_t i = 0; i < h.cross_min.size(); ++i) {
            h.cross_min[i] = (gp[i] - gm[i]) / (2.0 * eps1);
          }
        }

        // D2_{alpha,theta} R . grad_theta R: re-evaluate the batch losses at
        // the perturbed model/rates and differentiate the adversary there.
        h.cross_max.assign(ctx.adv_len, 0.0);
        const double u_inf = ad::max_abs(g.minimizer);
        if (u_inf > 0.0) {
          const double eps2 = sqrt_eps * (1.0 + ad::max_abs(th)) / u_inf;
          std::vector<double> pert(th.begin(), th.end());
          std::vector<double> losses2(B);
          std::vector<EpisodeOutputs> outs2;
          std::vector<double> eta2;
          std::array<std::vector<double>, 2> adv_grads;
          for (int sgn = 0; sgn < 2; ++sgn) {
            const double s = sgn == 0 ? eps2 : -eps2;
            for (std::size_t i = 0; i < pert.size(); ++i) pert[i] = th[i] + s * g.minimizer[i];
            model_from_flat(pert, ctx, work_params, eta2);
            eval_batch(work_params, cfg.model, eta2, bc.batch.episodes, cfg.inner_steps, /*want_grads=*/false,
                       outs2, cfg.exec);
            for (std::size_t b = 0; b < B; ++b) losses2[b] = outs2[b].query_loss;
            adv_grads[static_cast<std::size_t>(sgn)] = assemble_adv_grad(ctx, bc, losses2, al);
          }
          for (std::size_t i = 0; i < ctx.adv_len; ++i) {
            h.cross_max[i] = (adv_grads[0][i] - adv_grads[1][i]) / (2.0 * eps2);
          }
          model_from_flat(th, ctx, work_params, eta2);  // restore scratch params
        }
        return h;
      };
      try {
        opt::game_step(game, st.opt, min_flat, alpha_flat);
      } catch (const NonFiniteError& e) {
        throw NonFiniteError(std::string(e.what()) + " (outer iteration " + std::to_string(iter) + ")", iter);
      }
    }

    st.iteration = iter + 1;

    criteria::RiskReport report;
    report.aggregate = risk;
    report.per_task_losses = bc.losses;
    for (std::size_t b = 0; b < B; ++b) {
      if (cfg.criterion == criteria::Criterion::minimax) {
        report.task_ids.push_back(std::to_string(bc.batch.amp_idx[b]) + ":" + std::to_string(bc.batch.phase_idx[b]));
      } else if (cfg.criterion == criteria::Criterion::neyman_pearson) {
        report.task_ids.push_back(std::to_string(bc.batch.buckets[b]));
      } else {
        report.task_ids.push_back("t" + std::to_string(b));
      }
    }
    if (cfg.criterion == criteria::Criterion::minimax) {
      report.constrained_values = w;  // batch softmax weights
    } else if (cfg.criterion == criteria::Criterion::neyman_pearson) {
      for (std::size_t b = 0; b < B; ++b) {
        report.constrained_values.push_back(ad::softplus_scalar(alpha_flat[bc.batch.buckets[b]]));
      }
    }

    nlohmann::json line = nlohmann::json::parse(report.to_json());
    line["iteration"] = iter;
    line["adversary"] = adversary_summary(ctx, alpha_flat);
    line["eta_layers"] = eta_layers;
    if (cfg.log_preadapt) {
      model_from_flat(min_flat, ctx, work_params, eta_layers);
      double acc = 0.0;
      for (const tasks::Episode& ep : bc.batch.episodes) {
        acc += model::mse(model::predict(work_params, cfg.model, ep.query_x), ep.query_y);
      }
      const double pre = acc / static_cast<double>(B);
      line["preadapt_mse"] = pre;
      log.preadapt_by_iter.push_back(pre);
    }
    log.risk_by_iter.push_back(risk);
    log.json_lines.push_back(line.dump());
  }

  std::copy_n(min_flat.begin(), ctx.n_params, st.params.params.values.begin());
  std::copy(min_flat.begin() + static_cast<std::ptrdiff_t>(ctx.n_params), min_flat.end(), st.eta_u.begin());
  st.adversary.from_flat(alpha_flat);
  result.state = std::move(st);
  return result;
}

AdaptationCurve evaluate_fast_adaptation(const MetaState& state, const tasks::TaskRange& eval_range, int k,
                                         int n_tasks, std::uint64_t seed, ExecMode mode,
                                         std::vector<double>* std_by_step) {
  if (n_tasks < 1) throw ConfigError("evaluate_fast_adaptation: n_tasks must be >= 1");
  if (k < 0) throw ConfigError("evaluate_fast_adaptation: k must be >= 0");

  Rng rng = Rng::child(seed, 0xEA51);
  std::vector<tasks::Episode> episodes;
  episodes.reserve(static_cast<std::size_t>(n_tasks));
  for (int t = 0; t < n_tasks; ++t) {
    const tasks::TaskSpec task = tasks::sample_task(eval_range, rng);
    episodes.push_back(tasks::make_episode(task, k, 100, rng));
  }

  std::vector<std::vector<double>> curves;
  curve_batch(state.params, state.cfg, state.eta_layers(), episodes, kCurveSteps, curves, mode);

  AdaptationCurve out;
  out.k = k;
  out.n_tasks = n_tasks;
  out.mse_by_step.assign(kCurveSteps, 0.0);
  for (const std::vector<double>& c : curves) {
    for (int s = 0; s < kCurveSteps; ++s) out.mse_by_step[static_cast<std::size_t>(s)] += c[static_cast<std::size_t>(s)];
  }
  for (double& v : out.mse_by_step) v /= static_cast<double>(n_tasks);

  if (std_by_step) {
    std_by_step->assign(kCurveSteps, 0.0);
    for (const std::vector<double>& c : curves) {
      for (int s = 0; s < kCurveSteps; ++s) {
        const double d = c[static_cast<std::size_t>(s)] - out.mse_by_step[static_cast<std::size_t>(s)];
        (*std_by_step)[static_cast<std::size_t>(s)] += d * d;
      }
    }
    for (double& v : *std_by_step) v = std::sqrt(v / static_cast<double>(n_tasks));
  }
  return out;
}

}  // namespace rmeta::meta
