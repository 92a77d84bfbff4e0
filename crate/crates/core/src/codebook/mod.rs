//! AAP codebook design: successive convex approximation over the
//! max-min-distance program, with a GA baseline for comparison.

pub mod ga;
pub mod problem;
pub mod solver;

pub use ga::{design_ga, GaParams};
pub use problem::{build_distance_problem, DistanceProblem, SymMat, EPS_LOWER};
pub use solver::solve_sca_subproblem;

use crate::channel::ChannelRealization;
use crate::config::SystemConfig;
use crate::error::Result;
use crate::modem::{AapCodebook, Constellation};

/// Per-iteration record of an SCA run.
#[derive(Debug, Clone)]
pub struct ScaTrace {
    /// Subproblem optimum per iteration, scaled distance units; nondecreasing.
    pub tau_per_iter: Vec<f64>,
    pub iterations: usize,
    pub converged: bool,
}

/// Relative tau change below which the SCA loop stops.
pub const SCA_REL_TOL: f64 = 1e-4;
/// Iteration cap; non-convergence returns the best iterate with
/// `converged = false`.
pub const SCA_MAX_ITERS: usize = 100;

/// Reshape a stacked AL-vector into an L x A codebook.
fn reshape(a: &[f64], l: usize, a_order: usize) -> AapCodebook {
    let columns = (0..a_order)
        .map(|k| a[k * l..(k + 1) * l].to_vec())
        .collect();
    AapCodebook::new(columns).expect("dimensions are consistent by construction")
}

/// Feasible start with distinct per-column amplitude levels spread over the
/// box. Identical columns are a stationary point of the objective (their
/// pairwise distance and its gradient both vanish), so the start must break
/// that symmetry; columns are then shrunk toward the lower corner where the
/// power budget requires it.
fn initial_point(problem: &DistanceProblem) -> Vec<f64> {
    let l = problem.l_groups;
    let mut a = vec![0.0; problem.dim()];
    for k in 0..problem.a_order {
        let frac = (k + 1) as f64 / problem.a_order as f64;
        let level = problem.lower + frac * (problem.upper - problem.lower);
        for i in 0..l {
            a[k * l + i] = level;
        }
    }
    ga::repair(problem, &mut a);
    a
}

/// Design the codebook by SCA on the given channel realization.
pub fn design_codebook_sca(
    chan: &ChannelRealization,
    constellation: &Constellation,
    cfg: &SystemConfig,
) -> Result<(AapCodebook, ScaTrace)> {
    let problem = build_distance_problem(&chan.h, &chan.p, constellation, cfg)?;
    design_codebook_sca_on_problem(&problem)
}

/// SCA loop over a pre-built problem (used directly by tests and by the
/// MIMO proxy design).
pub fn design_codebook_sca_on_problem(
    problem: &DistanceProblem,
) -> Result<(AapCodebook, ScaTrace)> {
    let mut a = initial_point(problem);
    let mut tau_per_iter: Vec<f64> = Vec::new();
    let mut converged = false;
    for _ in 0..SCA_MAX_ITERS {
        let (a_next, tau) = solve_sca_subproblem(problem, &a)?;
        a = a_next;
        if let Some(&prev) = tau_per_iter.last() {
            if (tau - prev).abs() / f64::max(1.0, prev.abs()) < SCA_REL_TOL {
                tau_per_iter.push(tau);
                converged = true;
                break;
            }
        }
        tau_per_iter.push(tau);
    }
    let iterations = tau_per_iter.len();
    Ok((
        reshape(&a, problem.l_groups, problem.a_order),
        ScaTrace { tau_per_iter, iterations, converged },
    ))
}

/// GA-designed codebook over the same objective and constraints.
pub fn design_codebook_ga(
    chan: &ChannelRealization,
    constellation: &Constellation,
    cfg: &SystemConfig,
    params: &GaParams,
    rng: &mut impl rand::Rng,
) -> Result<AapCodebook> {
    let problem = build_distance_problem(&chan.h, &chan.p, constellation, cfg)?;
    let a = design_ga(&problem, params, rng)?;
    Ok(reshape(&a, problem.l_groups, problem.a_order))
}

/// Minimum pairwise squared distance of a codebook on a channel, computed
/// directly from the receive points (independent of the quadratic forms).
pub fn min_pairwise_distance(
    codebook: &AapCodebook,
    h: &[f64],
    constellation: &Constellation,
) -> f64 {
    let mut points = Vec::new();
    for col in &codebook.columns {
        let gain: f64 = h.iter().zip(col).map(|(hl, al)| hl * al).sum();
        for s in &constellation.points {
            points.push(gain * s);
        }
    }
    let mut min = f64::INFINITY;
    for i in 0..points.len() {
        for j in (i + 1)..points.len() {
            min = min.min((points[i] - points[j]).norm_sqr());
        }
    }
    min
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::stream;

    fn normalized_cfg() -> SystemConfig {
        let mut cfg = SystemConfig::reference();
        cfg.n_elements = 16;
        cfg.n_groups = 2;
        cfg.codebook_order = 2;
        cfg.mod_order = 4;
        cfg.rho_r = 1.0;
        cfg.d1 = 1.0;
        cfg.d2 = 1.0;
        cfg.p_ap = 1e-3;
        cfg.p_a = 10.0;
        cfg.sigma_r_sq = 1e-6;
        cfg.sigma_0_sq = 1e-6;
        cfg
    }

    #[test]
    fn sca_trace_is_nondecreasing_and_converges() {
        let cfg = normalized_cfg();
        let c = Constellation::new(cfg.mod_order).unwrap();
        for seed in 0..10u64 {
            let mut rng = stream(51, &[seed]);
            let chan = ChannelRealization::generate(&cfg, &mut rng).unwrap();
            let (cb, trace) = design_codebook_sca(&chan, &c, &cfg).unwrap();
            assert!(trace.converged, "seed {seed} did not converge");
            for w in trace.tau_per_iter.windows(2) {
                assert!(w[1] >= w[0] - 1e-8, "seed {seed}: trace {:?}", trace.tau_per_iter);
            }
            assert_eq!(cb.order(), cfg.codebook_order);
            assert_eq!(cb.n_groups(), cfg.n_groups);
        }
    }

    #[test]
    fn sca_beats_random_codebooks() {
        let cfg = normalized_cfg();
        let c = Constellation::new(cfg.mod_order).unwrap();
        let mut wins = 0;
        let channels = 20;
        for seed in 0..channels {
            let mut rng = stream(52, &[seed]);
            let chan = ChannelRealization::generate(&cfg, &mut rng).unwrap();
            let problem = build_distance_problem(&chan.h, &chan.p, &c, &cfg).unwrap();
            let (cb, _) = design_codebook_sca_on_problem(&problem).unwrap();
            let designed = min_pairwise_distance(&cb, &chan.h, &c);
            let mut best_random = 0.0f64;
            for r in 0..100u64 {
                let mut rrng = stream(53, &[seed, r]);
                let a = ga::random_feasible(&problem, &mut rrng);
                let rc = AapCodebook::new(vec![a[0..2].to_vec(), a[2..4].to_vec()]).unwrap();
                best_random = best_random.max(min_pairwise_distance(&rc, &chan.h, &c));
            }
            if designed >= best_random {
                wins += 1;
            }
        }
        assert!(wins >= 18, "SCA beat random search in only {wins}/{channels} channels");
    }

    #[test]
    fn degenerate_single_column_case() {
        // A = 1: distance governed only by the constellation; the designed
        // column maximizes the channel-weighted gain.
        let mut cfg = normalized_cfg();
        cfg.codebook_order = 1;
        cfg.mod_order = 2;
        let c = Constellation::new(2).unwrap();
        let mut rng = stream(54, &[0]);
        let chan = ChannelRealization::generate(&cfg, &mut rng).unwrap();
        let (cb, trace) = design_codebook_sca(&chan, &c, &cfg).unwrap();
        assert_eq!(cb.order(), 1);
        // tau matches the min over the symbol pairs of the returned column
        let problem = build_distance_problem(&chan.h, &chan.p, &c, &cfg).unwrap();
        let a = cb.columns[0].clone();
        let tau = trace.tau_per_iter.last().unwrap();
        let min_dist = problem.min_distance(&a);
        assert!((tau - min_dist).abs() / min_dist < 1e-3, "{tau} vs {min_dist}");
    }

    #[test]
    fn ga_does_not_beat_sca_on_average() {
        let cfg = normalized_cfg();
        let c = Constellation::new(cfg.mod_order).unwrap();
        let params = GaParams { generations: 60, population: 30, ..Default::default() };
        let mut sca_sum = 0.0;
        let mut ga_sum = 0.0;
        for seed in 0..10u64 {
            let mut rng = stream(55, &[seed]);
            let chan = ChannelRealization::generate(&cfg, &mut rng).unwrap();
            let (cb, _) = design_codebook_sca(&chan, &c, &cfg).unwrap();
            sca_sum += min_pairwise_distance(&cb, &chan.h, &c);
            let mut grng = stream(56, &[seed]);
            let gb = design_codebook_ga(&chan, &c, &cfg, &params, &mut grng).unwrap();
            ga_sum += min_pairwise_distance(&gb, &chan.h, &c);
        }
        assert!(ga_sum <= sca_sum * 1.02, "GA {ga_sum} vs SCA {sca_sum}");
    }
}
