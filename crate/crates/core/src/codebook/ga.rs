//! Real-coded genetic-algorithm baseline for the codebook design, used as a
//! comparison point for the SCA route.

use rand::Rng;

use crate::codebook::problem::DistanceProblem;
use crate::error::Result;

/// GA knobs. Defaults follow a plain real-coded setup: tournament
/// selection, blend crossover, Gaussian mutation, projection repair.
#[derive(Debug, Clone)]
pub struct GaParams {
    pub population: usize,
    pub generations: usize,
    pub tournament: usize,
    pub blend_alpha: f64,
    pub mutation_prob: f64,
    pub mutation_sigma_frac: f64,
}

impl Default for GaParams {
    fn default() -> Self {
        GaParams {
            population: 50,
            generations: 200,
            tournament: 3,
            blend_alpha: 0.5,
            mutation_prob: 0.15,
            mutation_sigma_frac: 0.1,
        }
    }
}

/// Clamp into the box, then shrink any over-budget column toward the lower
/// corner until its power constraint holds.
pub fn repair(problem: &DistanceProblem, a: &mut [f64]) {
    let lo = problem.lower;
    let hi = problem.upper;
    for v in a.iter_mut() {
        *v = v.clamp(lo, hi);
    }
    let l = problem.l_groups;
    for k in 0..problem.a_order {
        if problem.column_power(a, k) <= problem.p_a {
            continue;
        }
        let corner = vec![lo; l];
        let col: Vec<f64> = problem.column(a, k).to_vec();
        let dir: Vec<f64> = col.iter().zip(&corner).map(|(c, b)| c - b).collect();
        let fb = problem.f_matrix.matvec(&corner);
        let fd = problem.f_matrix.matvec(&dir);
        let c0: f64 = fb.iter().zip(&corner).map(|(x, y)| x * y).sum();
        let c1: f64 = fd.iter().zip(&corner).map(|(x, y)| x * y).sum();
        let c2: f64 = fd.iter().zip(&dir).map(|(x, y)| x * y).sum();
        let s = if c2 <= 0.0 {
            0.0
        } else {
            let disc = (c1 * c1 + c2 * (problem.p_a - c0)).max(0.0);
            ((-c1 + disc.sqrt()) / c2).clamp(0.0, 1.0)
        };
        for (i, d) in dir.iter().enumerate() {
            a[k * l + i] = corner[i] + s * d;
        }
    }
}

/// Draw a random feasible stacked amplitude vector.
pub fn random_feasible<R: Rng + ?Sized>(problem: &DistanceProblem, rng: &mut R) -> Vec<f64> {
    let mut a: Vec<f64> = (0..problem.dim())
        .map(|_| rng.gen_range(problem.lower..problem.upper))
        .collect();
    repair(problem, &mut a);
    a
}

/// Maximize the minimum pairwise distance by a plain GA. Returns the best
/// stacked vector found (always feasible).
pub fn design_ga<R: Rng + ?Sized>(
    problem: &DistanceProblem,
    params: &GaParams,
    rng: &mut R,
) -> Result<Vec<f64>> {
    let dim = problem.dim();
    let mut pop: Vec<Vec<f64>> = (0..params.population)
        .map(|_| random_feasible(problem, rng))
        .collect();
    let mut fitness: Vec<f64> = pop.iter().map(|a| problem.min_distance(a)).collect();

    let best_index = |fit: &[f64]| {
        fit.iter()
            .enumerate()
            .max_by(|a, b| a.1.total_cmp(b.1))
            .map(|(i, _)| i)
            .unwrap()
    };

    for _ in 0..params.generations {
        let elite = pop[best_index(&fitness)].clone();
        let mut next = vec![elite];
        while next.len() < params.population {
            let pick = |rng: &mut R, fit: &[f64]| -> usize {
                let mut best = rng.gen_range(0..fit.len());
                for _ in 1..params.tournament {
                    let c = rng.gen_range(0..fit.len());
                    if fit[c] > fit[best] {
                        best = c;
                    }
                }
                best
            };
            let p1 = &pop[pick(rng, &fitness)];
            let p2 = &pop[pick(rng, &fitness)];
            // BLX-alpha crossover
            let mut child: Vec<f64> = (0..dim)
                .map(|i| {
                    let (lo, hi) = if p1[i] <= p2[i] { (p1[i], p2[i]) } else { (p2[i], p1[i]) };
                    let spread = (hi - lo).max(1e-12);
                    rng.gen_range(
                        lo - params.blend_alpha * spread..hi + params.blend_alpha * spread,
                    )
                })
                .collect();
            let sigma = params.mutation_sigma_frac * (problem.upper - problem.lower);
            for v in &mut child {
                if rng.gen_bool(params.mutation_prob) {
                    let z: f64 = rng.sample(rand_distr::StandardNormal);
                    *v += sigma * z;
                }
            }
            repair(problem, &mut child);
            next.push(child);
        }
        pop = next;
        fitness = pop.iter().map(|a| problem.min_distance(a)).collect();
    }

    Ok(pop[best_index(&fitness)].clone())
}
