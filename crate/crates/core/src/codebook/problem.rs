//! Max-min-distance problem data: the pairwise quadratic forms over the
//! stacked amplitude vector, and the per-column power quadratic form.

use num_complex::Complex64;

use crate::config::SystemConfig;
use crate::error::{Error, Result};
use crate::modem::Constellation;

/// Dense symmetric matrix stored row-major.
#[derive(Debug, Clone)]
pub struct SymMat {
    pub n: usize,
    pub data: Vec<f64>,
}

impl SymMat {
    pub fn zeros(n: usize) -> Self {
        SymMat { n, data: vec![0.0; n * n] }
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.data[i * self.n + j]
    }

    #[inline]
    pub fn set(&mut self, i: usize, j: usize, v: f64) {
        self.data[i * self.n + j] = v;
    }

    /// y = M x
    pub fn matvec(&self, x: &[f64]) -> Vec<f64> {
        let mut y = vec![0.0; self.n];
        for i in 0..self.n {
            let row = &self.data[i * self.n..(i + 1) * self.n];
            y[i] = row.iter().zip(x).map(|(m, xj)| m * xj).sum();
        }
        y
    }

    /// x^T M x
    pub fn quad(&self, x: &[f64]) -> f64 {
        self.matvec(x).iter().zip(x).map(|(y, xi)| y * xi).sum()
    }
}

/// The assembled max-min-distance problem over the stacked vector
/// a = [a_1; ...; a_A] of length A*L.
#[derive(Debug, Clone)]
pub struct DistanceProblem {
    pub l_groups: usize,
    pub a_order: usize,
    /// One symmetric quadratic form per unordered codeword pair; a^T R a is
    /// the squared distance between the pair's noiseless receive points.
    pub r_matrices: Vec<SymMat>,
    /// Per-column power form: a_k^T F a_k is the RIS output power of column
    /// a_k on the design channel.
    pub f_matrix: SymMat,
    /// Box bounds on every entry (strict lower bound 1 closed at 1 + eps).
    pub lower: f64,
    pub upper: f64,
    /// Output-power budget.
    pub p_a: f64,
    /// Common scale factor applied to the R matrices so their magnitudes are
    /// O(1) for the solver; reported tau values are in scaled units.
    pub r_scale: f64,
}

/// Strict lower bound a > 1 closed as a >= 1 + EPS_LOWER for the solver.
pub const EPS_LOWER: f64 = 1e-6;

impl DistanceProblem {
    pub fn dim(&self) -> usize {
        self.l_groups * self.a_order
    }

    /// Squared pairwise distance a^T R_j a in scaled units.
    pub fn pair_distance(&self, j: usize, a: &[f64]) -> f64 {
        self.r_matrices[j].quad(a)
    }

    /// min_j a^T R_j a in scaled units.
    pub fn min_distance(&self, a: &[f64]) -> f64 {
        (0..self.r_matrices.len())
            .map(|j| self.pair_distance(j, a))
            .fold(f64::INFINITY, f64::min)
    }

    /// Column slice of the stacked vector.
    pub fn column<'a>(&self, a: &'a [f64], k: usize) -> &'a [f64] {
        &a[k * self.l_groups..(k + 1) * self.l_groups]
    }

    /// Output power of column k.
    pub fn column_power(&self, a: &[f64], k: usize) -> f64 {
        self.f_matrix.quad(self.column(a, k))
    }

    /// True for a point meeting box and power constraints within `tol`.
    pub fn is_feasible(&self, a: &[f64], tol: f64) -> bool {
        if a.iter().any(|&v| v < self.lower - tol || v > self.upper + tol) {
            return false;
        }
        (0..self.a_order).all(|k| self.column_power(a, k) <= self.p_a * (1.0 + tol))
    }
}

/// Assemble the pairwise quadratic forms and the power form from the group
/// channel (h, p) and the constellation.
///
/// Each codeword q = (m, k) has the stacked selector e_k (x) s_m; the form
/// for a pair is the tiled-channel Gram matrix Hadamard-multiplied with the
/// selector-difference outer product. For real amplitudes and real group
/// gains the real part carries the whole quadratic form.
pub fn build_distance_problem(
    h: &[f64],
    p: &[Complex64],
    constellation: &Constellation,
    cfg: &SystemConfig,
) -> Result<DistanceProblem> {
    let l = h.len();
    if p.len() != l {
        return Err(Error::config("h and p must share length L"));
    }
    let a_order = cfg.codebook_order;
    let m_order = constellation.order();
    let dim = l * a_order;
    let n_codewords = a_order * m_order;

    // stacked complex selector d_q(i) = [e_k (x) s_m](i), i = k*L + l
    let selector = |q: usize| -> (usize, Complex64) {
        let k = q % a_order;
        let m = q / a_order;
        (k, constellation.points[m])
    };

    let mut r_matrices = Vec::with_capacity(n_codewords * (n_codewords - 1) / 2);
    let mut max_diag: f64 = 0.0;
    for q in 0..n_codewords {
        for q_hat in (q + 1)..n_codewords {
            let (k1, s1) = selector(q);
            let (k2, s2) = selector(q_hat);
            // difference vector over the stacked index
            let mut d = vec![Complex64::ZERO; dim];
            for li in 0..l {
                d[k1 * l + li] += s1;
                d[k2 * l + li] -= s2;
            }
            let mut r = SymMat::zeros(dim);
            for i in 0..dim {
                let hi = h[i % l];
                for j in 0..dim {
                    let hj = h[j % l];
                    r.set(i, j, hi * hj * (d[i] * d[j].conj()).re);
                }
            }
            for i in 0..dim {
                max_diag = max_diag.max(r.get(i, i).abs());
            }
            r_matrices.push(r);
        }
    }
    if max_diag <= 0.0 {
        return Err(Error::design("degenerate channel: all pair distances vanish"));
    }
    let r_scale = 1.0 / max_diag;
    for r in &mut r_matrices {
        for v in &mut r.data {
            *v *= r_scale;
        }
    }

    // exact output-power form: P_AP Re(p p^H) + sigma_r^2 I
    let mut f_matrix = SymMat::zeros(l);
    for i in 0..l {
        for j in 0..l {
            let v = cfg.p_ap * (p[i].conj() * p[j]).re
                + if i == j { cfg.sigma_r_sq } else { 0.0 };
            f_matrix.set(i, j, v);
        }
    }

    Ok(DistanceProblem {
        l_groups: l,
        a_order,
        r_matrices,
        f_matrix,
        lower: 1.0 + EPS_LOWER,
        upper: cfg.alpha_max,
        p_a: cfg.p_a,
        r_scale,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::modem::AapCodebook;
    use crate::rng::stream;
    use rand::Rng;

    fn small_cfg(l: usize, a: usize, m: usize) -> SystemConfig {
        let mut cfg = SystemConfig::reference();
        cfg.n_elements = 4 * l;
        cfg.n_groups = l;
        cfg.codebook_order = a;
        cfg.mod_order = m;
        cfg.p_ap = 1.0;
        cfg.p_a = 1e3;
        cfg
    }

    /// |h^T (a_k s_m - a_khat s_mhat)|^2, computed directly.
    fn direct_distance(
        h: &[f64],
        cb: &AapCodebook,
        c: &Constellation,
        q: (usize, usize),
        q_hat: (usize, usize),
    ) -> f64 {
        let v = |(m, k): (usize, usize)| -> Complex64 {
            let gain: f64 = h.iter().zip(&cb.columns[k]).map(|(hl, al)| hl * al).sum();
            gain * c.points[m]
        };
        (v(q) - v(q_hat)).norm_sqr()
    }

    #[test]
    fn quadratic_form_matches_direct_distance() {
        let cfg = small_cfg(2, 2, 4);
        let c = Constellation::new(4).unwrap();
        let mut rng = stream(31, &[0]);
        for _ in 0..50 {
            let h: Vec<f64> = (0..2).map(|_| rng.gen_range(0.1..2.0)).collect();
            let p: Vec<Complex64> =
                (0..2).map(|_| Complex64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0))).collect();
            let problem = build_distance_problem(&h, &p, &c, &cfg).unwrap();
            let a: Vec<f64> = (0..4).map(|_| rng.gen_range(1.0..10.0)).collect();
            let cb = AapCodebook::new(vec![a[0..2].to_vec(), a[2..4].to_vec()]).unwrap();

            let mut j = 0;
            let n_cw = 8;
            for q in 0..n_cw {
                for q_hat in (q + 1)..n_cw {
                    let pair = |q: usize| (q / 2, q % 2);
                    let direct = direct_distance(&h, &cb, &c, pair(q), pair(q_hat));
                    let form = problem.pair_distance(j, &a) / problem.r_scale;
                    let denom = direct.max(1e-30);
                    assert!(
                        (form - direct).abs() / denom < 1e-10,
                        "pair ({q},{q_hat}): {form} vs {direct}"
                    );
                    j += 1;
                }
            }
        }
    }

    #[test]
    fn power_form_matches_output_power() {
        let cfg = small_cfg(4, 2, 2);
        let c = Constellation::new(2).unwrap();
        let mut rng = stream(32, &[0]);
        let h: Vec<f64> = (0..4).map(|_| rng.gen_range(0.1..1.0)).collect();
        let p: Vec<Complex64> =
            (0..4).map(|_| Complex64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0))).collect();
        let problem = build_distance_problem(&h, &p, &c, &cfg).unwrap();
        let a: Vec<f64> = (0..8).map(|_| rng.gen_range(1.0..5.0)).collect();
        for k in 0..2 {
            let col = &a[k * 4..(k + 1) * 4];
            let expect = crate::power::ris_output_power(col, &p, &cfg);
            let got = problem.column_power(&a, k);
            assert!((got - expect).abs() / expect < 1e-12);
        }
    }

    #[test]
    fn small_case_minimum_matches_hand_enumeration() {
        // M = 2, A = 2, L = 1: codewords are +/- a_1 s and +/- a_2 s with
        // s = 1 (BPSK); the matrices are 2x2.
        let cfg = small_cfg(1, 2, 2);
        let c = Constellation::new(2).unwrap();
        let h = vec![1.0];
        let p = vec![Complex64::new(1.0, 0.0)];
        let problem = build_distance_problem(&h, &p, &c, &cfg).unwrap();
        assert_eq!(problem.r_matrices.len(), 6);
        assert_eq!(problem.r_matrices[0].n, 2);
        let a = vec![2.0, 3.0];
        // receive points: {+2, +3, -2, -3}; min squared distance = 1
        let min = problem.min_distance(&a) / problem.r_scale;
        assert!((min - 1.0).abs() < 1e-12, "min = {min}");
    }
}
