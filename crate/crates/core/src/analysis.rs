//! Closed-form error-probability bound and Monte-Carlo mutual information.

use rand::Rng;

use crate::config::SystemConfig;
use crate::error::{Error, Result};
use crate::math::q_function;
use crate::modem::{clt_noise_var, frame_to_word, AapCodebook, Constellation, TxFrame};
use crate::rng::complex_gaussian;

/// Exact conditional pairwise error probability
/// Q(sqrt(P_AP |Delta|^2 / (2 sigma_w^2))).
pub fn cpep_exact(delta_sq: f64, p_ap: f64, sigma_w_sq: f64) -> f64 {
    q_function((p_ap * delta_sq / (2.0 * sigma_w_sq)).sqrt())
}

/// Two-exponential approximation of the conditional PEP.
pub fn cpep_approx(delta_sq: f64, p_ap: f64, sigma_w_sq: f64) -> f64 {
    let x = p_ap * delta_sq / sigma_w_sq;
    (-x / 4.0).exp() / 12.0 + (-x / 3.0).exp() / 4.0
}

/// Moment-generating function of the squared distance under the Gaussian
/// group-gain approximation:
/// M(t) = (1 - 2 beta sigma^2 t)^(-1/2) exp(mu^2 beta t / (1 - 2 beta sigma^2 t)).
pub fn mgf_delta(t: f64, mu: f64, sigma_sq: f64, beta: f64) -> f64 {
    let d = 1.0 - 2.0 * beta * sigma_sq * t;
    d.sqrt().recip() * (mu * mu * beta * t / d).exp()
}

/// Squared Euclidean norm of the codeword difference a_k s_m - a_khat s_mhat.
pub fn pair_beta(
    frame: &TxFrame,
    frame_hat: &TxFrame,
    codebook: &AapCodebook,
    constellation: &Constellation,
) -> f64 {
    let a = &codebook.columns[frame.aap_index];
    let a_hat = &codebook.columns[frame_hat.aap_index];
    let s = constellation.points[frame.sym_index];
    let s_hat = constellation.points[frame_hat.sym_index];
    a.iter()
        .zip(a_hat)
        .map(|(al, ahl)| (al * s - ahl * s_hat).norm_sqr())
        .sum()
}

/// Unconditional PEP by averaging the two-exponential CPEP over the
/// Gaussian group-gain statistics. The equivalent-noise variance uses the
/// transmitted codeword's column.
pub fn upep(
    frame: &TxFrame,
    frame_hat: &TxFrame,
    codebook: &AapCodebook,
    constellation: &Constellation,
    cfg: &SystemConfig,
    h_mu: f64,
    h_sigma_sq: f64,
) -> f64 {
    let beta = pair_beta(frame, frame_hat, codebook, constellation);
    let sigma_w_sq = clt_noise_var(&codebook.columns[frame.aap_index], cfg);
    let t1 = -cfg.p_ap / (4.0 * sigma_w_sq);
    let t2 = -cfg.p_ap / (3.0 * sigma_w_sq);
    mgf_delta(t1, h_mu, h_sigma_sq, beta) / 12.0 + mgf_delta(t2, h_mu, h_sigma_sq, beta) / 4.0
}

/// Union bound on the average bit error probability: Hamming-weighted sum
/// of the UPEP over all ordered codeword pairs, normalized by R 2^R.
/// Reported value is clipped at 1.
pub fn abep_bound(
    codebook: &AapCodebook,
    constellation: &Constellation,
    cfg: &SystemConfig,
    h_mu: f64,
    h_sigma_sq: f64,
) -> f64 {
    let m = constellation.order();
    let a = codebook.order();
    let r = crate::modem::rate(m, a);
    let mut sum = 0.0;
    for mi in 0..m {
        for ki in 0..a {
            let frame = TxFrame { sym_index: mi, aap_index: ki };
            let word = frame_to_word(&frame, a);
            for mh in 0..m {
                for kh in 0..a {
                    if mi == mh && ki == kh {
                        continue;
                    }
                    let frame_hat = TxFrame { sym_index: mh, aap_index: kh };
                    let word_hat = frame_to_word(&frame_hat, a);
                    let hamming = (word ^ word_hat).count_ones() as f64;
                    sum += hamming
                        * upep(&frame, &frame_hat, codebook, constellation, cfg, h_mu, h_sigma_sq);
                }
            }
        }
    }
    (sum / (r as f64 * (1u64 << r) as f64)).min(1.0)
}

/// Monte-Carlo mutual information between the transmitted codeword and the
/// received scalar, conditioned on the group channel h.
pub fn mi_estimate<R: Rng + ?Sized>(
    h: &[f64],
    codebook: &AapCodebook,
    constellation: &Constellation,
    cfg: &SystemConfig,
    n_noise_samples: usize,
    rng: &mut R,
) -> Result<f64> {
    if n_noise_samples == 0 {
        return Err(Error::config("mi_estimate needs at least one noise sample"));
    }
    let m = constellation.order();
    let a = codebook.order();
    let r = crate::modem::rate(m, a) as f64;
    let n_cw = m * a;
    let sqrt_p = cfg.p_ap.sqrt();

    // noiseless receive point and noise variance per codeword
    let mut points = Vec::with_capacity(n_cw);
    let mut noise_vars = Vec::with_capacity(n_cw);
    for mi in 0..m {
        for ki in 0..a {
            let gain: f64 = h.iter().zip(&codebook.columns[ki]).map(|(hl, al)| hl * al).sum();
            points.push(sqrt_p * gain * constellation.points[mi]);
            noise_vars.push(clt_noise_var(&codebook.columns[ki], cfg));
        }
    }

    let ln2 = std::f64::consts::LN_2;
    let mut penalty = 0.0;
    let mut exponents = vec![0.0f64; n_cw];
    for xi in 0..n_cw {
        let sigma_w_sq = noise_vars[xi];
        let sigma_w = sigma_w_sq.sqrt();
        let mut acc = 0.0;
        for _ in 0..n_noise_samples {
            let w = sigma_w * complex_gaussian(rng);
            let w_sq = w.norm_sqr();
            for (xh, e) in exponents.iter_mut().enumerate() {
                let d = ((points[xi] - points[xh] + w).norm_sqr() - w_sq) / sigma_w_sq;
                *e = -d;
            }
            // log-sum-exp in base 2
            let max = exponents.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
            let sum: f64 = exponents.iter().map(|e| (e - max).exp()).sum();
            acc += (max + sum.ln()) / ln2;
        }
        penalty += acc / n_noise_samples as f64;
    }
    Ok(r - penalty / n_cw as f64)
}
