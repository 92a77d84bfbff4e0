//! Rician cascaded channel generation, phase alignment, and the group-level
//! effective channel.

use num_complex::Complex64;
use rand::Rng;

use crate::config::SystemConfig;
use crate::error::{Error, Result};
use crate::math::rician_magnitude_mean;
use crate::rng::complex_gaussian;

/// Large-scale path loss rho = rho_r * d^(-v).
pub fn path_loss(d: f64, v: f64, rho_r: f64) -> Result<f64> {
    if !(d > 0.0) {
        return Err(Error::domain(format!("path_loss: distance must be positive, got {d}")));
    }
    Ok(rho_r * d.powf(-v))
}

/// Draw an n-vector of Rician-faded coefficients with factor `k`, second
/// moment `rho`, and a deterministic LOS phase e^{-j 2 pi d / lambda}.
pub fn gen_rician_vector<R: Rng + ?Sized>(
    k: f64,
    rho: f64,
    d: f64,
    lambda: f64,
    n: usize,
    rng: &mut R,
) -> Vec<Complex64> {
    let los = Complex64::from_polar(1.0, -2.0 * std::f64::consts::PI * d / lambda);
    let los_scale = (k / (1.0 + k)).sqrt();
    let nlos_scale = (1.0 / (1.0 + k)).sqrt();
    let amp = rho.sqrt();
    (0..n)
        .map(|_| amp * (los_scale * los + nlos_scale * complex_gaussian(rng)))
        .collect()
}

/// Optimal element phases theta_li = -(arg f_li + arg g_li), making each
/// cascaded product f*g*e^{j theta} real nonnegative. Zero-magnitude entries
/// get theta = 0 (phase undefined there).
pub fn align_phases(f: &[Complex64], g: &[Complex64]) -> Vec<f64> {
    assert_eq!(f.len(), g.len());
    f.iter()
        .zip(g)
        .map(|(fi, gi)| {
            if fi.norm_sqr() == 0.0 || gi.norm_sqr() == 0.0 {
                0.0
            } else {
                -(fi.arg() + gi.arg())
            }
        })
        .collect()
}

/// Group gains h_l = sum_i |f_li||g_li| and group sums
/// p_l = sum_i f_li e^{j theta_li}, over contiguous blocks of N/L elements.
pub fn derive_groups(
    f: &[Complex64],
    g: &[Complex64],
    theta: &[f64],
    l: usize,
) -> Result<(Vec<f64>, Vec<Complex64>)> {
    let n = f.len();
    if g.len() != n || theta.len() != n {
        return Err(Error::config("derive_groups: length mismatch"));
    }
    if l == 0 || n % l != 0 {
        return Err(Error::config(format!(
            "derive_groups: N = {n} not divisible by L = {l}"
        )));
    }
    let n_bar = n / l;
    let mut h = vec![0.0; l];
    let mut p = vec![Complex64::ZERO; l];
    for li in 0..l {
        for i in 0..n_bar {
            let idx = li * n_bar + i;
            h[li] += f[idx].norm() * g[idx].norm();
            p[li] += f[idx] * Complex64::from_polar(1.0, theta[idx]);
        }
    }
    Ok((h, p))
}

/// Complex effective group gains c_l = sum_i f_li g_li e^{j theta_li} for an
/// arbitrary phase configuration. With phases from [align_phases] on the same
/// links this reduces to the real group gains h_l; with phases derived from a
/// channel estimate it captures the residual misalignment.
pub fn effective_group_gains(
    f: &[Complex64],
    g: &[Complex64],
    theta: &[f64],
    l: usize,
) -> Result<Vec<Complex64>> {
    let n = f.len();
    if g.len() != n || theta.len() != n {
        return Err(Error::config("effective_group_gains: length mismatch"));
    }
    if l == 0 || n % l != 0 {
        return Err(Error::config(format!(
            "effective_group_gains: N = {n} not divisible by L = {l}"
        )));
    }
    let n_bar = n / l;
    let mut c = vec![Complex64::ZERO; l];
    for li in 0..l {
        for i in 0..n_bar {
            let idx = li * n_bar + i;
            c[li] += f[idx] * g[idx] * Complex64::from_polar(1.0, theta[idx]);
        }
    }
    Ok(c)
}

/// One cascaded channel draw with aligned phases and derived group
/// quantities.
#[derive(Debug, Clone)]
pub struct ChannelRealization {
    /// AP-to-RIS link, length N.
    pub f: Vec<Complex64>,
    /// RIS-to-user link, length N.
    pub g: Vec<Complex64>,
    /// Element phases, radians.
    pub theta: Vec<f64>,
    /// Group gains h_l, length L.
    pub h: Vec<f64>,
    /// Group sums p_l, length L.
    pub p: Vec<Complex64>,
}

impl ChannelRealization {
    pub fn generate<R: Rng + ?Sized>(cfg: &SystemConfig, rng: &mut R) -> Result<Self> {
        let rho1 = path_loss(cfg.d1, cfg.v1, cfg.rho_r)?;
        let rho2 = path_loss(cfg.d2, cfg.v2, cfg.rho_r)?;
        let f = gen_rician_vector(cfg.k1, rho1, cfg.d1, cfg.lambda, cfg.n_elements, rng);
        let g = gen_rician_vector(cfg.k2, rho2, cfg.d2, cfg.lambda, cfg.n_elements, rng);
        Self::from_links(f, g, cfg.n_groups)
    }

    /// Build from given links: align phases, derive groups.
    pub fn from_links(f: Vec<Complex64>, g: Vec<Complex64>, l: usize) -> Result<Self> {
        let theta = align_phases(&f, &g);
        let (h, p) = derive_groups(&f, &g, &theta, l)?;
        Ok(ChannelRealization { f, g, theta, h, p })
    }

    /// Re-derive the group quantities from (possibly perturbed) links while
    /// keeping this realization intact.
    pub fn rederive(&self, l: usize) -> Result<(Vec<f64>, Vec<Complex64>)> {
        derive_groups(&self.f, &self.g, &self.theta, l)
    }
}

/// Mean and variance of the group gain h_l under the Gaussian (CLT)
/// approximation: mu = Nbar * mu_|f| * mu_|g|,
/// sigma^2 = Nbar (rho1 rho2 - mu_|f|^2 mu_|g|^2).
pub fn h_statistics(cfg: &SystemConfig) -> (f64, f64) {
    let rho1 = cfg.rho1();
    let rho2 = cfg.rho2();
    let mu_f = rician_magnitude_mean(cfg.k1, rho1);
    let mu_g = rician_magnitude_mean(cfg.k2, rho2);
    let n_bar = cfg.n_bar() as f64;
    let mu = n_bar * mu_f * mu_g;
    let sigma_sq = n_bar * (rho1 * rho2 - mu_f * mu_f * mu_g * mu_g);
    (mu, sigma_sq)
}
