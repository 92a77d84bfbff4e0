//! Bit mapping, transmit-signal synthesis, equivalent-noise generation, and
//! joint ML detection for the SISO scheme.

use num_complex::Complex64;
use rand::Rng;

use crate::channel::ChannelRealization;
use crate::config::SystemConfig;
use crate::error::{Error, Result};
use crate::rng::complex_gaussian;

/// Unit-average-power M-QAM constellation. `points[m]` is the symbol whose
/// Gray bit label, read big-endian, equals `m`.
#[derive(Debug, Clone)]
pub struct Constellation {
    pub points: Vec<Complex64>,
}

fn gray_to_binary(mut g: u32) -> u32 {
    let mut b = g;
    while g > 0 {
        g >>= 1;
        b ^= g;
    }
    b
}

/// Gray-labeled PAM amplitude for label `label` out of 2^bits levels.
fn pam_level(label: u32, bits: u32) -> f64 {
    let n = gray_to_binary(label);
    2.0 * n as f64 - ((1u32 << bits) - 1) as f64
}

impl Constellation {
    /// Square (or rectangular, for odd log2 M) Gray-coded QAM, normalized to
    /// unit average power.
    pub fn new(m: usize) -> Result<Self> {
        if !m.is_power_of_two() || m < 2 {
            return Err(Error::config(format!("modulation order {m} not a power of two >= 2")));
        }
        let bits = m.trailing_zeros();
        let bits_i = bits.div_ceil(2);
        let bits_q = bits - bits_i;
        let mut points: Vec<Complex64> = (0..m as u32)
            .map(|w| {
                let wi = w >> bits_q;
                let wq = w & ((1 << bits_q) - 1);
                let re = pam_level(wi, bits_i);
                let im = if bits_q == 0 { 0.0 } else { pam_level(wq, bits_q) };
                Complex64::new(re, im)
            })
            .collect();
        let avg: f64 = points.iter().map(|p| p.norm_sqr()).sum::<f64>() / m as f64;
        let scale = avg.sqrt().recip();
        for p in &mut points {
            *p *= scale;
        }
        Ok(Constellation { points })
    }

    pub fn order(&self) -> usize {
        self.points.len()
    }
}

/// Amplitude allocation pattern codebook: an L x A matrix whose column k is
/// the AAP vector applied when index word k is transmitted.
#[derive(Debug, Clone, PartialEq)]
pub struct AapCodebook {
    /// Columns a_1..a_A, each of length L.
    pub columns: Vec<Vec<f64>>,
}

impl AapCodebook {
    pub fn new(columns: Vec<Vec<f64>>) -> Result<Self> {
        if columns.is_empty() {
            return Err(Error::config("codebook must have at least one column"));
        }
        let l = columns[0].len();
        if l == 0 || columns.iter().any(|c| c.len() != l) {
            return Err(Error::config("codebook columns must share a positive length"));
        }
        Ok(AapCodebook { columns })
    }

    pub fn n_groups(&self) -> usize {
        self.columns[0].len()
    }

    pub fn order(&self) -> usize {
        self.columns.len()
    }

    /// Uniform codebook alpha * 1 with a single column (used by baselines).
    pub fn uniform(alpha: f64, l: usize) -> Self {
        AapCodebook { columns: vec![vec![alpha; l]] }
    }

    /// Plain-text serialization: header "L A", then one row per group,
    /// space-separated.
    pub fn to_text(&self) -> String {
        let l = self.n_groups();
        let a = self.order();
        let mut out = format!("{l} {a}\n");
        for row in 0..l {
            let line: Vec<String> = (0..a)
                .map(|k| format!("{:.17e}", self.columns[k][row]))
                .collect();
            out.push_str(&line.join(" "));
            out.push('\n');
        }
        out
    }

    /// Parse [AapCodebook::to_text] output; blank lines and '#' comment
    /// lines are ignored.
    pub fn from_text(text: &str) -> Result<Self> {
        let mut lines = text
            .lines()
            .map(str::trim)
            .filter(|l| !l.is_empty() && !l.starts_with('#'));
        let header = lines.next().ok_or_else(|| Error::config("empty codebook file"))?;
        let dims: Vec<usize> = header
            .split_whitespace()
            .map(|t| t.parse().map_err(|_| Error::config("bad codebook header")))
            .collect::<Result<_>>()?;
        if dims.len() != 2 {
            return Err(Error::config("codebook header must be 'L A'"));
        }
        let (l, a) = (dims[0], dims[1]);
        let mut columns = vec![vec![0.0; l]; a];
        for row in 0..l {
            let line = lines
                .next()
                .ok_or_else(|| Error::config("codebook file truncated"))?;
            let vals: Vec<f64> = line
                .split_whitespace()
                .map(|t| t.parse().map_err(|_| Error::config("bad codebook entry")))
                .collect::<Result<_>>()?;
            if vals.len() != a {
                return Err(Error::config("codebook row width mismatch"));
            }
            for k in 0..a {
                columns[k][row] = vals[k];
            }
        }
        AapCodebook::new(columns)
    }
}

/// A transmitted frame: symbol index, AAP index, and the bit word they
/// encode (symbol bits in the high positions).
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct TxFrame {
    pub sym_index: usize,
    pub aap_index: usize,
}

/// Transmission rate log2 M + log2 A, bits per channel use.
pub fn rate(m: usize, a: usize) -> u32 {
    m.trailing_zeros() + a.trailing_zeros()
}

/// Split an R-bit word into (symbol, AAP) indices: the first log2 M bits
/// (big-endian, i.e. the high bits) select the symbol, the remaining
/// log2 A bits the AAP column.
pub fn map_bits(word: u32, m: usize, a: usize) -> Result<TxFrame> {
    let r = rate(m, a);
    if r < 32 && word >> r != 0 {
        return Err(Error::config(format!("bit word {word} exceeds {r} bits")));
    }
    let bits_a = a.trailing_zeros();
    Ok(TxFrame {
        sym_index: (word >> bits_a) as usize,
        aap_index: (word & (a as u32 - 1)) as usize,
    })
}

/// Inverse of [map_bits].
pub fn frame_to_word(frame: &TxFrame, a: usize) -> u32 {
    ((frame.sym_index as u32) << a.trailing_zeros()) | frame.aap_index as u32
}

/// Equivalent-noise variance: sigma_w^2 = N rho2 sigma_r^2 (sum_l a_l^2)/L
/// + sigma_0^2.
pub fn clt_noise_var(a_k: &[f64], cfg: &SystemConfig) -> f64 {
    let sum_sq: f64 = a_k.iter().map(|a| a * a).sum();
    cfg.n_elements as f64 * cfg.rho2() * cfg.sigma_r_sq * sum_sq / a_k.len() as f64
        + cfg.sigma_0_sq
}

/// Draw the equivalent noise directly from its CLT distribution.
pub fn draw_noise_clt<R: Rng + ?Sized>(a_k: &[f64], cfg: &SystemConfig, rng: &mut R) -> Complex64 {
    clt_noise_var(a_k, cfg).sqrt() * complex_gaussian(rng)
}

/// Element-wise noise synthesis: forward independent RIS thermal noise
/// through each amplified element, then add receiver noise. Used to validate
/// the CLT form.
pub fn draw_noise_physical<R: Rng + ?Sized>(
    a_k: &[f64],
    chan: &ChannelRealization,
    cfg: &SystemConfig,
    rng: &mut R,
) -> Complex64 {
    let n_bar = chan.g.len() / a_k.len();
    let sigma_r = cfg.sigma_r_sq.sqrt();
    let mut w = Complex64::ZERO;
    for (l, &al) in a_k.iter().enumerate() {
        for i in 0..n_bar {
            let idx = l * n_bar + i;
            let n_r = sigma_r * complex_gaussian(rng);
            // |g| e^{-j phi_f} = g e^{j theta} / e^{j arg g} ... the phase is
            // irrelevant for circularly symmetric n_r; keep the literal form.
            let phi_f = chan.f[idx].arg();
            w += al * chan.g[idx].norm() * Complex64::from_polar(1.0, -phi_f) * n_r;
        }
    }
    w + cfg.sigma_0_sq.sqrt() * complex_gaussian(rng)
}

/// Which noise synthesis the engine uses.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum NoiseMode {
    Clt,
    Physical,
}

/// Noiseless group-level receive value sqrt(P_AP) h^T a_k s_m.
pub fn tx_signal(frame: &TxFrame, h: &[f64], codebook: &AapCodebook, constellation: &Constellation, p_ap: f64) -> Complex64 {
    let a_k = &codebook.columns[frame.aap_index];
    let gain: f64 = h.iter().zip(a_k).map(|(hl, al)| hl * al).sum();
    p_ap.sqrt() * gain * constellation.points[frame.sym_index]
}

/// One transmit/receive pass: group-level synthesis plus equivalent noise.
pub fn tx_rx<R: Rng + ?Sized>(
    frame: &TxFrame,
    chan: &ChannelRealization,
    codebook: &AapCodebook,
    constellation: &Constellation,
    cfg: &SystemConfig,
    mode: NoiseMode,
    rng: &mut R,
) -> Complex64 {
    let signal = tx_signal(frame, &chan.h, codebook, constellation, cfg.p_ap);
    let a_k = &codebook.columns[frame.aap_index];
    let w = match mode {
        NoiseMode::Clt => draw_noise_clt(a_k, cfg, rng),
        NoiseMode::Physical => draw_noise_physical(a_k, chan, cfg, rng),
    };
    signal + w
}

/// Element-level synthesis directly from the per-element cascaded products;
/// equals the group-level path for aligned phases. Noiseless.
pub fn tx_signal_elementwise(
    frame: &TxFrame,
    chan: &ChannelRealization,
    codebook: &AapCodebook,
    constellation: &Constellation,
    p_ap: f64,
) -> Complex64 {
    let a_k = &codebook.columns[frame.aap_index];
    let n_bar = chan.f.len() / a_k.len();
    let mut acc = Complex64::ZERO;
    for (l, &al) in a_k.iter().enumerate() {
        for i in 0..n_bar {
            let idx = l * n_bar + i;
            acc += al * chan.f[idx] * chan.g[idx] * Complex64::from_polar(1.0, chan.theta[idx]);
        }
    }
    p_ap.sqrt() * acc * constellation.points[frame.sym_index]
}

/// Joint ML detection over all M*A hypotheses; ties broken by smallest AAP
/// index, then smallest symbol index.
pub fn ml_detect(
    y: Complex64,
    h: &[f64],
    constellation: &Constellation,
    codebook: &AapCodebook,
    cfg: &SystemConfig,
) -> TxFrame {
    let sqrt_p = cfg.p_ap.sqrt();
    let mut best = TxFrame { sym_index: 0, aap_index: 0 };
    let mut best_metric = f64::INFINITY;
    for (k, a_k) in codebook.columns.iter().enumerate() {
        let gain: f64 = h.iter().zip(a_k).map(|(hl, al)| hl * al).sum();
        for (m, s) in constellation.points.iter().enumerate() {
            let metric = (y - sqrt_p * gain * s).norm_sqr();
            if metric < best_metric {
                best_metric = metric;
                best = TxFrame { sym_index: m, aap_index: k };
            }
        }
    }
    best
}
