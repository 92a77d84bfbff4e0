//! Benchmark reflection-modulation schemes sharing the channel, noise, and
//! detector framework: per-group binary phase patterns (PDRM), group on/off
//! index modulation (IM), and superimposed common phase rotation (SRPM).

use num_complex::Complex64;
use rand::Rng;

use crate::channel::ChannelRealization;
use crate::config::SystemConfig;
use crate::error::{Error, Result};
use crate::modem::{clt_noise_var, Constellation, TxFrame};
use crate::power::uniform_alpha;
use crate::rng::complex_gaussian;

/// Which benchmark scheme.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BaselineKind {
    Pdrm,
    Im,
    Srpm,
}

/// A benchmark scheme instance: the kind plus its index-pattern count (a
/// power of two, so index bits map directly) and, for IM, the number of
/// active groups.
#[derive(Debug, Clone, Copy)]
pub struct BaselineScheme {
    pub kind: BaselineKind,
    /// Number of index patterns; must be a power of two.
    pub patterns: usize,
    /// Active groups per pattern (IM only; equals L otherwise).
    pub active_groups: usize,
}

/// C(n, k) in u64; panics on overflow only far beyond practical group counts.
fn binomial(n: usize, k: usize) -> u64 {
    if k > n {
        return 0;
    }
    let k = k.min(n - k);
    let mut acc = 1u64;
    for i in 0..k {
        acc = acc * (n - i) as u64 / (i + 1) as u64;
    }
    acc
}

impl BaselineScheme {
    /// Per-group binary phase offsets; `patterns` of the 2^L lexicographic
    /// offset patterns carry the index bits.
    pub fn pdrm(l: usize, patterns: usize) -> Result<Self> {
        if !patterns.is_power_of_two() || patterns > 1 << l {
            return Err(Error::config(format!(
                "PDRM pattern count {patterns} must be a power of two <= 2^{l}"
            )));
        }
        Ok(BaselineScheme { kind: BaselineKind::Pdrm, patterns, active_groups: l })
    }

    /// Group on/off keying with `active` of `l` groups on; the first
    /// 2^floor(log2 C(l, active)) lexicographic combinations carry the bits.
    pub fn im(l: usize, active: usize) -> Result<Self> {
        if active == 0 || active > l {
            return Err(Error::config(format!("IM active groups {active} not in 1..={l}")));
        }
        let combos = binomial(l, active);
        let patterns = 1usize << (63 - combos.leading_zeros());
        Ok(BaselineScheme { kind: BaselineKind::Im, patterns, active_groups: active })
    }

    /// Common superimposed phase rotation with `patterns` equally spaced
    /// offsets.
    pub fn srpm(l: usize, patterns: usize) -> Result<Self> {
        if !patterns.is_power_of_two() {
            return Err(Error::config(format!(
                "SRPM offset count {patterns} must be a power of two"
            )));
        }
        Ok(BaselineScheme { kind: BaselineKind::Srpm, patterns, active_groups: l })
    }

    /// Index bits carried by the pattern selection.
    pub fn index_bits(&self) -> u32 {
        self.patterns.trailing_zeros()
    }

    /// Bits per channel use with an M-ary constellation.
    pub fn rate_bits(&self, m: usize) -> u32 {
        m.trailing_zeros() + self.index_bits()
    }

    pub fn name(&self) -> &'static str {
        match self.kind {
            BaselineKind::Pdrm => "pdrm",
            BaselineKind::Im => "im",
            BaselineKind::Srpm => "srpm",
        }
    }
}

/// The k-th lexicographic combination of `active` out of `l` group indices.
fn unrank_combination(l: usize, active: usize, mut k: u64) -> Vec<usize> {
    let mut out = Vec::with_capacity(active);
    let mut start = 0;
    let mut remaining = active;
    while remaining > 0 {
        for c in start..l {
            let count = binomial(l - c - 1, remaining - 1);
            if k < count {
                out.push(c);
                start = c + 1;
                remaining -= 1;
                break;
            }
            k -= count;
        }
    }
    out
}

/// Scheme codewords instantiated on one channel realization: the effective
/// complex scalar gain per index pattern, and the per-group amplitude vector
/// that sets the equivalent-noise variance.
#[derive(Debug, Clone)]
pub struct BaselineCodebook {
    pub scheme: BaselineScheme,
    pub gains: Vec<Complex64>,
    pub amplitudes: Vec<Vec<f64>>,
    /// Common amplification gain (alpha_max for SRPM, alpha* otherwise).
    pub alpha: f64,
}

/// Order of the constellation's rotational symmetry group (4 for square
/// QAM, 2 for BPSK-like sets, 1 otherwise). A common phase rotation by a
/// multiple of 2 pi / order maps the constellation onto itself, so
/// superimposed offsets must stay inside one symmetry sector to keep the
/// composite receive points distinguishable.
fn rotational_symmetry(constellation: &Constellation) -> usize {
    'order: for n in [4usize, 2] {
        let rot = Complex64::from_polar(1.0, std::f64::consts::TAU / n as f64);
        for p in &constellation.points {
            let q = p * rot;
            if !constellation.points.iter().any(|c| (c - q).norm() < 1e-9) {
                continue 'order;
            }
        }
        return n;
    }
    1
}

/// PDRM pattern k: group l gets offset pi when bit (L-1-l) of k is set, so
/// pattern 0 is fully aligned and patterns count up lexicographically.
fn pdrm_offsets(k: usize, l: usize) -> Vec<f64> {
    (0..l)
        .map(|li| if k >> (l - 1 - li) & 1 == 1 { std::f64::consts::PI } else { 0.0 })
        .collect()
}

/// Instantiate a scheme's codewords on a channel. The uniform gain is the
/// largest alpha for which every pattern meets the output-power budget
/// (SRPM deliberately ignores the budget and uses alpha_max).
pub fn build_baseline(
    scheme: &BaselineScheme,
    chan: &ChannelRealization,
    cfg: &SystemConfig,
) -> Result<BaselineCodebook> {
    let l = chan.h.len();
    if scheme.patterns == 0 {
        return Err(Error::config("scheme has no index patterns"));
    }
    let mut gains = Vec::with_capacity(scheme.patterns);
    let mut amplitudes = Vec::with_capacity(scheme.patterns);
    let alpha = match scheme.kind {
        BaselineKind::Pdrm => {
            if scheme.patterns > 1 << l {
                return Err(Error::config("more PDRM patterns than 2^L"));
            }
            // tightest budget over the offset-rotated forwarded vectors
            let mut alpha = f64::INFINITY;
            for k in 0..scheme.patterns {
                let offsets = pdrm_offsets(k, l);
                let p_rot: Vec<Complex64> = chan
                    .p
                    .iter()
                    .zip(&offsets)
                    .map(|(pl, d)| pl * Complex64::from_polar(1.0, *d))
                    .collect();
                alpha = alpha.min(uniform_alpha(&p_rot, cfg));
            }
            for k in 0..scheme.patterns {
                let offsets = pdrm_offsets(k, l);
                let gain: Complex64 = chan
                    .h
                    .iter()
                    .zip(&offsets)
                    .map(|(hl, d)| hl * Complex64::from_polar(1.0, *d))
                    .sum();
                gains.push(alpha * gain);
                amplitudes.push(vec![alpha; l]);
            }
            alpha
        }
        BaselineKind::Im => {
            let combos = binomial(l, scheme.active_groups);
            if (scheme.patterns as u64) > combos {
                return Err(Error::config("more IM patterns than combinations"));
            }
            let mut alpha = f64::INFINITY;
            let mut sets = Vec::with_capacity(scheme.patterns);
            for k in 0..scheme.patterns {
                let on = unrank_combination(l, scheme.active_groups, k as u64);
                let p_on: Vec<Complex64> = on.iter().map(|&li| chan.p[li]).collect();
                alpha = alpha.min(uniform_alpha(&p_on, cfg));
                sets.push(on);
            }
            for on in &sets {
                let gain: f64 = on.iter().map(|&li| chan.h[li]).sum();
                gains.push(Complex64::new(alpha * gain, 0.0));
                let mut a = vec![0.0; l];
                for &li in on {
                    a[li] = alpha;
                }
                amplitudes.push(a);
            }
            alpha
        }
        BaselineKind::Srpm => {
            let h_sum: f64 = chan.h.iter().sum();
            let alpha = cfg.alpha_max;
            // offsets equally spaced within one rotational-symmetry sector of
            // the constellation, so no offset coincides with a rotation that
            // maps the symbol set onto itself
            let sym = rotational_symmetry(&Constellation::new(cfg.mod_order)?) as f64;
            for k in 0..scheme.patterns {
                let omega =
                    std::f64::consts::TAU * k as f64 / (scheme.patterns as f64 * sym);
                gains.push(alpha * h_sum * Complex64::from_polar(1.0, omega));
                amplitudes.push(vec![alpha; l]);
            }
            alpha
        }
    };
    Ok(BaselineCodebook { scheme: *scheme, gains, amplitudes, alpha })
}

/// One transmit/receive pass under the equivalent-noise model.
pub fn baseline_tx_rx<R: Rng + ?Sized>(
    frame: &TxFrame,
    cb: &BaselineCodebook,
    constellation: &Constellation,
    cfg: &SystemConfig,
    rng: &mut R,
) -> Complex64 {
    let signal =
        cfg.p_ap.sqrt() * cb.gains[frame.aap_index] * constellation.points[frame.sym_index];
    let sigma_w = clt_noise_var(&cb.amplitudes[frame.aap_index], cfg).sqrt();
    signal + sigma_w * complex_gaussian(rng)
}

/// Joint ML detection over all pattern/symbol hypotheses; ties broken by
/// smallest pattern index, then smallest symbol index.
pub fn baseline_ml_detect(
    y: Complex64,
    cb: &BaselineCodebook,
    constellation: &Constellation,
    cfg: &SystemConfig,
) -> TxFrame {
    let sqrt_p = cfg.p_ap.sqrt();
    let mut best = TxFrame { sym_index: 0, aap_index: 0 };
    let mut best_metric = f64::INFINITY;
    for (k, gain) in cb.gains.iter().enumerate() {
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
