//! Deterministic Monte-Carlo harness: channel draws, per-realization
//! codebook design, bit-level trials, CSI-error injection, and reduction
//! into BER curves.

use num_complex::Complex64;
use rand::Rng;
use rayon::prelude::*;

use crate::baselines::{baseline_ml_detect, baseline_tx_rx, build_baseline, BaselineScheme};
use crate::channel::{effective_group_gains, ChannelRealization};
use crate::codebook::design_codebook_sca;
use crate::config::SystemConfig;
use crate::error::{Error, Result};
use crate::mimo::{
    gen_mimo_channels, mbcd_phases, mimo_map_bits, mimo_frame_to_word, mimo_ml_detect,
    mimo_rate, mimo_transceive, proxy_siso_links,
};
use crate::modem::{
    draw_noise_clt, draw_noise_physical, frame_to_word, map_bits, ml_detect, rate, AapCodebook,
    Constellation, NoiseMode,
};
use crate::rng::stream;

/// Convert watts to dBm.
pub fn watts_to_dbm(w: f64) -> f64 {
    10.0 * (w * 1e3).log10()
}

/// Convert dBm to watts.
pub fn dbm_to_watts(dbm: f64) -> f64 {
    10f64.powf(dbm / 10.0) * 1e-3
}

/// One BER sweep definition. The power grid is in watts; conversion to dBm
/// happens only at the CSV boundary.
#[derive(Debug, Clone)]
pub struct SweepSpec {
    pub p_ap_grid: Vec<f64>,
    pub bits_per_point: u64,
    pub channels_per_point: usize,
    pub master_seed: u64,
    /// Standard deviation of the per-element CSI estimation error in
    /// normalized fading units (0 = perfect CSI).
    pub csi_delta: f64,
    pub noise_mode: NoiseMode,
}

impl SweepSpec {
    pub fn validate(&self) -> Result<()> {
        if self.p_ap_grid.is_empty() {
            return Err(Error::config("empty power grid"));
        }
        if self.p_ap_grid.windows(2).any(|w| w[1] <= w[0]) {
            return Err(Error::config("power grid must be strictly increasing"));
        }
        if self.p_ap_grid.iter().any(|&p| !(p > 0.0)) {
            return Err(Error::config("power grid entries must be positive"));
        }
        if self.bits_per_point == 0 {
            return Err(Error::config("bits_per_point must be at least 1"));
        }
        if self.channels_per_point == 0 {
            return Err(Error::config("channels_per_point must be at least 1"));
        }
        if self.csi_delta < 0.0 {
            return Err(Error::config("csi_delta must be nonnegative"));
        }
        Ok(())
    }
}

/// Options for the multi-antenna scheme.
#[derive(Debug, Clone)]
pub struct MimoOptions {
    /// Exponential spatial correlation coefficient (0 = uncorrelated).
    pub corr_r: f64,
    /// Forward the surface's thermal noise to the receiver.
    pub forward_ris_noise: bool,
    /// Phase-optimizer iteration count.
    pub mbcd_iters: usize,
}

impl Default for MimoOptions {
    fn default() -> Self {
        MimoOptions { corr_r: 0.0, forward_ris_noise: true, mbcd_iters: 20 }
    }
}

/// What the sweep simulates.
#[derive(Debug, Clone)]
pub enum Scheme {
    /// Amplitude-domain index modulation with a codebook designed per
    /// channel realization.
    Adrm,
    /// Same transceiver with one externally supplied codebook reused for
    /// every realization (theory-overlay runs).
    AdrmFixed(AapCodebook),
    Baseline(BaselineScheme),
    Mimo(MimoOptions),
}

impl Scheme {
    pub fn name(&self) -> &'static str {
        match self {
            Scheme::Adrm => "adrm",
            Scheme::AdrmFixed(_) => "adrm-fixed",
            Scheme::Baseline(b) => b.name(),
            Scheme::Mimo(_) => "adrm-mimo",
        }
    }
}

/// One grid point's tally.
#[derive(Debug, Clone, PartialEq)]
pub struct BerPoint {
    pub p_ap: f64,
    pub errors: u64,
    pub bit_trials: u64,
    pub ber: f64,
    pub stderr: f64,
    /// Fewer than 100 bit errors observed.
    pub low_confidence: bool,
    /// Channel realizations whose codebook design failed.
    pub design_failures: u64,
}

/// A finished sweep: per-point tallies plus a reproducibility metadata
/// block.
#[derive(Debug, Clone, PartialEq)]
pub struct BerCurve {
    pub points: Vec<BerPoint>,
    pub metadata: Vec<String>,
}

impl BerCurve {
    /// CSV with '#'-prefixed metadata lines, a header row, and one row per
    /// grid point.
    pub fn to_csv(&self) -> String {
        let mut out = String::new();
        for line in &self.metadata {
            out.push_str("# ");
            out.push_str(line);
            out.push('\n');
        }
        out.push_str("p_ap_dBm,ber,errors,trials,stderr\n");
        for p in &self.points {
            out.push_str(&format!(
                "{:.6},{:.10e},{},{},{:.10e}\n",
                watts_to_dbm(p.p_ap),
                p.ber,
                p.errors,
                p.bit_trials,
                p.stderr
            ));
        }
        out
    }
}

/// Perturb the link vectors with per-element CN(0, delta^2) errors in
/// normalized fading units (the physical perturbation is scaled by the
/// link's root path loss), then re-derive phases and group quantities from
/// the estimate. `delta = 0` returns the input unchanged.
pub fn apply_csi_error<R: Rng + ?Sized>(
    chan: &ChannelRealization,
    delta: f64,
    cfg: &SystemConfig,
    rng: &mut R,
) -> Result<ChannelRealization> {
    if delta == 0.0 {
        return Ok(chan.clone());
    }
    let s1 = cfg.rho1().sqrt() * delta;
    let s2 = cfg.rho2().sqrt() * delta;
    let f_e: Vec<_> = chan
        .f
        .iter()
        .map(|v| v + s1 * crate::rng::complex_gaussian(rng))
        .collect();
    let g_e: Vec<_> = chan
        .g
        .iter()
        .map(|v| v + s2 * crate::rng::complex_gaussian(rng))
        .collect();
    ChannelRealization::from_links(f_e, g_e, chan.h.len())
}

// Per-channel partial result, reduced in channel order.
struct ChannelTally {
    errors: u64,
    bit_trials: u64,
    design_failed: bool,
}

fn siso_channel_tally(
    cfg: &SystemConfig,
    sweep: &SweepSpec,
    scheme: &Scheme,
    constellation: &Constellation,
    point: usize,
    channel: usize,
    frames: u64,
) -> Result<ChannelTally> {
    let mut chan_rng = stream(sweep.master_seed, &[point as u64, channel as u64, 0]);
    let chan = ChannelRealization::generate(cfg, &mut chan_rng)?;

    match scheme {
        Scheme::Adrm | Scheme::AdrmFixed(_) => {
            // All channel knowledge available to the transceiver comes from
            // the estimate: it sets the surface phases, the codebook design,
            // and the detector gains. The true links then propagate the
            // signal through those (possibly misaligned) phases.
            let est = if sweep.csi_delta > 0.0 {
                let mut csi_rng =
                    stream(sweep.master_seed, &[point as u64, channel as u64, 1]);
                Some(apply_csi_error(&chan, sweep.csi_delta, cfg, &mut csi_rng)?)
            } else {
                None
            };
            let known = est.as_ref().unwrap_or(&chan);
            let codebook = match scheme {
                Scheme::Adrm => match design_codebook_sca(known, constellation, cfg) {
                    Ok((cb, _)) => cb,
                    Err(Error::Design(_)) => {
                        return Ok(ChannelTally { errors: 0, bit_trials: 0, design_failed: true })
                    }
                    Err(e) => return Err(e),
                },
                Scheme::AdrmFixed(cb) => cb.clone(),
                _ => unreachable!(),
            };
            let gains = effective_group_gains(&chan.f, &chan.g, &known.theta, chan.h.len())?;
            let r = rate(constellation.order(), codebook.order());
            let sqrt_p = cfg.p_ap.sqrt();
            let mut errors = 0u64;
            for t in 0..frames {
                let mut rng =
                    stream(sweep.master_seed, &[point as u64, channel as u64, 2, t]);
                let word = rng.gen_range(0..1u32 << r);
                let frame = map_bits(word, constellation.order(), codebook.order())?;
                let a_k = &codebook.columns[frame.aap_index];
                let gain: Complex64 = gains.iter().zip(a_k).map(|(c, al)| c * al).sum();
                let signal = sqrt_p * gain * constellation.points[frame.sym_index];
                let w = match sweep.noise_mode {
                    NoiseMode::Clt => draw_noise_clt(a_k, cfg, &mut rng),
                    NoiseMode::Physical => draw_noise_physical(a_k, &chan, cfg, &mut rng),
                };
                let hat = ml_detect(signal + w, &known.h, constellation, &codebook, cfg);
                errors += u64::from((word ^ frame_to_word(&hat, codebook.order())).count_ones());
            }
            Ok(ChannelTally { errors, bit_trials: frames * r as u64, design_failed: false })
        }
        Scheme::Baseline(b) => {
            let cb = build_baseline(b, &chan, cfg)?;
            let r = b.rate_bits(constellation.order());
            let mut errors = 0u64;
            for t in 0..frames {
                let mut rng =
                    stream(sweep.master_seed, &[point as u64, channel as u64, 2, t]);
                let word = rng.gen_range(0..1u32 << r);
                let frame = map_bits(word, constellation.order(), b.patterns)?;
                let y = baseline_tx_rx(&frame, &cb, constellation, cfg, &mut rng);
                let hat = baseline_ml_detect(y, &cb, constellation, cfg);
                errors += u64::from((word ^ frame_to_word(&hat, b.patterns)).count_ones());
            }
            Ok(ChannelTally { errors, bit_trials: frames * r as u64, design_failed: false })
        }
        Scheme::Mimo(_) => unreachable!("handled by mimo_channel_tally"),
    }
}

fn mimo_channel_tally(
    cfg: &SystemConfig,
    sweep: &SweepSpec,
    opts: &MimoOptions,
    constellation: &Constellation,
    point: usize,
    channel: usize,
    frames: u64,
) -> Result<ChannelTally> {
    let mut chan_rng = stream(sweep.master_seed, &[point as u64, channel as u64, 0]);
    let ch = gen_mimo_channels(cfg, opts.corr_r, &mut chan_rng)?;
    let phases = mbcd_phases(&ch, opts.mbcd_iters);

    // codebook designed on a single-antenna proxy of the surface links
    let (pf, pg) = proxy_siso_links(&ch);
    let proxy = ChannelRealization::from_links(pf, pg, cfg.n_groups)?;
    let codebook = match design_codebook_sca(&proxy, constellation, cfg) {
        Ok((cb, _)) => cb,
        Err(Error::Design(_)) => {
            return Ok(ChannelTally { errors: 0, bit_trials: 0, design_failed: true })
        }
        Err(e) => return Err(e),
    };

    let m = constellation.order();
    let a = codebook.order();
    let r = mimo_rate(cfg.nt, m, a);
    let mut errors = 0u64;
    for t in 0..frames {
        let mut rng = stream(sweep.master_seed, &[point as u64, channel as u64, 2, t]);
        let word = rng.gen_range(0..1u64 << r);
        let frame = mimo_map_bits(word, cfg.nt, m, a)?;
        let y = mimo_transceive(
            &frame,
            &ch,
            &phases,
            &codebook,
            constellation,
            cfg,
            opts.forward_ris_noise,
            &mut rng,
        );
        let hat = mimo_ml_detect(&y, &ch, &phases, &codebook, constellation, cfg)?;
        errors += u64::from((word ^ mimo_frame_to_word(&hat, m, a)).count_ones());
    }
    Ok(ChannelTally { errors, bit_trials: frames * r as u64, design_failed: false })
}

/// Run a full BER sweep. Deterministic for a given (config, sweep, scheme)
/// regardless of worker count: every channel draws from its own counter-
/// derived streams and partial tallies are reduced in channel order.
pub fn run_ber_sweep(cfg: &SystemConfig, sweep: &SweepSpec, scheme: &Scheme) -> Result<BerCurve> {
    cfg.validate()?;
    sweep.validate()?;
    let constellation = Constellation::new(cfg.mod_order)?;

    let r = match scheme {
        Scheme::Adrm => rate(cfg.mod_order, cfg.codebook_order),
        Scheme::AdrmFixed(cb) => {
            if cb.n_groups() != cfg.n_groups || cb.order() != cfg.codebook_order {
                return Err(Error::config("fixed codebook dimensions do not match config"));
            }
            rate(cfg.mod_order, cfg.codebook_order)
        }
        Scheme::Baseline(b) => {
            let want = rate(cfg.mod_order, cfg.codebook_order);
            if b.rate_bits(cfg.mod_order) != want {
                return Err(Error::config(format!(
                    "scheme {} carries {} bits per use but the reference rate is {want}",
                    b.name(),
                    b.rate_bits(cfg.mod_order)
                )));
            }
            want
        }
        Scheme::Mimo(_) => mimo_rate(cfg.nt, cfg.mod_order, cfg.codebook_order),
    };
    if matches!(scheme, Scheme::Mimo(_)) && sweep.csi_delta > 0.0 {
        return Err(Error::config("CSI-error injection is not supported for the MIMO scheme"));
    }

    let frames_per_point = sweep.bits_per_point.div_ceil(r as u64);
    let frames_per_channel = frames_per_point.div_ceil(sweep.channels_per_point as u64);

    let mut points = Vec::with_capacity(sweep.p_ap_grid.len());
    for (pi, &p_ap) in sweep.p_ap_grid.iter().enumerate() {
        let mut pcfg = cfg.clone();
        pcfg.p_ap = p_ap;
        let tallies: Vec<Result<ChannelTally>> = (0..sweep.channels_per_point)
            .into_par_iter()
            .map(|ci| match scheme {
                Scheme::Mimo(opts) => mimo_channel_tally(
                    &pcfg,
                    sweep,
                    opts,
                    &constellation,
                    pi,
                    ci,
                    frames_per_channel,
                ),
                _ => siso_channel_tally(
                    &pcfg,
                    sweep,
                    scheme,
                    &constellation,
                    pi,
                    ci,
                    frames_per_channel,
                ),
            })
            .collect();
        let mut errors = 0u64;
        let mut bit_trials = 0u64;
        let mut design_failures = 0u64;
        for t in tallies {
            let t = t?;
            errors += t.errors;
            bit_trials += t.bit_trials;
            design_failures += u64::from(t.design_failed);
        }
        let ber = if bit_trials > 0 {
            errors as f64 / bit_trials as f64
        } else {
            f64::NAN
        };
        let stderr = if bit_trials > 0 {
            (ber * (1.0 - ber) / bit_trials as f64).sqrt()
        } else {
            f64::NAN
        };
        points.push(BerPoint {
            p_ap,
            errors,
            bit_trials,
            ber,
            stderr,
            low_confidence: errors < 100,
            design_failures,
        });
    }

    let mut metadata = vec![
        format!("scheme: {}", scheme.name()),
        format!("rate_bits: {r}"),
        format!("master_seed: {}", sweep.master_seed),
        format!("bits_per_point: {}", sweep.bits_per_point),
        format!("channels_per_point: {}", sweep.channels_per_point),
        format!("csi_delta: {}", sweep.csi_delta),
        format!(
            "noise_mode: {}",
            match sweep.noise_mode {
                NoiseMode::Clt => "clt",
                NoiseMode::Physical => "physical",
            }
        ),
        format!(
            "config: N={} L={} A={} M={} nt={} nr={} p_a={} alpha_max={} sigma_r_sq={} \
             sigma_0_sq={} d0={} d1={} d2={} k0={} k1={} k2={} v0={} v1={} v2={} rho_r={} \
             lambda={}",
            cfg.n_elements,
            cfg.n_groups,
            cfg.codebook_order,
            cfg.mod_order,
            cfg.nt,
            cfg.nr,
            cfg.p_a,
            cfg.alpha_max,
            cfg.sigma_r_sq,
            cfg.sigma_0_sq,
            cfg.d0,
            cfg.d1,
            cfg.d2,
            cfg.k0,
            cfg.k1,
            cfg.k2,
            cfg.v0,
            cfg.v1,
            cfg.v2,
            cfg.rho_r,
            cfg.lambda
        ),
    ];
    let low: Vec<String> = points
        .iter()
        .filter(|p| p.low_confidence)
        .map(|p| format!("{:.6}", watts_to_dbm(p.p_ap)))
        .collect();
    if !low.is_empty() {
        metadata.push(format!("low_confidence_points_dBm: {}", low.join(" ")));
    }
    let failed: u64 = points.iter().map(|p| p.design_failures).sum();
    if failed > 0 {
        metadata.push(format!("design_failures: {failed}"));
    }
    Ok(BerCurve { points, metadata })
}
