//! Line-based `key = value` configuration files with `[section]` headers.
//! Physical quantities accept `dBm` (powers) and `dB` (ratios) suffixes,
//! converted to linear units once at parse time.

use std::collections::BTreeMap;

use aris_adrm::baselines::BaselineScheme;
use aris_adrm::engine::{dbm_to_watts, MimoOptions, Scheme, SweepSpec};
use aris_adrm::{Error, NoiseMode, Result, SystemConfig};

/// A fully parsed run definition.
#[derive(Debug, Clone)]
pub struct RunConfig {
    pub system: SystemConfig,
    pub sweep: SweepSpec,
    /// Scheme selected by `[scheme] name`; `None` means `adrm-fixed`, whose
    /// codebook is loaded by the command.
    pub scheme: Option<Scheme>,
    pub mimo: MimoOptions,
    pub codebook_file: Option<String>,
    pub mi_noise_samples: usize,
    pub im_active: usize,
    pub patterns: usize,
}

fn parse_plain<T: std::str::FromStr>(key: &str, v: &str) -> Result<T> {
    v.parse()
        .map_err(|_| Error::config(format!("{key}: cannot parse '{v}'")))
}

/// Power value: plain watts, or `<x> dBm`.
fn parse_power(key: &str, v: &str) -> Result<f64> {
    if let Some(num) = v.strip_suffix("dBm").or_else(|| v.strip_suffix("dbm")) {
        Ok(dbm_to_watts(parse_plain(key, num.trim())?))
    } else {
        parse_plain(key, v)
    }
}

/// Dimensionless ratio: plain linear, or `<x> dB`.
fn parse_ratio(key: &str, v: &str) -> Result<f64> {
    if let Some(num) = v.strip_suffix("dB").or_else(|| v.strip_suffix("db")) {
        Ok(10f64.powf(parse_plain::<f64>(key, num.trim())? / 10.0))
    } else {
        parse_plain(key, v)
    }
}

/// Space-separated list of powers; a trailing `dBm` token applies to every
/// entry.
fn parse_power_grid(key: &str, v: &str) -> Result<Vec<f64>> {
    let mut tokens: Vec<&str> = v.split_whitespace().collect();
    let dbm = matches!(tokens.last(), Some(&"dBm") | Some(&"dbm"));
    if dbm {
        tokens.pop();
    }
    if tokens.is_empty() {
        return Err(Error::config(format!("{key}: empty grid")));
    }
    tokens
        .iter()
        .map(|t| {
            let x: f64 = parse_plain(key, t)?;
            Ok(if dbm { dbm_to_watts(x) } else { x })
        })
        .collect()
}

fn parse_bool(key: &str, v: &str) -> Result<bool> {
    match v {
        "true" | "yes" | "1" => Ok(true),
        "false" | "no" | "0" => Ok(false),
        _ => Err(Error::config(format!("{key}: expected a boolean, got '{v}'"))),
    }
}

/// Parse the file text into a RunConfig. Unknown keys are rejected with the
/// offending name so typos fail before any computation starts.
pub fn parse_config(text: &str) -> Result<RunConfig> {
    let mut map: BTreeMap<(String, String), String> = BTreeMap::new();
    let mut section = String::new();
    for (ln, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        if let Some(name) = line.strip_prefix('[').and_then(|s| s.strip_suffix(']')) {
            section = name.trim().to_string();
            continue;
        }
        let (key, value) = line.split_once('=').ok_or_else(|| {
            Error::config(format!("line {}: expected 'key = value', got '{line}'", ln + 1))
        })?;
        map.insert(
            (section.clone(), key.trim().to_string()),
            value.trim().to_string(),
        );
    }

    let mut system = SystemConfig::reference();
    let mut sweep = SweepSpec {
        p_ap_grid: vec![system.p_ap],
        bits_per_point: 100_000,
        channels_per_point: 10,
        master_seed: 1,
        csi_delta: 0.0,
        noise_mode: NoiseMode::Clt,
    };
    let mut scheme_name = "adrm".to_string();
    let mut mimo = MimoOptions::default();
    let mut codebook_file = None;
    let mut mi_noise_samples = 10_000usize;
    let mut im_active = system.n_groups / 2;
    let mut im_active_set = false;
    let mut patterns = system.codebook_order;
    let mut patterns_set = false;
    let mut grid_set = false;

    for ((sec, key), value) in &map {
        let k = key.as_str();
        let v = value.as_str();
        match sec.as_str() {
            "system" | "" => match k {
                "n_elements" => system.n_elements = parse_plain(k, v)?,
                "n_groups" => system.n_groups = parse_plain(k, v)?,
                "codebook_order" => system.codebook_order = parse_plain(k, v)?,
                "mod_order" => system.mod_order = parse_plain(k, v)?,
                "p_ap" => system.p_ap = parse_power(k, v)?,
                "p_a" => system.p_a = parse_power(k, v)?,
                "alpha_max" => system.alpha_max = parse_plain(k, v)?,
                "sigma_r_sq" => system.sigma_r_sq = parse_power(k, v)?,
                "sigma_0_sq" => system.sigma_0_sq = parse_power(k, v)?,
                "d0" => system.d0 = parse_plain(k, v)?,
                "d1" => system.d1 = parse_plain(k, v)?,
                "d2" => system.d2 = parse_plain(k, v)?,
                "k0" => system.k0 = parse_ratio(k, v)?,
                "k1" => system.k1 = parse_ratio(k, v)?,
                "k2" => system.k2 = parse_ratio(k, v)?,
                "v0" => system.v0 = parse_plain(k, v)?,
                "v1" => system.v1 = parse_plain(k, v)?,
                "v2" => system.v2 = parse_plain(k, v)?,
                "rho_r" => system.rho_r = parse_ratio(k, v)?,
                "lambda" => system.lambda = parse_plain(k, v)?,
                "nt" => system.nt = parse_plain(k, v)?,
                "nr" => system.nr = parse_plain(k, v)?,
                _ => return Err(Error::config(format!("unknown key [{sec}] {k}"))),
            },
            "sweep" => match k {
                "p_ap_grid" => {
                    sweep.p_ap_grid = parse_power_grid(k, v)?;
                    grid_set = true;
                }
                "bits_per_point" => sweep.bits_per_point = parse_plain(k, v)?,
                "channels_per_point" => sweep.channels_per_point = parse_plain(k, v)?,
                "seed" => sweep.master_seed = parse_plain(k, v)?,
                "csi_delta" => sweep.csi_delta = parse_plain(k, v)?,
                "noise_mode" => {
                    sweep.noise_mode = match v {
                        "clt" => NoiseMode::Clt,
                        "physical" => NoiseMode::Physical,
                        _ => {
                            return Err(Error::config(format!(
                                "noise_mode: expected clt or physical, got '{v}'"
                            )))
                        }
                    }
                }
                _ => return Err(Error::config(format!("unknown key [{sec}] {k}"))),
            },
            "scheme" => match k {
                "name" => scheme_name = v.to_string(),
                "im_active" => {
                    im_active = parse_plain(k, v)?;
                    im_active_set = true;
                }
                "patterns" => {
                    patterns = parse_plain(k, v)?;
                    patterns_set = true;
                }
                "corr_r" => mimo.corr_r = parse_plain(k, v)?,
                "forward_ris_noise" => mimo.forward_ris_noise = parse_bool(k, v)?,
                "mbcd_iters" => mimo.mbcd_iters = parse_plain(k, v)?,
                "codebook_file" => codebook_file = Some(v.to_string()),
                _ => return Err(Error::config(format!("unknown key [{sec}] {k}"))),
            },
            "mi" => match k {
                "noise_samples" => mi_noise_samples = parse_plain(k, v)?,
                _ => return Err(Error::config(format!("unknown key [{sec}] {k}"))),
            },
            _ => return Err(Error::config(format!("unknown section [{sec}]"))),
        }
    }
    if !im_active_set {
        im_active = system.n_groups / 2;
    }
    if !patterns_set {
        patterns = system.codebook_order;
    }
    if !grid_set {
        sweep.p_ap_grid = vec![system.p_ap];
    }

    system.validate()?;
    sweep.validate()?;

    let scheme = match scheme_name.as_str() {
        "adrm" => Some(Scheme::Adrm),
        "adrm-fixed" => None, // codebook loaded by the command
        "pdrm" => Some(Scheme::Baseline(BaselineScheme::pdrm(system.n_groups, patterns)?)),
        "im" => Some(Scheme::Baseline(BaselineScheme::im(system.n_groups, im_active)?)),
        "srpm" => Some(Scheme::Baseline(BaselineScheme::srpm(system.n_groups, patterns)?)),
        "adrm-mimo" => Some(Scheme::Mimo(mimo.clone())),
        other => {
            return Err(Error::config(format!(
                "unknown scheme '{other}' (expected adrm, adrm-fixed, pdrm, im, srpm, adrm-mimo)"
            )))
        }
    };

    Ok(RunConfig {
        system,
        sweep,
        scheme,
        mimo,
        codebook_file,
        mi_noise_samples,
        im_active,
        patterns,
    })
}
