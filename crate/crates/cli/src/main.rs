//! Batch front-end: parses configuration files, dispatches subcommands,
//! writes CSV results with reproducible metadata.

mod config_file;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use aris_adrm::analysis::{abep_bound, mi_estimate};
use aris_adrm::baselines::BaselineScheme;
use aris_adrm::codebook::design_codebook_sca;
use aris_adrm::engine::{run_ber_sweep, watts_to_dbm, Scheme};
use aris_adrm::rng::stream;
use aris_adrm::{
    h_statistics, AapCodebook, ChannelRealization, Constellation, Error, Result, SystemConfig,
};

use config_file::{parse_config, RunConfig};

#[derive(Parser)]
#[command(
    name = "aris-adrm",
    about = "Link-level simulator for amplitude-domain reflection modulation",
    version
)]
struct Cli {
    /// Configuration file path.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Output file; stdout when omitted.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Override the master seed from the configuration file.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Worker thread count; defaults to all cores.
    #[arg(long, global = true)]
    workers: Option<usize>,
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Design an amplitude codebook on one seeded channel realization.
    Design,
    /// Monte-Carlo BER sweep for the configured scheme.
    Ber,
    /// Closed-form error-bound curve on the sweep grid.
    Theory,
    /// Monte-Carlo mutual-information curve on the sweep grid.
    Mi,
    /// Monte-Carlo BER sweep for the multi-antenna scheme.
    MimoBer,
    /// BER sweeps for the reference scheme and all benchmark schemes.
    BaselineCompare,
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            // clap's help/version output goes to stdout with success
            let _ = e.print();
            return if e.use_stderr() { ExitCode::from(1) } else { ExitCode::SUCCESS };
        }
    };
    match run(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            match e {
                Error::Config(_) | Error::Domain(_) => ExitCode::from(1),
                Error::Design(_) | Error::Numerical(_) => ExitCode::from(2),
            }
        }
    }
}

fn run(cli: &Cli) -> Result<()> {
    let path = cli
        .config
        .as_ref()
        .ok_or_else(|| Error::config("--config is required"))?;
    let text = std::fs::read_to_string(path)
        .map_err(|e| Error::config(format!("cannot read {}: {e}", path.display())))?;
    let mut rc = parse_config(&text)?;
    if let Some(seed) = cli.seed {
        rc.sweep.master_seed = seed;
    }

    let body = match cli.workers {
        Some(n) => {
            let pool = rayon::ThreadPoolBuilder::new()
                .num_threads(n)
                .build()
                .map_err(|e| Error::config(format!("cannot build {n}-worker pool: {e}")))?;
            pool.install(|| dispatch(cli, &rc))?
        }
        None => dispatch(cli, &rc)?,
    };

    match &cli.out {
        Some(out) => std::fs::write(out, body)
            .map_err(|e| Error::config(format!("cannot write {}: {e}", out.display()))),
        None => {
            print!("{body}");
            Ok(())
        }
    }
}

fn dispatch(cli: &Cli, rc: &RunConfig) -> Result<String> {
    match cli.cmd {
        Cmd::Design => cmd_design(rc),
        Cmd::Ber => {
            let scheme = resolve_scheme(rc)?;
            Ok(run_ber_sweep(&rc.system, &rc.sweep, &scheme)?.to_csv())
        }
        Cmd::MimoBer => {
            let curve =
                run_ber_sweep(&rc.system, &rc.sweep, &Scheme::Mimo(rc.mimo.clone()))?;
            Ok(curve.to_csv())
        }
        Cmd::Theory => cmd_theory(rc),
        Cmd::Mi => cmd_mi(rc),
        Cmd::BaselineCompare => cmd_baseline_compare(rc),
    }
}

fn resolve_scheme(rc: &RunConfig) -> Result<Scheme> {
    match &rc.scheme {
        Some(s) => Ok(s.clone()),
        None => {
            let path = rc.codebook_file.as_ref().ok_or_else(|| {
                Error::config("scheme adrm-fixed needs [scheme] codebook_file")
            })?;
            let text = std::fs::read_to_string(path)
                .map_err(|e| Error::config(format!("cannot read {path}: {e}")))?;
            Ok(Scheme::AdrmFixed(AapCodebook::from_text(&text)?))
        }
    }
}

/// Codebook used by the theory commands: the configured file when given,
/// otherwise a fresh design on the seed's channel realization (the same
/// realization `design` would use).
fn theory_codebook(rc: &RunConfig) -> Result<AapCodebook> {
    if let Some(path) = &rc.codebook_file {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::config(format!("cannot read {path}: {e}")))?;
        return AapCodebook::from_text(&text);
    }
    let constellation = Constellation::new(rc.system.mod_order)?;
    let mut rng = stream(rc.sweep.master_seed, &[0]);
    let chan = ChannelRealization::generate(&rc.system, &mut rng)?;
    Ok(design_codebook_sca(&chan, &constellation, &rc.system)?.0)
}

fn config_echo(cfg: &SystemConfig, seed: u64) -> Vec<String> {
    vec![
        format!("master_seed: {seed}"),
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
        format!("version: {}", env!("CARGO_PKG_VERSION")),
    ]
}

fn cmd_design(rc: &RunConfig) -> Result<String> {
    let constellation = Constellation::new(rc.system.mod_order)?;
    let mut rng = stream(rc.sweep.master_seed, &[0]);
    let chan = ChannelRealization::generate(&rc.system, &mut rng)?;
    let (cb, trace) = design_codebook_sca(&chan, &constellation, &rc.system)?;
    let mut out = String::new();
    out.push_str("# designed amplitude codebook\n");
    for line in config_echo(&rc.system, rc.sweep.master_seed) {
        out.push_str(&format!("# {line}\n"));
    }
    out.push_str(&format!("# sca_iterations: {}\n", trace.iterations));
    out.push_str(&format!("# sca_converged: {}\n", trace.converged));
    let taus: Vec<String> = trace.tau_per_iter.iter().map(|t| format!("{t:.6e}")).collect();
    out.push_str(&format!("# sca_tau_trace: {}\n", taus.join(" ")));
    out.push_str(&cb.to_text());
    Ok(out)
}

fn cmd_theory(rc: &RunConfig) -> Result<String> {
    let constellation = Constellation::new(rc.system.mod_order)?;
    let cb = theory_codebook(rc)?;
    let (mu, var) = h_statistics(&rc.system);
    let mut out = String::new();
    out.push_str("# scheme: theory-abep\n");
    for line in config_echo(&rc.system, rc.sweep.master_seed) {
        out.push_str(&format!("# {line}\n"));
    }
    out.push_str("p_ap_dBm,abep\n");
    for &p in &rc.sweep.p_ap_grid {
        let mut cfg = rc.system.clone();
        cfg.p_ap = p;
        let bound = abep_bound(&cb, &constellation, &cfg, mu, var);
        out.push_str(&format!("{:.6},{:.10e}\n", watts_to_dbm(p), bound));
    }
    Ok(out)
}

fn cmd_mi(rc: &RunConfig) -> Result<String> {
    let constellation = Constellation::new(rc.system.mod_order)?;
    let cb = theory_codebook(rc)?;
    let mut rng = stream(rc.sweep.master_seed, &[0]);
    let chan = ChannelRealization::generate(&rc.system, &mut rng)?;
    let mut out = String::new();
    out.push_str("# scheme: mutual-information\n");
    for line in config_echo(&rc.system, rc.sweep.master_seed) {
        out.push_str(&format!("# {line}\n"));
    }
    out.push_str(&format!("# noise_samples: {}\n", rc.mi_noise_samples));
    out.push_str("p_ap_dBm,mi\n");
    for (pi, &p) in rc.sweep.p_ap_grid.iter().enumerate() {
        let mut cfg = rc.system.clone();
        cfg.p_ap = p;
        let mut rng = stream(rc.sweep.master_seed, &[pi as u64, 1]);
        let mi = mi_estimate(
            &chan.h,
            &cb,
            &constellation,
            &cfg,
            rc.mi_noise_samples,
            &mut rng,
        )?;
        out.push_str(&format!("{:.6},{:.10e}\n", watts_to_dbm(p), mi));
    }
    Ok(out)
}

fn cmd_baseline_compare(rc: &RunConfig) -> Result<String> {
    let l = rc.system.n_groups;
    let schemes: Vec<(&str, Scheme)> = vec![
        ("adrm", Scheme::Adrm),
        (
            "pdrm",
            Scheme::Baseline(BaselineScheme::pdrm(l, rc.patterns)?),
        ),
        ("im", Scheme::Baseline(BaselineScheme::im(l, rc.im_active)?)),
        (
            "srpm",
            Scheme::Baseline(BaselineScheme::srpm(l, rc.patterns)?),
        ),
    ];
    let mut curves = Vec::new();
    for (name, scheme) in &schemes {
        let curve = run_ber_sweep(&rc.system, &rc.sweep, scheme)?;
        curves.push((*name, curve));
    }
    let mut out = String::new();
    for (name, curve) in &curves {
        for line in &curve.metadata {
            out.push_str(&format!("# [{name}] {line}\n"));
        }
    }
    out.push_str("p_ap_dBm");
    for (name, _) in &curves {
        out.push_str(&format!(",ber_{name}"));
    }
    out.push('\n');
    for (i, &p) in rc.sweep.p_ap_grid.iter().enumerate() {
        out.push_str(&format!("{:.6}", watts_to_dbm(p)));
        for (_, curve) in &curves {
            out.push_str(&format!(",{:.10e}", curve.points[i].ber));
        }
        out.push('\n');
    }
    Ok(out)
}
