//! Active-RIS output power, total consumed power, and the uniform
//! amplification gain used by the benchmark schemes.

use num_complex::Complex64;

use crate::config::SystemConfig;

/// Power accounting for one configuration (amplifier efficiency taken as 1,
/// DC biasing term dropped).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PowerBreakdown {
    pub p_ap: f64,
    /// RIS output power.
    pub p_a_out: f64,
    /// Circuit power N * P_c.
    pub p_circuit: f64,
    pub total: f64,
}

/// RIS output power P_AP |p^H a_k|^2 + sigma_r^2 ||a_k||^2.
pub fn ris_output_power(a_k: &[f64], p_vector: &[Complex64], cfg: &SystemConfig) -> f64 {
    let forwarded: Complex64 = p_vector
        .iter()
        .zip(a_k)
        .map(|(pl, al)| pl.conj() * al)
        .sum();
    let norm_sq: f64 = a_k.iter().map(|a| a * a).sum();
    cfg.p_ap * forwarded.norm_sqr() + cfg.sigma_r_sq * norm_sq
}

/// Total consumed power. The passive variant omits the RIS output term.
pub fn total_power(
    cfg: &SystemConfig,
    a_k: &[f64],
    p_vector: &[Complex64],
    p_c: f64,
    active: bool,
) -> PowerBreakdown {
    let p_a_out = if active {
        ris_output_power(a_k, p_vector, cfg)
    } else {
        0.0
    };
    let p_circuit = cfg.n_elements as f64 * p_c;
    PowerBreakdown {
        p_ap: cfg.p_ap,
        p_a_out,
        p_circuit,
        total: cfg.p_ap + p_a_out + p_circuit,
    }
}

/// Uniform amplification gain for the benchmark schemes:
/// alpha* = min(alpha_max, sqrt(P_a / (P_AP |sum_l p_l|^2 + L sigma_r^2))),
/// the largest gain for which alpha * 1_L meets the output-power budget.
pub fn uniform_alpha(p_vector: &[Complex64], cfg: &SystemConfig) -> f64 {
    let p_sum: Complex64 = p_vector.iter().sum();
    let l = p_vector.len() as f64;
    let denom = cfg.p_ap * p_sum.norm_sqr() + l * cfg.sigma_r_sq;
    if denom <= 0.0 {
        return cfg.alpha_max;
    }
    (cfg.p_a / denom).sqrt().min(cfg.alpha_max)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn cfg() -> SystemConfig {
        SystemConfig::reference()
    }

    #[test]
    fn ris_output_power_hand_values() {
        let mut c = cfg();
        c.p_ap = 1.0;
        c.sigma_r_sq = 0.01;
        let a_k = [0.8, 0.6];
        let p = [Complex64::new(4.0, 0.0), Complex64::new(4.0, 0.0)];
        // |0.8*4 + 0.6*4|^2 + 0.01*(0.64 + 0.36) = 31.36 + 0.01
        let got = ris_output_power(&a_k, &p, &c);
        assert!((got - 31.37).abs() < 1e-12);

        c.p_ap = 0.0;
        assert!((ris_output_power(&a_k, &p, &c) - 0.01).abs() < 1e-15);

        let zeros = [0.0, 0.0];
        assert_eq!(ris_output_power(&zeros, &p, &c), 0.0);
    }

    #[test]
    fn total_power_breakdown() {
        let mut c = cfg();
        c.sigma_r_sq = 0.0;
        c.p_ap = 0.0;
        let p = vec![Complex64::new(1.0, 0.0); 4];
        let a = vec![2.0; 4];
        let b = total_power(&c, &a, &p, 1e-3, true);
        assert_eq!(b.total, c.n_elements as f64 * 1e-3);

        let c = cfg();
        let active = total_power(&c, &a, &p, 1e-3, true);
        let passive = total_power(&c, &a, &p, 1e-3, false);
        assert!((active.total - passive.total - active.p_a_out).abs() < 1e-12);
        assert!(active.total >= 0.0 && active.p_a_out >= 0.0);
    }

    #[test]
    fn uniform_alpha_cases() {
        let mut c = cfg();
        c.p_a = 1e12;
        let p = vec![Complex64::new(0.1, 0.0); 4];
        assert_eq!(uniform_alpha(&p, &c), 10.0);

        let mut c = cfg();
        c.sigma_r_sq = 0.0;
        c.p_ap = c.p_a;
        let p = vec![Complex64::new(1.0, 0.0)];
        assert!((uniform_alpha(&p, &c) - 1.0).abs() < 1e-12);
    }

    #[test]
    fn uniform_alpha_meets_budget() {
        let c = cfg();
        let p = vec![
            Complex64::new(0.04, 0.01),
            Complex64::new(0.03, -0.02),
            Complex64::new(0.05, 0.0),
            Complex64::new(0.02, 0.02),
        ];
        let alpha = uniform_alpha(&p, &c);
        let a = vec![alpha; 4];
        let out = ris_output_power(&a, &p, &c);
        assert!(out <= c.p_a * (1.0 + 1e-9), "out = {out}");
    }
}
