//! Scenario parameters shared by every module.

use crate::error::{Error, Result};

/// All scalar parameters of a simulation scenario. Linear units throughout
/// (watts, meters); dB/dBm conversion happens at the CLI boundary.
#[derive(Debug, Clone, PartialEq)]
pub struct SystemConfig {
    /// Number of RIS reflecting elements.
    pub n_elements: usize,
    /// Number of element groups sharing an amplitude.
    pub n_groups: usize,
    /// AAP codebook order A.
    pub codebook_order: usize,
    /// QAM modulation order M.
    pub mod_order: usize,
    /// AP transmit power, watts.
    pub p_ap: f64,
    /// Active-RIS output power budget, watts.
    pub p_a: f64,
    /// Maximum per-element amplification gain.
    pub alpha_max: f64,
    /// RIS amplifier thermal noise power, watts.
    pub sigma_r_sq: f64,
    /// Receiver thermal noise power, watts.
    pub sigma_0_sq: f64,
    /// AP-to-user distance, meters (MIMO direct link).
    pub d0: f64,
    /// AP-to-RIS distance, meters.
    pub d1: f64,
    /// RIS-to-user distance, meters.
    pub d2: f64,
    /// Rician factors for the direct, AP-RIS and RIS-user links.
    pub k0: f64,
    pub k1: f64,
    pub k2: f64,
    /// Path-loss exponents for the three links.
    pub v0: f64,
    pub v1: f64,
    pub v2: f64,
    /// Path-loss factor at 1 m reference distance, linear.
    pub rho_r: f64,
    /// Carrier wavelength, meters.
    pub lambda: f64,
    /// Transmit / receive antenna counts (1 for SISO).
    pub nt: usize,
    pub nr: usize,
}

impl SystemConfig {
    /// Validate the structural and positivity invariants.
    pub fn validate(&self) -> Result<()> {
        if self.n_elements == 0 || self.n_groups == 0 {
            return Err(Error::config("N and L must be positive"));
        }
        if self.n_elements % self.n_groups != 0 {
            return Err(Error::config(format!(
                "N = {} must be divisible by L = {}",
                self.n_elements, self.n_groups
            )));
        }
        if !self.codebook_order.is_power_of_two() {
            return Err(Error::config(format!(
                "codebook order A = {} must be a power of two",
                self.codebook_order
            )));
        }
        if !self.mod_order.is_power_of_two() || self.mod_order < 2 {
            return Err(Error::config(format!(
                "modulation order M = {} must be a power of two >= 2",
                self.mod_order
            )));
        }
        if self.alpha_max <= 1.0 {
            return Err(Error::config("alpha_max must exceed 1"));
        }
        for (name, v) in [
            ("p_ap", self.p_ap),
            ("p_a", self.p_a),
            ("d0", self.d0),
            ("d1", self.d1),
            ("d2", self.d2),
            ("v0", self.v0),
            ("v1", self.v1),
            ("v2", self.v2),
            ("rho_r", self.rho_r),
            ("lambda", self.lambda),
        ] {
            if !(v > 0.0) {
                return Err(Error::config(format!("{name} must be positive, got {v}")));
            }
        }
        for (name, v) in [
            ("k0", self.k0),
            ("k1", self.k1),
            ("k2", self.k2),
            ("sigma_r_sq", self.sigma_r_sq),
            ("sigma_0_sq", self.sigma_0_sq),
        ] {
            if !(v >= 0.0) {
                return Err(Error::config(format!("{name} must be nonnegative, got {v}")));
            }
        }
        if self.nt == 0 || self.nr == 0 {
            return Err(Error::config("antenna counts must be positive"));
        }
        Ok(())
    }

    /// Elements per group.
    pub fn n_bar(&self) -> usize {
        self.n_elements / self.n_groups
    }

    /// Large-scale path loss of the AP-to-user link.
    pub fn rho0(&self) -> f64 {
        self.rho_r * self.d0.powf(-self.v0)
    }

    /// Large-scale path loss of the AP-to-RIS link.
    pub fn rho1(&self) -> f64 {
        self.rho_r * self.d1.powf(-self.v1)
    }

    /// Large-scale path loss of the RIS-to-user link.
    pub fn rho2(&self) -> f64 {
        self.rho_r * self.d2.powf(-self.v2)
    }

    /// Bits per channel use: log2 M + log2 A, plus the V-BLAST factor for
    /// multi-antenna transmitters.
    pub fn rate_bits(&self) -> u32 {
        self.nt as u32 * self.mod_order.trailing_zeros() + self.codebook_order.trailing_zeros()
    }

    /// Reference scenario: N = 128, L = 4, A = 4, 4QAM, -80 dBm noise,
    /// 30 dBm RIS budget, 10x max gain, K1 = K2 = 3 Rician links.
    pub fn reference() -> Self {
        SystemConfig {
            n_elements: 128,
            n_groups: 4,
            codebook_order: 4,
            mod_order: 4,
            p_ap: 1e-2,
            p_a: 1.0,             // 30 dBm
            alpha_max: 10.0,
            sigma_r_sq: 1e-11,    // -80 dBm
            sigma_0_sq: 1e-11,
            d0: 55.0,
            d1: 5.0,
            d2: 50.0,
            k0: 0.0,
            k1: 3.0,
            k2: 3.0,
            v0: 3.5,
            v1: 2.0,
            v2: 2.0,
            rho_r: 1e-3,          // -30 dB
            lambda: 0.1,
            nt: 1,
            nr: 1,
        }
    }
}
