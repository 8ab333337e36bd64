//! Propagation models and link-level quantities.
//!
//! Everything inside the simulation loop is kept in the linear domain
//! (milliwatts and power ratios); decibel values only appear at the edges
//! (configuration, CSV output).
//!
//! Transmitter and receiver numbering: index 0 is the macro cell (MBS on
//! the transmit side, MUE on the receive side), index `i + 1` is femtocell
//! `i` (FBS `i` transmitting, FUE `i` receiving).

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::topology::Topology;

/// Transmit power in dBm.
#[derive(Debug, Clone, Copy, PartialEq, PartialOrd, Serialize, Deserialize)]
#[serde(transparent)]
pub struct PowerDbm(pub f64);

/// Transmit power in milliwatts.
#[derive(Debug, Clone, Copy, PartialEq, PartialOrd, Serialize, Deserialize)]
#[serde(transparent)]
pub struct PowerMw(pub f64);

impl PowerDbm {
    pub fn to_mw(self) -> PowerMw {
        PowerMw(dbm_to_mw(self.0))
    }
}

impl PowerMw {
    pub fn to_dbm(self) -> PowerDbm {
        PowerDbm(mw_to_dbm(self.0))
    }
}

impl From<PowerDbm> for PowerMw {
    fn from(p: PowerDbm) -> Self {
        p.to_mw()
    }
}

impl From<PowerMw> for PowerDbm {
    fn from(p: PowerMw) -> Self {
        p.to_dbm()
    }
}

pub fn dbm_to_mw(dbm: f64) -> f64 {
    10f64.powf(dbm / 10.0)
}

pub fn mw_to_dbm(mw: f64) -> f64 {
    10.0 * mw.log10()
}

/// Dimensionless power ratio of a link, in `(0, 1]`.
#[derive(Debug, Clone, Copy, PartialEq, PartialOrd)]
pub struct LinearGain(f64);

impl LinearGain {
    pub fn new(value: f64) -> Result<Self> {
        if value.is_finite() && value > 0.0 && value <= 1.0 {
            Ok(LinearGain(value))
        } else {
            Err(Error::domain(format!("linear gain {value} outside (0, 1]")))
        }
    }

    pub fn value(self) -> f64 {
        self.0
    }
}

/// Noise variance in milliwatts.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NoisePower(f64);

impl NoisePower {
    pub fn from_mw(sigma2: f64) -> Result<Self> {
        if sigma2.is_finite() && sigma2 > 0.0 {
            Ok(NoisePower(sigma2))
        } else {
            Err(Error::domain(format!("noise power must be positive, got {sigma2} mW")))
        }
    }

    pub fn from_dbm(dbm: f64) -> Result<Self> {
        Self::from_mw(dbm_to_mw(dbm))
    }

    pub fn mw(self) -> f64 {
        self.0
    }
}

/// Log-distance model for the macro link and femto serving links:
/// `PL0 + 10 n log10(d / d0)`.
pub fn pathloss_residential(d: f64, pl0: f64, n: f64, d0: f64) -> Result<f64> {
    if !(d > 0.0) || !(d0 > 0.0) {
        return Err(Error::domain(format!(
            "residential path loss needs d > 0 and d0 > 0 (d = {d}, d0 = {d0})"
        )));
    }
    Ok(pl0 + 10.0 * n * (d / d0).log10())
}

/// Empirical indoor-to-outdoor femtocell model, `f` in GHz.
pub fn pathloss_indoor_outdoor(d: f64, f: f64) -> Result<f64> {
    if !(d > 0.0) || !(f > 0.0) {
        return Err(Error::domain(format!(
            "indoor-outdoor path loss needs d > 0 and f > 0 (d = {d}, f = {f})"
        )));
    }
    Ok(penetration_loss(f) + 62.3 + 32.0 * (d / 5.0).log10())
}

/// Frequency-dependent wall penetration term of the indoor-to-outdoor model.
pub fn penetration_loss(f: f64) -> f64 {
    -1.8 * f * f + 10.6 * f + 6.1
}

pub fn gain_from_pathloss(pl_db: f64) -> f64 {
    10f64.powf(-pl_db / 10.0)
}

/// Parameters of the two path-loss models.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct PathLossParams {
    /// Reference loss at `d0`, dB.
    pub pl0: f64,
    /// Path-loss exponent of the residential model.
    pub exponent: f64,
    /// Reference distance, meters.
    pub d0: f64,
    /// Carrier frequency, GHz.
    pub frequency_ghz: f64,
}

impl Default for PathLossParams {
    fn default() -> Self {
        PathLossParams {
            pl0: 62.3,
            exponent: 4.0,
            d0: 5.0,
            frequency_ghz: 2.4,
        }
    }
}

/// Linear gains of every transmitter→receiver link in a scenario.
#[derive(Debug, Clone, PartialEq)]
pub struct GainMatrix {
    femtocells: usize,
    // tx-major, (M + 1) x (M + 1)
    gains: Vec<f64>,
}

impl GainMatrix {
    /// Builds a matrix from raw `(M + 1) x (M + 1)` tx-major gains.
    pub fn from_raw(femtocells: usize, gains: Vec<f64>) -> Result<Self> {
        let side = femtocells + 1;
        if gains.len() != side * side {
            return Err(Error::domain(format!(
                "gain matrix for {femtocells} femtocells needs {} entries, got {}",
                side * side,
                gains.len()
            )));
        }
        for &g in &gains {
            LinearGain::new(g)?;
        }
        Ok(GainMatrix { femtocells, gains })
    }

    pub fn femtocells(&self) -> usize {
        self.femtocells
    }

    pub fn len(&self) -> usize {
        self.gains.len()
    }

    pub fn is_empty(&self) -> bool {
        self.gains.is_empty()
    }

    /// Gain from transmitter `tx` to receiver `rx` (0 = macro, `i + 1` = femtocell `i`).
    pub fn get(&self, tx: usize, rx: usize) -> f64 {
        self.gains[tx * (self.femtocells + 1) + rx]
    }

    pub fn mbs_to_mue(&self) -> f64 {
        self.get(0, 0)
    }

    pub fn mbs_to_fue(&self, i: usize) -> f64 {
        self.get(0, i + 1)
    }

    pub fn fbs_to_mue(&self, i: usize) -> f64 {
        self.get(i + 1, 0)
    }

    /// Gain from FBS `j` to FUE `i`.
    pub fn fbs_to_fue(&self, j: usize, i: usize) -> f64 {
        self.get(j + 1, i + 1)
    }

    /// Returns the matrix with femtocells reordered so that new femtocell `k`
    /// is old femtocell `order[k]`.
    pub fn permuted(&self, order: &[usize]) -> Result<Self> {
        let m = self.femtocells;
        let mut seen = vec![false; m];
        if order.len() != m {
            return Err(Error::domain("permutation length mismatch"));
        }
        for &o in order {
            if o >= m || std::mem::replace(&mut seen[o], true) {
                return Err(Error::domain("not a permutation"));
            }
        }
        let map = |k: usize| if k == 0 { 0 } else { order[k - 1] + 1 };
        let side = m + 1;
        let mut gains = Vec::with_capacity(side * side);
        for tx in 0..side {
            for rx in 0..side {
                gains.push(self.get(map(tx), map(rx)));
            }
        }
        Ok(GainMatrix { femtocells: m, gains })
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.gains
    }
}

/// Computes all link gains for a topology.
///
/// Macro→MUE, macro→FUE and FBS→own FUE links use the residential model;
/// FBS→MUE and FBS→foreign FUE links use the indoor-to-outdoor model.
pub fn build_gain_matrix(topology: &Topology, params: &PathLossParams) -> Result<GainMatrix> {
    let m = topology.len();
    let side = m + 1;
    let mut gains = Vec::with_capacity(side * side);

    let residential = |d: f64| pathloss_residential(d, params.pl0, params.exponent, params.d0);
    let indoor_outdoor = |d: f64| pathloss_indoor_outdoor(d, params.frequency_ghz);

    for tx in 0..side {
        let tx_pos = if tx == 0 { topology.mbs } else { topology.fbs[tx - 1] };
        for rx in 0..side {
            let rx_pos = if rx == 0 { topology.mue } else { topology.fue[rx - 1] };
            let d = tx_pos.distance(rx_pos);
            if d <= 0.0 {
                return Err(Error::domain(format!(
                    "transmitter {tx} and receiver {rx} are co-located"
                )));
            }
            let pl = if tx == 0 || tx == rx {
                residential(d)?
            } else {
                indoor_outdoor(d)?
            };
            let g = gain_from_pathloss(pl);
            if g > 1.0 {
                return Err(Error::domain(format!(
                    "link {tx}->{rx} at {d:.3} m has negative path loss ({pl:.3} dB)"
                )));
            }
            gains.push(g);
        }
    }
    Ok(GainMatrix { femtocells: m, gains })
}

fn check_powers(fbs_powers: &[f64], gains: &GainMatrix) {
    debug_assert_eq!(
        fbs_powers.len(),
        gains.femtocells(),
        "one power per femtocell"
    );
}

/// SINR at the macro user; powers in mW.
pub fn sinr_mue(p_bs: f64, fbs_powers: &[f64], gains: &GainMatrix, noise: NoisePower) -> f64 {
    check_powers(fbs_powers, gains);
    let interference: f64 = fbs_powers
        .iter()
        .enumerate()
        .map(|(i, p)| p * gains.fbs_to_mue(i))
        .sum();
    p_bs * gains.mbs_to_mue() / (interference + noise.mw())
}

/// SINR at FUE `i` (0-based); powers in mW.
pub fn sinr_fue(
    i: usize,
    p_bs: f64,
    fbs_powers: &[f64],
    gains: &GainMatrix,
    noise: NoisePower,
) -> Result<f64> {
    check_powers(fbs_powers, gains);
    if i >= fbs_powers.len() {
        return Err(Error::OutOfRange {
            index: i,
            len: fbs_powers.len(),
        });
    }
    let interference: f64 = fbs_powers
        .iter()
        .enumerate()
        .filter(|&(j, _)| j != i)
        .map(|(j, p)| p * gains.fbs_to_fue(j, i))
        .sum();
    let denom = p_bs * gains.mbs_to_fue(i) + interference + noise.mw();
    Ok(fbs_powers[i] * gains.fbs_to_fue(i, i) / denom)
}

/// Normalized Shannon capacity in b/s/Hz.
pub fn capacity(sinr: f64) -> Result<f64> {
    if sinr.is_nan() || sinr < 0.0 {
        return Err(Error::domain(format!("SINR must be nonnegative, got {sinr}")));
    }
    Ok((1.0 + sinr).log2())
}

/// Capacities of every user under one joint power assignment.
#[derive(Debug, Clone, PartialEq)]
pub struct LinkCapacities {
    pub c_mue: f64,
    pub c_fue: Vec<f64>,
}

impl LinkCapacities {
    pub fn sum_fue(&self) -> f64 {
        self.c_fue.iter().sum()
    }
}

/// Evaluates the capacities of all users for a joint action.
pub fn evaluate(
    p_bs: f64,
    fbs_powers: &[f64],
    gains: &GainMatrix,
    noise: NoisePower,
) -> LinkCapacities {
    let c_mue = (1.0 + sinr_mue(p_bs, fbs_powers, gains, noise)).log2();
    let c_fue = (0..fbs_powers.len())
        .map(|i| {
            let sinr = sinr_fue(i, p_bs, fbs_powers, gains, noise).expect("index in range");
            (1.0 + sinr).log2()
        })
        .collect();
    LinkCapacities { c_mue, c_fue }
}
