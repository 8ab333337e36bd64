//! Node placement and the ring-based location state of each femtocell.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(from = "[f64; 2]", into = "[f64; 2]")]
pub struct Position {
    pub x: f64,
    pub y: f64,
}

impl Position {
    pub const fn new(x: f64, y: f64) -> Self {
        Position { x, y }
    }

    pub fn distance(self, other: Position) -> f64 {
        (self.x - other.x).hypot(self.y - other.y)
    }

    fn offset(self, dx: f64, dy: f64) -> Position {
        Position::new(self.x + dx, self.y + dy)
    }
}

impl From<[f64; 2]> for Position {
    fn from([x, y]: [f64; 2]) -> Self {
        Position { x, y }
    }
}

impl From<Position> for [f64; 2] {
    fn from(p: Position) -> Self {
        [p.x, p.y]
    }
}

/// Positions of the macro cell and of every femtocell with its user.
///
/// `fbs[i]` serves `fue[i]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Topology {
    pub mbs: Position,
    pub mue: Position,
    pub fbs: Vec<Position>,
    pub fue: Vec<Position>,
}

impl Topology {
    /// Number of femtocells.
    pub fn len(&self) -> usize {
        self.fbs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.fbs.is_empty()
    }

    /// Restricts the topology to the femtocells listed in `indices`, in that order.
    pub fn subset(&self, indices: &[usize]) -> Topology {
        Topology {
            mbs: self.mbs,
            mue: self.mue,
            fbs: indices.iter().map(|&i| self.fbs[i]).collect(),
            fue: indices.iter().map(|&i| self.fue[i]).collect(),
        }
    }

    pub fn validate(&self, fue_radius: f64) -> Result<()> {
        if self.fbs.is_empty() {
            return Err(Error::domain("topology needs at least one femtocell"));
        }
        if self.fbs.len() != self.fue.len() {
            return Err(Error::domain(format!(
                "{} FBSs but {} FUEs",
                self.fbs.len(),
                self.fue.len()
            )));
        }
        let mut nodes = vec![self.mbs, self.mue];
        nodes.extend_from_slice(&self.fbs);
        nodes.extend_from_slice(&self.fue);
        if nodes.iter().any(|p| !p.x.is_finite() || !p.y.is_finite()) {
            return Err(Error::domain("non-finite coordinate"));
        }
        for (i, (b, u)) in self.fbs.iter().zip(&self.fue).enumerate() {
            let d = b.distance(*u);
            if d > fue_radius + 1e-9 {
                return Err(Error::domain(format!(
                    "FUE {i} is {d:.2} m from its FBS (radius {fue_radius} m)"
                )));
            }
        }
        for a in 0..nodes.len() {
            for b in a + 1..nodes.len() {
                if nodes[a] == nodes[b] {
                    return Err(Error::domain(format!(
                        "nodes coincide at ({}, {})",
                        nodes[a].x, nodes[a].y
                    )));
                }
            }
        }
        Ok(())
    }
}

/// Geometry knobs for [`generate_layout`].
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct LayoutParams {
    /// FBS grid spacing, meters.
    pub spacing: f64,
    /// Maximum FUE distance from its FBS, meters.
    pub fue_radius: f64,
    /// Minimum FUE distance from its FBS, meters. Keeps the serving link
    /// outside the region where the log-distance model would predict gain.
    pub fue_min_distance: f64,
    pub mbs: Position,
    pub mue: Position,
    /// Displacement of the MUE from the center of the FBS grid.
    pub mue_offset: Position,
}

impl Default for LayoutParams {
    fn default() -> Self {
        LayoutParams {
            spacing: 35.0,
            fue_radius: 10.0,
            fue_min_distance: 1.0,
            mbs: Position::new(300.0, 0.0),
            mue: Position::new(0.0, 0.0),
            mue_offset: Position::new(0.0, 0.0),
        }
    }
}

impl LayoutParams {
    pub fn validate(&self) -> Result<()> {
        if !(self.spacing > 0.0) {
            return Err(Error::config("layout.spacing", "must be positive"));
        }
        if !(self.fue_radius > 0.0) {
            return Err(Error::config("layout.fue_radius", "must be positive"));
        }
        if !(self.fue_min_distance >= 0.0 && self.fue_min_distance < self.fue_radius) {
            return Err(Error::config(
                "layout.fue_min_distance",
                "must be in [0, fue_radius)",
            ));
        }
        Ok(())
    }
}

/// Places `m` FBSs row-major on a square grid centered on the MUE (less
/// `mue_offset`) and drops each FUE uniformly in the annulus around its FBS.
pub fn generate_layout(m: usize, params: &LayoutParams, seed: u64) -> Result<Topology> {
    if m == 0 {
        return Err(Error::domain("layout needs at least one femtocell"));
    }
    params.validate()?;
    let cols = (m as f64).sqrt().ceil() as usize;
    let rows = m.div_ceil(cols);
    let s = params.spacing;
    let origin = params.mue.offset(
        -params.mue_offset.x - (cols - 1) as f64 * s / 2.0,
        -params.mue_offset.y - (rows - 1) as f64 * s / 2.0,
    );

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let (r_lo, r_hi) = (params.fue_min_distance, params.fue_radius);
    let mut fbs = Vec::with_capacity(m);
    let mut fue = Vec::with_capacity(m);
    for k in 0..m {
        let b = origin.offset((k % cols) as f64 * s, (k / cols) as f64 * s);
        // area-uniform radius over the annulus
        let u: f64 = rng.gen();
        let r = (r_lo * r_lo + u * (r_hi * r_hi - r_lo * r_lo)).sqrt();
        let theta = rng.gen::<f64>() * std::f64::consts::TAU;
        fbs.push(b);
        fue.push(b.offset(r * theta.cos(), r * theta.sin()));
    }
    let topo = Topology {
        mbs: params.mbs,
        mue: params.mue,
        fbs,
        fue,
    };
    topo.validate(params.fue_radius)?;
    Ok(topo)
}

/// Ring radii around the MBS and around the MUE, meters.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct RingRadii {
    pub mbs_radii: Vec<f64>,
    pub mue_radii: Vec<f64>,
}

impl Default for RingRadii {
    fn default() -> Self {
        RingRadii {
            mbs_radii: vec![50.0, 150.0, 400.0],
            mue_radii: vec![15.0, 50.0, 125.0],
        }
    }
}

impl RingRadii {
    pub fn validate(&self) -> Result<()> {
        for (key, radii) in [("mbs_radii", &self.mbs_radii), ("mue_radii", &self.mue_radii)] {
            if radii.is_empty() {
                return Err(Error::config(key, format!("{key} is empty")));
            }
            if radii.iter().any(|r| !(r.is_finite() && *r > 0.0)) {
                return Err(Error::config(key, format!("{key} must be positive")));
            }
            if radii.windows(2).any(|w| w[0] >= w[1]) {
                return Err(Error::config(key, format!("{key} not ascending")));
            }
        }
        Ok(())
    }

    /// Number of distinct states, `(N1 + 1)(N2 + 1)`.
    pub fn state_count(&self) -> usize {
        (self.mbs_radii.len() + 1) * (self.mue_radii.len() + 1)
    }
}

/// Ring index of an FBS relative to the MBS and to the MUE; 0 is innermost.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct AgentState {
    pub d_mbs: usize,
    pub d_mue: usize,
}

impl AgentState {
    /// Row of this state in a Q-table (MBS ring major).
    pub fn index(self, radii: &RingRadii) -> usize {
        self.d_mbs * (radii.mue_radii.len() + 1) + self.d_mue
    }
}

/// Number of radii strictly smaller than `d`; a distance on a boundary
/// belongs to the inner ring.
pub fn ring_index(d: f64, radii: &[f64]) -> Result<usize> {
    if radii.is_empty() {
        return Err(Error::domain("ring radii list is empty"));
    }
    if d.is_nan() || d < 0.0 {
        return Err(Error::domain(format!("ring distance must be nonnegative, got {d}")));
    }
    Ok(radii.partition_point(|&r| r < d))
}

pub fn agent_state(
    fbs: Position,
    mbs: Position,
    mue: Position,
    radii: &RingRadii,
) -> Result<AgentState> {
    Ok(AgentState {
        d_mbs: ring_index(fbs.distance(mbs), &radii.mbs_radii)?,
        d_mue: ring_index(fbs.distance(mue), &radii.mue_radii)?,
    })
}

/// FBS-to-MUE distance normalized by the vicinity threshold.
#[derive(Debug, Clone, Copy, PartialEq, PartialOrd, Serialize, Deserialize)]
#[serde(transparent)]
pub struct Beta(f64);

impl Beta {
    pub fn new(value: f64) -> Result<Self> {
        if value.is_finite() && value > 0.0 {
            Ok(Beta(value))
        } else {
            Err(Error::domain(format!("beta must be positive and finite, got {value}")))
        }
    }

    pub fn value(self) -> f64 {
        self.0
    }
}

pub fn beta(fbs: Position, mue: Position, d_th: f64) -> Result<Beta> {
    if !(d_th > 0.0) {
        return Err(Error::domain(format!("d_th must be positive, got {d_th}")));
    }
    let d = fbs.distance(mue);
    if d == 0.0 {
        return Err(Error::domain("FBS coincides with the MUE"));
    }
    Beta::new(d / d_th)
}
