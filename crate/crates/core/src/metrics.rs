//! QoS link and path metrics.
//!
//! Links carry normalized strength `l_S`, connectivity `l_C` and a unit hop
//! count. Paths aggregate with min / min / sum.

use std::fmt;

use crate::error::{Error, Result};
use crate::geometry::Vec2;

/// Maximum reportable RSS, dBm.
pub const GAMMA_MAX_DBM: f64 = -10.0;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EdgeMetrics {
    /// `l_S` in (0, 1].
    pub strength: f64,
    /// `l_C` in (0, 1].
    pub connectivity: f64,
}

impl EdgeMetrics {
    pub fn new(strength: f64, connectivity: f64) -> Self {
        EdgeMetrics { strength, connectivity }
    }

    /// `l_H`, always one.
    pub fn hops(&self) -> u32 {
        1
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PathMetrics {
    pub strength: f64,
    pub connectivity: f64,
    pub hops: u32,
}

impl PathMetrics {
    pub fn single(e: EdgeMetrics) -> Self {
        PathMetrics {
            strength: e.strength,
            connectivity: e.connectivity,
            hops: e.hops(),
        }
    }

    pub fn extend(self, e: EdgeMetrics) -> Self {
        PathMetrics {
            strength: self.strength.min(e.strength),
            connectivity: self.connectivity.min(e.connectivity),
            hops: self.hops + e.hops(),
        }
    }
}

/// `(μ − γ_th) / (γ_M − γ_th)`.
pub fn normalized_strength(mu: f64, gamma_th: f64, gamma_m: f64) -> Result<f64> {
    if !(gamma_th < gamma_m) {
        return Err(Error::invalid(format!("γ_th {gamma_th} must be below γ_M {gamma_m}")));
    }
    if !(mu > gamma_th && mu <= gamma_m) {
        return Err(Error::ContractViolation(format!(
            "strength {mu} dBm outside ({gamma_th}, {gamma_m}]"
        )));
    }
    Ok((mu - gamma_th) / (gamma_m - gamma_th))
}

/// Relative motion of B with respect to A, seen at one instant.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RelativeKinematics {
    /// Distance between the nodes.
    pub dd: f64,
    /// Relative speed.
    pub dv: f64,
    /// Angle between the B→A displacement and B's relative velocity.
    pub alpha: f64,
    /// Communication range.
    pub range: f64,
}

impl RelativeKinematics {
    pub fn from_states(pos_a: Vec2, vel_a: Vec2, pos_b: Vec2, vel_b: Vec2, range: f64) -> Self {
        let disp = pos_a - pos_b;
        let rel_v = vel_b - vel_a;
        RelativeKinematics {
            dd: disp.norm(),
            dv: rel_v.norm(),
            alpha: disp.angle_to(rel_v),
            range,
        }
    }

    fn validate(&self) -> Result<()> {
        if !(self.dd >= 0.0 && self.dv >= 0.0 && self.range > 0.0) {
            return Err(Error::invalid(format!("invalid kinematics {self:?}")));
        }
        if !(0.0..=std::f64::consts::PI).contains(&self.alpha) {
            return Err(Error::invalid(format!("angle {} outside [0, π]", self.alpha)));
        }
        if self.dd > self.range {
            return Err(Error::invalid(format!(
                "nodes {} m apart are already beyond range {} m",
                self.dd, self.range
            )));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum LinkDuration {
    Finite(f64),
    Unbounded,
}

impl LinkDuration {
    pub fn finite(self) -> Option<f64> {
        match self {
            LinkDuration::Finite(t) => Some(t),
            LinkDuration::Unbounded => None,
        }
    }

    /// Shortens the duration by `dt`, not below zero.
    pub fn minus(self, dt: f64) -> Self {
        match self {
            LinkDuration::Finite(t) => LinkDuration::Finite((t - dt).max(0.0)),
            LinkDuration::Unbounded => LinkDuration::Unbounded,
        }
    }
}

impl fmt::Display for LinkDuration {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            LinkDuration::Finite(t) => write!(f, "{t}"),
            LinkDuration::Unbounded => f.write_str("inf"),
        }
    }
}

/// Duration formula as written for acute angles.
pub fn duration_acute_form(dd: f64, dv: f64, alpha: f64, range: f64) -> f64 {
    ((range * range - dd * dd * alpha.sin().powi(2)).max(0.0).sqrt() + dd * alpha.cos()) / dv
}

/// Duration formula as written for obtuse angles, in terms of π − α.
pub fn duration_obtuse_form(dd: f64, dv: f64, alpha: f64, range: f64) -> f64 {
    let beta = std::f64::consts::PI - alpha;
    ((range * range - dd * dd * beta.sin().powi(2)).max(0.0).sqrt() - dd * beta.cos()) / dv
}

/// Time until B leaves A's range.
pub fn link_duration(k: &RelativeKinematics) -> Result<LinkDuration> {
    k.validate()?;
    if k.dv == 0.0 {
        return Ok(LinkDuration::Unbounded);
    }
    let t = if k.alpha <= std::f64::consts::FRAC_PI_2 {
        duration_acute_form(k.dd, k.dv, k.alpha, k.range)
    } else {
        duration_obtuse_form(k.dd, k.dv, k.alpha, k.range)
    };
    Ok(LinkDuration::Finite(t.max(0.0)))
}

/// `min(T / τ, 1)`.
pub fn link_connectivity(duration: LinkDuration, tau: f64) -> f64 {
    match duration {
        LinkDuration::Unbounded => 1.0,
        LinkDuration::Finite(t) => (t.max(0.0) / tau).min(1.0),
    }
}

pub fn path_metrics(edges: &[EdgeMetrics]) -> Result<PathMetrics> {
    let (first, rest) = edges
        .split_first()
        .ok_or_else(|| Error::invalid("a path needs at least one edge"))?;
    Ok(rest.iter().fold(PathMetrics::single(*first), |p, e| p.extend(*e)))
}
