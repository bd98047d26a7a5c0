//! Probe and test ensembles on the Bloch sphere.

use std::f64::consts::PI;
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{invalid, Result};
use crate::qubit::{state_from_angles, BlochVector, PureState};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "camelCase", deny_unknown_fields)]
pub enum ProbeKind {
    /// The six Pauli eigenstates.
    Pauli6,
    /// Vertices `(±1, ±1, ±1)/√3` of the inscribed cube.
    Cube8,
    /// Vertices of the inscribed icosahedron.
    Icosahedron12,
    /// Both poles plus rings of constant colatitude.
    Latlon { n: usize },
    /// Fibonacci (golden-angle) spiral lattice.
    Fibonacci { n: usize },
}

impl ProbeKind {
    /// Parses a kind name as used on the command line, e.g. `fibonacci` with `n = Some(30)`.
    pub fn parse(name: &str, n: Option<usize>) -> Result<Self> {
        let need_n = || n.ok_or_else(|| invalid(format!("probe kind {name} requires a count")));
        Ok(match name {
            "pauli6" => ProbeKind::Pauli6,
            "cube8" => ProbeKind::Cube8,
            "icosahedron12" => ProbeKind::Icosahedron12,
            "latlon" => ProbeKind::Latlon { n: need_n()? },
            "fibonacci" => ProbeKind::Fibonacci { n: need_n()? },
            other => return Err(invalid(format!("unknown probe kind {other:?}"))),
        })
    }

    pub fn len(&self) -> usize {
        match self {
            ProbeKind::Pauli6 => 6,
            ProbeKind::Cube8 => 8,
            ProbeKind::Icosahedron12 => 12,
            ProbeKind::Latlon { n } | ProbeKind::Fibonacci { n } => *n,
        }
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }
}

impl fmt::Display for ProbeKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ProbeKind::Pauli6 => write!(f, "pauli6"),
            ProbeKind::Cube8 => write!(f, "cube8"),
            ProbeKind::Icosahedron12 => write!(f, "icosahedron12"),
            ProbeKind::Latlon { n } => write!(f, "latlon{n}"),
            ProbeKind::Fibonacci { n } => write!(f, "fibonacci{n}"),
        }
    }
}

/// Serializes as the generating kind plus the `[θ, φ]` pair of every state.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(into = "ProbeSetRecord", try_from = "ProbeSetRecord")]
pub struct ProbeSet {
    pub kind: ProbeKind,
    pub states: Vec<PureState>,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct ProbeSetRecord {
    probe: ProbeKind,
    angles: Vec<[f64; 2]>,
}

impl From<ProbeSet> for ProbeSetRecord {
    fn from(p: ProbeSet) -> Self {
        Self {
            probe: p.kind,
            angles: p.angles().into_iter().map(|(t, f)| [t, f]).collect(),
        }
    }
}

impl TryFrom<ProbeSetRecord> for ProbeSet {
    type Error = crate::error::Error;

    fn try_from(r: ProbeSetRecord) -> Result<Self> {
        let states = r
            .angles
            .iter()
            .map(|&[t, f]| state_from_angles(t, f))
            .collect::<Result<Vec<_>>>()?;
        Ok(Self { kind: r.probe, states })
    }
}

impl ProbeSet {
    pub fn bloch_vectors(&self) -> Vec<BlochVector> {
        self.states.iter().map(|s| s.bloch()).collect()
    }

    /// `(θ, φ)` of each state.
    pub fn angles(&self) -> Vec<(f64, f64)> {
        self.states
            .iter()
            .map(|s| s.bloch_angles.unwrap_or_else(|| s.bloch().angles()))
            .collect()
    }

    pub fn len(&self) -> usize {
        self.states.len()
    }

    pub fn is_empty(&self) -> bool {
        self.states.is_empty()
    }

    /// Index of the state whose Bloch vector is closest to `target`.
    pub fn closest_to(&self, target: BlochVector) -> Option<usize> {
        let t = target.normalized();
        self.bloch_vectors()
            .iter()
            .enumerate()
            .min_by(|a, b| (-a.1.dot(&t)).total_cmp(&-b.1.dot(&t)))
            .map(|(i, _)| i)
    }
}

pub fn probe_set(kind: ProbeKind) -> Result<ProbeSet> {
    let vectors = match kind {
        ProbeKind::Pauli6 => vec![
            BlochVector::new(1.0, 0.0, 0.0),
            BlochVector::new(-1.0, 0.0, 0.0),
            BlochVector::new(0.0, 1.0, 0.0),
            BlochVector::new(0.0, -1.0, 0.0),
            BlochVector::new(0.0, 0.0, 1.0),
            BlochVector::new(0.0, 0.0, -1.0),
        ],
        ProbeKind::Cube8 => {
            let s = 1.0 / 3f64.sqrt();
            let mut v = Vec::with_capacity(8);
            for x in [1.0, -1.0] {
                for y in [1.0, -1.0] {
                    for z in [1.0, -1.0] {
                        v.push(BlochVector::new(x * s, y * s, z * s));
                    }
                }
            }
            v
        }
        ProbeKind::Icosahedron12 => icosahedron(),
        ProbeKind::Latlon { n } => {
            if n < 2 {
                return Err(invalid(format!("latlon sampling needs n ≥ 2, got {n}")));
            }
            latlon(n)
        }
        ProbeKind::Fibonacci { n } => {
            if n < 2 {
                return Err(invalid(format!("fibonacci sampling needs n ≥ 2, got {n}")));
            }
            fibonacci(n)
        }
    };
    let states = vectors
        .iter()
        .map(|v| {
            let (theta, phi) = v.angles();
            state_from_angles(theta, phi)
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(ProbeSet { kind, states })
}

fn icosahedron() -> Vec<BlochVector> {
    let g = (1.0 + 5f64.sqrt()) / 2.0;
    let mut v = Vec::with_capacity(12);
    for a in [1.0, -1.0] {
        for b in [g, -g] {
            v.push(BlochVector::new(0.0, a, b));
            v.push(BlochVector::new(a, b, 0.0));
            v.push(BlochVector::new(b, 0.0, a));
        }
    }
    v.into_iter().map(|p| p.normalized()).collect()
}

fn fibonacci(n: usize) -> Vec<BlochVector> {
    let golden_angle = PI * (3.0 - 5f64.sqrt());
    (0..n)
        .map(|i| {
            let z = 1.0 - (2.0 * i as f64 + 1.0) / n as f64;
            let r = (1.0 - z * z).sqrt();
            let phi = golden_angle * i as f64;
            BlochVector::new(r * phi.cos(), r * phi.sin(), z)
        })
        .collect()
}

/// Poles plus `r` rings at `θ_k = kπ/(r+1)`; ring populations follow `sin θ_k`
/// so neighbouring points sit at roughly equal arc length.
fn latlon(n: usize) -> Vec<BlochVector> {
    let mut v = vec![BlochVector::new(0.0, 0.0, 1.0)];
    let rest = n - 2;
    if rest > 0 {
        let rings = (((rest as f64) * PI / 4.0).sqrt().round() as usize).clamp(1, rest);
        let thetas: Vec<f64> = (1..=rings).map(|k| k as f64 * PI / (rings + 1) as f64).collect();
        let total_sin: f64 = thetas.iter().map(|t| t.sin()).sum();
        let raw: Vec<f64> = thetas.iter().map(|t| rest as f64 * t.sin() / total_sin).collect();
        let mut counts: Vec<usize> = raw.iter().map(|r| (r.round() as usize).max(1)).collect();
        let equator_distance = |k: usize| (thetas[k] - PI / 2.0).abs();
        while counts.iter().sum::<usize>() > rest {
            // trim the most crowded ring, preferring the one nearest the equator
            let k = (0..rings)
                .filter(|&k| counts[k] > 1)
                .max_by(|&a, &b| {
                    counts[a]
                        .cmp(&counts[b])
                        .then(equator_distance(b).total_cmp(&equator_distance(a)))
                        .then(b.cmp(&a))
                })
                .expect("rest ≥ rings so some ring has spare points");
            counts[k] -= 1;
        }
        while counts.iter().sum::<usize>() < rest {
            let k = (0..rings)
                .min_by(|&a, &b| {
                    (counts[a] as f64 - raw[a])
                        .total_cmp(&(counts[b] as f64 - raw[b]))
                        .then(a.cmp(&b))
                })
                .expect("at least one ring");
            counts[k] += 1;
        }
        for (theta, &m) in thetas.iter().zip(&counts) {
            for i in 0..m {
                v.push(BlochVector::from_angles(*theta, 2.0 * PI * i as f64 / m as f64));
            }
        }
    }
    v.push(BlochVector::new(0.0, 0.0, -1.0));
    v
}
