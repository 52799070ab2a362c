//! The reference instance: seven clients in three ranking classes over seven
//! facilities, whose optimal distortion is 2.063164, together with its
//! published optimal lottery, min-max multipliers and lower-bound metrics.

use std::collections::HashMap;

use thiserror::Error;

use crate::adversary::{consistency_row_name, triangle_row_name, Lottery};
use crate::certificate::{Certificate, CertificateError};
use crate::lp::LinearProgram;
use crate::metric::{client_label, PointSpace};
use crate::optimal::{lottery_var_name, multiplier_var_name, GAMMA_VAR};
use crate::profile::{parse_profile, PreferenceProfile};
use crate::scalar::Scalar;

pub const REFERENCE_PROFILE: &str = include_str!("../fixtures/reference.profile");
pub const REFERENCE_CERTIFICATE: &str = include_str!("../fixtures/reference_certificate.json");
pub const REFERENCE_MULTIPLIERS: &str = include_str!("../fixtures/reference_multipliers.txt");

/// Optimal distortion of the reference instance, to six decimals.
pub const REFERENCE_GAMMA: f64 = 2.063164;

/// Optimal lottery of the reference instance as printed (sums to 1.000001).
pub const REFERENCE_LOTTERY: [(&str, f64); 7] = [
    ("a", 0.039301),
    ("b", 0.121723),
    ("c", 0.388299),
    ("d", 0.291224),
    ("e", 0.107872),
    ("f", 0.029475),
    ("g", 0.022107),
];

/// Rounding slack accepted when reading six-decimal lotteries.
pub const LOTTERY_PRINT_TOLERANCE: f64 = 1e-4;

pub fn reference_profile() -> PreferenceProfile {
    parse_profile(REFERENCE_PROFILE).expect("embedded profile is valid")
}

/// The printed lottery, rescaled to sum to exactly one.
pub fn reference_lottery<T: Scalar>() -> Lottery<T> {
    let profile = reference_profile();
    let entries = REFERENCE_LOTTERY.iter().map(|(f, p)| (f.to_string(), *p)).collect();
    Lottery::from_labels(&profile, &entries, LOTTERY_PRINT_TOLERANCE).expect("embedded lottery is valid")
}

/// Lower-bound metrics for the reference instance, one shortest-path graph
/// per facility with six-decimal edge weights.
pub fn load_reference_certificate<T: Scalar>() -> Certificate<T> {
    load_reference_certificate_checked().expect("embedded certificate is valid")
}

pub fn load_reference_certificate_checked<T: Scalar>() -> Result<Certificate<T>, CertificateError> {
    Certificate::from_json(REFERENCE_CERTIFICATE)
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum MultiplierFileError {
    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },
    #[error("relabel source `{0}` matches no entry")]
    UnknownRelabel(String),
    #[error("entry `{key}`: {message}")]
    Entry { key: String, message: String },
}

/// Identifies one printed multiplier. Clients are 1-based individual
/// clients of the expanded profile.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub enum MultiplierKey {
    /// Consistency row of `client` at `rank` for reference `o`.
    Beta { o: String, client: usize, rank: usize },
    /// Triangle row `k` of the triple `points` with `family` facilities.
    Alpha {
        family: usize,
        o: String,
        k: usize,
        points: [String; 3],
    },
}

impl std::fmt::Display for MultiplierKey {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Self::Beta { o, client, rank } => write!(f, "beta {o} {client} {rank}"),
            Self::Alpha { family, o, k, points } => {
                write!(f, "alpha {family} {o} {k} {} {} {}", points[0], points[1], points[2])
            }
        }
    }
}

/// Multiplier listing for the reference instance.
#[derive(Debug, Clone, PartialEq)]
pub struct PrintedMultipliers {
    pub gamma: f64,
    pub q: Vec<(String, f64)>,
    pub entries: Vec<(MultiplierKey, f64)>,
    /// Label corrections `(as printed, corrected)`.
    pub relabels: Vec<(MultiplierKey, MultiplierKey)>,
}

fn parse_key(fields: &[&str], line: usize) -> Result<MultiplierKey, MultiplierFileError> {
    let err = |message: &str| MultiplierFileError::Parse {
        line,
        message: message.to_string(),
    };
    let num = |s: &str| s.parse::<usize>().map_err(|_| err("expected an integer"));
    match fields {
        ["beta", o, client, rank] => Ok(MultiplierKey::Beta {
            o: o.to_string(),
            client: num(client)?,
            rank: num(rank)?,
        }),
        ["alpha", family, o, k, x, y, z] => Ok(MultiplierKey::Alpha {
            family: num(family)?,
            o: o.to_string(),
            k: num(k)?,
            points: [x.to_string(), y.to_string(), z.to_string()],
        }),
        _ => Err(err("unrecognized entry")),
    }
}

impl PrintedMultipliers {
    pub fn parse(text: &str) -> Result<Self, MultiplierFileError> {
        let mut out = Self {
            gamma: f64::NAN,
            q: Vec::new(),
            entries: Vec::new(),
            relabels: Vec::new(),
        };
        for (idx, raw) in text.lines().enumerate() {
            let line = idx + 1;
            let content = raw.trim();
            if content.is_empty() || content.starts_with('#') {
                continue;
            }
            let fields: Vec<&str> = content.split_whitespace().collect();
            let value = |s: &str| {
                s.parse::<f64>().map_err(|_| MultiplierFileError::Parse {
                    line,
                    message: format!("bad number `{s}`"),
                })
            };
            match fields[0] {
                "gamma" if fields.len() == 2 => out.gamma = value(fields[1])?,
                "q" if fields.len() == 3 => out.q.push((fields[1].to_string(), value(fields[2])?)),
                "relabel" => {
                    let arrow = fields
                        .iter()
                        .position(|f| *f == "=>")
                        .ok_or(MultiplierFileError::Parse {
                            line,
                            message: "relabel needs `=>`".into(),
                        })?;
                    let from = parse_key(&fields[1..arrow], line)?;
                    let to = parse_key(&fields[arrow + 1..], line)?;
                    out.relabels.push((from, to));
                }
                _ => {
                    let (last, key) = fields.split_last().expect("nonempty");
                    out.entries.push((parse_key(key, line)?, value(last)?));
                }
            }
        }
        if out.gamma.is_nan() {
            return Err(MultiplierFileError::Parse {
                line: 0,
                message: "missing gamma".into(),
            });
        }
        Ok(out)
    }

    pub fn reference() -> Self {
        Self::parse(REFERENCE_MULTIPLIERS).expect("embedded multipliers are valid")
    }

    /// Entries with the label corrections applied.
    pub fn corrected_entries(&self) -> Result<Vec<(MultiplierKey, f64)>, MultiplierFileError> {
        let mut entries = self.entries.clone();
        for (from, to) in &self.relabels {
            let slot = entries
                .iter_mut()
                .find(|(k, _)| k == from)
                .ok_or_else(|| MultiplierFileError::UnknownRelabel(from.to_string()))?;
            slot.0 = to.clone();
        }
        Ok(entries)
    }

    /// Map the listing onto the variables of the min-max LP built for
    /// `expanded` (one weight-1 group per client). Every variable not listed
    /// is zero; the normalization multiplier of each reference equals gamma.
    pub fn assignment(
        &self,
        lp: &LinearProgram<f64>,
        expanded: &PreferenceProfile,
        corrected: bool,
    ) -> Result<HashMap<String, f64>, MultiplierFileError> {
        let space = PointSpace::from_profile(expanded).map_err(|e| MultiplierFileError::Entry {
            key: "profile".into(),
            message: e.to_string(),
        })?;
        let mut point: HashMap<String, f64> = lp.variables().iter().map(|v| (v.name.clone(), 0.0)).collect();
        let mut set = |name: String, value: f64, key: &str| -> Result<(), MultiplierFileError> {
            match point.get_mut(&name) {
                Some(slot) => {
                    *slot += value;
                    Ok(())
                }
                None => Err(MultiplierFileError::Entry {
                    key: key.to_string(),
                    message: format!("no LP variable `{name}`"),
                }),
            }
        };
        set(GAMMA_VAR.to_string(), self.gamma, "gamma")?;
        for (f, p) in &self.q {
            set(lottery_var_name(f), *p, "q")?;
        }
        for o in expanded.facilities() {
            set(multiplier_var_name(o, "norm"), self.gamma, "norm")?;
        }
        let entries = if corrected {
            self.corrected_entries()?
        } else {
            self.entries.clone()
        };
        for (key, value) in &entries {
            let row = row_for_key(key, &space)?;
            let o = match key {
                MultiplierKey::Beta { o, .. } | MultiplierKey::Alpha { o, .. } => o,
            };
            set(multiplier_var_name(o, &row), *value, &key.to_string())?;
        }
        Ok(point)
    }
}

fn point_index(space: &PointSpace, label: &str) -> Option<usize> {
    match label.parse::<usize>() {
        Ok(client) if client >= 1 => space.index(&client_label(client)).ok(),
        _ => space.index(label).ok().filter(|&p| space.is_facility(p)),
    }
}

/// Adversary row named by a printed key.
///
/// For a triple `(x, y, z)` of family 1 (one facility `x`), rows 1, 2, 3
/// bound the sides `(y,z)`, `(x,y)`, `(x,z)`. For family 2 (client `x`, two
/// facilities) rows 1, 2 bound `(x,z)`, `(y,z)`. Families 0 and 3 use
/// `(x,y)`, `(x,z)`, `(y,z)`.
fn row_for_key(key: &MultiplierKey, space: &PointSpace) -> Result<String, MultiplierFileError> {
    let bad = |message: String| MultiplierFileError::Entry {
        key: key.to_string(),
        message,
    };
    match key {
        MultiplierKey::Beta { client, rank, .. } => {
            if *client == 0 || *client > space.client_count() {
                return Err(bad(format!("no client {client}")));
            }
            Ok(consistency_row_name(space, client - 1, *rank))
        }
        MultiplierKey::Alpha { family, k, points, .. } => {
            let idx = points
                .iter()
                .map(|p| point_index(space, p).ok_or_else(|| bad(format!("unknown point `{p}`"))))
                .collect::<Result<Vec<_>, _>>()?;
            let (x, y, z) = (idx[0], idx[1], idx[2]);
            let facilities = idx.iter().filter(|&&p| space.is_facility(p)).count();
            if facilities != *family {
                return Err(bad(format!("triple has {facilities} facilities")));
            }
            let shape_ok = match family {
                1 => space.is_facility(x),
                2 => !space.is_facility(x),
                _ => true,
            };
            if !shape_ok {
                return Err(bad("triple is not in the documented order".into()));
            }
            let (a, b, via) = match (family, k) {
                (1, 1) => (y, z, x),
                (1, 2) => (x, y, z),
                (1, 3) => (x, z, y),
                (2, 1) => (x, z, y),
                (2, 2) => (y, z, x),
                (0 | 3, 1) => (x, y, z),
                (0 | 3, 2) => (x, z, y),
                (0 | 3, 3) => (y, z, x),
                _ => return Err(bad(format!("no row {k} for family {family}"))),
            };
            Ok(triangle_row_name(space, a, b, via))
        }
    }
}
