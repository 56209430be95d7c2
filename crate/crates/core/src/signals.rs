//! Seeded input generators.
//!
//! Element `t` (0-based) of each kind:
//!
//! | kind           | `u_t`                                   |
//! |----------------|-----------------------------------------|
//! | `Alternating`  | `amplitude · (-1)^t` (starts positive)  |
//! | `Constant`     | `amplitude`                             |
//! | `IidPlusMinus` | `amplitude · ±1`, fair seeded coin      |
//! | `Scaled`       | `gamma · base_t`                        |
//! | `FromFile`     | `amplitude · value_t` from the file     |

use std::fmt;
use std::fs;
use std::path::PathBuf;

use crate::error::{Error, Result};
use crate::format;
use crate::rng::{self, streams};

#[derive(Debug, Clone, PartialEq)]
pub enum SignalKind {
    Alternating,
    Constant,
    IidPlusMinus,
    Scaled {
        base: Box<SignalKind>,
        gamma: f64,
    },
    /// One decimal value per line.
    FromFile(PathBuf),
}

impl fmt::Display for SignalKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            SignalKind::Alternating => f.write_str("alternating"),
            SignalKind::Constant => f.write_str("constant"),
            SignalKind::IidPlusMinus => f.write_str("iid"),
            SignalKind::Scaled { base, gamma } => write!(f, "{base}*{gamma}"),
            SignalKind::FromFile(p) => write!(f, "file:{}", p.display()),
        }
    }
}

/// Finite realization of an input series.
#[derive(Debug, Clone, PartialEq)]
pub struct InputSequence {
    pub kind: SignalKind,
    pub amplitude: f64,
    pub seed: u64,
    pub length: usize,
}

impl InputSequence {
    pub fn alternating(amplitude: f64, length: usize) -> Self {
        Self::new(SignalKind::Alternating, amplitude, 0, length)
    }

    pub fn constant(amplitude: f64, length: usize) -> Self {
        Self::new(SignalKind::Constant, amplitude, 0, length)
    }

    pub fn iid(amplitude: f64, seed: u64, length: usize) -> Self {
        Self::new(SignalKind::IidPlusMinus, amplitude, seed, length)
    }

    pub fn from_file(path: impl Into<PathBuf>, amplitude: f64, length: usize) -> Self {
        Self::new(SignalKind::FromFile(path.into()), amplitude, 0, length)
    }

    pub fn new(kind: SignalKind, amplitude: f64, seed: u64, length: usize) -> Self {
        Self {
            kind,
            amplitude,
            seed,
            length,
        }
    }

    /// Wraps the current kind in `Scaled { gamma }`.
    pub fn scaled(self, gamma: f64) -> Self {
        Self {
            kind: SignalKind::Scaled {
                base: Box::new(self.kind),
                gamma,
            },
            ..self
        }
    }

    pub fn generate(&self) -> Result<Vec<f64>> {
        if self.length == 0 {
            return Err(Error::InvalidParameter("input length must be >= 1".into()));
        }
        if !self.amplitude.is_finite() {
            return Err(Error::InvalidParameter(format!(
                "non-finite amplitude {}",
                self.amplitude
            )));
        }
        self.generate_kind(&self.kind)
    }

    fn generate_kind(&self, kind: &SignalKind) -> Result<Vec<f64>> {
        let (a, n) = (self.amplitude, self.length);
        Ok(match kind {
            SignalKind::Alternating => (0..n).map(|t| if t % 2 == 0 { a } else { -a }).collect(),
            SignalKind::Constant => vec![a; n],
            SignalKind::IidPlusMinus => {
                let mut rng = rng::stream(self.seed, streams::INPUT);
                (0..n).map(|_| a * rng::fair_sign(&mut rng)).collect()
            }
            SignalKind::Scaled { base, gamma } => {
                if !(*gamma > 0.0 && gamma.is_finite()) {
                    return Err(Error::InvalidParameter(format!(
                        "gamma {gamma} must be > 0"
                    )));
                }
                let mut v = self.generate_kind(base)?;
                v.iter_mut().for_each(|x| *x *= gamma);
                v
            }
            SignalKind::FromFile(path) => {
                let values = read_values(path)?;
                if values.len() < n {
                    return Err(Error::InputTooShort {
                        need: n,
                        got: values.len(),
                    });
                }
                values[..n].iter().map(|v| a * v).collect()
            }
        })
    }
}

/// Reads one decimal value per non-empty line.
pub fn read_values(path: &std::path::Path) -> Result<Vec<f64>> {
    let text = fs::read_to_string(path)?;
    text.lines()
        .map(str::trim)
        .filter(|l| !l.is_empty())
        .map(|l| {
            l.parse::<f64>()
                .map_err(|e| Error::Parse(format!("input value '{l}': {e}")))
        })
        .collect()
}

/// `t,u` CSV dump.
pub fn to_csv(values: &[f64]) -> String {
    let mut out = String::from("t,u\n");
    for (t, u) in values.iter().enumerate() {
        out.push_str(&format!("{t},{}\n", format::float(*u)));
    }
    out
}
