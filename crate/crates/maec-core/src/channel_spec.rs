//! Reading and writing channel description files.
//!
//! A channel file gives the alphabet size and the erasure masses by divisor:
//!
//! ```json
//! { "q": 6, "masses": { "2": "3/10", "3": "3/5", "6": "1/10" } }
//! ```
//!
//! The same shape works in TOML (`q = 6` plus a `[masses]` table). Mass values
//! may be strings (`"3/10"`, `"0.25"`, `"1"`), bare integers, or — in float
//! mode only — bare decimals. Divisor keys must divide `q`; omitted divisors
//! get zero mass. Parsing is mode-agnostic; resolving to a concrete scalar
//! type happens in [`ChannelSpec::build`], where exact mode rejects decimal
//! notation instead of rounding it.

use std::collections::BTreeMap;
use std::path::Path;

use serde::Deserialize;

use crate::channel::MaecDistribution;
use crate::error::{Error, Result};
use crate::lattice::DivisorLattice;
use crate::scalar::Mass;

/// One mass value as it appeared in the document, before mode resolution.
#[derive(Debug, Clone, Deserialize, PartialEq)]
#[serde(untagged)]
pub enum MassLiteral {
    /// A bare integer (`0` or `1` in practice).
    Integer(i64),
    /// A bare floating-point number; only float mode will accept it.
    Decimal(f64),
    /// A string literal: integer, fraction, or decimal notation.
    Text(String),
}

impl MassLiteral {
    fn resolve<S: Mass>(&self) -> Result<S> {
        match self {
            MassLiteral::Integer(n) => {
                if *n < 0 {
                    // Keep the sign so validation reports it as a negative mass.
                    Ok(S::zero() - S::from_integer(n.unsigned_abs()))
                } else {
                    Ok(S::from_integer(*n as u64))
                }
            }
            MassLiteral::Decimal(v) => S::from_float_literal(*v),
            MassLiteral::Text(text) => S::parse_mass(text),
        }
    }
}

#[derive(Debug, Deserialize)]
struct RawChannelSpec {
    q: u64,
    #[serde(default)]
    masses: BTreeMap<String, MassLiteral>,
}

/// A parsed channel file: alphabet size plus per-divisor mass literals, not
/// yet committed to an arithmetic mode.
#[derive(Debug, Clone)]
pub struct ChannelSpec {
    q: u64,
    /// Keyed by divisor value; literals stay unresolved until `build`.
    masses: BTreeMap<u64, MassLiteral>,
}

impl ChannelSpec {
    /// Parse the JSON form.
    pub fn from_json(text: &str) -> Result<Self> {
        let raw: RawChannelSpec =
            serde_json::from_str(text).map_err(|e| Error::BadChannelFile(e.to_string()))?;
        Self::from_raw(raw)
    }

    /// Parse the TOML form.
    pub fn from_toml(text: &str) -> Result<Self> {
        let raw: RawChannelSpec =
            toml::from_str(text).map_err(|e| Error::BadChannelFile(e.to_string()))?;
        Self::from_raw(raw)
    }

    /// Read a file, dispatching on its extension (`.toml` is TOML, anything
    /// else is treated as JSON).
    pub fn from_path(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::BadChannelFile(format!("{}: {e}", path.display())))?;
        let is_toml = path
            .extension()
            .is_some_and(|ext| ext.eq_ignore_ascii_case("toml"));
        if is_toml {
            Self::from_toml(&text)
        } else {
            Self::from_json(&text)
        }
    }

    fn from_raw(raw: RawChannelSpec) -> Result<Self> {
        // Divisor keys are validated here so a typo fails fast, before any
        // arithmetic mode is chosen.
        let lattice = DivisorLattice::new(raw.q)?;
        let mut masses = BTreeMap::new();
        for (key, literal) in raw.masses {
            let divisor: u64 = key
                .trim()
                .parse()
                .map_err(|_| Error::UnknownDivisorKey { key: key.clone(), q: raw.q })?;
            if lattice.position_of(divisor).is_none() {
                return Err(Error::UnknownDivisorKey { key, q: raw.q });
            }
            if masses.insert(divisor, literal).is_some() {
                return Err(Error::BadChannelFile(format!(
                    "divisor {divisor} appears twice"
                )));
            }
        }
        Ok(Self { q: raw.q, masses })
    }

    /// Alphabet size.
    pub fn q(&self) -> u64 {
        self.q
    }

    /// Resolve the literals in the scalar type's arithmetic and validate the
    /// result as a probability vector.
    pub fn build<S: Mass>(&self) -> Result<MaecDistribution<S>> {
        let lattice = DivisorLattice::shared(self.q)?;
        let mut masses = vec![S::zero(); lattice.len()];
        for (divisor, literal) in &self.masses {
            let pos = lattice
                .position_of(*divisor)
                .expect("keys were validated against the lattice at parse time");
            masses[pos] = literal.resolve()?;
        }
        MaecDistribution::new(lattice, masses)
    }
}

/// Render a channel as a JSON document in the channel-file format. Zero
/// masses are omitted; keys ascend numerically; exact masses print as
/// fractions, so `parse(emit(eps)) == eps` bit-for-bit in exact mode.
pub fn emit_json<S: Mass>(channel: &MaecDistribution<S>) -> String {
    let mut out = String::new();
    out.push_str(&format!("{{\n  \"q\": {},\n  \"masses\": {{\n", channel.q()));
    let entries = nonzero_entries(channel);
    for (i, (divisor, text)) in entries.iter().enumerate() {
        let comma = if i + 1 == entries.len() { "" } else { "," };
        out.push_str(&format!("    \"{divisor}\": \"{text}\"{comma}\n"));
    }
    out.push_str("  }\n}\n");
    out
}

/// Render a channel as a TOML document in the channel-file format.
pub fn emit_toml<S: Mass>(channel: &MaecDistribution<S>) -> String {
    let mut out = format!("q = {}\n\n[masses]\n", channel.q());
    for (divisor, text) in nonzero_entries(channel) {
        out.push_str(&format!("{divisor} = \"{text}\"\n"));
    }
    out
}

fn nonzero_entries<S: Mass>(channel: &MaecDistribution<S>) -> Vec<(u64, String)> {
    channel
        .masses()
        .iter()
        .enumerate()
        .filter(|(_, mass)| **mass != S::zero())
        .map(|(pos, mass)| (channel.lattice().divisor(pos), mass.to_string()))
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scalar::{ratio, ExactMass};

    #[test]
    fn json_round_trip_is_exact() {
        let spec = ChannelSpec::from_json(
            r#"{ "q": 6, "masses": { "2": "3/10", "3": "3/5", "6": "1/10" } }"#,
        )
        .unwrap();
        let eps = spec.build::<ExactMass>().unwrap();
        assert_eq!(eps.mass_of_divisor(3), Some(&ratio(3, 5)));
        let again = ChannelSpec::from_json(&emit_json(&eps))
            .unwrap()
            .build::<ExactMass>()
            .unwrap();
        assert_eq!(again, eps);
    }

    #[test]
    fn toml_matches_json() {
        let toml = ChannelSpec::from_toml("q = 6\n\n[masses]\n2 = \"3/10\"\n3 = \"3/5\"\n6 = \"1/10\"\n").unwrap();
        let json = ChannelSpec::from_json(
            r#"{ "q": 6, "masses": { "2": "3/10", "3": "3/5", "6": "1/10" } }"#,
        )
        .unwrap();
        assert_eq!(
            toml.build::<ExactMass>().unwrap(),
            json.build::<ExactMass>().unwrap()
        );
    }

    #[test]
    fn unknown_divisors_fail_fast() {
        let err = ChannelSpec::from_json(r#"{ "q": 6, "masses": { "4": "1" } }"#).unwrap_err();
        assert!(matches!(err, Error::UnknownDivisorKey { q: 6, .. }));
    }

    #[test]
    fn exact_mode_rejects_bare_decimals_but_float_mode_accepts() {
        let spec =
            ChannelSpec::from_json(r#"{ "q": 2, "masses": { "1": 0.5, "2": 0.5 } }"#).unwrap();
        assert!(matches!(spec.build::<ExactMass>(), Err(Error::DecimalInExact(_))));
        let eps = spec.build::<f64>().unwrap();
        assert_eq!(eps.masses(), &[0.5, 0.5]);
    }
}
