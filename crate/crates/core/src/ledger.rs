//! Optical loss ledgers.

use std::fmt;

use crate::error::{Error, Result};

/// Element name whose entry disappears when the analyzers are taken out.
pub const ANALYZER_ELEMENT: &str = "umi";

/// Ordered `(element, dB)` entries along one optical path.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct LossLedger {
    entries: Vec<(String, f64)>,
}

impl LossLedger {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn from_entries<S: Into<String>>(entries: impl IntoIterator<Item = (S, f64)>) -> Result<Self> {
        let mut ledger = Self::new();
        for (name, db) in entries {
            ledger.push(name, db)?;
        }
        Ok(ledger)
    }

    pub fn push(&mut self, name: impl Into<String>, loss_db: f64) -> Result<()> {
        if !(loss_db >= 0.0 && loss_db.is_finite()) {
            return Err(Error::OutOfRange {
                name: "loss_db",
                value: loss_db,
            });
        }
        self.entries.push((name.into(), loss_db));
        Ok(())
    }

    pub fn entries(&self) -> &[(String, f64)] {
        &self.entries
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    /// Copy without any entry named `element`.
    pub fn without(&self, element: &str) -> Self {
        LossLedger {
            entries: self.entries.iter().filter(|(n, _)| n != element).cloned().collect(),
        }
    }

    /// Total loss in dB. Summed in hundredths of a dB so that ledgers
    /// written with two decimals total exactly regardless of entry order.
    pub fn total_db(&self) -> f64 {
        let centi: f64 = self.entries.iter().map(|(_, db)| (db * 100.0).round()).sum();
        let exact: f64 = self.entries.iter().map(|(_, db)| db).sum();
        let rounded = centi / 100.0;
        if (rounded - exact).abs() < 1e-9 {
            rounded
        } else {
            exact
        }
    }

    pub fn transmittance(&self) -> f64 {
        db_to_transmittance(self.total_db())
    }

    /// Parses `name dB, name dB, ...`; an empty string is an empty ledger.
    pub fn parse(text: &str) -> Result<Self> {
        let mut ledger = Self::new();
        for item in text.split(',').map(str::trim).filter(|s| !s.is_empty()) {
            let mut parts = item.split_whitespace();
            let (name, db) = match (parts.next(), parts.next(), parts.next()) {
                (Some(n), Some(v), None) => (n, v),
                _ => return Err(Error::InvalidConfig(format!("bad ledger entry '{item}'"))),
            };
            let db: f64 = db
                .parse()
                .map_err(|_| Error::InvalidConfig(format!("bad loss value in '{item}'")))?;
            ledger.push(name, db)?;
        }
        Ok(ledger)
    }
}

impl fmt::Display for LossLedger {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let items: Vec<String> = self.entries.iter().map(|(n, db)| format!("{n} {db}")).collect();
        f.write_str(&items.join(", "))
    }
}

pub fn db_to_transmittance(db: f64) -> f64 {
    10f64.powf(-db / 10.0)
}

pub fn transmittance_to_db(t: f64) -> f64 {
    -10.0 * t.log10()
}

/// The published per-path budget: waveguide, DWDM, one switch pass per
/// switch stage traversed, analyzer interferometer, detector.
pub fn default_path_ledger(switch_passes: usize) -> LossLedger {
    let mut l = LossLedger::new();
    l.push("waveguide", 5.00).unwrap();
    l.push("dwdm", 2.00).unwrap();
    for _ in 0..switch_passes {
        l.push("switch", 2.5).unwrap();
    }
    l.push(ANALYZER_ELEMENT, 4.7).unwrap();
    l.push("detector", 1.5).unwrap();
    l
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn published_totals() {
        assert_eq!(default_path_ledger(1).total_db(), 15.7);
        assert_eq!(default_path_ledger(2).total_db(), 18.2);
        assert!((default_path_ledger(1).transmittance() - 0.026915).abs() < 1e-6);
        assert!((default_path_ledger(2).transmittance() - 0.015136).abs() < 1e-6);
    }

    #[test]
    fn empty_and_negative() {
        let l = LossLedger::new();
        assert_eq!(l.total_db(), 0.0);
        assert_eq!(l.transmittance(), 1.0);
        assert!(LossLedger::new().push("x", -1.0).is_err());
        assert!(LossLedger::parse("a -0.5").is_err());
        assert!(LossLedger::parse("").unwrap().is_empty());
    }

    #[test]
    fn parse_and_strip() {
        let l = LossLedger::parse("waveguide 5.00, dwdm 2.00, switch 2.5, umi 4.7, detector 1.5").unwrap();
        assert_eq!(l, default_path_ledger(1));
        assert_eq!(l.without(ANALYZER_ELEMENT).total_db(), 11.0);
        assert!(LossLedger::parse("waveguide").is_err());
        assert_eq!(LossLedger::parse(&l.to_string()).unwrap(), l);
    }

    #[test]
    fn db_round_trip() {
        for db in [0.0, 1.5, 15.7, 30.0] {
            assert!((transmittance_to_db(db_to_transmittance(db)) - db).abs() < 1e-12);
        }
    }
}
