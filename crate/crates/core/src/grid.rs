//! ITU C-band channel grid: channel-to-wavelength lookup and signal/idler
//! pairing around the pump channel.
//!
//! Wavelengths are table data, never computed from the ITU frequency formula,
//! so printed values agree digit-for-digit with the published grid.

use std::collections::BTreeMap;
use std::fmt;
use std::path::Path;

use crate::error::{Error, Result};

/// 100 GHz C-band channels used by the source, `index wavelength_nm`.
pub const DEFAULT_GRID_TABLE: &str = "\
# ITU 100 GHz grid, C-band channels used by the multiplexed source
spacing_ghz 100
19 1562.23
20 1561.42
21 1560.61
22 1559.79
23 1558.98
24 1558.17
25 1557.36
26 1556.56
27 1555.75
28 1554.94
29 1554.13
30 1553.33
31 1552.52
32 1551.72
34 1550.12
36 1548.52
37 1547.72
38 1546.92
39 1546.12
40 1545.32
41 1544.53
42 1543.73
43 1542.94
44 1542.14
45 1541.35
46 1540.56
47 1539.77
48 1538.98
49 1538.19
";

/// Default pump channel (1550.12 nm).
pub const DEFAULT_PUMP_CHANNEL: u32 = 34;

/// Number of signal/idler pairs defined on the default grid.
pub const DEFAULT_PAIR_COUNT: usize = 14;

/// A channel number on a loaded grid.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct ItuChannel(u32);

impl ItuChannel {
    /// Validates `index` against `grid`.
    pub fn new(index: u32, grid: &ChannelGrid) -> Result<Self> {
        if grid.wavelengths.contains_key(&index) {
            Ok(ItuChannel(index))
        } else {
            Err(Error::UnknownChannel(index))
        }
    }

    pub fn index(self) -> u32 {
        self.0
    }
}

impl fmt::Display for ItuChannel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "C{}", self.0)
    }
}

/// A signal/idler channel pair placed symmetrically about the pump.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ChannelPair {
    pub pair_index: usize,
    pub signal: ItuChannel,
    pub idler: ItuChannel,
    pub signal_wavelength_nm: f64,
    pub idler_wavelength_nm: f64,
}

impl ChannelPair {
    /// Short label such as `S8-I8`.
    pub fn label(&self) -> String {
        format!("S{}-I{}", self.pair_index, self.pair_index)
    }
}

/// An immutable channel table.
#[derive(Debug, Clone, PartialEq)]
pub struct ChannelGrid {
    wavelengths: BTreeMap<u32, f64>,
    spacing_ghz: f64,
}

impl Default for ChannelGrid {
    fn default() -> Self {
        ChannelGrid::parse(DEFAULT_GRID_TABLE).expect("embedded grid table is valid")
    }
}

impl ChannelGrid {
    /// Parses a grid table. Rows are `index wavelength_nm`; `#` starts a
    /// comment; an optional `spacing_ghz <value>` row records the grid pitch.
    pub fn parse(text: &str) -> Result<Self> {
        let mut wavelengths = BTreeMap::new();
        let mut spacing_ghz = 100.0;
        for (lineno, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let bad = |msg: &str| Error::GridTable {
                line: lineno + 1,
                msg: msg.to_string(),
            };
            let mut cols = line.split_whitespace();
            let (first, second) = match (cols.next(), cols.next(), cols.next()) {
                (Some(a), Some(b), None) => (a, b),
                _ => return Err(bad("expected two columns")),
            };
            if first == "spacing_ghz" {
                spacing_ghz = second
                    .parse::<f64>()
                    .ok()
                    .filter(|v| v.is_finite() && *v > 0.0)
                    .ok_or_else(|| bad("invalid spacing"))?;
                continue;
            }
            let index: u32 = first.parse().map_err(|_| bad("invalid channel index"))?;
            let wl: f64 = second
                .parse()
                .ok()
                .filter(|v: &f64| v.is_finite() && *v > 0.0)
                .ok_or_else(|| bad("invalid wavelength"))?;
            if wavelengths.insert(index, wl).is_some() {
                return Err(bad("duplicate channel"));
            }
        }
        if wavelengths.is_empty() {
            return Err(Error::GridTable {
                line: 0,
                msg: "empty grid table".into(),
            });
        }
        // wavelength must fall as the channel number rises
        let rows: Vec<(u32, f64)> = wavelengths.iter().map(|(&k, &v)| (k, v)).collect();
        for w in rows.windows(2) {
            if w[1].1 >= w[0].1 {
                return Err(Error::GridTable {
                    line: 0,
                    msg: format!("wavelength not decreasing between C{} and C{}", w[0].0, w[1].0),
                });
            }
        }
        Ok(ChannelGrid {
            wavelengths,
            spacing_ghz,
        })
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)?;
        Self::parse(&text)
    }

    pub fn spacing_ghz(&self) -> f64 {
        self.spacing_ghz
    }

    pub fn channel(&self, index: u32) -> Result<ItuChannel> {
        ItuChannel::new(index, self)
    }

    /// Channels in ascending index order.
    pub fn channels(&self) -> impl Iterator<Item = (ItuChannel, f64)> + '_ {
        self.wavelengths.iter().map(|(&k, &v)| (ItuChannel(k), v))
    }

    /// Table wavelength of `ch`, exactly as loaded.
    pub fn wavelength_nm(&self, ch: ItuChannel) -> Result<f64> {
        self.wavelengths
            .get(&ch.0)
            .copied()
            .ok_or(Error::UnknownChannel(ch.0))
    }

    /// Every symmetric pair present in the table, nearest to the pump first.
    pub fn pairs(&self, pump: ItuChannel) -> Vec<ChannelPair> {
        let mut out = Vec::new();
        let p = pump.0;
        for offset in 1..=p {
            let (lo, hi) = (p - offset, p + offset);
            if let (Some(&wl_s), Some(&wl_i)) = (self.wavelengths.get(&lo), self.wavelengths.get(&hi)) {
                out.push(ChannelPair {
                    pair_index: out.len() + 1,
                    signal: ItuChannel(lo),
                    idler: ItuChannel(hi),
                    signal_wavelength_nm: wl_s,
                    idler_wavelength_nm: wl_i,
                });
            }
        }
        out
    }

    /// The `pair_index`-th symmetric pair around `pump` (1 = closest).
    ///
    /// Signal is the longer-wavelength (lower-index) member.
    pub fn pair_for_index(&self, pair_index: usize, pump: ItuChannel) -> Result<ChannelPair> {
        self.wavelength_nm(pump)?;
        if pair_index == 0 {
            return Err(Error::PairIndexOutOfRange(pair_index));
        }
        self.pairs(pump)
            .into_iter()
            .nth(pair_index - 1)
            .ok_or(Error::PairIndexOutOfRange(pair_index))
    }
}

/// Looks up the table wavelength of `ch` in the embedded default grid.
pub fn itu_channel_wavelength(ch: ItuChannel) -> Result<f64> {
    ChannelGrid::default().wavelength_nm(ch)
}

/// True when the pair's channel numbers sum to twice the pump's.
pub fn energy_conservation_check(pair: &ChannelPair, pump: ItuChannel) -> bool {
    pair.signal.0 + pair.idler.0 == 2 * pump.0
}

/// Renders the pairing table, one row per pair from the outermost inward,
/// followed by the pump row.
pub fn format_pair_table(grid: &ChannelGrid, pump: ItuChannel) -> Result<String> {
    let mut out = String::from("Pair\tDWDM channel\tWavelength (nm)\n");
    for pair in grid.pairs(pump).iter().rev() {
        out.push_str(&format!(
            "Signal {k} - Idler {k}\t{} - {}\t{:.2} - {:.2}\n",
            pair.signal,
            pair.idler,
            pair.signal_wavelength_nm,
            pair.idler_wavelength_nm,
            k = pair.pair_index
        ));
    }
    out.push_str(&format!("Pump\t{}\t{:.2}\n", pump, grid.wavelength_nm(pump)?));
    Ok(out)
}
