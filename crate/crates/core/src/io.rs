//! CSV tables and SVG plots.
//!
//! Floats are written with Rust's shortest round-trip formatting, so every
//! value reads back bit-identical.

use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use crate::error::{Error, Result};

pub const FRINGE_HEADER: [&str; 4] = ["phase_rad", "coincidences", "accidentals", "duration_s"];
pub const HOM_HEADER: [&str; 3] = ["delay_ps", "fourfold", "dark_fourfold"];
pub const SINGLES_HEADER: [&str; 2] = ["detector", "counts"];
pub const RESULTS_HEADER: [&str; 3] = ["metric", "value", "uncertainty"];
pub const CAR_HEADER: [&str; 3] = ["sweep_value", "car", "car_oracle"];

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FringeRow {
    pub phase_rad: f64,
    pub coincidences: u64,
    pub accidentals: u64,
    pub duration_s: f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct HomRow {
    pub delay_ps: f64,
    pub fourfold: u64,
    pub dark_fourfold: u64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ResultRow {
    pub metric: String,
    pub value: f64,
    pub uncertainty: f64,
}

impl ResultRow {
    pub fn new(metric: impl Into<String>, value: f64, uncertainty: f64) -> Self {
        ResultRow {
            metric: metric.into(),
            value,
            uncertainty,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CarRow {
    pub sweep_value: f64,
    pub car: f64,
    pub car_oracle: f64,
}

/// Shortest representation that parses back to the same float.
pub fn fmt_f64(x: f64) -> String {
    format!("{x:?}")
}

fn csv_err(e: csv::Error) -> Error {
    Error::Csv(e.to_string())
}

fn write_table(path: &Path, header: &[&str], rows: impl IntoIterator<Item = Vec<String>>) -> Result<()> {
    let mut w = csv::WriterBuilder::new()
        .terminator(csv::Terminator::Any(b'\n'))
        .from_writer(Vec::new());
    w.write_record(header).map_err(csv_err)?;
    for row in rows {
        w.write_record(&row).map_err(csv_err)?;
    }
    let bytes = w.into_inner().map_err(|e| Error::Csv(e.to_string()))?;
    fs::write(path, bytes)?;
    Ok(())
}

fn read_table(path: &Path, header: &[&str]) -> Result<Vec<csv::StringRecord>> {
    let text = fs::read_to_string(path)?;
    let mut r = csv::ReaderBuilder::new().has_headers(true).from_reader(text.as_bytes());
    let found = r.headers().map_err(csv_err)?.clone();
    if found.iter().ne(header.iter().copied()) {
        return Err(Error::Csv(format!(
            "{}: expected header {}, found {}",
            path.display(),
            header.join(","),
            found.iter().collect::<Vec<_>>().join(",")
        )));
    }
    r.records().map(|rec| rec.map_err(csv_err)).collect()
}

fn field<T: std::str::FromStr>(rec: &csv::StringRecord, i: usize) -> Result<T> {
    let raw = rec.get(i).ok_or_else(|| Error::Csv(format!("missing column {i}")))?;
    raw.trim()
        .parse()
        .map_err(|_| Error::Csv(format!("cannot parse '{raw}' in column {i}")))
}

pub fn write_fringe_csv(path: &Path, rows: &[FringeRow]) -> Result<()> {
    write_table(
        path,
        &FRINGE_HEADER,
        rows.iter().map(|r| {
            vec![
                fmt_f64(r.phase_rad),
                r.coincidences.to_string(),
                r.accidentals.to_string(),
                fmt_f64(r.duration_s),
            ]
        }),
    )
}

pub fn read_fringe_csv(path: &Path) -> Result<Vec<FringeRow>> {
    read_table(path, &FRINGE_HEADER)?
        .iter()
        .map(|r| {
            Ok(FringeRow {
                phase_rad: field(r, 0)?,
                coincidences: field(r, 1)?,
                accidentals: field(r, 2)?,
                duration_s: field(r, 3)?,
            })
        })
        .collect()
}

pub fn write_hom_csv(path: &Path, rows: &[HomRow]) -> Result<()> {
    write_table(
        path,
        &HOM_HEADER,
        rows.iter()
            .map(|r| vec![fmt_f64(r.delay_ps), r.fourfold.to_string(), r.dark_fourfold.to_string()]),
    )
}

pub fn read_hom_csv(path: &Path) -> Result<Vec<HomRow>> {
    read_table(path, &HOM_HEADER)?
        .iter()
        .map(|r| {
            Ok(HomRow {
                delay_ps: field(r, 0)?,
                fourfold: field(r, 1)?,
                dark_fourfold: field(r, 2)?,
            })
        })
        .collect()
}

pub fn write_singles_csv(path: &Path, singles: &[(String, u64)]) -> Result<()> {
    write_table(path, &SINGLES_HEADER, singles.iter().map(|(d, n)| vec![d.clone(), n.to_string()]))
}

pub fn read_singles_csv(path: &Path) -> Result<Vec<(String, u64)>> {
    read_table(path, &SINGLES_HEADER)?
        .iter()
        .map(|r| Ok((field(r, 0)?, field(r, 1)?)))
        .collect()
}

pub fn write_results_csv(path: &Path, rows: &[ResultRow]) -> Result<()> {
    write_table(
        path,
        &RESULTS_HEADER,
        rows.iter()
            .map(|r| vec![r.metric.clone(), fmt_f64(r.value), fmt_f64(r.uncertainty)]),
    )
}

pub fn read_results_csv(path: &Path) -> Result<Vec<ResultRow>> {
    read_table(path, &RESULTS_HEADER)?
        .iter()
        .map(|r| Ok(ResultRow::new(field::<String>(r, 0)?, field(r, 1)?, field(r, 2)?)))
        .collect()
}

pub fn write_car_csv(path: &Path, rows: &[CarRow]) -> Result<()> {
    write_table(
        path,
        &CAR_HEADER,
        rows.iter()
            .map(|r| vec![fmt_f64(r.sweep_value), fmt_f64(r.car), fmt_f64(r.car_oracle)]),
    )
}

pub fn read_car_csv(path: &Path) -> Result<Vec<CarRow>> {
    read_table(path, &CAR_HEADER)?
        .iter()
        .map(|r| {
            Ok(CarRow {
                sweep_value: field(r, 0)?,
                car: field(r, 1)?,
                car_oracle: field(r, 2)?,
            })
        })
        .collect()
}

/// A scatter of measured points with an optional model curve.
pub struct Plot<'a> {
    pub title: &'a str,
    pub x_label: &'a str,
    pub y_label: &'a str,
    pub points: &'a [(f64, f64)],
    pub curve: Option<&'a [(f64, f64)]>,
}

const W: f64 = 640.0;
const H: f64 = 420.0;
const MARGIN: f64 = 60.0;

fn escape(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;")
}

impl Plot<'_> {
    pub fn to_svg(&self) -> String {
        let all = self.points.iter().chain(self.curve.unwrap_or(&[]).iter());
        let (mut x0, mut x1, mut y0, mut y1) = (f64::INFINITY, f64::NEG_INFINITY, 0.0f64, f64::NEG_INFINITY);
        for &(x, y) in all {
            x0 = x0.min(x);
            x1 = x1.max(x);
            y0 = y0.min(y);
            y1 = y1.max(y);
        }
        if !x0.is_finite() || x1 <= x0 {
            x0 = 0.0;
            x1 = 1.0;
        }
        if !y1.is_finite() || y1 <= y0 {
            y1 = y0 + 1.0;
        }
        y1 *= 1.05;
        let sx = |x: f64| MARGIN + (x - x0) / (x1 - x0) * (W - 2.0 * MARGIN);
        let sy = |y: f64| H - MARGIN - (y - y0) / (y1 - y0) * (H - 2.0 * MARGIN);

        let mut s = String::new();
        let _ = writeln!(
            s,
            r#"<svg xmlns="http://www.w3.org/2000/svg" width="{W}" height="{H}" viewBox="0 0 {W} {H}">"#
        );
        let _ = writeln!(s, r#"<rect width="{W}" height="{H}" fill="white"/>"#);
        let _ = writeln!(
            s,
            r#"<path d="M{m} {t} V{b} H{r}" stroke="black" fill="none"/>"#,
            m = MARGIN,
            t = MARGIN,
            b = H - MARGIN,
            r = W - MARGIN
        );
        for k in 0..=4 {
            let fx = x0 + (x1 - x0) * k as f64 / 4.0;
            let fy = y0 + (y1 - y0) * k as f64 / 4.0;
            let _ = writeln!(
                s,
                r#"<text x="{:.1}" y="{:.1}" font-size="11" text-anchor="middle">{:.3}</text>"#,
                sx(fx),
                H - MARGIN + 16.0,
                fx
            );
            let _ = writeln!(
                s,
                r#"<text x="{:.1}" y="{:.1}" font-size="11" text-anchor="end">{:.4}</text>"#,
                MARGIN - 6.0,
                sy(fy) + 4.0,
                fy
            );
        }
        let _ = writeln!(
            s,
            r#"<text x="{:.1}" y="24" font-size="14" text-anchor="middle">{}</text>"#,
            W / 2.0,
            escape(self.title)
        );
        let _ = writeln!(
            s,
            r#"<text x="{:.1}" y="{:.1}" font-size="12" text-anchor="middle">{}</text>"#,
            W / 2.0,
            H - 16.0,
            escape(self.x_label)
        );
        let _ = writeln!(
            s,
            r#"<text x="16" y="{:.1}" font-size="12" text-anchor="middle" transform="rotate(-90 16 {:.1})">{}</text>"#,
            H / 2.0,
            H / 2.0,
            escape(self.y_label)
        );
        if let Some(curve) = self.curve {
            let d: Vec<String> = curve
                .iter()
                .enumerate()
                .map(|(i, &(x, y))| format!("{}{:.2} {:.2}", if i == 0 { 'M' } else { 'L' }, sx(x), sy(y)))
                .collect();
            let _ = writeln!(s, r#"<path d="{}" stroke="steelblue" stroke-width="1.5" fill="none"/>"#, d.join(" "));
        }
        for &(x, y) in self.points {
            let _ = writeln!(s, r#"<circle cx="{:.2}" cy="{:.2}" r="3" fill="crimson"/>"#, sx(x), sy(y));
        }
        s.push_str("</svg>\n");
        s
    }

    pub fn write(&self, path: &Path) -> Result<()> {
        fs::write(path, self.to_svg())?;
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn fringe_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("f.csv");
        let rows = vec![
            FringeRow {
                phase_rad: 0.1 + 0.2,
                coincidences: 17,
                accidentals: 2,
                duration_s: 1e-3,
            },
            FringeRow {
                phase_rad: std::f64::consts::PI,
                coincidences: 0,
                accidentals: 0,
                duration_s: 60.0,
            },
        ];
        write_fringe_csv(&p, &rows).unwrap();
        let text = fs::read_to_string(&p).unwrap();
        assert!(text.starts_with("phase_rad,coincidences,accidentals,duration_s\n"));
        assert!(!text.contains('\r'));
        assert_eq!(read_fringe_csv(&p).unwrap(), rows);
    }

    #[test]
    fn other_tables_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let h = dir.path().join("h.csv");
        let hom = vec![HomRow {
            delay_ps: -12.5,
            fourfold: 40,
            dark_fourfold: 3,
        }];
        write_hom_csv(&h, &hom).unwrap();
        assert_eq!(read_hom_csv(&h).unwrap(), hom);

        let r = dir.path().join("r.csv");
        let res = vec![ResultRow::new("visibility_T1", 0.9312345678901234, 0.0123)];
        write_results_csv(&r, &res).unwrap();
        assert_eq!(read_results_csv(&r).unwrap(), res);

        let s = dir.path().join("s.csv");
        let singles = vec![("S8-T1".to_string(), 12u64)];
        write_singles_csv(&s, &singles).unwrap();
        assert_eq!(read_singles_csv(&s).unwrap(), singles);
        assert!(read_hom_csv(&s).is_err());
    }

    #[test]
    fn svg_is_well_formed() {
        let pts = [(0.0, 1.0), (1.0, 3.0), (2.0, 2.0)];
        let svg = Plot {
            title: "a < b",
            x_label: "x",
            y_label: "y",
            points: &pts,
            curve: Some(&pts),
        }
        .to_svg();
        assert!(svg.starts_with("<svg"));
        assert!(svg.trim_end().ends_with("</svg>"));
        assert_eq!(svg.matches("<circle").count(), 3);
        assert!(svg.contains("a &lt; b"));
    }
}
