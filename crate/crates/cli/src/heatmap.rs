//! Binary PPM rendering of phase-plane grids.
//!
//! The colormap is piecewise linear through fixed control points:
//! `p = 0` dark blue `(0, 0, 139)`, `p = 0.25` green `(0, 176, 0)` and
//! `p = 0.5` yellow `(255, 255, 0)`. Values outside `[0, 0.5]` are clamped.
//! Columns run over increasing φ, rows over decreasing ζ.

use std::io::{self, Read, Write};

use qrws_core::format::fmt9;
use qrws_core::Grid2D;

pub const CONTROL_POINTS: [(f64, [u8; 3]); 3] = [
    (0.0, [0, 0, 139]),
    (0.25, [0, 176, 0]),
    (0.5, [255, 255, 0]),
];

/// Header token describing the colormap.
pub fn colormap_label() -> String {
    CONTROL_POINTS
        .iter()
        .map(|(p, c)| format!("{p}:{},{},{}", c[0], c[1], c[2]))
        .collect::<Vec<_>>()
        .join(";")
}

pub fn color(p: f64) -> [u8; 3] {
    let (lo, lo_color) = CONTROL_POINTS[0];
    let (hi, hi_color) = CONTROL_POINTS[CONTROL_POINTS.len() - 1];
    if p <= lo {
        return lo_color;
    }
    if p >= hi {
        return hi_color;
    }
    let i = CONTROL_POINTS
        .windows(2)
        .position(|w| p <= w[1].0)
        .expect("p lies inside the control range");
    let ((p0, c0), (p1, c1)) = (CONTROL_POINTS[i], CONTROL_POINTS[i + 1]);
    let t = (p - p0) / (p1 - p0);
    std::array::from_fn(|j| {
        let (a, b) = (c0[j] as f64, c1[j] as f64);
        (a + t * (b - a)).round() as u8
    })
}

/// Probabilities on a φ × ζ grid, `prob[a * zeta.len() + b]`.
#[derive(Debug, Clone, PartialEq)]
pub struct PhaseGrid {
    pub phi: Vec<f64>,
    pub zeta: Vec<f64>,
    pub prob: Vec<f64>,
}

// rounded as in the CSV, so both render to the same image
impl From<&Grid2D> for PhaseGrid {
    fn from(g: &Grid2D) -> Self {
        let round = |xs: &[f64]| -> Vec<f64> {
            xs.iter()
                .map(|&x| fmt9(x).parse().expect("formatted float"))
                .collect()
        };
        Self {
            phi: round(&g.phi_axis),
            zeta: round(&g.zeta_axis),
            prob: round(&g.prob),
        }
    }
}

/// Reads a `phi,zeta,probability` CSV in φ-major order; `#` lines are
/// skipped.
pub fn read_grid_csv<R: Read>(input: R) -> Result<PhaseGrid, String> {
    let mut reader = csv::ReaderBuilder::new()
        .comment(Some(b'#'))
        .from_reader(input);
    let headers = reader.headers().map_err(|e| e.to_string())?.clone();
    if headers.iter().collect::<Vec<_>>() != ["phi", "zeta", "probability"] {
        return Err(format!(
            "expected header phi,zeta,probability, found {}",
            headers.iter().collect::<Vec<_>>().join(",")
        ));
    }
    let mut rows = Vec::new();
    for (i, record) in reader.records().enumerate() {
        let record = record.map_err(|e| e.to_string())?;
        let mut values = [0.0; 3];
        for (v, field) in values.iter_mut().zip(record.iter()) {
            *v = field
                .trim()
                .parse::<f64>()
                .ok()
                .filter(|x| x.is_finite())
                .ok_or_else(|| format!("data row {}: bad number {field:?}", i + 1))?;
        }
        rows.push(values);
    }
    if rows.is_empty() {
        return Err("grid has no data rows".into());
    }
    let n_zeta = rows.iter().take_while(|r| r[0] == rows[0][0]).count();
    if rows.len() % n_zeta != 0 {
        return Err(format!(
            "{} rows do not form a grid with {n_zeta} zeta values per phi",
            rows.len()
        ));
    }
    let zeta: Vec<f64> = rows[..n_zeta].iter().map(|r| r[1]).collect();
    let phi: Vec<f64> = rows.iter().step_by(n_zeta).map(|r| r[0]).collect();
    for (i, r) in rows.iter().enumerate() {
        if r[0] != phi[i / n_zeta] || r[1] != zeta[i % n_zeta] {
            return Err(format!(
                "data row {} breaks the phi-major grid order",
                i + 1
            ));
        }
    }
    Ok(PhaseGrid {
        phi,
        zeta,
        prob: rows.iter().map(|r| r[2]).collect(),
    })
}

/// Writes a P6 image, `comment` goes into the header after the magic
/// number and must start with `#`.
pub fn write_ppm<W: Write>(grid: &PhaseGrid, comment: &str, mut out: W) -> io::Result<()> {
    debug_assert!(comment.starts_with('#') && !comment.contains('\n'));
    let (width, height) = (grid.phi.len(), grid.zeta.len());
    write!(out, "P6\n{comment}\n{width} {height}\n255\n")?;
    let mut pixels = Vec::with_capacity(3 * width * height);
    for b in (0..height).rev() {
        for a in 0..width {
            pixels.extend_from_slice(&color(grid.prob[a * height + b]));
        }
    }
    out.write_all(&pixels)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn control_points_are_exact() {
        for (p, c) in CONTROL_POINTS {
            assert_eq!(color(p), c);
        }
        assert_eq!(color(-0.1), [0, 0, 139]);
        assert_eq!(color(0.9), [255, 255, 0]);
        assert_eq!(color(0.125), [0, 88, 70]);
    }

    #[test]
    fn rows_go_down_in_zeta() {
        let grid = PhaseGrid {
            phi: vec![0.0, 1.0],
            zeta: vec![0.0, 1.0],
            // (phi0, zeta0), (phi0, zeta1), (phi1, zeta0), (phi1, zeta1)
            prob: vec![0.0, 0.5, 0.25, 0.0],
        };
        let mut out = Vec::new();
        write_ppm(&grid, "# t", &mut out).unwrap();
        let head = b"P6\n# t\n2 2\n255\n";
        assert_eq!(&out[..head.len()], head);
        let px = &out[head.len()..];
        assert_eq!(px.len(), 12);
        // top row is zeta1
        assert_eq!(&px[0..3], &[255, 255, 0]);
        assert_eq!(&px[3..6], &[0, 0, 139]);
        assert_eq!(&px[6..9], &[0, 0, 139]);
        assert_eq!(&px[9..12], &[0, 176, 0]);
    }

    #[test]
    fn reads_grid_back() {
        let csv = "# qrws\nphi,zeta,probability\n0,0,0.1\n0,1,0.2\n2,0,0.3\n2,1,0.4\n";
        let g = read_grid_csv(csv.as_bytes()).unwrap();
        assert_eq!(g.phi, [0.0, 2.0]);
        assert_eq!(g.zeta, [0.0, 1.0]);
        assert_eq!(g.prob, [0.1, 0.2, 0.3, 0.4]);

        let ragged = "phi,zeta,probability\n0,0,0.1\n0,1,0.2\n2,0,0.3\n";
        assert!(read_grid_csv(ragged.as_bytes()).is_err());
        let shuffled = "phi,zeta,probability\n0,0,0.1\n0,1,0.2\n2,1,0.3\n2,0,0.4\n";
        assert!(read_grid_csv(shuffled.as_bytes()).is_err());
        assert!(read_grid_csv("omega,p\n1,2\n".as_bytes()).is_err());
    }
}
