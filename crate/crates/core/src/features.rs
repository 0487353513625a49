//! LBP labeling and regional histogram features.

use std::io::Write;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::imaging::GrayImage;

/// Neighbour offsets, clockwise from the top-left; bit `k` has weight `2^k`.
const NEIGHBOURS: [(isize, isize); 8] = [
    (-1, -1),
    (0, -1),
    (1, -1),
    (1, 0),
    (1, 1),
    (0, 1),
    (-1, 1),
    (-1, 0),
];

/// LBP codes of the interior pixels; the 1-pixel frame has no code.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LbpRaster {
    width: usize,
    height: usize,
    codes: Vec<u8>,
}

impl LbpRaster {
    /// Width of the source image.
    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    /// Code at source coordinate `(x, y)`, `None` on the border frame.
    pub fn code(&self, x: usize, y: usize) -> Option<u8> {
        if x == 0 || y == 0 || x + 1 >= self.width || y + 1 >= self.height {
            return None;
        }
        Some(self.codes[(y - 1) * (self.width - 2) + (x - 1)])
    }

    pub fn codes(&self) -> &[u8] {
        &self.codes
    }
}

/// 3x3 LBP operator: a neighbour at least as bright as the center sets its bit.
pub fn lbp_label(img: &GrayImage) -> Result<LbpRaster> {
    let (w, h) = img.dims();
    if w < 3 || h < 3 {
        return Err(Error::DimensionTooSmall {
            width: w,
            height: h,
            min: 3,
        });
    }
    let mut codes = Vec::with_capacity((w - 2) * (h - 2));
    for y in 1..h - 1 {
        for x in 1..w - 1 {
            let c = img.get(x, y);
            let mut code = 0u8;
            for (k, (dx, dy)) in NEIGHBOURS.iter().enumerate() {
                let n = img.get((x as isize + dx) as usize, (y as isize + dy) as usize);
                if n >= c {
                    code |= 1 << k;
                }
            }
            codes.push(code);
        }
    }
    Ok(LbpRaster {
        width: w,
        height: h,
        codes,
    })
}

/// Region grid and histogram resolution.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct FeatureParams {
    pub rows: usize,
    pub cols: usize,
    pub bins: usize,
}

impl Default for FeatureParams {
    fn default() -> Self {
        Self {
            rows: 4,
            cols: 4,
            bins: 10,
        }
    }
}

impl FeatureParams {
    pub fn dim(&self) -> usize {
        self.rows * self.cols * self.bins
    }
}

/// Region-major concatenation of per-region normalized LBP histograms.
#[derive(Debug, Clone, PartialEq)]
pub struct FeatureVector {
    values: Vec<f64>,
    regions: usize,
    bins: usize,
}

impl FeatureVector {
    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn into_values(self) -> Vec<f64> {
        self.values
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn region(&self, j: usize) -> &[f64] {
        &self.values[j * self.bins..(j + 1) * self.bins]
    }

    pub fn regions(&self) -> usize {
        self.regions
    }
}

/// Bin of an LBP code among `bins` uniform bins spanning `[0, 256)`.
#[inline]
pub fn code_bin(code: u8, bins: usize) -> usize {
    code as usize * bins / 256
}

/// Half-open span of band `k` when `n` pixels are split into `parts` near-equal bands.
#[inline]
fn band(k: usize, parts: usize, n: usize) -> (usize, usize) {
    (k * n / parts, (k + 1) * n / parts)
}

/// Raw per-region histogram counts (region-major) and interior pixel counts.
pub fn region_histograms(lbp: &LbpRaster, params: &FeatureParams) -> Result<(Vec<f64>, Vec<usize>)> {
    let FeatureParams { rows, cols, bins } = *params;
    if rows == 0 || cols == 0 || bins == 0 {
        return Err(Error::Config("feature grid and bin count must be positive".into()));
    }
    let mut hist = vec![0.0; rows * cols * bins];
    let mut counts = vec![0usize; rows * cols];
    for r in 0..rows {
        let (y0, y1) = band(r, rows, lbp.height);
        for c in 0..cols {
            let (x0, x1) = band(c, cols, lbp.width);
            let j = r * cols + c;
            for y in y0..y1 {
                for x in x0..x1 {
                    if let Some(code) = lbp.code(x, y) {
                        hist[j * bins + code_bin(code, bins)] += 1.0;
                        counts[j] += 1;
                    }
                }
            }
            if counts[j] == 0 {
                return Err(Error::EmptyRegion { index: j });
            }
        }
    }
    Ok((hist, counts))
}

/// LBP regional histogram features, each region block normalized to sum 1.
pub fn extract_features(img: &GrayImage, params: &FeatureParams) -> Result<FeatureVector> {
    let lbp = lbp_label(img)?;
    let (mut values, counts) = region_histograms(&lbp, params)?;
    for (j, n) in counts.iter().enumerate() {
        for v in &mut values[j * params.bins..(j + 1) * params.bins] {
            *v /= *n as f64;
        }
    }
    Ok(FeatureVector {
        values,
        regions: params.rows * params.cols,
        bins: params.bins,
    })
}

/// Writes rows as CSV with header `f0..f{d-1}[,label]`.
pub fn write_feature_csv<W: Write>(
    out: W,
    rows: &[Vec<f64>],
    labels: Option<&[usize]>,
) -> Result<()> {
    let dim = rows.first().map_or(0, Vec::len);
    let mut wtr = csv::Writer::from_writer(out);
    let mut header: Vec<String> = (0..dim).map(|i| format!("f{i}")).collect();
    if labels.is_some() {
        header.push("label".into());
    }
    wtr.write_record(&header)?;
    for (i, row) in rows.iter().enumerate() {
        if row.len() != dim {
            return Err(Error::InvalidDataset(format!("row {i} has {} features, expected {dim}", row.len())));
        }
        let mut rec: Vec<String> = row.iter().map(|v| format!("{v}")).collect();
        if let Some(l) = labels {
            rec.push(l[i].to_string());
        }
        wtr.write_record(&rec)?;
    }
    wtr.flush().map_err(|e| Error::io("<csv>", e))?;
    Ok(())
}

/// Reads a feature CSV; the label column is returned when present.
pub fn read_feature_csv<R: std::io::Read>(input: R) -> Result<(Vec<Vec<f64>>, Option<Vec<usize>>)> {
    let mut rdr = csv::Reader::from_reader(input);
    let header = rdr.headers()?.clone();
    let has_label = header.iter().last() == Some("label");
    let dim = header.len() - has_label as usize;
    let mut rows = Vec::new();
    let mut labels = Vec::new();
    for (i, rec) in rdr.records().enumerate() {
        let rec = rec?;
        let parse = |s: &str| {
            s.trim()
                .parse::<f64>()
                .map_err(|_| Error::InvalidDataset(format!("row {i}: bad number {s:?}")))
        };
        let row = rec.iter().take(dim).map(parse).collect::<Result<Vec<_>>>()?;
        rows.push(row);
        if has_label {
            let l = rec.get(dim).unwrap_or("");
            labels.push(
                l.trim()
                    .parse()
                    .map_err(|_| Error::InvalidDataset(format!("row {i}: bad label {l:?}")))?,
            );
        }
    }
    Ok((rows, has_label.then_some(labels)))
}
