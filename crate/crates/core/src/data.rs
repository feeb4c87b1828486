//! Dataset files, image loading and the synthetic benchmark generator.
//!
//! Sample files are CSV with a header naming one grade column and the
//! feature columns, one sample per row:
//!
//! ```text
//! grade,f0,f1,...,f{m-1}
//! 0.63,0.12,0.57,...
//! ```

use std::fs;
use std::io::{Read, Write};
use std::path::{Path, PathBuf};

use ndarray::{Array1, Array2};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal, Uniform};
use serde::{Deserialize, Serialize};

use crate::domain::{Dictionary, FeatureVector};
use crate::error::{Result, SrclError};
use crate::features::GrayImage;

pub const DEFAULT_GRADE_COLUMN: &str = "grade";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum FeatureKind {
    RawVector,
    ImageResize,
    BagOfWords,
}

/// Run configuration: which files hold the references and the test set.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DatasetManifest {
    pub reference_path: PathBuf,
    pub test_path: PathBuf,
    pub feature_kind: FeatureKind,
    #[serde(default = "default_grade_column")]
    pub grade_column: String,
    pub seed: u64,
}

fn default_grade_column() -> String {
    DEFAULT_GRADE_COLUMN.to_string()
}

impl DatasetManifest {
    pub fn new(reference_path: impl Into<PathBuf>, test_path: impl Into<PathBuf>) -> Self {
        Self {
            reference_path: reference_path.into(),
            test_path: test_path.into(),
            feature_kind: FeatureKind::RawVector,
            grade_column: default_grade_column(),
            seed: 0,
        }
    }

    /// Reads a JSON manifest; relative paths are resolved against the
    /// manifest's directory.
    pub fn load(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path)?;
        let mut manifest: Self = serde_json::from_str(&text).map_err(|e| SrclError::ParseError {
            line: e.line() as u64,
            column: e.column(),
            message: e.to_string(),
        })?;
        if manifest.reference_path.as_os_str().is_empty() || manifest.test_path.as_os_str().is_empty() {
            return Err(SrclError::ParseError {
                line: 0,
                column: 0,
                message: "manifest paths must be nonempty".into(),
            });
        }
        let base = path.parent().unwrap_or(Path::new(""));
        for p in [&mut manifest.reference_path, &mut manifest.test_path] {
            if p.is_relative() {
                *p = base.join(&*p);
            }
        }
        Ok(manifest)
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        let text = serde_json::to_string_pretty(self).expect("manifest serialises");
        fs::write(path, text + "\n")?;
        Ok(())
    }
}

/// Feature vectors with their grades, in file order.
#[derive(Debug, Clone, PartialEq)]
pub struct LabeledSamples {
    pub features: Vec<FeatureVector>,
    pub grades: Vec<f64>,
}

impl LabeledSamples {
    pub fn len(&self) -> usize {
        self.features.len()
    }

    pub fn is_empty(&self) -> bool {
        self.features.is_empty()
    }

    pub fn into_dictionary(self) -> Result<Dictionary> {
        let cols: Vec<Vec<f64>> = self.features.into_iter().map(|f| f.into_inner().to_vec()).collect();
        Dictionary::from_samples(&cols, self.grades)
    }
}

fn parse_error(line: u64, column: usize, message: impl Into<String>) -> SrclError {
    SrclError::ParseError {
        line,
        column,
        message: message.into(),
    }
}

/// Parses labelled samples from CSV text. `grade_column` names the grade;
/// every other column is a feature.
pub fn read_samples<R: Read>(reader: R, grade_column: &str) -> Result<LabeledSamples> {
    let mut rdr = csv::ReaderBuilder::new().has_headers(true).from_reader(reader);
    let headers = rdr
        .headers()
        .map_err(|e| parse_error(1, 0, e.to_string()))?
        .clone();
    let grade_idx = headers
        .iter()
        .position(|h| h.trim() == grade_column)
        .ok_or_else(|| SrclError::GradeMissing(grade_column.to_string()))?;
    let width = headers.len();
    if width < 2 {
        return Err(parse_error(1, 0, "header has no feature columns"));
    }
    let mut features = Vec::new();
    let mut grades = Vec::new();
    for record in rdr.records() {
        let record = record.map_err(|e| {
            let line = e.position().map_or(0, |p| p.line());
            parse_error(line, 0, e.to_string())
        })?;
        let line = record.position().map_or(0, |p| p.line());
        if record.len() != width {
            return Err(parse_error(line, record.len(), format!("expected {width} fields, found {}", record.len())));
        }
        let mut values = Vec::with_capacity(width - 1);
        for (col, field) in record.iter().enumerate() {
            let field = field.trim();
            if col == grade_idx && field.is_empty() {
                return Err(SrclError::GradeMissing(format!("{grade_column} (row at line {line})")));
            }
            let v: f64 = field.parse().map_err(|_| {
                parse_error(line, col + 1, format!("`{field}` in column `{}` is not a number", &headers[col]))
            })?;
            if !v.is_finite() {
                return Err(parse_error(line, col + 1, format!("non-finite value `{field}`")));
            }
            if col == grade_idx {
                grades.push(v);
            } else {
                values.push(v);
            }
        }
        features.push(FeatureVector::from_vec(values)?);
    }
    Ok(LabeledSamples { features, grades })
}

pub fn load_samples(path: &Path, grade_column: &str) -> Result<LabeledSamples> {
    let file = fs::File::open(path).map_err(|e| SrclError::Io(format!("{}: {e}", path.display())))?;
    read_samples(std::io::BufReader::new(file), grade_column)
}

/// Loads the reference file of a manifest as a dictionary.
pub fn load_dictionary(path: &Path, manifest: &DatasetManifest) -> Result<Dictionary> {
    let samples = load_samples(path, &manifest.grade_column)?;
    if let Some(first) = samples.features.first() {
        let m = first.len();
        if let Some(bad) = samples.features.iter().find(|f| f.len() != m) {
            return Err(SrclError::DimensionMismatch {
                expected: m,
                found: bad.len(),
                context: "reference sample length",
            });
        }
    }
    samples.into_dictionary()
}

/// Writes samples as `grade,f0,...`. Values use the shortest representation
/// that parses back to the same `f64`.
pub fn write_samples<W: Write>(writer: W, features: &[FeatureVector], grades: &[f64]) -> Result<()> {
    if features.len() != grades.len() {
        return Err(SrclError::LengthMismatch(features.len(), grades.len()));
    }
    let m = features.first().map_or(0, FeatureVector::len);
    let mut wtr = csv::Writer::from_writer(writer);
    let mut header = vec![DEFAULT_GRADE_COLUMN.to_string()];
    header.extend((0..m).map(|i| format!("f{i}")));
    wtr.write_record(&header).map_err(|e| SrclError::Io(e.to_string()))?;
    for (f, g) in features.iter().zip(grades) {
        if f.len() != m {
            return Err(SrclError::DimensionMismatch {
                expected: m,
                found: f.len(),
                context: "sample length",
            });
        }
        let mut row = Vec::with_capacity(m + 1);
        row.push(g.to_string());
        row.extend(f.values().iter().map(|v| v.to_string()));
        wtr.write_record(&row).map_err(|e| SrclError::Io(e.to_string()))?;
    }
    wtr.flush()?;
    Ok(())
}

pub fn save_samples(path: &Path, features: &[FeatureVector], grades: &[f64]) -> Result<()> {
    let file = fs::File::create(path)?;
    write_samples(std::io::BufWriter::new(file), features, grades)
}

/// Saves a dictionary in the sample format (one atom per row).
pub fn save_dictionary(path: &Path, dict: &Dictionary) -> Result<()> {
    let features: Vec<FeatureVector> = dict
        .atoms()
        .columns()
        .into_iter()
        .map(|c| FeatureVector::new(c.to_owned()))
        .collect::<Result<_>>()?;
    save_samples(path, &features, &dict.grades().to_vec())
}

/// Loads a grayscale image from a PGM (P2 or P5) file or a CSV matrix of
/// intensities in `[0, 1]`, chosen by extension.
pub fn load_image(path: &Path) -> Result<GrayImage> {
    let ext = path.extension().and_then(|e| e.to_str()).map(str::to_ascii_lowercase);
    let bytes = fs::read(path).map_err(|e| SrclError::Io(format!("{}: {e}", path.display())))?;
    match ext.as_deref() {
        Some("pgm") => parse_pgm(&bytes),
        Some("csv") => parse_csv_image(&bytes),
        _ => Err(SrclError::InvalidImage(format!(
            "{}: expected a .pgm or .csv image",
            path.display()
        ))),
    }
}

pub fn parse_pgm(bytes: &[u8]) -> Result<GrayImage> {
    let bad = |msg: &str| SrclError::InvalidImage(format!("PGM: {msg}"));
    let mut pos = 0usize;
    let next_token = |pos: &mut usize| -> Option<String> {
        loop {
            while *pos < bytes.len() && bytes[*pos].is_ascii_whitespace() {
                *pos += 1;
            }
            if *pos < bytes.len() && bytes[*pos] == b'#' {
                while *pos < bytes.len() && bytes[*pos] != b'\n' {
                    *pos += 1;
                }
                continue;
            }
            break;
        }
        let start = *pos;
        while *pos < bytes.len() && !bytes[*pos].is_ascii_whitespace() {
            *pos += 1;
        }
        (start < *pos).then(|| String::from_utf8_lossy(&bytes[start..*pos]).into_owned())
    };
    let magic = next_token(&mut pos).ok_or_else(|| bad("empty file"))?;
    let mut header = [0usize; 3];
    for slot in &mut header {
        *slot = next_token(&mut pos)
            .and_then(|t| t.parse().ok())
            .ok_or_else(|| bad("malformed header"))?;
    }
    let [width, height, maxval] = header;
    if maxval == 0 || maxval > 65535 {
        return Err(bad("maxval must be in 1..=65535"));
    }
    let count = width * height;
    let raw: Vec<usize> = match magic.as_str() {
        "P2" => (0..count)
            .map(|_| next_token(&mut pos).and_then(|t| t.parse().ok()))
            .collect::<Option<_>>()
            .ok_or_else(|| bad("truncated pixel data"))?,
        "P5" => {
            let start = pos + 1;
            let per = if maxval < 256 { 1 } else { 2 };
            let data = bytes
                .get(start..start + count * per)
                .ok_or_else(|| bad("truncated pixel data"))?;
            if per == 1 {
                data.iter().map(|&b| b as usize).collect()
            } else {
                data.chunks(2).map(|c| ((c[0] as usize) << 8) | c[1] as usize).collect()
            }
        }
        other => return Err(bad(&format!("unsupported magic `{other}`"))),
    };
    if raw.iter().any(|&v| v > maxval) {
        return Err(bad("pixel exceeds maxval"));
    }
    let pixels = Array2::from_shape_vec((height, width), raw.into_iter().map(|v| v as f64 / maxval as f64).collect())
        .map_err(|e| bad(&e.to_string()))?;
    GrayImage::new(pixels)
}

fn parse_csv_image(bytes: &[u8]) -> Result<GrayImage> {
    let mut rdr = csv::ReaderBuilder::new().has_headers(false).from_reader(bytes);
    let mut rows: Vec<Vec<f64>> = Vec::new();
    for record in rdr.records() {
        let record = record.map_err(|e| SrclError::InvalidImage(e.to_string()))?;
        let line = rows.len() as u64 + 1;
        let row = record
            .iter()
            .enumerate()
            .map(|(c, f)| {
                f.trim()
                    .parse::<f64>()
                    .map_err(|_| parse_error(line, c + 1, format!("`{f}` is not a number")))
            })
            .collect::<Result<Vec<_>>>()?;
        rows.push(row);
    }
    let h = rows.len();
    let w = rows.first().map_or(0, Vec::len);
    if rows.iter().any(|r| r.len() != w) {
        return Err(SrclError::InvalidImage("ragged CSV image".into()));
    }
    GrayImage::new(Array2::from_shape_fn((h, w), |(r, c)| rows[r][c]))
}

/// Parameters of the synthetic grading benchmark.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SyntheticConfig {
    pub n_ref: usize,
    pub n_test: usize,
    /// Feature dimension; must be a perfect square (side² pixels).
    pub dim: usize,
    pub noise_sigma: f64,
    /// Energy of the structured nuisance relative to the prototype
    /// (`‖nuisance‖² = fraction · ‖prototype‖²`). Zero disables it.
    pub nuisance_fraction: f64,
    /// Number of stripe patterns spanning the nuisance subspace.
    pub nuisance_rank: usize,
    pub seed: u64,
}

impl Default for SyntheticConfig {
    fn default() -> Self {
        Self {
            n_ref: 120,
            n_test: 200,
            dim: 2500,
            noise_sigma: 0.03,
            nuisance_fraction: 0.3,
            nuisance_rank: 1,
            seed: 7,
        }
    }
}

pub const SYNTHETIC_GRADE_RANGE: (f64, f64) = (0.2, 0.9);
const DISC_RADIUS: f64 = 0.9;
const EDGE_WIDTH: f64 = 0.05;

#[derive(Debug, Clone)]
pub struct SyntheticDataset {
    pub dictionary: Dictionary,
    pub tests: Vec<FeatureVector>,
    pub test_grades: Vec<f64>,
}

fn logistic(x: f64) -> f64 {
    1.0 / (1.0 + (-x).exp())
}

fn grid_side(dim: usize) -> Result<usize> {
    let side = (dim as f64).sqrt().round() as usize;
    if dim == 0 || side * side != dim {
        return Err(SrclError::BadDimension(dim));
    }
    Ok(side)
}

/// Noise-free disc pattern for grade `u`: a bright disc of fixed radius with
/// a brighter central cup whose radius is proportional to `u`.
pub fn prototype(u: f64, dim: usize) -> Result<Array1<f64>> {
    let side = grid_side(dim)?;
    let cup_radius = u * DISC_RADIUS;
    Ok(Array1::from_shape_fn(dim, |k| {
        let r = radius_at(k / side, k % side, side);
        0.35 * logistic((DISC_RADIUS - r) / EDGE_WIDTH) + 0.45 * logistic((cup_radius - r) / EDGE_WIDTH)
    }))
}

fn radius_at(row: usize, col: usize, side: usize) -> f64 {
    let y = 2.0 * (row as f64 + 0.5) / side as f64 - 1.0;
    let x = 2.0 * (col as f64 + 0.5) / side as f64 - 1.0;
    (x * x + y * y).sqrt()
}

/// Fixed low-rank basis of vessel-like stripes, derived from `seed`.
fn nuisance_basis(side: usize, rank: usize, seed: u64) -> Vec<Array1<f64>> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0x5eed_0f7e_55e1);
    (0..rank)
        .map(|_| {
            let angle = rng.random_range(0.0..std::f64::consts::PI);
            let offset = rng.random_range(-0.5..0.5);
            let width = rng.random_range(0.04..0.12);
            let (s, c) = angle.sin_cos();
            let v = Array1::from_shape_fn(side * side, |k| {
                let y = 2.0 * ((k / side) as f64 + 0.5) / side as f64 - 1.0;
                let x = 2.0 * ((k % side) as f64 + 0.5) / side as f64 - 1.0;
                let d = x * s - y * c - offset;
                (-(d * d) / (2.0 * width * width)).exp()
            });
            let norm = v.dot(&v).sqrt();
            v / norm
        })
        .collect()
}

/// Draws a reference dictionary and a test set from the synthetic family.
pub fn generate_synthetic(config: &SyntheticConfig) -> Result<SyntheticDataset> {
    if config.n_ref < 10 {
        return Err(SrclError::InvalidHyperparameters(format!(
            "n_ref must be >= 10, got {}",
            config.n_ref
        )));
    }
    if !(config.noise_sigma >= 0.0) || !(config.nuisance_fraction >= 0.0) {
        return Err(SrclError::InvalidHyperparameters(
            "noise_sigma and nuisance_fraction must be >= 0".into(),
        ));
    }
    let side = grid_side(config.dim)?;
    let basis = nuisance_basis(side, config.nuisance_rank, config.seed);
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let grades = Uniform::new_inclusive(SYNTHETIC_GRADE_RANGE.0, SYNTHETIC_GRADE_RANGE.1).expect("valid range");
    let unit = Normal::new(0.0, 1.0).expect("valid normal");

    let draw = |rng: &mut ChaCha8Rng| -> Result<(FeatureVector, f64)> {
        let u = grades.sample(rng);
        let mut x = prototype(u, config.dim)?;
        let energy = x.dot(&x);
        let coeffs: Vec<f64> = (0..config.nuisance_rank).map(|_| unit.sample(rng)).collect();
        if config.nuisance_fraction > 0.0 {
            let mut n = Array1::<f64>::zeros(config.dim);
            for (b, a) in basis.iter().zip(&coeffs) {
                n.scaled_add(*a, b);
            }
            let nn = n.dot(&n);
            if nn > 0.0 {
                x.scaled_add((config.nuisance_fraction * energy / nn).sqrt(), &n);
            }
        }
        if config.noise_sigma > 0.0 {
            x.mapv_inplace(|v| v + config.noise_sigma * unit.sample(rng));
        }
        Ok((FeatureVector::new(x)?, u))
    };

    let mut refs = Vec::with_capacity(config.n_ref);
    let mut ref_grades = Vec::with_capacity(config.n_ref);
    for _ in 0..config.n_ref {
        let (x, u) = draw(&mut rng)?;
        refs.push(x.into_inner().to_vec());
        ref_grades.push(u);
    }
    let mut tests = Vec::with_capacity(config.n_test);
    let mut test_grades = Vec::with_capacity(config.n_test);
    for _ in 0..config.n_test {
        let (x, u) = draw(&mut rng)?;
        tests.push(x);
        test_grades.push(u);
    }
    Ok(SyntheticDataset {
        dictionary: Dictionary::from_samples(&refs, ref_grades)?,
        tests,
        test_grades,
    })
}
