//! Panel ingestion and alignment: yields, areas, prices and drought
//! declarations, plus the planted-share series derived from areas.
//!
//! All types are immutable after construction and validated against their
//! invariants at the boundary, so downstream modules can assume a
//! rectangular, finite, non-negative panel.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use thiserror::Error;

/// Which input file a row came from, for error/warning context.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SourceFile {
    Yields,
    Areas,
    Prices,
    Declarations,
    Instalments,
}

impl fmt::Display for SourceFile {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let name = match self {
            SourceFile::Yields => "yields",
            SourceFile::Areas => "areas",
            SourceFile::Prices => "prices",
            SourceFile::Declarations => "declarations",
            SourceFile::Instalments => "instalments",
        };
        write!(f, "{name}")
    }
}

#[derive(Debug, Error)]
pub enum DataError {
    #[error("{file} line {line}: malformed row: {detail}")]
    Malformed {
        file: SourceFile,
        line: u64,
        detail: String,
    },
    #[error("{file} line {line}: negative value {value} for crop `{crop}` year {year}")]
    NegativeValue {
        file: SourceFile,
        line: u64,
        crop: String,
        year: i32,
        value: f64,
    },
    #[error("{file} line {line}: non-finite value for crop `{crop}` year {year}")]
    NonFiniteValue {
        file: SourceFile,
        line: u64,
        crop: String,
        year: i32,
    },
    #[error("{file} line {line}: duplicate entry for crop `{crop}` year {year}")]
    DuplicateKey {
        file: SourceFile,
        line: u64,
        crop: String,
        year: i32,
    },
    #[error("{file}: missing required column `{column}`")]
    MissingColumn { file: SourceFile, column: String },
    #[error("yields and areas share no (crop, year) cells; nothing to build a panel from")]
    EmptyIntersection,
    #[error("panel needs at least 2 complete years, found {found}")]
    TooFewYears { found: usize },
    #[error("panel needs at least 1 crop, found none")]
    NoCrops,
    #[error("year {year} has zero total planted area")]
    ZeroAreaYear { year: i32 },
    #[error("years are not strictly increasing at {year}")]
    UnsortedYears { year: i32 },
    #[error("duplicate crop identifier `{crop}`")]
    DuplicateCrop { crop: String },
    #[error("crop `{crop}` has no price")]
    MissingPrice { crop: String },
    #[error("{file} line {line}: price for crop `{crop}` must be finite and > 0, got {value}")]
    BadPrice {
        file: SourceFile,
        line: u64,
        crop: String,
        value: f64,
    },
    #[error("{file} line {line}: year {year} is not in the panel")]
    UnknownYear {
        file: SourceFile,
        line: u64,
        year: i32,
    },
    #[error("{file} line {line}: `declared` must be 0 or 1, got `{value}`")]
    BadDeclaredFlag {
        file: SourceFile,
        line: u64,
        value: String,
    },
    #[error("matrix shape mismatch: expected {expected} rows of length {len}")]
    ShapeMismatch { expected: usize, len: usize },
    #[error("dropping uninsurable crops left no crops in the cluster")]
    NoCropsLeft,
}

/// Non-fatal events produced while aligning the input files.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum LoadWarning {
    /// A crop appeared in only one of the two sources and was dropped.
    CropDropped { crop: String, only_in: String },
    /// A year was dropped for all crops, with the missing cells that caused it.
    YearDropped { year: i32, missing: Vec<String> },
}

impl fmt::Display for LoadWarning {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            LoadWarning::CropDropped { crop, only_in } => {
                write!(f, "crop `{crop}` only present in {only_in}; dropped")
            }
            LoadWarning::YearDropped { year, missing } => {
                write!(f, "year {year} dropped for all crops (missing: {})", missing.join(", "))
            }
        }
    }
}

/// Rectangular per-crop, per-year panel of yields (kg/ha) and planted areas (ha).
///
/// Invariants enforced at construction: at least one crop, at least two
/// strictly increasing years, unique crop identifiers, all cells finite and
/// non-negative, and at least one positive area in every year.
#[derive(Debug, Clone, PartialEq)]
pub struct YieldPanel {
    crops: Vec<String>,
    years: Vec<i32>,
    yields: Vec<Vec<f64>>,
    areas: Vec<Vec<f64>>,
}

impl YieldPanel {
    pub fn new(
        crops: Vec<String>,
        years: Vec<i32>,
        yields: Vec<Vec<f64>>,
        areas: Vec<Vec<f64>>,
    ) -> Result<Self, DataError> {
        if crops.is_empty() {
            return Err(DataError::NoCrops);
        }
        if years.len() < 2 {
            return Err(DataError::TooFewYears { found: years.len() });
        }
        for w in years.windows(2) {
            if w[1] <= w[0] {
                return Err(DataError::UnsortedYears { year: w[1] });
            }
        }
        let mut seen = BTreeSet::new();
        for c in &crops {
            if !seen.insert(c.clone()) {
                return Err(DataError::DuplicateCrop { crop: c.clone() });
            }
        }
        let (j, n) = (crops.len(), years.len());
        for m in [&yields, &areas] {
            if m.len() != j || m.iter().any(|row| row.len() != n) {
                return Err(DataError::ShapeMismatch { expected: j, len: n });
            }
        }
        for (matrix, file) in [(&yields, SourceFile::Yields), (&areas, SourceFile::Areas)] {
            for (ci, row) in matrix.iter().enumerate() {
                for (ti, &v) in row.iter().enumerate() {
                    if !v.is_finite() {
                        return Err(DataError::NonFiniteValue {
                            file,
                            line: 0,
                            crop: crops[ci].clone(),
                            year: years[ti],
                        });
                    }
                    if v < 0.0 {
                        return Err(DataError::NegativeValue {
                            file,
                            line: 0,
                            crop: crops[ci].clone(),
                            year: years[ti],
                            value: v,
                        });
                    }
                }
            }
        }
        for (ti, &year) in years.iter().enumerate() {
            if !areas.iter().any(|row| row[ti] > 0.0) {
                return Err(DataError::ZeroAreaYear { year });
            }
        }
        Ok(YieldPanel { crops, years, yields, areas })
    }

    pub fn crop_count(&self) -> usize {
        self.crops.len()
    }

    pub fn year_count(&self) -> usize {
        self.years.len()
    }

    pub fn crops(&self) -> &[String] {
        &self.crops
    }

    pub fn years(&self) -> &[i32] {
        &self.years
    }

    pub fn yields(&self, crop: usize) -> &[f64] {
        &self.yields[crop]
    }

    pub fn areas(&self, crop: usize) -> &[f64] {
        &self.areas[crop]
    }

    pub fn yield_at(&self, crop: usize, year_idx: usize) -> f64 {
        self.yields[crop][year_idx]
    }

    pub fn area_at(&self, crop: usize, year_idx: usize) -> f64 {
        self.areas[crop][year_idx]
    }

    /// Total planted area in a given year (ha).
    pub fn total_area(&self, year_idx: usize) -> f64 {
        self.areas.iter().map(|row| row[year_idx]).sum()
    }

    /// Mean over years of the total planted area (ha); the default cluster
    /// area used to scale the per-hectare buffer fund.
    pub fn mean_total_area(&self) -> f64 {
        let n = self.year_count();
        (0..n).map(|t| self.total_area(t)).sum::<f64>() / n as f64
    }

    pub fn year_index(&self, year: i32) -> Option<usize> {
        self.years.iter().position(|&y| y == year)
    }

    /// New panel keeping only the crops where `keep` is true.
    pub fn retain_crops(&self, keep: &[bool]) -> Result<YieldPanel, DataError> {
        assert_eq!(keep.len(), self.crop_count(), "keep mask length");
        let idx: Vec<usize> = (0..self.crop_count()).filter(|&j| keep[j]).collect();
        if idx.is_empty() {
            return Err(DataError::NoCropsLeft);
        }
        YieldPanel::new(
            idx.iter().map(|&j| self.crops[j].clone()).collect(),
            self.years.clone(),
            idx.iter().map(|&j| self.yields[j].clone()).collect(),
            idx.iter().map(|&j| self.areas[j].clone()).collect(),
        )
    }

    /// Canonical yields CSV; parsing it back reproduces this panel bit-for-bit.
    pub fn to_yields_csv(&self) -> String {
        self.matrix_csv("yield_kg_per_ha", &self.yields)
    }

    /// Canonical areas CSV; parsing it back reproduces this panel bit-for-bit.
    pub fn to_areas_csv(&self) -> String {
        self.matrix_csv("area_ha", &self.areas)
    }

    fn matrix_csv(&self, value_header: &str, matrix: &[Vec<f64>]) -> String {
        let mut out = format!("crop,year,{value_header}\n");
        for (ci, crop) in self.crops.iter().enumerate() {
            for (ti, year) in self.years.iter().enumerate() {
                out.push_str(&format!("{crop},{year},{}\n", matrix[ci][ti]));
            }
        }
        out
    }
}

/// Per-crop prices in currency per kg, either constant or per-year.
#[derive(Debug, Clone, PartialEq)]
pub enum PriceSchedule {
    /// One price per crop, aligned with the panel's crop order.
    Constant(Vec<f64>),
    /// `[crop][year]` prices aligned with the panel.
    TimeVarying(Vec<Vec<f64>>),
}

impl PriceSchedule {
    pub fn price(&self, crop: usize, year_idx: usize) -> f64 {
        match self {
            PriceSchedule::Constant(p) => p[crop],
            PriceSchedule::TimeVarying(m) => m[crop][year_idx],
        }
    }

    pub fn crop_count(&self) -> usize {
        match self {
            PriceSchedule::Constant(p) => p.len(),
            PriceSchedule::TimeVarying(m) => m.len(),
        }
    }

    pub fn retain_crops(&self, keep: &[bool]) -> PriceSchedule {
        let idx: Vec<usize> = (0..self.crop_count()).filter(|&j| keep[j]).collect();
        match self {
            PriceSchedule::Constant(p) => {
                PriceSchedule::Constant(idx.iter().map(|&j| p[j]).collect())
            }
            PriceSchedule::TimeVarying(m) => {
                PriceSchedule::TimeVarying(idx.iter().map(|&j| m[j].clone()).collect())
            }
        }
    }
}

/// The set of seasons with an official drought declaration, and the
/// declaration frequency it implies for the panel.
#[derive(Debug, Clone, PartialEq)]
pub struct DeclarationLog {
    declared_years: Vec<i32>,
    omega_hat: f64,
    panel_year_count: usize,
}

impl DeclarationLog {
    /// `declared` must be a subset of the panel years.
    pub fn new(declared: BTreeSet<i32>, panel: &YieldPanel) -> Result<Self, DataError> {
        for &y in &declared {
            if panel.year_index(y).is_none() {
                return Err(DataError::UnknownYear {
                    file: SourceFile::Declarations,
                    line: 0,
                    year: y,
                });
            }
        }
        let n = panel.year_count();
        let declared_years: Vec<i32> = declared.into_iter().collect();
        let omega_hat = declared_years.len() as f64 / n as f64;
        Ok(DeclarationLog { declared_years, omega_hat, panel_year_count: n })
    }

    pub fn declared_years(&self) -> &[i32] {
        &self.declared_years
    }

    /// Declaration frequency |Γ|/n.
    pub fn omega_hat(&self) -> f64 {
        self.omega_hat
    }

    pub fn contains(&self, year: i32) -> bool {
        self.declared_years.binary_search(&year).is_ok()
    }

    pub fn len(&self) -> usize {
        self.declared_years.len()
    }

    pub fn is_empty(&self) -> bool {
        self.declared_years.is_empty()
    }

    /// Canonical declarations CSV covering every panel year.
    pub fn to_csv(&self, panel: &YieldPanel) -> String {
        let mut out = String::from("year,declared\n");
        for &y in panel.years() {
            out.push_str(&format!("{y},{}\n", u8::from(self.contains(y))));
        }
        out
    }
}

/// Planted-area shares θ and their per-crop means α.
///
/// Every year's shares lie on the simplex: entries in [0, 1] summing to 1
/// within 1e-12, and the α vector sums to 1 within 1e-12.
#[derive(Debug, Clone, PartialEq)]
pub struct ThetaSeries {
    shares: Vec<Vec<f64>>,
    alphas: Vec<f64>,
}

impl ThetaSeries {
    fn new(shares: Vec<Vec<f64>>) -> Self {
        let n = shares[0].len();
        let alphas = shares
            .iter()
            .map(|row| row.iter().sum::<f64>() / n as f64)
            .collect();
        let theta = ThetaSeries { shares, alphas };
        theta.debug_check_simplex();
        theta
    }

    /// Constant equal shares 1/J for every year.
    pub fn equal_weights(crop_count: usize, year_count: usize) -> Self {
        let w = 1.0 / crop_count as f64;
        ThetaSeries::new(vec![vec![w; year_count]; crop_count])
    }

    pub fn share(&self, crop: usize, year_idx: usize) -> f64 {
        self.shares[crop][year_idx]
    }

    pub fn shares(&self, crop: usize) -> &[f64] {
        &self.shares[crop]
    }

    pub fn alphas(&self) -> &[f64] {
        &self.alphas
    }

    pub fn crop_count(&self) -> usize {
        self.shares.len()
    }

    pub fn year_count(&self) -> usize {
        self.shares[0].len()
    }

    /// True when every crop's share is the same in all years.
    pub fn is_constant(&self) -> bool {
        self.shares
            .iter()
            .all(|row| row.iter().all(|&v| v == row[0]))
    }

    pub fn retain_renormalized(&self, keep: &[bool]) -> Result<ThetaSeries, DataError> {
        assert_eq!(keep.len(), self.crop_count(), "keep mask length");
        let idx: Vec<usize> = (0..self.crop_count()).filter(|&j| keep[j]).collect();
        if idx.is_empty() {
            return Err(DataError::NoCropsLeft);
        }
        let n = self.year_count();
        let mut shares = vec![vec![0.0; n]; idx.len()];
        for t in 0..n {
            let total: f64 = idx.iter().map(|&j| self.shares[j][t]).sum();
            if total <= 0.0 {
                return Err(DataError::NoCropsLeft);
            }
            for (r, &j) in idx.iter().enumerate() {
                shares[r][t] = self.shares[j][t] / total;
            }
        }
        Ok(ThetaSeries::new(shares))
    }

    fn debug_check_simplex(&self) {
        for t in 0..self.year_count() {
            let s: f64 = self.shares.iter().map(|row| row[t]).sum();
            debug_assert!((s - 1.0).abs() <= 1e-12, "share sum {s} at year index {t}");
        }
        let a: f64 = self.alphas.iter().sum();
        debug_assert!((a - 1.0).abs() <= 1e-12, "alpha sum {a}");
    }
}

/// Planted-area shares θ_j(t) = A_j(t) / Σ_i A_i(t) and their means α_j.
pub fn derive_theta(panel: &YieldPanel) -> Result<ThetaSeries, DataError> {
    let (j, n) = (panel.crop_count(), panel.year_count());
    let mut shares = vec![vec![0.0; n]; j];
    for t in 0..n {
        let total = panel.total_area(t);
        if total <= 0.0 {
            return Err(DataError::ZeroAreaYear { year: panel.years()[t] });
        }
        for (ci, row) in shares.iter_mut().enumerate() {
            row[t] = panel.area_at(ci, t) / total;
        }
    }
    Ok(ThetaSeries::new(shares))
}

struct ParsedCells {
    /// First-appearance crop order.
    crops: Vec<String>,
    years: BTreeSet<i32>,
    cells: BTreeMap<(String, i32), f64>,
}

fn parse_crop_year_value(
    src: &str,
    file: SourceFile,
    value_column: &str,
) -> Result<ParsedCells, DataError> {
    let mut reader = csv::ReaderBuilder::new()
        .trim(csv::Trim::All)
        .from_reader(src.as_bytes());
    let headers = reader
        .headers()
        .map_err(|e| DataError::Malformed { file, line: 1, detail: e.to_string() })?
        .clone();
    let col = |name: &str| -> Result<usize, DataError> {
        headers
            .iter()
            .position(|h| h == name)
            .ok_or_else(|| DataError::MissingColumn { file, column: name.to_string() })
    };
    let crop_col = col("crop")?;
    let year_col = col("year")?;
    let value_col = col(value_column)?;

    let mut out = ParsedCells { crops: Vec::new(), years: BTreeSet::new(), cells: BTreeMap::new() };
    for record in reader.records() {
        let record = record.map_err(|e| DataError::Malformed {
            file,
            line: e.position().map_or(0, |p| p.line()),
            detail: e.to_string(),
        })?;
        let line = record.position().map_or(0, |p| p.line());
        let field = |i: usize| -> Result<&str, DataError> {
            record.get(i).ok_or(DataError::Malformed {
                file,
                line,
                detail: format!("expected {} columns", headers.len()),
            })
        };
        let crop = field(crop_col)?.to_string();
        if crop.is_empty() {
            return Err(DataError::Malformed { file, line, detail: "empty crop".into() });
        }
        let year: i32 = field(year_col)?.parse().map_err(|_| DataError::Malformed {
            file,
            line,
            detail: format!("bad year `{}`", field(year_col).unwrap_or("")),
        })?;
        let raw = field(value_col)?;
        let value: f64 = raw.parse().map_err(|_| DataError::Malformed {
            file,
            line,
            detail: format!("bad number `{raw}`"),
        })?;
        if !value.is_finite() {
            return Err(DataError::NonFiniteValue { file, line, crop, year });
        }
        if value < 0.0 {
            return Err(DataError::NegativeValue { file, line, crop, year, value });
        }
        if !out.crops.contains(&crop) {
            out.crops.push(crop.clone());
        }
        out.years.insert(year);
        if out.cells.insert((crop.clone(), year), value).is_some() {
            return Err(DataError::DuplicateKey { file, line, crop, year });
        }
    }
    Ok(out)
}

/// Load and align the yields and areas sources into a rectangular panel.
///
/// Crops present in only one source are dropped with a warning. Years are
/// restricted to those present in both sources, and any year missing a cell
/// for some crop is dropped for all crops so the panel stays rectangular.
pub fn load_panel(
    yields_src: &str,
    areas_src: &str,
) -> Result<(YieldPanel, Vec<LoadWarning>), DataError> {
    let y = parse_crop_year_value(yields_src, SourceFile::Yields, "yield_kg_per_ha")?;
    let a = parse_crop_year_value(areas_src, SourceFile::Areas, "area_ha")?;

    let mut warnings = Vec::new();
    let mut crops: Vec<String> = Vec::new();
    for crop in &y.crops {
        if a.crops.contains(crop) {
            crops.push(crop.clone());
        } else {
            warnings.push(LoadWarning::CropDropped { crop: crop.clone(), only_in: "yields".into() });
        }
    }
    for crop in &a.crops {
        if !y.crops.contains(crop) {
            warnings.push(LoadWarning::CropDropped { crop: crop.clone(), only_in: "areas".into() });
        }
    }
    if crops.is_empty() {
        return Err(DataError::EmptyIntersection);
    }

    let mut years: Vec<i32> = Vec::new();
    for &year in y.years.union(&a.years) {
        let mut missing = Vec::new();
        for crop in &crops {
            let key = (crop.clone(), year);
            if !y.cells.contains_key(&key) {
                missing.push(format!("{crop}/yields"));
            }
            if !a.cells.contains_key(&key) {
                missing.push(format!("{crop}/areas"));
            }
        }
        if missing.is_empty() {
            years.push(year);
        } else {
            warnings.push(LoadWarning::YearDropped { year, missing });
        }
    }
    if years.is_empty() {
        return Err(DataError::EmptyIntersection);
    }

    let yields_m: Vec<Vec<f64>> = crops
        .iter()
        .map(|c| years.iter().map(|&t| y.cells[&(c.clone(), t)]).collect())
        .collect();
    let areas_m: Vec<Vec<f64>> = crops
        .iter()
        .map(|c| years.iter().map(|&t| a.cells[&(c.clone(), t)]).collect())
        .collect();
    let panel = YieldPanel::new(crops, years, yields_m, areas_m)?;
    Ok((panel, warnings))
}

/// Load a price schedule and align it with the panel's crops.
///
/// A `crop,price_per_kg` header selects constant-price mode; a
/// `crop,year,price_per_kg` header selects time-varying mode, which must
/// cover every (crop, year) cell of the panel.
pub fn load_prices(src: &str, panel: &YieldPanel) -> Result<PriceSchedule, DataError> {
    let file = SourceFile::Prices;
    let mut reader = csv::ReaderBuilder::new()
        .trim(csv::Trim::All)
        .from_reader(src.as_bytes());
    let headers = reader
        .headers()
        .map_err(|e| DataError::Malformed { file, line: 1, detail: e.to_string() })?
        .clone();
    let crop_col = headers
        .iter()
        .position(|h| h == "crop")
        .ok_or_else(|| DataError::MissingColumn { file, column: "crop".into() })?;
    let price_col = headers
        .iter()
        .position(|h| h == "price_per_kg")
        .ok_or_else(|| DataError::MissingColumn { file, column: "price_per_kg".into() })?;
    let year_col = headers.iter().position(|h| h == "year");

    let mut constant: BTreeMap<String, f64> = BTreeMap::new();
    let mut varying: BTreeMap<(String, i32), f64> = BTreeMap::new();
    for record in reader.records() {
        let record = record.map_err(|e| DataError::Malformed {
            file,
            line: e.position().map_or(0, |p| p.line()),
            detail: e.to_string(),
        })?;
        let line = record.position().map_or(0, |p| p.line());
        let crop = record
            .get(crop_col)
            .ok_or(DataError::Malformed { file, line, detail: "missing crop".into() })?
            .to_string();
        let raw = record
            .get(price_col)
            .ok_or(DataError::Malformed { file, line, detail: "missing price".into() })?;
        let value: f64 = raw.parse().map_err(|_| DataError::Malformed {
            file,
            line,
            detail: format!("bad number `{raw}`"),
        })?;
        if !value.is_finite() || value <= 0.0 {
            return Err(DataError::BadPrice { file, line, crop, value });
        }
        match year_col {
            None => {
                if constant.insert(crop.clone(), value).is_some() {
                    return Err(DataError::DuplicateKey { file, line, crop, year: 0 });
                }
            }
            Some(yc) => {
                let year: i32 = record
                    .get(yc)
                    .ok_or(DataError::Malformed { file, line, detail: "missing year".into() })?
                    .parse()
                    .map_err(|_| DataError::Malformed { file, line, detail: "bad year".into() })?;
                if varying.insert((crop.clone(), year), value).is_some() {
                    return Err(DataError::DuplicateKey { file, line, crop, year });
                }
            }
        }
    }

    if year_col.is_none() {
        let mut prices = Vec::with_capacity(panel.crop_count());
        for crop in panel.crops() {
            match constant.get(crop) {
                Some(&p) => prices.push(p),
                None => return Err(DataError::MissingPrice { crop: crop.clone() }),
            }
        }
        Ok(PriceSchedule::Constant(prices))
    } else {
        let mut matrix = Vec::with_capacity(panel.crop_count());
        for crop in panel.crops() {
            let mut row = Vec::with_capacity(panel.year_count());
            for &year in panel.years() {
                match varying.get(&(crop.clone(), year)) {
                    Some(&p) => row.push(p),
                    None => return Err(DataError::MissingPrice { crop: crop.clone() }),
                }
            }
            matrix.push(row);
        }
        Ok(PriceSchedule::TimeVarying(matrix))
    }
}

/// Load the drought-declaration log (`year,declared` with declared in {0,1}).
///
/// Every listed year must belong to the panel; years not listed count as
/// undeclared.
pub fn load_declarations(src: &str, panel: &YieldPanel) -> Result<DeclarationLog, DataError> {
    let file = SourceFile::Declarations;
    let mut reader = csv::ReaderBuilder::new()
        .trim(csv::Trim::All)
        .from_reader(src.as_bytes());
    let headers = reader
        .headers()
        .map_err(|e| DataError::Malformed { file, line: 1, detail: e.to_string() })?
        .clone();
    let year_col = headers
        .iter()
        .position(|h| h == "year")
        .ok_or_else(|| DataError::MissingColumn { file, column: "year".into() })?;
    let flag_col = headers
        .iter()
        .position(|h| h == "declared")
        .ok_or_else(|| DataError::MissingColumn { file, column: "declared".into() })?;

    let mut declared = BTreeSet::new();
    for record in reader.records() {
        let record = record.map_err(|e| DataError::Malformed {
            file,
            line: e.position().map_or(0, |p| p.line()),
            detail: e.to_string(),
        })?;
        let line = record.position().map_or(0, |p| p.line());
        let year: i32 = record
            .get(year_col)
            .ok_or(DataError::Malformed { file, line, detail: "missing year".into() })?
            .parse()
            .map_err(|_| DataError::Malformed { file, line, detail: "bad year".into() })?;
        if panel.year_index(year).is_none() {
            return Err(DataError::UnknownYear { file, line, year });
        }
        let flag = record
            .get(flag_col)
            .ok_or(DataError::Malformed { file, line, detail: "missing declared".into() })?;
        match flag {
            "0" => {}
            "1" => {
                declared.insert(year);
            }
            other => {
                return Err(DataError::BadDeclaredFlag { file, line, value: other.to_string() })
            }
        }
    }
    DeclarationLog::new(declared, panel)
}

/// Trailing moving average instalment per hectare from an
/// `year,total_instalments,total_area_ha` table: the ratio of summed
/// instalments to summed area over the last `window` years.
pub fn instalment_moving_average(src: &str, window: usize) -> Result<f64, DataError> {
    let file = SourceFile::Instalments;
    let mut reader = csv::ReaderBuilder::new()
        .trim(csv::Trim::All)
        .from_reader(src.as_bytes());
    let headers = reader
        .headers()
        .map_err(|e| DataError::Malformed { file, line: 1, detail: e.to_string() })?
        .clone();
    let col = |name: &str| -> Result<usize, DataError> {
        headers
            .iter()
            .position(|h| h == name)
            .ok_or_else(|| DataError::MissingColumn { file, column: name.to_string() })
    };
    let year_col = col("year")?;
    let inst_col = col("total_instalments")?;
    let area_col = col("total_area_ha")?;

    let mut rows: Vec<(i32, f64, f64)> = Vec::new();
    for record in reader.records() {
        let record = record.map_err(|e| DataError::Malformed {
            file,
            line: e.position().map_or(0, |p| p.line()),
            detail: e.to_string(),
        })?;
        let line = record.position().map_or(0, |p| p.line());
        let get = |i: usize| {
            record.get(i).ok_or(DataError::Malformed { file, line, detail: "short row".into() })
        };
        let year: i32 = get(year_col)?
            .parse()
            .map_err(|_| DataError::Malformed { file, line, detail: "bad year".into() })?;
        let inst: f64 = get(inst_col)?
            .parse()
            .map_err(|_| DataError::Malformed { file, line, detail: "bad number".into() })?;
        let area: f64 = get(area_col)?
            .parse()
            .map_err(|_| DataError::Malformed { file, line, detail: "bad number".into() })?;
        if !inst.is_finite() || !area.is_finite() || inst < 0.0 || area <= 0.0 {
            return Err(DataError::Malformed {
                file,
                line,
                detail: "instalments must be >= 0 and area > 0".into(),
            });
        }
        rows.push((year, inst, area));
    }
    if rows.is_empty() || window == 0 {
        return Err(DataError::Malformed {
            file,
            line: 0,
            detail: "need at least one row and a positive window".into(),
        });
    }
    rows.sort_by_key(|r| r.0);
    let tail = &rows[rows.len().saturating_sub(window)..];
    let inst_sum: f64 = tail.iter().map(|r| r.1).sum();
    let area_sum: f64 = tail.iter().map(|r| r.2).sum();
    Ok(inst_sum / area_sum)
}
