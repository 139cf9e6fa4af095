//! Compression test data: ingestion from raw dilatometer records, train/test
//! split bookkeeping and CSV persistence.

use std::collections::BTreeMap;
use std::fmt;
use std::path::Path;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Matching tolerance when looking up grid cells by `(T, phi_dot)`; generous
/// against formatting round-trips, far below any grid spacing in use.
const CELL_TOL: f64 = 1e-6;

/// One raw dilatometer record: time [s], force [N], sample length [mm].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RawRecord {
    pub t: f64,
    pub force_n: f64,
    pub length_mm: f64,
}

/// Cylindrical sample geometry.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SampleGeometry {
    /// Initial diameter [mm].
    pub d0_mm: f64,
    /// Initial length [mm].
    #[serde(rename = "L0_mm")]
    pub l0_mm: f64,
}

impl SampleGeometry {
    pub fn from_json_path(path: &Path) -> Result<Self> {
        let file = std::fs::File::open(path)
            .map_err(|e| Error::config(format!("cannot open geometry file {path:?}: {e}")))?;
        serde_json::from_reader(file)
            .map_err(|e| Error::config(format!("invalid geometry file {path:?}: {e}")))
    }
}

/// A processed stress/strain curve at constant nominal temperature and
/// strain rate.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CompressionTest {
    pub id: String,
    pub temp_c: f64,
    /// Nominal average strain rate [1/s].
    pub phi_dot: f64,
    /// True strain, strictly increasing.
    pub phi: Vec<f64>,
    /// Flow stress [MPa].
    pub kf: Vec<f64>,
}

impl CompressionTest {
    pub fn max_phi(&self) -> f64 {
        self.phi.last().copied().unwrap_or(0.0)
    }
}

/// Role of a grid cell in the evaluation protocol.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SplitRole {
    Test,
    Fold1,
    Fold2,
    Fold3,
    Fold4,
}

impl SplitRole {
    pub fn is_training(self) -> bool {
        self != SplitRole::Test
    }

    pub const FOLDS: [SplitRole; 4] =
        [SplitRole::Fold1, SplitRole::Fold2, SplitRole::Fold3, SplitRole::Fold4];
}

impl fmt::Display for SplitRole {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            SplitRole::Test => "test",
            SplitRole::Fold1 => "fold1",
            SplitRole::Fold2 => "fold2",
            SplitRole::Fold3 => "fold3",
            SplitRole::Fold4 => "fold4",
        };
        f.write_str(s)
    }
}

impl FromStr for SplitRole {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "test" => Ok(SplitRole::Test),
            "fold1" => Ok(SplitRole::Fold1),
            "fold2" => Ok(SplitRole::Fold2),
            "fold3" => Ok(SplitRole::Fold3),
            "fold4" => Ok(SplitRole::Fold4),
            other => Err(Error::data(format!("unknown split role {other:?}"))),
        }
    }
}

/// Split role per `(T, phi_dot)` cell.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct SplitAssignment {
    pub cells: Vec<SplitCell>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SplitCell {
    pub temp_c: f64,
    pub phi_dot: f64,
    pub role: SplitRole,
}

impl SplitAssignment {
    pub fn role_for(&self, temp_c: f64, phi_dot: f64) -> Option<SplitRole> {
        self.cells
            .iter()
            .find(|c| same_cell(c.temp_c, temp_c) && same_cell(c.phi_dot, phi_dot))
            .map(|c| c.role)
    }

    /// Load a `T_C,phi_dot,role` override file.
    pub fn from_csv_path(path: &Path) -> Result<Self> {
        let mut reader = csv::Reader::from_path(path)
            .map_err(|e| Error::config(format!("cannot open split file {path:?}: {e}")))?;
        expect_headers(&mut reader, &["T_C", "phi_dot", "role"], path)?;
        let mut cells = Vec::new();
        for record in reader.records() {
            let record = record?;
            cells.push(SplitCell {
                temp_c: parse_field(&record, 0, "T_C")?,
                phi_dot: parse_field(&record, 1, "phi_dot")?,
                role: record
                    .get(2)
                    .ok_or_else(|| Error::data("missing role column"))?
                    .parse()?,
            });
        }
        Ok(SplitAssignment { cells })
    }

    pub fn to_csv_path(&self, path: &Path) -> Result<()> {
        let mut w = csv::Writer::from_path(path)?;
        w.write_record(["T_C", "phi_dot", "role"])?;
        for cell in &self.cells {
            w.write_record(&[
                cell.temp_c.to_string(),
                cell.phi_dot.to_string(),
                cell.role.to_string(),
            ])?;
        }
        w.flush()?;
        Ok(())
    }
}

fn same_cell(a: f64, b: f64) -> bool {
    (a - b).abs() <= CELL_TOL * a.abs().max(b.abs()).max(1.0)
}

/// Temperatures of the published measurement grid [degC].
pub const GRID_TEMPS: [f64; 7] = [350.0, 375.0, 400.0, 425.0, 450.0, 475.0, 500.0];
/// Strain rates of the published measurement grid [1/s].
pub const GRID_RATES: [f64; 5] = [0.001, 0.01, 0.1, 1.0, 10.0];

/// Fixed split of the published 7x5 grid: 11 test cells, 24 training cells
/// partitioned into four cross-validation folds of six.
const GRID_ROLES: [[SplitRole; 5]; 7] = {
    use SplitRole::*;
    [
        [Test, Fold4, Fold3, Test, Fold2],
        [Fold1, Test, Fold4, Fold3, Test],
        [Fold2, Fold1, Test, Fold4, Fold3],
        [Test, Fold2, Fold1, Test, Fold4],
        [Fold3, Test, Fold2, Fold1, Test],
        [Fold4, Fold3, Test, Fold2, Fold1],
        [Fold1, Fold4, Fold3, Test, Fold2],
    ]
};

/// The fixed grid split as an assignment table.
pub fn grid_split() -> SplitAssignment {
    let mut cells = Vec::with_capacity(35);
    for (ti, &t) in GRID_TEMPS.iter().enumerate() {
        for (ri, &r) in GRID_RATES.iter().enumerate() {
            cells.push(SplitCell { temp_c: t, phi_dot: r, role: GRID_ROLES[ti][ri] });
        }
    }
    SplitAssignment { cells }
}

/// Assign every test its role from the fixed grid split. Tests outside the
/// grid are a configuration problem: supply an explicit split file instead.
pub fn assign_splits(tests: &[CompressionTest]) -> Result<SplitAssignment> {
    let grid = grid_split();
    for test in tests {
        if grid.role_for(test.temp_c, test.phi_dot).is_none() {
            return Err(Error::config(format!(
                "test {:?} at (T={}, phi_dot={}) is not on the fixed measurement grid; \
                 provide a split override file",
                test.id, test.temp_c, test.phi_dot
            )));
        }
    }
    Ok(grid)
}

/// Strain and stress for one record: `phi = ln(L0/L)` and
/// `kf = F / A_cs` with `A_cs = pi d0^2 L0 / (4 L)` (volume-preserving
/// cross-section). Stress comes out in N/mm^2, i.e. MPa.
pub fn stress_strain_point(record: &RawRecord, geom: &SampleGeometry) -> Result<(f64, f64)> {
    if record.length_mm <= 0.0 {
        return Err(Error::data(format!(
            "non-positive sample length {} at t={}",
            record.length_mm, record.t
        )));
    }
    let a_cs = std::f64::consts::PI * geom.d0_mm * geom.d0_mm * geom.l0_mm / (4.0 * record.length_mm);
    let phi = (geom.l0_mm / record.length_mm).ln();
    Ok((phi, record.force_n / a_cs))
}

/// Derive a cleaned stress/strain curve from raw records ordered by time.
///
/// Machine-reset artefacts are trimmed: leading records are dropped until the
/// strain is positive and strictly increasing, everything after the last
/// strictly increasing strain is dropped, and zero-stress bursts at either
/// end go with them. The nominal strain rate is the mean of the per-interval
/// `d(phi)/dt` over what remains.
pub fn derive_stress_strain(
    records: &[RawRecord],
    geom: &SampleGeometry,
    id: impl Into<String>,
    temp_c: f64,
) -> Result<CompressionTest> {
    if records.is_empty() {
        return Err(Error::data("no records in raw input"));
    }
    for pair in records.windows(2) {
        if pair[1].t <= pair[0].t {
            return Err(Error::data(format!(
                "time must be strictly increasing, got {} after {}",
                pair[1].t, pair[0].t
            )));
        }
    }
    let mut points = Vec::with_capacity(records.len());
    for record in records {
        let (phi, kf) = stress_strain_point(record, geom)?;
        points.push((record.t, phi, kf));
    }

    let mut start = 0;
    while start < points.len() {
        let lead_in = points[start].1 <= 0.0
            || points[start].2 == 0.0
            || (start + 1 < points.len() && points[start + 1].1 <= points[start].1);
        if !lead_in {
            break;
        }
        start += 1;
    }
    let mut end = start;
    while end + 1 < points.len() && points[end + 1].1 > points[end].1 {
        end += 1;
    }
    let mut kept: &[(f64, f64, f64)] = &points[start..=end.max(start)];
    while kept.len() > 1 && kept[kept.len() - 1].2 == 0.0 {
        kept = &kept[..kept.len() - 1];
    }
    if kept.is_empty() {
        return Err(Error::data("no valid measurement window in raw input"));
    }

    let mut rate_sum = 0.0;
    for pair in kept.windows(2) {
        rate_sum += (pair[1].1 - pair[0].1) / (pair[1].0 - pair[0].0);
    }
    let phi_dot = if kept.len() > 1 { rate_sum / (kept.len() - 1) as f64 } else { 0.0 };

    Ok(CompressionTest {
        id: id.into(),
        temp_c,
        phi_dot,
        phi: kept.iter().map(|p| p.1).collect(),
        kf: kept.iter().map(|p| p.2).collect(),
    })
}

/// Keep the curve up to its first global stress maximum. Points beyond it
/// are dominated by friction and barreling rather than material response.
pub fn truncate_to_max_stress(test: &CompressionTest) -> CompressionTest {
    let mut best = 0;
    for (i, &kf) in test.kf.iter().enumerate() {
        if kf > test.kf[best] {
            best = i;
        }
    }
    CompressionTest {
        id: test.id.clone(),
        temp_c: test.temp_c,
        phi_dot: test.phi_dot,
        phi: test.phi[..=best].to_vec(),
        kf: test.kf[..=best].to_vec(),
    }
}

/// Average two repeats of the same load case onto the first test's strain
/// values; strains outside the second test's range are dropped.
pub fn merge_repeats(a: &CompressionTest, b: &CompressionTest) -> Result<CompressionTest> {
    if !same_cell(a.temp_c, b.temp_c) || !same_cell(a.phi_dot, b.phi_dot) {
        return Err(Error::data(format!(
            "cannot merge tests from different load cases: {:?} and {:?}",
            a.id, b.id
        )));
    }
    let (b_lo, b_hi) = (b.phi[0], *b.phi.last().unwrap());
    let mut phi = Vec::new();
    let mut kf = Vec::new();
    for (i, &p) in a.phi.iter().enumerate() {
        if p < b_lo || p > b_hi {
            continue;
        }
        let idx = b.phi.partition_point(|&q| q <= p).min(b.phi.len() - 1);
        let (lo, hi) = if idx == 0 { (0, 0) } else { (idx - 1, idx) };
        let interp = if lo == hi {
            b.kf[lo]
        } else {
            let w = (p - b.phi[lo]) / (b.phi[hi] - b.phi[lo]);
            b.kf[lo] + (b.kf[hi] - b.kf[lo]) * w
        };
        phi.push(p);
        kf.push((a.kf[i] + interp) / 2.0);
    }
    if phi.is_empty() {
        return Err(Error::data(format!(
            "tests {:?} and {:?} have no overlapping strain range",
            a.id, b.id
        )));
    }
    Ok(CompressionTest {
        id: a.id.clone(),
        temp_c: a.temp_c,
        phi_dot: (a.phi_dot + b.phi_dot) / 2.0,
        phi,
        kf,
    })
}

/// A collection of tests plus the split each belongs to.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Dataset {
    pub tests: Vec<CompressionTest>,
    pub splits: SplitAssignment,
}

impl Dataset {
    pub fn role_of(&self, test: &CompressionTest) -> Option<SplitRole> {
        self.splits.role_for(test.temp_c, test.phi_dot)
    }

    pub fn training_tests(&self) -> Vec<&CompressionTest> {
        self.tests
            .iter()
            .filter(|t| self.role_of(t).map(SplitRole::is_training).unwrap_or(false))
            .collect()
    }

    pub fn test_tests(&self) -> Vec<&CompressionTest> {
        self.tests
            .iter()
            .filter(|t| self.role_of(t) == Some(SplitRole::Test))
            .collect()
    }

    /// Every test must have a role.
    pub fn validate(&self) -> Result<()> {
        for test in &self.tests {
            if self.role_of(test).is_none() {
                return Err(Error::config(format!(
                    "test {:?} at (T={}, phi_dot={}) has no split role",
                    test.id, test.temp_c, test.phi_dot
                )));
            }
        }
        Ok(())
    }
}

fn parse_field(record: &csv::StringRecord, idx: usize, name: &str) -> Result<f64> {
    let raw = record
        .get(idx)
        .ok_or_else(|| Error::data(format!("missing column {name}")))?;
    raw.parse()
        .map_err(|_| Error::data(format!("cannot parse {name} value {raw:?}")))
}

fn expect_headers(reader: &mut csv::Reader<std::fs::File>, want: &[&str], path: &Path) -> Result<()> {
    let got = reader.headers()?;
    if got.len() != want.len() || got.iter().zip(want).any(|(g, w)| g != *w) {
        return Err(Error::data(format!(
            "unexpected header in {path:?}: got {:?}, want {want:?}",
            got.iter().collect::<Vec<_>>()
        )));
    }
    Ok(())
}

/// Read a long-format `test_id,T_C,phi_dot,phi,kf_MPa` file. Rows of one
/// test must be contiguous and strain-ordered.
pub fn load_tests_csv(path: &Path) -> Result<Vec<CompressionTest>> {
    let mut reader = csv::Reader::from_path(path)
        .map_err(|e| Error::data(format!("cannot open dataset {path:?}: {e}")))?;
    expect_headers(&mut reader, &["test_id", "T_C", "phi_dot", "phi", "kf_MPa"], path)?;
    let mut tests: Vec<CompressionTest> = Vec::new();
    for record in reader.records() {
        let record = record?;
        let id = record
            .get(0)
            .ok_or_else(|| Error::data("missing test_id column"))?
            .to_string();
        let temp_c = parse_field(&record, 1, "T_C")?;
        let phi_dot = parse_field(&record, 2, "phi_dot")?;
        let phi = parse_field(&record, 3, "phi")?;
        let kf = parse_field(&record, 4, "kf_MPa")?;
        match tests.last_mut() {
            Some(last) if last.id == id => {
                if phi <= *last.phi.last().unwrap() {
                    return Err(Error::data(format!(
                        "strain not strictly increasing in test {id:?} at phi={phi}"
                    )));
                }
                last.phi.push(phi);
                last.kf.push(kf);
            }
            _ => {
                if tests.iter().any(|t| t.id == id) {
                    return Err(Error::data(format!(
                        "rows of test {id:?} are not contiguous"
                    )));
                }
                tests.push(CompressionTest { id, temp_c, phi_dot, phi: vec![phi], kf: vec![kf] });
            }
        }
    }
    if tests.is_empty() {
        return Err(Error::data(format!("dataset {path:?} has no rows")));
    }
    Ok(tests)
}

pub fn save_tests_csv(tests: &[CompressionTest], path: &Path) -> Result<()> {
    let mut w = csv::Writer::from_path(path)?;
    w.write_record(["test_id", "T_C", "phi_dot", "phi", "kf_MPa"])?;
    for test in tests {
        for (p, k) in test.phi.iter().zip(&test.kf) {
            w.write_record(&[
                test.id.clone(),
                test.temp_c.to_string(),
                test.phi_dot.to_string(),
                p.to_string(),
                k.to_string(),
            ])?;
        }
    }
    w.flush()?;
    Ok(())
}

/// Group tests by their split role, ordered by id within each group.
pub fn by_role(dataset: &Dataset) -> BTreeMap<String, Vec<&CompressionTest>> {
    let mut map: BTreeMap<String, Vec<&CompressionTest>> = BTreeMap::new();
    for test in &dataset.tests {
        if let Some(role) = dataset.role_of(test) {
            map.entry(role.to_string()).or_default().push(test);
        }
    }
    for group in map.values_mut() {
        group.sort_by(|a, b| a.id.cmp(&b.id));
    }
    map
}

#[cfg(test)]
mod tests {
    use super::*;

    fn geom() -> SampleGeometry {
        SampleGeometry { d0_mm: 5.0, l0_mm: 10.0 }
    }

    #[test]
    fn point_arithmetic_matches_oracle() {
        let (phi, kf) =
            stress_strain_point(&RawRecord { t: 0.0, force_n: 1000.0, length_mm: 5.0 }, &geom())
                .unwrap();
        assert!((phi - 0.6931471805599453).abs() < 1e-15);
        assert!((kf - 25.464790894703253).abs() < 1e-12);
    }

    #[test]
    fn point_at_initial_length_is_zero() {
        let (phi, kf) =
            stress_strain_point(&RawRecord { t: 0.0, force_n: 0.0, length_mm: 10.0 }, &geom())
                .unwrap();
        assert_eq!((phi, kf), (0.0, 0.0));
    }

    #[test]
    fn point_intermediate_oracle() {
        let (phi, kf) =
            stress_strain_point(&RawRecord { t: 0.0, force_n: 750.0, length_mm: 8.0 }, &geom())
                .unwrap();
        assert!((phi - 0.22314355131420976).abs() < 1e-15);
        assert!((kf - 30.557749073643905).abs() < 1e-12);
    }

    #[test]
    fn derive_trims_reset_artifacts() {
        // Reset window at the start (L=L0, zero force), monotone middle,
        // trailing unload where the length bounces back.
        let records = vec![
            RawRecord { t: 0.0, force_n: 0.0, length_mm: 10.0 },
            RawRecord { t: 1.0, force_n: 0.0, length_mm: 10.0 },
            RawRecord { t: 2.0, force_n: 500.0, length_mm: 9.5 },
            RawRecord { t: 3.0, force_n: 700.0, length_mm: 9.0 },
            RawRecord { t: 4.0, force_n: 900.0, length_mm: 8.5 },
            RawRecord { t: 5.0, force_n: 100.0, length_mm: 8.6 },
        ];
        let test = derive_stress_strain(&records, &geom(), "r1", 400.0).unwrap();
        assert_eq!(test.phi.len(), 3);
        assert!(test.phi.windows(2).all(|w| w[1] > w[0]));
        assert!(test.phi[0] > 0.0);
        assert!(test.phi_dot > 0.0);
    }

    #[test]
    fn derive_strain_rate_is_mean_of_intervals() {
        // Equal intervals, linear phi ramp: the mean rate is exact.
        let records = vec![
            RawRecord { t: 0.0, force_n: 100.0, length_mm: 10.0 * (-0.1f64).exp() },
            RawRecord { t: 1.0, force_n: 200.0, length_mm: 10.0 * (-0.2f64).exp() },
            RawRecord { t: 2.0, force_n: 300.0, length_mm: 10.0 * (-0.3f64).exp() },
        ];
        let test = derive_stress_strain(&records, &geom(), "ramp", 400.0).unwrap();
        assert!((test.phi_dot - 0.1).abs() < 1e-12);
    }

    #[test]
    fn derive_rejects_unordered_time() {
        let records = vec![
            RawRecord { t: 1.0, force_n: 100.0, length_mm: 9.0 },
            RawRecord { t: 1.0, force_n: 200.0, length_mm: 8.0 },
        ];
        assert!(derive_stress_strain(&records, &geom(), "bad", 400.0).is_err());
    }

    #[test]
    fn derive_rejects_empty_input() {
        assert!(derive_stress_strain(&[], &geom(), "empty", 400.0).is_err());
    }

    #[test]
    fn truncate_keeps_prefix_up_to_first_peak() {
        let test = CompressionTest {
            id: "t".into(),
            temp_c: 400.0,
            phi_dot: 0.1,
            phi: vec![0.1, 0.2, 0.3, 0.4, 0.5],
            kf: vec![10.0, 30.0, 25.0, 30.0, 20.0],
        };
        let cut = truncate_to_max_stress(&test);
        assert_eq!(cut.phi, vec![0.1, 0.2]);
        assert_eq!(cut.kf, vec![10.0, 30.0]);
    }

    #[test]
    fn truncate_monotone_curve_is_identity() {
        let test = CompressionTest {
            id: "t".into(),
            temp_c: 400.0,
            phi_dot: 0.1,
            phi: vec![0.1, 0.2, 0.3],
            kf: vec![10.0, 20.0, 30.0],
        };
        assert_eq!(truncate_to_max_stress(&test), test);
    }

    #[test]
    fn grid_split_counts() {
        let split = grid_split();
        assert_eq!(split.cells.len(), 35);
        let count = |role| split.cells.iter().filter(|c| c.role == role).count();
        assert_eq!(count(SplitRole::Test), 11);
        for fold in SplitRole::FOLDS {
            assert_eq!(count(fold), 6);
        }
    }

    #[test]
    fn grid_split_spot_checks() {
        let split = grid_split();
        assert_eq!(split.role_for(350.0, 0.001), Some(SplitRole::Test));
        assert_eq!(split.role_for(350.0, 0.01), Some(SplitRole::Fold4));
        assert_eq!(split.role_for(400.0, 0.1), Some(SplitRole::Test));
        assert_eq!(split.role_for(450.0, 1.0), Some(SplitRole::Fold1));
        assert_eq!(split.role_for(500.0, 10.0), Some(SplitRole::Fold2));
        assert_eq!(split.role_for(500.0, 0.001), Some(SplitRole::Fold1));
        assert_eq!(split.role_for(425.0, 10.0), Some(SplitRole::Fold4));
    }

    #[test]
    fn assign_splits_rejects_off_grid_tests() {
        let test = CompressionTest {
            id: "odd".into(),
            temp_c: 360.0,
            phi_dot: 0.1,
            phi: vec![0.1],
            kf: vec![10.0],
        };
        let err = assign_splits(&[test]).unwrap_err();
        assert!(matches!(err, Error::Config(_)));
    }

    #[test]
    fn merge_averages_on_first_grid() {
        let a = CompressionTest {
            id: "a".into(),
            temp_c: 400.0,
            phi_dot: 0.1,
            phi: vec![0.1, 0.2, 0.3],
            kf: vec![10.0, 20.0, 30.0],
        };
        let b = CompressionTest {
            id: "b".into(),
            temp_c: 400.0,
            phi_dot: 0.1,
            phi: vec![0.05, 0.15, 0.25],
            kf: vec![12.0, 22.0, 32.0],
        };
        let merged = merge_repeats(&a, &b).unwrap();
        // b interpolates to 17 at phi=0.1 and 27 at phi=0.2; phi=0.3 is
        // outside b's range and is dropped.
        assert_eq!(merged.phi, vec![0.1, 0.2]);
        assert_eq!(merged.kf, vec![13.5, 23.5]);
    }

    #[test]
    fn csv_round_trip_is_exact() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("tests.csv");
        let tests = vec![
            CompressionTest {
                id: "T350_r0.001".into(),
                temp_c: 350.0,
                phi_dot: 0.001,
                phi: vec![0.02, 0.30000000000000004, 0.7],
                kf: vec![25.464790894703253, 60.1, 80.9],
            },
            CompressionTest {
                id: "T500_r10".into(),
                temp_c: 500.0,
                phi_dot: 10.0,
                phi: vec![0.1],
                kf: vec![19.25],
            },
        ];
        save_tests_csv(&tests, &path).unwrap();
        assert_eq!(load_tests_csv(&path).unwrap(), tests);
    }

    #[test]
    fn split_csv_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("splits.csv");
        let splits = grid_split();
        splits.to_csv_path(&path).unwrap();
        assert_eq!(SplitAssignment::from_csv_path(&path).unwrap(), splits);
    }
}
