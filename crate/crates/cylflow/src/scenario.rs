//! Scenario configuration files, ledger CSV, and snapshot persistence.
//!
//! A scenario is a line-oriented key=value file; `#` starts a comment.
//! Curve paths are resolved relative to the config file's directory.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use ndarray::Array3;

use crate::curves::{read_curve_csv, BoundaryCurve};
use crate::error::{Error, Result};
use crate::field::SurfaceMap;
use crate::flow::{
    annulus_interpolation, CouplingConfig, FlowState, LedgerRecord, RunConfig, LEDGER_COLUMNS,
};
use crate::geometry::HyperbolicCylinder;
use crate::moebius::MoebiusParams;
use crate::scalar::Cx;

#[derive(Debug, Clone, PartialEq)]
pub enum InitialRecipe {
    AnnulusInterpolation,
    File(PathBuf),
}

#[derive(Debug, Clone)]
pub struct Scenario {
    pub curve_minus: PathBuf,
    pub curve_plus: PathBuf,
    pub anchors_minus: Option<[f64; 3]>,
    pub anchors_plus: Option<[f64; 3]>,
    pub initial: InitialRecipe,
    pub ell0: f64,
    pub c_minus: f64,
    pub c_plus: f64,
    pub b_minus: Cx<f64>,
    pub b_plus: Cx<f64>,
    pub phi_minus: f64,
    pub phi_plus: f64,
    pub gamma: f64,
    pub c_eta: f64,
    pub n_s: usize,
    pub n_theta: usize,
    pub dt0: f64,
    pub t_max: f64,
    pub stationary_threshold: f64,
    pub record_every: usize,
    pub max_steps: usize,
    /// Snapshot cadence in recorded ledger rows; 0 disables snapshots.
    pub snapshot_every: usize,
    pub out_dir: Option<PathBuf>,
}

impl Default for Scenario {
    fn default() -> Self {
        Self {
            curve_minus: PathBuf::new(),
            curve_plus: PathBuf::new(),
            anchors_minus: None,
            anchors_plus: None,
            initial: InitialRecipe::AnnulusInterpolation,
            ell0: 1.0,
            c_minus: 1.0,
            c_plus: 1.0,
            b_minus: Cx::new(0.0, 0.0),
            b_plus: Cx::new(0.0, 0.0),
            phi_minus: 0.0,
            phi_plus: 0.0,
            gamma: 4.0,
            c_eta: 1.0,
            n_s: 65,
            n_theta: 48,
            dt0: 1e-4,
            t_max: 0.05,
            stationary_threshold: 1e-6,
            record_every: 1,
            max_steps: 100_000,
            snapshot_every: 0,
            out_dir: None,
        }
    }
}

fn parse_err(path: &Path, msg: impl Into<String>) -> Error {
    Error::Parse {
        path: path.display().to_string(),
        msg: msg.into(),
    }
}

fn parse_f64(path: &Path, key: &str, v: &str) -> Result<f64> {
    v.trim()
        .parse::<f64>()
        .map_err(|_| parse_err(path, format!("invalid number for {key}: {v:?}")))
}

fn parse_usize(path: &Path, key: &str, v: &str) -> Result<usize> {
    v.trim()
        .parse::<usize>()
        .map_err(|_| parse_err(path, format!("invalid integer for {key}: {v:?}")))
}

fn parse_triple(path: &Path, key: &str, v: &str) -> Result<[f64; 3]> {
    let parts: Vec<&str> = v.split(',').collect();
    if parts.len() != 3 {
        return Err(parse_err(path, format!("{key} needs three comma-separated values")));
    }
    Ok([
        parse_f64(path, key, parts[0])?,
        parse_f64(path, key, parts[1])?,
        parse_f64(path, key, parts[2])?,
    ])
}

fn parse_complex(path: &Path, key: &str, v: &str) -> Result<Cx<f64>> {
    let parts: Vec<&str> = v.split(',').collect();
    if parts.len() != 2 {
        return Err(parse_err(path, format!("{key} needs \"re,im\"")));
    }
    Ok(Cx::new(
        parse_f64(path, key, parts[0])?,
        parse_f64(path, key, parts[1])?,
    ))
}

impl Scenario {
    pub fn from_file(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)?;
        let dir = path.parent().unwrap_or_else(|| Path::new(".")).to_path_buf();
        let mut sc = Scenario::default();
        let mut have_curves = (false, false);
        for (ln, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (key, val) = line
                .split_once('=')
                .ok_or_else(|| parse_err(path, format!("line {}: expected key = value", ln + 1)))?;
            let (key, val) = (key.trim(), val.trim());
            match key {
                "curve_minus" => {
                    sc.curve_minus = dir.join(val);
                    have_curves.0 = true;
                }
                "curve_plus" => {
                    sc.curve_plus = dir.join(val);
                    have_curves.1 = true;
                }
                "anchors_minus" => sc.anchors_minus = Some(parse_triple(path, key, val)?),
                "anchors_plus" => sc.anchors_plus = Some(parse_triple(path, key, val)?),
                "initial" => {
                    sc.initial = if val == "annulus-interpolation" {
                        InitialRecipe::AnnulusInterpolation
                    } else {
                        InitialRecipe::File(dir.join(val))
                    }
                }
                "ell0" => sc.ell0 = parse_f64(path, key, val)?,
                "c_minus" => sc.c_minus = parse_f64(path, key, val)?,
                "c_plus" => sc.c_plus = parse_f64(path, key, val)?,
                "b_minus" => sc.b_minus = parse_complex(path, key, val)?,
                "b_plus" => sc.b_plus = parse_complex(path, key, val)?,
                "phi_minus" => sc.phi_minus = parse_f64(path, key, val)?,
                "phi_plus" => sc.phi_plus = parse_f64(path, key, val)?,
                "gamma" => sc.gamma = parse_f64(path, key, val)?,
                "c_eta" => sc.c_eta = parse_f64(path, key, val)?,
                "n_s" => sc.n_s = parse_usize(path, key, val)?,
                "n_theta" => sc.n_theta = parse_usize(path, key, val)?,
                "dt0" => sc.dt0 = parse_f64(path, key, val)?,
                "t_max" => sc.t_max = parse_f64(path, key, val)?,
                "stationary_threshold" => sc.stationary_threshold = parse_f64(path, key, val)?,
                "record_every" => sc.record_every = parse_usize(path, key, val)?.max(1),
                "max_steps" => sc.max_steps = parse_usize(path, key, val)?,
                "snapshot_every" => sc.snapshot_every = parse_usize(path, key, val)?,
                "out" => sc.out_dir = Some(dir.join(val)),
                _ => return Err(parse_err(path, format!("unknown key {key:?}"))),
            }
        }
        if !have_curves.0 || !have_curves.1 {
            return Err(parse_err(path, "curve_minus and curve_plus are required"));
        }
        Ok(sc)
    }

    /// Check everything that does not require reading the curve files.
    pub fn validate(&self) -> Result<()> {
        for p in [&self.curve_minus, &self.curve_plus] {
            if !p.exists() {
                return Err(Error::Validation(format!(
                    "curve file not found: {}",
                    p.display()
                )));
            }
        }
        CouplingConfig::new(self.gamma, self.c_eta)?;
        HyperbolicCylinder::<f64>::new(self.ell0, self.c_minus, self.c_plus, self.n_s, self.n_theta)?;
        if !(self.dt0 > 0.0) || !(self.t_max > 0.0) {
            return Err(Error::Validation("dt0 and t_max must be positive".into()));
        }
        Ok(())
    }

    pub fn load_curves(&self) -> Result<(BoundaryCurve<f64>, BoundaryCurve<f64>)> {
        let pm = read_curve_csv::<f64>(&self.curve_minus)?;
        let pp = read_curve_csv::<f64>(&self.curve_plus)?;
        let mut cm = BoundaryCurve::with_default_anchors(pm)?;
        let mut cp = BoundaryCurve::with_default_anchors(pp)?;
        if let Some(a) = self.anchors_minus {
            cm.set_anchors(a)?;
        }
        if let Some(a) = self.anchors_plus {
            cp.set_anchors(a)?;
        }
        if cm.dim() != cp.dim() {
            return Err(Error::Validation("curve dimensions differ".into()));
        }
        // disjointness: min pairwise sample distance strictly positive
        let mut min_d2 = f64::INFINITY;
        for i in 0..cm.n_samples() {
            let a = cm.sample(i);
            for j in 0..cp.n_samples() {
                let b = cp.sample(j);
                let d2: f64 = a
                    .iter()
                    .zip(b.iter())
                    .map(|(x, y)| (x - y) * (x - y))
                    .sum();
                min_d2 = min_d2.min(d2);
            }
        }
        if !(min_d2 > 0.0) {
            return Err(Error::Validation(
                "boundary curves must be disjoint".into(),
            ));
        }
        Ok((cm, cp))
    }

    pub fn build_state(&self) -> Result<FlowState<f64>> {
        self.validate()?;
        let (cm, cp) = self.load_curves()?;
        let cyl =
            HyperbolicCylinder::new(self.ell0, self.c_minus, self.c_plus, self.n_s, self.n_theta)?;
        let mm = MoebiusParams::new(self.b_minus, self.phi_minus)?;
        let mp = MoebiusParams::new(self.b_plus, self.phi_plus)?;
        let map = match &self.initial {
            InitialRecipe::AnnulusInterpolation => {
                annulus_interpolation(cyl, &cm, &cp, &mm, &mp)?
            }
            InitialRecipe::File(p) => {
                let (map, _) = read_snapshot(p)?;
                if map.cyl.n_s() != self.n_s || map.cyl.n_theta() != self.n_theta {
                    return Err(Error::Validation(
                        "initial map grid does not match scenario grid".into(),
                    ));
                }
                map
            }
        };
        Ok(FlowState {
            map,
            curve_minus: cm,
            curve_plus: cp,
            moebius_minus: mm,
            moebius_plus: mp,
            coupling: CouplingConfig::new(self.gamma, self.c_eta)?,
            t: 0.0,
            dt: self.dt0,
            ledger: Vec::new(),
        })
    }

    pub fn run_config(&self) -> RunConfig<f64> {
        RunConfig {
            t_max: self.t_max,
            dt0: self.dt0,
            stationary_threshold: self.stationary_threshold,
            record_every: self.record_every,
            max_steps: self.max_steps,
        }
    }
}

pub fn write_ledger_csv(path: &Path, ledger: &[LedgerRecord<f64>]) -> Result<()> {
    let mut out = String::new();
    out.push_str(LEDGER_COLUMNS);
    out.push('\n');
    for r in ledger {
        let row = [
            r.t, r.e, r.tension_norm, r.ph_norm, r.pvp_norm, r.pvm_norm, r.ell, r.abs_bp,
            r.abs_bm, r.eps1p, r.eps2p, r.eps1m, r.eps2m,
        ];
        let cells: Vec<String> = row.iter().map(|v| format!("{v:.12e}")).collect();
        out.push_str(&cells.join(","));
        out.push('\n');
    }
    std::fs::write(path, out)?;
    Ok(())
}

pub fn read_ledger_csv(path: &Path) -> Result<Vec<LedgerRecord<f64>>> {
    let text = std::fs::read_to_string(path)?;
    let mut lines = text.lines();
    match lines.next() {
        Some(h) if h.trim() == LEDGER_COLUMNS => {}
        _ => return Err(parse_err(path, "missing ledger header")),
    }
    let mut out = Vec::new();
    for (ln, line) in lines.enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        let vals: Vec<f64> = line
            .split(',')
            .map(|c| c.trim().parse::<f64>())
            .collect::<std::result::Result<_, _>>()
            .map_err(|_| parse_err(path, format!("bad ledger row at line {}", ln + 2)))?;
        if vals.len() != 13 {
            return Err(parse_err(path, format!("expected 13 columns at line {}", ln + 2)));
        }
        out.push(LedgerRecord {
            t: vals[0],
            e: vals[1],
            tension_norm: vals[2],
            ph_norm: vals[3],
            pvp_norm: vals[4],
            pvm_norm: vals[5],
            ell: vals[6],
            abs_bp: vals[7],
            abs_bm: vals[8],
            eps1p: vals[9],
            eps2p: vals[10],
            eps1m: vals[11],
            eps2m: vals[12],
        });
    }
    Ok(out)
}

/// Metadata persisted alongside each map snapshot.
#[derive(Debug, Clone, Copy)]
pub struct SnapshotMeta {
    pub t: f64,
    pub ell: f64,
    pub c_minus: f64,
    pub c_plus: f64,
    pub b_minus: Cx<f64>,
    pub b_plus: Cx<f64>,
    pub phi_minus: f64,
    pub phi_plus: f64,
}

fn meta_path(path: &Path) -> PathBuf {
    let mut s = path.as_os_str().to_owned();
    s.push(".meta");
    PathBuf::from(s)
}

pub fn write_snapshot(path: &Path, state: &FlowState<f64>) -> Result<()> {
    let map = &state.map;
    let (n_s, n_t, dim) = (map.cyl.n_s(), map.cyl.n_theta(), map.dim());
    let mut out = String::new();
    out.push_str("# s-grid, theta-grid, dim\n");
    let _ = writeln!(out, "{n_s},{n_t},{dim}");
    for i in 0..n_s {
        for j in 0..n_t {
            let cells: Vec<String> = (0..dim)
                .map(|d| format!("{:.12e}", map.values[[i, j, d]]))
                .collect();
            out.push_str(&cells.join(","));
            out.push('\n');
        }
    }
    std::fs::write(path, out)?;

    let cyl = state.cyl();
    let mut meta = String::new();
    let _ = writeln!(meta, "t = {:.12e}", state.t);
    let _ = writeln!(meta, "ell = {:.12e}", cyl.ell());
    let _ = writeln!(meta, "c_minus = {:.12e}", cyl.c_minus());
    let _ = writeln!(meta, "c_plus = {:.12e}", cyl.c_plus());
    let bm = state.moebius_minus.b();
    let bp = state.moebius_plus.b();
    let _ = writeln!(meta, "b_minus = {:.12e},{:.12e}", bm.re, bm.im);
    let _ = writeln!(meta, "b_plus = {:.12e},{:.12e}", bp.re, bp.im);
    let _ = writeln!(meta, "phi_minus = {:.12e}", state.moebius_minus.phi());
    let _ = writeln!(meta, "phi_plus = {:.12e}", state.moebius_plus.phi());
    std::fs::write(meta_path(path), meta)?;
    Ok(())
}

pub fn read_snapshot(path: &Path) -> Result<(SurfaceMap<f64>, SnapshotMeta)> {
    let mpath = meta_path(path);
    let mtext = std::fs::read_to_string(&mpath)?;
    let mut meta = SnapshotMeta {
        t: 0.0,
        ell: 0.0,
        c_minus: 1.0,
        c_plus: 1.0,
        b_minus: Cx::new(0.0, 0.0),
        b_plus: Cx::new(0.0, 0.0),
        phi_minus: 0.0,
        phi_plus: 0.0,
    };
    for raw in mtext.lines() {
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let (key, val) = line
            .split_once('=')
            .ok_or_else(|| parse_err(&mpath, "expected key = value"))?;
        let (key, val) = (key.trim(), val.trim());
        match key {
            "t" => meta.t = parse_f64(&mpath, key, val)?,
            "ell" => meta.ell = parse_f64(&mpath, key, val)?,
            "c_minus" => meta.c_minus = parse_f64(&mpath, key, val)?,
            "c_plus" => meta.c_plus = parse_f64(&mpath, key, val)?,
            "b_minus" => meta.b_minus = parse_complex(&mpath, key, val)?,
            "b_plus" => meta.b_plus = parse_complex(&mpath, key, val)?,
            "phi_minus" => meta.phi_minus = parse_f64(&mpath, key, val)?,
            "phi_plus" => meta.phi_plus = parse_f64(&mpath, key, val)?,
            _ => return Err(parse_err(&mpath, format!("unknown key {key:?}"))),
        }
    }

    let text = std::fs::read_to_string(path)?;
    let mut lines = text.lines().filter(|l| !l.trim().is_empty());
    match lines.next() {
        Some(h) if h.trim_start().starts_with('#') => {}
        _ => return Err(parse_err(path, "missing snapshot header")),
    }
    let dims_line = lines
        .next()
        .ok_or_else(|| parse_err(path, "missing grid dimensions"))?;
    let dims: Vec<usize> = dims_line
        .split(',')
        .map(|c| c.trim().parse::<usize>())
        .collect::<std::result::Result<_, _>>()
        .map_err(|_| parse_err(path, "bad grid dimensions"))?;
    if dims.len() != 3 {
        return Err(parse_err(path, "expected n_s,n_theta,dim"));
    }
    let (n_s, n_t, dim) = (dims[0], dims[1], dims[2]);
    let cyl = HyperbolicCylinder::new(meta.ell, meta.c_minus, meta.c_plus, n_s, n_t)?;
    let mut values = Array3::<f64>::zeros((n_s, n_t, dim));
    let mut count = 0usize;
    for line in lines {
        let i = count / n_t;
        let j = count % n_t;
        if i >= n_s {
            return Err(parse_err(path, "too many rows"));
        }
        let vals: Vec<f64> = line
            .split(',')
            .map(|c| c.trim().parse::<f64>())
            .collect::<std::result::Result<_, _>>()
            .map_err(|_| parse_err(path, format!("bad value row {}", count + 1)))?;
        if vals.len() != dim {
            return Err(parse_err(path, format!("expected {dim} columns in row {}", count + 1)));
        }
        for d in 0..dim {
            values[[i, j, d]] = vals[d];
        }
        count += 1;
    }
    if count != n_s * n_t {
        return Err(parse_err(path, "row count does not match grid"));
    }
    let map = SurfaceMap {
        values,
        cyl,
        boundary_minus: None,
        boundary_plus: None,
    };
    Ok((map, meta))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::curves::{circle_samples, write_curve_csv};

    fn two_circle_dir() -> (tempfile::TempDir, PathBuf) {
        let dir = tempfile::tempdir().unwrap();
        let lower = circle_samples(1.5f64, -2.0, 256);
        let upper = circle_samples(1.5f64, 2.0, 256);
        write_curve_csv(&dir.path().join("lower.csv"), &lower).unwrap();
        write_curve_csv(&dir.path().join("upper.csv"), &upper).unwrap();
        let cfg = dir.path().join("scenario.cfg");
        std::fs::write(
            &cfg,
            "curve_minus = lower.csv\n\
             curve_plus = upper.csv  # the upper circle\n\
             ell0 = 2.0\n\
             n_s = 33\n\
             n_theta = 24\n\
             t_max = 0.01\n",
        )
        .unwrap();
        (dir, cfg)
    }

    #[test]
    fn parse_and_build_two_circle_scenario() {
        let (_dir, cfg) = two_circle_dir();
        let sc = Scenario::from_file(&cfg).unwrap();
        assert_eq!(sc.ell0, 2.0);
        assert_eq!(sc.n_s, 33);
        assert_eq!(sc.gamma, 4.0);
        let state = sc.build_state().unwrap();
        assert_eq!(state.map.dim(), 3);
        assert_eq!(state.cyl().n_theta(), 24);
    }

    #[test]
    fn unknown_key_is_a_parse_error() {
        let dir = tempfile::tempdir().unwrap();
        let cfg = dir.path().join("bad.cfg");
        std::fs::write(&cfg, "curve_minus = a.csv\ncurve_plus = b.csv\nbogus = 1\n").unwrap();
        match Scenario::from_file(&cfg) {
            Err(Error::Parse { msg, .. }) => assert!(msg.contains("bogus")),
            other => panic!("expected parse error, got {other:?}"),
        }
    }

    #[test]
    fn missing_curve_file_names_the_path() {
        let dir = tempfile::tempdir().unwrap();
        let cfg = dir.path().join("scenario.cfg");
        std::fs::write(&cfg, "curve_minus = nope.csv\ncurve_plus = also-nope.csv\n").unwrap();
        let sc = Scenario::from_file(&cfg).unwrap();
        match sc.validate() {
            Err(Error::Validation(msg)) => assert!(msg.contains("nope.csv")),
            other => panic!("expected validation error, got {other:?}"),
        }
    }

    #[test]
    fn intersecting_curves_rejected() {
        let dir = tempfile::tempdir().unwrap();
        let c = circle_samples(1.0f64, 0.0, 128);
        write_curve_csv(&dir.path().join("a.csv"), &c).unwrap();
        write_curve_csv(&dir.path().join("b.csv"), &c).unwrap();
        let cfg = dir.path().join("scenario.cfg");
        std::fs::write(&cfg, "curve_minus = a.csv\ncurve_plus = b.csv\n").unwrap();
        let sc = Scenario::from_file(&cfg).unwrap();
        assert!(matches!(sc.load_curves(), Err(Error::Validation(_))));
    }

    #[test]
    fn ledger_roundtrip() {
        let dir = tempfile::tempdir().unwrap();
        let rec = LedgerRecord {
            t: 0.5,
            e: 12.25,
            tension_norm: 1e-3,
            ph_norm: 2e-2,
            pvp_norm: 0.0,
            pvm_norm: 0.0,
            ell: 1.75,
            abs_bp: 0.5,
            abs_bm: 0.0,
            eps1p: 1.0,
            eps2p: 2.0,
            eps1m: 2.0,
            eps2m: 2.1,
        };
        let path = dir.path().join("ledger.csv");
        write_ledger_csv(&path, &[rec]).unwrap();
        let back = read_ledger_csv(&path).unwrap();
        assert_eq!(back.len(), 1);
        assert!((back[0].e - 12.25).abs() < 1e-12);
        assert!((back[0].eps2m - 2.1).abs() < 1e-12);
    }

    #[test]
    fn snapshot_roundtrip() {
        let (_dir, cfg) = two_circle_dir();
        let sc = Scenario::from_file(&cfg).unwrap();
        let state = sc.build_state().unwrap();
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("snap_0.csv");
        write_snapshot(&path, &state).unwrap();
        let (map, meta) = read_snapshot(&path).unwrap();
        assert_eq!(map.cyl.n_s(), state.cyl().n_s());
        assert!((meta.ell - 2.0).abs() < 1e-12);
        let diff = (&map.values - &state.map.values)
            .iter()
            .fold(0.0f64, |a, v| a.max(v.abs()));
        assert!(diff < 1e-10);
    }
}
