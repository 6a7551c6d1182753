//! Run configuration (`key = value` text), history CSV and legacy VTK
//! snapshots.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use crate::control::{HistoryRow, RunHistory, Scenario};
use crate::error::{Result, SimError};
use crate::observables::equilibrium_height;
use crate::params::{NumParams, PhysParams};
use crate::stepper::FlowState;

/// Parsed run configuration. Angles are kept in degrees as written.
#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub nu: f64,
    pub gamma: f64,
    pub chi: f64,
    pub theta_s_deg: f64,
    pub p_bar: f64,
    pub g: f64,
    pub dt: f64,
    pub cs: f64,
    pub n1: usize,
    pub n3: usize,
    pub alpha: f64,
    pub lambda: f64,
    pub t_final: f64,
    pub radius: f64,
    pub init_height: f64,
    /// Write a VTK snapshot every this many steps (0 disables).
    pub snapshot_every: usize,
    pub controlled: bool,
    pub output_dir: PathBuf,
    /// Reference level for the transient time; the equilibrium formula when
    /// absent.
    pub z_inf: Option<f64>,
}

impl Default for RunConfig {
    fn default() -> Self {
        let phys = PhysParams::test_case_1();
        let num = NumParams::test_case_1();
        RunConfig {
            nu: phys.nu,
            gamma: phys.gamma,
            chi: phys.chi,
            theta_s_deg: 90.0,
            p_bar: phys.p_bar,
            g: phys.g,
            dt: num.dt,
            cs: num.cs,
            n1: num.n1,
            n3: num.n3,
            alpha: num.alpha,
            lambda: num.lambda,
            t_final: num.t_final,
            radius: 5e-4,
            init_height: 5e-5,
            snapshot_every: 0,
            controlled: true,
            output_dir: PathBuf::from("out"),
            z_inf: None,
        }
    }
}

fn parse_value<T: std::str::FromStr>(line: usize, key: &str, value: &str) -> Result<T> {
    value.parse().map_err(|_| SimError::Config { line, message: format!("bad value for {key}: {value:?}") })
}

impl RunConfig {
    pub fn parse(text: &str) -> Result<Self> {
        let mut cfg = RunConfig::default();
        for (idx, raw) in text.lines().enumerate() {
            let line = idx + 1;
            let content = raw.split('#').next().unwrap_or("").trim();
            if content.is_empty() {
                continue;
            }
            let (key, value) = content
                .split_once('=')
                .ok_or_else(|| SimError::Config { line, message: format!("expected key = value, got {content:?}") })?;
            let (key, value) = (key.trim(), value.trim());
            match key {
                "nu" => cfg.nu = parse_value(line, key, value)?,
                "gamma" => cfg.gamma = parse_value(line, key, value)?,
                "chi" => cfg.chi = parse_value(line, key, value)?,
                "theta_s" => cfg.theta_s_deg = parse_value(line, key, value)?,
                "p_bar" => cfg.p_bar = parse_value(line, key, value)?,
                "g" => cfg.g = parse_value(line, key, value)?,
                "dt" => cfg.dt = parse_value(line, key, value)?,
                "cs" => cfg.cs = parse_value(line, key, value)?,
                "n1" => cfg.n1 = parse_value(line, key, value)?,
                "n3" => cfg.n3 = parse_value(line, key, value)?,
                "alpha" => cfg.alpha = parse_value(line, key, value)?,
                "lambda" => cfg.lambda = parse_value(line, key, value)?,
                "t_final" => cfg.t_final = parse_value(line, key, value)?,
                "radius" => cfg.radius = parse_value(line, key, value)?,
                "init_height" => cfg.init_height = parse_value(line, key, value)?,
                "snapshot_every" => cfg.snapshot_every = parse_value(line, key, value)?,
                "controlled" => cfg.controlled = parse_value(line, key, value)?,
                "output_dir" => cfg.output_dir = PathBuf::from(value),
                "z_inf" => cfg.z_inf = Some(parse_value(line, key, value)?),
                _ => return Err(SimError::Config { line, message: format!("unknown key {key:?}") }),
            }
        }
        cfg.scenario()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path).map_err(|source| SimError::Io { path: path.to_path_buf(), source })?;
        Self::parse(&text)
    }

    /// Text that [`RunConfig::parse`] maps back to `self`.
    pub fn serialize(&self) -> String {
        let mut s = String::new();
        let mut put = |k: &str, v: String| {
            let _ = writeln!(s, "{k} = {v}");
        };
        put("nu", format!("{:e}", self.nu));
        put("gamma", format!("{:e}", self.gamma));
        put("chi", format!("{:e}", self.chi));
        put("theta_s", format!("{:?}", self.theta_s_deg));
        put("p_bar", format!("{:e}", self.p_bar));
        put("g", format!("{:?}", self.g));
        put("dt", format!("{:e}", self.dt));
        put("cs", format!("{:?}", self.cs));
        put("n1", self.n1.to_string());
        put("n3", self.n3.to_string());
        put("alpha", format!("{:e}", self.alpha));
        put("lambda", format!("{:e}", self.lambda));
        put("t_final", format!("{:?}", self.t_final));
        put("radius", format!("{:e}", self.radius));
        put("init_height", format!("{:e}", self.init_height));
        put("snapshot_every", self.snapshot_every.to_string());
        put("controlled", self.controlled.to_string());
        put("output_dir", self.output_dir.display().to_string());
        if let Some(z) = self.z_inf {
            put("z_inf", format!("{z:e}"));
        }
        s
    }

    pub fn phys(&self) -> PhysParams {
        PhysParams {
            nu: self.nu,
            gamma: self.gamma,
            chi: self.chi,
            theta_s: self.theta_s_deg.to_radians(),
            p_bar: self.p_bar,
            g: self.g,
        }
    }

    pub fn num(&self) -> NumParams {
        NumParams {
            dt: self.dt,
            cs: self.cs,
            n1: self.n1,
            n3: self.n3,
            alpha: self.alpha,
            lambda: self.lambda,
            t_final: self.t_final,
        }
    }

    /// Level used for the transient time.
    pub fn reference_height(&self) -> f64 {
        self.z_inf.unwrap_or_else(|| equilibrium_height(&self.phys(), self.radius, 0.0))
    }

    /// Validated scenario for the time loop.
    pub fn scenario(&self) -> Result<Scenario> {
        let (phys, num) = (self.phys(), self.num());
        phys.validate()?;
        num.validate()?;
        if !(self.radius > 0.0 && self.init_height > 0.0) {
            return Err(SimError::InvalidParameter("radius and init_height must be positive".into()));
        }
        Ok(Scenario { phys, num, radius: self.radius, init_height: self.init_height })
    }
}

pub const CSV_HEADER: &str = "t,Z_CL,zeta,J_increment,grad,u_max";

/// 17 significant digits, `.` decimal point, lowercase exponent.
pub fn format_float(x: f64) -> String {
    format!("{x:.16e}")
}

pub fn history_csv(history: &RunHistory) -> String {
    let mut s = String::from(CSV_HEADER);
    s.push('\n');
    for r in &history.rows {
        let fields = [r.t, r.z_cl, r.zeta, r.j_increment, r.grad, r.u_max].map(format_float);
        s.push_str(&fields.join(","));
        s.push('\n');
    }
    s
}

pub fn parse_history_csv(text: &str) -> Result<RunHistory> {
    let mut lines = text.lines().enumerate();
    match lines.next() {
        Some((_, h)) if h == CSV_HEADER => {}
        _ => return Err(SimError::Config { line: 1, message: "missing CSV header".into() }),
    }
    let mut rows = Vec::new();
    for (idx, line) in lines {
        let v: Vec<f64> = line
            .split(',')
            .map(|f| f.parse::<f64>())
            .collect::<std::result::Result<_, _>>()
            .map_err(|e| SimError::Config { line: idx + 1, message: e.to_string() })?;
        if v.len() != 6 {
            return Err(SimError::Config { line: idx + 1, message: format!("expected 6 columns, got {}", v.len()) });
        }
        rows.push(HistoryRow { t: v[0], z_cl: v[1], zeta: v[2], j_increment: v[3], grad: v[4], u_max: v[5] });
    }
    Ok(RunHistory { rows })
}

fn write_file(path: &Path, contents: &str) -> Result<()> {
    fs::write(path, contents).map_err(|source| SimError::Io { path: path.to_path_buf(), source })
}

pub fn write_history_csv(history: &RunHistory, path: &Path) -> Result<()> {
    write_file(path, &history_csv(history))
}

/// Legacy ASCII VTK unstructured grid of the meridian half-plane with point
/// data `u` (vector) and `p` (scalar).
pub fn vtk_snapshot(state: &FlowState) -> String {
    let mesh = &state.mesh;
    let mut s = String::new();
    let _ = writeln!(s, "# vtk DataFile Version 3.0");
    let _ = writeln!(s, "capillary state t = {}", format_float(state.t));
    let _ = writeln!(s, "ASCII\nDATASET UNSTRUCTURED_GRID");
    let _ = writeln!(s, "POINTS {} double", mesh.num_nodes());
    for p in mesh.nodes() {
        let _ = writeln!(s, "{} {} 0", format_float(p[0]), format_float(p[1]));
    }
    let nt = mesh.triangles().len();
    let _ = writeln!(s, "CELLS {nt} {}", 4 * nt);
    for t in mesh.triangles() {
        let _ = writeln!(s, "3 {} {} {}", t[0], t[1], t[2]);
    }
    let _ = writeln!(s, "CELL_TYPES {nt}");
    for _ in 0..nt {
        let _ = writeln!(s, "5");
    }
    let _ = writeln!(s, "POINT_DATA {}", mesh.num_nodes());
    let _ = writeln!(s, "VECTORS u double");
    for v in state.u.values() {
        let _ = writeln!(s, "{} {} 0", format_float(v[0]), format_float(v[1]));
    }
    let _ = writeln!(s, "SCALARS p double 1\nLOOKUP_TABLE default");
    for p in state.p.values() {
        let _ = writeln!(s, "{}", format_float(*p));
    }
    s
}

pub fn write_vtk_snapshot(state: &FlowState, path: &Path) -> Result<()> {
    write_file(path, &vtk_snapshot(state))
}
