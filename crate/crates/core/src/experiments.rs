//! Figure scenarios, parameter sweeps, CSV tables with replayable provenance,
//! companion gnuplot scripts and the qualitative post-run checks.

use std::collections::BTreeMap;
use std::fmt;
use std::io::Write;
use std::str::FromStr;

use crate::asymptotics::{se_distributed_approx, se_lower_bound, se_upper_bound};
use crate::beamforming::{mrt, uniform_power, zf};
use crate::channel::distributed_channel_matrix;
use crate::error::{Error, Result};
use crate::metrics::{
    energy_efficiency, log2_1p, se_centralized_exact, se_distributed_exact, se_equal_spacing,
    se_general, se_general_any, P_RF_WATTS,
};
use crate::model::{derive_seed, sample_users_with_margin, SystemConfig, UserDrop};
use crate::oracle::{mc_collect_with, McEstimate};
use crate::placement::{distributed_nearest, random_reference, PaPlacement};

pub const DEFAULT_DROPS: usize = 100;
pub const DEFAULT_STEP_DB: f64 = 5.0;
pub const BUILD_STAMP: &str = concat!("pinch-se ", env!("CARGO_PKG_VERSION"));

/// `(I, Q)` pairs with `I·Q = 15` used by the deployment trade-off.
pub const TRADEOFF_PAIRS: [(usize, usize); 4] = [(1, 15), (3, 5), (5, 3), (15, 1)];

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Figure {
    ApproxVsSim,
    Tradeoff,
    Spacing,
    Beamformer,
    Placement,
    Sensitivity,
}

impl Figure {
    pub const ALL: [Figure; 6] = [
        Figure::ApproxVsSim,
        Figure::Tradeoff,
        Figure::Spacing,
        Figure::Beamformer,
        Figure::Placement,
        Figure::Sensitivity,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Figure::ApproxVsSim => "approx-vs-sim",
            Figure::Tradeoff => "tradeoff",
            Figure::Spacing => "spacing",
            Figure::Beamformer => "beamformer",
            Figure::Placement => "placement",
            Figure::Sensitivity => "sensitivity",
        }
    }
}

impl FromStr for Figure {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Figure::ALL
            .into_iter()
            .find(|f| f.name() == s)
            .ok_or_else(|| {
                let names: Vec<_> = Figure::ALL.iter().map(|f| f.name()).collect();
                Error::Parse(format!("unknown figure '{s}', expected one of {}", names.join(", ")))
            })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SweepAxis {
    PtDbm,
    DMeters,
}

impl SweepAxis {
    pub fn name(self) -> &'static str {
        match self {
            SweepAxis::PtDbm => "pt_dbm",
            SweepAxis::DMeters => "d_m",
        }
    }
}

impl FromStr for SweepAxis {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "pt_dbm" => Ok(SweepAxis::PtDbm),
            "d_m" => Ok(SweepAxis::DMeters),
            other => Err(Error::Parse(format!(
                "unknown axis '{other}', expected pt_dbm or d_m"
            ))),
        }
    }
}

/// One axis swept over `from, from+step, …, ≤ to`; every strategy evaluated.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CustomSweep {
    pub axis: SweepAxis,
    pub from: f64,
    pub to: f64,
    pub step: f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Scenario {
    Figure(Figure),
    Custom(CustomSweep),
}

impl fmt::Display for Scenario {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Scenario::Figure(fig) => f.write_str(fig.name()),
            Scenario::Custom(c) => write!(f, "custom:{}:{}:{}:{}", c.axis.name(), c.from, c.to, c.step),
        }
    }
}

impl FromStr for Scenario {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let Some(rest) = s.strip_prefix("custom:") else {
            return s.parse().map(Scenario::Figure);
        };
        let parts: Vec<&str> = rest.split(':').collect();
        if parts.len() != 4 {
            return Err(Error::Parse(format!(
                "custom scenario '{s}' must be custom:<axis>:<from>:<to>:<step>"
            )));
        }
        let num = |v: &str| {
            v.parse::<f64>()
                .map_err(|_| Error::Parse(format!("custom scenario: bad number '{v}'")))
        };
        Ok(Scenario::Custom(CustomSweep {
            axis: parts[0].parse()?,
            from: num(parts[1])?,
            to: num(parts[2])?,
            step: num(parts[3])?,
        }))
    }
}

/// Everything needed to produce (and reproduce) a table.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SweepRequest {
    pub scenario: Scenario,
    pub config: SystemConfig,
    pub seed: u64,
    pub drops: usize,
    /// Transmit-power grid step, dB.
    pub step_db: f64,
}

impl SweepRequest {
    pub fn figure(figure: Figure, config: SystemConfig, seed: u64) -> Self {
        Self {
            scenario: Scenario::Figure(figure),
            config,
            seed,
            drops: DEFAULT_DROPS,
            step_db: DEFAULT_STEP_DB,
        }
    }

    pub fn validate(&self) -> Result<()> {
        self.config.validate()?;
        if self.drops == 0 {
            return Err(Error::InvalidConfig("drops must be at least 1".into()));
        }
        if !(self.step_db > 0.0 && self.step_db.is_finite()) {
            return Err(Error::InvalidConfig(format!(
                "step must be positive, got {}",
                self.step_db
            )));
        }
        if let Scenario::Custom(c) = self.scenario {
            if !(c.step > 0.0 && c.from.is_finite() && c.to >= c.from) {
                return Err(Error::InvalidConfig(format!(
                    "custom sweep needs from ≤ to and step > 0, got {}..{} step {}",
                    c.from, c.to, c.step
                )));
            }
            if c.axis == SweepAxis::DMeters && c.from <= 0.0 {
                return Err(Error::InvalidConfig("waveguide spacing must be positive".into()));
            }
        }
        Ok(())
    }
}

/// `from, from+step, …` up to and including `to` (within rounding).
pub fn grid(from: f64, to: f64, step: f64) -> Vec<f64> {
    let count = ((to - from) / step + 1e-9).floor() as usize;
    (0..=count).map(|j| from + j as f64 * step).collect()
}

#[derive(Debug, Clone, PartialEq)]
pub struct Axis {
    pub name: String,
    pub values: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Record {
    pub metric: String,
    pub strategy: String,
    pub value: f64,
    pub stderr: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Cell {
    pub coords: Vec<f64>,
    pub seed: u64,
    pub records: Vec<Record>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepTable {
    pub axes: Vec<Axis>,
    /// Row-major over `axes` (first axis outermost).
    pub cells: Vec<Cell>,
    pub request: SweepRequest,
}

impl SweepTable {
    pub fn axis_index(&self, name: &str) -> Option<usize> {
        self.axes.iter().position(|a| a.name == name)
    }

    pub fn value(&self, coords: &[f64], metric: &str, strategy: &str) -> Option<f64> {
        self.cells
            .iter()
            .find(|c| c.coords == coords)?
            .records
            .iter()
            .find(|r| r.metric == metric && r.strategy == strategy)
            .map(|r| r.value)
    }

    /// Values along the last axis with the leading coordinates fixed.
    pub fn series(&self, leading: &[f64], metric: &str, strategy: &str) -> Vec<(f64, f64)> {
        let last = self.axes.len() - 1;
        self.axes[last]
            .values
            .iter()
            .filter_map(|&x| {
                let mut coords = leading.to_vec();
                coords.push(x);
                self.value(&coords, metric, strategy).map(|v| (x, v))
            })
            .collect()
    }

    /// Metadata lines (without the leading `# `).
    pub fn metadata(&self) -> Vec<(String, String)> {
        let r = &self.request;
        let c = &r.config;
        vec![
            ("scenario".into(), r.scenario.to_string()),
            ("seed".into(), r.seed.to_string()),
            ("drops".into(), r.drops.to_string()),
            ("step_db".into(), r.step_db.to_string()),
            ("build".into(), BUILD_STAMP.into()),
            ("config.n".into(), c.n.to_string()),
            ("config.d".into(), c.d.to_string()),
            ("config.D".into(), c.height.to_string()),
            ("config.L".into(), c.length.to_string()),
            ("config.fc_hz".into(), c.f_c.to_string()),
            ("config.n_eff".into(), c.n_eff.to_string()),
            ("config.noise_w".into(), c.noise_power.to_string()),
            ("config.pt_w".into(), c.p_t.to_string()),
        ]
    }

    pub fn write_csv<W: Write>(&self, mut out: W) -> Result<()> {
        for (k, v) in self.metadata() {
            writeln!(out, "# {k}={v}")?;
        }
        let mut w = csv::Writer::from_writer(out);
        let mut header: Vec<String> = self.axes.iter().map(|a| a.name.clone()).collect();
        header.extend(["metric", "strategy", "value", "stderr", "seed"].map(String::from));
        w.write_record(&header)?;
        for cell in &self.cells {
            for rec in &cell.records {
                let mut row: Vec<String> = cell.coords.iter().map(f64::to_string).collect();
                row.push(rec.metric.clone());
                row.push(rec.strategy.clone());
                row.push(rec.value.to_string());
                row.push(rec.stderr.to_string());
                row.push(cell.seed.to_string());
                w.write_record(&row)?;
            }
        }
        w.flush()?;
        Ok(())
    }

    pub fn to_csv_string(&self) -> Result<String> {
        let mut buf = Vec::new();
        self.write_csv(&mut buf)?;
        String::from_utf8(buf).map_err(|e| Error::Parse(e.to_string()))
    }

    /// Gnuplot script plotting every series of the table from `csv_path`.
    pub fn plot_script(&self, csv_path: &str) -> String {
        let n_axes = self.axes.len();
        let x_col = n_axes;
        let (m_col, s_col, v_col) = (n_axes + 1, n_axes + 2, n_axes + 3);
        let mut series: Vec<(Vec<f64>, String, String)> = Vec::new();
        for cell in &self.cells {
            let leading = cell.coords[..n_axes - 1].to_vec();
            for rec in &cell.records {
                let key = (leading.clone(), rec.metric.clone(), rec.strategy.clone());
                if !series.contains(&key) {
                    series.push(key);
                }
            }
        }
        let mut s = String::new();
        s.push_str(&format!("# {} from {csv_path}\n", self.request.scenario));
        s.push_str("set datafile separator ','\nset datafile commentschars '#'\nset key outside right\n");
        s.push_str(&format!("set xlabel '{}'\nset ylabel 'value'\nset grid\n", self.axes[n_axes - 1].name));
        s.push_str("set terminal pngcairo size 1200,800\n");
        s.push_str(&format!("set output '{csv_path}.png'\n"));
        let plots: Vec<String> = series
            .iter()
            .map(|(leading, metric, strategy)| {
                let mut cond: Vec<String> = leading
                    .iter()
                    .enumerate()
                    .map(|(j, v)| format!("${} == {v}", j + 1))
                    .collect();
                cond.push(format!("strcol({m_col}) eq '{metric}'"));
                cond.push(format!("strcol({s_col}) eq '{strategy}'"));
                let mut title = format!("{metric} {strategy}");
                for (j, v) in leading.iter().enumerate() {
                    title.push_str(&format!(" {}={v}", self.axes[j].name));
                }
                format!(
                    "'{csv_path}' every ::1 using {x_col}:(({}) ? ${v_col} : 1/0) with linespoints title '{title}'",
                    cond.join(" && ")
                )
            })
            .collect();
        s.push_str("plot ");
        s.push_str(&plots.join(", \\\n     "));
        s.push('\n');
        s
    }
}

/// Rebuild the request embedded in a table's `#` metadata lines.
pub fn request_from_csv(text: &str) -> Result<SweepRequest> {
    let meta: BTreeMap<&str, &str> = text
        .lines()
        .filter_map(|l| l.strip_prefix("# "))
        .filter_map(|l| l.split_once('='))
        .collect();
    let get = |k: &str| {
        meta.get(k)
            .copied()
            .ok_or_else(|| Error::Parse(format!("metadata key '{k}' missing")))
    };
    let num = |k: &str| -> Result<f64> {
        get(k)?
            .parse()
            .map_err(|_| Error::Parse(format!("metadata key '{k}' is not a number")))
    };
    let int = |k: &str| -> Result<u64> {
        get(k)?
            .parse()
            .map_err(|_| Error::Parse(format!("metadata key '{k}' is not an integer")))
    };
    let config = SystemConfig {
        n: int("config.n")? as usize,
        d: num("config.d")?,
        height: num("config.D")?,
        length: num("config.L")?,
        f_c: num("config.fc_hz")?,
        n_eff: num("config.n_eff")?,
        noise_power: num("config.noise_w")?,
        p_t: num("config.pt_w")?,
    };
    let req = SweepRequest {
        scenario: get("scenario")?.parse()?,
        config,
        seed: int("seed")?,
        drops: int("drops")? as usize,
        step_db: num("step_db")?,
    };
    req.validate()?;
    Ok(req)
}

fn exact_mrt(drop: &UserDrop, placement: &PaPlacement, cfg: &SystemConfig) -> Result<f64> {
    let h = distributed_channel_matrix(drop, placement, cfg)?;
    let w = mrt(&h)?;
    Ok(se_distributed_exact(drop, placement, &w, &uniform_power(cfg), cfg)?.total_se)
}

/// Exact ZF SE and the `N log₂(1 + αP_t/(Nσ²))` closed form; `None` if the
/// Gram matrix is rejected.
fn exact_zf(drop: &UserDrop, cfg: &SystemConfig) -> Result<Option<(f64, f64)>> {
    let placement = distributed_nearest(drop, cfg)?;
    let h = distributed_channel_matrix(drop, &placement, cfg)?;
    let w = match zf(&h) {
        Ok(w) => w,
        Err(Error::IllConditioned { .. }) => return Ok(None),
        Err(e) => return Err(e),
    };
    let se = se_distributed_exact(drop, &placement, &w, &uniform_power(cfg), cfg)?.total_se;
    let alpha = w.zf_alpha.unwrap_or(f64::NAN);
    let n = cfg.n as f64;
    Ok(Some((se, n * log2_1p(alpha * cfg.p_t / (n * cfg.noise_power)))))
}

struct Builder<'a> {
    req: &'a SweepRequest,
    cells: Vec<Cell>,
}

impl Builder<'_> {
    /// Monte-Carlo one cell: `eval` returns one value per `labels` entry per drop.
    fn mc_cell<F>(
        &mut self,
        coords: Vec<f64>,
        cfg: &SystemConfig,
        margin: f64,
        labels: &[(&str, &str)],
        eval: F,
    ) -> Result<()>
    where
        F: Fn(&UserDrop) -> Result<Vec<f64>> + Sync,
    {
        let seed = self.req.seed;
        let samples = mc_collect_with(
            |s| sample_users_with_margin(cfg, s, true, margin),
            |_, drop| eval(drop),
            self.req.drops,
            seed,
        )?;
        let records = labels
            .iter()
            .enumerate()
            .map(|(j, (metric, strategy))| {
                let column: Vec<f64> = samples.iter().map(|s| s[j]).collect();
                let est = McEstimate::from_samples(&column);
                Record {
                    metric: metric.to_string(),
                    strategy: strategy.to_string(),
                    value: est.mean,
                    stderr: est.stderr,
                }
            })
            .collect();
        self.cells.push(Cell {
            coords,
            seed,
            records,
        });
        Ok(())
    }
}

fn pt_grid(req: &SweepRequest, from: f64, to: f64) -> Vec<f64> {
    grid(from, to, req.step_db)
}

fn axis(name: &str, values: &[f64]) -> Axis {
    Axis {
        name: name.into(),
        values: values.to_vec(),
    }
}

const DISTRIBUTED_LABELS: [(&str, &str); 4] = [
    ("se", "mrt-exact"),
    ("se", "approx"),
    ("se", "upper"),
    ("se", "lower"),
];

fn distributed_family(drop: &UserDrop, cfg: &SystemConfig) -> Result<Vec<f64>> {
    let placement = distributed_nearest(drop, cfg)?;
    Ok(vec![
        exact_mrt(drop, &placement, cfg)?,
        se_distributed_approx(drop, cfg)?.total_se,
        se_upper_bound(drop, cfg)?.total_se,
        se_lower_bound(drop, cfg)?.total_se,
    ])
}

/// Run a sweep. Cells are evaluated in order; drops inside a cell in parallel.
pub fn run_sweep(req: &SweepRequest) -> Result<SweepTable> {
    req.validate()?;
    let base = req.config;
    let mut b = Builder {
        req,
        cells: Vec::new(),
    };
    let axes = match req.scenario {
        Scenario::Figure(Figure::ApproxVsSim) => {
            let cfg = base.with_d(1.0);
            let pts = pt_grid(req, -10.0, 60.0);
            for &pt in &pts {
                let c = cfg.with_pt_dbm(pt);
                b.mc_cell(vec![pt], &c, c.y_margin(), &DISTRIBUTED_LABELS, |d| {
                    distributed_family(d, &c)
                })?;
            }
            vec![axis("pt_dbm", &pts)]
        }
        Scenario::Figure(Figure::Tradeoff) => {
            let cfg = base.with_n(15);
            let is: Vec<f64> = TRADEOFF_PAIRS.iter().map(|p| p.0 as f64).collect();
            let pts = pt_grid(req, -30.0, 50.0);
            for &(i, q) in &TRADEOFF_PAIRS {
                for &pt in &pts {
                    let c = cfg.with_pt_dbm(pt);
                    let labels = [("se", "general"), ("ee", "general")];
                    b.mc_cell(vec![i as f64, pt], &c, c.y_margin(), &labels, |d| {
                        let se = se_general(d, &c, i, q)?.total_se;
                        Ok(vec![se, energy_efficiency(se, i, &c, P_RF_WATTS)])
                    })?;
                }
            }
            vec![axis("i_users", &is), axis("pt_dbm", &pts)]
        }
        Scenario::Figure(Figure::Spacing) => {
            let pts = [0.0, 40.0];
            let ds = grid(0.25, 8.0, 0.25);
            for &pt in &pts {
                for &d in &ds {
                    let c = base.with_d(d).with_pt_dbm(pt);
                    b.mc_cell(vec![pt, d], &c, c.y_margin(), &DISTRIBUTED_LABELS, |drop| {
                        distributed_family(drop, &c)
                    })?;
                }
            }
            vec![axis("pt_dbm", &pts), axis("d_m", &ds)]
        }
        Scenario::Figure(Figure::Beamformer) => {
            let ds = [1.0, 2.0, 4.0];
            let pts = pt_grid(req, -10.0, 60.0);
            let labels = [
                ("se", "mrt"),
                ("se", "zf"),
                ("se", "zf-closed"),
                ("zf_rejected", "zf"),
            ];
            for &d in &ds {
                for &pt in &pts {
                    let c = base.with_d(d).with_pt_dbm(pt);
                    b.mc_cell(vec![d, pt], &c, c.y_margin(), &labels, |drop| {
                        let placement = distributed_nearest(drop, &c)?;
                        let m = exact_mrt(drop, &placement, &c)?;
                        Ok(match exact_zf(drop, &c)? {
                            Some((z, zc)) => vec![m, z, zc, 0.0],
                            None => vec![m, f64::NAN, f64::NAN, 1.0],
                        })
                    })?;
                    // Rejections are reported as a count, not an average.
                    let cell = b.cells.last_mut().expect("cell just pushed");
                    let rec = &mut cell.records[3];
                    rec.value *= req.drops as f64;
                    rec.value = rec.value.round();
                    rec.stderr = 0.0;
                }
            }
            vec![axis("d_m", &ds), axis("pt_dbm", &pts)]
        }
        Scenario::Figure(Figure::Placement) => {
            let ns = [5.0, 15.0];
            let pts = pt_grid(req, -10.0, 60.0);
            let labels = [
                ("se", "inphase"),
                ("se", "equal-spacing"),
                ("se", "equal-spacing-magnitude"),
                ("se", "nearest-ref"),
                ("se", "random-ref"),
            ];
            for &n in &ns {
                let n_pas = n as usize;
                for &pt in &pts {
                    let c = base.with_n(n_pas).with_pt_dbm(pt);
                    b.mc_cell(vec![n, pt], &c, c.y_margin_for(n_pas), &labels, |drop| {
                        let eq = se_equal_spacing(drop, &c, n_pas)?;
                        let nearest = distributed_nearest(drop, &c)?;
                        let random = random_reference(drop, derive_seed(drop.seed, 1), &c)?;
                        Ok(vec![
                            se_centralized_exact(drop, &c, n_pas)?.total_se,
                            eq.coherent.total_se,
                            eq.literal.total_se,
                            exact_mrt(drop, &nearest, &c)?,
                            exact_mrt(drop, &random, &c)?,
                        ])
                    })?;
                }
            }
            vec![axis("n", &ns), axis("pt_dbm", &pts)]
        }
        Scenario::Figure(Figure::Sensitivity) => {
            let cfg = base.with_n(15);
            let pts = [0.0, 40.0];
            let is: Vec<f64> = (1..=15).map(|v| v as f64).collect();
            for &pt in &pts {
                let c = cfg.with_pt_dbm(pt);
                for &i in &is {
                    for &q in &is {
                        let (iu, qu) = (i as usize, q as usize);
                        b.mc_cell(vec![pt, i, q], &c, c.y_margin(), &[("se", "general")], |d| {
                            Ok(vec![se_general_any(d, &c, iu, qu)?.total_se])
                        })?;
                    }
                }
            }
            vec![axis("pt_dbm", &pts), axis("i_users", &is), axis("q_pas", &is)]
        }
        Scenario::Custom(cs) => {
            let xs = grid(cs.from, cs.to, cs.step);
            let labels = [
                ("se", "centralized"),
                ("se", "mrt-exact"),
                ("se", "zf"),
                ("se", "approx"),
                ("se", "upper"),
                ("se", "lower"),
            ];
            for &x in &xs {
                let c = match cs.axis {
                    SweepAxis::PtDbm => base.with_pt_dbm(x),
                    SweepAxis::DMeters => base.with_d(x),
                };
                c.validate()?;
                b.mc_cell(vec![x], &c, c.y_margin(), &labels, |drop| {
                    let mut v = vec![se_centralized_exact(drop, &c, c.n)?.total_se];
                    let family = distributed_family(drop, &c)?;
                    v.push(family[0]);
                    v.push(exact_zf(drop, &c)?.map_or(f64::NAN, |z| z.0));
                    v.extend_from_slice(&family[1..]);
                    Ok(v)
                })?;
            }
            vec![axis(cs.axis.name(), &xs)]
        }
    };
    Ok(SweepTable {
        axes,
        cells: b.cells,
        request: *req,
    })
}

/// Outcome of one qualitative assertion about a finished table.
#[derive(Debug, Clone, PartialEq)]
pub struct Check {
    pub name: String,
    pub passed: bool,
    pub detail: String,
}

fn check(name: &str, passed: bool, detail: String) -> Check {
    Check {
        name: name.into(),
        passed,
        detail,
    }
}

fn values(series: &[(f64, f64)]) -> Vec<f64> {
    series.iter().map(|p| p.1).collect()
}

fn strictly_increasing(v: &[f64]) -> bool {
    v.windows(2).all(|w| w[1] > w[0])
}

fn strictly_decreasing(v: &[f64]) -> bool {
    v.windows(2).all(|w| w[1] < w[0])
}

fn argmax(series: &[(f64, f64)]) -> f64 {
    series
        .iter()
        .copied()
        .fold((f64::NAN, f64::NEG_INFINITY), |best, p| if p.1 > best.1 { p } else { best })
        .0
}

/// Qualitative trends each figure is expected to show.
pub fn post_run_checks(table: &SweepTable) -> Vec<Check> {
    let Scenario::Figure(fig) = table.request.scenario else {
        return Vec::new();
    };
    match fig {
        Figure::ApproxVsSim => {
            let sim = table.series(&[], "se", "mrt-exact");
            let approx = table.series(&[], "se", "approx");
            let upper = values(&table.series(&[], "se", "upper"));
            let lower = values(&table.series(&[], "se", "lower"));
            let squeeze = (0..sim.len()).all(|j| {
                lower[j] <= approx[j].1 * (1.0 + 1e-12) && approx[j].1 <= upper[j] * (1.0 + 1e-12)
            });
            let n = upper.len();
            let (du, dl) = if n >= 2 {
                (upper[n - 1] - upper[n - 2], lower[n - 1] - lower[n - 2])
            } else {
                (0.0, 0.0)
            };
            let rel_gaps: Vec<(f64, f64)> = sim
                .iter()
                .zip(&approx)
                .map(|(s, a)| (s.0, (a.1 - s.1).abs() / s.1))
                .collect();
            let worst_low = rel_gaps
                .iter()
                .filter(|g| g.0 <= 30.0)
                .fold(0.0f64, |m, g| m.max(g.1));
            let high: Vec<f64> = sim
                .iter()
                .zip(&approx)
                .filter(|(s, _)| s.0 >= 30.0)
                .map(|(s, a)| (a.1 - s.1).abs())
                .collect();
            vec![
                check("bounds squeeze the approximation", squeeze, String::new()),
                check(
                    "upper bound strictly increasing",
                    strictly_increasing(&upper),
                    format!("{upper:?}"),
                ),
                check(
                    "lower bound saturates",
                    dl.abs() < 0.05 * du,
                    format!("last-step increments: lower {dl}, upper {du}"),
                ),
                check(
                    "approximation within 5% of simulation for P_t <= 30 dBm",
                    worst_low <= 0.05,
                    format!("worst relative gap {worst_low}"),
                ),
                check(
                    "gap widens above 30 dBm",
                    high.windows(2).all(|w| w[1] >= w[0]),
                    format!("{high:?}"),
                ),
            ]
        }
        Figure::Tradeoff => {
            let is: Vec<f64> = TRADEOFF_PAIRS.iter().map(|p| p.0 as f64).collect();
            let pts = &table.axes[1].values;
            let (lo, hi) = (pts[0], pts[pts.len() - 1]);
            let best_at = |metric: &str, pt: f64| {
                is.iter()
                    .copied()
                    .max_by(|a, b| {
                        let va = table.value(&[*a, pt], metric, "general").unwrap_or(f64::NAN);
                        let vb = table.value(&[*b, pt], metric, "general").unwrap_or(f64::NAN);
                        va.total_cmp(&vb)
                    })
                    .unwrap_or(f64::NAN)
            };
            let peaks: Vec<f64> = is
                .iter()
                .map(|&i| argmax(&table.series(&[i], "ee", "general")))
                .collect();
            vec![
                check(
                    "I = 15 has the highest SE at the top power",
                    best_at("se", hi) == 15.0,
                    format!("best I at {hi} dBm: {}", best_at("se", hi)),
                ),
                check(
                    "I = 1 has the highest EE at the lowest power",
                    best_at("ee", lo) == 1.0,
                    format!("best I at {lo} dBm: {}", best_at("ee", lo)),
                ),
                check(
                    "EE-maximising power grows with I",
                    peaks.windows(2).all(|w| w[1] >= w[0]) && peaks[peaks.len() - 1] > peaks[0],
                    format!("argmax P_t per I: {peaks:?}"),
                ),
            ]
        }
        Figure::Spacing => {
            let mut out = Vec::new();
            for pt in [0.0, 40.0] {
                let upper = values(&table.series(&[pt], "se", "upper"));
                let lower = values(&table.series(&[pt], "se", "lower"));
                out.push(check(
                    &format!("upper bound decreasing in d at {pt} dBm"),
                    strictly_decreasing(&upper),
                    String::new(),
                ));
                out.push(check(
                    &format!("lower bound increasing in d at {pt} dBm"),
                    strictly_increasing(&lower),
                    String::new(),
                ));
            }
            let sim = table.series(&[0.0], "se", "mrt-exact");
            let upper = table.series(&[0.0], "se", "upper");
            let worst = sim
                .iter()
                .zip(&upper)
                .filter(|(s, _)| s.0 >= 1.0)
                .fold(0.0f64, |m, (s, u)| m.max((u.1 - s.1) / u.1));
            out.push(check(
                "exact SE within 5% of the upper bound at 0 dBm for d >= 1 m",
                worst <= 0.05,
                format!("worst shortfall {worst}"),
            ));
            out
        }
        Figure::Beamformer => {
            let mrt2 = table.series(&[2.0], "se", "mrt");
            let zf2 = table.series(&[2.0], "se", "zf");
            let mrt_wins = mrt2
                .iter()
                .zip(&zf2)
                .filter(|(m, _)| m.0 <= 30.0)
                .all(|(m, z)| m.1 >= z.1);
            let mrt1 = table.series(&[1.0], "se", "mrt");
            let zf1 = table.series(&[1.0], "se", "zf");
            let last = mrt1.len() - 1;
            let lowest = |d: f64| table.series(&[d], "se", "mrt")[0].1;
            let mut closed_ok = true;
            for d in [1.0, 2.0, 4.0] {
                let z = table.series(&[d], "se", "zf");
                let zc = table.series(&[d], "se", "zf-closed");
                closed_ok &= z
                    .iter()
                    .zip(&zc)
                    .filter(|(a, _)| a.1.is_finite())
                    .all(|(a, b)| (a.1 - b.1).abs() <= 1e-9 * b.1.abs().max(1e-300));
            }
            vec![
                check(
                    "MRT >= ZF at d = 2 m for P_t <= 30 dBm",
                    mrt_wins,
                    String::new(),
                ),
                check(
                    "ZF >= MRT at d = 1 m, top power",
                    zf1[last].1 >= mrt1[last].1,
                    format!("zf {} mrt {}", zf1[last].1, mrt1[last].1),
                ),
                check(
                    "larger d lowers low-power MRT SE",
                    lowest(4.0) < lowest(2.0) && lowest(2.0) < lowest(1.0),
                    format!("{} {} {}", lowest(1.0), lowest(2.0), lowest(4.0)),
                ),
                check("ZF closed form matches exact SE", closed_ok, String::new()),
            ]
        }
        Figure::Placement => {
            let mut inphase = true;
            let mut nearest = true;
            for n in [5.0, 15.0] {
                let ip = table.series(&[n], "se", "inphase");
                let eq = table.series(&[n], "se", "equal-spacing");
                inphase &= ip.iter().zip(&eq).all(|(a, b)| a.1 > b.1);
                let nr = table.series(&[n], "se", "nearest-ref");
                let rr = table.series(&[n], "se", "random-ref");
                nearest &= nr.iter().zip(&rr).all(|(a, b)| a.1 > b.1);
            }
            let eq5 = table.series(&[5.0], "se", "equal-spacing");
            let eq15 = table.series(&[15.0], "se", "equal-spacing");
            vec![
                check("in-phase beats equal spacing", inphase, String::new()),
                check("nearest reference beats random reference", nearest, String::new()),
                check(
                    "equal-spacing SE lower with 15 antennas than with 5",
                    eq5.iter().zip(&eq15).all(|(a, b)| b.1 < a.1),
                    String::new(),
                ),
            ]
        }
        Figure::Sensitivity => {
            let n = 15usize;
            let grid_at = |pt: f64| -> Vec<Vec<f64>> {
                (1..=n)
                    .map(|i| {
                        (1..=n)
                            .map(|q| {
                                table
                                    .value(&[pt, i as f64, q as f64], "se", "general")
                                    .unwrap_or(f64::NAN)
                            })
                            .collect()
                    })
                    .collect()
            };
            let mut out = Vec::new();
            let mut q_spread = Vec::new();
            for pt in [0.0, 40.0] {
                let g = grid_at(pt);
                let mut di = 0.0;
                let mut dq = 0.0;
                for i in 0..n {
                    for q in 0..n {
                        if i + 1 < n {
                            di += (g[i + 1][q] - g[i][q]).abs();
                        }
                        if q + 1 < n {
                            dq += (g[i][q + 1] - g[i][q]).abs();
                        }
                    }
                }
                out.push(check(
                    &format!("SE more sensitive to I than to Q at {pt} dBm"),
                    di > dq,
                    format!("total |dSE| along I {di}, along Q {dq}"),
                ));
                let spread = g
                    .iter()
                    .map(|row| {
                        let max = row.iter().copied().fold(f64::NEG_INFINITY, f64::max);
                        let min = row.iter().copied().fold(f64::INFINITY, f64::min);
                        (max - min) / max
                    })
                    .sum::<f64>()
                    / n as f64;
                q_spread.push(spread);
            }
            out.push(check(
                "relative sensitivity to Q smaller at 40 dBm than at 0 dBm",
                q_spread[1] < q_spread[0],
                format!("mean relative spread over Q: {q_spread:?}"),
            ));
            out
        }
    }
}

/// EE-maximising transmit power (dBm) on a grid, per `(I, Q)` pair, from the
/// Monte-Carlo mean EE.
pub fn ee_peak_power(
    cfg: &SystemConfig,
    pairs: &[(usize, usize)],
    pts_dbm: &[f64],
    drops: usize,
    seed: u64,
) -> Result<Vec<f64>> {
    pairs
        .iter()
        .map(|&(i, q)| {
            let mut best = (f64::NAN, f64::NEG_INFINITY);
            for &pt in pts_dbm {
                let c = cfg.with_pt_dbm(pt);
                let ee = mc_collect_with(
                    |s| sample_users_with_margin(&c, s, true, c.y_margin()),
                    |_, d| Ok(energy_efficiency(se_general(d, &c, i, q)?.total_se, i, &c, P_RF_WATTS)),
                    drops,
                    seed,
                )?;
                let mean = McEstimate::from_samples(&ee).mean;
                if mean > best.1 {
                    best = (pt, mean);
                }
            }
            Ok(best.0)
        })
        .collect()
}
