//! One function per subcommand: build the model from the config, run the
//! library, and collect tables, assertions and extra facts for the manifest.

use std::path::PathBuf;

use serde_json::{json, Value};

use qspin::droplets::{self, WidthMatch};
use qspin::dynamics;
use qspin::hilbert::{SectorBasis, SectorLabel, SpinMatrices};
use qspin::lattice::{SpinGraph, TwiceSpin};
use qspin::linalg::real;
use qspin::models::{self, Boundary, Interaction, XxzParams};
use qspin::perturbation;
use qspin::spectral::{self, LanczosOptions, Levels};
use qspin::ssep;
use qspin::symmetry::{self, CasimirKind, SpinResolvedLevels};

use crate::config::{Command, ConfigError, ModelKind, RunConfig};
use crate::table::{Cell, Table};

/// Largest Hilbert space compared against a full diagonalization.
pub const FULL_CHECK_DIM: usize = 1024;
/// Largest exclusion graph for the spin-chain conjugacy check.
pub const CONJUGACY_MAX_VERTICES: usize = 12;

#[derive(Clone, Debug, PartialEq)]
pub struct Assertion {
    pub name: String,
    pub passed: bool,
    pub detail: String,
}

/// Everything a run produced, before anything is written.
#[derive(Clone, Debug, Default)]
pub struct Outcome {
    /// `(suffix, table)`; the empty suffix is the main output, others are
    /// written next to it as `<stem>_<suffix>.<ext>`.
    pub tables: Vec<(String, Table)>,
    pub assertions: Vec<Assertion>,
    pub facts: Vec<(String, Value)>,
}

impl Outcome {
    fn check(&mut self, name: &str, passed: bool, detail: impl Into<String>) {
        self.assertions.push(Assertion { name: name.into(), passed, detail: detail.into() });
    }

    fn fact(&mut self, key: &str, value: Value) {
        self.facts.push((key.into(), value));
    }

    pub fn all_passed(&self) -> bool {
        self.assertions.iter().all(|a| a.passed)
    }
}

#[derive(Debug)]
pub enum RunError {
    Config(ConfigError),
    Solver(qspin::Error),
    Write(PathBuf, std::io::Error),
}

impl From<qspin::Error> for RunError {
    fn from(e: qspin::Error) -> Self {
        RunError::Solver(e)
    }
}

impl From<ConfigError> for RunError {
    fn from(e: ConfigError) -> Self {
        RunError::Config(e)
    }
}

fn config_error(key: &str, message: impl Into<String>) -> RunError {
    RunError::Config(ConfigError { origin: None, key: Some(key.into()), message: message.into() })
}

/// A model ready to run, with the graph that supplies distances.
pub struct Model {
    pub phi: Interaction,
    pub graph: SpinGraph,
    pub xxz: Option<XxzParams>,
}

fn read_graph(cfg: &RunConfig) -> Result<Option<SpinGraph>, RunError> {
    let Some(path) = &cfg.model.graph else { return Ok(None) };
    SpinGraph::from_file(path).map(Some).map_err(|e| match e {
        qspin::Error::Parse { line, message } => RunError::Config(ConfigError {
            origin: Some(crate::config::Origin::File { path: path.clone(), line }),
            key: Some("graph".into()),
            message,
        }),
        other => config_error("graph", other.to_string()),
    })
}

fn chain(cfg: &RunConfig, l: usize, weight: f64, spin: TwiceSpin) -> Result<SpinGraph, RunError> {
    let g = if cfg.model.periodic { SpinGraph::ring(l, weight) } else { SpinGraph::path(l, weight) };
    g.map(|g| g.with_uniform_spin(spin)).map_err(|e| config_error("L", e.to_string()))
}

/// Builds the configured model, with the chain length replaced by `l`
/// for chain models.
pub fn build_model(cfg: &RunConfig, l: usize) -> Result<Model, RunError> {
    let m = &cfg.model;
    let file = read_graph(cfg)?;
    let spin = m.spin.unwrap_or(TwiceSpin::HALF);
    match m.model {
        ModelKind::Heisenberg => {
            let graph = match file {
                Some(g) => g.scaled_weights(m.j)?,
                None => chain(cfg, l, m.j, spin)?,
            };
            Ok(Model { phi: models::heisenberg(&graph), graph, xxz: None })
        }
        ModelKind::Custom => {
            let graph = file.expect("validated: custom has a graph").scaled_weights(m.j)?;
            Ok(Model { phi: models::ising(&graph), graph, xxz: None })
        }
        ModelKind::Aklt => {
            if file.is_some() {
                return Err(config_error("graph", "the AKLT model is a chain; give L and boundary"));
            }
            let graph = chain(cfg, l, 1.0, TwiceSpin::ONE)?;
            let mut phi = models::aklt(l, m.periodic)?;
            if m.j != 1.0 {
                phi = phi.scaled(m.j);
            }
            Ok(Model { phi, graph, xxz: None })
        }
        ModelKind::XxzOpen | ModelKind::XxzPeriodic => {
            if file.is_some() {
                return Err(config_error("graph", "XXZ models are chains; give L"));
            }
            if m.spin.is_some_and(|s| s != TwiceSpin::HALF) {
                return Err(config_error("spin", "XXZ chains are spin 1/2"));
            }
            let boundary = if m.model == ModelKind::XxzOpen { Boundary::OpenWithField } else { Boundary::Periodic };
            let p = XxzParams::from_q(l, cfg.xxz_q(), m.j, boundary)?;
            let graph = if boundary == Boundary::Periodic { SpinGraph::ring(l, 1.0)? } else { SpinGraph::path(l, 1.0)? };
            Ok(Model { phi: models::xxz(&p), graph, xxz: Some(p) })
        }
    }
}

fn lanczos(cfg: &RunConfig) -> LanczosOptions {
    LanczosOptions { tol: cfg.solver.lanczos_tol, krylov: cfg.solver.krylov, max_restarts: cfg.solver.max_restarts, seed: cfg.solver.seed }
}

fn twice_m(label: Option<SectorLabel>) -> i64 {
    match label {
        Some(SectorLabel::Magnetization { twice_m }) => twice_m,
        _ => unreachable!("sector reports carry magnetization labels"),
    }
}

pub fn execute(cfg: &RunConfig) -> Result<Outcome, RunError> {
    cfg.validate()?;
    match cfg.command {
        Command::Spectrum => spectrum(cfg),
        Command::Foel => foel(cfg),
        Command::LiebMattis => lieb_mattis(cfg),
        Command::Ssep => exclusion(cfg),
        Command::Droplet => droplet(cfg),
        Command::Lightcone => lightcone(cfg),
        Command::Cluster => cluster(cfg),
        Command::Perturb => perturb(cfg),
    }
}

fn spectrum(cfg: &RunConfig) -> Result<Outcome, RunError> {
    let model = build_model(cfg, cfg.model.l)?;
    let space = model.phi.space()?;
    let mut out = Outcome::default();
    let reports = if cfg.run.levels == 0 {
        spectral::spectrum_by_sectors(&model.phi, &space)?
    } else {
        SectorBasis::all_magnetizations(&space)
            .iter()
            .map(|s| {
                let block = model.phi.assemble_in_sector(&space, s)?;
                Ok(spectral::block_spectrum(&block, Levels::Lowest(cfg.run.levels), false, lanczos(cfg))?.with_sector(s.label()))
            })
            .collect::<qspin::Result<Vec<_>>>()?
    };
    let mut table = Table::new(&["M", "index", "energy"]);
    for r in &reports {
        let m = twice_m(r.sector) as f64 / 2.0;
        for (k, &e) in r.eigenvalues.iter().enumerate() {
            table.push(vec![Cell::from(m), Cell::from(k), Cell::from(e)]);
        }
    }
    let dims: usize = SectorBasis::all_magnetizations(&space).iter().map(|s| s.len()).sum();
    out.check("sector_dims_sum_to_total", dims == space.total_dim(), format!("{dims} of {}", space.total_dim()));
    if cfg.run.levels == 0 {
        let mut merged: Vec<f64> = reports.iter().flat_map(|r| r.eigenvalues.clone()).collect();
        merged.sort_by(f64::total_cmp);
        if space.total_dim() <= FULL_CHECK_DIM {
            let full = spectral::full_spectrum(&model.phi.assemble(&space)?, false)?.eigenvalues;
            let dev = merged.iter().zip(&full).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
            let scale = full.iter().fold(1.0f64, |a, e| a.max(e.abs()));
            out.check("sector_union_equals_full_spectrum", merged.len() == full.len() && dev <= cfg.solver.tol * scale, format!("max deviation {dev:e}"));
        }
        let report = spectral::SpectrumReport { eigenvalues: merged, eigenvectors: None, sector: None, residuals: vec![] };
        if let Ok(gap) = spectral::spectral_gap(&report, cfg.solver.degeneracy_tol) {
            out.fact("ground_energy", json!(gap.ground_energy));
            out.fact("ground_degeneracy", json!(gap.ground_degeneracy));
            out.fact("gap", json!(gap.gap));
        }
    }
    out.fact("dimension", json!(space.total_dim()));
    out.tables.push((String::new(), table));
    Ok(out)
}

fn levels_table(levels: &SpinResolvedLevels) -> Table {
    let mut t = Table::new(&["S", "E_min", "E_max", "multiplets"]);
    for (&ts, lv) in &levels.entries {
        t.push(vec![Cell::from(ts as f64 / 2.0), Cell::from(lv.min_energy), Cell::from(lv.max_energy), Cell::from(lv.multiplets)]);
    }
    t
}

fn foel(cfg: &RunConfig) -> Result<Outcome, RunError> {
    let model = build_model(cfg, cfg.model.l)?;
    let kind = match cfg.model.model {
        ModelKind::Heisenberg => CasimirKind::Su2,
        ModelKind::XxzOpen => CasimirKind::Suq(cfg.xxz_q()),
        other => return Err(config_error("model", format!("foel needs heisenberg or xxz_open, got {}", other.name()))),
    };
    let space = model.phi.space()?;
    let mut out = Outcome::default();
    let levels = symmetry::classify_total_spin(&model.phi, &space, kind)?;
    let verdict = symmetry::foel_check(&levels)?;
    let reports = spectral::spectrum_by_sectors(&model.phi, &space)?;
    let e0 = reports.iter().map(|r| r.eigenvalues[0]).fold(f64::INFINITY, f64::min);
    let mut table = Table::new(&["S3", "energy_minus_E0"]);
    for r in &reports {
        let m = twice_m(r.sector) as f64 / 2.0;
        for &e in &r.eigenvalues {
            table.push(vec![Cell::from(m), Cell::from(e - e0)]);
        }
    }
    out.check("foel", verdict.holds, format!("margin {:e}", verdict.margin));
    let top = levels.twice_s_max;
    let merged = spectral::SpectrumReport { eigenvalues: reports.iter().flat_map(|r| r.eigenvalues.clone()).collect(), eigenvectors: None, sector: None, residuals: vec![] };
    if let (Ok(gap), Some(e_top), Some(e_next)) = (spectral::spectral_gap(&merged, cfg.solver.degeneracy_tol), levels.energy(top), levels.energy(top - 2)) {
        let diff = e_next - e_top;
        out.check("gap_equals_top_spin_difference", (gap.gap - diff).abs() <= cfg.solver.tol, format!("gap {:e}, E(S_max - 1) - E(S_max) {:e}", gap.gap, diff));
        out.fact("gap", json!(gap.gap));
    }
    if cfg.model.model == ModelKind::Heisenberg && cfg.model.graph.is_none() {
        let from = levels.twice_s_min().unwrap_or(0) + 2;
        let v = symmetry::top_levels_check(&levels, from)?;
        out.check("top_levels_decrease_in_S", v.holds, format!("largest eigenvalue per S strictly decreasing from S = {}, margin {:e}", from as f64 / 2.0, v.margin));
    }
    out.fact("foel_margin", json!(verdict.margin));
    out.fact("max_casimir_residual", json!(levels.max_residual()));
    out.fact("dimension", json!(space.total_dim()));
    out.tables.push((String::new(), table));
    out.tables.push(("levels".into(), levels_table(&levels)));
    Ok(out)
}

fn lieb_mattis(cfg: &RunConfig) -> Result<Outcome, RunError> {
    if cfg.model.model != ModelKind::Heisenberg {
        return Err(config_error("model", "liebmattis uses the Heisenberg couplings of the graph"));
    }
    if !(cfg.model.j > 0.0) {
        return Err(config_error("J", "edges are antiferromagnetic bonds of strength J, so J must be positive"));
    }
    let graph = match read_graph(cfg)? {
        Some(g) => g.scaled_weights(cfg.model.j)?,
        None => chain(cfg, cfg.model.l, cfg.model.j, cfg.model.spin.unwrap_or(TwiceSpin::HALF))?,
    };
    let report = symmetry::lieb_mattis_check(&graph, &[])?;
    let mut out = Outcome::default();
    out.check("lieb_mattis", report.verdict.holds, format!("margin {:e}", report.verdict.margin));
    out.check("ground_at_predicted_spin", report.ground_at_predicted_spin, format!("S = {}", report.twice_s_ground as f64 / 2.0));
    out.fact("lieb_mattis_margin", json!(report.verdict.margin));
    out.tables.push((String::new(), levels_table(&report.levels)));
    Ok(out)
}

fn exclusion(cfg: &RunConfig) -> Result<Outcome, RunError> {
    let graph = match read_graph(cfg)? {
        Some(g) => g,
        None => chain(cfg, cfg.model.l, 1.0, TwiceSpin::HALF)?,
    };
    let report = ssep::ssep_gaps(&graph)?;
    let mut out = Outcome::default();
    let lambda1 = report.gaps[0].lambda;
    let mut table = Table::new(&["n", "dim", "lambda_n", "aldous_margin"]);
    for g in &report.gaps {
        table.push(vec![Cell::from(g.n), Cell::from(g.dim), Cell::from(g.lambda), Cell::from((g.lambda - lambda1).abs())]);
    }
    let is_path = graph.edges().len() + 1 == graph.num_vertices() && (0..graph.num_vertices()).all(|x| graph.neighbors(x).len() <= 2);
    out.check("aldous_identity", report.aldous_margin <= cfg.solver.tol, format!("max_n |lambda(n) - lambda(1)| = {:e}", report.aldous_margin));
    let defect = report.gaps.iter().map(|g| g.stationary_defect).fold(0.0, f64::max);
    out.check("uniform_measure_is_stationary", defect <= cfg.solver.tol, format!("max |L 1| = {defect:e}"));
    if graph.num_vertices() <= CONJUGACY_MAX_VERTICES {
        let c = ssep::xxx_conjugacy_check(&graph, f64::INFINITY)?;
        out.check("xxx_conjugacy", c.max_deviation <= cfg.solver.tol, format!("max eigenvalue deviation {:e}", c.max_deviation));
    }
    out.fact("aldous_margin", json!(report.aldous_margin));
    out.fact(
        "aldous_status",
        json!(if is_path { "path graph: the identity follows from ferromagnetic ordering of the XXX chain" } else { "general graph: reported as data; the identity is conjectural here" }),
    );
    out.tables.push((String::new(), table));
    Ok(out)
}

fn droplet(cfg: &RunConfig) -> Result<Outcome, RunError> {
    let q = cfg.xxz_q();
    let n = cfg.run.n;
    let ls: Vec<usize> = (cfg.run.l_min.max(3)..=cfg.run.l_max).filter(|&l| l >= n).collect();
    if ls.is_empty() {
        return Err(config_error("Lmax", "no chain length in Lmin..=Lmax can hold the droplet"));
    }
    let table = droplets::convergence_table(q, n, &ls)?;
    let mut out = Outcome::default();
    let mut t = Table::new(&["q", "n", "L", "E_L_periodic", "E_open_suq", "E_formula", "abs_dev", "band_width_measured", "band_width_formula"]);
    for r in &table.rows {
        t.push(vec![
            Cell::from(q),
            Cell::from(n),
            Cell::from(r.l),
            Cell::from(r.e_periodic),
            Cell::from(r.e_open),
            Cell::from(table.formula_e),
            Cell::from(r.abs_dev),
            Cell::from(r.band_width),
            Cell::from(table.formula_width),
        ]);
    }
    let last = table.largest().expect("nonempty");
    if n == 1 {
        let worst = table.rows.iter().map(|r| r.abs_dev).fold(0.0, f64::max);
        out.check("one_magnon_exact", worst <= cfg.solver.tol, format!("max_L |E_L(1) - E(1)| = {worst:e}"));
        let exact = 4.0 * q / (1.0 + q * q);
        let even: Vec<f64> = table.rows.iter().filter(|r| r.l % 2 == 0).filter_map(|r| r.band_width).collect();
        if !even.is_empty() {
            let dev = even.iter().map(|w| (w - exact).abs()).fold(0.0, f64::max);
            out.check("one_magnon_band_width", dev <= cfg.solver.tol, format!("max over even L of |width - 4q/(1+q^2)| = {dev:e}"));
        }
    }
    out.check("convergence_at_Lmax", last.abs_dev < cfg.run.conv_tol, format!("|E_L(n) - E(n)| = {:e} at L = {}", last.abs_dev, last.l));
    if let Some(dev) = table.open_deviation() {
        out.check("open_chain_convergence", dev < cfg.run.open_tol, format!("|E(H_L, S_max - n) - E(n)| = {dev:e}"));
    }
    out.fact("E_formula", json!(table.formula_e));
    if n > 0 {
        let printed = table.formula_width.unwrap();
        let over_delta = table.formula_width_over_delta.unwrap();
        out.fact("band_width_printed", json!(printed));
        out.fact("band_width_printed_over_delta", json!(over_delta));
        out.fact("band_width_printed_over_one_plus_q2", json!(droplets::bandwidth_formula_corrected(q, n)?));
        out.fact("band_width_measured_at_Lmax", json!(last.band_width));
        out.fact("band_width_winner", json!(table.winner().map(WidthMatch::as_str)));
    }
    out.fact("deviation_monotone_from_L", json!(table.monotone_from(cfg.solver.tol)));
    out.tables.push((String::new(), t));
    Ok(out)
}

/// Evenly spaced grid `start + k step`, inclusive of the end up to
/// rounding; values within `1e-9 step` of zero are set to zero exactly.
pub fn grid(start: f64, end: f64, step: f64) -> Vec<f64> {
    let count = ((end - start) / step + 1e-9).floor() as usize;
    (0..=count)
        .map(|k| {
            let x = start + k as f64 * step;
            if x.abs() < 1e-9 * step {
                0.0
            } else {
                x
            }
        })
        .collect()
}

fn normalized_s3(spin: TwiceSpin) -> qspin::linalg::CMatrix {
    SpinMatrices::new(spin).s3 * real(1.0 / spin.value())
}

fn lightcone(cfg: &RunConfig) -> Result<Outcome, RunError> {
    let model = build_model(cfg, cfg.model.l)?;
    let v = model.graph.num_vertices();
    let site = cfg.run.site.unwrap_or(v / 2);
    if site >= v {
        return Err(config_error("site", format!("vertex {site} outside 0..{v}")));
    }
    let b = normalized_s3(model.graph.spin(site));
    let times = grid(0.0, cfg.run.tmax, cfg.run.dt);
    let g = dynamics::lightcone(&model.phi, &model.graph, &[site], &b, &times, cfg.run.lambda)?;
    let tol = cfg.solver.tol;
    let mut out = Outcome::default();
    let mut t = Table::new(&["x", "t", "measured", "bound_thm1", "bound_corollary"]);
    let mut worst_thm: f64 = f64::NEG_INFINITY;
    let mut worst_cor: f64 = f64::NEG_INFINITY;
    let mut violations = 0;
    for r in &g.rows {
        t.push(vec![Cell::from(r.x), Cell::from(r.t), Cell::from(r.measured), Cell::from(r.bound_thm1), Cell::from(r.bound_corollary)]);
        if r.measured > r.bound_thm1 * (1.0 + tol) + tol {
            violations += 1;
        }
        worst_thm = worst_thm.max(r.measured - r.bound_thm1);
        if let Some(c) = r.bound_corollary {
            worst_cor = worst_cor.max(r.measured - c * (1.0 + tol) - tol);
        }
    }
    out.check("theorem_bound_holds", violations == 0, format!("{violations} violations; max(measured - bound) = {worst_thm:e}"));
    out.check("corollary_bound_holds", worst_cor <= 0.0, format!("max(measured - bound) = {worst_cor:e}"));
    let outside = g.rows.iter().filter(|r| r.t == 0.0 && r.x != site).map(|r| r.measured).fold(0.0, f64::max);
    out.check("zero_at_t0_outside_support", outside <= tol, format!("max at t = 0 = {outside:e}"));
    out.fact("phi_norm_lambda", json!(g.phi_norm));
    out.fact("site", json!(site));
    out.tables.push((String::new(), t));
    Ok(out)
}

fn cluster(cfg: &RunConfig) -> Result<Outcome, RunError> {
    let model = build_model(cfg, cfg.model.l)?;
    let spin = model.graph.spin(0);
    if model.graph.spins().iter().any(|&s| s != spin) {
        return Err(config_error("graph", "cluster needs a uniform spin"));
    }
    let obs = SpinMatrices::new(spin).s3;
    let r = dynamics::clustering_report(&model.phi, &model.graph, &obs, cfg.run.lambda, cfg.run.b_points, lanczos(cfg))?;
    let tol = cfg.solver.tol;
    let mut out = Outcome::default();
    let mut t = Table::new(&["x", "y", "d", "b", "corr_abs", "bound_decay", "gamma", "mu"]);
    for row in &r.rows {
        t.push(vec![
            Cell::from(row.x),
            Cell::from(row.y),
            Cell::from(row.d),
            Cell::from(row.b),
            Cell::from(row.corr_abs),
            Cell::from(row.bound_decay),
            Cell::from(r.gamma),
            Cell::from(r.mu),
        ]);
    }
    out.check("unique_gapped_ground_state", r.gamma > 0.0, format!("gamma = {:e}", r.gamma));
    out.check("decay_bound_holds_beyond_d1", r.violations == 0, format!("{} violations with c = {:e}", r.violations, r.c_fit));
    out.check("zero_b_identity", r.zero_b_deviation <= tol, format!("max deviation {:e}", r.zero_b_deviation));
    out.check("large_b_bound", r.large_b_holds(), "|corr| <= |A||B| exp(-gamma b)");
    out.fact("c_fit", json!(r.c_fit));
    out.fact("phi_norm_lambda", json!(r.phi_norm));
    out.fact("large_b", json!(r.large_b.iter().map(|&(b, c, bound)| json!({"b": b, "max_corr_abs": c, "bound": bound})).collect::<Vec<_>>()));
    out.tables.push((String::new(), t));
    Ok(out)
}

fn perturb(cfg: &RunConfig) -> Result<Outcome, RunError> {
    if cfg.model.graph.is_some() || cfg.model.model == ModelKind::Custom {
        return Err(config_error("graph", "perturb sweeps chain models over L"));
    }
    let ls = if cfg.run.ls.is_empty() { vec![cfg.model.l] } else { cfg.run.ls.clone() };
    let lambdas = grid(cfg.run.lambda_min, cfg.run.lambda_max, cfg.run.lambda_step);
    if !lambdas.contains(&0.0) {
        return Err(config_error("lambda_min", "the coupling grid must contain 0"));
    }
    for &l in &ls {
        build_model(cfg, l)?;
    }
    let family = |l: usize| -> qspin::Result<(Interaction, Interaction)> {
        let model = build_model(cfg, l).map_err(|e| match e {
            RunError::Solver(e) => e,
            other => qspin::Error::Domain(format!("{other:?}")),
        })?;
        let unit = if cfg.model.periodic { SpinGraph::ring(l, 1.0)? } else { SpinGraph::path(l, 1.0)? };
        let unit = unit.with_spins(model.graph.spins().to_vec())?;
        Ok((model.phi, models::ising(&unit).scaled(-1.0)))
    };
    let opts = lanczos(cfg);
    let sweep = perturbation::gap_sweep(family, &lambdas, &ls, opts)?;
    let tol = cfg.solver.tol;
    let mut out = Outcome::default();
    let mut t = Table::new(&["L", "lambda", "ground_energy", "degeneracy", "gap"]);
    for p in &sweep.points {
        t.push(vec![Cell::from(p.l), Cell::from(p.lambda), Cell::from(p.ground_energy), Cell::from(p.degeneracy), Cell::from(p.gap)]);
    }
    out.check("gap_positive", sweep.gap_positive(), "gap(lambda) > 0 on the whole grid");
    let wg = sweep.weyl_gap_excess().unwrap_or(f64::INFINITY);
    out.check("weyl_gap_estimate", wg <= tol, format!("max(|gap(l) - gap(0)| - 2|l| |sum Phi|) = {wg:e}"));
    let wl = sweep.weyl_level_excess().unwrap_or(f64::INFINITY);
    out.check("weyl_level_estimate", wl <= tol, format!("max(|E_i(l) - E_i(0)| - |l| |sum Phi|) = {wl:e}"));
    let ce = sweep.continuity_excess();
    out.check("gap_continuity", ce <= tol, format!("max excess {ce:e}"));
    let mut exact = true;
    for &l in &ls {
        let (base, _) = family(l)?;
        let space = base.space()?;
        let low = spectral::low_spectrum(&base, &space, spectral::DEGENERACY_TOL, opts)?;
        let p = sweep.point(l, 0.0).expect("grid holds 0");
        exact &= p.gap.to_bits() == low.gap.gap.to_bits() && p.ground_energy.to_bits() == low.gap.ground_energy.to_bits();
    }
    out.check("lambda0_matches_unperturbed", exact, "bitwise equal to an independent run on the unperturbed model");
    out.fact("perturbation_norms", json!(sweep.perturbation_norms.iter().map(|(l, v)| json!({"L": l, "norm": v})).collect::<Vec<_>>()));
    out.fact("stable_range", json!(sweep.stable_range().map(|(a, b)| [a, b])));
    out.fact("gap_trend", json!(sweep.gap_trend().iter().map(|&(l, g)| json!({"L": l, "gap": g})).collect::<Vec<_>>()));
    out.tables.push((String::new(), t));
    Ok(out)
}
