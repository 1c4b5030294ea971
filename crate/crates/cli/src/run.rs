//! Execution of an experiment: certificates, report files, plots and the
//! summary table.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use lightcone::lattice::{build_hamiltonian, build_n_particle_hamiltonian};
use lightcone::linalg::C64;
use lightcone::{
    certify_lca, certify_lrb, certify_mvb, certify_nbody, certify_otoc, certify_power_mvb, certify_state_lightcone,
    CertificationConfig, CertificationReport, DensityOperator, Execution, LatticeHamiltonian, LightconeError, Observable,
    Propagator, Region, RowStatus,
};
use nalgebra::{DMatrix, SymmetricEigen};
use serde::Serialize;

use crate::plot::{envelope_svg, front_svg, FrontMap};
use crate::spec::{Experiment, Settings, StateSpec, TheoremSpec};
use crate::Failure;

/// Command-line overrides of a run.
#[derive(Debug, Clone, Default)]
pub struct RunOptions {
    pub out_dir: Option<PathBuf>,
    pub seed_override: Option<u64>,
    pub execution: Execution,
}

/// One line of the summary table.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SummaryRow {
    pub name: String,
    pub theorem: String,
    pub rows: usize,
    pub pass: usize,
    pub vacuous: usize,
    pub fail: usize,
    pub checks_failed: usize,
    pub min_log_margin: Option<f64>,
    pub verdict: String,
}

impl SummaryRow {
    fn new(name: &str, r: &CertificationReport) -> Self {
        let count = |s: RowStatus| r.rows.iter().filter(|row| row.status == s).count();
        let min_log_margin = r
            .rows
            .iter()
            .filter(|row| row.status != RowStatus::VacuousBelowFloor)
            .filter_map(|row| row.log_margin)
            .reduce(f64::min);
        SummaryRow {
            name: name.to_string(),
            theorem: r.theorem.name().to_string(),
            rows: r.rows.len(),
            pass: count(RowStatus::Pass),
            vacuous: count(RowStatus::VacuousBelowFloor),
            fail: count(RowStatus::Fail),
            checks_failed: r.checks.iter().filter(|c| !c.passed).count(),
            min_log_margin,
            verdict: if r.passed() { "pass" } else { "fail" }.to_string(),
        }
    }
}

#[derive(Debug)]
pub struct RunOutcome {
    pub out_dir: PathBuf,
    pub reports: Vec<(String, CertificationReport)>,
    pub summary: Vec<SummaryRow>,
    pub files: Vec<PathBuf>,
}

impl RunOutcome {
    pub fn passed(&self) -> bool {
        self.reports.iter().all(|(_, r)| r.passed())
    }
}

pub fn summary_table(rows: &[SummaryRow]) -> String {
    let mut s = String::new();
    let _ = writeln!(
        s,
        "{:<20} {:<16} {:>5} {:>5} {:>8} {:>5} {:>7} {:>15}  verdict",
        "name", "theorem", "rows", "pass", "vacuous", "fail", "checks", "min log-margin"
    );
    for r in rows {
        let margin = r.min_log_margin.map_or("-".to_string(), |m| format!("{m:.4}"));
        let checks = if r.checks_failed == 0 { "ok".to_string() } else { format!("{} bad", r.checks_failed) };
        let _ = writeln!(
            s,
            "{:<20} {:<16} {:>5} {:>5} {:>8} {:>5} {:>7} {:>15}  {}",
            r.name, r.theorem, r.rows, r.pass, r.vacuous, r.fail, checks, margin, r.verdict
        );
    }
    s
}

pub fn summary_csv(rows: &[SummaryRow]) -> String {
    let mut s = String::from("name,theorem,rows,pass,vacuous,fail,checks_failed,min_log_margin,verdict\n");
    for r in rows {
        let margin = r.min_log_margin.map_or(String::new(), |m| m.to_string());
        let _ = writeln!(
            s,
            "{},{},{},{},{},{},{},{},{}",
            r.name, r.theorem, r.rows, r.pass, r.vacuous, r.fail, r.checks_failed, margin, r.verdict
        );
    }
    s
}

fn lc_failure(exp: &Experiment, line: Option<usize>, e: LightconeError) -> Failure {
    let code = match e {
        LightconeError::Resource(_) => 3,
        _ => 2,
    };
    let at = line.map_or(String::new(), |l| format!(":{l}"));
    Failure { code, message: format!("{}{at}: {e}", exp.path) }
}

fn io_failure(path: &Path, e: std::io::Error) -> Failure {
    Failure { code: 2, message: format!("cannot write {}: {e}", path.display()) }
}

fn config(settings: &Settings, seed: u64, execution: Execution) -> CertificationConfig {
    CertificationConfig {
        times: settings.times.clone(),
        mu_grid: settings.mu_grid.clone(),
        mu_points: settings.mu_points,
        epsilon: settings.epsilon,
        floor: settings.floor,
        seed,
        method: settings.method,
        execution,
        check_boundary: settings.check_boundary,
        ..CertificationConfig::default()
    }
}

fn state_for(
    exp: &Experiment,
    spec: &StateSpec,
    region: Option<&Region>,
    dim: usize,
    seed: u64,
) -> lightcone::Result<DensityOperator> {
    let whole = Region::whole(&exp.lattice);
    match spec {
        StateSpec::RandomMixed { rank, seed: s } => {
            DensityOperator::random_mixed(region.unwrap_or(&whole), dim, *rank, s.unwrap_or(seed.wrapping_add(100)))
        }
        StateSpec::Site { site } => {
            let idx = exp
                .lattice
                .index_of(site)
                .ok_or_else(|| LightconeError::Domain(format!("state site {site:?} lies outside the box")))?;
            let mut psi = vec![C64::new(0.0, 0.0); dim];
            psi[idx] = C64::new(1.0, 0.0);
            DensityOperator::pure(&psi, region.cloned())
        }
        StateSpec::MaximallyMixed => Ok(DensityOperator::maximally_mixed(dim)),
    }
}

fn observables(x: &Region, y: Option<&Region>, dim: usize, seed: u64) -> lightcone::Result<(Observable, Option<Observable>)> {
    let a = Observable::random_localized(x, dim, seed.wrapping_mul(2).wrapping_add(1))?;
    let b = y.map(|y| Observable::random_localized(y, dim, seed.wrapping_mul(2).wrapping_add(2))).transpose()?;
    Ok((a, b))
}

const FRONT_SLICES: usize = 48;
const FRONT_COLUMNS: usize = 240;

/// Heat map of `|ψ_t|` marginalized onto the first axis, for an initial state
/// given as weighted columns.
fn front_map(
    h: &LatticeHamiltonian,
    settings: &Settings,
    execution: Execution,
    block: &DMatrix<C64>,
    weights: &[f64],
) -> lightcone::Result<FrontMap> {
    let lattice = h.lattice();
    let p = Propagator::new(h.matrix(), settings.method, execution)?;
    let t_max = settings.times.iter().copied().fold(0.0, f64::max);
    let [lo, hi] = lattice.ranges()[0];
    let width = (hi - lo + 1) as usize;
    let bin = width.div_ceil(FRONT_COLUMNS);
    let sites: Vec<i64> = (0..width.div_ceil(bin)).map(|k| lo + (k * bin) as i64).collect();
    let axis0: Vec<usize> = lattice.sites().map(|x| (x[0] - lo) as usize).collect();
    let times: Vec<f64> = (0..FRONT_SLICES).map(|k| t_max * k as f64 / (FRONT_SLICES - 1) as f64).collect();
    let values = execution.map(&times, |&t| {
        let cols = p.propagate_columns(block, t)?;
        let mut marginal = vec![0.0; width];
        for (i, &x) in axis0.iter().enumerate() {
            marginal[x] += cols.row(i).iter().zip(weights).map(|(c, w)| w * c.norm_sqr()).sum::<f64>();
        }
        Ok(marginal
            .chunks(bin)
            .map(|c| c.iter().copied().fold(0.0, f64::max).sqrt().log10().max(-300.0))
            .collect::<Vec<f64>>())
    });
    Ok(FrontMap { times, sites, values: values.into_iter().collect::<lightcone::Result<_>>()? })
}

/// Uniform superposition over X.
fn uniform_on(region: &Region, dim: usize) -> DMatrix<C64> {
    let amp = C64::new(1.0 / (region.len() as f64).sqrt(), 0.0);
    let mut v = DMatrix::from_element(dim, 1, C64::new(0.0, 0.0));
    for &s in region.sites() {
        v[(s, 0)] = amp;
    }
    v
}

/// Eigen-decomposition `ρ = Σ λ_k v_k v_k^*` keeping the resolvable weights.
fn state_columns(rho: &DensityOperator) -> (DMatrix<C64>, Vec<f64>) {
    let eig = SymmetricEigen::new(rho.matrix().clone());
    let keep: Vec<usize> = (0..eig.eigenvalues.len()).filter(|&k| eig.eigenvalues[k] > 1e-14).collect();
    let cols = DMatrix::from_fn(rho.dim(), keep.len(), |i, j| eig.eigenvectors[(i, keep[j])]);
    (cols, keep.iter().map(|&k| eig.eigenvalues[k]).collect())
}

struct Artifacts {
    report: CertificationReport,
    front: Option<FrontMap>,
}

fn run_theorem(
    exp: &Experiment,
    th: &TheoremSpec,
    h: &LatticeHamiltonian,
    seed: u64,
    execution: Execution,
) -> lightcone::Result<Artifacts> {
    let settings = th.settings();
    let cfg = config(settings, seed, execution);
    let dim = h.dim();
    let artifacts = match th {
        TheoremSpec::Mvb { x, y, .. } => {
            let (x, y) = (exp.region(x), exp.region(y));
            let report = certify_mvb(h, x, y, &cfg)?;
            let front = front_map(h, settings, execution, &uniform_on(x, dim), &[1.0])?;
            Artifacts { report, front: Some(front) }
        }
        TheoremSpec::StateLightcone { x, y, state, .. } => {
            let (x, y) = (exp.region(x), exp.region(y));
            let rho = state_for(exp, state, Some(x), dim, seed)?;
            let report = certify_state_lightcone(h, &rho, x, y, &cfg)?;
            let (cols, weights) = state_columns(&rho);
            let front = front_map(h, settings, execution, &cols, &weights)?;
            Artifacts { report, front: Some(front) }
        }
        TheoremSpec::Lca { x, eta, observable_seed, .. } => {
            let (a, _) = observables(exp.region(x), None, dim, observable_seed.unwrap_or(seed))?;
            Artifacts { report: certify_lca(h, &a, *eta, &cfg)?, front: None }
        }
        TheoremSpec::Lrb { x, y, observable_seed, .. } => {
            let (a, b) = observables(exp.region(x), Some(exp.region(y)), dim, observable_seed.unwrap_or(seed))?;
            Artifacts { report: certify_lrb(h, &a, &b.expect("paired"), &cfg)?, front: None }
        }
        TheoremSpec::Otoc { x, y, observable_seed, state, .. } => {
            let (a, b) = observables(exp.region(x), Some(exp.region(y)), dim, observable_seed.unwrap_or(seed))?;
            let rho = state_for(exp, state, None, dim, seed)?;
            Artifacts { report: certify_otoc(h, &rho, &a, &b.expect("paired"), &cfg)?, front: None }
        }
        TheoremSpec::PowerMvb { pairs, options, .. } => {
            let pairs: Vec<(Region, Region)> =
                pairs.iter().map(|(x, y)| (exp.region(x).clone(), exp.region(y).clone())).collect();
            Artifacts { report: certify_power_mvb(h, &pairs, options, &cfg)?, front: None }
        }
        TheoremSpec::Nbody { x, y, options, .. } => {
            let mb = exp.spec.many_body.as_ref().expect("validated");
            let hn = build_n_particle_hamiltonian(
                &exp.dispersion,
                &exp.spec.potential,
                &mb.interaction,
                mb.particles,
                &exp.lattice,
                mb.sector,
                mb.dimension_cap,
            )?;
            Artifacts { report: certify_nbody(&hn, exp.region(x), exp.region(y), options, &cfg)?, front: None }
        }
    };
    Ok(artifacts)
}

fn write(path: PathBuf, contents: &str, files: &mut Vec<PathBuf>) -> Result<(), Failure> {
    std::fs::write(&path, contents).map_err(|e| io_failure(&path, e))?;
    files.push(path);
    Ok(())
}

pub fn run_experiment(exp: &Experiment, opts: &RunOptions) -> Result<RunOutcome, Failure> {
    let seed = opts.seed_override.unwrap_or(exp.spec.seed);
    let out_dir = opts.out_dir.clone().unwrap_or_else(|| exp.spec.output_dir.clone());
    let h = build_hamiltonian(&exp.dispersion, &exp.spec.potential, &exp.lattice)
        .map_err(|e| lc_failure(exp, exp.dispersion_line, e))?;
    std::fs::create_dir_all(&out_dir).map_err(|e| io_failure(&out_dir, e))?;

    let mut reports = Vec::new();
    let mut summary = Vec::new();
    let mut files = Vec::new();
    for (i, th) in exp.spec.theorems.iter().enumerate() {
        let name = th.name();
        let art = run_theorem(exp, th, &h, seed, opts.execution).map_err(|e| lc_failure(exp, exp.theorem_lines[i], e))?;
        let ser = |e: LightconeError| lc_failure(exp, exp.theorem_lines[i], e);
        write(out_dir.join(format!("{name}.json")), &art.report.to_json().map_err(ser)?, &mut files)?;
        write(out_dir.join(format!("{name}.csv")), &art.report.to_csv().map_err(ser)?, &mut files)?;
        write(out_dir.join(format!("{name}.svg")), &envelope_svg(&name, &art.report), &mut files)?;
        if let Some(front) = &art.front {
            let title = format!("{name}: front |psi_t(x)|");
            write(out_dir.join(format!("{name}_front.svg")), &front_svg(&title, front), &mut files)?;
        }
        summary.push(SummaryRow::new(&name, &art.report));
        reports.push((name, art.report));
    }
    write(out_dir.join("summary.txt"), &summary_table(&summary), &mut files)?;
    Ok(RunOutcome { out_dir, reports, summary, files })
}
