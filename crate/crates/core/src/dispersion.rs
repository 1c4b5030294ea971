//! Dispersion relations, their complex continuation, and the velocity
//! constants derived from them.
//!
//! A dispersion is either a finite table of hopping amplitudes `t_x` (symbol
//! `ω(ζ) = Σ_x t_x e^{iζ·x}`) or a named closed-form symbol. The velocity
//! constant at deformation depth μ is
//!
//! ```text
//! c(μ) = sup_{ξ, |b| = 1} Im ω(ξ + iμb) / μ
//! ```
//!
//! computed by a coarse grid over the momentum cell and sampled directions
//! followed by coordinate-wise golden-section refinement.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::error::{LightconeError, Result};
use crate::exec::Execution;
use crate::linalg::C64;

/// Catalogue of closed-form symbols.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "name", rename_all = "snake_case")]
pub enum Symbol {
    /// `Σ_j (2 - 2 cos ζ_j)`.
    DiscreteLaplacian,
    /// `sqrt(ζ·ζ + m²)`.
    SemiRelativistic { mass: f64 },
    /// `E₀`.
    Constant { energy: f64 },
}

/// One hopping amplitude `t_x` at displacement `x`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HoppingTerm {
    pub displacement: Vec<i64>,
    pub amplitude: f64,
}

/// Generator for hopping tables with a prescribed decay in `|x|`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "law", rename_all = "snake_case")]
pub enum DecayLaw {
    /// `|t_x| = amplitude · e^{-rate |x|}`, truncated where the tail is below 1e-12.
    Exponential { amplitude: f64, rate: f64 },
    /// `|t_x| = amplitude · |x|^{-exponent}` for `0 < |x| ≤ range`.
    Power { amplitude: f64, exponent: f64, range: u32 },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DispersionForm {
    ClosedForm(Symbol),
    Hopping(Vec<HoppingTerm>),
}

/// The kinetic symbol ω together with its analyticity strip half-width.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DispersionRelation {
    dimension: usize,
    form: DispersionForm,
    /// Half-width `a` of the strip `|Im ζ_j| < a`; `f64::INFINITY` for
    /// finitely supported tables.
    #[serde(with = "extended_real")]
    strip: f64,
    /// Tail mass dropped when a decay law was truncated.
    truncation_error: f64,
}

/// Largest tail mass tolerated when truncating an exponential decay law.
pub const DECAY_TAIL_TOLERANCE: f64 = 1e-12;

impl DispersionRelation {
    /// Hopping table. Duplicate displacements are merged; the table must be
    /// symmetric under `x ↦ -x`.
    pub fn hopping(dimension: usize, terms: Vec<HoppingTerm>, strip: f64) -> Result<Self> {
        if dimension == 0 {
            return Err(LightconeError::domain("dimension must be positive"));
        }
        if strip.is_nan() || strip <= 0.0 {
            return Err(LightconeError::domain(format!("strip half-width must be positive, got {strip}")));
        }
        let mut merged: Vec<HoppingTerm> = Vec::new();
        for term in terms {
            if term.displacement.len() != dimension {
                return Err(LightconeError::domain(format!(
                    "displacement {:?} has wrong dimension (expected {dimension})",
                    term.displacement
                )));
            }
            if !term.amplitude.is_finite() {
                return Err(LightconeError::domain("hopping amplitude is not finite"));
            }
            match merged.iter_mut().find(|m| m.displacement == term.displacement) {
                Some(m) => m.amplitude += term.amplitude,
                None => merged.push(term),
            }
        }
        merged.retain(|t| t.amplitude != 0.0);
        merged.sort_by(|a, b| a.displacement.cmp(&b.displacement));
        let scale = merged.iter().map(|t| t.amplitude.abs()).fold(0.0, f64::max);
        for term in &merged {
            let mirror: Vec<i64> = term.displacement.iter().map(|v| -v).collect();
            let partner = merged.iter().find(|m| m.displacement == mirror).map(|m| m.amplitude).unwrap_or(0.0);
            if (partner - term.amplitude).abs() > 1e-14 * scale {
                return Err(LightconeError::domain(format!(
                    "hopping table is not symmetric at displacement {:?}",
                    term.displacement
                )));
            }
        }
        Ok(DispersionRelation { dimension, form: DispersionForm::Hopping(merged), strip, truncation_error: 0.0 })
    }

    /// Named closed-form symbol with a user-declared strip half-width.
    pub fn closed_form(dimension: usize, symbol: Symbol, strip: f64) -> Result<Self> {
        if dimension == 0 {
            return Err(LightconeError::domain("dimension must be positive"));
        }
        if strip.is_nan() || strip <= 0.0 {
            return Err(LightconeError::domain(format!("strip half-width must be positive, got {strip}")));
        }
        if let Symbol::SemiRelativistic { mass } = symbol {
            if !(mass > 0.0) {
                return Err(LightconeError::domain("semi-relativistic mass must be positive"));
            }
        }
        Ok(DispersionRelation { dimension, form: DispersionForm::ClosedForm(symbol), strip, truncation_error: 0.0 })
    }

    /// The 1-D nearest-neighbour chain `t_0 = 2, t_{±1} = -1`.
    pub fn nearest_neighbor_chain() -> Self {
        DispersionRelation::hopping(
            1,
            vec![
                HoppingTerm { displacement: vec![-1], amplitude: -1.0 },
                HoppingTerm { displacement: vec![0], amplitude: 2.0 },
                HoppingTerm { displacement: vec![1], amplitude: -1.0 },
            ],
            f64::INFINITY,
        )
        .expect("nearest-neighbour table is valid")
    }

    /// Table generated from a decay law. Off-site amplitudes are negative and
    /// the on-site term is chosen so that `ω(0) = 0`.
    pub fn from_decay_law(dimension: usize, law: DecayLaw) -> Result<Self> {
        let (range, strip, tail) = match law {
            DecayLaw::Exponential { amplitude, rate } => {
                if !(rate > 0.0) || !(amplitude > 0.0) {
                    return Err(LightconeError::domain("exponential decay needs positive amplitude and rate"));
                }
                let mut range = 1u32;
                loop {
                    let tail = exponential_tail(dimension, amplitude, rate, range);
                    if tail < DECAY_TAIL_TOLERANCE {
                        break (range, rate, tail);
                    }
                    range += 1;
                    if range > 10_000 {
                        return Err(LightconeError::domain("exponential decay too slow to truncate"));
                    }
                }
            }
            DecayLaw::Power { amplitude, exponent, range } => {
                if !(amplitude > 0.0) || !(exponent > 0.0) || range == 0 {
                    return Err(LightconeError::domain("power decay needs positive amplitude, exponent and range"));
                }
                (range, f64::INFINITY, 0.0)
            }
        };
        let mut terms = Vec::new();
        let mut onsite = 0.0;
        for disp in cube_points(dimension, range as i64) {
            let r = norm_i(&disp);
            if r == 0.0 || r > range as f64 {
                continue;
            }
            let magnitude = match law {
                DecayLaw::Exponential { amplitude, rate } => amplitude * (-rate * r).exp(),
                DecayLaw::Power { amplitude, exponent, .. } => amplitude * r.powf(-exponent),
            };
            onsite += magnitude;
            terms.push(HoppingTerm { displacement: disp, amplitude: -magnitude });
        }
        terms.push(HoppingTerm { displacement: vec![0; dimension], amplitude: onsite });
        let mut disp = DispersionRelation::hopping(dimension, terms, strip)?;
        disp.truncation_error = tail;
        Ok(disp)
    }

    pub fn dimension(&self) -> usize {
        self.dimension
    }

    pub fn form(&self) -> &DispersionForm {
        &self.form
    }

    pub fn strip(&self) -> f64 {
        self.strip
    }

    pub fn truncation_error(&self) -> f64 {
        self.truncation_error
    }

    /// Hopping table, converting closed-form symbols that have an exact
    /// lattice realization.
    pub fn hopping_terms(&self) -> Result<Vec<HoppingTerm>> {
        match &self.form {
            DispersionForm::Hopping(terms) => Ok(terms.clone()),
            DispersionForm::ClosedForm(Symbol::Constant { energy }) => {
                Ok(vec![HoppingTerm { displacement: vec![0; self.dimension], amplitude: *energy }])
            }
            DispersionForm::ClosedForm(Symbol::DiscreteLaplacian) => {
                let n = self.dimension;
                let mut terms = vec![HoppingTerm { displacement: vec![0; n], amplitude: 2.0 * n as f64 }];
                for axis in 0..n {
                    for sign in [-1i64, 1] {
                        let mut d = vec![0; n];
                        d[axis] = sign;
                        terms.push(HoppingTerm { displacement: d, amplitude: -1.0 });
                    }
                }
                Ok(terms)
            }
            DispersionForm::ClosedForm(Symbol::SemiRelativistic { .. }) => Err(LightconeError::domain(
                "semi-relativistic symbol has no finite lattice realization",
            )),
        }
    }

    /// Equivalent representation as a hopping table (closed forms converted).
    pub fn as_hopping(&self) -> Result<DispersionRelation> {
        let terms = self.hopping_terms()?;
        DispersionRelation::hopping(self.dimension, terms, self.strip)
    }

    /// ω(ζ) at a complex quasimomentum.
    pub fn eval_symbol(&self, zeta: &[C64]) -> Result<C64> {
        if zeta.len() != self.dimension {
            return Err(LightconeError::Dimension { expected: self.dimension, found: zeta.len() });
        }
        match &self.form {
            DispersionForm::Hopping(terms) => Ok(hopping_symbol(terms, zeta)),
            DispersionForm::ClosedForm(symbol) => {
                if let Some(z) = zeta.iter().find(|z| z.im.abs() >= self.strip) {
                    return Err(LightconeError::domain(format!(
                        "|Im ζ| = {} outside the strip of half-width {}",
                        z.im.abs(),
                        self.strip
                    )));
                }
                Ok(closed_symbol(symbol, zeta))
            }
        }
    }

    /// `Im ω(ξ + iμb)` without strip checks (callers validate μ once).
    fn imag_deformed(&self, xi: &[f64], b: &[f64], mu: f64) -> f64 {
        let zeta: Vec<C64> = xi.iter().zip(b).map(|(&x, &d)| C64::new(x, mu * d)).collect();
        let v = match &self.form {
            DispersionForm::Hopping(terms) => hopping_symbol(terms, &zeta).im,
            DispersionForm::ClosedForm(symbol) => closed_symbol(symbol, &zeta).im,
        };
        // overflowing terms cancel to NaN; the supremum is then unbounded
        if v.is_nan() { f64::INFINITY } else { v }
    }

    fn momentum_cell(&self, opts: &VelocityOptions) -> Vec<(f64, f64)> {
        let periodic = !matches!(self.form, DispersionForm::ClosedForm(Symbol::SemiRelativistic { .. }));
        (0..self.dimension)
            .map(|_| {
                if periodic {
                    (-PI + opts.cell_offset, PI + opts.cell_offset)
                } else {
                    (-opts.momentum_cutoff + opts.cell_offset, opts.momentum_cutoff + opts.cell_offset)
                }
            })
            .collect()
    }

    fn check_mu(&self, mu: f64) -> Result<()> {
        if !(mu > 0.0) || mu >= self.strip {
            return Err(LightconeError::domain(format!(
                "deformation depth μ = {mu} outside (0, {})",
                self.strip
            )));
        }
        Ok(())
    }
}

fn hopping_symbol(terms: &[HoppingTerm], zeta: &[C64]) -> C64 {
    terms
        .iter()
        .map(|t| {
            let phase: C64 = t.displacement.iter().zip(zeta).map(|(&x, z)| z * x as f64).sum();
            (C64::i() * phase).exp() * t.amplitude
        })
        .sum()
}

fn closed_symbol(symbol: &Symbol, zeta: &[C64]) -> C64 {
    match symbol {
        Symbol::DiscreteLaplacian => zeta.iter().map(|z| 2.0 - 2.0 * z.cos()).sum(),
        Symbol::SemiRelativistic { mass } => {
            let sq: C64 = zeta.iter().map(|z| z * z).sum();
            (sq + mass * mass).sqrt()
        }
        Symbol::Constant { energy } => C64::new(*energy, 0.0),
    }
}

fn exponential_tail(dimension: usize, amplitude: f64, rate: f64, range: u32) -> f64 {
    // shells beyond `range`: at most (2r+1)^n - (2r-1)^n sites at radius ≥ r / sqrt(n)
    let mut tail = 0.0;
    let n = dimension as i32;
    for r in (range + 1)..(range + 4000) {
        let rf = r as f64;
        let shell = (2.0 * rf + 1.0).powi(n) - (2.0 * rf - 1.0).powi(n);
        let term = amplitude * shell * (-rate * rf / (dimension as f64).sqrt()).exp();
        tail += term;
        if term < 1e-30 {
            break;
        }
    }
    if dimension == 1 {
        // exact for the chain
        let q = (-rate).exp();
        2.0 * amplitude * q.powi(range as i32 + 1) / (1.0 - q)
    } else {
        tail
    }
}

fn cube_points(dimension: usize, r: i64) -> Vec<Vec<i64>> {
    let mut out = vec![Vec::new()];
    for _ in 0..dimension {
        let mut next = Vec::with_capacity(out.len() * (2 * r as usize + 1));
        for p in &out {
            for v in -r..=r {
                let mut q = p.clone();
                q.push(v);
                next.push(q);
            }
        }
        out = next;
    }
    out
}

fn norm_i(x: &[i64]) -> f64 {
    x.iter().map(|&v| (v * v) as f64).sum::<f64>().sqrt()
}

/// Settings for the supremum searches.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct VelocityOptions {
    /// Coarse grid points per momentum axis. `None` picks 256 / 64 / 24 for
    /// dimensions 1 / 2 / 3.
    pub grid_points: Option<usize>,
    /// Sampled directions on the unit sphere (dimensions 2 and 3).
    pub directions: usize,
    /// Golden-section termination tolerance in each coordinate.
    pub tolerance: f64,
    pub max_sweeps: usize,
    /// Momentum search box `[-K, K]^n` for non-periodic symbols.
    pub momentum_cutoff: f64,
    /// Shift of the momentum cell (the supremum is independent of it).
    pub cell_offset: f64,
    pub execution: Execution,
}

impl Default for VelocityOptions {
    fn default() -> Self {
        VelocityOptions {
            grid_points: None,
            directions: 64,
            tolerance: 1e-8,
            max_sweeps: 60,
            momentum_cutoff: 1e3,
            cell_offset: 0.0,
            execution: Execution::default(),
        }
    }
}

impl VelocityOptions {
    fn points_for(&self, dimension: usize) -> usize {
        self.grid_points.unwrap_or(match dimension {
            1 => 256,
            2 => 64,
            _ => 24,
        })
    }
}

/// c(b, μ) for one sampled direction.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DirectionVelocity {
    pub direction: Vec<f64>,
    pub c: f64,
}

/// Velocity constant at one deformation depth.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VelocityConstant {
    pub mu: f64,
    pub c: f64,
    pub direction_profile: Vec<DirectionVelocity>,
    /// False when the local refinement hit its sweep limit.
    pub converged: bool,
}

/// Constants of the finitely differentiable (power-law) theory.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SmoothVelocityData {
    pub m: usize,
    pub c_tilde: f64,
    #[serde(rename = "M")]
    pub m_bound: f64,
    pub mu: f64,
    /// `sup_b sup (b·∇)^k ω` for k = 1..=m.
    pub order_sups: Vec<f64>,
}

/// Unit directions sampled for the supremum over `b`, with their angle
/// coordinates (empty for dimension 1).
fn sample_directions(dimension: usize, count: usize) -> Vec<(Vec<f64>, Vec<f64>)> {
    match dimension {
        1 => vec![(vec![1.0], vec![]), (vec![-1.0], vec![])],
        2 => (0..count)
            .map(|k| {
                let th = 2.0 * PI * k as f64 / count as f64;
                (vec![th.cos(), th.sin()], vec![th])
            })
            .collect(),
        3 => {
            // Fibonacci sphere
            let golden = PI * (3.0 - 5f64.sqrt());
            (0..count)
                .map(|k| {
                    let z = 1.0 - 2.0 * (k as f64 + 0.5) / count as f64;
                    let polar = z.acos();
                    let az = (golden * k as f64).rem_euclid(2.0 * PI);
                    (angles_to_direction(3, &[polar, az]), vec![polar, az])
                })
                .collect()
        }
        _ => unreachable!("dimension checked by caller"),
    }
}

fn angles_to_direction(dimension: usize, angles: &[f64]) -> Vec<f64> {
    match dimension {
        2 => vec![angles[0].cos(), angles[0].sin()],
        3 => vec![angles[0].sin() * angles[1].cos(), angles[0].sin() * angles[1].sin(), angles[0].cos()],
        _ => unreachable!(),
    }
}

fn check_search_dimension(dimension: usize) -> Result<()> {
    if dimension > 3 {
        return Err(LightconeError::domain(format!(
            "supremum search supports dimensions 1-3, got {dimension}"
        )));
    }
    Ok(())
}

/// Maximize `f(ξ, b)` over the momentum cell and unit directions.
///
/// Returns `(sup, per-direction profile, converged)`. Each profile entry is
/// refined in ξ for its fixed direction; the overall winner is additionally
/// refined in the direction angles and appended to the profile.
fn sup_over_cell_and_directions<F>(
    dimension: usize,
    cell: &[(f64, f64)],
    periodic: bool,
    opts: &VelocityOptions,
    f: F,
) -> (f64, Vec<DirectionVelocity>, bool)
where
    F: Fn(&[f64], &[f64]) -> f64 + Sync,
{
    let points = opts.points_for(dimension).max(2);
    let dirs = sample_directions(dimension, opts.directions.max(1));
    let axes: Vec<Vec<f64>> = cell
        .iter()
        .map(|&(lo, hi)| {
            if periodic {
                (0..points).map(|i| lo + (hi - lo) * i as f64 / points as f64).collect()
            } else {
                (0..points).map(|i| lo + (hi - lo) * i as f64 / (points - 1) as f64).collect()
            }
        })
        .collect();
    let spacing: Vec<f64> = cell
        .iter()
        .map(|&(lo, hi)| (hi - lo) / if periodic { points as f64 } else { (points - 1) as f64 })
        .collect();
    let total: usize = axes.iter().map(|a| a.len()).product();

    let per_direction = opts.execution.map(&dirs, |(b, _)| {
        let mut best = f64::NEG_INFINITY;
        let mut arg = vec![0.0; dimension];
        let mut xi = vec![0.0; dimension];
        for flat in 0..total {
            let mut rem = flat;
            for d in (0..dimension).rev() {
                xi[d] = axes[d][rem % axes[d].len()];
                rem /= axes[d].len();
            }
            let v = f(&xi, b);
            if v > best {
                best = v;
                arg.copy_from_slice(&xi);
            }
        }
        let bounds: Vec<(f64, f64)> = (0..dimension)
            .map(|d| {
                let lo = arg[d] - spacing[d];
                let hi = arg[d] + spacing[d];
                if periodic {
                    (lo, hi)
                } else {
                    (lo.max(cell[d].0), hi.min(cell[d].1))
                }
            })
            .collect();
        let (val, point, ok) = coordinate_golden(|p| f(p, b), arg, &bounds, opts);
        (val.max(best), point, ok)
    });

    let mut profile = Vec::with_capacity(dirs.len() + 1);
    let mut converged = true;
    let mut best_idx = 0;
    for (k, ((b, _), (val, _, ok))) in dirs.iter().zip(&per_direction).enumerate() {
        converged &= *ok;
        profile.push(DirectionVelocity { direction: b.clone(), c: *val });
        if *val > per_direction[best_idx].0 {
            best_idx = k;
        }
    }
    let mut sup = per_direction[best_idx].0;

    if dimension >= 2 {
        let angle_step = if dimension == 2 { 2.0 * PI / dirs.len() as f64 } else { (4.0 * PI / dirs.len() as f64).sqrt() };
        let mut start = per_direction[best_idx].1.clone();
        start.extend_from_slice(&dirs[best_idx].1);
        let mut bounds: Vec<(f64, f64)> = (0..dimension)
            .map(|d| (start[d] - spacing[d], start[d] + spacing[d]))
            .collect();
        for a in &dirs[best_idx].1 {
            bounds.push((a - angle_step, a + angle_step));
        }
        if !periodic {
            for d in 0..dimension {
                bounds[d] = (bounds[d].0.max(cell[d].0), bounds[d].1.min(cell[d].1));
            }
        }
        let joint = |p: &[f64]| {
            let b = angles_to_direction(dimension, &p[dimension..]);
            f(&p[..dimension], &b)
        };
        let (val, point, ok) = coordinate_golden(joint, start, &bounds, opts);
        converged &= ok;
        if val > sup {
            sup = val;
            profile.push(DirectionVelocity { direction: angles_to_direction(dimension, &point[dimension..]), c: val });
        }
    }
    (sup, profile, converged)
}

/// Coordinate-wise golden-section ascent inside `bounds`.
fn coordinate_golden<F>(f: F, start: Vec<f64>, bounds: &[(f64, f64)], opts: &VelocityOptions) -> (f64, Vec<f64>, bool)
where
    F: Fn(&[f64]) -> f64,
{
    let inv_phi = (5f64.sqrt() - 1.0) / 2.0;
    let mut p = start;
    let mut value = f(&p);
    for _ in 0..opts.max_sweeps {
        let before = value;
        for d in 0..p.len() {
            let (mut a, mut b) = bounds[d];
            let mut probe = p.clone();
            let eval = |x: f64, probe: &mut Vec<f64>| {
                probe[d] = x;
                f(probe)
            };
            let mut c = b - inv_phi * (b - a);
            let mut e = a + inv_phi * (b - a);
            let mut fc = eval(c, &mut probe);
            let mut fe = eval(e, &mut probe);
            while (b - a).abs() > opts.tolerance {
                if fc > fe {
                    b = e;
                    e = c;
                    fe = fc;
                    c = b - inv_phi * (b - a);
                    fc = eval(c, &mut probe);
                } else {
                    a = c;
                    c = e;
                    fc = fe;
                    e = a + inv_phi * (b - a);
                    fe = eval(e, &mut probe);
                }
            }
            // compare against the bracket ends as well (boundary maxima)
            let candidates = [(0.5 * (a + b)), bounds[d].0, bounds[d].1, p[d]];
            for x in candidates {
                let v = eval(x, &mut probe);
                if v > value {
                    value = v;
                    p[d] = x;
                }
            }
        }
        if (value - before).abs() <= opts.tolerance * value.abs().max(1.0) {
            return (value, p, true);
        }
    }
    (value, p, false)
}

/// c(μ) = sup Im ω(ξ + iμb) / μ.
pub fn velocity_constant(disp: &DispersionRelation, mu: f64, opts: &VelocityOptions) -> Result<VelocityConstant> {
    disp.check_mu(mu)?;
    check_search_dimension(disp.dimension)?;
    if let DispersionForm::ClosedForm(Symbol::Constant { .. }) = disp.form {
        let profile = sample_directions(disp.dimension, opts.directions.max(1))
            .into_iter()
            .map(|(b, _)| DirectionVelocity { direction: b, c: 0.0 })
            .collect();
        return Ok(VelocityConstant { mu, c: 0.0, direction_profile: profile, converged: true });
    }
    let cell = disp.momentum_cell(opts);
    let periodic = !matches!(disp.form, DispersionForm::ClosedForm(Symbol::SemiRelativistic { .. }));
    let (sup, mut profile, converged) =
        sup_over_cell_and_directions(disp.dimension, &cell, periodic, opts, |xi, b| disp.imag_deformed(xi, b, mu));
    let hopping = matches!(disp.form, DispersionForm::Hopping(_));
    for entry in &mut profile {
        entry.c /= mu;
        if hopping {
            entry.c = entry.c.max(0.0);
        }
    }
    let mut c = sup / mu;
    if hopping {
        c = c.max(0.0);
    }
    Ok(VelocityConstant { mu, c, direction_profile: profile, converged })
}

/// c(b, μ) for a single fixed direction `b` (normalized internally).
pub fn direction_velocity(disp: &DispersionRelation, b: &[f64], mu: f64, opts: &VelocityOptions) -> Result<f64> {
    disp.check_mu(mu)?;
    if b.len() != disp.dimension {
        return Err(LightconeError::Dimension { expected: disp.dimension, found: b.len() });
    }
    let norm = b.iter().map(|v| v * v).sum::<f64>().sqrt();
    if norm == 0.0 {
        return Err(LightconeError::domain("direction must be nonzero"));
    }
    let b: Vec<f64> = b.iter().map(|v| v / norm).collect();
    let periodic = !matches!(disp.form, DispersionForm::ClosedForm(Symbol::SemiRelativistic { .. }));
    let cell = disp.momentum_cell(opts);
    let points = opts.points_for(disp.dimension);
    let mut single = opts.clone();
    single.grid_points = Some(points);
    // reuse the grid machinery with a fixed direction
    let n = disp.dimension;
    let axes: Vec<Vec<f64>> = cell
        .iter()
        .map(|&(lo, hi)| {
            let den = if periodic { points as f64 } else { (points - 1) as f64 };
            (0..points).map(|i| lo + (hi - lo) * i as f64 / den).collect()
        })
        .collect();
    let total: usize = axes.iter().map(|a| a.len()).product();
    let mut best = f64::NEG_INFINITY;
    let mut arg = vec![0.0; n];
    let mut xi = vec![0.0; n];
    for flat in 0..total {
        let mut rem = flat;
        for d in (0..n).rev() {
            xi[d] = axes[d][rem % points];
            rem /= points;
        }
        let v = disp.imag_deformed(&xi, &b, mu);
        if v > best {
            best = v;
            arg.copy_from_slice(&xi);
        }
    }
    let bounds: Vec<(f64, f64)> = (0..n)
        .map(|d| {
            let h = axes[d][1] - axes[d][0];
            if periodic {
                (arg[d] - h, arg[d] + h)
            } else {
                ((arg[d] - h).max(cell[d].0), (arg[d] + h).min(cell[d].1))
            }
        })
        .collect();
    let (v, _, _) = coordinate_golden(|p| disp.imag_deformed(p, &b, mu), arg, &bounds, &single);
    Ok(v.max(best) / mu)
}

/// Default μ grid: `points` log-spaced values in `[0.05, min(0.95 a, 8)]`.
pub fn default_mu_grid(strip: f64, points: usize) -> Vec<f64> {
    log_grid(0.05, (0.95 * strip).min(8.0), points)
}

/// `points` log-spaced values in `[lo, hi]`.
pub fn log_grid(lo: f64, hi: f64, points: usize) -> Vec<f64> {
    if points <= 1 || hi <= lo {
        return vec![lo.min(hi)];
    }
    let (a, b) = (lo.ln(), hi.ln());
    (0..points).map(|i| (a + (b - a) * i as f64 / (points - 1) as f64).exp()).collect()
}

/// Velocity constants precomputed on a μ grid.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VelocityTable {
    pub mu: Vec<f64>,
    pub c: Vec<f64>,
    pub converged: bool,
}

impl VelocityTable {
    pub fn compute(disp: &DispersionRelation, mu_grid: &[f64], opts: &VelocityOptions) -> Result<Self> {
        if mu_grid.is_empty() {
            return Err(LightconeError::domain("μ grid is empty"));
        }
        for &mu in mu_grid {
            disp.check_mu(mu)?;
        }
        let mut inner = opts.clone();
        inner.execution = Execution::Sequential;
        let results = opts.execution.map(mu_grid, |&mu| velocity_constant(disp, mu, &inner));
        let mut c = Vec::with_capacity(mu_grid.len());
        let mut converged = true;
        for r in results {
            let v = r?;
            converged &= v.converged;
            c.push(v.c);
        }
        Ok(VelocityTable { mu: mu_grid.to_vec(), c, converged })
    }

    /// `min_μ μ (c(μ)|t| - d)` over the grid, with its minimizer.
    pub fn envelope_exponent(&self, d: f64, t: f64) -> (f64, f64) {
        let mut best = (f64::INFINITY, self.mu[0]);
        for (&mu, &c) in self.mu.iter().zip(&self.c) {
            let e = mu * (c * t.abs() - d);
            if e < best.0 {
                best = (e, mu);
            }
        }
        best
    }
}

/// Minimal exponent `min_μ μ (c(μ) t - d)` over `mu_grid`; the envelope is
/// `e^{exponent}`. Returns `(exponent, μ*)`.
pub fn envelope_exponent(
    disp: &DispersionRelation,
    d: f64,
    t: f64,
    mu_grid: &[f64],
    opts: &VelocityOptions,
) -> Result<(f64, f64)> {
    if d < 0.0 || t < 0.0 {
        return Err(LightconeError::domain("distance and time must be non-negative"));
    }
    Ok(VelocityTable::compute(disp, mu_grid, opts)?.envelope_exponent(d, t))
}

/// Symbol of `(b·∇_ξ)^k H_ξ` for a hopping table: `Σ_x (i b·x)^k t_x e^{iξ·x}`.
fn derivative_symbol(terms: &[HoppingTerm], k: usize, xi: &[f64], b: &[f64]) -> C64 {
    terms
        .iter()
        .map(|t| {
            let bx: f64 = t.displacement.iter().zip(b).map(|(&x, d)| x as f64 * d).sum();
            let phase: f64 = t.displacement.iter().zip(xi).map(|(&x, q)| x as f64 * q).sum();
            let weight = (C64::i() * bx).powu(k as u32);
            weight * C64::from_polar(1.0, phase) * t.amplitude
        })
        .sum()
}

fn weighted_moment(terms: &[HoppingTerm], order: usize) -> f64 {
    terms
        .iter()
        .map(|t| norm_i(&t.displacement).powi(order as i32) * t.amplitude.abs())
        .sum()
}

fn smooth_terms(disp: &DispersionRelation, order: usize) -> Result<Vec<HoppingTerm>> {
    let terms = disp.hopping_terms()?;
    check_search_dimension(disp.dimension)?;
    let moment = weighted_moment(&terms, order);
    if !moment.is_finite() {
        return Err(LightconeError::domain(format!("weighted sum Σ|x|^{order}|t_x| diverges")));
    }
    Ok(terms)
}

/// c̃ from the first `m` directional derivatives of the symbol, and M from the
/// (m+1)-th.
pub fn smooth_velocity_constant(
    disp: &DispersionRelation,
    m: usize,
    mu: f64,
    opts: &VelocityOptions,
) -> Result<SmoothVelocityData> {
    if m == 0 {
        return Err(LightconeError::domain("differentiability order m must be at least 1"));
    }
    if !(mu > 0.0 && mu < 1.0) {
        return Err(LightconeError::domain(format!("μ = {mu} outside (0, 1)")));
    }
    let terms = smooth_terms(disp, m + 1)?;
    let cell: Vec<(f64, f64)> = (0..disp.dimension)
        .map(|_| (-PI + opts.cell_offset, PI + opts.cell_offset))
        .collect();
    let mut c_tilde = 0.0;
    let mut order_sups = Vec::with_capacity(m);
    let mut factorial = 1.0;
    for k in 1..=m {
        factorial *= k as f64;
        let weight = C64::new(0.0, mu).powu(k as u32 - 1).re / factorial;
        let (sup, _, _) = sup_over_cell_and_directions(disp.dimension, &cell, true, opts, |xi, b| {
            derivative_symbol(&terms, k, xi, b).re
        });
        order_sups.push(sup);
        if weight != 0.0 {
            c_tilde += weight * sup;
        }
    }
    let m_bound = derivative_bound_m(disp, m, opts)?;
    Ok(SmoothVelocityData { m, c_tilde, m_bound, mu, order_sups })
}

/// M = 1 + sup_b ‖(b·∇_ξ)^{m+1} H_ξ‖.
pub fn derivative_bound_m(disp: &DispersionRelation, m: usize, opts: &VelocityOptions) -> Result<f64> {
    if m == 0 {
        return Err(LightconeError::domain("differentiability order m must be at least 1"));
    }
    let terms = smooth_terms(disp, m + 1)?;
    let cell: Vec<(f64, f64)> = (0..disp.dimension)
        .map(|_| (-PI + opts.cell_offset, PI + opts.cell_offset))
        .collect();
    let (sup, _, _) = sup_over_cell_and_directions(disp.dimension, &cell, true, opts, |xi, b| {
        derivative_symbol(&terms, m + 1, xi, b).norm()
    });
    Ok(1.0 + sup)
}

/// Maximal group speed `sup_{k,b} b·∇ω(k)` (the m = 1 value of c̃).
pub fn max_group_speed(disp: &DispersionRelation, opts: &VelocityOptions) -> Result<f64> {
    Ok(smooth_velocity_constant(disp, 1, 0.5, opts)?.c_tilde)
}

mod extended_real {
    use serde::{Deserialize, Deserializer, Serializer};

    pub fn serialize<S: Serializer>(v: &f64, s: S) -> Result<S::Ok, S::Error> {
        if v.is_finite() {
            s.serialize_f64(*v)
        } else {
            s.serialize_none()
        }
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<f64, D::Error> {
        Ok(Option::<f64>::deserialize(d)?.unwrap_or(f64::INFINITY))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn chain() -> DispersionRelation {
        DispersionRelation::nearest_neighbor_chain()
    }

    #[test]
    fn symbol_examples() {
        let d = chain();
        let v = d.eval_symbol(&[C64::new(PI / 2.0, 0.0)]).unwrap();
        assert_relative_eq!(v.re, 2.0, epsilon = 1e-14);
        assert!(v.im.abs() <= 1e-12);
        assert!(d.eval_symbol(&[C64::new(0.0, 0.0)]).unwrap().norm() < 1e-15);
        let sr = DispersionRelation::closed_form(1, Symbol::SemiRelativistic { mass: 1.0 }, 1.0).unwrap();
        assert_relative_eq!(sr.eval_symbol(&[C64::new(0.0, 0.0)]).unwrap().re, 1.0);
    }

    #[test]
    fn strip_violation_is_a_domain_error() {
        let sr = DispersionRelation::closed_form(1, Symbol::SemiRelativistic { mass: 1.0 }, 1.0).unwrap();
        assert!(matches!(sr.eval_symbol(&[C64::new(0.0, 1.0)]), Err(LightconeError::Domain(_))));
        assert!(matches!(velocity_constant(&sr, 1.2, &VelocityOptions::default()), Err(LightconeError::Domain(_))));
        assert!(matches!(velocity_constant(&chain(), 0.0, &VelocityOptions::default()), Err(LightconeError::Domain(_))));
    }

    #[test]
    fn asymmetric_table_rejected() {
        let r = DispersionRelation::hopping(
            1,
            vec![HoppingTerm { displacement: vec![1], amplitude: -1.0 }],
            f64::INFINITY,
        );
        assert!(matches!(r, Err(LightconeError::Domain(_))));
    }

    #[test]
    fn real_symbol_on_real_momenta() {
        let d = DispersionRelation::from_decay_law(2, DecayLaw::Exponential { amplitude: 1.0, rate: 2.0 }).unwrap();
        for k in 0..20 {
            let z = [C64::new(0.3 * k as f64, 0.0), C64::new(-0.17 * k as f64, 0.0)];
            assert!(d.eval_symbol(&z).unwrap().im.abs() < 1e-12);
        }
        // ω(conj ζ) = conj ω(ζ)
        let z = [C64::new(0.4, 0.3), C64::new(-1.1, 0.2)];
        let zc = [z[0].conj(), z[1].conj()];
        let diff = d.eval_symbol(&zc).unwrap() - d.eval_symbol(&z).unwrap().conj();
        assert!(diff.norm() < 1e-12);
        assert!(d.truncation_error() < DECAY_TAIL_TOLERANCE);
    }

    #[test]
    fn constant_symbol_has_zero_velocity() {
        let d = DispersionRelation::closed_form(1, Symbol::Constant { energy: 3.0 }, f64::INFINITY).unwrap();
        for mu in [0.1, 1.0, 5.0] {
            assert_eq!(velocity_constant(&d, mu, &VelocityOptions::default()).unwrap().c, 0.0);
        }
    }

    #[test]
    fn profile_contains_the_maximum() {
        let d = DispersionRelation::closed_form(2, Symbol::DiscreteLaplacian, f64::INFINITY).unwrap();
        let v = velocity_constant(&d, 0.7, &VelocityOptions::default()).unwrap();
        let pmax = v.direction_profile.iter().map(|p| p.c).fold(f64::NEG_INFINITY, f64::max);
        assert_eq!(v.c, pmax);
        // diagonal direction: 2 * 2 sinh(μ/√2) / μ exceeds the axis value 2 sinh(μ)/μ
        let diag = 2.0 * 2.0 * (0.7 / 2f64.sqrt()).sinh() / 0.7;
        assert_relative_eq!(v.c, diag, max_relative = 1e-7);
    }

    #[test]
    fn smooth_constants_on_the_chain() {
        let opts = VelocityOptions::default();
        let s = smooth_velocity_constant(&chain(), 3, 0.3, &opts).unwrap();
        assert_relative_eq!(s.c_tilde, 2.0 - 0.09 / 3.0, epsilon = 1e-9);
        assert_relative_eq!(s.m_bound, 3.0, epsilon = 1e-9);
        let zero = DispersionRelation::closed_form(1, Symbol::Constant { energy: 1.0 }, f64::INFINITY).unwrap();
        assert_eq!(derivative_bound_m(&zero, 2, &opts).unwrap(), 1.0);
        assert!(smooth_velocity_constant(&chain(), 0, 0.3, &opts).is_err());
        assert!(smooth_velocity_constant(&chain(), 1, 1.5, &opts).is_err());
    }

    #[test]
    fn dispersion_json_round_trip() {
        let d = DispersionRelation::nearest_neighbor_chain();
        let s = serde_json::to_string(&d).unwrap();
        let back: DispersionRelation = serde_json::from_str(&s).unwrap();
        assert_eq!(d, back);
    }
}
