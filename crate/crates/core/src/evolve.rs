//! Schrödinger and Heisenberg evolution, leakage norms, commutators and OTOCs.

use nalgebra::{DMatrix, DVector, SymmetricEigen};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{LightconeError, Result};
use crate::exec::Execution;
use crate::lattice::{LatticeHamiltonian, Region};
use crate::linalg::{chebyshev_propagate, expm, largest_singular_value, random_gaussian, ChebyshevOptions, CsrMatrix, PowerOptions, C64, ONE, ZERO};

/// How `e^{-iHt}` is applied.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum PropagationMethod {
    /// Chebyshev expansion on the sparse matrix (Hermitian `H`).
    #[default]
    Chebyshev,
    /// Cached dense eigendecomposition (Hermitian `H`).
    Eigendecomposition,
    /// Dense scaling-and-squaring exponential; the only option for deformed,
    /// non-Hermitian generators.
    DenseExponential,
}

/// Relative hermiticity defect above which a generator is treated as
/// non-Hermitian.
const HERMITIAN_TOLERANCE: f64 = 1e-12;

/// Time-evolution engine for one generator.
#[derive(Debug, Clone)]
pub struct Propagator {
    matrix: CsrMatrix,
    hermitian: bool,
    method: PropagationMethod,
    chebyshev: ChebyshevOptions,
    spectral: Option<(DMatrix<C64>, Vec<f64>)>,
    execution: Execution,
}

impl Propagator {
    pub fn new(matrix: &CsrMatrix, method: PropagationMethod, execution: Execution) -> Result<Self> {
        let scale = matrix.triplets().map(|(_, _, v)| v.norm()).fold(0.0, f64::max).max(1.0);
        let hermitian = matrix.hermiticity_defect() <= HERMITIAN_TOLERANCE * scale;
        if !hermitian && method != PropagationMethod::DenseExponential {
            return Err(LightconeError::domain(format!(
                "{method:?} propagation requires a Hermitian generator"
            )));
        }
        let spectral = if method == PropagationMethod::Eigendecomposition {
            let eig = SymmetricEigen::new(matrix.to_dense());
            Some((eig.eigenvectors, eig.eigenvalues.iter().copied().collect()))
        } else {
            None
        };
        Ok(Propagator { matrix: matrix.clone(), hermitian, method, chebyshev: ChebyshevOptions::default(), spectral, execution })
    }

    /// Default method for the generator: Chebyshev when Hermitian, dense
    /// exponential otherwise.
    pub fn for_hamiltonian(h: &LatticeHamiltonian, execution: Execution) -> Result<Self> {
        let method = if h.is_deformed() { PropagationMethod::DenseExponential } else { PropagationMethod::Chebyshev };
        Propagator::new(h.matrix(), method, execution)
    }

    pub fn with_chebyshev_options(mut self, opts: ChebyshevOptions) -> Self {
        self.chebyshev = opts;
        self
    }

    pub fn dim(&self) -> usize {
        self.matrix.dim()
    }

    pub fn method(&self) -> PropagationMethod {
        self.method
    }

    pub fn is_hermitian(&self) -> bool {
        self.hermitian
    }

    pub fn matrix(&self) -> &CsrMatrix {
        &self.matrix
    }

    /// `e^{-iHt}` applied to every column of `block`.
    pub fn propagate_columns(&self, block: &DMatrix<C64>, t: f64) -> Result<DMatrix<C64>> {
        if block.nrows() != self.dim() {
            return Err(LightconeError::Dimension { expected: self.dim(), found: block.nrows() });
        }
        if t == 0.0 {
            return Ok(block.clone());
        }
        Ok(match self.method {
            PropagationMethod::Chebyshev => chebyshev_propagate(&self.matrix, block, t, &self.chebyshev, self.execution),
            PropagationMethod::Eigendecomposition => {
                let (v, lambda) = self.spectral.as_ref().expect("spectral factors cached at construction");
                let mut coeff = v.adjoint() * block;
                for (i, l) in lambda.iter().enumerate() {
                    let phase = C64::from_polar(1.0, -l * t);
                    coeff.row_mut(i).iter_mut().for_each(|c| *c *= phase);
                }
                v * coeff
            }
            PropagationMethod::DenseExponential => {
                let generator = self.matrix.to_dense() * C64::new(0.0, -t);
                expm(&generator) * block
            }
        })
    }

    /// `e^{-iHt} ψ`.
    pub fn propagate_state(&self, psi: &[C64], t: f64) -> Result<Vec<C64>> {
        let block = DMatrix::from_column_slice(psi.len(), 1, psi);
        Ok(self.propagate_columns(&block, t)?.column(0).iter().copied().collect())
    }

    /// Full `e^{-iHt}`.
    pub fn evolution_operator(&self, t: f64) -> DMatrix<C64> {
        let id = DMatrix::<C64>::identity(self.dim(), self.dim());
        self.propagate_columns(&id, t).expect("square identity")
    }

    /// Columns `cols` of `e^{-iHt}`, i.e. `e^{-iHt} χ_cols` without the zero
    /// columns.
    pub fn columns(&self, cols: &[usize], t: f64) -> DMatrix<C64> {
        let mut unit = DMatrix::from_element(self.dim(), cols.len(), ZERO);
        for (k, &c) in cols.iter().enumerate() {
            unit[(c, k)] = ONE;
        }
        self.propagate_columns(&unit, t).expect("dimension matches")
    }

    /// The block `χ_rows e^{-iHt} χ_cols` as a `|rows| × |cols|` matrix.
    pub fn block(&self, rows: &[usize], cols: &[usize], t: f64) -> DMatrix<C64> {
        let full = self.columns(cols, t);
        DMatrix::from_fn(rows.len(), cols.len(), |i, j| full[(rows[i], j)])
    }
}

/// `‖χ_X e^{-iHt} χ_Y‖`.
pub fn leakage_norm(p: &Propagator, x: &Region, y: &Region, t: f64, power: &PowerOptions) -> f64 {
    if x.is_empty() || y.is_empty() {
        return 0.0;
    }
    largest_singular_value(&p.block(x.sites(), y.sites(), t), power)
}

/// `‖e^{-iH_ζ t}‖` for a (possibly deformed) lattice Hamiltonian.
pub fn deformed_evolution_norm(h: &LatticeHamiltonian, t: f64, power: &PowerOptions) -> Result<f64> {
    let p = Propagator::new(h.matrix(), PropagationMethod::DenseExponential, Execution::Sequential)?;
    Ok(largest_singular_value(&p.evolution_operator(t), power))
}

/// How an observable relates to a region.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", content = "region", rename_all = "snake_case")]
pub enum Support {
    /// No declared domain.
    Global,
    /// `A = χ_X A χ_X + χ_{X^c}`.
    ActsOn(Region),
    /// `A = χ_X A χ_X`.
    Localized(Region),
}

/// Bounded operator on the box Hilbert space.
///
/// Stored as `core + 𝟙` when `shifted` is set. Commutators, truncation
/// differences and OTOCs only involve `core`, which keeps small
/// off-light-cone entries free of the cancellation `(𝟙 + K) - 𝟙`.
#[derive(Debug, Clone)]
pub struct Observable {
    core: DMatrix<C64>,
    shifted: bool,
    support: Support,
    norm: f64,
}

fn embed(block: &DMatrix<C64>, region: &Region, dim: usize) -> DMatrix<C64> {
    let s = region.sites();
    let mut m = DMatrix::from_element(dim, dim, ZERO);
    for (i, &a) in s.iter().enumerate() {
        for (j, &b) in s.iter().enumerate() {
            m[(a, b)] = block[(i, j)];
        }
    }
    m
}

fn restrict(m: &DMatrix<C64>, region: &Region) -> DMatrix<C64> {
    let s = region.sites();
    DMatrix::from_fn(s.len(), s.len(), |i, j| m[(s[i], s[j])])
}

impl Observable {
    fn build(core: DMatrix<C64>, shifted: bool, support: Support, power: &PowerOptions) -> Self {
        let mut obs = Observable { core, shifted, support, norm: 0.0 };
        obs.norm = largest_singular_value(&obs.matrix(), power);
        obs
    }

    pub fn global(matrix: DMatrix<C64>) -> Result<Self> {
        if !matrix.is_square() {
            return Err(LightconeError::Dimension { expected: matrix.nrows(), found: matrix.ncols() });
        }
        Ok(Observable::build(matrix, false, Support::Global, &PowerOptions::default()))
    }

    /// `A = χ_X a χ_X + χ_{X^c}` from an `|X| × |X|` block `a`.
    pub fn acting_on(block: &DMatrix<C64>, region: &Region, dim: usize) -> Result<Self> {
        if block.nrows() != region.len() || block.ncols() != region.len() {
            return Err(LightconeError::Dimension { expected: region.len(), found: block.nrows() });
        }
        if region.sites().last().is_some_and(|&s| s >= dim) {
            return Err(LightconeError::domain("region exceeds the Hilbert space dimension"));
        }
        let mut core = embed(block, region, dim);
        for &s in region.sites() {
            core[(s, s)] -= ONE;
        }
        Ok(Observable::build(core, true, Support::ActsOn(region.clone()), &PowerOptions::default()))
    }

    /// Declare that `matrix` acts on `region`; the form is checked exactly.
    pub fn from_matrix_on(matrix: &DMatrix<C64>, region: &Region) -> Result<Self> {
        let dim = matrix.nrows();
        let inside = region.mask(dim);
        for i in 0..dim {
            for j in 0..dim {
                if inside[i] && inside[j] {
                    continue;
                }
                let expect = if i == j { ONE } else { ZERO };
                if matrix[(i, j)] != expect {
                    return Err(LightconeError::domain(format!(
                        "matrix does not act on region '{}' (entry ({i}, {j}))",
                        region.label
                    )));
                }
            }
        }
        Observable::acting_on(&restrict(matrix, region), region, dim)
    }

    /// Random Hermitian block on `region` (GUE, rescaled to unit norm), with
    /// the identity outside.
    pub fn random_localized(region: &Region, dim: usize, seed: u64) -> Result<Self> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let g = random_gaussian(region.len(), region.len(), &mut rng);
        let h = (&g + g.adjoint()) * C64::from(0.5);
        let n = largest_singular_value(&h, &PowerOptions::default().with_seed(seed));
        Observable::acting_on(&(h / C64::from(n)), region, dim)
    }

    pub fn dim(&self) -> usize {
        self.core.nrows()
    }

    pub fn support(&self) -> &Support {
        &self.support
    }

    pub fn norm(&self) -> f64 {
        self.norm
    }

    /// Full matrix.
    pub fn matrix(&self) -> DMatrix<C64> {
        let mut m = self.core.clone();
        if self.shifted {
            for i in 0..m.nrows() {
                m[(i, i)] += ONE;
            }
        }
        m
    }

    /// `A - 𝟙` when the observable carries an identity shift, `A` otherwise.
    pub fn core(&self) -> &DMatrix<C64> {
        &self.core
    }

    pub fn is_shifted(&self) -> bool {
        self.shifted
    }
}

/// `Ã_X = χ_X A χ_X - χ_X` for `A` acting on `X`.
pub fn localize_observable(a: &Observable) -> Result<Observable> {
    match &a.support {
        Support::ActsOn(region) => {
            // core = χ_X A χ_X - χ_X exactly by construction
            Ok(Observable::build(a.core.clone(), false, Support::Localized(region.clone()), &PowerOptions::default()))
        }
        _ => Err(LightconeError::domain("observable has no declared action domain")),
    }
}

/// `α_t(A) = e^{iHt} A e^{-iHt}`.
///
/// For `A` acting on `X` only the columns `e^{iHt} χ_X` are propagated.
pub fn heisenberg_evolve(p: &Propagator, a: &Observable, t: f64) -> Result<Observable> {
    if a.dim() != p.dim() {
        return Err(LightconeError::Dimension { expected: p.dim(), found: a.dim() });
    }
    if t == 0.0 {
        return Ok(a.clone());
    }
    let core = match &a.support {
        Support::ActsOn(region) | Support::Localized(region) => {
            // K_t = U^* χ_X K χ_X U = W K_XX W^*, W = U^* χ_X = e^{iHt} χ_X
            let w = p.columns(region.sites(), -t);
            let k = restrict(&a.core, region);
            &w * k * w.adjoint()
        }
        Support::Global => {
            let u = p.evolution_operator(t);
            u.adjoint() * &a.core * u
        }
    };
    let norm = a.norm;
    Ok(Observable { core, shifted: a.shifted, support: Support::Global, norm })
}

/// `A_{t,U} = χ_U A_t χ_U + χ_{U^c}`.
pub fn lc_truncation(a_t: &Observable, u: &Region) -> Observable {
    let dim = a_t.dim();
    let inside = u.mask(dim);
    let mut core = a_t.core.clone();
    for i in 0..dim {
        for j in 0..dim {
            if !(inside[i] && inside[j]) {
                core[(i, j)] = ZERO;
            }
        }
    }
    if !a_t.shifted {
        // χ_U A χ_U + χ_{U^c} = (χ_U A χ_U - χ_U) + 𝟙
        for &s in u.sites() {
            core[(s, s)] -= ONE;
        }
    }
    Observable::build(core, true, Support::ActsOn(u.clone()), &PowerOptions::default())
}

/// `‖A_t - A_{t,U}‖`, computed from the core so that the identity parts
/// cancel exactly.
pub fn truncation_error(a_t: &Observable, u: &Region, power: &PowerOptions) -> f64 {
    let dim = a_t.dim();
    let inside = u.mask(dim);
    let mut diff = a_t.core.clone();
    for i in 0..dim {
        for j in 0..dim {
            if inside[i] && inside[j] {
                diff[(i, j)] = ZERO;
            }
        }
    }
    if !a_t.shifted {
        for i in 0..dim {
            if !inside[i] {
                diff[(i, i)] -= ONE;
            }
        }
    }
    largest_singular_value(&diff, power)
}

/// `[A_t, B]`, built from the cores (identity shifts commute).
pub fn commutator(a_t: &Observable, b: &Observable) -> Result<DMatrix<C64>> {
    if a_t.dim() != b.dim() {
        return Err(LightconeError::Dimension { expected: a_t.dim(), found: b.dim() });
    }
    Ok(&a_t.core * &b.core - &b.core * &a_t.core)
}

/// `‖[A_t, B]‖`.
pub fn commutator_norm(a_t: &Observable, b: &Observable, power: &PowerOptions) -> Result<f64> {
    Ok(largest_singular_value(&commutator(a_t, b)?, power))
}

/// Density matrix with optional declared support.
#[derive(Debug, Clone)]
pub struct DensityOperator {
    matrix: DMatrix<C64>,
    support: Option<Region>,
}

impl DensityOperator {
    /// Validate and wrap `matrix`.
    pub fn new(matrix: DMatrix<C64>, support: Option<Region>) -> Result<Self> {
        let rho = DensityOperator { matrix, support };
        rho.validate()?;
        Ok(rho)
    }

    pub fn pure(psi: &[C64], support: Option<Region>) -> Result<Self> {
        let v = DVector::from_column_slice(psi);
        let n = v.norm();
        if n == 0.0 {
            return Err(LightconeError::domain("zero state vector"));
        }
        let v = v / C64::from(n);
        DensityOperator::new(&v * v.adjoint(), support)
    }

    pub fn maximally_mixed(dim: usize) -> Self {
        DensityOperator { matrix: DMatrix::identity(dim, dim) / C64::from(dim as f64), support: None }
    }

    /// Random mixed state of the given rank supported on `region`.
    pub fn random_mixed(region: &Region, dim: usize, rank: usize, seed: u64) -> Result<Self> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let g = random_gaussian(region.len(), rank.max(1), &mut rng);
        let block = &g * g.adjoint();
        let tr: f64 = block.diagonal().iter().map(|v| v.re).sum();
        DensityOperator::new(embed(&(block / C64::from(tr)), region, dim), Some(region.clone()))
    }

    pub fn matrix(&self) -> &DMatrix<C64> {
        &self.matrix
    }

    pub fn dim(&self) -> usize {
        self.matrix.nrows()
    }

    pub fn support(&self) -> Option<&Region> {
        self.support.as_ref()
    }

    /// Hermitian, unit trace, positive semidefinite and supported where declared.
    pub fn validate(&self) -> Result<()> {
        let m = &self.matrix;
        if !m.is_square() {
            return Err(LightconeError::Dimension { expected: m.nrows(), found: m.ncols() });
        }
        let defect = (m - m.adjoint()).iter().map(|v| v.norm()).fold(0.0, f64::max);
        if defect > 1e-12 {
            return Err(LightconeError::domain("density operator is not Hermitian"));
        }
        let tr: f64 = m.diagonal().iter().map(|v| v.re).sum();
        if (tr - 1.0).abs() > 1e-10 {
            return Err(LightconeError::domain(format!("density operator has trace {tr}")));
        }
        let min = SymmetricEigen::new(m.clone()).eigenvalues.iter().copied().fold(f64::INFINITY, f64::min);
        if min < -1e-12 {
            return Err(LightconeError::domain(format!("density operator has eigenvalue {min}")));
        }
        if let Some(region) = &self.support {
            let outside = 1.0 - state_region_probability(self, region);
            if outside >= 1e-12 {
                return Err(LightconeError::domain(format!(
                    "density operator has weight {outside:e} outside region '{}'",
                    region.label
                )));
            }
        }
        Ok(())
    }
}

/// `Tr(χ_X ρ)`.
pub fn state_region_probability(rho: &DensityOperator, x: &Region) -> f64 {
    x.sites().iter().map(|&s| rho.matrix[(s, s)].re).sum()
}

/// `α'_t(ρ) = e^{-iHt} ρ e^{iHt}`.
pub fn evolve_density(p: &Propagator, rho: &DensityOperator, t: f64) -> Result<DensityOperator> {
    let u = p.evolution_operator(t);
    if rho.dim() != p.dim() {
        return Err(LightconeError::Dimension { expected: p.dim(), found: rho.dim() });
    }
    Ok(DensityOperator { matrix: &u * &rho.matrix * u.adjoint(), support: None })
}

/// `Tr(χ_Y ρ_t)` for `ρ` supported in `X`, as `Tr(B ρ_XX B^*)` with
/// `B = χ_Y e^{-iHt} χ_X`.
pub fn transferred_probability(p: &Propagator, rho: &DensityOperator, x: &Region, y: &Region, t: f64) -> f64 {
    if x.is_empty() || y.is_empty() {
        return 0.0;
    }
    let b = p.block(y.sites(), x.sites(), t);
    let r = restrict(&rho.matrix, x);
    let m = &b * r * b.adjoint();
    m.diagonal().iter().map(|v| v.re).sum::<f64>().max(0.0)
}

/// `-Tr([A_t, B]² ρ)` (real part).
pub fn otoc(rho: &DensityOperator, a_t: &Observable, b: &Observable) -> Result<f64> {
    let k = commutator(a_t, b)?;
    if rho.dim() != k.nrows() {
        return Err(LightconeError::Dimension { expected: k.nrows(), found: rho.dim() });
    }
    let kk = &k * &k;
    let tr: C64 = (0..k.nrows()).map(|i| kk.row(i).transpose().dot(&rho.matrix.column(i))).sum();
    Ok(-tr.re)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dispersion::DispersionRelation;
    use crate::lattice::{build_hamiltonian, LatticeBox, Potential};

    fn chain(len: usize) -> LatticeHamiltonian {
        build_hamiltonian(&DispersionRelation::nearest_neighbor_chain(), &Potential::Zero, &LatticeBox::centered_chain(len).unwrap()).unwrap()
    }

    fn delta(dim: usize, at: usize) -> Vec<C64> {
        let mut v = vec![ZERO; dim];
        v[at] = ONE;
        v
    }

    #[test]
    fn chebyshev_matches_spectral_oracle() {
        let h = chain(41);
        let cheb = Propagator::new(h.matrix(), PropagationMethod::Chebyshev, Execution::Sequential).unwrap();
        let eig = Propagator::new(h.matrix(), PropagationMethod::Eigendecomposition, Execution::Sequential).unwrap();
        let psi = delta(41, 20);
        let a = cheb.propagate_state(&psi, 3.0).unwrap();
        let b = eig.propagate_state(&psi, 3.0).unwrap();
        let err = a.iter().zip(&b).map(|(x, y)| (x - y).norm()).fold(0.0, f64::max);
        assert!(err < 1e-9, "{err}");
        let norm: f64 = a.iter().map(|v| v.norm_sqr()).sum();
        assert!((norm - 1.0).abs() < 1e-10);
    }

    #[test]
    fn diagonal_generator_gives_phases() {
        let zero = DispersionRelation::closed_form(1, crate::dispersion::Symbol::Constant { energy: 0.0 }, f64::INFINITY).unwrap();
        let h = build_hamiltonian(&zero, &Potential::Linear { slope: vec![0.5] }, &LatticeBox::chain(-3, 3).unwrap()).unwrap();
        let p = Propagator::for_hamiltonian(&h, Execution::Sequential).unwrap();
        let psi: Vec<C64> = (0..7).map(|k| C64::new(1.0 + k as f64, 0.5)).collect();
        let out = p.propagate_state(&psi, 1.7).unwrap();
        for (k, x) in (-3..=3).enumerate() {
            let expect = psi[k] * C64::from_polar(1.0, -0.5 * x as f64 * 1.7);
            assert!((out[k] - expect).norm() < 1e-12);
        }
        let lb = LatticeBox::chain(-3, 3).unwrap();
        let x = Region::interval("X", &lb, -3, -1).unwrap();
        let y = Region::interval("Y", &lb, 1, 3).unwrap();
        assert_eq!(leakage_norm(&p, &x, &y, 2.0, &PowerOptions::default()), 0.0);
    }

    #[test]
    fn observable_reconstruction() {
        let lb = LatticeBox::centered_chain(9).unwrap();
        let x = Region::interval("X", &lb, -1, 1).unwrap();
        let a = Observable::random_localized(&x, 9, 3).unwrap();
        assert!((a.norm() - 1.0).abs() < 1e-9);
        let tilde = localize_observable(&a).unwrap();
        let mut rebuilt = tilde.matrix();
        for i in 0..9 {
            rebuilt[(i, i)] += ONE;
        }
        assert_eq!(rebuilt, a.matrix());
        assert!(tilde.norm() <= 2.0 * a.norm() + 1e-12);

        let id = Observable::acting_on(&DMatrix::identity(3, 3), &x, 9).unwrap();
        assert_eq!(localize_observable(&id).unwrap().norm(), 0.0);

        let two = Observable::acting_on(&(DMatrix::identity(3, 3) * C64::from(2.0)), &x, 9).unwrap();
        let t = localize_observable(&two).unwrap().matrix();
        assert_eq!(t, embed(&DMatrix::identity(3, 3), &x, 9));

        assert!(localize_observable(&Observable::global(DMatrix::identity(9, 9)).unwrap()).is_err());
        assert!(Observable::from_matrix_on(&a.matrix(), &x).is_ok());
        let mut bad = a.matrix();
        bad[(0, 8)] = ONE;
        assert!(Observable::from_matrix_on(&bad, &x).is_err());
    }

    #[test]
    fn truncation_acts_on_region() {
        let h = chain(21);
        let p = Propagator::for_hamiltonian(&h, Execution::Sequential).unwrap();
        let lb = h.lattice().clone();
        let x = Region::interval("X", &lb, -1, 1).unwrap();
        let a = Observable::random_localized(&x, 21, 9).unwrap();
        let a_t = heisenberg_evolve(&p, &a, 1.5).unwrap();
        let u = Region::interval("U", &lb, -5, 5).unwrap();
        let tr = lc_truncation(&a_t, &u);
        assert!(Observable::from_matrix_on(&tr.matrix(), &u).is_ok());
        let whole = Region::whole(&lb);
        assert_eq!(truncation_error(&a_t, &whole, &PowerOptions::default()), 0.0);
    }

    #[test]
    fn density_validation() {
        let lb = LatticeBox::centered_chain(7).unwrap();
        let x = Region::interval("X", &lb, -1, 1).unwrap();
        let rho = DensityOperator::random_mixed(&x, 7, 2, 1).unwrap();
        assert!((state_region_probability(&rho, &x) - 1.0).abs() < 1e-12);
        assert_eq!(state_region_probability(&rho, &Region::empty("e")), 0.0);
        let y = Region::interval("Y", &lb, 2, 3).unwrap();
        assert!(DensityOperator::new(rho.matrix().clone(), Some(y)).is_err());
        assert!(DensityOperator::new(DMatrix::identity(3, 3), None).is_err());
    }

    #[test]
    fn otoc_of_maximally_mixed_state_is_nonnegative() {
        let h = chain(15);
        let p = Propagator::for_hamiltonian(&h, Execution::Sequential).unwrap();
        let lb = h.lattice().clone();
        let a = Observable::random_localized(&Region::interval("X", &lb, -7, -4).unwrap(), 15, 1).unwrap();
        let b = Observable::random_localized(&Region::interval("Y", &lb, 2, 5).unwrap(), 15, 2).unwrap();
        let a_t = heisenberg_evolve(&p, &a, 2.0).unwrap();
        let rho = DensityOperator::maximally_mixed(15);
        let v = otoc(&rho, &a_t, &b).unwrap();
        let c = commutator_norm(&a_t, &b, &PowerOptions::default()).unwrap();
        assert!(v >= 0.0);
        assert!(v <= c * c * (1.0 + 1e-10));
        assert_eq!(otoc(&rho, &a, &b).unwrap(), 0.0);
    }
}
