//! Linear algebra kernels: sparse CSR storage, Chebyshev propagation,
//! power-iteration operator norms and a dense matrix exponential.

use nalgebra::DMatrix;
use num_complex::Complex64;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::exec::Execution;

pub type C64 = Complex64;

pub const ZERO: C64 = C64::new(0.0, 0.0);
pub const ONE: C64 = C64::new(1.0, 0.0);

/// Square complex matrix in compressed sparse row form.
#[derive(Debug, Clone, PartialEq)]
pub struct CsrMatrix {
    dim: usize,
    row_ptr: Vec<usize>,
    col_idx: Vec<usize>,
    values: Vec<C64>,
}

impl CsrMatrix {
    /// Assemble from `(row, col, value)` triplets. Duplicates are summed and
    /// exact zeros dropped.
    pub fn from_triplets(dim: usize, triplets: impl IntoIterator<Item = (usize, usize, C64)>) -> Self {
        let mut entries: Vec<(usize, usize, C64)> = triplets.into_iter().collect();
        entries.sort_by(|a, b| (a.0, a.1).cmp(&(b.0, b.1)));
        let mut row_ptr = vec![0usize; dim + 1];
        let mut col_idx = Vec::with_capacity(entries.len());
        let mut values: Vec<C64> = Vec::with_capacity(entries.len());
        let mut rows = Vec::with_capacity(entries.len());
        for (r, c, v) in entries {
            assert!(r < dim && c < dim, "triplet ({r}, {c}) outside {dim}x{dim}");
            if let (Some(&lr), Some(&lc)) = (rows.last(), col_idx.last()) {
                if lr == r && lc == c {
                    *values.last_mut().unwrap() += v;
                    continue;
                }
            }
            rows.push(r);
            col_idx.push(c);
            values.push(v);
        }
        // drop exact zeros produced by cancellation
        let keep: Vec<bool> = values.iter().map(|v| *v != ZERO).collect();
        let mut k_rows = Vec::new();
        let mut k_cols = Vec::new();
        let mut k_vals = Vec::new();
        for i in 0..values.len() {
            if keep[i] {
                k_rows.push(rows[i]);
                k_cols.push(col_idx[i]);
                k_vals.push(values[i]);
            }
        }
        for &r in &k_rows {
            row_ptr[r + 1] += 1;
        }
        for i in 0..dim {
            row_ptr[i + 1] += row_ptr[i];
        }
        CsrMatrix { dim, row_ptr, col_idx: k_cols, values: k_vals }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn nnz(&self) -> usize {
        self.values.len()
    }

    /// Entries of row `i` as `(col, value)`.
    pub fn row(&self, i: usize) -> impl Iterator<Item = (usize, C64)> + '_ {
        let range = self.row_ptr[i]..self.row_ptr[i + 1];
        self.col_idx[range.clone()].iter().copied().zip(self.values[range].iter().copied())
    }

    pub fn get(&self, i: usize, j: usize) -> C64 {
        self.row(i).find(|&(c, _)| c == j).map(|(_, v)| v).unwrap_or(ZERO)
    }

    pub fn triplets(&self) -> impl Iterator<Item = (usize, usize, C64)> + '_ {
        (0..self.dim).flat_map(move |i| self.row(i).map(move |(j, v)| (i, j, v)))
    }

    /// Entrywise map keeping the sparsity pattern.
    pub fn map_entries(&self, f: impl Fn(usize, usize, C64) -> C64) -> CsrMatrix {
        CsrMatrix::from_triplets(self.dim, self.triplets().map(|(i, j, v)| (i, j, f(i, j, v))))
    }

    pub fn adjoint(&self) -> CsrMatrix {
        CsrMatrix::from_triplets(self.dim, self.triplets().map(|(i, j, v)| (j, i, v.conj())))
    }

    pub fn to_dense(&self) -> DMatrix<C64> {
        let mut m = DMatrix::from_element(self.dim, self.dim, ZERO);
        for (i, j, v) in self.triplets() {
            m[(i, j)] = v;
        }
        m
    }

    /// True when every stored value has zero imaginary part.
    pub fn is_real(&self) -> bool {
        self.values.iter().all(|v| v.im == 0.0)
    }

    /// Largest entrywise deviation `|H_ij - conj(H_ji)|`.
    pub fn hermiticity_defect(&self) -> f64 {
        self.triplets()
            .map(|(i, j, v)| (v - self.get(j, i).conj()).norm())
            .fold(0.0, f64::max)
    }

    /// `y = H x`.
    pub fn mul_vec(&self, x: &[C64], y: &mut [C64]) {
        for (i, yi) in y.iter_mut().enumerate() {
            let mut acc = ZERO;
            for k in self.row_ptr[i]..self.row_ptr[i + 1] {
                acc += self.values[k] * x[self.col_idx[k]];
            }
            *yi = acc;
        }
    }

    /// Gershgorin enclosure of the (real) spectrum of a Hermitian matrix.
    pub fn gershgorin_interval(&self) -> (f64, f64) {
        let mut lo = f64::INFINITY;
        let mut hi = f64::NEG_INFINITY;
        for i in 0..self.dim {
            let mut diag = 0.0;
            let mut radius = 0.0;
            for (j, v) in self.row(i) {
                if j == i {
                    diag = v.re;
                } else {
                    radius += v.norm();
                }
            }
            lo = lo.min(diag - radius);
            hi = hi.max(diag + radius);
        }
        if self.dim == 0 {
            (0.0, 0.0)
        } else {
            (lo, hi)
        }
    }
}

/// Bessel functions `J_0(x) .. J_n(x)` by Miller's backward recurrence.
pub fn bessel_j_sequence(x: f64, n: usize) -> Vec<f64> {
    let mut out = vec![0.0; n + 1];
    if x == 0.0 {
        out[0] = 1.0;
        return out;
    }
    let ax = x.abs();
    // start well above both the order and the argument
    let start = n.max(ax.ceil() as usize) + 40 + (10.0 * ax.sqrt()) as usize;
    let start = start + (start % 2);
    let mut j_next = 0.0f64;
    let mut j_cur = 1e-300f64;
    let mut raw = vec![0.0f64; start + 1];
    raw[start] = j_cur;
    for k in (1..=start).rev() {
        let j_prev = (2.0 * k as f64 / ax) * j_cur - j_next;
        j_next = j_cur;
        j_cur = j_prev;
        raw[k - 1] = j_cur;
        if j_cur.abs() > 1e250 {
            for v in raw[k - 1..].iter_mut() {
                *v *= 1e-250;
            }
            j_cur *= 1e-250;
            j_next *= 1e-250;
        }
    }
    // J_0 + 2 sum J_{2k} = 1
    let mut norm = raw[0];
    let mut k = 2;
    while k <= start {
        norm += 2.0 * raw[k];
        k += 2;
    }
    for k in 0..=n {
        let v = raw[k] / norm;
        out[k] = if x < 0.0 && k % 2 == 1 { -v } else { v };
    }
    out
}

/// Settings for the Chebyshev time stepper.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ChebyshevOptions {
    /// Expansion terms whose coefficient falls below this are dropped.
    pub tolerance: f64,
    /// Largest `half_width * dt` handled in one step.
    pub max_phase_per_step: f64,
}

impl Default for ChebyshevOptions {
    fn default() -> Self {
        ChebyshevOptions { tolerance: 1e-30, max_phase_per_step: 20.0 }
    }
}

/// Apply `exp(-i H t)` to every column of `block` for Hermitian `H`.
///
/// The spectrum is enclosed by Gershgorin discs and the exponential expanded
/// in Chebyshev polynomials of the rescaled operator. For a banded `H` the
/// k-th polynomial term reaches exactly k hops, so amplitudes far from the
/// initial support are built only from terms that physically reach them and
/// keep full relative precision.
pub fn chebyshev_propagate(
    h: &CsrMatrix,
    block: &DMatrix<C64>,
    t: f64,
    opts: &ChebyshevOptions,
    exec: Execution,
) -> DMatrix<C64> {
    let dim = h.dim();
    assert_eq!(block.nrows(), dim);
    if t == 0.0 || block.ncols() == 0 {
        return block.clone();
    }
    let (lo, hi) = h.gershgorin_interval();
    let center = 0.5 * (lo + hi);
    let half_width = (0.5 * (hi - lo)).max(1e-300);
    let steps = ((half_width * t.abs()) / opts.max_phase_per_step).ceil().max(1.0) as usize;
    let dt = t / steps as f64;
    let scaled = h.map_entries(|i, j, v| if i == j { (v - center) / half_width } else { v / half_width });
    let coeffs = chebyshev_coefficients(half_width * dt, center * dt, opts.tolerance);

    let cols: Vec<usize> = (0..block.ncols()).collect();
    let evolved: Vec<Vec<C64>> = exec.map(&cols, |&c| {
        let mut psi: Vec<C64> = block.column(c).iter().copied().collect();
        for _ in 0..steps {
            psi = chebyshev_step(&scaled, &psi, &coeffs);
        }
        psi
    });
    let mut out = DMatrix::from_element(dim, block.ncols(), ZERO);
    for (c, col) in evolved.into_iter().enumerate() {
        out.set_column(c, &nalgebra::DVector::from_vec(col));
    }
    out
}

/// Coefficients `a_k` with `exp(-i (w x + s)) = sum_k a_k T_k(x)` on [-1, 1].
fn chebyshev_coefficients(w: f64, shift: f64, tol: f64) -> Vec<C64> {
    let guess = (1.5 * w.abs()).ceil() as usize + 80;
    let j = bessel_j_sequence(w, guess);
    let mut last = 0;
    for (k, v) in j.iter().enumerate() {
        if v.abs() >= tol || (k as f64) <= w.abs() {
            last = k;
        }
    }
    let phase = C64::new(0.0, -shift).exp();
    let mut minus_i_pow = ONE;
    (0..=last.min(guess))
        .map(|k| {
            let factor = if k == 0 { 1.0 } else { 2.0 };
            let c = minus_i_pow * (factor * j[k]) * phase;
            minus_i_pow *= C64::new(0.0, -1.0);
            c
        })
        .collect()
}

fn chebyshev_step(scaled: &CsrMatrix, psi: &[C64], coeffs: &[C64]) -> Vec<C64> {
    let n = psi.len();
    let mut prev: Vec<C64> = psi.to_vec();
    let mut out: Vec<C64> = psi.iter().map(|v| coeffs[0] * v).collect();
    if coeffs.len() == 1 {
        return out;
    }
    let mut cur = vec![ZERO; n];
    scaled.mul_vec(&prev, &mut cur);
    for (o, c) in out.iter_mut().zip(&cur) {
        *o += coeffs[1] * c;
    }
    let mut next = vec![ZERO; n];
    for coeff in &coeffs[2..] {
        scaled.mul_vec(&cur, &mut next);
        for i in 0..n {
            next[i] = 2.0 * next[i] - prev[i];
            out[i] += coeff * next[i];
        }
        std::mem::swap(&mut prev, &mut cur);
        std::mem::swap(&mut cur, &mut next);
    }
    out
}

/// Options for the power iteration computing largest singular values.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PowerOptions {
    pub tolerance: f64,
    pub restarts: usize,
    pub max_iterations: usize,
    pub seed: u64,
}

impl Default for PowerOptions {
    fn default() -> Self {
        PowerOptions { tolerance: 1e-10, restarts: 3, max_iterations: 20_000, seed: 0x5eed }
    }
}

impl PowerOptions {
    pub fn with_seed(mut self, seed: u64) -> Self {
        self.seed = seed;
        self
    }
}

/// Gram matrices up to this size are diagonalized directly.
pub const DENSE_GRAM_LIMIT: usize = 512;

/// Largest singular value of `a`.
///
/// When the smaller side is at most [`DENSE_GRAM_LIMIT`] the top eigenvalue
/// of the Gram matrix is computed directly. Otherwise power iteration on the
/// Gram operator runs from `opts.restarts` seeded random starts and the
/// maximum is taken. Power iteration approaches σ_max from below and can stall
/// on near-degenerate tops, which would understate measured norms.
pub fn largest_singular_value(a: &DMatrix<C64>, opts: &PowerOptions) -> f64 {
    if a.nrows() == 0 || a.ncols() == 0 {
        return 0.0;
    }
    let scale = a.iter().map(|v| v.norm()).fold(0.0, f64::max);
    if scale == 0.0 {
        return 0.0;
    }
    let b = a.map(|v| v / scale);
    if b.nrows().min(b.ncols()) <= DENSE_GRAM_LIMIT {
        let gram = if b.ncols() <= b.nrows() { b.adjoint() * &b } else { &b * b.adjoint() };
        let top = nalgebra::SymmetricEigen::new(gram).eigenvalues.iter().copied().fold(0.0, f64::max);
        return top.sqrt() * scale;
    }
    power_iteration(&b, opts) * scale
}

fn power_iteration(b: &DMatrix<C64>, opts: &PowerOptions) -> f64 {
    let bh = b.adjoint();
    let mut rng = ChaCha8Rng::seed_from_u64(opts.seed);
    let mut best = 0.0f64;
    for _ in 0..opts.restarts.max(1) {
        let mut x = nalgebra::DVector::from_fn(b.ncols(), |_, _| {
            C64::new(StandardNormal.sample(&mut rng), StandardNormal.sample(&mut rng))
        });
        let nx = x.norm();
        x /= C64::from(nx);
        let mut sigma = 0.0f64;
        for _ in 0..opts.max_iterations {
            let y = b * &x;
            let s_new = y.norm();
            let z = &bh * y;
            let nz = z.norm();
            if nz == 0.0 {
                sigma = s_new;
                break;
            }
            x = z / C64::from(nz);
            if (s_new - sigma).abs() <= opts.tolerance * s_new {
                sigma = s_new;
                break;
            }
            sigma = s_new;
        }
        best = best.max(sigma);
    }
    best
}

/// Dense `exp(a)` by scaling and squaring with a Taylor kernel.
pub fn expm(a: &DMatrix<C64>) -> DMatrix<C64> {
    let n = a.nrows();
    let norm1 = (0..n)
        .map(|j| a.column(j).iter().map(|v| v.norm()).sum::<f64>())
        .fold(0.0, f64::max);
    let squarings = if norm1 > 0.5 { (norm1 / 0.5).log2().ceil() as i32 } else { 0 };
    let scaled = a * C64::from(0.5f64.powi(squarings));
    let mut result = DMatrix::<C64>::identity(n, n);
    let mut term = DMatrix::<C64>::identity(n, n);
    for k in 1..=40 {
        term = &term * &scaled / C64::from(k as f64);
        result += &term;
        let tn = term.iter().map(|v| v.norm()).fold(0.0, f64::max);
        if tn < 1e-18 {
            break;
        }
    }
    for _ in 0..squarings {
        result = &result * &result;
    }
    result
}

/// Frobenius-normalized random complex Gaussian matrix (test and sampling helper).
pub fn random_gaussian(rows: usize, cols: usize, rng: &mut ChaCha8Rng) -> DMatrix<C64> {
    DMatrix::from_fn(rows, cols, |_, _| C64::new(StandardNormal.sample(rng), StandardNormal.sample(rng)))
}
