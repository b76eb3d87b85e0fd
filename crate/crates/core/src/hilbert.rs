//! Composite tensor-product space: one three-level qubit, (n-1) four-level
//! qubits, and a truncated cavity mode, with sparse operators acting on it.
//!
//! Site ordering is fixed: site 0 is the three-level qubit, sites 1..n-1 are
//! the four-level qubits, and the cavity is the last site with the
//! fastest-varying index.

use num_complex::Complex64 as C64;

use crate::error::{Error, Result};

/// Index space over qubit 1 (3 levels) ⊗ qubits 2..n (4 levels each) ⊗ cavity.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CompositeBasis {
    n_qubits: usize,
    dims: Vec<usize>,
    strides: Vec<usize>,
    dim: usize,
}

impl CompositeBasis {
    /// Build the basis for `n` qubits with photon truncation `n_max`.
    pub fn new(n: usize, n_max: usize) -> Result<Self> {
        if n < 2 {
            return Err(Error::Config(format!("need at least 2 qubits, got {n}")));
        }
        if n_max < 1 {
            return Err(Error::Config(format!(
                "photon truncation must be at least 1, got {n_max}"
            )));
        }
        let mut dims = Vec::with_capacity(n + 1);
        dims.push(3);
        dims.extend(std::iter::repeat(4).take(n - 1));
        dims.push(n_max + 1);
        let mut strides = vec![0usize; dims.len()];
        let mut acc = 1;
        for (k, d) in dims.iter().enumerate().rev() {
            strides[k] = acc;
            acc *= d;
        }
        Ok(Self { n_qubits: n, dims, strides, dim: acc })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn n_qubits(&self) -> usize {
        self.n_qubits
    }

    /// Number of tensor factors (qubits plus the cavity).
    pub fn n_sites(&self) -> usize {
        self.dims.len()
    }

    /// Site index of the cavity mode.
    pub fn cavity_site(&self) -> usize {
        self.n_qubits
    }

    pub fn cavity_dim(&self) -> usize {
        self.dims[self.cavity_site()]
    }

    pub fn local_dim(&self, site: usize) -> usize {
        self.dims[site]
    }

    /// Local level occupied at `site` for the flat basis index `index`.
    pub fn level_at(&self, index: usize, site: usize) -> usize {
        (index / self.strides[site]) % self.dims[site]
    }

    /// Flat index from a multi-index (one level per site, cavity last).
    pub fn flatten(&self, levels: &[usize]) -> usize {
        debug_assert_eq!(levels.len(), self.dims.len());
        levels
            .iter()
            .zip(&self.strides)
            .map(|(&l, &s)| l * s)
            .sum()
    }

    pub fn unflatten(&self, index: usize) -> Vec<usize> {
        (0..self.dims.len())
            .map(|site| self.level_at(index, site))
            .collect()
    }
}

/// Pure state on a [`CompositeBasis`]. The norm is tracked, never silently
/// restored.
#[derive(Debug, Clone)]
pub struct StateVector {
    basis: CompositeBasis,
    amps: Vec<C64>,
}

impl StateVector {
    pub fn zero(basis: &CompositeBasis) -> Self {
        Self { basis: basis.clone(), amps: vec![C64::ZERO; basis.dim()] }
    }

    pub fn from_amplitudes(basis: &CompositeBasis, amps: Vec<C64>) -> Result<Self> {
        if amps.len() != basis.dim() {
            return Err(Error::DimensionMismatch { expected: basis.dim(), got: amps.len() });
        }
        Ok(Self { basis: basis.clone(), amps })
    }

    /// Basis state |levels⟩ with unit amplitude.
    pub fn basis_state(basis: &CompositeBasis, levels: &[usize]) -> Self {
        let mut v = Self::zero(basis);
        v.amps[basis.flatten(levels)] = C64::ONE;
        v
    }

    pub fn basis(&self) -> &CompositeBasis {
        &self.basis
    }

    pub fn amplitudes(&self) -> &[C64] {
        &self.amps
    }

    pub fn amplitudes_mut(&mut self) -> &mut [C64] {
        &mut self.amps
    }

    pub fn norm(&self) -> f64 {
        self.amps.iter().map(|a| a.norm_sqr()).sum::<f64>().sqrt()
    }

    pub fn scale(&mut self, c: C64) {
        for a in &mut self.amps {
            *a *= c;
        }
    }

    pub fn add_scaled(&mut self, other: &StateVector, c: C64) {
        for (a, b) in self.amps.iter_mut().zip(&other.amps) {
            *a += c * b;
        }
    }
}

/// ⟨φ|ψ⟩ with the first argument the ket.
pub fn overlap(psi: &StateVector, phi: &StateVector) -> Result<C64> {
    if psi.basis != phi.basis {
        return Err(Error::BasisMismatch);
    }
    Ok(phi
        .amps
        .iter()
        .zip(&psi.amps)
        .map(|(f, p)| f.conj() * p)
        .sum())
}

/// Probability of finding `site` in `level`, summed over the rest.
pub fn population(psi: &StateVector, site: usize, level: usize) -> Result<f64> {
    let basis = &psi.basis;
    if site >= basis.n_sites() || level >= basis.local_dim(site) {
        return Err(Error::Config(format!(
            "site {site} / level {level} out of range"
        )));
    }
    let stride = basis.strides[site];
    let d = basis.dims[site];
    let mut total = 0.0;
    for (i, a) in psi.amps.iter().enumerate() {
        if (i / stride) % d == level {
            total += a.norm_sqr();
        }
    }
    Ok(total)
}

/// ⊗_j (|0⟩_j + |1⟩_j)/√2 ⊗ |0⟩_c.
pub fn initial_product_state(basis: &CompositeBasis) -> StateVector {
    let n = basis.n_qubits();
    let amp = C64::new(2f64.powi(-(n as i32)).sqrt(), 0.0);
    let mut psi = StateVector::zero(basis);
    let mut levels = vec![0usize; basis.n_sites()];
    for mask in 0..(1usize << n) {
        for (q, l) in levels.iter_mut().take(n).enumerate() {
            *l = (mask >> q) & 1;
        }
        levels[basis.cavity_site()] = 0;
        psi.amps[basis.flatten(&levels)] = amp;
    }
    psi
}

/// Hermitian-aware sparse matrix in compressed-row form.
#[derive(Debug, Clone)]
pub struct SparseOperator {
    dim: usize,
    row_ptr: Vec<usize>,
    cols: Vec<usize>,
    vals: Vec<C64>,
    hermitian: bool,
}

/// Row-parallel matrix-vector products pay off only on large spaces.
#[cfg(feature = "parallel")]
const PAR_APPLY_MIN_DIM: usize = 1024;

impl SparseOperator {
    /// Assemble from (row, col, value) triplets; duplicates are summed and
    /// exact zeros dropped.
    pub fn from_triplets(dim: usize, mut triplets: Vec<(usize, usize, C64)>) -> Self {
        triplets.sort_unstable_by_key(|&(r, c, _)| (r, c));
        let mut merged: Vec<(usize, usize, C64)> = Vec::with_capacity(triplets.len());
        for (r, c, v) in triplets {
            debug_assert!(r < dim && c < dim);
            match merged.last_mut() {
                Some((lr, lc, lv)) if *lr == r && *lc == c => *lv += v,
                _ => merged.push((r, c, v)),
            }
        }
        let mut row_ptr = vec![0usize; dim + 1];
        let mut cols = Vec::with_capacity(merged.len());
        let mut vals = Vec::with_capacity(merged.len());
        for (r, c, v) in merged {
            if v != C64::ZERO {
                row_ptr[r + 1] += 1;
                cols.push(c);
                vals.push(v);
            }
        }
        for r in 0..dim {
            row_ptr[r + 1] += row_ptr[r];
        }
        Self { dim, row_ptr, cols, vals, hermitian: false }
    }

    pub fn identity(dim: usize) -> Self {
        let t = (0..dim).map(|i| (i, i, C64::ONE)).collect();
        let mut op = Self::from_triplets(dim, t);
        op.hermitian = true;
        op
    }

    pub fn diagonal(entries: Vec<C64>) -> Self {
        let dim = entries.len();
        let t = entries
            .into_iter()
            .enumerate()
            .map(|(i, v)| (i, i, v))
            .collect();
        Self::from_triplets(dim, t)
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn nnz(&self) -> usize {
        self.vals.len()
    }

    pub fn is_hermitian_flagged(&self) -> bool {
        self.hermitian
    }

    pub fn mark_hermitian(mut self) -> Self {
        self.hermitian = true;
        self
    }

    pub fn triplets(&self) -> impl Iterator<Item = (usize, usize, C64)> + '_ {
        (0..self.dim).flat_map(move |r| {
            (self.row_ptr[r]..self.row_ptr[r + 1]).map(move |k| (r, self.cols[k], self.vals[k]))
        })
    }

    fn apply_rows(&self, x: &[C64], y: &mut [C64]) {
        for (r, out) in y.iter_mut().enumerate() {
            let mut acc = C64::ZERO;
            for k in self.row_ptr[r]..self.row_ptr[r + 1] {
                acc += self.vals[k] * x[self.cols[k]];
            }
            *out = acc;
        }
    }

    /// y = A x.
    pub fn apply_slice(&self, x: &[C64]) -> Vec<C64> {
        debug_assert_eq!(x.len(), self.dim);
        let mut y = vec![C64::ZERO; self.dim];
        #[cfg(feature = "parallel")]
        if self.dim >= PAR_APPLY_MIN_DIM {
            use rayon::prelude::*;
            y.par_iter_mut().enumerate().for_each(|(r, out)| {
                let mut acc = C64::ZERO;
                for k in self.row_ptr[r]..self.row_ptr[r + 1] {
                    acc += self.vals[k] * x[self.cols[k]];
                }
                *out = acc;
            });
            return y;
        }
        self.apply_rows(x, &mut y);
        y
    }

    /// Sequential matrix-vector product, kept callable for benchmarking
    /// against the parallel path.
    pub fn apply_slice_seq(&self, x: &[C64]) -> Vec<C64> {
        let mut y = vec![C64::ZERO; self.dim];
        self.apply_rows(x, &mut y);
        y
    }

    pub fn apply(&self, psi: &StateVector) -> Result<StateVector> {
        if psi.amps.len() != self.dim {
            return Err(Error::DimensionMismatch { expected: self.dim, got: psi.amps.len() });
        }
        Ok(StateVector { basis: psi.basis.clone(), amps: self.apply_slice(&psi.amps) })
    }

    pub fn scaled(&self, c: C64) -> Self {
        let mut out = self.clone();
        for v in &mut out.vals {
            *v *= c;
        }
        out.hermitian = self.hermitian && c.im == 0.0;
        out
    }

    pub fn add(&self, other: &Self) -> Result<Self> {
        if self.dim != other.dim {
            return Err(Error::DimensionMismatch { expected: self.dim, got: other.dim });
        }
        let mut t: Vec<(usize, usize, C64)> = self.triplets().collect();
        t.extend(other.triplets());
        let mut out = Self::from_triplets(self.dim, t);
        out.hermitian = self.hermitian && other.hermitian;
        Ok(out)
    }

    pub fn adjoint(&self) -> Self {
        let t = self.triplets().map(|(r, c, v)| (c, r, v.conj())).collect();
        let mut out = Self::from_triplets(self.dim, t);
        out.hermitian = self.hermitian;
        out
    }

    /// B A (this operator applied first).
    pub fn then(&self, b: &Self) -> Result<Self> {
        if self.dim != b.dim {
            return Err(Error::DimensionMismatch { expected: self.dim, got: b.dim });
        }
        // (B A)[i, j] = sum_k B[i, k] A[k, j]
        let mut t = Vec::new();
        for (bi, bk, bv) in b.triplets() {
            for k in self.row_ptr[bk]..self.row_ptr[bk + 1] {
                t.push((bi, self.cols[k], bv * self.vals[k]));
            }
        }
        Ok(Self::from_triplets(self.dim, t))
    }

    /// Largest |A[i,j] - conj(A[j,i])| over all entries.
    pub fn hermiticity_defect(&self) -> f64 {
        let adj = self.adjoint();
        let diff = self.add(&adj.scaled(C64::new(-1.0, 0.0))).unwrap();
        diff.vals.iter().map(|v| v.norm()).fold(0.0, f64::max)
    }

    /// Dense copy; refused above `cap` to keep large spaces sparse-only.
    pub fn to_dense(&self, cap: usize) -> Result<Vec<C64>> {
        if self.dim > cap {
            return Err(Error::Numerical(format!(
                "dense materialization of dimension {} exceeds cap {}",
                self.dim, cap
            )));
        }
        let mut m = vec![C64::ZERO; self.dim * self.dim];
        for (r, c, v) in self.triplets() {
            m[r * self.dim + c] += v;
        }
        Ok(m)
    }
}

/// Operator on a single tensor factor, kept as an explicit entry list.
#[derive(Debug, Clone)]
pub struct LocalOp {
    dim: usize,
    entries: Vec<(usize, usize, C64)>,
}

impl LocalOp {
    pub fn new(dim: usize, entries: Vec<(usize, usize, C64)>) -> Self {
        Self { dim, entries }
    }

    /// |to⟩⟨from| on a `dim`-level site.
    pub fn transition(dim: usize, to: usize, from: usize) -> Self {
        Self::new(dim, vec![(to, from, C64::ONE)])
    }

    pub fn projector(dim: usize, level: usize) -> Self {
        Self::new(dim, vec![(level, level, C64::ONE)])
    }

    pub fn identity(dim: usize) -> Self {
        Self::new(dim, (0..dim).map(|k| (k, k, C64::ONE)).collect())
    }

    /// Cavity annihilation operator a for the given truncation.
    pub fn annihilation(cavity_dim: usize) -> Self {
        let entries = (1..cavity_dim)
            .map(|k| (k - 1, k, C64::new((k as f64).sqrt(), 0.0)))
            .collect();
        Self::new(cavity_dim, entries)
    }

    pub fn creation(cavity_dim: usize) -> Self {
        let entries = (1..cavity_dim)
            .map(|k| (k, k - 1, C64::new((k as f64).sqrt(), 0.0)))
            .collect();
        Self::new(cavity_dim, entries)
    }

    pub fn dim(&self) -> usize {
        self.dim
    }
}

/// Promote a single-site operator to the full space, acting as identity on
/// every other factor.
pub fn embed(op: &LocalOp, site: usize, basis: &CompositeBasis) -> Result<SparseOperator> {
    if site >= basis.n_sites() {
        return Err(Error::Config(format!("site {site} out of range")));
    }
    if op.dim != basis.local_dim(site) {
        return Err(Error::DimensionMismatch { expected: basis.local_dim(site), got: op.dim });
    }
    let stride = basis.strides[site] as isize;
    let d = basis.dims[site];
    let mut triplets = Vec::with_capacity(op.entries.len() * basis.dim() / d.max(1));
    for i in 0..basis.dim() {
        let level = (i / basis.strides[site]) % d;
        for &(to, from, v) in &op.entries {
            if from == level {
                let target = (i as isize + (to as isize - from as isize) * stride) as usize;
                triplets.push((target, i, v));
            }
        }
    }
    Ok(SparseOperator::from_triplets(basis.dim(), triplets))
}
