//! Exact sparse linear algebra over the rationals.
//!
//! Ranks, kernels, solving and cohomology of bounded complexes of
//! finite-dimensional Q-vector spaces.  No tolerances anywhere: every pivot
//! decision compares a `BigRational` against zero.  This is the substrate on
//! which every quasi-isomorphism claim in the crate is decided slice by
//! slice.

use alloc::collections::BTreeMap;
use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;
use core::fmt;

use num_traits::{One, Zero};

/// Exact rational scalar used throughout the crate.
pub type Rat = num_rational::BigRational;

/// Shorthand for a small integer rational.
pub fn rat(n: i64) -> Rat {
    Rat::from_integer(n.into())
}

/// `n/d` as an exact rational. Panics on `d == 0`.
pub fn ratio(n: i64, d: i64) -> Rat {
    Rat::new(n.into(), d.into())
}

/// Sparse matrix over Q. Absent entries are zero; stored entries are nonzero.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct RatMatrix {
    rows: usize,
    cols: usize,
    entries: BTreeMap<(usize, usize), Rat>,
}

impl RatMatrix {
    pub fn zero(rows: usize, cols: usize) -> Self {
        RatMatrix { rows, cols, entries: BTreeMap::new() }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = RatMatrix::zero(n, n);
        for i in 0..n {
            m.set(i, i, Rat::one());
        }
        m
    }

    pub fn from_rows(rows: &[Vec<Rat>]) -> Self {
        let r = rows.len();
        let c = rows.first().map_or(0, Vec::len);
        let mut m = RatMatrix::zero(r, c);
        for (i, row) in rows.iter().enumerate() {
            assert_eq!(row.len(), c, "ragged rows");
            for (j, v) in row.iter().enumerate() {
                m.set(i, j, v.clone());
            }
        }
        m
    }

    pub fn from_int_rows(rows: &[Vec<i64>]) -> Self {
        let conv: Vec<Vec<Rat>> =
            rows.iter().map(|r| r.iter().map(|&n| rat(n)).collect()).collect();
        Self::from_rows(&conv)
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn get(&self, i: usize, j: usize) -> Rat {
        assert!(i < self.rows && j < self.cols, "index out of bounds");
        self.entries.get(&(i, j)).cloned().unwrap_or_else(Rat::zero)
    }

    pub fn set(&mut self, i: usize, j: usize, v: Rat) {
        assert!(i < self.rows && j < self.cols, "index out of bounds");
        if v.is_zero() {
            self.entries.remove(&(i, j));
        } else {
            self.entries.insert((i, j), v);
        }
    }

    pub fn add_to(&mut self, i: usize, j: usize, v: &Rat) {
        let cur = self.get(i, j);
        self.set(i, j, cur + v);
    }

    pub fn is_zero(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn nnz(&self) -> usize {
        self.entries.len()
    }

    pub fn entries(&self) -> impl Iterator<Item = (usize, usize, &Rat)> {
        self.entries.iter().map(|(&(i, j), v)| (i, j, v))
    }

    pub fn column(&self, j: usize) -> Vec<Rat> {
        (0..self.rows).map(|i| self.get(i, j)).collect()
    }

    pub fn mul_vec(&self, x: &[Rat]) -> Vec<Rat> {
        assert_eq!(x.len(), self.cols, "matrix-vector shape mismatch");
        let mut out = vec![Rat::zero(); self.rows];
        for (&(i, j), v) in &self.entries {
            if !x[j].is_zero() {
                out[i] += v * &x[j];
            }
        }
        out
    }

    pub fn mul(&self, other: &RatMatrix) -> RatMatrix {
        assert_eq!(self.cols, other.rows, "matrix-matrix shape mismatch");
        let mut out = RatMatrix::zero(self.rows, other.cols);
        // group rhs entries by row for sparse traversal
        let mut by_row: Vec<Vec<(usize, &Rat)>> = vec![Vec::new(); other.rows];
        for (&(i, j), v) in &other.entries {
            by_row[i].push((j, v));
        }
        for (&(i, k), a) in &self.entries {
            for &(j, b) in &by_row[k] {
                out.add_to(i, j, &(a * b));
            }
        }
        out
    }

    fn density(&self) -> f64 {
        let cells = self.rows * self.cols;
        if cells == 0 {
            0.0
        } else {
            self.entries.len() as f64 / cells as f64
        }
    }

    /// Reduced row echelon form; returns the RREF rows (sparse) and the
    /// pivot columns in order. Pivot rule: advance column by column, take
    /// the first not-yet-used row with a nonzero entry. Deterministic.
    pub fn rref(&self) -> (Vec<BTreeMap<usize, Rat>>, Vec<usize>) {
        if self.density() > 0.25 {
            self.rref_dense()
        } else {
            self.rref_sparse()
        }
    }

    fn rref_sparse(&self) -> (Vec<BTreeMap<usize, Rat>>, Vec<usize>) {
        let mut rows: Vec<BTreeMap<usize, Rat>> = vec![BTreeMap::new(); self.rows];
        for (&(i, j), v) in &self.entries {
            rows[i].insert(j, v.clone());
        }
        let mut pivots = Vec::new();
        let mut next = 0usize;
        for col in 0..self.cols {
            let Some(p) = (next..self.rows).find(|&r| rows[r].contains_key(&col)) else {
                continue;
            };
            rows.swap(next, p);
            let inv = {
                let pv = &rows[next][&col];
                Rat::one() / pv.clone()
            };
            if !inv.is_one() {
                let scaled: BTreeMap<usize, Rat> =
                    rows[next].iter().map(|(&j, v)| (j, v * &inv)).collect();
                rows[next] = scaled;
            }
            let pivot_row = rows[next].clone();
            for (r, row) in rows.iter_mut().enumerate() {
                if r == next {
                    continue;
                }
                let Some(f) = row.get(&col).cloned() else { continue };
                for (&j, v) in &pivot_row {
                    let delta = &f * v;
                    match row.get_mut(&j) {
                        Some(slot) => {
                            *slot -= delta;
                            if slot.is_zero() {
                                row.remove(&j);
                            }
                        }
                        None => {
                            if !delta.is_zero() {
                                row.insert(j, -delta);
                            }
                        }
                    }
                }
            }
            pivots.push(col);
            next += 1;
            if next == self.rows {
                break;
            }
        }
        (rows, pivots)
    }

    fn rref_dense(&self) -> (Vec<BTreeMap<usize, Rat>>, Vec<usize>) {
        let mut rows: Vec<Vec<Rat>> = vec![vec![Rat::zero(); self.cols]; self.rows];
        for (&(i, j), v) in &self.entries {
            rows[i][j] = v.clone();
        }
        let mut pivots = Vec::new();
        let mut next = 0usize;
        for col in 0..self.cols {
            let Some(p) = (next..self.rows).find(|&r| !rows[r][col].is_zero()) else {
                continue;
            };
            rows.swap(next, p);
            let inv = Rat::one() / rows[next][col].clone();
            if !inv.is_one() {
                for v in rows[next].iter_mut() {
                    if !v.is_zero() {
                        *v *= &inv;
                    }
                }
            }
            for r in 0..self.rows {
                if r == next || rows[r][col].is_zero() {
                    continue;
                }
                let f = rows[r][col].clone();
                for j in 0..self.cols {
                    if !rows[next][j].is_zero() {
                        let delta = &f * &rows[next][j];
                        rows[r][j] -= delta;
                    }
                }
            }
            pivots.push(col);
            next += 1;
            if next == self.rows {
                break;
            }
        }
        let sparse = rows
            .into_iter()
            .map(|r| r.into_iter().enumerate().filter(|(_, v)| !v.is_zero()).collect())
            .collect();
        (sparse, pivots)
    }

    /// Rank and a basis of the kernel. `rank + kernel.len() == cols` always.
    pub fn rank_kernel(&self) -> (usize, Vec<Vec<Rat>>) {
        let (rref, pivots) = self.rref();
        let rank = pivots.len();
        let mut is_pivot = vec![false; self.cols];
        for &c in &pivots {
            is_pivot[c] = true;
        }
        let mut kernel = Vec::new();
        for free in (0..self.cols).filter(|&j| !is_pivot[j]) {
            let mut v = vec![Rat::zero(); self.cols];
            v[free] = Rat::one();
            for (r, &pc) in pivots.iter().enumerate() {
                if let Some(c) = rref[r].get(&free) {
                    v[pc] = -c.clone();
                }
            }
            kernel.push(v);
        }
        (rank, kernel)
    }

    pub fn rank(&self) -> usize {
        self.rref().1.len()
    }

    /// Solve `self * x = b`. Returns `None` when `b` is outside the column
    /// space; absence is a value, not an error.
    pub fn solve(&self, b: &[Rat]) -> Option<Vec<Rat>> {
        assert_eq!(b.len(), self.rows, "rhs length mismatch");
        let mut aug = RatMatrix::zero(self.rows, self.cols + 1);
        for (&(i, j), v) in &self.entries {
            aug.set(i, j, v.clone());
        }
        for (i, v) in b.iter().enumerate() {
            aug.set(i, self.cols, v.clone());
        }
        let (rref, pivots) = aug.rref();
        if pivots.contains(&self.cols) {
            return None; // a row reads 0 = 1
        }
        let mut x = vec![Rat::zero(); self.cols];
        for (r, &pc) in pivots.iter().enumerate() {
            if let Some(v) = rref[r].get(&self.cols) {
                x[pc] = v.clone();
            }
        }
        Some(x)
    }

    /// Horizontal concatenation `[self | other]`.
    pub fn hstack(&self, other: &RatMatrix) -> RatMatrix {
        assert_eq!(self.rows, other.rows, "hstack row mismatch");
        let mut m = RatMatrix::zero(self.rows, self.cols + other.cols);
        for (&(i, j), v) in &self.entries {
            m.set(i, j, v.clone());
        }
        for (&(i, j), v) in &other.entries {
            m.set(i, self.cols + j, v.clone());
        }
        m
    }

    pub fn from_columns(rows: usize, cols: &[Vec<Rat>]) -> RatMatrix {
        let mut m = RatMatrix::zero(rows, cols.len());
        for (j, col) in cols.iter().enumerate() {
            assert_eq!(col.len(), rows, "column length mismatch");
            for (i, v) in col.iter().enumerate() {
                m.set(i, j, v.clone());
            }
        }
        m
    }
}

/// A basis of `span(ambient) / span(sub)`, chosen among the ambient vectors.
/// Returns the indices of the chosen ambient vectors.
pub fn quotient_basis_indices(dim: usize, sub: &[Vec<Rat>], ambient: &[Vec<Rat>]) -> Vec<usize> {
    let stacked = RatMatrix::from_columns(dim, sub).hstack(&RatMatrix::from_columns(dim, ambient));
    let (_, pivots) = stacked.rref();
    pivots.into_iter().filter(|&c| c >= sub.len()).map(|c| c - sub.len()).collect()
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum ComplexError {
    ShapeMismatch { degree: i64 },
    SquareNonzero { degree: i64 },
}

impl fmt::Display for ComplexError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ComplexError::ShapeMismatch { degree } => {
                write!(f, "differential shape mismatch at degree {degree}")
            }
            ComplexError::SquareNonzero { degree } => {
                write!(f, "d \u{2218} d != 0 starting at degree {degree}")
            }
        }
    }
}

/// A finite cochain complex of Q-vector spaces, extracted at a fixed weight
/// slice of some graded algebra. Basis labels are carried along so that
/// cohomology representatives can be printed as monomials.
#[derive(Clone, Debug)]
pub struct SlicedComplex {
    pub min_degree: i64,
    /// `dims[i]` is the dimension in degree `min_degree + i`.
    pub dims: Vec<usize>,
    /// `differentials[i]` maps degree `min_degree + i` to the next degree.
    /// The last entry maps into the zero space.
    pub differentials: Vec<RatMatrix>,
    pub labels: Vec<Vec<String>>,
}

/// Cohomology of one degree of a `SlicedComplex`.
#[derive(Clone, Debug)]
pub struct CohomologySlice {
    pub degree: i64,
    pub dim: usize,
    /// Cocycle representatives, independent modulo coboundaries.
    pub representatives: Vec<Vec<Rat>>,
}

impl SlicedComplex {
    pub fn new(min_degree: i64, dims: Vec<usize>, differentials: Vec<RatMatrix>) -> Self {
        let labels = dims
            .iter()
            .map(|&d| (0..d).map(|i| alloc::format!("b{i}")).collect())
            .collect();
        SlicedComplex { min_degree, dims, differentials, labels }
    }

    pub fn max_degree(&self) -> i64 {
        self.min_degree + self.dims.len() as i64 - 1
    }

    pub fn dim_at(&self, degree: i64) -> usize {
        let idx = degree - self.min_degree;
        if idx < 0 || idx as usize >= self.dims.len() {
            0
        } else {
            self.dims[idx as usize]
        }
    }

    pub fn differential_at(&self, degree: i64) -> RatMatrix {
        let idx = degree - self.min_degree;
        if idx < 0 || idx as usize >= self.differentials.len() {
            RatMatrix::zero(self.dim_at(degree + 1), self.dim_at(degree))
        } else {
            self.differentials[idx as usize].clone()
        }
    }

    /// Check shapes and `d^{n+1} \u{2218} d^n = 0` exactly.
    pub fn validate(&self) -> Result<(), ComplexError> {
        assert_eq!(self.dims.len(), self.differentials.len(), "dims/differentials length");
        for i in 0..self.dims.len() {
            let next = if i + 1 < self.dims.len() { self.dims[i + 1] } else { 0 };
            let d = &self.differentials[i];
            if d.cols() != self.dims[i] || d.rows() != next {
                return Err(ComplexError::ShapeMismatch {
                    degree: self.min_degree + i as i64,
                });
            }
        }
        for i in 0..self.differentials.len().saturating_sub(1) {
            if !self.differentials[i + 1].mul(&self.differentials[i]).is_zero() {
                return Err(ComplexError::SquareNonzero {
                    degree: self.min_degree + i as i64,
                });
            }
        }
        Ok(())
    }

    /// Per-degree cohomology dimensions and representatives.
    ///
    /// `dim H^n = dim ker d^n - rank d^{n-1}`; the representatives are
    /// kernel vectors independent modulo the image of the previous
    /// differential.
    pub fn cohomology(&self) -> Result<Vec<CohomologySlice>, ComplexError> {
        self.validate()?;
        let mut out = Vec::new();
        for i in 0..self.dims.len() {
            let degree = self.min_degree + i as i64;
            let dim = self.dims[i];
            let (_, kernel) = self.differentials[i].rank_kernel();
            let image: Vec<Vec<Rat>> = if i == 0 {
                Vec::new()
            } else {
                let prev = &self.differentials[i - 1];
                (0..prev.cols()).map(|j| prev.column(j)).collect()
            };
            let chosen = quotient_basis_indices(dim, &image, &kernel);
            let representatives: Vec<Vec<Rat>> =
                chosen.iter().map(|&k| kernel[k].clone()).collect();
            out.push(CohomologySlice { degree, dim: representatives.len(), representatives });
        }
        Ok(out)
    }

    pub fn cohomology_dims(&self) -> Result<Vec<(i64, usize)>, ComplexError> {
        Ok(self.cohomology()?.into_iter().map(|c| (c.degree, c.dim)).collect())
    }

    pub fn euler_characteristic(&self) -> Rat {
        let mut chi = Rat::zero();
        for (i, &d) in self.dims.iter().enumerate() {
            let sign = if (self.min_degree + i as i64).rem_euclid(2) == 0 { 1 } else { -1 };
            chi += rat(sign * d as i64);
        }
        chi
    }

    /// Restrict to a subcomplex given by per-degree spanning vectors.
    /// The spans must be closed under the differential; each `d(w)` is
    /// re-expressed in the chosen basis by an exact solve.
    ///
    /// Returns the restricted complex together with the chosen basis
    /// vectors per degree (a linearly independent subset of the spans).
    pub fn restrict(&self, spans: &[Vec<Vec<Rat>>]) -> (SlicedComplex, Vec<Vec<Vec<Rat>>>) {
        assert_eq!(spans.len(), self.dims.len(), "one span list per degree");
        // independent subset per degree
        let bases: Vec<Vec<Vec<Rat>>> = spans
            .iter()
            .enumerate()
            .map(|(i, sp)| {
                let m = RatMatrix::from_columns(self.dims[i], sp);
                let (_, pivots) = m.rref();
                pivots.into_iter().map(|j| sp[j].clone()).collect()
            })
            .collect();
        let dims: Vec<usize> = bases.iter().map(Vec::len).collect();
        let mut differentials = Vec::new();
        for i in 0..dims.len() {
            let target_dim = if i + 1 < dims.len() { dims[i + 1] } else { 0 };
            let mut d = RatMatrix::zero(target_dim, dims[i]);
            if target_dim > 0 || dims[i] == 0 {
                let basis_mat = RatMatrix::from_columns(
                    if i + 1 < dims.len() { self.dims[i + 1] } else { 0 },
                    if i + 1 < dims.len() { &bases[i + 1] } else { &[] },
                );
                for (j, w) in bases[i].iter().enumerate() {
                    let dw = self.differentials[i].mul_vec(w);
                    if dw.iter().all(Zero::is_zero) {
                        continue;
                    }
                    let coords = basis_mat
                        .solve(&dw)
                        .expect("span not closed under the differential");
                    for (r, c) in coords.into_iter().enumerate() {
                        d.set(r, j, c);
                    }
                }
            } else {
                for w in bases[i].iter() {
                    let dw = self.differentials[i].mul_vec(w);
                    assert!(dw.iter().all(Zero::is_zero), "span not closed under the differential");
                }
            }
            differentials.push(d);
        }
        let mut c = SlicedComplex::new(self.min_degree, dims, differentials);
        for (i, lab) in c.labels.iter_mut().enumerate() {
            for (k, l) in lab.iter_mut().enumerate() {
                *l = alloc::format!("s{}_{}", self.min_degree + i as i64, k);
            }
        }
        (c, bases)
    }

    /// Quotient by a differential-closed family of per-degree spans.
    /// The quotient basis is taken among the original basis vectors
    /// (non-pivot coordinates), so labels survive.
    pub fn quotient(&self, spans: &[Vec<Vec<Rat>>]) -> SlicedComplex {
        assert_eq!(spans.len(), self.dims.len(), "one span list per degree");
        // For each degree: RREF of the span matrix; quotient basis = the
        // non-pivot coordinates. The projection sets pivot coordinates by
        // back-substitution of the RREF rows.
        let mut kept: Vec<Vec<usize>> = Vec::new();
        let mut rrefs = Vec::new();
        let mut pivots_all = Vec::new();
        for (i, sp) in spans.iter().enumerate() {
            // rows of the matrix are span vectors: reduce in coordinate space
            let rows: Vec<Vec<Rat>> = sp.clone();
            let m = RatMatrix::from_rows(&rows);
            let m = if m.cols() == 0 { RatMatrix::zero(rows.len(), self.dims[i]) } else { m };
            let (rr, piv) = m.rref();
            let pivset: Vec<usize> = piv.clone();
            let keep: Vec<usize> =
                (0..self.dims[i]).filter(|j| !pivset.contains(j)).collect();
            kept.push(keep);
            rrefs.push(rr);
            pivots_all.push(piv);
        }
        let project = |i: usize, v: &[Rat]| -> Vec<Rat> {
            // subtract the span contribution so that pivot coords vanish
            let mut w = v.to_vec();
            for (r, &pc) in pivots_all[i].iter().enumerate() {
                if w[pc].is_zero() {
                    continue;
                }
                let f = w[pc].clone();
                for (&j, val) in &rrefs[i][r] {
                    let delta = &f * val;
                    w[j] -= delta;
                }
            }
            kept[i].iter().map(|&j| w[j].clone()).collect()
        };
        let dims: Vec<usize> = kept.iter().map(Vec::len).collect();
        let mut differentials = Vec::new();
        for i in 0..dims.len() {
            let target = if i + 1 < dims.len() { dims[i + 1] } else { 0 };
            let mut d = RatMatrix::zero(target, dims[i]);
            if target > 0 {
                for (jj, &j) in kept[i].iter().enumerate() {
                    let mut e = vec![Rat::zero(); self.dims[i]];
                    e[j] = Rat::one();
                    let de = self.differentials[i].mul_vec(&e);
                    let q = project(i + 1, &de);
                    for (r, c) in q.into_iter().enumerate() {
                        d.set(r, jj, c);
                    }
                }
            }
            differentials.push(d);
        }
        let labels: Vec<Vec<String>> = kept
            .iter()
            .enumerate()
            .map(|(i, ks)| ks.iter().map(|&j| self.labels[i][j].clone()).collect())
            .collect();
        SlicedComplex { min_degree: self.min_degree, dims, differentials, labels }
    }
}
