//! Polynomial differential forms on simplices, the Thom-Whitney equalizer,
//! the alternating-sum total complex, and the homotopy retraction between
//! them.
//!
//! Forms on the `n`-simplex are presented in eliminated coordinates
//! (`t_0 = 1 - sum t_i`, `dt_0 = -sum dt_i`), with a polynomial-degree cap
//! that makes every slice finite; the cap is checked by stabilization, not
//! trusted.  The Thom-Whitney complex of a cosimplicial complex is the
//! equalizer of the face (and, when present, degeneracy) compatibilities
//! inside the product of level-wise tensors, computed slice by slice as a
//! kernel.  `I` is built from Whitney elementary forms, `P` integrates over
//! each simplex, and the homotopy `H` is assembled from an exact
//! contraction of `ker P`.

use alloc::collections::BTreeMap;
use alloc::vec;
use alloc::vec::Vec;

use num_traits::{One, Zero};

use crate::exactlin::{rat, Rat, RatMatrix, SlicedComplex};
use crate::gca::{
    enumerate_capped, Algebra, AlgebraMap, BaseRing, Cap, Derivation, GcaElement, GeneratorSpec,
    Monomial,
};

/// Algebraic differential forms on the standard `n`-simplex, truncated at
/// polynomial degree `p_max`.
#[derive(Clone, Debug)]
pub struct SimplexForms {
    pub n: usize,
    pub p_max: u32,
    pub algebra: Algebra,
    pub d: Derivation,
}

impl SimplexForms {
    pub fn new(n: usize, p_max: u32) -> Self {
        let mut gens = Vec::new();
        for i in 1..=n {
            gens.push(GeneratorSpec::new(&alloc::format!("t{i}"), 0, 1));
        }
        for i in 1..=n {
            gens.push(GeneratorSpec::new(&alloc::format!("dt{i}"), 1, 1));
        }
        let algebra = Algebra::new(BaseRing::default(), gens);
        let mut d = Derivation::zero(&algebra, 1);
        for i in 0..n {
            d = d.with_gen_image(i, algebra.gen(n + i));
        }
        SimplexForms { n, p_max, algebra, d }
    }

    fn t_cap(&self) -> Vec<Cap> {
        // the cap counts dt factors too: d preserves it exactly, so each
        // capped slice keeps the acyclicity of full polynomial forms
        vec![Cap { gens: (0..2 * self.n).collect(), max_total: self.p_max }]
    }

    /// Basis monomials within the polynomial cap.
    pub fn basis(&self) -> Vec<Monomial> {
        enumerate_capped(&self.algebra, &self.t_cap())
    }

    /// Vertex coordinate `t_i`, including the eliminated `t_0`.
    pub fn t(&self, i: usize) -> GcaElement {
        assert!(i <= self.n);
        if i == 0 {
            let mut out = self.algebra.one();
            for j in 0..self.n {
                out = out.sub(&self.algebra.gen(j));
            }
            out
        } else {
            self.algebra.gen(i - 1)
        }
    }

    pub fn dt(&self, i: usize) -> GcaElement {
        assert!(i <= self.n);
        if i == 0 {
            let mut out = GcaElement::zero();
            for j in 0..self.n {
                out = out.sub(&self.algebra.gen(self.n + j));
            }
            out
        } else {
            self.algebra.gen(self.n + i - 1)
        }
    }

    pub fn differential(&self, el: &GcaElement) -> GcaElement {
        self.algebra.apply(&self.d, el)
    }

    /// Pullback along the `k`-th face inclusion, as a map into the forms on
    /// the `(n-1)`-simplex: `t_k` goes to zero, later coordinates shift
    /// down.
    pub fn face_map(&self, k: usize) -> (SimplexForms, AlgebraMap) {
        assert!(k <= self.n && self.n >= 1, "face index out of range");
        let target = SimplexForms::new(self.n - 1, self.p_max);
        let mut map = AlgebraMap::identity(&self.algebra);
        map.gen_images = Vec::new();
        let image_of_t = |j: usize| -> GcaElement {
            // full-coordinate rule on Delta^{n-1}
            if j < k {
                target.t(j)
            } else if j == k {
                GcaElement::zero()
            } else {
                target.t(j - 1)
            }
        };
        for j in 1..=self.n {
            map.gen_images.push(image_of_t(j));
        }
        for j in 1..=self.n {
            map.gen_images.push(target.differential(&image_of_t(j)));
        }
        (target, map)
    }

    /// Pullback along the `k`-th degeneracy (collapse) map, landing in the
    /// forms on the `(n+1)`-simplex: `t_k` becomes `t_k + t_{k+1}`.
    pub fn degeneracy_map(&self, k: usize) -> (SimplexForms, AlgebraMap) {
        assert!(k <= self.n, "degeneracy index out of range");
        let target = SimplexForms::new(self.n + 1, self.p_max);
        let mut map = AlgebraMap::identity(&self.algebra);
        map.gen_images = Vec::new();
        let image_of_t = |j: usize| -> GcaElement {
            if j < k {
                target.t(j)
            } else if j == k {
                target.t(k).add(&target.t(k + 1))
            } else {
                target.t(j + 1)
            }
        };
        for j in 1..=self.n {
            map.gen_images.push(image_of_t(j));
        }
        for j in 1..=self.n {
            map.gen_images.push(target.differential(&image_of_t(j)));
        }
        (target, map)
    }

    /// Form degree of a monomial: the number of `dt` factors.
    pub fn form_degree(&self, m: &Monomial) -> i64 {
        (self.n..2 * self.n).map(|i| m.gen_exps[i] as i64).sum()
    }

    /// Exact integral of the top-degree part over the simplex:
    /// `int t^a dt_1...dt_n = prod(a_i!) / (n + sum a_i)!`.
    pub fn integrate(&self, el: &GcaElement) -> Rat {
        let mut total = Rat::zero();
        for (m, c) in &el.terms {
            if (self.n..2 * self.n).any(|i| m.gen_exps[i] != 1) {
                continue;
            }
            let mut numer = num_bigint::BigInt::from(1);
            let mut s: u64 = 0;
            for i in 0..self.n {
                let a = m.gen_exps[i] as u64;
                s += a;
                for f in 1..=a {
                    numer *= f;
                }
            }
            let mut denom = num_bigint::BigInt::from(1);
            for f in 1..=(self.n as u64 + s) {
                denom *= f;
            }
            total += c * Rat::new(numer, denom);
        }
        total
    }

    /// Whitney elementary form of a vertex tuple `i_0 < ... < i_p`:
    /// `p! sum_j (-1)^j t_{i_j} dt_{i_0} ... (omit j) ... dt_{i_p}`.
    pub fn whitney(&self, vertices: &[usize]) -> GcaElement {
        let p = vertices.len() - 1;
        let mut out = GcaElement::zero();
        for j in 0..=p {
            let mut term = self.t(vertices[j]);
            for (l, &v) in vertices.iter().enumerate() {
                if l == j {
                    continue;
                }
                term = self.algebra.mul(&term, &self.dt(v));
            }
            if j % 2 == 1 {
                term = term.neg();
            }
            out = out.add(&term);
        }
        let mut fact = Rat::one();
        for f in 1..=p as i64 {
            fact = fact * rat(f);
        }
        out.scale(&fact)
    }
}

/// A chain map between two complexes sharing a degree range: one matrix per
/// degree.
#[derive(Clone, Debug)]
pub struct ChainMap {
    pub min_degree: i64,
    pub matrices: Vec<RatMatrix>,
}

impl ChainMap {
    pub fn identity(c: &SlicedComplex) -> Self {
        ChainMap {
            min_degree: c.min_degree,
            matrices: c.dims.iter().map(|&d| RatMatrix::identity(d)).collect(),
        }
    }

    pub fn matrix_at(&self, degree: i64, rows: usize, cols: usize) -> RatMatrix {
        let idx = degree - self.min_degree;
        if idx < 0 || idx as usize >= self.matrices.len() {
            RatMatrix::zero(rows, cols)
        } else {
            self.matrices[idx as usize].clone()
        }
    }
}

/// A cosimplicial complex: levels `V^0..V^L` with coface chain maps (and
/// optional codegeneracies, needed to conormalize constant-type diagrams).
#[derive(Clone, Debug)]
pub struct CosimplicialComplex {
    pub levels: Vec<SlicedComplex>,
    /// `cofaces[n-1][k]` is `d^{n,k}: V^{n-1} -> V^n`, `0 <= k <= n`.
    pub cofaces: Vec<Vec<ChainMap>>,
    /// `codegeneracies[n][k]` is `s^{n,k}: V^{n+1} -> V^n`, `0 <= k <= n`.
    pub codegeneracies: Option<Vec<Vec<ChainMap>>>,
}

impl CosimplicialComplex {
    pub fn depth(&self) -> usize {
        self.levels.len() - 1
    }

    fn coface_matrix(&self, n: usize, k: usize, degree: i64) -> RatMatrix {
        self.cofaces[n - 1][k].matrix_at(
            degree,
            self.levels[n].dim_at(degree),
            self.levels[n - 1].dim_at(degree),
        )
    }

    /// Cosimplicial coface identities `d^{n+1,j} d^{n,i} = d^{n+1,i} d^{n,j-1}`
    /// for `i < j`, checked on every stored degree.
    pub fn validate(&self) -> bool {
        let l = self.depth();
        for n in 1..l {
            for j in 0..=(n + 1) {
                for i in 0..j {
                    for degree in self.degree_range() {
                        let lhs = self
                            .coface_matrix(n + 1, j, degree)
                            .mul(&self.coface_matrix(n, i, degree));
                        let rhs = self
                            .coface_matrix(n + 1, i, degree)
                            .mul(&self.coface_matrix(n, j - 1, degree));
                        if lhs != rhs {
                            return false;
                        }
                    }
                }
            }
        }
        true
    }

    pub fn degree_range(&self) -> core::ops::RangeInclusive<i64> {
        let lo = self.levels.iter().map(|c| c.min_degree).min().unwrap();
        let hi = self.levels.iter().map(SlicedComplex::max_degree).max().unwrap();
        lo..=hi
    }

    /// Induced map `V^n -> V^l` of a monotone injection `[n] -> [l]` given
    /// by its image set, as a degree-wise matrix factory.
    fn induced_injection(&self, n: usize, image: &[usize], l: usize, degree: i64) -> RatMatrix {
        let mut missing: Vec<usize> = (0..=l).filter(|v| !image.contains(v)).collect();
        missing.sort_unstable();
        let mut mat = RatMatrix::identity(self.levels[n].dim_at(degree));
        let mut cur = n;
        for m in missing {
            mat = self.coface_matrix(cur + 1, m, degree).mul(&mat);
            cur += 1;
        }
        mat
    }
}

/// The constant cosimplicial object on a complex, with identity cofaces and
/// codegeneracies, truncated at the given depth.
pub fn constant_diagram(v: &SlicedComplex, depth: usize) -> CosimplicialComplex {
    let levels: Vec<SlicedComplex> = (0..=depth).map(|_| v.clone()).collect();
    let cofaces = (1..=depth)
        .map(|n| (0..=n).map(|_| ChainMap::identity(v)).collect())
        .collect();
    let codegeneracies =
        Some((0..depth).map(|n| (0..=n).map(|_| ChainMap::identity(v)).collect()).collect());
    CosimplicialComplex { levels, cofaces, codegeneracies }
}

/// Two-chart Cech diagram of the line bundle `O(d)` on the projective
/// line: level 0 is polynomial sections on each chart (exponent window
/// `0..=w`), level 1 is Laurent sections on the overlap; the second
/// restriction twists by `z^d`.
pub fn cech_p1_line_bundle(d: i64, w: i64) -> CosimplicialComplex {
    assert!(w > 0 && w >= d.abs(), "window too small for the twist");
    // the overlap window is exactly the span of the two restriction
    // images, so the windowed cokernel is the honest one
    let lo1 = 0.min(d - w);
    let hi1 = w.max(d);
    let dim0 = 2 * (w + 1) as usize;
    let dim1 = (hi1 - lo1 + 1) as usize;
    let level0 = SlicedComplex::new(0, vec![dim0], vec![RatMatrix::zero(0, dim0)]);
    let mut level1 = SlicedComplex::new(0, vec![dim1], vec![RatMatrix::zero(0, dim1)]);
    level1.labels = vec![(lo1..=hi1).map(|e| alloc::format!("z^{e}")).collect()];
    // basis of level 0: z^0..z^w on chart 0, then w^0..w^w on chart 1
    // restriction of chart 0: z^a -> z^a; of chart 1: w^b -> z^{d-b}
    let lau = |e: i64| -> usize { (e - lo1) as usize };
    let mut rho0 = RatMatrix::zero(dim1, dim0);
    let mut rho1 = RatMatrix::zero(dim1, dim0);
    for a in 0..=w {
        rho0.set(lau(a), a as usize, Rat::one());
    }
    for b in 0..=w {
        rho1.set(lau(d - b), (w + 1 + b) as usize, Rat::one());
    }
    // d^{1,0} omits the 0th index: the overlap section comes from chart 1
    let cofaces = vec![vec![
        ChainMap { min_degree: 0, matrices: vec![rho1] },
        ChainMap { min_degree: 0, matrices: vec![rho0] },
    ]];
    CosimplicialComplex { levels: vec![level0, level1], cofaces, codegeneracies: None }
}

/// Expected sheaf cohomology of `O(d)` on the projective line.
pub fn p1_cohomology_oracle(d: i64) -> (usize, usize) {
    ((d + 1).max(0) as usize, (-d - 1).max(0) as usize)
}

/// The Thom-Whitney complex of a cosimplicial complex: the equalizer of the
/// face (and degeneracy, when present) compatibilities, computed per total
/// degree as an exact kernel and carried as a subcomplex of the ambient
/// product.
pub struct TwComplex {
    pub forms: Vec<SimplexForms>,
    /// Per degree offset: ambient basis as (level, flat V index, form
    /// monomial).
    pub ambient: Vec<Vec<(usize, usize, Monomial)>>,
    pub min_degree: i64,
    /// Flattened level bases: `flat[n][i] = (degree, index within degree)`.
    pub flat: Vec<Vec<(i64, usize)>>,
    pub complex: SlicedComplex,
    /// TW basis vectors in ambient coordinates, per degree.
    pub basis: Vec<Vec<Vec<Rat>>>,
}

fn flatten_level(c: &SlicedComplex) -> Vec<(i64, usize)> {
    let mut out = Vec::new();
    for (i, &dim) in c.dims.iter().enumerate() {
        for j in 0..dim {
            out.push((c.min_degree + i as i64, j));
        }
    }
    out
}

/// Build the Thom-Whitney equalizer at polynomial cap `p_max`.
pub fn tw(diagram: &CosimplicialComplex, p_max: u32) -> TwComplex {
    let depth = diagram.depth();
    let forms: Vec<SimplexForms> = (0..=depth).map(|n| SimplexForms::new(n, p_max)).collect();
    let flat: Vec<Vec<(i64, usize)>> = diagram.levels.iter().map(flatten_level).collect();
    let v_lo = diagram.levels.iter().map(|c| c.min_degree).min().unwrap();
    let v_hi = diagram.levels.iter().map(SlicedComplex::max_degree).max().unwrap();
    let min_degree = v_lo;
    let max_degree = v_hi + depth as i64 + 1;
    let span = (max_degree - min_degree + 1) as usize;

    // ambient bases per total degree
    let form_bases: Vec<Vec<Monomial>> = forms.iter().map(SimplexForms::basis).collect();
    let mut ambient: Vec<Vec<(usize, usize, Monomial)>> = vec![Vec::new(); span];
    for n in 0..=depth {
        for (vi, &(vdeg, _)) in flat[n].iter().enumerate() {
            for m in &form_bases[n] {
                let total = vdeg + forms[n].form_degree(m);
                let idx = total - min_degree;
                if idx >= 0 && (idx as usize) < span {
                    ambient[idx as usize].push((n, vi, m.clone()));
                }
            }
        }
    }

    let index_of = |deg_idx: usize, key: &(usize, usize, Monomial)| -> usize {
        ambient[deg_idx]
            .iter()
            .position(|k| k == key)
            .expect("ambient index lookup")
    };

    // ambient differential: d_V (x) id + (-1)^{|v|} id (x) d_Omega
    let mut differentials = Vec::new();
    for di in 0..span {
        let target_dim = if di + 1 < span { ambient[di + 1].len() } else { 0 };
        let mut mat = RatMatrix::zero(target_dim, ambient[di].len());
        if target_dim > 0 {
            for (col, (n, vi, m)) in ambient[di].iter().enumerate() {
                let (vdeg, vj) = flat[*n][*vi];
                // d_V part
                let dv = diagram.levels[*n].differential_at(vdeg);
                for r in 0..dv.rows() {
                    let c = dv.get(r, vj);
                    if c.is_zero() {
                        continue;
                    }
                    let tvi = flat[*n]
                        .iter()
                        .position(|&(d, j)| d == vdeg + 1 && j == r)
                        .expect("flat index");
                    let row = index_of(di + 1, &(*n, tvi, m.clone()));
                    mat.add_to(row, col, &c);
                }
                // form part with Koszul sign from the V-degree
                let dm = forms[*n]
                    .differential(&GcaElement::from_monomial(m.clone(), Rat::one()));
                let sign = if vdeg.rem_euclid(2) == 1 { -Rat::one() } else { Rat::one() };
                for (tm, c) in &dm.terms {
                    let row = index_of(di + 1, &(*n, *vi, tm.clone()));
                    mat.add_to(row, col, &(c * &sign));
                }
            }
        }
        differentials.push(mat);
    }
    let dims: Vec<usize> = ambient.iter().map(Vec::len).collect();
    let mut ambient_complex = SlicedComplex::new(min_degree, dims, differentials);
    for (di, basis) in ambient.iter().enumerate() {
        ambient_complex.labels[di] = basis
            .iter()
            .map(|(n, vi, m)| {
                alloc::format!(
                    "L{n}[{vi}]*{}",
                    forms[*n].algebra.print(&GcaElement::from_monomial(m.clone(), Rat::one()))
                )
            })
            .collect();
    }

    // equalizer constraints per degree
    let mut spans: Vec<Vec<Vec<Rat>>> = Vec::new();
    for di in 0..span {
        let cols = ambient[di].len();
        if cols == 0 {
            spans.push(Vec::new());
            continue;
        }
        // rows: face conditions for each n < depth, k <= n+1, over the
        // (V^{n+1} x Omega(Delta^n)) bases; plus degeneracy conditions.
        let mut rows: Vec<BTreeMap<usize, Rat>> = Vec::new();
        let mut row_index: BTreeMap<(usize, usize, usize, usize, Monomial), usize> =
            BTreeMap::new();
        let mut add = |rows: &mut Vec<BTreeMap<usize, Rat>>,
                       key: (usize, usize, usize, usize, Monomial),
                       col: usize,
                       val: Rat| {
            let next = rows.len();
            let idx = *row_index.entry(key).or_insert(next);
            if idx == rows.len() {
                rows.push(BTreeMap::new());
            }
            let slot = rows[idx].entry(col).or_insert_with(Rat::zero);
            *slot += val;
        };
        for (col, (n, vi, m)) in ambient[di].iter().enumerate() {
            let (vdeg, vj) = flat[*n][*vi];
            // face conditions where this level is the lower one: n -> n+1
            if *n < depth {
                for k in 0..=(*n + 1) {
                    let cf = diagram.coface_matrix(*n + 1, k, vdeg);
                    for r in 0..cf.rows() {
                        let c = cf.get(r, vj);
                        if !c.is_zero() {
                            add(&mut rows, (0, *n, k, r_flat(&flat[*n + 1], vdeg, r), m.clone()), col, c);
                        }
                    }
                }
            }
            // face conditions where this level is the upper one: n-1 -> n
            if *n >= 1 {
                for k in 0..=*n {
                    let (_, fm) = forms[*n].face_map(k);
                    let img = fm.apply(
                        &forms[*n - 1].algebra,
                        &GcaElement::from_monomial(m.clone(), Rat::one()),
                    );
                    for (tm, c) in &img.terms {
                        add(
                            &mut rows,
                            (0, *n - 1, k, *vi, tm.clone()),
                            col,
                            -c.clone(),
                        );
                    }
                }
            }
            if let Some(cod) = &diagram.codegeneracies {
                // degeneracy conditions: s^{n,k} x_{n+1} = sigma_k^* x_n,
                // rows over (V^n x Omega(Delta^{n+1}))
                if *n >= 1 {
                    for k in 0..*n {
                        let sm = cod[*n - 1][k].matrix_at(
                            vdeg,
                            diagram.levels[*n - 1].dim_at(vdeg),
                            diagram.levels[*n].dim_at(vdeg),
                        );
                        for r in 0..sm.rows() {
                            let c = sm.get(r, vj);
                            if !c.is_zero() {
                                add(
                                    &mut rows,
                                    (1, *n - 1, k, r_flat(&flat[*n - 1], vdeg, r), m.clone()),
                                    col,
                                    c,
                                );
                            }
                        }
                    }
                }
                if *n < depth {
                    for k in 0..=*n {
                        let (_, dm) = forms[*n].degeneracy_map(k);
                        let img = dm.apply(
                            &forms[*n + 1].algebra,
                            &GcaElement::from_monomial(m.clone(), Rat::one()),
                        );
                        for (tm, c) in &img.terms {
                            add(&mut rows, (1, *n, k, *vi, tm.clone()), col, -c.clone());
                        }
                    }
                }
            }
        }
        let mut constraint = RatMatrix::zero(rows.len(), cols);
        for (r, row) in rows.iter().enumerate() {
            for (&c, v) in row {
                constraint.set(r, c, v.clone());
            }
        }
        let (_, kernel) = constraint.rank_kernel();
        spans.push(kernel);
    }

    let (complex, basis) = ambient_complex.restrict(&spans);
    TwComplex { forms, ambient, min_degree, flat, complex, basis }
}

fn r_flat(flat: &[(i64, usize)], degree: i64, within: usize) -> usize {
    flat.iter()
        .position(|&(d, j)| d == degree && j == within)
        .expect("flat index lookup")
}

/// The total (Cech) complex of a cosimplicial complex, conormalized when
/// codegeneracies are present.
pub struct TotComplex {
    /// Per degree offset: basis as (level, flat V index); for the
    /// conormalized case these index the chosen kernel vectors instead.
    pub complex: SlicedComplex,
    pub min_degree: i64,
}

pub fn tot(diagram: &CosimplicialComplex) -> TotComplex {
    let depth = diagram.depth();
    let flat: Vec<Vec<(i64, usize)>> = diagram.levels.iter().map(flatten_level).collect();
    let v_lo = diagram.levels.iter().map(|c| c.min_degree).min().unwrap();
    let v_hi = diagram.levels.iter().map(SlicedComplex::max_degree).max().unwrap();
    let min_degree = v_lo;
    let max_degree = v_hi + depth as i64;
    let span = (max_degree - min_degree + 1) as usize;
    let mut bases: Vec<Vec<(usize, usize)>> = vec![Vec::new(); span];
    for n in 0..=depth {
        for (vi, &(vdeg, _)) in flat[n].iter().enumerate() {
            let total = vdeg + n as i64;
            let idx = total - min_degree;
            if idx >= 0 && (idx as usize) < span {
                bases[idx as usize].push((n, vi));
            }
        }
    }
    let index_of = |deg_idx: usize, key: &(usize, usize)| -> usize {
        bases[deg_idx].iter().position(|k| k == key).expect("tot index")
    };
    let mut differentials = Vec::new();
    for di in 0..span {
        let target_dim = if di + 1 < span { bases[di + 1].len() } else { 0 };
        let mut mat = RatMatrix::zero(target_dim, bases[di].len());
        if target_dim > 0 {
            for (col, (n, vi)) in bases[di].iter().enumerate() {
                let (vdeg, vj) = flat[*n][*vi];
                // Cech part, signed by the internal degree so that the
                // integration map intertwines it with the form direction:
                // D = d_V + (-1)^{|v|} sum_k (-1)^k d^{n+1,k}
                if *n < depth {
                    let vsign = if vdeg.rem_euclid(2) == 1 { -Rat::one() } else { Rat::one() };
                    for k in 0..=(*n + 1) {
                        let cf = diagram.coface_matrix(*n + 1, k, vdeg);
                        let sign =
                            if k % 2 == 0 { vsign.clone() } else { -vsign.clone() };
                        for r in 0..cf.rows() {
                            let c = cf.get(r, vj);
                            if !c.is_zero() {
                                let row = index_of(
                                    di + 1,
                                    &(*n + 1, r_flat(&flat[*n + 1], vdeg, r)),
                                );
                                mat.add_to(row, col, &(c * &sign));
                            }
                        }
                    }
                }
                // internal part, unsigned
                let dv = diagram.levels[*n].differential_at(vdeg);
                for r in 0..dv.rows() {
                    let c = dv.get(r, vj);
                    if !c.is_zero() {
                        let row =
                            index_of(di + 1, &(*n, r_flat(&flat[*n], vdeg + 1, r)));
                        mat.add_to(row, col, &c);
                    }
                }
            }
        }
        differentials.push(mat);
    }
    let dims: Vec<usize> = bases.iter().map(Vec::len).collect();
    let mut complex = SlicedComplex::new(min_degree, dims, differentials);
    for (di, b) in bases.iter().enumerate() {
        complex.labels[di] = b.iter().map(|(n, vi)| alloc::format!("L{n}[{vi}]")).collect();
    }
    let tot = TotComplex { complex, min_degree };
    if diagram.codegeneracies.is_some() {
        conormalize(diagram, &flat, tot)
    } else {
        tot
    }
}

fn conormalize(
    diagram: &CosimplicialComplex,
    flat: &[Vec<(i64, usize)>],
    raw: TotComplex,
) -> TotComplex {
    // intersect the kernels of all codegeneracies in each level
    let cod = diagram.codegeneracies.as_ref().unwrap();
    let depth = diagram.depth();
    let span = raw.complex.dims.len();
    // rebuild the per-degree basis lists as in `tot`
    let mut bases: Vec<Vec<(usize, usize)>> = vec![Vec::new(); span];
    for n in 0..=depth {
        for (vi, &(vdeg, _)) in flat[n].iter().enumerate() {
            let idx = vdeg + n as i64 - raw.min_degree;
            if idx >= 0 && (idx as usize) < span {
                bases[idx as usize].push((n, vi));
            }
        }
    }
    let mut spans: Vec<Vec<Vec<Rat>>> = Vec::new();
    for di in 0..span {
        let cols = bases[di].len();
        if cols == 0 {
            spans.push(Vec::new());
            continue;
        }
        let mut rows: Vec<BTreeMap<usize, Rat>> = Vec::new();
        let mut row_index: BTreeMap<(usize, usize, usize), usize> = BTreeMap::new();
        for (col, (n, vi)) in bases[di].iter().enumerate() {
            if *n == 0 {
                continue;
            }
            let (vdeg, vj) = flat[*n][*vi];
            for k in 0..*n {
                let sm = cod[*n - 1][k].matrix_at(
                    vdeg,
                    diagram.levels[*n - 1].dim_at(vdeg),
                    diagram.levels[*n].dim_at(vdeg),
                );
                for r in 0..sm.rows() {
                    let c = sm.get(r, vj);
                    if c.is_zero() {
                        continue;
                    }
                    let key = (*n, k, r);
                    let next = rows.len();
                    let idx = *row_index.entry(key).or_insert(next);
                    if idx == rows.len() {
                        rows.push(BTreeMap::new());
                    }
                    let slot = rows[idx].entry(col).or_insert_with(Rat::zero);
                    *slot += c;
                }
            }
        }
        let mut constraint = RatMatrix::zero(rows.len(), cols);
        for (r, row) in rows.iter().enumerate() {
            for (&c, v) in row {
                constraint.set(r, c, v.clone());
            }
        }
        let (_, kernel) = constraint.rank_kernel();
        spans.push(kernel);
    }
    let (complex, _) = raw.complex.restrict(&spans);
    TotComplex { complex, min_degree: raw.min_degree }
}

impl TwComplex {
    /// A TW cochain as symbolic per-level data: for each level, one form
    /// per flattened V-basis vector.
    pub fn element(&self, degree: i64, coords: &[Rat]) -> TwElement {
        let di = (degree - self.min_degree) as usize;
        assert_eq!(coords.len(), self.complex.dims[di], "wrong coordinate length");
        let mut levels: Vec<Vec<GcaElement>> =
            self.flat.iter().map(|f| vec![GcaElement::zero(); f.len()]).collect();
        for (bi, c) in coords.iter().enumerate() {
            if c.is_zero() {
                continue;
            }
            for (ai, a) in self.basis[di][bi].iter().enumerate() {
                if a.is_zero() {
                    continue;
                }
                let (n, vi, m) = &self.ambient[di][ai];
                levels[*n][*vi] = levels[*n][*vi]
                    .add(&GcaElement::from_monomial(m.clone(), c * a));
            }
        }
        TwElement { levels }
    }

    /// Exact equalizer membership of a symbolic cochain.
    pub fn in_equalizer(&self, diagram: &CosimplicialComplex, el: &TwElement) -> bool {
        let depth = diagram.depth();
        for n in 0..depth {
            for k in 0..=(n + 1) {
                // (d^{n+1,k} (x) id) x_n, expressed over level n+1 with forms
                // on Delta^n, must equal (id (x) face_k^*) x_{n+1}
                let mut lhs = vec![GcaElement::zero(); self.flat[n + 1].len()];
                for (vi, form) in el.levels[n].iter().enumerate() {
                    if form.is_zero() {
                        continue;
                    }
                    let (vdeg, vj) = self.flat[n][vi];
                    let cf = diagram.coface_matrix(n + 1, k, vdeg);
                    for r in 0..cf.rows() {
                        let c = cf.get(r, vj);
                        if !c.is_zero() {
                            let ti = r_flat(&self.flat[n + 1], vdeg, r);
                            lhs[ti] = lhs[ti].add(&form.scale(&c));
                        }
                    }
                }
                let (_, fm) = self.forms[n + 1].face_map(k);
                for (vi, form) in el.levels[n + 1].iter().enumerate() {
                    let pulled = fm.apply(&self.forms[n].algebra, form);
                    if lhs[vi] != pulled {
                        return false;
                    }
                }
            }
        }
        true
    }

    /// Differential of a symbolic cochain.
    pub fn differential_el(&self, diagram: &CosimplicialComplex, el: &TwElement) -> TwElement {
        let mut out: Vec<Vec<GcaElement>> =
            self.flat.iter().map(|f| vec![GcaElement::zero(); f.len()]).collect();
        for (n, level) in el.levels.iter().enumerate() {
            for (vi, form) in level.iter().enumerate() {
                if form.is_zero() {
                    continue;
                }
                let (vdeg, vj) = self.flat[n][vi];
                let dv = diagram.levels[n].differential_at(vdeg);
                for r in 0..dv.rows() {
                    let c = dv.get(r, vj);
                    if !c.is_zero() {
                        let ti = r_flat(&self.flat[n], vdeg + 1, r);
                        out[n][ti] = out[n][ti].add(&form.scale(&c));
                    }
                }
                let sign = if vdeg.rem_euclid(2) == 1 { -Rat::one() } else { Rat::one() };
                out[n][vi] =
                    out[n][vi].add(&self.forms[n].differential(form).scale(&sign));
            }
        }
        TwElement { levels: out }
    }

    /// Level-wise product of two symbolic cochains, with Koszul signs from
    /// the form degree against the V-degree.
    pub fn product(
        &self,
        diagram: &CosimplicialComplex,
        products: &LevelProducts,
        a: &TwElement,
        b: &TwElement,
    ) -> TwElement {
        let mut out: Vec<Vec<GcaElement>> =
            self.flat.iter().map(|f| vec![GcaElement::zero(); f.len()]).collect();
        for n in 0..=diagram.depth() {
            let forms = &self.forms[n];
            for (i, fa) in a.levels[n].iter().enumerate() {
                if fa.is_zero() {
                    continue;
                }
                for (j, fb) in b.levels[n].iter().enumerate() {
                    if fb.is_zero() {
                        continue;
                    }
                    let (wdeg, _) = self.flat[n][j];
                    // split fa by form degree for the sign against |w_j|
                    for (ma, ca) in &fa.terms {
                        let fd = forms.form_degree(ma);
                        let sign = if (fd * wdeg).rem_euclid(2) == 1 {
                            -Rat::one()
                        } else {
                            Rat::one()
                        };
                        let piece = GcaElement::from_monomial(ma.clone(), ca * &sign);
                        let form_prod = forms.algebra.mul(&piece, fb);
                        if form_prod.is_zero() {
                            continue;
                        }
                        for &(k, ref coeff) in &products[n][i][j] {
                            out[n][k] = out[n][k].add(&form_prod.scale(coeff));
                        }
                    }
                }
            }
        }
        TwElement { levels: out }
    }
}

/// Symbolic TW cochain: per level, a polynomial form for each flattened
/// basis vector of that level.
#[derive(Clone, Debug, PartialEq)]
pub struct TwElement {
    pub levels: Vec<Vec<GcaElement>>,
}

impl TwElement {
    pub fn is_zero(&self) -> bool {
        self.levels.iter().all(|l| l.iter().all(GcaElement::is_zero))
    }
}

/// Level-wise product tables on the flattened bases:
/// `products[n][i][j] = [(k, c)]` meaning `v_i v_j = sum c v_k`.
pub type LevelProducts = Vec<Vec<Vec<Vec<(usize, Rat)>>>>;

/// The `I`, `P`, `H` package between `Tot` and `TW`.
pub struct Retraction {
    pub min_degree: i64,
    /// `p[m]`: TW^m -> Tot^m.
    pub p: Vec<RatMatrix>,
    /// `i[m]`: Tot^m -> TW^m.
    pub i: Vec<RatMatrix>,
    /// `h[m]`: TW^m -> TW^{m-1}.
    pub h: Vec<RatMatrix>,
}

/// Build the retraction between the total complex and the Thom-Whitney
/// complex: `P` integrates over each simplex, `I` spreads a Cech cochain
/// over Whitney elementary forms, and `H` is assembled from an exact
/// contraction of `ker P`.
pub fn retraction(
    diagram: &CosimplicialComplex,
    twc: &TwComplex,
    totc: &TotComplex,
) -> Retraction {
    let depth = diagram.depth();
    let min_degree = twc.min_degree.min(totc.min_degree);
    let max_degree = (twc.min_degree + twc.complex.dims.len() as i64 - 1)
        .max(totc.min_degree + totc.complex.dims.len() as i64 - 1);

    // Tot basis bookkeeping mirrors `tot`: raw basis (level, flat index)
    // per degree; for the conormalized case Tot's own basis is already a
    // restriction, so we go through raw coordinates.
    let flat = &twc.flat;
    let raw_tot_basis = |degree: i64| -> Vec<(usize, usize)> {
        let mut out = Vec::new();
        for n in 0..=depth {
            for (vi, &(vdeg, _)) in flat[n].iter().enumerate() {
                if vdeg + n as i64 == degree {
                    out.push((n, vi));
                }
            }
        }
        out
    };

    // P on ambient coordinates: integrate the form-degree-n part per level.
    let p_ambient = |degree: i64| -> RatMatrix {
        let di = (degree - twc.min_degree) as usize;
        let raw = raw_tot_basis(degree);
        let cols = twc.ambient.get(di).map_or(0, Vec::len);
        let mut mat = RatMatrix::zero(raw.len(), cols);
        if cols == 0 {
            return mat;
        }
        for (col, (n, vi, m)) in twc.ambient[di].iter().enumerate() {
            if twc.forms[*n].form_degree(m) != *n as i64 {
                continue;
            }
            let val =
                twc.forms[*n].integrate(&GcaElement::from_monomial(m.clone(), Rat::one()));
            if val.is_zero() {
                continue;
            }
            let row = raw.iter().position(|k| k == &(*n, *vi)).expect("tot raw index");
            mat.add_to(row, col, &val);
        }
        mat
    };

    // I on raw Tot coordinates: Whitney spreading over monotone injections.
    let i_ambient = |degree: i64| -> RatMatrix {
        let di = (degree - twc.min_degree) as usize;
        let raw = raw_tot_basis(degree);
        let rows = twc.ambient.get(di).map_or(0, Vec::len);
        let mut mat = RatMatrix::zero(rows, raw.len());
        for (col, (n, vi)) in raw.iter().enumerate() {
            let (vdeg, vj) = flat[*n][*vi];
            for l in *n..=depth {
                for image in monotone_injections(*n, l) {
                    let induced = diagram.induced_injection(*n, &image, l, vdeg);
                    let omega = twc.forms[l].whitney(&image);
                    for r in 0..induced.rows() {
                        let c = induced.get(r, vj);
                        if c.is_zero() {
                            continue;
                        }
                        let tvi = r_flat(&flat[l], vdeg, r);
                        for (m, fc) in &omega.terms {
                            let row = twc.ambient[di]
                                .iter()
                                .position(|k| k == &(l, tvi, m.clone()))
                                .expect("Whitney form escapes the polynomial cap");
                            mat.add_to(row, col, &(&c * fc));
                        }
                    }
                }
            }
        }
        mat
    };

    // convert ambient-coordinate maps to TW/Tot basis coordinates
    let tw_dim = |degree: i64| twc.complex.dim_at(degree);
    let tw_basis_matrix = |degree: i64| -> RatMatrix {
        let di = degree - twc.min_degree;
        if di < 0 || di as usize >= twc.basis.len() {
            return RatMatrix::zero(0, 0);
        }
        let di = di as usize;
        let rows = twc.ambient[di].len();
        RatMatrix::from_columns(rows, &twc.basis[di])
    };
    // Tot coordinates: raw for the plain case; for the conormalized case we
    // only need P expressed on the normalized basis, so we solve.
    let tot_dim = |degree: i64| totc.complex.dim_at(degree);

    let mut p_mats = Vec::new();
    let mut i_mats = Vec::new();
    for degree in min_degree..=max_degree {
        let raw = raw_tot_basis(degree);
        let pa = p_ambient(degree);
        let ia = i_ambient(degree);
        let twb = tw_basis_matrix(degree);
        // P: TW coords -> raw Tot coords
        let p_raw = if twb.rows() == 0 {
            RatMatrix::zero(raw.len(), tw_dim(degree))
        } else {
            pa.mul(&twb)
        };
        // Tot basis in raw coordinates: the identity for the plain case,
        // the conormalized kernel otherwise. The Whitney image of a
        // normalized cochain satisfies all equalizer conditions; raw
        // level-positive cochains generally do not, so I is only built on
        // the normalized basis.
        let nb: Vec<Vec<Rat>> = if diagram.codegeneracies.is_some() {
            normalized_tot_basis(diagram, flat, &raw)
        } else {
            (0..raw.len())
                .map(|i| {
                    let mut v = vec![Rat::zero(); raw.len()];
                    v[i] = Rat::one();
                    v
                })
                .collect()
        };
        assert_eq!(nb.len(), tot_dim(degree), "Tot basis mismatch");
        let nb_mat = RatMatrix::from_columns(raw.len(), &nb);
        let ia_norm = ia.mul(&nb_mat);
        let mut i_tw = RatMatrix::zero(tw_dim(degree), nb.len());
        for col in 0..nb.len() {
            let target = ia_norm.column(col);
            if target.iter().all(Zero::is_zero) {
                continue;
            }
            let x = twb
                .solve(&target)
                .expect("Whitney image must satisfy the equalizer conditions");
            for (r, v) in x.into_iter().enumerate() {
                i_tw.set(r, col, v);
            }
        }
        // P projected to Tot coordinates: solve nb * y = p_raw column
        let mut p_norm = RatMatrix::zero(nb.len(), tw_dim(degree));
        for col in 0..tw_dim(degree) {
            let target = p_raw.column(col);
            let y = nb_mat.solve(&target).expect("P lands in the normalized part");
            for (r, v) in y.into_iter().enumerate() {
                p_norm.set(r, col, v);
            }
        }
        p_mats.push(p_norm);
        i_mats.push(i_tw);
    }

    // H from an exact contraction of ker P.
    let offset = |degree: i64| (degree - min_degree) as usize;
    let mut kernels: Vec<Vec<Vec<Rat>>> = Vec::new();
    for degree in min_degree..=max_degree {
        let (_, k) = p_mats[offset(degree)].rank_kernel();
        kernels.push(k);
    }
    // d restricted to ker P, in kernel coordinates
    let d_tw = |degree: i64| twc.complex.differential_at(degree);
    let mut kd: Vec<RatMatrix> = Vec::new();
    for degree in min_degree..=max_degree {
        let k_here = &kernels[offset(degree)];
        let k_next = if degree < max_degree {
            kernels[offset(degree + 1)].clone()
        } else {
            Vec::new()
        };
        let next_mat = RatMatrix::from_columns(tw_dim(degree + 1), &k_next);
        let mut mat = RatMatrix::zero(k_next.len(), k_here.len());
        for (j, kv) in k_here.iter().enumerate() {
            let dk = d_tw(degree).mul_vec(kv);
            if dk.iter().all(Zero::is_zero) {
                continue;
            }
            let coords = next_mat.solve(&dk).expect("ker P is a subcomplex");
            for (r, v) in coords.into_iter().enumerate() {
                mat.set(r, j, v);
            }
        }
        kd.push(mat);
    }
    // contraction of the acyclic complex (ker P, kd)
    let mut h_mats = Vec::new();
    for degree in min_degree..=max_degree {
        let m = offset(degree);
        let dim_k = kernels[m].len();
        let dim_k_prev = if m == 0 { 0 } else { kernels[m - 1].len() };
        let mut h_k = RatMatrix::zero(dim_k_prev, dim_k);
        if dim_k > 0 && dim_k_prev > 0 {
            // complement L of Z = ker(kd) in the previous degree, and the
            // inverse of d restricted to it
            let (_, z_prev) = kd[m - 1].rank_kernel();
            let std_prev: Vec<Vec<Rat>> = (0..dim_k_prev)
                .map(|i| {
                    let mut v = vec![Rat::zero(); dim_k_prev];
                    v[i] = Rat::one();
                    v
                })
                .collect();
            let l_idx =
                crate::exactlin::quotient_basis_indices(dim_k_prev, &z_prev, &std_prev);
            let l_basis: Vec<Vec<Rat>> = l_idx.iter().map(|&i| std_prev[i].clone()).collect();
            let dl = {
                let mut mat = RatMatrix::zero(dim_k, l_basis.len());
                for (j, l) in l_basis.iter().enumerate() {
                    for (r, v) in kd[m - 1].mul_vec(l).into_iter().enumerate() {
                        mat.set(r, j, v);
                    }
                }
                mat
            };
            // h on Z^m = image(d|L): solve; h kills a complement of Z^m
            let (_, z_here) = kd[m].rank_kernel();
            let z_mat = RatMatrix::from_columns(dim_k, &z_here);
            for col in 0..dim_k {
                // project the standard basis vector onto Z along a chosen
                // complement: solve [Z | C] decomposition
                let std_here: Vec<Vec<Rat>> = (0..dim_k)
                    .map(|i| {
                        let mut v = vec![Rat::zero(); dim_k];
                        v[i] = Rat::one();
                        v
                    })
                    .collect();
                let c_idx =
                    crate::exactlin::quotient_basis_indices(dim_k, &z_here, &std_here);
                let c_basis: Vec<Vec<Rat>> =
                    c_idx.iter().map(|&i| std_here[i].clone()).collect();
                let zc = z_mat.hstack(&RatMatrix::from_columns(dim_k, &c_basis));
                let mut e = vec![Rat::zero(); dim_k];
                e[col] = Rat::one();
                let dec = zc.solve(&e).expect("Z + C spans");
                let z_part: Vec<Rat> = {
                    let mut v = vec![Rat::zero(); dim_k];
                    for (zi, zvec) in z_here.iter().enumerate() {
                        for (r, val) in zvec.iter().enumerate() {
                            v[r] += val * &dec[zi];
                        }
                    }
                    v
                };
                if z_part.iter().all(Zero::is_zero) {
                    continue;
                }
                let y = dl.solve(&z_part).expect("acyclicity of ker P");
                // h(e_col) = sum y_j * L_j
                for (j, l) in l_basis.iter().enumerate() {
                    if y[j].is_zero() {
                        continue;
                    }
                    for (r, val) in l.iter().enumerate() {
                        h_k.add_to(r, col, &(val * &y[j]));
                    }
                }
            }
        }
        // H = -embed . h_k . coords . (id - I P)
        let dim_tw = tw_dim(degree);
        let dim_tw_prev = tw_dim(degree - 1);
        let mut h_full = RatMatrix::zero(dim_tw_prev, dim_tw);
        if dim_k > 0 && dim_tw > 0 {
            let k_mat = RatMatrix::from_columns(dim_tw, &kernels[m]);
            let ip = i_mats[m].mul(&p_mats[m]);
            for col in 0..dim_tw {
                let mut x = vec![Rat::zero(); dim_tw];
                x[col] = Rat::one();
                let ipx = ip.mul_vec(&x);
                let resid: Vec<Rat> =
                    x.iter().zip(&ipx).map(|(a, b)| a - b).collect();
                if resid.iter().all(Zero::is_zero) {
                    continue;
                }
                let kc = k_mat.solve(&resid).expect("id - IP lands in ker P");
                let hk = h_k.mul_vec(&kc);
                if m == 0 {
                    continue;
                }
                let k_prev_mat = RatMatrix::from_columns(dim_tw_prev, &kernels[m - 1]);
                for (r, v) in k_prev_mat.mul_vec(&hk).into_iter().enumerate() {
                    if !v.is_zero() {
                        h_full.add_to(r, col, &(-v));
                    }
                }
            }
        }
        h_mats.push(h_full);
    }

    Retraction { min_degree, p: p_mats, i: i_mats, h: h_mats }
}

/// Basis of the conormalized Tot in raw coordinates at one degree.
fn normalized_tot_basis(
    diagram: &CosimplicialComplex,
    flat: &[Vec<(i64, usize)>],
    raw: &[(usize, usize)],
) -> Vec<Vec<Rat>> {
    let cod = diagram.codegeneracies.as_ref().unwrap();
    let mut rows: Vec<BTreeMap<usize, Rat>> = Vec::new();
    let mut row_index: BTreeMap<(usize, usize, usize), usize> = BTreeMap::new();
    for (col, (n, vi)) in raw.iter().enumerate() {
        if *n == 0 {
            continue;
        }
        let (vdeg, vj) = flat[*n][*vi];
        for k in 0..*n {
            let sm = cod[*n - 1][k].matrix_at(
                vdeg,
                diagram.levels[*n - 1].dim_at(vdeg),
                diagram.levels[*n].dim_at(vdeg),
            );
            for r in 0..sm.rows() {
                let c = sm.get(r, vj);
                if c.is_zero() {
                    continue;
                }
                let key = (*n, k, r);
                let next = rows.len();
                let idx = *row_index.entry(key).or_insert(next);
                if idx == rows.len() {
                    rows.push(BTreeMap::new());
                }
                let slot = rows[idx].entry(col).or_insert_with(Rat::zero);
                *slot += c;
            }
        }
    }
    let mut constraint = RatMatrix::zero(rows.len(), raw.len());
    for (r, row) in rows.iter().enumerate() {
        for (&c, v) in row {
            constraint.set(r, c, v.clone());
        }
    }
    constraint.rank_kernel().1
}

/// Monotone injections `[n] -> [l]`, as image vertex lists.
fn monotone_injections(n: usize, l: usize) -> Vec<Vec<usize>> {
    let mut out = Vec::new();
    let mut current = Vec::new();
    fn rec(next: usize, remaining: usize, l: usize, current: &mut Vec<usize>, out: &mut Vec<Vec<usize>>) {
        if remaining == 0 {
            out.push(current.clone());
            return;
        }
        for v in next..=(l + 1 - remaining) {
            current.push(v);
            rec(v + 1, remaining - 1, l, current, out);
            current.pop();
        }
    }
    rec(0, n + 1, l, &mut current, &mut out);
    out
}

/// One-line verdict data for the TW/Tot comparison on a diagram.
pub struct TwTotReport {
    pub tw_dims: Vec<(i64, usize)>,
    pub tot_dims: Vec<(i64, usize)>,
    pub dims_match: bool,
    pub retraction_laws_hold: bool,
}

/// Compare `H(TW)` with `H(Tot)` dimension-wise and verify the retraction
/// laws `P I = id` and `I P - id = [d, H]` on every degree.
pub fn verify_tw_tot(diagram: &CosimplicialComplex, p_max: u32) -> TwTotReport {
    let twc = tw(diagram, p_max);
    let totc = tot(diagram);
    let tw_h: Vec<(i64, usize)> = twc
        .complex
        .cohomology_dims()
        .expect("TW is a complex")
        .into_iter()
        .filter(|&(_, d)| d > 0)
        .collect();
    let tot_h: Vec<(i64, usize)> = totc
        .complex
        .cohomology_dims()
        .expect("Tot is a complex")
        .into_iter()
        .filter(|&(_, d)| d > 0)
        .collect();
    let r = retraction(diagram, &twc, &totc);
    let mut laws = true;
    let min = r.min_degree;
    let span = r.p.len();
    for m in 0..span {
        let degree = min + m as i64;
        // P I = id
        let pi = r.p[m].mul(&r.i[m]);
        if pi != RatMatrix::identity(totc.complex.dim_at(degree)) {
            laws = false;
        }
        // chain maps: d_tot P = P d_tw and d_tw I = I d_tot
        if m + 1 < span {
            let dp = totc.complex.differential_at(degree).mul(&r.p[m]);
            let pd = r.p[m + 1].mul(&twc.complex.differential_at(degree));
            if dp != pd {
                laws = false;
            }
            let di = twc.complex.differential_at(degree).mul(&r.i[m]);
            let id_ = r.i[m + 1].mul(&totc.complex.differential_at(degree));
            if di != id_ {
                laws = false;
            }
        }
        // I P - id = d H + H d
        let ip = r.i[m].mul(&r.p[m]);
        let mut lhs = ip;
        let dim = twc.complex.dim_at(degree);
        let id_mat = RatMatrix::identity(dim);
        for (i, j, v) in id_mat.entries() {
            lhs.add_to(i, j, &(-v.clone()));
        }
        let mut rhs = RatMatrix::zero(dim, dim);
        if m + 1 < span {
            rhs = r.h[m + 1].mul(&twc.complex.differential_at(degree));
        }
        if m > 0 {
            let dh = twc.complex.differential_at(degree - 1).mul(&r.h[m]);
            for (i, j, v) in dh.entries() {
                rhs.add_to(i, j, v);
            }
        }
        if lhs != rhs {
            laws = false;
        }
    }
    TwTotReport {
        dims_match: tw_h == tot_h,
        tw_dims: tw_h,
        tot_dims: tot_h,
        retraction_laws_hold: laws,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn simplex_relations_enforced() {
        let f = SimplexForms::new(2, 3);
        // sum t_i = 1 and sum dt_i = 0 after elimination
        let sum_t = f.t(0).add(&f.t(1)).add(&f.t(2));
        assert_eq!(sum_t, f.algebra.one());
        let sum_dt = f.dt(0).add(&f.dt(1)).add(&f.dt(2));
        assert!(sum_dt.is_zero());
        // d^2 = 0 on generators
        assert!(f.algebra.squares_to_zero(&f.d));
    }

    #[test]
    fn face_maps_on_the_interval() {
        let f = SimplexForms::new(1, 3);
        let (t0, m0) = f.face_map(0);
        assert_eq!(m0.apply(&t0.algebra, &f.t(1)), t0.algebra.one());
        let (t1, m1) = f.face_map(1);
        assert!(m1.apply(&t1.algebra, &f.t(1)).is_zero());
    }

    #[test]
    fn face_map_substitution_on_triangle() {
        // k = 1 applied to t_0 dt_2: t_0 stays the 0th vertex coordinate,
        // t_2 renumbers to t_1
        let f = SimplexForms::new(2, 3);
        let omega = f.algebra.mul(&f.t(0), &f.dt(2));
        let (target, m) = f.face_map(1);
        let expect = target.algebra.mul(&target.t(0), &target.dt(1));
        assert_eq!(m.apply(&target.algebra, &omega), expect);
    }

    #[test]
    fn face_maps_commute_with_d() {
        let f = SimplexForms::new(2, 4);
        let omega = f.algebra.mul(&f.t(1), &f.t(2)).add(&f.t(0));
        for k in 0..=2 {
            let (target, m) = f.face_map(k);
            let lhs = m.apply(&target.algebra, &f.differential(&omega));
            let rhs = target.differential(&m.apply(&target.algebra, &omega));
            assert_eq!(lhs, rhs);
        }
    }

    #[test]
    fn simplicial_identities_for_faces() {
        // face-face identity on pullbacks: for i < j,
        // (d_i)^* (d_j)^* = (d_{j-1})^* (d_i)^* as maps from Omega(Delta^n)
        for n in 2..=3usize {
            let f = SimplexForms::new(n, 2);
            let sample = {
                let mut s = f.t(1);
                for i in 0..n {
                    s = s.add(&f.dt(i));
                }
                s
            };
            for j in 1..=n {
                for i in 0..j {
                    let (fj, mj) = f.face_map(j);
                    let (fi, mi) = fj.face_map(i);
                    let lhs = mi.apply(&fi.algebra, &mj.apply(&fj.algebra, &sample));
                    let (fi2, mi2) = f.face_map(i);
                    let (fj2, mj2) = fi2.face_map(j - 1);
                    let rhs = mj2.apply(&fj2.algebra, &mi2.apply(&fi2.algebra, &sample));
                    assert_eq!(lhs, rhs, "n={n} i={i} j={j}");
                }
            }
        }
    }

    #[test]
    fn integration_values() {
        let f1 = SimplexForms::new(1, 4);
        assert_eq!(f1.integrate(&f1.dt(1)), rat(1));
        assert_eq!(
            f1.integrate(&f1.algebra.mul(&f1.t(1), &f1.dt(1))),
            crate::exactlin::ratio(1, 2)
        );
        let f2 = SimplexForms::new(2, 4);
        assert_eq!(
            f2.integrate(&f2.algebra.mul(&f2.dt(1), &f2.dt(2))),
            crate::exactlin::ratio(1, 2)
        );
        // non-top forms integrate to zero
        assert_eq!(f2.integrate(&f2.dt(1)), rat(0));
    }

    #[test]
    fn whitney_forms_integrate_to_one() {
        for n in 1..=3usize {
            let f = SimplexForms::new(n, 3);
            let vertices: Vec<usize> = (0..=n).collect();
            let omega = f.whitney(&vertices);
            assert_eq!(f.integrate(&omega), rat(1), "n = {n}");
        }
    }

    #[test]
    fn p1_diagram_validates() {
        let d = cech_p1_line_bundle(2, 4);
        assert!(d.validate());
    }

    fn two_term_zero_complex() -> SlicedComplex {
        SlicedComplex::new(0, vec![1, 1], vec![RatMatrix::zero(1, 1), RatMatrix::zero(0, 1)])
    }

    #[test]
    fn constant_diagram_tw_equals_level_zero() {
        let v = two_term_zero_complex();
        let diagram = constant_diagram(&v, 1);
        let report = verify_tw_tot(&diagram, 3);
        assert!(report.dims_match, "{:?} vs {:?}", report.tw_dims, report.tot_dims);
        assert!(report.retraction_laws_hold);
        assert_eq!(report.tw_dims, vec![(0, 1), (1, 1)]);
    }

    #[test]
    fn cech_p1_matches_laurent_oracle() {
        for d in -3..=3i64 {
            let diagram = cech_p1_line_bundle(d, 4);
            let report = verify_tw_tot(&diagram, 2);
            assert!(report.dims_match, "d = {d}");
            assert!(report.retraction_laws_hold, "d = {d}");
            let (h0, h1) = p1_cohomology_oracle(d);
            let got_h0 = report.tot_dims.iter().find(|&&(g, _)| g == 0).map_or(0, |&(_, n)| n);
            let got_h1 = report.tot_dims.iter().find(|&&(g, _)| g == 1).map_or(0, |&(_, n)| n);
            assert_eq!((got_h0, got_h1), (h0, h1), "d = {d}");
        }
    }

    #[test]
    fn zero_diagram_gives_zero_tw() {
        let v = SlicedComplex::new(0, vec![0], vec![RatMatrix::zero(0, 0)]);
        let diagram = constant_diagram(&v, 1);
        let twc = tw(&diagram, 2);
        assert!(twc.complex.dims.iter().all(|&d| d == 0));
    }

    #[test]
    fn tw_h_stable_under_pmax_growth() {
        let diagram = cech_p1_line_bundle(-2, 3);
        let a = tw(&diagram, 2).complex.cohomology_dims().unwrap();
        let b = tw(&diagram, 3).complex.cohomology_dims().unwrap();
        let nz = |v: &[(i64, usize)]| -> Vec<(i64, usize)> {
            v.iter().copied().filter(|&(_, d)| d > 0).collect()
        };
        assert_eq!(nz(&a), nz(&b));
    }

    fn truncated_poly_diagram() -> (CosimplicialComplex, LevelProducts) {
        // Cech-style two-level diagram on B = Q[x]/(x^3) with identity
        // restrictions (one chart seen twice); no degeneracies, so TW has
        // an interesting degree-1 part
        let dim = 3;
        let level = SlicedComplex::new(0, vec![dim], vec![RatMatrix::zero(0, dim)]);
        let mut diagram = constant_diagram(&level, 1);
        diagram.codegeneracies = None;
        let mut table = vec![vec![Vec::new(); dim]; dim];
        #[allow(clippy::needless_range_loop)]
        for i in 0..dim {
            for j in 0..dim {
                if i + j < dim {
                    table[i][j] = vec![(i + j, Rat::one())];
                }
            }
        }
        let products: LevelProducts = vec![table.clone(), table];
        (diagram, products)
    }

    #[test]
    fn tw_product_unit_and_membership() {
        let (diagram, products) = truncated_poly_diagram();
        let twc = tw(&diagram, 3);
        // H^0 of the constant diagram is B itself: pick the unit cocycle
        // (1, 1) and check it is neutral for the product
        let h = twc.complex.cohomology().unwrap();
        let deg0 = h.iter().find(|c| c.degree == 0).unwrap();
        assert_eq!(deg0.dim, 3);
        // the constant element with value x^i on both levels
        let constant = |i: usize| -> TwElement {
            let mut levels: Vec<Vec<GcaElement>> = alloc::vec![
                alloc::vec![GcaElement::zero(); 3],
                alloc::vec![GcaElement::zero(); 3],
            ];
            levels[0][i] = twc.forms[0].algebra.one();
            levels[1][i] = twc.forms[1].algebra.one();
            TwElement { levels }
        };
        let unit = constant(0);
        let x = constant(1);
        assert!(twc.in_equalizer(&diagram, &unit));
        assert!(twc.in_equalizer(&diagram, &x));
        let prod = twc.product(&diagram, &products, &unit, &x);
        assert_eq!(prod, x);
        // product of two constants is the constant product: x * x = x^2
        let xx = twc.product(&diagram, &products, &x, &x);
        assert_eq!(xx, constant(2));
        assert!(twc.in_equalizer(&diagram, &xx));
    }

    #[test]
    fn tw_product_leibniz_and_equalizer_stability() {
        let (diagram, products) = truncated_poly_diagram();
        let twc = tw(&diagram, 3);
        // build a degree-1 element from the TW basis and a degree-0 one
        let d1 = twc.complex.dim_at(1);
        assert!(d1 > 0);
        let mut coords = alloc::vec![Rat::zero(); d1];
        coords[0] = Rat::one();
        if d1 > 1 {
            coords[1] = rat(2);
        }
        let a = twc.element(1, &coords);
        assert!(twc.in_equalizer(&diagram, &a));
        let d0 = twc.complex.dim_at(0);
        let mut c0 = alloc::vec![Rat::zero(); d0];
        c0[0] = Rat::one();
        if d0 > 2 {
            c0[2] = rat(-3);
        }
        let b = twc.element(0, &c0);
        // differential preserves the equalizer
        let da = twc.differential_el(&diagram, &a);
        assert!(twc.in_equalizer(&diagram, &da));
        // Leibniz: d(ab) = d(a) b + (-1)^{|a|} a d(b)
        let ab = twc.product(&diagram, &products, &a, &b);
        assert!(twc.in_equalizer(&diagram, &ab));
        let lhs = twc.differential_el(&diagram, &ab);
        let db = twc.differential_el(&diagram, &b);
        let rhs1 = twc.product(&diagram, &products, &da, &b);
        let rhs2 = twc.product(&diagram, &products, &a, &db);
        // |a| = 1: minus sign on the second term
        let rhs = TwElement {
            levels: rhs1
                .levels
                .iter()
                .zip(&rhs2.levels)
                .map(|(l1, l2)| {
                    l1.iter().zip(l2).map(|(p, q)| p.sub(q)).collect::<alloc::vec::Vec<_>>()
                })
                .collect(),
        };
        assert_eq!(lhs, rhs);
    }
}
