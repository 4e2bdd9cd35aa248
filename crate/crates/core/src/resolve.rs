//! Koszul resolutions of complete intersections.
//!
//! For a section `s = (s_1, ..., s_r)` of a trivialized bundle over an
//! affine base, the resolution is the exterior algebra on odd generators
//! `e_i` (degree -1) with differential contracting against `s`:
//! `Q(e_i) = s_i`, extended by the Leibniz rule.  When `s` is regular this
//! resolves the quotient ring; `check_resolution` certifies that weight
//! slice by weight slice.

use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;

use num_traits::Zero;

use crate::exactlin::{Rat, RatMatrix};
use crate::gca::{
    enumerate_monomials, slice_complex, Algebra, BaseRing, Derivation, GcaElement, GeneratorSpec,
    Monomial, SliceError, SliceSpec,
};

/// The Koszul dg-algebra of a section, with its contraction differential.
#[derive(Clone, Debug)]
pub struct KoszulData {
    /// `S(E[1])` over the base: odd generators `e_i`, one per section
    /// component, of degree -1 and weight equal to the section component's
    /// weight.
    pub algebra: Algebra,
    /// Section components as base-ring elements of `algebra`.
    pub section: Vec<GcaElement>,
    /// `Q(e_i) = s_i`, zero on the base.
    pub q: Derivation,
    /// Indices of zero section components (the resolution is built anyway,
    /// but regularity will fail).
    pub zero_components: Vec<usize>,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum KoszulError {
    EmptySection,
    NotInBase(String),
    InhomogeneousWeight(String),
    Slice(SliceError),
}

impl core::fmt::Display for KoszulError {
    fn fmt(&self, f: &mut core::fmt::Formatter<'_>) -> core::fmt::Result {
        match self {
            KoszulError::EmptySection => write!(f, "section must be nonempty"),
            KoszulError::NotInBase(s) => write!(f, "section component `{s}` is not in the base ring"),
            KoszulError::InhomogeneousWeight(s) => {
                write!(f, "section component `{s}` is not weight-homogeneous")
            }
            KoszulError::Slice(e) => write!(f, "{e}"),
        }
    }
}

impl From<SliceError> for KoszulError {
    fn from(e: SliceError) -> Self {
        KoszulError::Slice(e)
    }
}

/// Build the Koszul dg-algebra for a section given as element strings in
/// the base ring.
pub fn build_koszul(base: BaseRing, section: &[&str]) -> Result<KoszulData, KoszulError> {
    if section.is_empty() {
        return Err(KoszulError::EmptySection);
    }
    let base_alg = Algebra::new(base.clone(), vec![]);
    let mut parsed = Vec::new();
    for s in section {
        let el = crate::gca::parse_element_or_zero(&base_alg, s)
            .map_err(|e| KoszulError::NotInBase(alloc::format!("{s}: {e}")))?;
        parsed.push(el);
    }
    build_koszul_from_elements(base, parsed)
}

/// Same, from already-parsed base-ring elements (generator exponents must
/// all be zero).
pub fn build_koszul_from_elements(
    base: BaseRing,
    section: Vec<GcaElement>,
) -> Result<KoszulData, KoszulError> {
    if section.is_empty() {
        return Err(KoszulError::EmptySection);
    }
    let base_alg = Algebra::new(base.clone(), vec![]);
    let mut weights = Vec::new();
    let mut zero_components = Vec::new();
    for (i, el) in section.iter().enumerate() {
        if el.terms.keys().any(|m| m.gen_exps.iter().any(|&e| e != 0)) {
            return Err(KoszulError::NotInBase(base_alg.print(el)));
        }
        if el.is_zero() {
            zero_components.push(i);
            weights.push(1);
            continue;
        }
        let w = base_alg
            .weight(el)
            .ok_or_else(|| KoszulError::InhomogeneousWeight(base_alg.print(el)))?;
        weights.push(w);
    }
    let gens: Vec<GeneratorSpec> = weights
        .iter()
        .enumerate()
        .map(|(i, &w)| GeneratorSpec::new(&alloc::format!("e{}", i + 1), -1, w))
        .collect();
    let algebra = Algebra::new(base, gens);
    // re-embed section elements into the full algebra
    let embed = |el: &GcaElement| -> GcaElement {
        let mut out = GcaElement::zero();
        for (m, c) in &el.terms {
            let mut mm = Monomial::one(&algebra);
            mm.var_exps.clone_from(&m.var_exps);
            out.add_term(mm, c.clone());
        }
        out
    };
    let section: Vec<GcaElement> = section.iter().map(embed).collect();
    let mut q = Derivation::zero(&algebra, 1);
    for (i, s) in section.iter().enumerate() {
        q = q.with_gen_image(i, s.clone());
    }
    // Q lands in the base, so Q^2 = 0 is automatic; assert it anyway.
    assert!(algebra.squares_to_zero(&q), "contraction differential must square to zero");
    Ok(KoszulData { algebra, section, q, zero_components })
}

impl KoszulData {
    pub fn rank(&self) -> usize {
        self.section.len()
    }

    /// Weight-`w` slice of the Koszul complex, degrees `-r..=0`.
    pub fn slice(&self, w: i64) -> Result<crate::exactlin::SlicedComplex, KoszulError> {
        let spec = SliceSpec::weight_only(&self.algebra, w);
        Ok(slice_complex(&self.algebra, &self.q, &spec, (-(self.rank() as i64), 0))?)
    }

    /// Dimension of `(O_Y / (s))_w`, computed independently of the complex
    /// by a rank count on the monomial basis of the base ring.
    pub fn quotient_ring_dim(&self, w: i64) -> Result<usize, KoszulError> {
        ideal_quotient_dim(&self.algebra, &self.section, 1, w).map_err(Into::into)
    }
}

/// Dimension of `(O_Y / I^power)_w` where `I` is generated by the given
/// base-ring elements: the weight-`w` monomials of the base modulo the span
/// of `g_{i_1} ... g_{i_power} * m` over generator multisets and monomials.
pub fn ideal_quotient_dim(
    alg: &Algebra,
    ideal_gens: &[GcaElement],
    power: u32,
    w: i64,
) -> Result<usize, SliceError> {
    let basis = base_monomials(alg, w)?;
    if basis.is_empty() {
        return Ok(0);
    }
    let span = ideal_power_span(alg, ideal_gens, power, w)?;
    let mut mat = RatMatrix::zero(basis.len(), span.len());
    for (j, el) in span.iter().enumerate() {
        for (m, c) in &el.terms {
            let i = basis.binary_search(m).expect("ideal span member outside weight slice");
            mat.set(i, j, c.clone());
        }
    }
    Ok(basis.len() - mat.rank())
}

/// Spanning elements of `(I^power)_w` inside the base ring.
pub fn ideal_power_span(
    alg: &Algebra,
    ideal_gens: &[GcaElement],
    power: u32,
    w: i64,
) -> Result<Vec<GcaElement>, SliceError> {
    let nonzero: Vec<&GcaElement> = ideal_gens.iter().filter(|g| !g.is_zero()).collect();
    let mut products = vec![alg.one()];
    for _ in 0..power {
        let mut next: Vec<GcaElement> = Vec::new();
        for p in &products {
            for g in &nonzero {
                let prod = alg.mul(p, g);
                if !next.contains(&prod) {
                    next.push(prod);
                }
            }
        }
        products = next;
    }
    let mut span = Vec::new();
    for p in &products {
        let Some(pw) = alg.weight(p) else { continue };
        if pw > w {
            continue;
        }
        for m in base_monomials(alg, w - pw)? {
            span.push(alg.mul(p, &GcaElement::from_monomial(m, num_traits::One::one())));
        }
    }
    Ok(span)
}

/// Weight-`w` monomials of the base ring (generator exponents zero).
pub fn base_monomials(alg: &Algebra, w: i64) -> Result<Vec<Monomial>, SliceError> {
    if w < 0 {
        return Ok(Vec::new());
    }
    let spec = SliceSpec::weight_only(alg, w);
    Ok(enumerate_monomials(alg, &spec)?
        .into_iter()
        .filter(|m| m.gen_exps.iter().all(|&e| e == 0))
        .collect())
}

/// One weight row of a resolution report.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ResolutionRow {
    pub weight: i64,
    pub h0: usize,
    pub h0_expected: usize,
    /// Nonzero cohomology in negative degrees, as (degree, dim) pairs.
    pub negative: Vec<(i64, usize)>,
}

#[derive(Clone, Debug)]
pub struct ResolutionReport {
    pub rows: Vec<ResolutionRow>,
    pub zero_components: Vec<usize>,
}

impl ResolutionReport {
    pub fn pass(&self) -> bool {
        self.rows.iter().all(|r| r.h0 == r.h0_expected && r.negative.is_empty())
    }
}

/// Certify that the Koszul complex resolves `O_Y/(s)`: for each weight
/// `w <= w_max`, `H^0` of the slice has the dimension of `(O_Y/(s))_w` and
/// all negative cohomology vanishes.
pub fn check_resolution(k: &KoszulData, w_max: i64) -> Result<ResolutionReport, KoszulError> {
    let mut rows = Vec::new();
    for w in 0..=w_max {
        let complex = k.slice(w)?;
        let h = complex.cohomology().expect("Koszul slice must be a complex");
        let mut h0 = 0;
        let mut negative = Vec::new();
        for c in &h {
            if c.degree == 0 {
                h0 = c.dim;
            } else if c.dim > 0 {
                negative.push((c.degree, c.dim));
            }
        }
        rows.push(ResolutionRow { weight: w, h0, h0_expected: k.quotient_ring_dim(w)?, negative });
    }
    Ok(ResolutionReport { rows, zero_components: k.zero_components.clone() })
}

/// Euler characteristic of the weight-`w` Koszul slice computed two ways:
/// from the slice dimensions, and combinatorially as
/// `sum_i (-1)^i dim(Lambda^i E (x) O_Y)_w`.
pub fn euler_characteristic_check(k: &KoszulData, w: i64) -> Result<(Rat, Rat), KoszulError> {
    let complex = k.slice(w)?;
    let from_slice = complex.euler_characteristic();
    let r = k.rank();
    let weights: Vec<i64> = k.algebra.gens.iter().map(|g| g.weight).collect();
    let mut combinatorial = Rat::zero();
    for mask in 0u32..(1 << r) {
        let size = mask.count_ones() as i64;
        let wsum: i64 = (0..r).filter(|&i| mask & (1 << i) != 0).map(|i| weights[i]).sum();
        let base_dim = base_monomials(&k.algebra, w - wsum)?.len() as i64;
        let sign = if size % 2 == 0 { 1 } else { -1 };
        combinatorial += crate::exactlin::rat(sign * base_dim);
    }
    Ok((from_slice, combinatorial))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn plane() -> KoszulData {
        build_koszul(BaseRing::polynomial(&[("x", 1), ("y", 1)]), &["x", "y"]).unwrap()
    }

    #[test]
    fn differential_on_top_exterior_power() {
        // d(e1 e2) = x e2 - y e1
        let k = plane();
        let alg = &k.algebra;
        let e1e2 = alg.mul(&alg.gen(0), &alg.gen(1));
        let img = alg.apply(&k.q, &e1e2);
        let expect =
            alg.mul(&alg.var(0), &alg.gen(1)).sub(&alg.mul(&alg.var(1), &alg.gen(0)));
        assert_eq!(img, expect);
    }

    #[test]
    fn single_koszul_factor() {
        let k = build_koszul(BaseRing::polynomial(&[("x", 1)]), &["x"]).unwrap();
        let report = check_resolution(&k, 4).unwrap();
        assert!(report.pass());
        let h0: Vec<usize> = report.rows.iter().map(|r| r.h0).collect();
        assert_eq!(h0, vec![1, 0, 0, 0, 0]);
    }

    #[test]
    fn point_in_plane_resolves() {
        let k = plane();
        let report = check_resolution(&k, 4).unwrap();
        assert!(report.pass());
        let h0: Vec<usize> = report.rows.iter().map(|r| r.h0).collect();
        assert_eq!(h0, vec![1, 0, 0, 0, 0]);
    }

    #[test]
    fn repeated_component_is_not_regular() {
        // s = (x, x): H^{-1} != 0 at some weight
        let k = build_koszul(BaseRing::polynomial(&[("x", 1), ("y", 1)]), &["x", "x"]).unwrap();
        let report = check_resolution(&k, 3).unwrap();
        assert!(!report.pass());
        assert!(report.rows.iter().any(|r| r.negative.iter().any(|&(d, _)| d == -1)));
    }

    #[test]
    fn hypersurface_h0_counts_monomials() {
        // O_Y/(xy): dims 1, 2, 2, 2, ...
        let k = build_koszul(BaseRing::polynomial(&[("x", 1), ("y", 1)]), &["x*y"]).unwrap();
        let report = check_resolution(&k, 4).unwrap();
        assert!(report.pass());
        let h0: Vec<usize> = report.rows.iter().map(|r| r.h0).collect();
        assert_eq!(h0, vec![1, 2, 2, 2, 2]);
    }

    #[test]
    fn zero_component_flagged() {
        let base = BaseRing::polynomial(&[("x", 1)]);
        let k = build_koszul(base, &["x", "0"]).unwrap();
        assert_eq!(k.zero_components, vec![1]);
        let report = check_resolution(&k, 2).unwrap();
        assert!(!report.pass());
    }

    #[test]
    fn euler_characteristic_agrees() {
        let k = plane();
        for w in 0..=4 {
            let (a, b) = euler_characteristic_check(&k, w).unwrap();
            assert_eq!(a, b, "weight {w}");
        }
    }

    #[test]
    fn euler_characteristic_survives_cohomology() {
        // sum (-1)^n dim C^n = sum (-1)^n dim H^n on every slice
        for k in [plane(), build_koszul(BaseRing::polynomial(&[("x", 1), ("y", 1)]), &["x", "x"]).unwrap()]
        {
            for w in 0..=4 {
                let slice = k.slice(w).unwrap();
                let chi_c = slice.euler_characteristic();
                let mut chi_h = Rat::zero();
                for (d, n) in slice.cohomology_dims().unwrap() {
                    let sign = if d.rem_euclid(2) == 0 { 1 } else { -1 };
                    chi_h += crate::exactlin::rat(sign * n as i64);
                }
                assert_eq!(chi_c, chi_h, "weight {w}");
            }
        }
    }
}
