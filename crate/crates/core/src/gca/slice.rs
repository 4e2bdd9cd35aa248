//! Finite slices of graded algebras.
//!
//! A slice fixes the auxiliary weight (and, for Laurent variables, an
//! exponent window) and enumerates every monomial that fits; a derivation
//! restricted to the slice becomes an exact rational matrix.  Enumeration
//! proves finiteness as it goes: a variable whose exponent is unbounded in a
//! direction that can cancel weight is rejected with a diagnostic instead of
//! looping.

use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;
use core::fmt;

use num_traits::Zero;

use crate::exactlin::{RatMatrix, SlicedComplex};

use super::{Algebra, Cap, Derivation, GcaElement, Monomial};

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum SliceError {
    /// An unbounded exponent with weight zero: the slice is infinite.
    ZeroWeightUnbounded(String),
    /// A Laurent variable without a window in weight mode.
    LaurentNeedsWindow(String),
    /// Unbounded exponents whose weights have opposite signs.
    OpposingWeights(String, String),
}

impl fmt::Display for SliceError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            SliceError::ZeroWeightUnbounded(n) => {
                write!(f, "infinite slice: `{n}` has weight 0 and unbounded exponent")
            }
            SliceError::LaurentNeedsWindow(n) => {
                write!(f, "infinite slice: Laurent variable `{n}` needs a degree window")
            }
            SliceError::OpposingWeights(a, b) => {
                write!(f, "infinite slice: `{a}` and `{b}` have opposing unbounded weights")
            }
        }
    }
}

/// What to enumerate: a fixed weight, optional per-variable exponent
/// windows, and truncation caps on generator groups.
#[derive(Clone, Debug, Default)]
pub struct SliceSpec {
    pub weight: i64,
    /// Indexed like the base variables; `Some((lo, hi))` bounds the
    /// exponent inclusively. Required for invertible variables.
    pub var_windows: Vec<Option<(i64, i64)>>,
    pub caps: Vec<Cap>,
}

impl SliceSpec {
    pub fn weight_only(alg: &Algebra, weight: i64) -> Self {
        SliceSpec { weight, var_windows: vec![None; alg.base.vars.len()], caps: Vec::new() }
    }
}

struct Entity {
    weight: i64,
    lo: i64,
    hi: Option<i64>,
    is_gen: bool,
    index: usize,
}

/// All monomials of the given weight, in canonical (deterministic) order.
pub fn enumerate_monomials(alg: &Algebra, spec: &SliceSpec) -> Result<Vec<Monomial>, SliceError> {
    assert_eq!(spec.var_windows.len(), alg.base.vars.len(), "one window slot per variable");
    let mut entities = Vec::new();
    for (i, g) in alg.gens.iter().enumerate() {
        let hi = if g.is_odd() {
            Some(1)
        } else {
            // tightest cap this generator belongs to, if any
            spec.caps
                .iter()
                .filter(|c| c.gens.contains(&i))
                .map(|c| c.max_total as i64)
                .min()
        };
        entities.push(Entity { weight: g.weight, lo: 0, hi, is_gen: true, index: i });
    }
    for (i, v) in alg.base.vars.iter().enumerate() {
        let (lo, hi) = match spec.var_windows[i] {
            Some((lo, hi)) => (lo, Some(hi)),
            None if v.invertible => return Err(SliceError::LaurentNeedsWindow(v.name.clone())),
            None => (0, None),
        };
        entities.push(Entity { weight: v.weight, lo, hi, is_gen: false, index: i });
    }
    // Finiteness: unbounded entities must all push weight in the same
    // strict direction.
    let name = |e: &Entity| -> String {
        if e.is_gen {
            alg.gens[e.index].name.clone()
        } else {
            alg.base.vars[e.index].name.clone()
        }
    };
    let mut pos: Option<&Entity> = None;
    let mut neg: Option<&Entity> = None;
    for e in entities.iter().filter(|e| e.hi.is_none()) {
        if e.weight == 0 {
            return Err(SliceError::ZeroWeightUnbounded(name(e)));
        } else if e.weight > 0 {
            pos = Some(e);
        } else {
            neg = Some(e);
        }
    }
    if let (Some(p), Some(n)) = (pos, neg) {
        return Err(SliceError::OpposingWeights(name(p), name(n)));
    }

    // suffix_min[k] / suffix_max[k]: attainable weight of entities k..,
    // with None standing for unbounded in that direction.
    let len = entities.len();
    let mut suffix_min = vec![Some(0i64); len + 1];
    let mut suffix_max = vec![Some(0i64); len + 1];
    for k in (0..len).rev() {
        let e = &entities[k];
        let (emin, emax) = match (e.weight.signum(), e.hi) {
            (0, _) => (Some(0), Some(0)),
            (1, Some(hi)) => (Some(e.lo * e.weight), Some(hi * e.weight)),
            (1, None) => (Some(e.lo * e.weight), None),
            (-1, Some(hi)) => (Some(hi * e.weight), Some(e.lo * e.weight)),
            (-1, None) => (None, Some(e.lo * e.weight)),
            _ => unreachable!(),
        };
        suffix_min[k] = match (emin, suffix_min[k + 1]) {
            (Some(a), Some(b)) => Some(a + b),
            _ => None,
        };
        suffix_max[k] = match (emax, suffix_max[k + 1]) {
            (Some(a), Some(b)) => Some(a + b),
            _ => None,
        };
    }

    let mut out = Vec::new();
    let mut current = Monomial::one(alg);
    let mut cap_budget: Vec<i64> = spec.caps.iter().map(|c| c.max_total as i64).collect();
    fn rec(
        alg: &Algebra,
        entities: &[Entity],
        spec: &SliceSpec,
        k: usize,
        remaining: i64,
        suffix_min: &[Option<i64>],
        suffix_max: &[Option<i64>],
        current: &mut Monomial,
        cap_budget: &mut Vec<i64>,
        out: &mut Vec<Monomial>,
    ) {
        if k == entities.len() {
            if remaining == 0 {
                out.push(current.clone());
            }
            return;
        }
        let e = &entities[k];
        // exponent range consistent with the remaining weight
        let mut lo = e.lo;
        let mut hi = e.hi;
        if e.is_gen {
            let cap_max = spec
                .caps
                .iter()
                .enumerate()
                .filter(|(_, c)| c.gens.contains(&e.index))
                .map(|(ci, _)| cap_budget[ci])
                .min();
            if let Some(m) = cap_max {
                hi = Some(hi.map_or(m, |h| h.min(m)));
            }
        }
        if e.weight != 0 {
            // remaining - exp*w must stay within what the suffix can reach:
            //   exp*w <= remaining - suffix_min   and   exp*w >= remaining - suffix_max
            let w = e.weight;
            if let Some(smin) = suffix_min[k + 1] {
                let need = remaining - smin;
                if w > 0 {
                    hi = Some(hi.map_or(floor_div(need, w), |h| h.min(floor_div(need, w))));
                } else {
                    lo = lo.max(ceil_div(need, w));
                }
            }
            if let Some(smax) = suffix_max[k + 1] {
                let need = remaining - smax;
                if w > 0 {
                    lo = lo.max(ceil_div(need, w));
                } else {
                    hi = Some(hi.map_or(floor_div(need, w), |h| h.min(floor_div(need, w))));
                }
            }
        } else if hi.is_none() {
            unreachable!("zero-weight unbounded entity should have been rejected");
        }
        let Some(hi) = hi else {
            // weight-bounded above already handled; unbounded means the
            // suffix can absorb anything, impossible after finiteness check
            unreachable!("unbounded exponent survived finiteness analysis")
        };
        let mut exp = lo;
        while exp <= hi {
            let fits_caps = if e.is_gen && exp > 0 {
                spec.caps
                    .iter()
                    .enumerate()
                    .filter(|(_, c)| c.gens.contains(&e.index))
                    .all(|(ci, _)| cap_budget[ci] >= exp)
            } else {
                true
            };
            if fits_caps {
                if e.is_gen {
                    current.gen_exps[e.index] = exp as u32;
                    for (ci, c) in spec.caps.iter().enumerate() {
                        if c.gens.contains(&e.index) {
                            cap_budget[ci] -= exp;
                        }
                    }
                } else {
                    current.var_exps[e.index] = exp;
                }
                rec(
                    alg,
                    entities,
                    spec,
                    k + 1,
                    remaining - exp * e.weight,
                    suffix_min,
                    suffix_max,
                    current,
                    cap_budget,
                    out,
                );
                if e.is_gen {
                    current.gen_exps[e.index] = 0;
                    for (ci, c) in spec.caps.iter().enumerate() {
                        if c.gens.contains(&e.index) {
                            cap_budget[ci] += exp;
                        }
                    }
                } else {
                    current.var_exps[e.index] = 0;
                }
            }
            exp += 1;
        }
    }
    rec(
        alg,
        &entities,
        spec,
        0,
        spec.weight,
        &suffix_min,
        &suffix_max,
        &mut current,
        &mut cap_budget,
        &mut out,
    );
    out.sort();
    Ok(out)
}

/// All monomials subject to caps alone (no weight targeting). Every even
/// generator must be covered by a cap and variable windows are required as
/// in weight mode; panics otherwise since the enumeration would not
/// terminate.
pub fn enumerate_capped(alg: &Algebra, caps: &[Cap]) -> Vec<Monomial> {
    for (i, g) in alg.gens.iter().enumerate() {
        assert!(
            g.is_odd() || caps.iter().any(|c| c.gens.contains(&i)),
            "even generator `{}` needs a cap",
            g.name
        );
    }
    assert!(alg.base.vars.is_empty(), "capped enumeration is for pure generator algebras");
    let mut out = Vec::new();
    let mut current = Monomial::one(alg);
    fn rec(alg: &Algebra, caps: &[Cap], k: usize, current: &mut Monomial, out: &mut Vec<Monomial>) {
        if k == alg.gens.len() {
            out.push(current.clone());
            return;
        }
        let hi = if alg.gens[k].is_odd() {
            1
        } else {
            caps.iter()
                .filter(|c| c.gens.contains(&k))
                .map(|c| c.max_total as i64 - c.gens.iter().map(|&i| current.gen_exps[i] as i64).sum::<i64>())
                .min()
                .expect("cap present")
                .max(0)
        };
        for e in 0..=hi {
            current.gen_exps[k] = e as u32;
            if caps.iter().all(|c| c.total(current) <= c.max_total) {
                rec(alg, caps, k + 1, current, out);
            }
        }
        current.gen_exps[k] = 0;
    }
    rec(alg, caps, 0, &mut current, &mut out);
    out.sort();
    out
}

fn floor_div(a: i64, b: i64) -> i64 {
    let q = a / b;
    if (a % b != 0) && ((a < 0) != (b < 0)) {
        q - 1
    } else {
        q
    }
}

fn ceil_div(a: i64, b: i64) -> i64 {
    -floor_div(-a, b)
}

/// Restrict a derivation to the weight-`w` slice over a degree range,
/// producing a finite complex. The derivation must change weight by the
/// declared `weight_shift` of the slice family (0 for all complexes here),
/// and images falling outside the caps are truncated (the caps cut out a
/// differential ideal in every use in this crate).
pub fn slice_complex(
    alg: &Algebra,
    d: &Derivation,
    spec: &SliceSpec,
    degree_range: (i64, i64),
) -> Result<SlicedComplex, SliceError> {
    let monomials = enumerate_monomials(alg, spec)?;
    let (lo, hi) = degree_range;
    assert!(lo <= hi, "empty degree range");
    let span = (hi - lo + 1) as usize;
    let mut buckets: Vec<Vec<Monomial>> = vec![Vec::new(); span];
    for m in monomials {
        let deg = alg.monomial_degree(&m);
        if deg >= lo && deg <= hi {
            buckets[(deg - lo) as usize].push(m);
        }
    }
    let index_of = |deg_idx: usize, m: &Monomial| -> Option<usize> {
        buckets[deg_idx].binary_search(m).ok()
    };
    let dims: Vec<usize> = buckets.iter().map(Vec::len).collect();
    let mut differentials = Vec::new();
    for i in 0..span {
        let target_dim = if i + 1 < span { dims[i + 1] } else { 0 };
        let mut mat = RatMatrix::zero(target_dim, dims[i]);
        for (j, m) in buckets[i].iter().enumerate() {
            let img = alg.truncate(
                &alg.apply(d, &GcaElement::from_monomial(m.clone(), crate::exactlin::rat(1))),
                &spec.caps,
            );
            for (tm, c) in &img.terms {
                if c.is_zero() {
                    continue;
                }
                if i + 1 >= span {
                    panic!(
                        "differential leaves the degree range at degree {} (term {})",
                        lo + i as i64,
                        alg.print(&GcaElement::from_monomial(tm.clone(), c.clone()))
                    );
                }
                let t = index_of(i + 1, tm).unwrap_or_else(|| {
                    panic!(
                        "differential leaves the slice: {} not in weight-{} basis",
                        alg.print(&GcaElement::from_monomial(tm.clone(), c.clone())),
                        spec.weight
                    )
                });
                mat.set(t, j, c.clone());
            }
        }
        differentials.push(mat);
    }
    let labels: Vec<Vec<String>> = buckets
        .iter()
        .map(|b| {
            b.iter()
                .map(|m| alg.print(&GcaElement::from_monomial(m.clone(), crate::exactlin::rat(1))))
                .collect()
        })
        .collect();
    Ok(SlicedComplex { min_degree: lo, dims, differentials, labels })
}

/// The monomial basis of one (degree, weight) slice.
pub fn basis_of_degree(
    alg: &Algebra,
    spec: &SliceSpec,
    degree: i64,
) -> Result<Vec<Monomial>, SliceError> {
    Ok(enumerate_monomials(alg, spec)?
        .into_iter()
        .filter(|m| alg.monomial_degree(m) == degree)
        .collect())
}

/// Coordinates of an element in a monomial basis; panics if a term is
/// outside the basis.
pub fn coords_in_basis(
    alg: &Algebra,
    basis: &[Monomial],
    el: &GcaElement,
) -> Vec<crate::exactlin::Rat> {
    let mut v = vec![crate::exactlin::Rat::zero(); basis.len()];
    for (m, c) in &el.terms {
        let i = basis
            .binary_search(m)
            .unwrap_or_else(|_| panic!("term outside basis: {}", alg.print(el)));
        v[i] = c.clone();
    }
    v
}

#[cfg(test)]
mod tests {
    use super::super::{BaseRing, GeneratorSpec, VarSpec};
    use super::*;

    #[test]
    fn polynomial_weight_two_basis() {
        // Q[x,y] weights (1,1) at weight 2: {x^2, xy, y^2}
        let alg = Algebra::new(BaseRing::polynomial(&[("x", 1), ("y", 1)]), alloc::vec![]);
        let ms = enumerate_monomials(&alg, &SliceSpec::weight_only(&alg, 2)).unwrap();
        assert_eq!(ms.len(), 3);
    }

    #[test]
    fn koszul_weight_two_stratification() {
        // S(E[1]) with two odd weight-1 generators over Q[x,y]:
        // weight-2 monomials: e1e2 | x e1, x e2, y e1, y e2 | x^2, xy, y^2
        let alg = Algebra::new(
            BaseRing::polynomial(&[("x", 1), ("y", 1)]),
            alloc::vec![GeneratorSpec::new("e1", -1, 1), GeneratorSpec::new("e2", -1, 1)],
        );
        let ms = enumerate_monomials(&alg, &SliceSpec::weight_only(&alg, 2)).unwrap();
        assert_eq!(ms.len(), 8);
        let by_degree = |d: i64| ms.iter().filter(|m| alg.monomial_degree(m) == d).count();
        assert_eq!(by_degree(-2), 1);
        assert_eq!(by_degree(-1), 4);
        assert_eq!(by_degree(0), 3);
    }

    #[test]
    fn weight_zero_slice_is_constants() {
        let alg = Algebra::new(
            BaseRing::polynomial(&[("x", 1), ("y", 1)]),
            alloc::vec![GeneratorSpec::new("e1", -1, 1)],
        );
        let ms = enumerate_monomials(&alg, &SliceSpec::weight_only(&alg, 0)).unwrap();
        assert_eq!(ms.len(), 1);
        assert!(ms[0].is_unit());
    }

    #[test]
    fn laurent_without_window_rejected() {
        let alg = Algebra::new(BaseRing::laurent("z", 0), alloc::vec![]);
        let err = enumerate_monomials(&alg, &SliceSpec::weight_only(&alg, 0)).unwrap_err();
        assert_eq!(err, SliceError::LaurentNeedsWindow("z".into()));
    }

    #[test]
    fn zero_weight_variable_rejected() {
        let alg = Algebra::new(BaseRing::polynomial(&[("x", 0)]), alloc::vec![]);
        let err = enumerate_monomials(&alg, &SliceSpec::weight_only(&alg, 0)).unwrap_err();
        assert_eq!(err, SliceError::ZeroWeightUnbounded("x".into()));
    }

    #[test]
    fn opposing_weights_rejected() {
        let alg = Algebra::new(BaseRing::polynomial(&[("x", 1), ("y", -1)]), alloc::vec![]);
        let err = enumerate_monomials(&alg, &SliceSpec::weight_only(&alg, 0)).unwrap_err();
        assert!(matches!(err, SliceError::OpposingWeights(_, _)));
    }

    #[test]
    fn window_mode_counts_laurent_monomials() {
        let alg = Algebra::new(
            BaseRing::new(alloc::vec![VarSpec { name: "z".into(), invertible: true, weight: 0 }]),
            alloc::vec![GeneratorSpec::new("n", 0, 1)],
        );
        let spec = SliceSpec {
            weight: 2,
            var_windows: alloc::vec![Some((-2, 2))],
            caps: alloc::vec![Cap { gens: alloc::vec![0], max_total: 3 }],
        };
        // weight 2 = n^2 (weight from n only), z free in window: 5 monomials
        let ms = enumerate_monomials(&alg, &spec).unwrap();
        assert_eq!(ms.len(), 5);
        assert!(ms.iter().all(|m| m.gen_exps[0] == 2));
    }

    #[test]
    fn negative_weight_bounded_by_window() {
        // derivation generators with negative weight, capped exponent
        let alg = Algebra::new(
            BaseRing::polynomial(&[("x", 1)]),
            alloc::vec![GeneratorSpec::new("d", 1, -1)],
        );
        let ms = enumerate_monomials(&alg, &SliceSpec::weight_only(&alg, -1)).unwrap();
        // d alone (odd => exponent <= 1): x^0 d
        assert_eq!(ms.len(), 1);
        let ms0 = enumerate_monomials(&alg, &SliceSpec::weight_only(&alg, 0)).unwrap();
        // 1 and x d
        assert_eq!(ms0.len(), 2);
    }

    #[test]
    fn caps_bound_even_generators() {
        let alg = Algebra::new(
            BaseRing::polynomial(&[("x", 1)]),
            alloc::vec![GeneratorSpec::new("f", 0, 1)],
        );
        let mut spec = SliceSpec::weight_only(&alg, 3);
        spec.caps = alloc::vec![Cap { gens: alloc::vec![0], max_total: 1 }];
        let ms = enumerate_monomials(&alg, &spec).unwrap();
        // x^3, x^2 f
        assert_eq!(ms.len(), 2);
    }
}
