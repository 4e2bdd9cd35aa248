//! Free graded-commutative algebras over (Laurent-)polynomial base rings.
//!
//! An [`Algebra`] is described by a [`BaseRing`] (named variables, each
//! optionally invertible, with an auxiliary weight) and a list of
//! [`GeneratorSpec`]s (named generators with a cohomological degree and a
//! weight).  Odd-degree generators square to zero, even-degree generators
//! are polynomial, and multiplication follows the Koszul sign rule.
//! Derivations are determined by generator (and optionally variable) images
//! and extend by the graded Leibniz rule; algebra maps extend
//! multiplicatively.
//!
//! Weight is an auxiliary grading whose finite slices make cohomology a
//! finite-dimensional exact linear-algebra problem; see [`slice`].

mod parse;
mod slice;

pub use parse::{parse_element, parse_element_or_zero};
pub use slice::{
    basis_of_degree, coords_in_basis, enumerate_capped, enumerate_monomials, slice_complex,
    SliceError, SliceSpec,
};

use alloc::collections::BTreeMap;
use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;
use core::fmt;

use num_traits::{One, Signed, Zero};

pub use crate::exactlin::{rat, ratio, Rat};

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct VarSpec {
    pub name: String,
    pub invertible: bool,
    pub weight: i64,
}

/// Base ring: a polynomial ring over Q, some variables possibly Laurent.
#[derive(Clone, Debug, PartialEq, Eq, Default)]
pub struct BaseRing {
    pub vars: Vec<VarSpec>,
}

impl BaseRing {
    pub fn new(vars: Vec<VarSpec>) -> Self {
        let mut names: Vec<&str> = vars.iter().map(|v| v.name.as_str()).collect();
        names.sort_unstable();
        names.dedup();
        assert_eq!(names.len(), vars.len(), "duplicate variable names");
        BaseRing { vars }
    }

    /// Polynomial variables with the given weights.
    pub fn polynomial(vars: &[(&str, i64)]) -> Self {
        Self::new(
            vars.iter()
                .map(|&(n, w)| VarSpec { name: n.into(), invertible: false, weight: w })
                .collect(),
        )
    }

    /// A single Laurent variable, as used on chart overlaps.
    pub fn laurent(name: &str, weight: i64) -> Self {
        Self::new(vec![VarSpec { name: name.into(), invertible: true, weight }])
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct GeneratorSpec {
    pub name: String,
    pub degree: i64,
    pub weight: i64,
}

impl GeneratorSpec {
    pub fn new(name: &str, degree: i64, weight: i64) -> Self {
        GeneratorSpec { name: name.into(), degree, weight }
    }

    pub fn is_odd(&self) -> bool {
        self.degree.rem_euclid(2) == 1
    }
}

/// Exponent cap on the total degree of a group of generators; used for
/// truncations (powers of the augmentation ideal, symmetric-degree cutoffs).
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Cap {
    pub gens: Vec<usize>,
    pub max_total: u32,
}

impl Cap {
    pub fn total(&self, m: &Monomial) -> u32 {
        self.gens.iter().map(|&i| m.gen_exps[i]).sum()
    }
}

/// Ambient algebra description: base ring plus graded generators.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Algebra {
    pub base: BaseRing,
    pub gens: Vec<GeneratorSpec>,
}

/// A monomial: base-ring exponents (possibly negative for Laurent
/// variables) and generator exponents. Ordered degree-lexicographically on
/// (generator multidegree, base monomial) so term order is deterministic.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord)]
pub struct Monomial {
    pub gen_exps: Vec<u32>,
    pub var_exps: Vec<i64>,
}

impl Monomial {
    pub fn one(alg: &Algebra) -> Self {
        Monomial { gen_exps: vec![0; alg.gens.len()], var_exps: vec![0; alg.base.vars.len()] }
    }

    pub fn is_unit(&self) -> bool {
        self.gen_exps.iter().all(|&e| e == 0) && self.var_exps.iter().all(|&e| e == 0)
    }
}

/// Element of a free graded-commutative algebra: a finite sum of monomials
/// with nonzero rational coefficients.
#[derive(Clone, Debug, PartialEq, Eq, Default)]
pub struct GcaElement {
    pub terms: BTreeMap<Monomial, Rat>,
}

impl GcaElement {
    pub fn zero() -> Self {
        GcaElement { terms: BTreeMap::new() }
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn from_monomial(m: Monomial, c: Rat) -> Self {
        let mut terms = BTreeMap::new();
        if !c.is_zero() {
            terms.insert(m, c);
        }
        GcaElement { terms }
    }

    pub fn add_term(&mut self, m: Monomial, c: Rat) {
        if c.is_zero() {
            return;
        }
        match self.terms.get_mut(&m) {
            Some(slot) => {
                *slot += c;
                if slot.is_zero() {
                    self.terms.remove(&m);
                }
            }
            None => {
                self.terms.insert(m, c);
            }
        }
    }

    pub fn add(&self, other: &GcaElement) -> GcaElement {
        let mut out = self.clone();
        for (m, c) in &other.terms {
            out.add_term(m.clone(), c.clone());
        }
        out
    }

    pub fn sub(&self, other: &GcaElement) -> GcaElement {
        let mut out = self.clone();
        for (m, c) in &other.terms {
            out.add_term(m.clone(), -c.clone());
        }
        out
    }

    pub fn neg(&self) -> GcaElement {
        GcaElement { terms: self.terms.iter().map(|(m, c)| (m.clone(), -c.clone())).collect() }
    }

    pub fn scale(&self, c: &Rat) -> GcaElement {
        if c.is_zero() {
            return GcaElement::zero();
        }
        GcaElement { terms: self.terms.iter().map(|(m, v)| (m.clone(), v * c)).collect() }
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum GcaError {
    UnknownName(String),
    Parse { pos: usize, msg: String },
    MissingImage(String),
    NotInvertible(String),
}

impl fmt::Display for GcaError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            GcaError::UnknownName(n) => write!(f, "unknown name `{n}`"),
            GcaError::Parse { pos, msg } => write!(f, "parse error at column {pos}: {msg}"),
            GcaError::MissingImage(n) => write!(f, "no image defined for `{n}`"),
            GcaError::NotInvertible(n) => write!(f, "`{n}` is not invertible"),
        }
    }
}

impl Algebra {
    pub fn new(base: BaseRing, gens: Vec<GeneratorSpec>) -> Self {
        let mut names: Vec<&str> = base
            .vars
            .iter()
            .map(|v| v.name.as_str())
            .chain(gens.iter().map(|g| g.name.as_str()))
            .collect();
        names.sort_unstable();
        names.dedup();
        assert_eq!(
            names.len(),
            base.vars.len() + gens.len(),
            "variable/generator names must be unique"
        );
        Algebra { base, gens }
    }

    pub fn var_index(&self, name: &str) -> Option<usize> {
        self.base.vars.iter().position(|v| v.name == name)
    }

    pub fn gen_index(&self, name: &str) -> Option<usize> {
        self.gens.iter().position(|g| g.name == name)
    }

    pub fn one(&self) -> GcaElement {
        GcaElement::from_monomial(Monomial::one(self), Rat::one())
    }

    pub fn scalar(&self, c: Rat) -> GcaElement {
        GcaElement::from_monomial(Monomial::one(self), c)
    }

    pub fn var(&self, i: usize) -> GcaElement {
        self.var_pow(i, 1)
    }

    pub fn var_pow(&self, i: usize, e: i64) -> GcaElement {
        assert!(
            e >= 0 || self.base.vars[i].invertible,
            "negative power of non-invertible variable `{}`",
            self.base.vars[i].name
        );
        let mut m = Monomial::one(self);
        m.var_exps[i] = e;
        GcaElement::from_monomial(m, Rat::one())
    }

    pub fn gen(&self, i: usize) -> GcaElement {
        let mut m = Monomial::one(self);
        m.gen_exps[i] = 1;
        GcaElement::from_monomial(m, Rat::one())
    }

    pub fn monomial_degree(&self, m: &Monomial) -> i64 {
        m.gen_exps.iter().zip(&self.gens).map(|(&e, g)| e as i64 * g.degree).sum()
    }

    pub fn monomial_weight(&self, m: &Monomial) -> i64 {
        let g: i64 = m.gen_exps.iter().zip(&self.gens).map(|(&e, g)| e as i64 * g.weight).sum();
        let v: i64 = m.var_exps.iter().zip(&self.base.vars).map(|(&e, v)| e * v.weight).sum();
        g + v
    }

    /// Cohomological degree of a homogeneous element; `None` when mixed or
    /// zero.
    pub fn degree(&self, a: &GcaElement) -> Option<i64> {
        let mut it = a.terms.keys().map(|m| self.monomial_degree(m));
        let first = it.next()?;
        it.all(|d| d == first).then_some(first)
    }

    /// Auxiliary weight of a homogeneous element; `None` when mixed or zero.
    pub fn weight(&self, a: &GcaElement) -> Option<i64> {
        let mut it = a.terms.keys().map(|m| self.monomial_weight(m));
        let first = it.next()?;
        it.all(|w| w == first).then_some(first)
    }

    /// Koszul sign for multiplying monomial `a` by monomial `b`:
    /// `None` when an odd generator collides (the product is zero),
    /// otherwise the parity of moving the odd factors of `b` into place.
    fn merge_monomials(&self, a: &Monomial, b: &Monomial) -> Option<(Monomial, Rat)> {
        assert_eq!(a.gen_exps.len(), b.gen_exps.len(), "mismatched ambient algebras");
        assert_eq!(a.var_exps.len(), b.var_exps.len(), "mismatched ambient algebras");
        let mut inversions: u64 = 0;
        let mut odd_suffix_a: u64 = 0; // odd exponents of a strictly above current index
        for i in (0..self.gens.len()).rev() {
            let odd = self.gens[i].is_odd();
            if odd && a.gen_exps[i] == 1 && b.gen_exps[i] == 1 {
                return None;
            }
            if odd && b.gen_exps[i] == 1 {
                inversions += odd_suffix_a;
            }
            if odd && a.gen_exps[i] == 1 {
                odd_suffix_a += 1;
            }
        }
        let mut m = a.clone();
        for i in 0..m.gen_exps.len() {
            m.gen_exps[i] += b.gen_exps[i];
        }
        for i in 0..m.var_exps.len() {
            m.var_exps[i] += b.var_exps[i];
            assert!(
                m.var_exps[i] >= 0 || self.base.vars[i].invertible,
                "negative power of non-invertible variable `{}`",
                self.base.vars[i].name
            );
        }
        let sign = if inversions % 2 == 0 { Rat::one() } else { -Rat::one() };
        Some((m, sign))
    }

    /// Graded-commutative product. Bilinear, associative, Koszul-signed;
    /// odd squares vanish.
    pub fn mul(&self, a: &GcaElement, b: &GcaElement) -> GcaElement {
        let mut out = GcaElement::zero();
        for (ma, ca) in &a.terms {
            for (mb, cb) in &b.terms {
                if let Some((m, sign)) = self.merge_monomials(ma, mb) {
                    out.add_term(m, ca * cb * sign);
                }
            }
        }
        out
    }

    pub fn pow(&self, a: &GcaElement, e: u32) -> GcaElement {
        let mut out = self.one();
        for _ in 0..e {
            out = self.mul(&out, a);
        }
        out
    }

    /// Augmentation: kill every generator, keep the base-ring part.
    pub fn augmentation(&self, a: &GcaElement) -> GcaElement {
        let mut out = GcaElement::zero();
        for (m, c) in &a.terms {
            if m.gen_exps.iter().all(|&e| e == 0) {
                out.add_term(m.clone(), c.clone());
            }
        }
        out
    }

    /// Drop monomials that exceed any of the caps.
    pub fn truncate(&self, a: &GcaElement, caps: &[Cap]) -> GcaElement {
        GcaElement {
            terms: a
                .terms
                .iter()
                .filter(|(m, _)| caps.iter().all(|c| c.total(m) <= c.max_total))
                .map(|(m, c)| (m.clone(), c.clone()))
                .collect(),
        }
    }

    pub fn mul_capped(&self, a: &GcaElement, b: &GcaElement, caps: &[Cap]) -> GcaElement {
        self.truncate(&self.mul(a, b), caps)
    }

    /// Invert `u * (1 + n)` modulo the caps, where `u` must be a single
    /// invertible monomial (the cap-degree-zero part) and `n` is nilpotent
    /// modulo the caps. Used for chart transitions of filtered
    /// automorphisms.
    pub fn invert_capped(&self, a: &GcaElement, caps: &[Cap]) -> Result<GcaElement, GcaError> {
        let unit_part: Vec<(&Monomial, &Rat)> =
            a.terms.iter().filter(|(m, _)| caps.iter().all(|c| c.total(m) == 0)).collect();
        let [(um, uc)] = unit_part.as_slice() else {
            return Err(GcaError::NotInvertible(self.print(a)));
        };
        if um.gen_exps.iter().any(|&e| e != 0) {
            return Err(GcaError::NotInvertible(self.print(a)));
        }
        for (i, &e) in um.var_exps.iter().enumerate() {
            if e != 0 && !self.base.vars[i].invertible {
                return Err(GcaError::NotInvertible(self.print(a)));
            }
        }
        let mut inv_m = Monomial::one(self);
        for (i, &e) in um.var_exps.iter().enumerate() {
            inv_m.var_exps[i] = -e;
        }
        let u_inv = GcaElement::from_monomial(inv_m, Rat::one() / (*uc).clone());
        // n = u^{-1} a - 1 is nilpotent modulo caps; sum the geometric series
        let n = self.mul_capped(&u_inv, a, caps).sub(&self.one());
        let mut series = self.one();
        let mut power = self.one();
        let mut sign = Rat::one();
        loop {
            power = self.mul_capped(&power, &n, caps);
            if power.is_zero() {
                break;
            }
            sign = -sign;
            series = series.add(&power.scale(&sign));
        }
        Ok(self.mul_capped(&u_inv, &series, caps))
    }

    pub fn print(&self, a: &GcaElement) -> String {
        use core::fmt::Write;
        if a.is_zero() {
            return "0".into();
        }
        let mut s = String::new();
        for (idx, (m, c)) in a.terms.iter().enumerate() {
            let neg = c.is_negative();
            let abs = c.abs();
            if idx == 0 {
                if neg {
                    s.push('-');
                }
            } else {
                s.push_str(if neg { " - " } else { " + " });
            }
            let mut factors: Vec<String> = Vec::new();
            for (i, &e) in m.var_exps.iter().enumerate() {
                if e == 1 {
                    factors.push(self.base.vars[i].name.clone());
                } else if e != 0 {
                    factors.push(alloc::format!("{}^{}", self.base.vars[i].name, e));
                }
            }
            for (i, &e) in m.gen_exps.iter().enumerate() {
                if e == 1 {
                    factors.push(self.gens[i].name.clone());
                } else if e != 0 {
                    factors.push(alloc::format!("{}^{}", self.gens[i].name, e));
                }
            }
            if factors.is_empty() {
                write!(s, "{abs}").unwrap();
            } else if abs.is_one() {
                s.push_str(&factors.join("*"));
            } else {
                write!(s, "{}*{}", abs, factors.join("*")).unwrap();
            }
        }
        s
    }

    pub fn parse(&self, input: &str) -> Result<GcaElement, GcaError> {
        parse_element(self, input)
    }
}

/// A degree-`d` derivation, determined by images of the generators (and
/// optionally of base variables), extended by the graded Leibniz rule
/// `D(ab) = D(a) b + (-1)^{|D||a|} a D(b)`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Derivation {
    pub degree: i64,
    pub gen_images: Vec<Option<GcaElement>>,
    pub var_images: Vec<GcaElement>,
}

impl Derivation {
    /// The zero derivation of the given degree.
    pub fn zero(alg: &Algebra, degree: i64) -> Self {
        Derivation {
            degree,
            gen_images: vec![Some(GcaElement::zero()); alg.gens.len()],
            var_images: vec![GcaElement::zero(); alg.base.vars.len()],
        }
    }

    pub fn with_gen_image(mut self, i: usize, img: GcaElement) -> Self {
        self.gen_images[i] = Some(img);
        self
    }

    pub fn with_var_image(mut self, i: usize, img: GcaElement) -> Self {
        self.var_images[i] = img;
        self
    }

    fn is_odd(&self) -> bool {
        self.degree.rem_euclid(2) == 1
    }
}

impl Algebra {
    fn gen_image<'d>(&self, d: &'d Derivation, i: usize) -> &'d GcaElement {
        d.gen_images[i]
            .as_ref()
            .unwrap_or_else(|| panic!("derivation has no image for generator `{}`", self.gens[i].name))
    }

    /// Apply a derivation to an element by the graded Leibniz rule.
    pub fn apply(&self, d: &Derivation, a: &GcaElement) -> GcaElement {
        let mut out = GcaElement::zero();
        for (m, c) in &a.terms {
            out = out.add(&self.apply_monomial(d, m).scale(c));
        }
        out
    }

    fn apply_monomial(&self, d: &Derivation, m: &Monomial) -> GcaElement {
        let mut out = GcaElement::zero();
        // Base variables first: they are even, so no sign is picked up and
        // the power rule also covers Laurent exponents.
        for (i, &e) in m.var_exps.iter().enumerate() {
            if e == 0 || d.var_images[i].is_zero() {
                continue;
            }
            let mut rest = m.clone();
            rest.var_exps[i] -= 1;
            let term = self
                .mul(&d.var_images[i], &GcaElement::from_monomial(rest, rat(e)));
            out = out.add(&term);
        }
        // Then generators in canonical order; the sign tracks the parity of
        // the odd factors already passed when the derivation is odd.
        let mut sign_flip = false;
        for (i, &e) in m.gen_exps.iter().enumerate() {
            if e != 0 && !self.gen_image(d, i).is_zero() {
                // prefix = generators < i (with full exponents), suffix = rest
                let mut prefix = Monomial::one(self);
                prefix.var_exps = m.var_exps.clone();
                for j in 0..i {
                    prefix.gen_exps[j] = m.gen_exps[j];
                }
                let mut suffix = Monomial::one(self);
                for j in (i + 1)..self.gens.len() {
                    suffix.gen_exps[j] = m.gen_exps[j];
                }
                // D(g^e) = e g^{e-1} D(g); for odd g, e == 1
                let mut inner = Monomial::one(self);
                inner.gen_exps[i] = e - 1;
                let coeff = if sign_flip { rat(-(e as i64)) } else { rat(e as i64) };
                let mut term = GcaElement::from_monomial(prefix, coeff);
                term = self.mul(&term, self.gen_image(d, i));
                term = self.mul(&term, &GcaElement::from_monomial(inner, Rat::one()));
                term = self.mul(&term, &GcaElement::from_monomial(suffix, Rat::one()));
                out = out.add(&term);
            }
            if d.is_odd() && self.gens[i].is_odd() && m.gen_exps[i] % 2 == 1 {
                sign_flip = !sign_flip;
            }
        }
        out
    }

    /// Graded commutator `[d1, d2] = d1 d2 - (-1)^{|d1||d2|} d2 d1`,
    /// itself a derivation of degree `|d1| + |d2|`.
    pub fn commutator(&self, d1: &Derivation, d2: &Derivation) -> Derivation {
        let sign = if d1.is_odd() && d2.is_odd() { rat(-1) } else { rat(1) };
        let image = |a: &GcaElement| {
            let fwd = self.apply(d1, &self.apply(d2, a));
            let bwd = self.apply(d2, &self.apply(d1, a));
            fwd.sub(&bwd.scale(&sign))
        };
        let mut out = Derivation::zero(self, d1.degree + d2.degree);
        for i in 0..self.gens.len() {
            out.gen_images[i] = Some(image(&self.gen(i)));
        }
        for i in 0..self.base.vars.len() {
            out.var_images[i] = image(&self.var(i));
        }
        out
    }

    /// Check `D^2 = 0` on every generator and variable; sufficient by the
    /// Leibniz rule for odd derivations.
    pub fn squares_to_zero(&self, d: &Derivation) -> bool {
        (0..self.gens.len()).all(|i| self.apply(d, self.gen_image(d, i)).is_zero())
            && (0..self.base.vars.len()).all(|i| self.apply(d, &d.var_images[i]).is_zero())
    }

    /// Two derivations agree iff they agree on generators and variables.
    pub fn derivations_equal(&self, d1: &Derivation, d2: &Derivation) -> bool {
        (0..self.gens.len()).all(|i| self.gen_image(d1, i) == self.gen_image(d2, i))
            && (0..self.base.vars.len()).all(|i| d1.var_images[i] == d2.var_images[i])
    }
}

/// An algebra homomorphism determined multiplicatively by images of the
/// source's variables and generators inside a target algebra.
#[derive(Clone, Debug)]
pub struct AlgebraMap {
    pub gen_images: Vec<GcaElement>,
    pub var_images: Vec<GcaElement>,
    /// Caps applied in the target while expanding (for maps of truncated
    /// algebras); empty means exact.
    pub caps: Vec<Cap>,
}

impl AlgebraMap {
    pub fn identity(alg: &Algebra) -> Self {
        AlgebraMap {
            gen_images: (0..alg.gens.len()).map(|i| alg.gen(i)).collect(),
            var_images: (0..alg.base.vars.len()).map(|i| alg.var(i)).collect(),
            caps: Vec::new(),
        }
    }

    /// Apply to an element of the source; `target` is the algebra the
    /// images live in.
    pub fn apply(&self, target: &Algebra, a: &GcaElement) -> GcaElement {
        let mut out = GcaElement::zero();
        'terms: for (m, c) in &a.terms {
            let mut acc = target.scalar(c.clone());
            for (i, &e) in m.var_exps.iter().enumerate() {
                if e == 0 {
                    continue;
                }
                let img = if e > 0 {
                    target.pow_capped(&self.var_images[i], e as u32, &self.caps)
                } else {
                    let inv = target
                        .invert_capped(&self.var_images[i], &self.caps)
                        .expect("variable image must be invertible to map a Laurent monomial");
                    target.pow_capped(&inv, (-e) as u32, &self.caps)
                };
                acc = target.mul_capped(&acc, &img, &self.caps);
                if acc.is_zero() {
                    continue 'terms;
                }
            }
            for (i, &e) in m.gen_exps.iter().enumerate() {
                for _ in 0..e {
                    acc = target.mul_capped(&acc, &self.gen_images[i], &self.caps);
                    if acc.is_zero() {
                        continue 'terms;
                    }
                }
            }
            out = out.add(&acc);
        }
        out
    }
}

impl Algebra {
    pub fn pow_capped(&self, a: &GcaElement, e: u32, caps: &[Cap]) -> GcaElement {
        let mut out = self.one();
        for _ in 0..e {
            out = self.mul_capped(&out, a, caps);
        }
        out
    }

    /// Re-express an element of `from` in this algebra, matching variables
    /// and generators by name. Panics when a name actually used by the
    /// element is missing here.
    pub fn transport(&self, from: &Algebra, el: &GcaElement) -> GcaElement {
        let mut out = GcaElement::zero();
        for (m, c) in &el.terms {
            let mut mm = Monomial::one(self);
            for (i, &e) in m.var_exps.iter().enumerate() {
                if e != 0 {
                    let name = &from.base.vars[i].name;
                    let j = self
                        .var_index(name)
                        .unwrap_or_else(|| panic!("no variable `{name}` in target algebra"));
                    mm.var_exps[j] = e;
                }
            }
            for (i, &e) in m.gen_exps.iter().enumerate() {
                if e != 0 {
                    let name = &from.gens[i].name;
                    let j = self
                        .gen_index(name)
                        .unwrap_or_else(|| panic!("no generator `{name}` in target algebra"));
                    mm.gen_exps[j] = e;
                }
            }
            out.add_term(mm, c.clone());
        }
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn two_odd() -> Algebra {
        Algebra::new(
            BaseRing::polynomial(&[("x", 1), ("y", 1)]),
            vec![GeneratorSpec::new("e1", -1, 1), GeneratorSpec::new("e2", -1, 1)],
        )
    }

    #[test]
    fn koszul_sign_flip() {
        let a = two_odd();
        let e1 = a.gen(0);
        let e2 = a.gen(1);
        assert_eq!(a.mul(&e1, &e2), a.mul(&e2, &e1).neg());
    }

    #[test]
    fn odd_square_vanishes() {
        let a = two_odd();
        let e1 = a.gen(0);
        assert!(a.mul(&e1, &e1).is_zero());
    }

    #[test]
    fn difference_of_squares_drops_odd_part() {
        // (x + e1)(x - e1) = x^2
        let a = two_odd();
        let x = a.var(0);
        let e1 = a.gen(0);
        let prod = a.mul(&x.add(&e1), &x.sub(&e1));
        assert_eq!(prod, a.mul(&x, &x));
    }

    #[test]
    fn graded_commutativity_general() {
        let a = two_odd();
        let u = a.mul(&a.var(0), &a.gen(0)); // degree -1
        let v = a.gen(1); // degree -1
        // u v = (-1)^{(-1)(-1)} v u = -v u
        assert_eq!(a.mul(&u, &v), a.mul(&v, &u).neg());
    }

    #[test]
    fn associativity_spot_check() {
        let a = two_odd();
        let p = a.var(0).add(&a.gen(0));
        let q = a.var(1).add(&a.gen(1));
        let r = a.gen(0).add(&a.gen(1)).add(&a.one());
        let left = a.mul(&a.mul(&p, &q), &r);
        let right = a.mul(&p, &a.mul(&q, &r));
        assert_eq!(left, right);
    }

    #[test]
    fn leibniz_on_single_factor() {
        // D = d/de (odd e), a = x*e -> x
        let alg = two_odd();
        let d = Derivation::zero(&alg, 1).with_gen_image(0, alg.one());
        let a = alg.mul(&alg.var(0), &alg.gen(0));
        assert_eq!(alg.apply(&d, &a), alg.var(0));
    }

    #[test]
    fn leibniz_sign_pattern() {
        // Q(e1) = x, |Q| = 1: Q(e1 e2) = x e2 - e1 Q(e2) with Q(e2) = y
        let alg = two_odd();
        let q = Derivation::zero(&alg, 1)
            .with_gen_image(0, alg.var(0))
            .with_gen_image(1, alg.var(1));
        let e1e2 = alg.mul(&alg.gen(0), &alg.gen(1));
        let expect = alg
            .mul(&alg.var(0), &alg.gen(1))
            .sub(&alg.mul(&alg.gen(0), &alg.var(1)));
        assert_eq!(alg.apply(&q, &e1e2), expect);
    }

    #[test]
    fn leibniz_rule_on_products_holds() {
        let alg = two_odd();
        let q = Derivation::zero(&alg, 1)
            .with_gen_image(0, alg.var(0))
            .with_gen_image(1, alg.mul(&alg.var(0), &alg.var(1)));
        let a = alg.mul(&alg.var(0), &alg.gen(0)); // odd
        let b = alg.gen(1).add(&alg.var(1));
        let lhs = alg.apply(&q, &alg.mul(&a, &b));
        // |a| = -1 odd, |q| = 1: D(ab) = D(a) b - a D(b)
        let rhs = alg
            .mul(&alg.apply(&q, &a), &b)
            .sub(&alg.mul(&a, &alg.apply(&q, &b)));
        assert_eq!(lhs, rhs);
    }

    #[test]
    fn commutator_of_contractions() {
        // [d/de1, e1 * d/de2] = d/de2, evaluated on generators
        let alg = two_odd();
        let d1 = Derivation::zero(&alg, 1).with_gen_image(0, alg.one());
        let d2 = Derivation::zero(&alg, 0).with_gen_image(1, alg.gen(0));
        let c = alg.commutator(&d1, &d2);
        assert_eq!(c.gen_images[1].clone().unwrap(), alg.one());
        assert!(c.gen_images[0].clone().unwrap().is_zero());
    }

    #[test]
    fn square_zero_detected_via_commutator() {
        // Q odd with Q^2 = 0: [Q, Q] = 2 Q^2 = 0
        let alg = two_odd();
        let q = Derivation::zero(&alg, 1)
            .with_gen_image(0, alg.var(0))
            .with_gen_image(1, alg.var(1));
        let qq = alg.commutator(&q, &q);
        assert!(alg.derivations_equal(&qq, &Derivation::zero(&alg, 2)));
        assert!(alg.squares_to_zero(&q));
    }

    #[test]
    fn jacobi_shadow() {
        // [Q, [Q, D]] = 0 when Q^2 = 0
        let alg = two_odd();
        let q = Derivation::zero(&alg, 1)
            .with_gen_image(0, alg.var(0))
            .with_gen_image(1, alg.var(1));
        let d = Derivation::zero(&alg, 1)
            .with_gen_image(0, alg.mul(&alg.var(1), &alg.one()))
            .with_gen_image(1, alg.var_pow(0, 2));
        let inner = alg.commutator(&q, &d);
        let outer = alg.commutator(&q, &inner);
        assert!(alg.derivations_equal(&outer, &Derivation::zero(&alg, 3)));
    }

    #[test]
    fn weight_additive_under_mul() {
        let alg = two_odd();
        let a = alg.mul(&alg.var(0), &alg.gen(0));
        let b = alg.mul(&alg.var(1), &alg.gen(1));
        let w = alg.weight(&alg.mul(&a, &b)).unwrap();
        assert_eq!(w, alg.weight(&a).unwrap() + alg.weight(&b).unwrap());
    }

    #[test]
    fn invert_capped_geometric_series() {
        // (1 - n)^{-1} = 1 + n + n^2 mod n^3
        let alg = Algebra::new(
            BaseRing::laurent("z", 0),
            vec![GeneratorSpec::new("n", 0, 1)],
        );
        let caps = vec![Cap { gens: vec![0], max_total: 2 }];
        let a = alg.one().sub(&alg.gen(0));
        let inv = alg.invert_capped(&a, &caps).unwrap();
        let expect = alg.one().add(&alg.gen(0)).add(&alg.pow(&alg.gen(0), 2));
        assert_eq!(inv, expect);
        assert_eq!(alg.mul_capped(&a, &inv, &caps), alg.one());
    }

    #[test]
    fn invert_capped_with_laurent_unit() {
        let alg = Algebra::new(
            BaseRing::laurent("z", 0),
            vec![GeneratorSpec::new("n", 0, 1)],
        );
        let caps = vec![Cap { gens: vec![0], max_total: 3 }];
        // a = z + n  =>  a^{-1} = z^{-1} (1 + z^{-1} n)^{-1}
        let a = alg.var(0).add(&alg.gen(0));
        let inv = alg.invert_capped(&a, &caps).unwrap();
        assert_eq!(alg.mul_capped(&a, &inv, &caps), alg.one());
    }
}
