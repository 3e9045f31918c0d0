//! Sparse multivariate polynomials over Q with lexicographic term order and a
//! recursive primitive-PRS gcd. Variables are dense `u32` indices; a smaller
//! index has higher priority in the lex order.

use std::cmp::Ordering;
use std::collections::BTreeMap;

use num_bigint::BigInt;
use num_integer::Integer;
use num_rational::BigRational;
use num_traits::{One, Signed, Zero};
use smallvec::SmallVec;

pub(crate) type Var = u32;
pub(crate) type Q = BigRational;

/// Exponent vector, sorted by variable, all exponents positive.
#[derive(Clone, Debug, Default, PartialEq, Eq, Hash)]
pub(crate) struct Mono(pub(crate) SmallVec<[(Var, u32); 4]>);

impl Mono {
    pub(crate) fn one() -> Self {
        Mono(SmallVec::new())
    }

    pub(crate) fn var(v: Var, e: u32) -> Self {
        let mut m = Mono::one();
        if e > 0 {
            m.0.push((v, e));
        }
        m
    }

    pub(crate) fn is_one(&self) -> bool {
        self.0.is_empty()
    }

    pub(crate) fn degree(&self, v: Var) -> u32 {
        self.0
            .iter()
            .find(|(w, _)| *w == v)
            .map(|(_, e)| *e)
            .unwrap_or(0)
    }

    pub(crate) fn mul(&self, other: &Mono) -> Mono {
        let mut out = SmallVec::with_capacity(self.0.len() + other.0.len());
        let (mut i, mut j) = (0, 0);
        while i < self.0.len() && j < other.0.len() {
            let (va, ea) = self.0[i];
            let (vb, eb) = other.0[j];
            match va.cmp(&vb) {
                Ordering::Less => {
                    out.push((va, ea));
                    i += 1;
                }
                Ordering::Greater => {
                    out.push((vb, eb));
                    j += 1;
                }
                Ordering::Equal => {
                    out.push((va, ea + eb));
                    i += 1;
                    j += 1;
                }
            }
        }
        out.extend_from_slice(&self.0[i..]);
        out.extend_from_slice(&other.0[j..]);
        Mono(out)
    }

    /// `self / other` if `other` divides `self`.
    pub(crate) fn div(&self, other: &Mono) -> Option<Mono> {
        let mut out = SmallVec::new();
        let mut j = 0;
        for &(v, e) in &self.0 {
            if j < other.0.len() && other.0[j].0 < v {
                return None;
            }
            if j < other.0.len() && other.0[j].0 == v {
                let d = other.0[j].1;
                j += 1;
                match e.cmp(&d) {
                    Ordering::Less => return None,
                    Ordering::Equal => {}
                    Ordering::Greater => out.push((v, e - d)),
                }
            } else {
                out.push((v, e));
            }
        }
        if j < other.0.len() {
            return None;
        }
        Some(Mono(out))
    }

    pub(crate) fn without(&self, v: Var) -> Mono {
        Mono(self.0.iter().copied().filter(|(w, _)| *w != v).collect())
    }

    fn gcd(&self, other: &Mono) -> Mono {
        let mut out = SmallVec::new();
        let (mut i, mut j) = (0, 0);
        while i < self.0.len() && j < other.0.len() {
            let (va, ea) = self.0[i];
            let (vb, eb) = other.0[j];
            match va.cmp(&vb) {
                Ordering::Less => i += 1,
                Ordering::Greater => j += 1,
                Ordering::Equal => {
                    out.push((va, ea.min(eb)));
                    i += 1;
                    j += 1;
                }
            }
        }
        Mono(out)
    }
}

impl Ord for Mono {
    fn cmp(&self, other: &Self) -> Ordering {
        let (mut i, mut j) = (0, 0);
        loop {
            match (self.0.get(i), other.0.get(j)) {
                (None, None) => return Ordering::Equal,
                (Some(_), None) => return Ordering::Greater,
                (None, Some(_)) => return Ordering::Less,
                (Some(&(va, ea)), Some(&(vb, eb))) => {
                    if va < vb {
                        return Ordering::Greater;
                    }
                    if vb < va {
                        return Ordering::Less;
                    }
                    if ea != eb {
                        return ea.cmp(&eb);
                    }
                    i += 1;
                    j += 1;
                }
            }
        }
    }
}

impl PartialOrd for Mono {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

#[derive(Clone, Debug, Default, PartialEq, Eq, Hash)]
pub(crate) struct Poly {
    pub(crate) terms: BTreeMap<Mono, Q>,
}

impl Poly {
    pub(crate) fn zero() -> Self {
        Poly::default()
    }

    pub(crate) fn constant(c: Q) -> Self {
        let mut p = Poly::zero();
        if !c.is_zero() {
            p.terms.insert(Mono::one(), c);
        }
        p
    }

    pub(crate) fn one() -> Self {
        Poly::constant(Q::one())
    }

    pub(crate) fn var(v: Var) -> Self {
        let mut p = Poly::zero();
        p.terms.insert(Mono::var(v, 1), Q::one());
        p
    }

    pub(crate) fn monomial(m: Mono, c: Q) -> Self {
        let mut p = Poly::zero();
        if !c.is_zero() {
            p.terms.insert(m, c);
        }
        p
    }

    pub(crate) fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    pub(crate) fn is_one(&self) -> bool {
        self.terms.len() == 1
            && self
                .terms
                .iter()
                .next()
                .map(|(m, c)| m.is_one() && c.is_one())
                .unwrap_or(false)
    }

    pub(crate) fn as_constant(&self) -> Option<Q> {
        match self.terms.len() {
            0 => Some(Q::zero()),
            1 => {
                let (m, c) = self.terms.iter().next().unwrap();
                m.is_one().then(|| c.clone())
            }
            _ => None,
        }
    }

    pub(crate) fn leading(&self) -> Option<(&Mono, &Q)> {
        self.terms.iter().next_back()
    }

    pub(crate) fn trailing(&self) -> Option<(&Mono, &Q)> {
        self.terms.iter().next()
    }

    fn add_term(&mut self, m: Mono, c: Q) {
        if c.is_zero() {
            return;
        }
        match self.terms.get_mut(&m) {
            Some(existing) => {
                *existing += c;
                if existing.is_zero() {
                    self.terms.remove(&m);
                }
            }
            None => {
                self.terms.insert(m, c);
            }
        }
    }

    pub(crate) fn add(&self, other: &Poly) -> Poly {
        let mut out = self.clone();
        for (m, c) in &other.terms {
            out.add_term(m.clone(), c.clone());
        }
        out
    }

    pub(crate) fn sub(&self, other: &Poly) -> Poly {
        let mut out = self.clone();
        for (m, c) in &other.terms {
            out.add_term(m.clone(), -c.clone());
        }
        out
    }

    pub(crate) fn scale(&self, k: &Q) -> Poly {
        if k.is_zero() {
            return Poly::zero();
        }
        Poly {
            terms: self.terms.iter().map(|(m, c)| (m.clone(), c * k)).collect(),
        }
    }

    pub(crate) fn mul_term(&self, mono: &Mono, k: &Q) -> Poly {
        if k.is_zero() {
            return Poly::zero();
        }
        Poly {
            terms: self
                .terms
                .iter()
                .map(|(m, c)| (m.mul(mono), c * k))
                .collect(),
        }
    }

    pub(crate) fn mul(&self, other: &Poly) -> Poly {
        if self.is_zero() || other.is_zero() {
            return Poly::zero();
        }
        if let Some(c) = self.as_constant() {
            return other.scale(&c);
        }
        if let Some(c) = other.as_constant() {
            return self.scale(&c);
        }
        let mut out = Poly::zero();
        for (ma, ca) in &self.terms {
            for (mb, cb) in &other.terms {
                out.add_term(ma.mul(mb), ca * cb);
            }
        }
        out
    }

    pub(crate) fn pow(&self, n: u32) -> Poly {
        let mut acc = Poly::one();
        let mut base = self.clone();
        let mut n = n;
        while n > 0 {
            if n & 1 == 1 {
                acc = acc.mul(&base);
            }
            n >>= 1;
            if n > 0 {
                base = base.mul(&base);
            }
        }
        acc
    }

    pub(crate) fn degree(&self, v: Var) -> u32 {
        self.terms.keys().map(|m| m.degree(v)).max().unwrap_or(0)
    }

    fn vars(&self) -> Vec<Var> {
        let mut vs: Vec<Var> = self
            .terms
            .keys()
            .flat_map(|m| m.0.iter().map(|(v, _)| *v))
            .collect();
        vs.sort_unstable();
        vs.dedup();
        vs
    }

    fn contains_var(&self, v: Var) -> bool {
        self.terms.keys().any(|m| m.degree(v) > 0)
    }

    /// Coefficients with respect to `v`, keyed by degree.
    fn coeffs_in(&self, v: Var) -> BTreeMap<u32, Poly> {
        let mut out: BTreeMap<u32, Poly> = BTreeMap::new();
        for (m, c) in &self.terms {
            out.entry(m.degree(v))
                .or_default()
                .add_term(m.without(v), c.clone());
        }
        out
    }

    fn lead_coeff_in(&self, v: Var) -> Poly {
        let d = self.degree(v);
        let mut out = Poly::zero();
        for (m, c) in &self.terms {
            if m.degree(v) == d {
                out.add_term(m.without(v), c.clone());
            }
        }
        out
    }

    /// Exact quotient, `None` when `divisor` does not divide `self`.
    pub(crate) fn exact_div(&self, divisor: &Poly) -> Option<Poly> {
        if divisor.is_zero() {
            return None;
        }
        if let Some(c) = divisor.as_constant() {
            return Some(self.scale(&(Q::one() / c)));
        }
        let (lm, lc) = divisor.leading().map(|(m, c)| (m.clone(), c.clone()))?;
        let mut quotient = Poly::zero();
        let mut rem = self.clone();
        while let Some((rm, rc)) = rem.leading().map(|(m, c)| (m.clone(), c.clone())) {
            let m = rm.div(&lm)?;
            let c = rc / &lc;
            rem = rem.sub(&divisor.mul_term(&m, &c));
            quotient.add_term(m, c);
        }
        Some(quotient)
    }

    /// Sparse pseudo-remainder of `self` by `b` in the variable `v`.
    fn prem(&self, b: &Poly, v: Var) -> Poly {
        let db = b.degree(v);
        let lcb = b.lead_coeff_in(v);
        let mut r = self.clone();
        while !r.is_zero() && r.degree(v) >= db {
            let dr = r.degree(v);
            let lcr = r.lead_coeff_in(v);
            let shift = Mono::var(v, dr - db);
            r = r.mul(&lcb).sub(&lcr.mul(b).mul_term(&shift, &Q::one()));
        }
        r
    }

    fn content_in(&self, v: Var) -> Poly {
        let mut g = Poly::zero();
        for c in self.coeffs_in(v).into_values() {
            g = poly_gcd(&g, &c);
            if g.as_constant().is_some() && !g.is_zero() {
                return Poly::one();
            }
        }
        g
    }

    fn primitive_in(&self, v: Var) -> Poly {
        let c = self.content_in(v);
        self.exact_div(&c).expect("content divides its polynomial")
    }

    /// Scale so the leading coefficient is one.
    pub(crate) fn monic(&self) -> Poly {
        match self.leading() {
            Some((_, c)) => self.scale(&(Q::one() / c)),
            None => Poly::zero(),
        }
    }

    /// Integer-primitive scaling: integer coefficients with unit content and
    /// a positive trailing coefficient. Returns `(scaled, factor)` with
    /// `scaled = factor * self`.
    pub(crate) fn integer_primitive(&self) -> (Poly, Q) {
        if self.is_zero() {
            return (Poly::zero(), Q::one());
        }
        let mut lcm = BigInt::one();
        let mut gcd = BigInt::zero();
        for c in self.terms.values() {
            lcm = lcm.lcm(c.denom());
        }
        for c in self.terms.values() {
            let n = c.numer() * (&lcm / c.denom());
            gcd = gcd.gcd(&n);
        }
        let mut factor = Q::new(lcm, gcd);
        if self.trailing().map(|(_, c)| c.is_negative()).unwrap_or(false) {
            factor = -factor;
        }
        (self.scale(&factor), factor)
    }
}

const PRIME: u64 = 2_147_483_647;

fn mod_p(c: &Q) -> u64 {
    let p = BigInt::from(PRIME);
    let n = c.numer().mod_floor(&p);
    u64::try_from(n).expect("reduced below the prime")
}

fn pow_mod(mut b: u64, mut e: u64) -> u64 {
    let mut r = 1;
    while e > 0 {
        if e & 1 == 1 {
            r = r * b % PRIME;
        }
        b = b * b % PRIME;
        e >>= 1;
    }
    r
}

fn inv_mod(a: u64) -> u64 {
    pow_mod(a, PRIME - 2)
}

fn trim(p: &mut Vec<u64>) {
    while p.last() == Some(&0) {
        p.pop();
    }
}

/// Degree of the gcd of two univariate polynomials over Z/p.
fn univariate_gcd_degree(mut a: Vec<u64>, mut b: Vec<u64>) -> usize {
    trim(&mut a);
    trim(&mut b);
    while !b.is_empty() {
        while a.len() >= b.len() && !a.is_empty() {
            let shift = a.len() - b.len();
            let f = a[a.len() - 1] * inv_mod(b[b.len() - 1]) % PRIME;
            for (i, &c) in b.iter().enumerate() {
                a[i + shift] = (a[i + shift] + PRIME - f * c % PRIME) % PRIME;
            }
            trim(&mut a);
        }
        std::mem::swap(&mut a, &mut b);
    }
    a.len().saturating_sub(1)
}

fn splitmix(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// Image of an integer polynomial in Z/p[v] with the other variables
/// evaluated at pseudo-random points.
fn image(p: &Poly, v: Var, seed: u64) -> Vec<u64> {
    let mut out = vec![0u64; p.degree(v) as usize + 1];
    for (m, c) in &p.terms {
        let mut t = mod_p(c);
        let mut e_v = 0;
        for &(w, e) in &m.0 {
            if w == v {
                e_v = e;
            } else {
                let x = splitmix(seed ^ (u64::from(w) << 32)) % (PRIME - 1) + 1;
                t = t * pow_mod(x, u64::from(e)) % PRIME;
            }
        }
        let slot = &mut out[e_v as usize];
        *slot = (*slot + t) % PRIME;
    }
    out
}

/// Upper bound on the degree in `v` of gcd(a, b), for integer polynomials
/// whose images keep their leading coefficients; `None` if no evaluation
/// point did.
fn gcd_degree_bound(a: &Poly, b: &Poly, v: Var) -> Option<usize> {
    for attempt in 0..4u64 {
        let seed = splitmix(attempt.wrapping_mul(0x1000_0001) ^ u64::from(v));
        let (ia, ib) = (image(a, v, seed), image(b, v, seed));
        if ia.last() != Some(&0) && ib.last() != Some(&0) {
            return Some(univariate_gcd_degree(ia, ib));
        }
    }
    None
}

/// Cheap cases: one operand divides the other, or modular images prove the
/// gcd free of some variable. By Gauss's lemma the integer-primitive forms
/// factor over Z, so reduction mod p respects every factorization and the
/// image degree bounds the true degree.
fn quick_gcd(a: &Poly, b: &Poly) -> Option<Poly> {
    let (small, large) = if a.terms.len() <= b.terms.len() { (a, b) } else { (b, a) };
    if small.terms.len() > 1 && large.exact_div(small).is_some() {
        return Some(small.monic());
    }
    let (ai, _) = a.integer_primitive();
    let (bi, _) = b.integer_primitive();
    let vb = bi.vars();
    let shared: Vec<Var> = ai.vars().into_iter().filter(|v| vb.contains(v)).collect();
    let mut free_of = None;
    let mut all_free = true;
    for &v in &shared {
        if gcd_degree_bound(&ai, &bi, v) == Some(0) {
            free_of.get_or_insert(v);
        } else {
            all_free = false;
        }
    }
    if all_free {
        return Some(Poly::one());
    }
    let v = free_of?;
    Some(poly_gcd(&a.content_in(v), &b.content_in(v)))
}

/// Greatest common divisor over Q, returned monic (or zero).
pub(crate) fn poly_gcd(a: &Poly, b: &Poly) -> Poly {
    if a.is_zero() {
        return b.monic();
    }
    if b.is_zero() {
        return a.monic();
    }
    if a.as_constant().is_some() || b.as_constant().is_some() {
        return Poly::one();
    }
    if a == b {
        return a.monic();
    }
    if let Some(g) = quick_gcd(a, b) {
        return g;
    }
    if a.terms.len() == 1 || b.terms.len() == 1 {
        let (single, other) = if a.terms.len() == 1 { (a, b) } else { (b, a) };
        let mut g = single.terms.keys().next().unwrap().clone();
        for m in other.terms.keys() {
            g = g.gcd(m);
            if g.is_one() {
                break;
            }
        }
        return Poly::monomial(g, Q::one());
    }
    let va = a.vars();
    let vb = b.vars();
    let v = *va.iter().chain(vb.iter()).min().unwrap();
    if !a.contains_var(v) {
        return poly_gcd(a, &b.content_in(v));
    }
    if !b.contains_var(v) {
        return poly_gcd(&a.content_in(v), b);
    }
    let ca = a.content_in(v);
    let cb = b.content_in(v);
    let c = poly_gcd(&ca, &cb);
    let pa = a.exact_div(&ca).expect("content divides");
    let pb = b.exact_div(&cb).expect("content divides");
    let (mut r0, mut r1) = if pa.degree(v) >= pb.degree(v) {
        (pa, pb)
    } else {
        (pb, pa)
    };
    loop {
        let r = r0.prem(&r1, v);
        if r.is_zero() {
            break;
        }
        if r.degree(v) == 0 {
            r1 = Poly::one();
            break;
        }
        r0 = r1;
        r1 = r.primitive_in(v);
    }
    let g = if r1.degree(v) == 0 {
        Poly::one()
    } else {
        r1.primitive_in(v)
    };
    c.mul(&g).monic()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn q(n: i64) -> Q {
        Q::from_integer(n.into())
    }

    fn x() -> Poly {
        Poly::var(0)
    }
    fn y() -> Poly {
        Poly::var(1)
    }
    fn z() -> Poly {
        Poly::var(2)
    }

    #[test]
    fn lex_order_is_multiplicative() {
        let a = Mono::var(1, 1);
        let b = Mono::var(0, 1);
        assert!(a < b);
        let c = Mono::var(0, 1);
        assert!(a.mul(&c) < b.mul(&c));
    }

    #[test]
    fn exact_division() {
        let a = x().add(&y());
        let b = x().sub(&z());
        let prod = a.mul(&b);
        assert_eq!(prod.exact_div(&a).unwrap(), b);
        assert!(prod.exact_div(&x().add(&Poly::one())).is_none());
    }

    #[test]
    fn gcd_recovers_common_factor() {
        let common = x().mul(&y()).sub(&Poly::constant(q(3)));
        let a = common.mul(&x().add(&z()));
        let b = common.mul(&y().pow(2).add(&z()));
        assert_eq!(poly_gcd(&a, &b), common.monic());
    }

    #[test]
    fn gcd_of_coprime_is_one() {
        let a = x().add(&y());
        let b = x().sub(&y());
        assert!(poly_gcd(&a, &b).is_one());
    }

    #[test]
    fn gcd_with_content_in_other_variables() {
        let a = y().mul(&x().add(&Poly::one()));
        let b = y().pow(2).mul(&x().sub(&Poly::one()));
        assert_eq!(poly_gcd(&a, &b), y());
    }
}
