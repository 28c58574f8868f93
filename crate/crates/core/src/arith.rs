//! Exact scalars: arbitrary-precision rationals and elements of cyclotomic
//! fields `Q(zeta_n)` in the power basis `1, zeta, ..., zeta^(phi(n)-1)`.

use std::collections::HashMap;
use std::fmt;
use std::ops::{Add, Mul, Neg, Sub};
use std::sync::{Arc, Mutex, OnceLock};

use num_bigint::BigInt;
use num_integer::Integer;
use num_traits::{One, Signed, Zero};
use serde::ser::SerializeStruct;
use serde::{Serialize, Serializer};

use crate::error::{Error, Result};

/// Reduced fraction with positive denominator.
pub type Rational = num_rational::BigRational;

pub fn rat(n: i64) -> Rational {
    Rational::from_integer(BigInt::from(n))
}

pub fn frac(n: i64, d: i64) -> Rational {
    Rational::new(BigInt::from(n), BigInt::from(d))
}

/// Textual encoding used in data files and reports: `"a/b"`, or `"a"` for integers.
pub fn rat_str(r: &Rational) -> String {
    r.to_string()
}

pub fn parse_rat(s: &str) -> Result<Rational> {
    s.trim().parse::<Rational>().map_err(|e| Error::Parse {
        line: 0,
        msg: format!("bad rational {s:?}: {e}"),
    })
}

pub fn is_integer(r: &Rational) -> bool {
    r.is_integer()
}

pub fn is_prime(n: u64) -> bool {
    if n < 2 {
        return false;
    }
    let mut d = 2;
    while d * d <= n {
        if n % d == 0 {
            return false;
        }
        d += 1;
    }
    true
}

pub fn euler_phi(n: u32) -> u32 {
    (1..=n).filter(|k| k.gcd(&n) == 1).count() as u32
}

fn divisors(n: u32) -> Vec<u32> {
    (1..=n).filter(|d| n % d == 0).collect()
}

/// Integer coefficients of the n-th cyclotomic polynomial, lowest degree first.
pub fn cyclotomic_polynomial(n: u32) -> Arc<Vec<i64>> {
    static CACHE: OnceLock<Mutex<HashMap<u32, Arc<Vec<i64>>>>> = OnceLock::new();
    let cache = CACHE.get_or_init(|| Mutex::new(HashMap::new()));
    if let Some(p) = cache.lock().unwrap().get(&n) {
        return p.clone();
    }
    // x^n - 1 divided by every Phi_d with d | n, d < n
    let mut num = vec![0i64; n as usize + 1];
    num[0] = -1;
    num[n as usize] = 1;
    for d in divisors(n) {
        if d == n {
            continue;
        }
        let den = cyclotomic_polynomial(d);
        num = poly_exact_div(&num, &den);
    }
    let poly = Arc::new(num);
    cache.lock().unwrap().insert(n, poly.clone());
    poly
}

// Exact division of integer polynomials by a monic divisor.
fn poly_exact_div(num: &[i64], den: &[i64]) -> Vec<i64> {
    let mut rem = num.to_vec();
    let dd = den.len() - 1;
    let nd = rem.len() - 1;
    let mut quot = vec![0i64; nd - dd + 1];
    for k in (0..=nd - dd).rev() {
        let c = rem[k + dd];
        quot[k] = c;
        for (j, &dc) in den.iter().enumerate() {
            rem[k + j] -= c * dc;
        }
    }
    debug_assert!(rem.iter().all(|&c| c == 0));
    quot
}

/// An element of `Q(zeta_order)`, stored as its unique remainder modulo the
/// `order`-th cyclotomic polynomial.
#[derive(Clone, Debug)]
pub struct Cyclotomic {
    order: u32,
    coeffs: Vec<Rational>,
}

impl Cyclotomic {
    pub fn from_rational(r: Rational) -> Self {
        Cyclotomic {
            order: 1,
            coeffs: vec![r],
        }
    }

    pub fn from_int(n: i64) -> Self {
        Self::from_rational(rat(n))
    }

    pub fn zero() -> Self {
        Self::from_int(0)
    }

    pub fn one() -> Self {
        Self::from_int(1)
    }

    /// `sum_k c_k zeta_n^k` for an arbitrary-length coefficient list.
    pub fn from_power_coeffs(n: u32, coeffs: &[Rational]) -> Self {
        assert!(n >= 1, "cyclotomic order must be positive");
        let mut folded = vec![Rational::zero(); n as usize];
        for (k, c) in coeffs.iter().enumerate() {
            folded[k % n as usize] += c;
        }
        Self::reduce(n, folded)
    }

    // Long division by the monic Phi_n; input has length n (powers 0..n-1).
    fn reduce(n: u32, mut c: Vec<Rational>) -> Self {
        let phi = cyclotomic_polynomial(n);
        let deg = phi.len() - 1;
        for top in (deg..c.len()).rev() {
            if c[top].is_zero() {
                continue;
            }
            let lead = c[top].clone();
            for (j, &pc) in phi.iter().enumerate() {
                if pc != 0 {
                    let idx = top - deg + j;
                    c[idx] -= &lead * rat(pc);
                }
            }
        }
        c.truncate(deg);
        Cyclotomic { order: n, coeffs: c }
    }

    pub fn order(&self) -> u32 {
        self.order
    }

    pub fn coeffs(&self) -> &[Rational] {
        &self.coeffs
    }

    pub fn is_zero(&self) -> bool {
        self.coeffs.iter().all(|c| c.is_zero())
    }

    pub fn is_rational(&self) -> bool {
        self.coeffs.iter().skip(1).all(|c| c.is_zero())
    }

    pub fn as_rational(&self) -> Result<Rational> {
        if self.is_rational() {
            Ok(self.coeffs[0].clone())
        } else {
            Err(Error::NotRational)
        }
    }

    /// Image in `Q(zeta_m)` where `order | m`.
    pub fn embed(&self, m: u32) -> Self {
        assert!(m % self.order == 0, "{} does not divide {}", self.order, m);
        if m == self.order {
            return self.clone();
        }
        let step = (m / self.order) as usize;
        let mut c = vec![Rational::zero(); m as usize];
        for (k, v) in self.coeffs.iter().enumerate() {
            c[k * step] += v;
        }
        Self::reduce(m, c)
    }

    fn common(a: &Self, b: &Self) -> (Self, Self) {
        if a.order == b.order {
            return (a.clone(), b.clone());
        }
        let l = a.order.lcm(&b.order);
        (a.embed(l), b.embed(l))
    }

    /// The Galois action `zeta -> zeta^k` (`k` coprime to the order).
    pub fn galois(&self, k: i64) -> Self {
        let n = self.order as i64;
        let mut c = vec![Rational::zero(); self.order as usize];
        for (i, v) in self.coeffs.iter().enumerate() {
            let e = (i as i64 * k).rem_euclid(n) as usize;
            c[e] += v;
        }
        Self::reduce(self.order, c)
    }

    /// Complex conjugate.
    pub fn conj(&self) -> Self {
        self.galois(-1)
    }

    pub fn inv(&self) -> Result<Self> {
        if self.is_zero() {
            return Err(Error::DivisionByZero);
        }
        if self.is_rational() {
            return Ok(Self::from_rational(self.coeffs[0].recip()));
        }
        // a^{-1} = (product of the nontrivial conjugates) / norm(a)
        let n = self.order;
        let mut others = Self::one();
        for k in 2..n {
            if k.gcd(&n) == 1 {
                others = &others * &self.galois(k as i64);
            }
        }
        let norm = (&others * self).as_rational()?;
        Ok(others.scale(&norm.recip()))
    }

    pub fn scale(&self, r: &Rational) -> Self {
        Cyclotomic {
            order: self.order,
            coeffs: self.coeffs.iter().map(|c| c * r).collect(),
        }
    }
}

/// `zeta_n^k` in reduced form.
pub fn cyclo(n: u32, k: i64) -> Cyclotomic {
    assert!(n >= 1, "cyclotomic order must be positive");
    let e = k.rem_euclid(n as i64) as usize;
    let mut c = vec![Rational::zero(); n as usize];
    c[e] = Rational::one();
    Cyclotomic::reduce(n, c)
}

impl PartialEq for Cyclotomic {
    fn eq(&self, other: &Self) -> bool {
        let (a, b) = Cyclotomic::common(self, other);
        a.coeffs == b.coeffs
    }
}

impl Eq for Cyclotomic {}

impl From<Rational> for Cyclotomic {
    fn from(r: Rational) -> Self {
        Cyclotomic::from_rational(r)
    }
}

impl From<i64> for Cyclotomic {
    fn from(n: i64) -> Self {
        Cyclotomic::from_int(n)
    }
}

impl Add for &Cyclotomic {
    type Output = Cyclotomic;
    fn add(self, rhs: &Cyclotomic) -> Cyclotomic {
        let (a, b) = Cyclotomic::common(self, rhs);
        Cyclotomic {
            order: a.order,
            coeffs: a.coeffs.iter().zip(&b.coeffs).map(|(x, y)| x + y).collect(),
        }
    }
}

impl Sub for &Cyclotomic {
    type Output = Cyclotomic;
    fn sub(self, rhs: &Cyclotomic) -> Cyclotomic {
        self + &(-rhs)
    }
}

impl Neg for &Cyclotomic {
    type Output = Cyclotomic;
    fn neg(self) -> Cyclotomic {
        Cyclotomic {
            order: self.order,
            coeffs: self.coeffs.iter().map(|c| -c).collect(),
        }
    }
}

impl Mul for &Cyclotomic {
    type Output = Cyclotomic;
    fn mul(self, rhs: &Cyclotomic) -> Cyclotomic {
        let (a, b) = Cyclotomic::common(self, rhs);
        if a.order == 1 {
            return Cyclotomic::from_rational(&a.coeffs[0] * &b.coeffs[0]);
        }
        let n = a.order as usize;
        let mut prod = vec![Rational::zero(); n];
        for (i, x) in a.coeffs.iter().enumerate() {
            if x.is_zero() {
                continue;
            }
            for (j, y) in b.coeffs.iter().enumerate() {
                if !y.is_zero() {
                    prod[(i + j) % n] += x * y;
                }
            }
        }
        Cyclotomic::reduce(a.order, prod)
    }
}

macro_rules! forward_owned {
    ($tr:ident, $m:ident) => {
        impl $tr for Cyclotomic {
            type Output = Cyclotomic;
            fn $m(self, rhs: Cyclotomic) -> Cyclotomic {
                (&self).$m(&rhs)
            }
        }
    };
}
forward_owned!(Add, add);
forward_owned!(Sub, sub);
forward_owned!(Mul, mul);

impl Neg for Cyclotomic {
    type Output = Cyclotomic;
    fn neg(self) -> Cyclotomic {
        -&self
    }
}

impl fmt::Display for Cyclotomic {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.is_rational() {
            return write!(f, "{}", self.coeffs[0]);
        }
        let mut first = true;
        for (k, c) in self.coeffs.iter().enumerate() {
            if c.is_zero() {
                continue;
            }
            if !first {
                write!(f, "{}", if c.is_negative() { " - " } else { " + " })?;
            } else if c.is_negative() {
                write!(f, "-")?;
            }
            first = false;
            let a = c.abs();
            match k {
                0 => write!(f, "{a}")?,
                _ if a.is_one() => write!(f, "z{}^{k}", self.order)?,
                _ => write!(f, "{a}*z{}^{k}", self.order)?,
            }
        }
        Ok(())
    }
}

impl Serialize for Cyclotomic {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        let mut st = s.serialize_struct("Cyclotomic", 2)?;
        st.serialize_field("order", &self.order)?;
        let coeffs: Vec<String> = self.coeffs.iter().map(rat_str).collect();
        st.serialize_field("coeffs", &coeffs)?;
        st.end()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn cyclotomic_polynomials() {
        assert_eq!(*cyclotomic_polynomial(1), vec![-1, 1]);
        assert_eq!(*cyclotomic_polynomial(3), vec![1, 1, 1]);
        assert_eq!(*cyclotomic_polynomial(4), vec![1, 0, 1]);
        assert_eq!(*cyclotomic_polynomial(6), vec![1, -1, 1]);
        assert_eq!(cyclotomic_polynomial(12).len() - 1, 4);
    }

    #[test]
    fn cyclo_reduction() {
        let z = cyclo(3, 2);
        assert_eq!(z.coeffs(), &[rat(-1), rat(-1)]);
        assert_eq!(cyclo(4, 2), Cyclotomic::from_int(-1));
        assert_eq!(cyclo(5, 0), Cyclotomic::one());
        assert_eq!(cyclo(5, -1), cyclo(5, 4));
    }

    #[test]
    fn root_of_unity_sum_vanishes() {
        let s = (0..7).fold(Cyclotomic::zero(), |acc, k| &acc + &cyclo(7, k));
        assert!(s.is_zero());
    }

    #[test]
    fn products_and_inverses() {
        assert_eq!(&cyclo(3, 1) * &cyclo(3, 2), Cyclotomic::one());
        assert_eq!(cyclo(3, 1).inv().unwrap(), cyclo(3, 2));
        assert_eq!(Cyclotomic::zero().inv(), Err(Error::DivisionByZero));
        let a = &cyclo(12, 1) + &Cyclotomic::from_int(2);
        assert_eq!(&a * &a.inv().unwrap(), Cyclotomic::one());
    }

    #[test]
    fn as_rational_cases() {
        assert_eq!(cyclo(4, 2).as_rational().unwrap(), rat(-1));
        let s = &(&Cyclotomic::one() + &cyclo(3, 1)) + &cyclo(3, 2);
        assert_eq!(s.as_rational().unwrap(), rat(0));
        assert_eq!(cyclo(3, 1).as_rational(), Err(Error::NotRational));
    }

    #[test]
    fn mixed_orders_embed() {
        // zeta_3 = zeta_6^2
        assert_eq!(cyclo(3, 1), cyclo(6, 2));
        let s = &cyclo(3, 1) + &cyclo(4, 1);
        assert_eq!(s.order(), 12);
        assert_eq!(&s - &cyclo(4, 1), cyclo(12, 4));
        assert_eq!(Cyclotomic::from_int(-1), cyclo(2, 1));
    }

    #[test]
    fn conjugation() {
        assert_eq!(cyclo(7, 3).conj(), cyclo(7, 4));
        let a = &cyclo(5, 1) + &cyclo(5, 4);
        assert_eq!(a.conj(), a);
    }

    fn arb_cyc(n: u32) -> impl Strategy<Value = Cyclotomic> {
        proptest::collection::vec((-5i64..=5, 1i64..=4), n as usize).prop_map(move |v| {
            let c: Vec<Rational> = v.into_iter().map(|(a, b)| frac(a, b)).collect();
            Cyclotomic::from_power_coeffs(n, &c)
        })
    }

    fn arb_triple() -> impl Strategy<Value = (Cyclotomic, Cyclotomic, Cyclotomic)> {
        prop_oneof![Just(3u32), Just(5), Just(7), Just(8), Just(12)]
            .prop_flat_map(|n| (arb_cyc(n), arb_cyc(n), arb_cyc(n)))
    }

    proptest! {
        #[test]
        fn field_axioms((a, b, c) in arb_triple()) {
            prop_assert_eq!(&(&a * &b) * &c, &a * &(&b * &c));
            prop_assert_eq!(&(&a + &b) + &c, &a + &(&b + &c));
            prop_assert_eq!(&a * &(&b + &c), &(&a * &b) + &(&a * &c));
            prop_assert_eq!(&a * &b, &b * &a);
            if !a.is_zero() {
                prop_assert_eq!(&a * &a.inv().unwrap(), Cyclotomic::one());
            }
        }

        #[test]
        fn power_sums_vanish(p in prop_oneof![Just(3u32), Just(5), Just(7), Just(11), Just(13)], j in 1i64..13) {
            prop_assume!(j % p as i64 != 0);
            let s = (0..p as i64).fold(Cyclotomic::zero(), |acc, k| &acc + &cyclo(p, j * k));
            prop_assert!(s.is_zero());
        }

        #[test]
        fn canonical_reduction(k in -40i64..40, n in 1u32..20) {
            // two construction paths for zeta_n^k
            let direct = cyclo(n, k);
            let mut c = vec![Rational::zero(); (k.rem_euclid(n as i64) + n as i64) as usize + 1];
            c[(k.rem_euclid(n as i64) + n as i64) as usize] = Rational::one();
            let folded = Cyclotomic::from_power_coeffs(n, &c);
            prop_assert_eq!(direct.coeffs(), folded.coeffs());
        }
    }
}
