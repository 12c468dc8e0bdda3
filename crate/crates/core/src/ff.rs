//! Finite fields GF(q) for prime and prime-power orders, primitive elements
//! and the generator sets that drive Slim NoC graph construction.
//!
//! Elements are identified by their polynomial encoding: an element
//! `c_0 + c_1 x + ... + c_{m-1} x^{m-1}` over GF(p) has id `sum c_i p^i`.
//! Id 0 is the additive zero, id 1 the multiplicative one, and ascending ids
//! follow lexicographic order on `(c_{m-1}, ..., c_0)`. For prime `q` the ids
//! are simply the residues `0..q`.

use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Largest supported field order.
pub const MAX_ORDER: usize = 256;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum FieldError {
    #[error("{0} is not a prime power >= 2")]
    NonPrimePower(usize),
    #[error("field order {0} exceeds the supported maximum of {MAX_ORDER}")]
    TooLarge(usize),
    #[error("element {0} does not generate the multiplicative group")]
    NotPrimitive(usize),
    #[error("q = {q} cannot be written as 4w + ({u})")]
    ResidueMismatch { q: usize, u: i8 },
    #[error("malformed field table: {0}")]
    Malformed(String),
}

/// Returns `(p, m)` with `q = p^m` when `q` is a prime power.
pub fn prime_power(q: usize) -> Option<(usize, u32)> {
    if q < 2 {
        return None;
    }
    let p = (2..=q).find(|d| q % d == 0)?;
    let mut rest = q;
    let mut m = 0;
    while rest % p == 0 {
        rest /= p;
        m += 1;
    }
    (rest == 1).then_some((p, m))
}

pub fn is_prime_power(q: usize) -> bool {
    prime_power(q).is_some()
}

/// Operation tables of a finite field.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct FieldTable {
    q: usize,
    elements: Vec<String>,
    add: Vec<Vec<usize>>,
    mul: Vec<Vec<usize>>,
    neg: Vec<usize>,
}

impl FieldTable {
    /// Builds GF(q). Prime-power orders use polynomials over GF(p) reduced
    /// modulo the lexicographically smallest monic irreducible of degree m.
    pub fn new(q: usize) -> Result<Self, FieldError> {
        let (p, m) = prime_power(q).ok_or(FieldError::NonPrimePower(q))?;
        if q > MAX_ORDER {
            return Err(FieldError::TooLarge(q));
        }
        let m = m as usize;
        let modulus = smallest_irreducible(p, m);
        let digits: Vec<Vec<usize>> = (0..q).map(|e| to_digits(e, p, m)).collect();

        let add = (0..q)
            .map(|a| {
                (0..q)
                    .map(|b| {
                        let s: Vec<usize> = digits[a]
                            .iter()
                            .zip(&digits[b])
                            .map(|(x, y)| (x + y) % p)
                            .collect();
                        from_digits(&s, p)
                    })
                    .collect()
            })
            .collect();
        let mul = (0..q)
            .map(|a| {
                (0..q)
                    .map(|b| from_digits(&poly_mul_mod(&digits[a], &digits[b], &modulus, p), p))
                    .collect()
            })
            .collect();
        let neg = (0..q)
            .map(|a| {
                let n: Vec<usize> = digits[a].iter().map(|c| (p - c) % p).collect();
                from_digits(&n, p)
            })
            .collect();
        let elements = digits.iter().map(|d| element_name(d, m)).collect();
        Ok(Self {
            q,
            elements,
            add,
            mul,
            neg,
        })
    }

    /// Builds a table from explicit operation tables, validating every field axiom.
    pub fn from_tables(
        elements: Vec<String>,
        add: Vec<Vec<usize>>,
        mul: Vec<Vec<usize>>,
    ) -> Result<Self, FieldError> {
        let q = elements.len();
        if q < 2 {
            return Err(FieldError::Malformed("fewer than two elements".into()));
        }
        let neg = (0..q)
            .map(|a| {
                add.get(a)
                    .and_then(|row| row.iter().position(|&s| s == 0))
                    .ok_or_else(|| FieldError::Malformed(format!("element {a} has no additive inverse")))
            })
            .collect::<Result<Vec<_>, _>>()?;
        let table = Self {
            q,
            elements,
            add,
            mul,
            neg,
        };
        table.verify_axioms().map_err(FieldError::Malformed)?;
        Ok(table)
    }

    pub fn order(&self) -> usize {
        self.q
    }

    pub fn elements(&self) -> &[String] {
        &self.elements
    }

    pub fn name(&self, e: usize) -> &str {
        &self.elements[e]
    }

    pub fn id_of(&self, name: &str) -> Option<usize> {
        self.elements.iter().position(|n| n == name)
    }

    #[inline]
    pub fn add(&self, a: usize, b: usize) -> usize {
        self.add[a][b]
    }

    #[inline]
    pub fn mul(&self, a: usize, b: usize) -> usize {
        self.mul[a][b]
    }

    #[inline]
    pub fn neg(&self, a: usize) -> usize {
        self.neg[a]
    }

    #[inline]
    pub fn sub(&self, a: usize, b: usize) -> usize {
        self.add[a][self.neg[b]]
    }

    pub fn pow(&self, a: usize, k: usize) -> usize {
        (0..k).fold(1, |acc, _| self.mul[acc][a])
    }

    pub fn add_table(&self) -> &[Vec<usize>] {
        &self.add
    }

    pub fn mul_table(&self) -> &[Vec<usize>] {
        &self.mul
    }

    pub fn neg_table(&self) -> &[usize] {
        &self.neg
    }

    /// Exhaustive check of closure, commutativity, associativity,
    /// distributivity, identities and inverses. Cost is O(q^3).
    pub fn verify_axioms(&self) -> Result<(), String> {
        let q = self.q;
        let shape_ok = self.add.len() == q
            && self.mul.len() == q
            && self.neg.len() == q
            && self.add.iter().chain(&self.mul).all(|r| r.len() == q);
        if !shape_ok {
            return Err("tables are not q x q".into());
        }
        if self.add.iter().chain(&self.mul).flatten().chain(&self.neg).any(|&e| e >= q) {
            return Err("table entry out of range".into());
        }
        for a in 0..q {
            if self.add[0][a] != a || self.mul[1][a] != a || self.mul[0][a] != 0 {
                return Err(format!("identity law fails at {a}"));
            }
            if self.add[a][self.neg[a]] != 0 {
                return Err(format!("neg({a}) is not an additive inverse"));
            }
            if a != 0 && !(0..q).any(|b| self.mul[a][b] == 1) {
                return Err(format!("{a} has no multiplicative inverse"));
            }
            for b in 0..q {
                if self.add[a][b] != self.add[b][a] || self.mul[a][b] != self.mul[b][a] {
                    return Err(format!("commutativity fails at ({a},{b})"));
                }
                for c in 0..q {
                    if self.add[self.add[a][b]][c] != self.add[a][self.add[b][c]] {
                        return Err(format!("additive associativity fails at ({a},{b},{c})"));
                    }
                    if self.mul[self.mul[a][b]][c] != self.mul[a][self.mul[b][c]] {
                        return Err(format!("multiplicative associativity fails at ({a},{b},{c})"));
                    }
                    if self.mul[a][self.add[b][c]] != self.add[self.mul[a][b]][self.mul[a][c]] {
                        return Err(format!("distributivity fails at ({a},{b},{c})"));
                    }
                }
            }
        }
        Ok(())
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("field table serializes")
    }

    pub fn from_json(s: &str) -> Result<Self, FieldError> {
        #[derive(Deserialize)]
        struct Raw {
            elements: Vec<String>,
            add: Vec<Vec<usize>>,
            mul: Vec<Vec<usize>>,
        }
        let raw: Raw = serde_json::from_str(s).map_err(|e| FieldError::Malformed(e.to_string()))?;
        Self::from_tables(raw.elements, raw.add, raw.mul)
    }
}

/// Shorthand for [`FieldTable::new`].
pub fn make_field(q: usize) -> Result<FieldTable, FieldError> {
    FieldTable::new(q)
}

/// Multiplicative order of a nonzero element.
pub fn multiplicative_order(field: &FieldTable, e: usize) -> usize {
    assert!(e != 0, "zero has no multiplicative order");
    let mut acc = e;
    let mut k = 1;
    while acc != 1 {
        acc = field.mul(acc, e);
        k += 1;
    }
    k
}

pub fn is_primitive(field: &FieldTable, e: usize) -> bool {
    e != 0 && e < field.order() && multiplicative_order(field, e) == field.order() - 1
}

/// Smallest-id primitive element.
pub fn find_generator(field: &FieldTable) -> usize {
    (1..field.order())
        .find(|&e| is_primitive(field, e))
        .expect("every finite field has a primitive element")
}

pub fn count_generators(field: &FieldTable) -> usize {
    (1..field.order()).filter(|&e| is_primitive(field, e)).count()
}

/// The residue `u` in `q = 4w + u`, with q = 2 treated as `u = 0`.
pub fn residue_of(q: usize) -> i8 {
    match q % 4 {
        0 | 2 => 0,
        1 => 1,
        _ => -1,
    }
}

/// Generator sets `X` (type-0 subgroups) and `X'` (type-1 subgroups).
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct GeneratorSets {
    pub xi: usize,
    pub x: Vec<usize>,
    pub x_prime: Vec<usize>,
}

impl GeneratorSets {
    pub fn in_x(&self, e: usize) -> bool {
        self.x.binary_search(&e).is_ok()
    }

    pub fn in_x_prime(&self, e: usize) -> bool {
        self.x_prime.binary_search(&e).is_ok()
    }
}

/// MMS generator sets built from the powers of a primitive element `xi`.
pub fn generator_sets(field: &FieldTable, xi: usize, u: i8) -> Result<GeneratorSets, FieldError> {
    let q = field.order();
    if !is_primitive(field, xi) {
        return Err(FieldError::NotPrimitive(xi));
    }
    let fits = match u {
        1 | -1 => (q as i64 - u as i64) % 4 == 0,
        0 => q % 4 == 0 || q == 2,
        _ => false,
    };
    if !fits {
        return Err(FieldError::ResidueMismatch { q, u });
    }
    let power = |k: usize| field.pow(xi, k);
    let (x_exp, xp_exp): (Vec<usize>, Vec<usize>) = match u {
        1 => ((0..=q - 3).step_by(2).collect(), (1..=q - 2).step_by(2).collect()),
        0 => ((0..=q - 2).step_by(2).collect(), (1..=q - 1).step_by(2).collect()),
        _ => {
            let w = (q + 1) / 4;
            let x = (0..=2 * w - 2).step_by(2).chain((2 * w - 1..=4 * w - 3).step_by(2));
            let xp = (1..=2 * w - 1).step_by(2).chain((2 * w..=4 * w - 2).step_by(2));
            (x.collect(), xp.collect())
        }
    };
    let mut x: Vec<usize> = x_exp.into_iter().map(power).collect();
    let mut x_prime: Vec<usize> = xp_exp.into_iter().map(power).collect();
    x.sort_unstable();
    x.dedup();
    x_prime.sort_unstable();
    x_prime.dedup();
    Ok(GeneratorSets { xi, x, x_prime })
}

fn to_digits(mut e: usize, p: usize, m: usize) -> Vec<usize> {
    (0..m)
        .map(|_| {
            let d = e % p;
            e /= p;
            d
        })
        .collect()
}

fn from_digits(d: &[usize], p: usize) -> usize {
    d.iter().rev().fold(0, |acc, &c| acc * p + c)
}

fn element_name(d: &[usize], m: usize) -> String {
    if m == 1 {
        return d[0].to_string();
    }
    let terms: Vec<String> = d
        .iter()
        .enumerate()
        .rev()
        .filter(|(_, &c)| c != 0)
        .map(|(i, &c)| {
            let coef = if c == 1 && i > 0 { String::new() } else { c.to_string() };
            match i {
                0 => coef,
                1 => format!("{coef}x"),
                _ => format!("{coef}x^{i}"),
            }
        })
        .collect();
    if terms.is_empty() {
        "0".into()
    } else {
        terms.join("+")
    }
}

fn trim(mut a: Vec<usize>) -> Vec<usize> {
    while a.len() > 1 && *a.last().unwrap() == 0 {
        a.pop();
    }
    a
}

fn inv_mod_p(a: usize, p: usize) -> usize {
    (1..p).find(|b| a * b % p == 1).expect("nonzero residue mod prime is invertible")
}

/// Remainder of `a` divided by `b` over GF(p); both low-to-high coefficients.
fn poly_rem(a: &[usize], b: &[usize], p: usize) -> Vec<usize> {
    let b = trim(b.to_vec());
    let db = b.len() - 1;
    if db == 0 {
        return vec![0];
    }
    let lead_inv = inv_mod_p(b[db], p);
    let mut r = a.to_vec();
    for i in (db..r.len()).rev() {
        let c = r[i];
        if c == 0 {
            continue;
        }
        let factor = c * lead_inv % p;
        for (j, &bc) in b.iter().enumerate() {
            let idx = i - db + j;
            r[idx] = (r[idx] + p - factor * bc % p) % p;
        }
    }
    r.truncate(db);
    trim(r)
}

fn poly_mul_mod(a: &[usize], b: &[usize], modulus: &[usize], p: usize) -> Vec<usize> {
    let m = modulus.len() - 1;
    let mut prod = vec![0; a.len() + b.len()];
    for (i, &x) in a.iter().enumerate() {
        for (j, &y) in b.iter().enumerate() {
            prod[i + j] = (prod[i + j] + x * y) % p;
        }
    }
    let mut r = poly_rem(&prod, modulus, p);
    r.resize(m, 0);
    r
}

fn is_irreducible(f: &[usize], p: usize) -> bool {
    let m = f.len() - 1;
    for d in 1..=m / 2 {
        for code in 0..p.pow(d as u32) {
            let mut g = to_digits(code, p, d);
            g.push(1);
            let r = poly_rem(f, &g, p);
            if r.iter().all(|&c| c == 0) {
                return false;
            }
        }
    }
    true
}

fn smallest_irreducible(p: usize, m: usize) -> Vec<usize> {
    if m == 1 {
        // x itself; reduction mod x keeps only the constant term.
        return vec![0, 1];
    }
    (0..p.pow(m as u32))
        .map(|code| {
            let mut f = to_digits(code, p, m);
            f.push(1);
            f
        })
        .find(|f| is_irreducible(f, p))
        .expect("irreducible polynomials exist in every degree")
}
