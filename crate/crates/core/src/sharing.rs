//! Shamir sharing with error-correcting reconstruction and share renewal.
//!
//! Quorum position `i` (0-based) holds the evaluation at `x = i + 1`.
//! [`CodeParams`] precomputes everything a quorum needs to open values of a
//! fixed degree quickly: Lagrange weights, a consistency predictor for the
//! clean case, and a parity-check matrix used to locate bad sub-shares when
//! a sharing is moved between quorums.

use std::cell::RefCell;
use std::collections::HashMap;
use std::rc::Rc;

use rand::Rng;

use crate::error::{Error, Result};
use crate::field::{lagrange_interpolate, random_poly, Fe, Polynomial, PrimeField};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Share {
    /// 1-based, and equal to the evaluation point.
    pub party_index: usize,
    pub value: Fe,
}

/// One share per quorum position, tagged with the sharing polynomial's degree.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SharedValue {
    values: Vec<Fe>,
    degree: usize,
    quorum_id: usize,
}

impl SharedValue {
    pub fn new(values: Vec<Fe>, degree: usize, quorum_id: usize) -> Self {
        SharedValue { values, degree, quorum_id }
    }

    pub fn values(&self) -> &[Fe] {
        &self.values
    }

    pub fn into_values(self) -> Vec<Fe> {
        self.values
    }

    pub fn value(&self, position: usize) -> Fe {
        self.values[position]
    }

    pub fn degree(&self) -> usize {
        self.degree
    }

    pub fn quorum_id(&self) -> usize {
        self.quorum_id
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn with_quorum(mut self, quorum_id: usize) -> Self {
        self.quorum_id = quorum_id;
        self
    }

    pub fn shares(&self) -> impl Iterator<Item = Share> + '_ {
        self.values
            .iter()
            .enumerate()
            .map(|(i, &value)| Share { party_index: i + 1, value })
    }

    /// The `(party_index, value)` list an honest opening would deliver.
    pub fn points(&self) -> Vec<(usize, Fe)> {
        self.shares().map(|s| (s.party_index, s.value)).collect()
    }
}

/// Number of errors a degree-`d` opening among `n` shares can correct.
pub fn correctable(n: usize, d: usize) -> usize {
    n.saturating_sub(d + 1) / 2
}

/// Shares `secret` on a fresh random polynomial of the given degree.
pub fn share<R: Rng + ?Sized>(
    f: &PrimeField,
    secret: Fe,
    n_parties: usize,
    degree: usize,
    rng: &mut R,
) -> Result<SharedValue> {
    if degree >= n_parties {
        return Err(Error::invalid(format!(
            "degree {degree} needs more than {n_parties} parties"
        )));
    }
    let poly = random_poly(f, degree, Some(secret), rng);
    Ok(SharedValue::new(poly.eval_points(f, n_parties), degree, 0))
}

/// Result of a robust opening.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Reconstruction {
    pub secret: Fe,
    pub polynomial: Polynomial,
    /// Party indices whose value disagreed with the decoded polynomial, ascending.
    pub disqualified: Vec<usize>,
}

/// Robust opening of `sv` from the values parties actually delivered.
///
/// Up to `⌊(N − d − 1)/2⌋` of the received values may be wrong; more than
/// that yields [`Error::DecodingFailure`] rather than a wrong secret whenever
/// the received word is not within that distance of another codeword.
pub fn reconstruct(
    f: &PrimeField,
    sv: &SharedValue,
    received: &[(usize, Fe)],
) -> Result<Reconstruction> {
    if received.len() != sv.len() {
        return Err(Error::invalid(format!(
            "expected {} received values, got {}",
            sv.len(),
            received.len()
        )));
    }
    decode_points(f, received, sv.degree())
}

/// Robust decoding of arbitrary `(party_index, value)` points at degree `d`.
pub fn decode_points(f: &PrimeField, received: &[(usize, Fe)], d: usize) -> Result<Reconstruction> {
    let pts: Vec<(Fe, Fe)> = received.iter().map(|&(i, v)| (f.elem(i as u64), v)).collect();
    let clean = lagrange_interpolate(f, &pts, d)?;
    let polynomial = if pts.iter().all(|&(x, y)| clean.eval(f, x) == y) {
        clean
    } else {
        berlekamp_welch(f, &pts, d, correctable(pts.len(), d))?
    };
    let disqualified = received
        .iter()
        .zip(&pts)
        .filter(|(_, &(x, y))| polynomial.eval(f, x) != y)
        .map(|(&(i, _), _)| i)
        .collect();
    Ok(Reconstruction { secret: polynomial.eval(f, Fe::ZERO), polynomial, disqualified })
}

/// Berlekamp–Welch: finds the polynomial of degree `≤ d` that agrees with all
/// but at most `e` of the points.
///
/// Solves `Q(xᵢ) = yᵢ·E(xᵢ)` for a monic error locator `E` of degree `e` and
/// `Q` of degree `≤ d + e`, divides, and checks agreement.
pub fn berlekamp_welch(f: &PrimeField, points: &[(Fe, Fe)], d: usize, e: usize) -> Result<Polynomial> {
    if points.len() < d + 2 * e + 1 {
        return Err(Error::invalid(format!(
            "{} points cannot correct {e} errors at degree {d}",
            points.len()
        )));
    }
    let q_len = d + e + 1;
    let unknowns = e + q_len;
    let rows: Vec<Vec<Fe>> = points
        .iter()
        .map(|&(x, y)| {
            let mut row = Vec::with_capacity(unknowns + 1);
            let mut xp = Fe::ONE;
            for _ in 0..e {
                row.push(f.neg(f.mul(y, xp)));
                xp = f.mul(xp, x);
            }
            let rhs = f.mul(y, xp);
            let mut xq = Fe::ONE;
            for _ in 0..q_len {
                row.push(xq);
                xq = f.mul(xq, x);
            }
            row.push(rhs);
            row
        })
        .collect();
    let sol = gauss_solve(f, rows, unknowns)
        .ok_or_else(|| Error::decoding("error-locator system is inconsistent"))?;
    let mut locator = sol[..e].to_vec();
    locator.push(Fe::ONE);
    let locator = Polynomial::new(locator);
    let q = Polynomial::new(sol[e..].to_vec());
    let (poly, rem) = q.div_rem(f, &locator)?;
    if !rem.is_zero() || poly.degree() > d {
        return Err(Error::decoding("locator does not divide the solution"));
    }
    let agree = points.iter().filter(|&&(x, y)| poly.eval(f, x) == y).count();
    if agree + e < points.len() {
        return Err(Error::decoding(format!(
            "decoded polynomial agrees with only {agree} of {} points",
            points.len()
        )));
    }
    Ok(poly)
}

/// Adds a jointly dealt zero-constant polynomial of degree `new_degree`: every
/// position deals one and the contributions are summed.
pub fn renew_shares<R: Rng + ?Sized>(
    f: &PrimeField,
    sv: &SharedValue,
    new_degree: usize,
    rng: &mut R,
) -> Result<SharedValue> {
    let n = sv.len();
    if new_degree >= n {
        return Err(Error::invalid(format!("degree {new_degree} needs more than {n} parties")));
    }
    if new_degree < sv.degree() {
        return Err(Error::invalid(format!(
            "renewal cannot lower degree {} to {new_degree}",
            sv.degree()
        )));
    }
    let mut delta = vec![Fe::ZERO; new_degree + 1];
    for _ in 0..n {
        let part = random_poly(f, new_degree, Some(Fe::ZERO), rng);
        for (acc, &c) in delta.iter_mut().zip(part.coeffs()) {
            *acc = f.add(*acc, c);
        }
    }
    let delta = Polynomial::new(delta);
    let values = sv
        .values()
        .iter()
        .enumerate()
        .map(|(i, &v)| f.add(v, delta.eval(f, f.point(i))))
        .collect();
    Ok(SharedValue::new(values, new_degree, sv.quorum_id()))
}

/// Share-wise `Σ coeffᵢ·svᵢ + constant`. The degree is the maximum term degree.
pub fn linear_combine(
    f: &PrimeField,
    terms: &[(Fe, &SharedValue)],
    constant: Fe,
) -> Result<SharedValue> {
    let (_, first) = terms
        .first()
        .ok_or_else(|| Error::invalid("linear combination needs at least one term"))?;
    let (n, quorum) = (first.len(), first.quorum_id());
    if let Some((_, bad)) = terms.iter().find(|(_, sv)| sv.quorum_id() != quorum || sv.len() != n) {
        return Err(Error::invalid(format!(
            "cannot combine sharings from quorums {quorum} and {}",
            bad.quorum_id()
        )));
    }
    let degree = terms.iter().map(|(_, sv)| sv.degree()).max().unwrap_or(0);
    let values = (0..n)
        .map(|i| {
            terms
                .iter()
                .fold(constant, |acc, (c, sv)| f.mul_add(*c, sv.value(i), acc))
        })
        .collect();
    Ok(SharedValue::new(values, degree, quorum))
}

/// Lagrange basis weights for nodes `xs` evaluated at `z`.
pub fn lagrange_weights(f: &PrimeField, xs: &[Fe], z: Fe) -> Result<Vec<Fe>> {
    xs.iter()
        .enumerate()
        .map(|(i, &xi)| {
            let (mut num, mut den) = (Fe::ONE, Fe::ONE);
            for (j, &xj) in xs.iter().enumerate() {
                if i != j {
                    num = f.mul(num, f.sub(z, xj));
                    den = f.mul(den, f.sub(xi, xj));
                }
            }
            f.div(num, den)
                .map_err(|_| Error::invalid(format!("duplicate interpolation node {xi}")))
        })
        .collect()
}

/// Output of [`CodeParams::decode`].
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Decoded {
    pub secret: Fe,
    /// The decoded polynomial evaluated at every position.
    pub codeword: Vec<Fe>,
    /// 0-based positions whose received value differs from `codeword`.
    pub bad: Vec<usize>,
}

/// Precomputed decoding data for sharings of degree `d` across `n` positions
/// at points `1..=n`.
#[derive(Clone, Debug)]
pub struct CodeParams {
    field: PrimeField,
    n: usize,
    d: usize,
    e: usize,
    zero_weights: Vec<Fe>,
    // Row j: weights giving f(point d+1+j) from f(point 0..=d).
    predict: Vec<Vec<Fe>>,
    // Row k: v_i * x_i^k, annihilating every codeword.
    parity: Vec<Vec<Fe>>,
    // Inverse of the parity columns d+1..n.
    parity_tail_inv: Vec<Vec<Fe>>,
    // Interpolation rows keyed by the positions left out of the basis.
    extensions: RefCell<HashMap<Vec<usize>, Rc<Extension>>>,
}

/// Weights that extend the values at `basis` to every position and to 0.
#[derive(Debug)]
struct Extension {
    basis: Vec<usize>,
    rows: Vec<Vec<Fe>>,
    zero: Vec<Fe>,
}

const EXTENSION_CACHE: usize = 1024;

impl CodeParams {
    pub fn new(field: PrimeField, n: usize, d: usize) -> Result<Self> {
        if d >= n {
            return Err(Error::invalid(format!("degree {d} needs more than {n} positions")));
        }
        if n as u64 >= field.modulus() {
            return Err(Error::invalid(format!(
                "{n} positions need distinct nonzero points modulo {}",
                field.modulus()
            )));
        }
        let f = &field;
        let xs: Vec<Fe> = (0..n).map(|i| f.point(i)).collect();
        let head = &xs[..=d];
        let zero_weights = lagrange_weights(f, head, Fe::ZERO)?;
        let predict = xs[d + 1..]
            .iter()
            .map(|&z| lagrange_weights(f, head, z))
            .collect::<Result<Vec<_>>>()?;
        let v: Vec<Fe> = xs
            .iter()
            .enumerate()
            .map(|(i, &xi)| {
                let prod = xs
                    .iter()
                    .enumerate()
                    .filter(|&(j, _)| j != i)
                    .fold(Fe::ONE, |acc, (_, &xj)| f.mul(acc, f.sub(xi, xj)));
                f.inv(prod)
            })
            .collect::<Result<_>>()?;
        let r = n - d - 1;
        let parity: Vec<Vec<Fe>> = (0..r)
            .map(|k| {
                xs.iter()
                    .zip(&v)
                    .map(|(&x, &vi)| f.mul(vi, f.pow(x, k as u64)))
                    .collect()
            })
            .collect();
        let tail: Vec<Vec<Fe>> = parity.iter().map(|row| row[d + 1..].to_vec()).collect();
        let parity_tail_inv = invert(f, tail)
            .ok_or_else(|| Error::invalid("parity-check tail is singular"))?;
        Ok(CodeParams {
            field,
            n,
            d,
            e: correctable(n, d),
            zero_weights,
            predict,
            parity,
            parity_tail_inv,
            extensions: RefCell::default(),
        })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn degree(&self) -> usize {
        self.d
    }

    /// Errors correctable at this degree.
    pub fn e(&self) -> usize {
        self.e
    }

    pub fn field(&self) -> &PrimeField {
        &self.field
    }

    /// Weights `λᵢ` with `f(0) = Σ λᵢ f(i+1)` over the first `d + 1` positions.
    pub fn zero_weights(&self) -> &[Fe] {
        &self.zero_weights
    }

    pub fn parity(&self) -> &[Vec<Fe>] {
        &self.parity
    }

    /// Constant term from the first `d + 1` values, trusting them.
    pub fn interpolate_zero(&self, values: &[Fe]) -> Fe {
        let f = &self.field;
        self.zero_weights
            .iter()
            .zip(values)
            .fold(Fe::ZERO, |acc, (&w, &v)| f.mul_add(w, v, acc))
    }

    /// Whether `values` lie on one polynomial of degree `≤ d`.
    pub fn is_codeword(&self, values: &[Fe]) -> bool {
        let f = &self.field;
        let head = &values[..=self.d];
        self.predict.iter().zip(&values[self.d + 1..]).all(|(row, &actual)| {
            row.iter().zip(head).fold(Fe::ZERO, |acc, (&w, &v)| f.mul_add(w, v, acc)) == actual
        })
    }

    /// Number of positions where two words agree.
    pub fn agreement(a: &[Fe], b: &[Fe]) -> usize {
        a.iter().zip(b).filter(|(x, y)| x == y).count()
    }

    /// Robust opening of a full received word.
    pub fn decode(&self, values: &[Fe]) -> Result<Decoded> {
        debug_assert_eq!(values.len(), self.n);
        if self.is_codeword(values) {
            return Ok(Decoded {
                secret: self.interpolate_zero(values),
                codeword: values.to_vec(),
                bad: Vec::new(),
            });
        }
        let f = &self.field;
        let pts: Vec<(Fe, Fe)> = values.iter().enumerate().map(|(i, &v)| (f.point(i), v)).collect();
        let poly = berlekamp_welch(f, &pts, self.d, self.e)?;
        let codeword = poly.eval_points(f, self.n);
        let bad = (0..self.n).filter(|&i| codeword[i] != values[i]).collect();
        Ok(Decoded { secret: poly.eval(f, Fe::ZERO), codeword, bad })
    }

    /// Like [`decode`](Self::decode), but first trusts the positions outside
    /// `suspects`: interpolates from them and accepts the result when it
    /// disagrees with `values` in at most `e` places, which makes it the
    /// unique decoding. Falls back to the full decoder otherwise.
    pub fn decode_avoiding(&self, values: &[Fe], suspects: &[usize]) -> Result<Decoded> {
        if suspects.is_empty() || self.is_codeword(values) {
            return self.decode(values);
        }
        if let Some(ext) = self.extension(suspects) {
            let f = &self.field;
            let head: Vec<Fe> = ext.basis.iter().map(|&i| values[i]).collect();
            let dot = |w: &[Fe]| w.iter().zip(&head).fold(Fe::ZERO, |acc, (&a, &b)| f.mul_add(a, b, acc));
            let codeword: Vec<Fe> = ext.rows.iter().map(|w| dot(w)).collect();
            let bad: Vec<usize> = (0..self.n).filter(|&i| codeword[i] != values[i]).collect();
            if bad.len() <= self.e {
                return Ok(Decoded { secret: dot(&ext.zero), codeword, bad });
            }
        }
        self.decode(values)
    }

    fn extension(&self, suspects: &[usize]) -> Option<Rc<Extension>> {
        let mut key = suspects.to_vec();
        key.sort_unstable();
        key.dedup();
        if let Some(ext) = self.extensions.borrow().get(&key) {
            return Some(Rc::clone(ext));
        }
        let basis: Vec<usize> = (0..self.n).filter(|i| key.binary_search(i).is_err()).take(self.d + 1).collect();
        if basis.len() <= self.d {
            return None;
        }
        let f = &self.field;
        let xs: Vec<Fe> = basis.iter().map(|&i| f.point(i)).collect();
        let rows = (0..self.n).map(|i| lagrange_weights(f, &xs, f.point(i))).collect::<Result<Vec<_>>>().ok()?;
        let zero = lagrange_weights(f, &xs, Fe::ZERO).ok()?;
        let ext = Rc::new(Extension { basis, rows, zero });
        let mut cache = self.extensions.borrow_mut();
        if cache.len() >= EXTENSION_CACHE {
            cache.clear();
        }
        cache.insert(key, Rc::clone(&ext));
        Some(ext)
    }

    /// Locates the nonzero positions of an error vector from its syndrome
    /// `H·err`. Fails when more than `e` positions are nonzero.
    pub fn locate_errors(&self, syndrome: &[Fe], suspects: &[usize]) -> Result<Vec<usize>> {
        let f = &self.field;
        let mut word = vec![Fe::ZERO; self.n];
        for (slot, row) in word[self.d + 1..].iter_mut().zip(&self.parity_tail_inv) {
            *slot = row.iter().zip(syndrome).fold(Fe::ZERO, |acc, (&a, &s)| f.mul_add(a, s, acc));
        }
        Ok(self.decode_avoiding(&word, suspects)?.bad)
    }
}

/// Gauss–Jordan elimination on an augmented matrix with `unknowns` columns
/// plus the right-hand side. Free variables are set to zero. `None` when the
/// system is inconsistent.
fn gauss_solve(f: &PrimeField, mut a: Vec<Vec<Fe>>, unknowns: usize) -> Option<Vec<Fe>> {
    let rows = a.len();
    let mut pivots = Vec::new();
    let mut r = 0;
    for c in 0..unknowns {
        if r == rows {
            break;
        }
        let Some(pr) = (r..rows).find(|&i| !a[i][c].is_zero()) else {
            continue;
        };
        a.swap(r, pr);
        let inv = f.inv(a[r][c]).expect("pivot is nonzero");
        for k in c..=unknowns {
            a[r][k] = f.mul(a[r][k], inv);
        }
        let pivot_row = a[r].clone();
        for (i, row) in a.iter_mut().enumerate() {
            if i == r || row[c].is_zero() {
                continue;
            }
            let factor = row[c];
            for k in c..=unknowns {
                row[k] = f.sub(row[k], f.mul(factor, pivot_row[k]));
            }
        }
        pivots.push(c);
        r += 1;
    }
    if a[r..].iter().any(|row| !row[unknowns].is_zero()) {
        return None;
    }
    let mut x = vec![Fe::ZERO; unknowns];
    for (i, &c) in pivots.iter().enumerate() {
        x[c] = a[i][unknowns];
    }
    Some(x)
}

/// Inverse of a square matrix, `None` if singular.
fn invert(f: &PrimeField, m: Vec<Vec<Fe>>) -> Option<Vec<Vec<Fe>>> {
    let k = m.len();
    let mut cols: Vec<Vec<Fe>> = Vec::with_capacity(k);
    for unit in 0..k {
        let aug = m
            .iter()
            .enumerate()
            .map(|(i, row)| {
                let mut r = row.clone();
                r.push(if i == unit { Fe::ONE } else { Fe::ZERO });
                r
            })
            .collect();
        let sol = gauss_solve(f, aug, k)?;
        // A consistent square system with a free variable means singular.
        let back: Vec<Fe> = m
            .iter()
            .map(|row| row.iter().zip(&sol).fold(Fe::ZERO, |acc, (&a, &x)| f.mul_add(a, x, acc)))
            .collect();
        if back.iter().enumerate().any(|(i, &v)| v != if i == unit { Fe::ONE } else { Fe::ZERO }) {
            return None;
        }
        cols.push(sol);
    }
    Some((0..k).map(|i| (0..k).map(|j| cols[j][i]).collect()).collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn field(p: u64) -> PrimeField {
        PrimeField::new(p).unwrap()
    }

    fn corrupt(f: &PrimeField, sv: &SharedValue, positions: &[usize], rng: &mut ChaCha8Rng) -> Vec<(usize, Fe)> {
        let mut pts = sv.points();
        for &i in positions {
            let shift = f.elem(rng.random_range(1..f.modulus()));
            pts[i].1 = f.add(pts[i].1, shift);
        }
        pts
    }

    #[test]
    fn share_examples() {
        let f = field(65521);
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let s = f.elem(777);
        let sv = share(&f, s, 12, 0, &mut rng).unwrap();
        assert!(sv.values().iter().all(|&v| v == s));
        for d in 0..12 {
            let sv = share(&f, s, 12, d, &mut rng).unwrap();
            assert_eq!(reconstruct(&f, &sv, &sv.points()).unwrap().secret, s);
        }
        assert!(matches!(share(&f, s, 4, 4, &mut rng), Err(Error::InvalidArgument(_))));
    }

    #[test]
    fn share_pairs_are_uniform() {
        // p=7, N=7, degree 2: any two shares of a fixed secret are uniform on Z_7².
        let f = field(7);
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let trials = 20_000;
        let mut counts = [0u32; 49];
        for _ in 0..trials {
            let sv = share(&f, f.elem(3), 7, 2, &mut rng).unwrap();
            counts[(sv.value(1).value() * 7 + sv.value(4).value()) as usize] += 1;
        }
        let expected = trials as f64 / 49.0;
        let chi2: f64 = counts.iter().map(|&c| (c as f64 - expected).powi(2) / expected).sum();
        assert!(chi2 < crate::stats::chi_square_critical(48, 0.001), "chi2 = {chi2}");
    }

    #[test]
    fn reconstruct_flags_exactly_the_corrupted() {
        let f = field(65521);
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let s = f.elem(4242);
        let sv = share(&f, s, 12, 4, &mut rng).unwrap();
        let clean = reconstruct(&f, &sv, &sv.points()).unwrap();
        assert_eq!((clean.secret, clean.disqualified.len()), (s, 0));

        let pts = corrupt(&f, &sv, &[2, 7, 11], &mut rng);
        let rec = reconstruct(&f, &sv, &pts).unwrap();
        assert_eq!(rec.secret, s);
        assert_eq!(rec.disqualified, vec![3, 8, 12]);

        for trial in 0..200 {
            let mut r = ChaCha8Rng::seed_from_u64(trial);
            let positions: Vec<usize> = rand::seq::index::sample(&mut r, 12, 4).into_vec();
            let pts = corrupt(&f, &sv, &positions, &mut r);
            match reconstruct(&f, &sv, &pts) {
                Ok(rec) => assert_eq!(rec.secret, s),
                Err(e) => assert!(matches!(e, Error::DecodingFailure(_))),
            }
        }
    }

    #[test]
    fn berlekamp_welch_examples() {
        let f = field(65521);
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let poly = random_poly(&f, 2, None, &mut rng);
        let mut pts: Vec<(Fe, Fe)> = (1..=7).map(|x| (f.elem(x), poly.eval(&f, f.elem(x)))).collect();
        assert_eq!(
            berlekamp_welch(&f, &pts[..3], 2, 0).unwrap(),
            lagrange_interpolate(&f, &pts[..3], 2).unwrap()
        );
        pts[1].1 = f.add(pts[1].1, Fe::ONE);
        pts[5].1 = f.elem(9);
        assert_eq!(berlekamp_welch(&f, &pts, 2, 2).unwrap(), poly);

        // A constant shift is itself a degree-2 word, so it decodes to poly + 5.
        let constant: Vec<(Fe, Fe)> = pts.iter().map(|&(x, _)| (x, f.add(poly.eval(&f, x), f.elem(5)))).collect();
        let moved = berlekamp_welch(&f, &constant, 2, 2).unwrap();
        assert_eq!(moved.eval(&f, Fe::ZERO), f.add(poly.eval(&f, Fe::ZERO), f.elem(5)));
        // Shifting by a degree-4 term leaves no degree-2 polynomial within distance 2.
        let shifted: Vec<(Fe, Fe)> = (1..=7)
            .map(|x| (f.elem(x), f.add(poly.eval(&f, f.elem(x)), f.elem(5))))
            .map(|(x, y)| (x, f.add(y, f.mul(x, f.mul(x, f.mul(x, x))))))
            .collect();
        assert!(matches!(berlekamp_welch(&f, &shifted, 2, 2), Err(Error::DecodingFailure(_))));
        assert!(matches!(berlekamp_welch(&f, &pts[..5], 2, 2), Err(Error::InvalidArgument(_))));
    }

    #[test]
    fn renew_examples() {
        let f = field(65521);
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let s = f.elem(99);
        let sv = share(&f, s, 18, 3, &mut rng).unwrap();
        let renewed = renew_shares(&f, &sv, 6, &mut rng).unwrap();
        assert_eq!(renewed.degree(), 6);
        assert_eq!(reconstruct(&f, &renewed, &renewed.points()).unwrap().secret, s);
        assert!(renew_shares(&f, &sv, 18, &mut rng).is_err());
        assert!(renew_shares(&f, &sv, 2, &mut rng).is_err());

        let mut all_differ = 0;
        for _ in 0..200 {
            let r = renew_shares(&f, &sv, 6, &mut rng).unwrap();
            if r.values().iter().zip(sv.values()).all(|(a, b)| a != b) {
                all_differ += 1;
            }
        }
        // Each position is unchanged with probability 1/p.
        assert!(all_differ >= 195);
    }

    #[test]
    fn linear_combine_examples() {
        let f = field(65521);
        let mut rng = ChaCha8Rng::seed_from_u64(6);
        let a = share(&f, f.elem(10), 6, 2, &mut rng).unwrap();
        let b = share(&f, f.elem(20), 6, 2, &mut rng).unwrap();
        let sum = linear_combine(&f, &[(Fe::ONE, &a), (Fe::ONE, &b)], Fe::ZERO).unwrap();
        assert_eq!(reconstruct(&f, &sum, &sum.points()).unwrap().secret, f.elem(30));
        assert_eq!(linear_combine(&f, &[(Fe::ONE, &a)], Fe::ZERO).unwrap(), a);
        for rho in [0u64, 1] {
            let rho = f.elem(rho);
            let sel = linear_combine(&f, &[(rho, &a), (f.sub(Fe::ONE, rho), &b)], Fe::ZERO).unwrap();
            let want = if rho == Fe::ONE { 10 } else { 20 };
            assert_eq!(reconstruct(&f, &sel, &sel.points()).unwrap().secret, f.elem(want));
        }
        let other = b.clone().with_quorum(3);
        assert!(linear_combine(&f, &[(Fe::ONE, &a), (Fe::ONE, &other)], Fe::ZERO).is_err());
    }

    #[test]
    fn linearity_exhaustive_small_field() {
        let f = field(7);
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        for a in 0..7 {
            for b in 0..7 {
                let sa = share(&f, f.elem(a), 6, 2, &mut rng).unwrap();
                let sb = share(&f, f.elem(b), 6, 2, &mut rng).unwrap();
                for (c1, c2, k) in [(1, 1, 0), (3, 5, 2), (6, 0, 4)] {
                    let out = linear_combine(&f, &[(f.elem(c1), &sa), (f.elem(c2), &sb)], f.elem(k)).unwrap();
                    let want = f.elem(c1 * a + c2 * b + k);
                    assert_eq!(reconstruct(&f, &out, &out.points()).unwrap().secret, want);
                }
            }
        }
    }

    #[test]
    fn code_params_decode_and_locate() {
        let f = field(65521);
        let code = CodeParams::new(f, 18, 6).unwrap();
        assert_eq!(code.e(), 5);
        let mut rng = ChaCha8Rng::seed_from_u64(8);
        let sv = share(&f, f.elem(31337), 18, 6, &mut rng).unwrap();
        for row in code.parity() {
            let s = row.iter().zip(sv.values()).fold(Fe::ZERO, |acc, (&h, &v)| f.mul_add(h, v, acc));
            assert!(s.is_zero());
        }
        let mut word = sv.values().to_vec();
        assert_eq!(code.decode(&word).unwrap().secret, f.elem(31337));
        for i in [0, 4, 9, 13, 17] {
            word[i] = f.add(word[i], f.elem(i as u64 + 1));
        }
        let dec = code.decode(&word).unwrap();
        assert_eq!(dec.secret, f.elem(31337));
        assert_eq!(dec.bad, vec![0, 4, 9, 13, 17]);

        let mut err = vec![Fe::ZERO; 18];
        for i in [2, 3, 16] {
            err[i] = f.elem(1000 + i as u64);
        }
        let syndrome: Vec<Fe> = code
            .parity()
            .iter()
            .map(|row| row.iter().zip(&err).fold(Fe::ZERO, |acc, (&h, &v)| f.mul_add(h, v, acc)))
            .collect();
        assert_eq!(code.locate_errors(&syndrome, &[]).unwrap(), vec![2, 3, 16]);
        assert_eq!(code.locate_errors(&syndrome, &[2, 16]).unwrap(), vec![2, 3, 16]);
    }

    #[test]
    fn suspect_hints_never_change_the_decoding() {
        let f = field(65521);
        let code = CodeParams::new(f, 18, 6).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(12);
        let sv = share(&f, f.elem(4242), 18, 6, &mut rng).unwrap();
        for trial in 0..300 {
            let mut word = sv.values().to_vec();
            let errors = rand::seq::index::sample(&mut rng, 18, trial % 6);
            for i in errors.iter() {
                word[i] = f.add(word[i], f.elem(rng.random_range(1..65521)));
            }
            let suspects: Vec<usize> = rand::seq::index::sample(&mut rng, 18, trial % 13).into_vec();
            assert_eq!(code.decode_avoiding(&word, &suspects).unwrap(), code.decode(&word).unwrap());
        }
        let mut word = sv.values().to_vec();
        for i in 0..6 {
            word[i] = f.add(word[i], Fe::ONE);
        }
        assert_eq!(code.decode_avoiding(&word, &[0, 1, 2]), code.decode(&word));
    }

    #[test]
    fn exhaustive_corruption_positions_n12_d4() {
        let f = field(65521);
        let code = CodeParams::new(f, 12, 4).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(10);
        let s = f.elem(12345);
        let sv = share(&f, s, 12, 4, &mut rng).unwrap();
        for mask in 0u32..(1 << 12) {
            if mask.count_ones() > 3 {
                continue;
            }
            let mut word = sv.values().to_vec();
            for (i, w) in word.iter_mut().enumerate() {
                if mask >> i & 1 == 1 {
                    *w = f.add(*w, f.elem(rng.random_range(1..65521)));
                }
            }
            let dec = code.decode(&word).unwrap();
            assert_eq!(dec.secret, s);
            assert_eq!(dec.bad.len(), mask.count_ones() as usize);
        }
    }

    proptest! {
        #[test]
        fn robust_against_any_pattern_within_radius(
            seed in any::<u64>(),
            n in 6usize..=24,
        ) {
            let f = field(65521);
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let d = n / 3;
            let e = correctable(n, d);
            let s = f.random(&mut rng);
            let sv = share(&f, s, n, d, &mut rng).unwrap();
            let k = rng.random_range(0..=e);
            let positions = rand::seq::index::sample(&mut rng, n, k).into_vec();
            let pts = corrupt(&f, &sv, &positions, &mut rng);
            let rec = reconstruct(&f, &sv, &pts).unwrap();
            prop_assert_eq!(rec.secret, s);
            let mut want: Vec<usize> = positions.iter().map(|i| i + 1).collect();
            want.sort();
            prop_assert_eq!(rec.disqualified, want);
        }

        #[test]
        fn renewal_preserves_secret(seed in any::<u64>(), sixths in 1usize..=4) {
            let f = field(65521);
            let n = 6 * sixths;
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let s = f.random(&mut rng);
            let sv = share(&f, s, n, n / 6, &mut rng).unwrap();
            let renewed = renew_shares(&f, &sv, n / 3, &mut rng).unwrap();
            prop_assert_eq!(renewed.degree(), n / 3);
            prop_assert_eq!(reconstruct(&f, &renewed, &renewed.points()).unwrap().secret, s);
        }
    }
}
