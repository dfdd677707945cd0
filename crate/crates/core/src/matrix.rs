//! Permanents and determinants of complex square matrices.
//!
//! `permanent_naive` sums over all permutations and serves as an oracle.
//! `permanent_ryser` uses Ryser's inclusion-exclusion formula with a Gray-code
//! walk over column subsets, so each step updates the row sums in O(n).

use nalgebra::DMatrix;
use num_complex::Complex64;
use rayon::prelude::*;

use crate::error::{Error, Result};

pub const NAIVE_MAX_N: usize = 10;
pub const RYSER_MAX_N: usize = 30;

/// From this size on, partial sums use compensated accumulation.
pub const KAHAN_THRESHOLD: usize = 20;

const ZERO: Complex64 = Complex64::new(0.0, 0.0);
const ONE: Complex64 = Complex64::new(1.0, 0.0);

fn check_square(m: &DMatrix<Complex64>) -> Result<usize> {
    if !m.is_square() {
        return Err(Error::Shape(format!(
            "expected a square matrix, got {}x{}",
            m.nrows(),
            m.ncols()
        )));
    }
    Ok(m.nrows())
}

pub fn permanent_naive(m: &DMatrix<Complex64>) -> Result<Complex64> {
    let n = check_square(m)?;
    if n > NAIVE_MAX_N {
        return Err(Error::SizeLimit {
            what: "naive permanent",
            n,
            max: NAIVE_MAX_N,
        });
    }
    if n == 0 {
        return Ok(ONE);
    }
    let mut perm: Vec<usize> = (0..n).collect();
    let mut total = ZERO;
    // Heap's algorithm, iterative form
    let mut c = vec![0usize; n];
    total += product_along(m, &perm);
    let mut i = 0;
    while i < n {
        if c[i] < i {
            if i % 2 == 0 {
                perm.swap(0, i);
            } else {
                perm.swap(c[i], i);
            }
            total += product_along(m, &perm);
            c[i] += 1;
            i = 0;
        } else {
            c[i] = 0;
            i += 1;
        }
    }
    Ok(total)
}

fn product_along(m: &DMatrix<Complex64>, perm: &[usize]) -> Complex64 {
    perm.iter().enumerate().fold(ONE, |acc, (row, &col)| acc * m[(row, col)])
}

/// Execution options for [`permanent_ryser_with`]. The chunk layout depends
/// only on the matrix size, so serial and parallel runs add the same partial
/// sums in the same order and agree bit for bit.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct RyserConfig {
    pub parallel: bool,
}

impl Default for RyserConfig {
    fn default() -> Self {
        Self { parallel: true }
    }
}

pub fn permanent_ryser(m: &DMatrix<Complex64>) -> Result<Complex64> {
    permanent_ryser_with(m, RyserConfig::default())
}

pub fn permanent_ryser_with(m: &DMatrix<Complex64>, config: RyserConfig) -> Result<Complex64> {
    let n = check_square(m)?;
    if n > RYSER_MAX_N {
        return Err(Error::SizeLimit {
            what: "Ryser permanent",
            n,
            max: RYSER_MAX_N,
        });
    }
    match n {
        0 => return Ok(ONE),
        1 => return Ok(m[(0, 0)]),
        2 => return Ok(m[(0, 0)] * m[(1, 1)] + m[(0, 1)] * m[(1, 0)]),
        _ => {}
    }

    // Column-major copy of the columns so that adding a column touches
    // contiguous memory.
    let cols: Vec<Vec<Complex64>> = (0..n).map(|j| m.column(j).iter().copied().collect()).collect();
    let chunk_bits = n.saturating_sub(6).min(14);
    let chunks = 1usize << (n - chunk_bits);
    let compensated = n >= KAHAN_THRESHOLD;

    let run = |c: usize| ryser_chunk(&cols, n, c << chunk_bits, 1usize << chunk_bits, compensated);
    let partials: Vec<Complex64> = if config.parallel && chunks > 1 {
        (0..chunks).into_par_iter().map(run).collect()
    } else {
        (0..chunks).map(run).collect()
    };
    let sum = tree_sum(partials);
    // Ryser: perm = (-1)^n sum_S (-1)^{|S|} prod_i rowsum_i(S)
    Ok(if n % 2 == 0 { sum } else { -sum })
}

/// Sum of `(-1)^{|S|} prod_i rowsum_i(S)` over Gray-code indices
/// `start..start + len`.
fn ryser_chunk(cols: &[Vec<Complex64>], n: usize, start: usize, len: usize, compensated: bool) -> Complex64 {
    let mut rowsum = vec![ZERO; n];
    let mut gray = start ^ (start >> 1);
    for (j, col) in cols.iter().enumerate() {
        if gray >> j & 1 == 1 {
            for (r, v) in rowsum.iter_mut().zip(col) {
                *r += v;
            }
        }
    }
    let mut acc = Accumulator::new(compensated);
    for k in start..start + len {
        if k != start {
            let bit = k.trailing_zeros() as usize;
            let col = &cols[bit];
            gray ^= 1 << bit;
            if gray >> bit & 1 == 1 {
                for (r, v) in rowsum.iter_mut().zip(col) {
                    *r += v;
                }
            } else {
                for (r, v) in rowsum.iter_mut().zip(col) {
                    *r -= v;
                }
            }
        }
        if gray == 0 {
            continue;
        }
        let prod = rowsum.iter().fold(ONE, |a, b| a * b);
        if gray.count_ones() % 2 == 1 {
            acc.add(-prod);
        } else {
            acc.add(prod);
        }
    }
    acc.value()
}

struct Accumulator {
    sum: Complex64,
    carry: Complex64,
    compensated: bool,
}

impl Accumulator {
    fn new(compensated: bool) -> Self {
        Self {
            sum: ZERO,
            carry: ZERO,
            compensated,
        }
    }

    fn add(&mut self, x: Complex64) {
        if !self.compensated {
            self.sum += x;
            return;
        }
        let (re, cre) = kahan_step(self.sum.re, self.carry.re, x.re);
        let (im, cim) = kahan_step(self.sum.im, self.carry.im, x.im);
        self.sum = Complex64::new(re, im);
        self.carry = Complex64::new(cre, cim);
    }

    fn value(&self) -> Complex64 {
        self.sum
    }
}

fn kahan_step(sum: f64, carry: f64, x: f64) -> (f64, f64) {
    let y = x - carry;
    let t = sum + y;
    (t, (t - sum) - y)
}

/// Pairwise reduction with a fixed shape.
fn tree_sum(mut v: Vec<Complex64>) -> Complex64 {
    if v.is_empty() {
        return ZERO;
    }
    while v.len() > 1 {
        v = v.chunks(2).map(|p| if p.len() == 2 { p[0] + p[1] } else { p[0] }).collect();
    }
    v[0]
}

/// Determinant by partially pivoted LU.
pub fn determinant(m: &DMatrix<Complex64>) -> Result<Complex64> {
    let n = check_square(m)?;
    if n == 0 {
        return Ok(ONE);
    }
    Ok(m.clone().lu().determinant())
}

/// Permanent through the fastest applicable path.
pub fn permanent(m: &DMatrix<Complex64>) -> Result<Complex64> {
    permanent_ryser(m)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    fn from_rows(n: usize, entries: &[Complex64]) -> DMatrix<Complex64> {
        DMatrix::from_row_slice(n, n, entries)
    }

    /// Deterministic pseudo-random matrix with entries in the unit square.
    fn lcg_matrix(n: usize, seed: u64) -> DMatrix<Complex64> {
        let mut s = seed.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
        let mut next = || {
            s = s.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
            ((s >> 11) as f64 / (1u64 << 53) as f64) * 2.0 - 1.0
        };
        DMatrix::from_fn(n, n, |_, _| c(next(), next()))
    }

    #[test]
    fn two_by_two() {
        let (a, b, cc, d) = (c(1.0, 2.0), c(-0.5, 0.3), c(0.7, -1.1), c(2.0, 0.0));
        let m = from_rows(2, &[a, b, cc, d]);
        let p = permanent_naive(&m).unwrap();
        assert!((p - (a * d + b * cc)).norm() < 1e-15);
        assert!((permanent_ryser(&m).unwrap() - p).norm() < 1e-15);
        assert!((determinant(&m).unwrap() - (a * d - b * cc)).norm() < 1e-14);
    }

    #[test]
    fn identity_and_ones() {
        for n in 1..=10 {
            assert_eq!(permanent_naive(&DMatrix::identity(n, n)).unwrap(), ONE);
        }
        assert!((permanent_ryser(&DMatrix::identity(20, 20)).unwrap() - ONE).norm() < 1e-12);
        let ones4 = DMatrix::from_element(4, 4, ONE);
        assert_eq!(permanent_naive(&ones4).unwrap(), c(24.0, 0.0));
        let ones10 = DMatrix::from_element(10, 10, ONE);
        let p = permanent_ryser(&ones10).unwrap();
        assert!((p - c(3_628_800.0, 0.0)).norm() / 3_628_800.0 < 1e-12);
    }

    #[test]
    fn size_limits() {
        let m = DMatrix::from_element(11, 11, ONE);
        assert!(matches!(permanent_naive(&m), Err(Error::SizeLimit { n: 11, .. })));
        let m = DMatrix::from_element(31, 31, ONE);
        assert!(matches!(permanent_ryser(&m), Err(Error::SizeLimit { n: 31, .. })));
        let rect = DMatrix::from_element(2, 3, ONE);
        assert!(permanent_ryser(&rect).is_err());
    }

    #[test]
    fn ryser_matches_naive_sweep() {
        for seed in 0..200u64 {
            let m = lcg_matrix(6, seed);
            let a = permanent_naive(&m).unwrap();
            let b = permanent_ryser(&m).unwrap();
            assert!((a - b).norm() <= 1e-10 * a.norm().max(1.0), "seed {seed}");
        }
    }

    #[test]
    fn singular_determinant() {
        let mut m = lcg_matrix(4, 3);
        let row = m.row(0).clone_owned();
        m.set_row(2, &row);
        assert!(determinant(&m).unwrap().norm() < 1e-12);
    }

    #[test]
    fn serial_and_parallel_are_bitwise_equal() {
        for n in [7, 12, 16] {
            let m = lcg_matrix(n, 99 + n as u64);
            let a = permanent_ryser_with(&m, RyserConfig { parallel: false }).unwrap();
            let b = permanent_ryser_with(&m, RyserConfig { parallel: true }).unwrap();
            assert_eq!(a.re.to_bits(), b.re.to_bits());
            assert_eq!(a.im.to_bits(), b.im.to_bits());
        }
    }

    #[test]
    fn kahan_path_on_identity_blocks() {
        // perm of a block-diagonal matrix is the product of block permanents
        let a = lcg_matrix(10, 5);
        let b = lcg_matrix(10, 6);
        let mut m = DMatrix::zeros(20, 20);
        m.view_mut((0, 0), (10, 10)).copy_from(&a);
        m.view_mut((10, 10), (10, 10)).copy_from(&b);
        let expected = permanent_naive(&a).unwrap() * permanent_naive(&b).unwrap();
        let got = permanent_ryser(&m).unwrap();
        assert!((got - expected).norm() <= 1e-9 * expected.norm());
    }

    fn unit_disk_matrix(n: usize) -> impl Strategy<Value = DMatrix<Complex64>> {
        proptest::collection::vec((0.0..1.0f64, 0.0..std::f64::consts::TAU), n * n)
            .prop_map(move |v| DMatrix::from_iterator(n, n, v.into_iter().map(|(r, t)| Complex64::from_polar(r, t))))
    }

    proptest! {
        #[test]
        fn ryser_equals_naive(m in (1usize..=8).prop_flat_map(unit_disk_matrix)) {
            let a = permanent_naive(&m).unwrap();
            let b = permanent_ryser(&m).unwrap();
            prop_assert!((a - b).norm() <= 1e-10 * a.norm().max(1.0));
        }

        #[test]
        fn row_swap_behaviour(m in (2usize..=6).prop_flat_map(unit_disk_matrix), i in 0usize..6, j in 0usize..6) {
            let n = m.nrows();
            let (i, j) = (i % n, j % n);
            prop_assume!(i != j);
            let mut s = m.clone();
            s.swap_rows(i, j);
            let p = permanent_ryser(&m).unwrap();
            prop_assert!((permanent_ryser(&s).unwrap() - p).norm() <= 1e-12 * p.norm().max(1.0));
            let d = determinant(&m).unwrap();
            prop_assert!((determinant(&s).unwrap() + d).norm() <= 1e-12 * d.norm().max(1.0));
        }

        #[test]
        fn zero_row_gives_zero(m in (1usize..=7).prop_flat_map(unit_disk_matrix), r in 0usize..7) {
            let mut m = m;
            let r = r % m.nrows();
            m.row_mut(r).fill(ZERO);
            prop_assert_eq!(permanent_ryser(&m).unwrap().norm(), 0.0);
        }

        #[test]
        fn determinant_is_multiplicative(a in unit_disk_matrix(5), b in unit_disk_matrix(5)) {
            let lhs = determinant(&(&a * &b)).unwrap();
            let rhs = determinant(&a).unwrap() * determinant(&b).unwrap();
            prop_assert!((lhs - rhs).norm() <= 1e-10 * rhs.norm().max(1.0));
        }
    }
}
