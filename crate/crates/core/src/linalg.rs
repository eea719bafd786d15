//! Small dense exact linear algebra over `BigInt` and `BigRational`.

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Signed, Zero};

pub type Int = BigInt;
pub type Rational = BigRational;

/// Dense row-major integer matrix.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct IntMatrix {
    rows: usize,
    cols: usize,
    data: Vec<Int>,
}

impl IntMatrix {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        IntMatrix {
            rows,
            cols,
            data: vec![Int::zero(); rows * cols],
        }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = IntMatrix::zeros(n, n);
        for i in 0..n {
            m.set(i, i, Int::one());
        }
        m
    }

    pub fn from_rows(rows: &[Vec<i64>]) -> Self {
        let r = rows.len();
        let c = rows.first().map_or(0, |x| x.len());
        let mut m = IntMatrix::zeros(r, c);
        for (i, row) in rows.iter().enumerate() {
            assert_eq!(row.len(), c, "ragged matrix");
            for (j, x) in row.iter().enumerate() {
                m.set(i, j, Int::from(*x));
            }
        }
        m
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn get(&self, i: usize, j: usize) -> &Int {
        &self.data[i * self.cols + j]
    }

    pub fn set(&mut self, i: usize, j: usize, x: Int) {
        self.data[i * self.cols + j] = x;
    }

    pub fn transpose(&self) -> IntMatrix {
        let mut t = IntMatrix::zeros(self.cols, self.rows);
        for i in 0..self.rows {
            for j in 0..self.cols {
                t.set(j, i, self.get(i, j).clone());
            }
        }
        t
    }

    pub fn mul(&self, other: &IntMatrix) -> IntMatrix {
        assert_eq!(self.cols, other.rows);
        let mut out = IntMatrix::zeros(self.rows, other.cols);
        for i in 0..self.rows {
            for k in 0..self.cols {
                let a = self.get(i, k);
                if a.is_zero() {
                    continue;
                }
                for j in 0..other.cols {
                    let idx = i * out.cols + j;
                    out.data[idx] += a * other.get(k, j);
                }
            }
        }
        out
    }

    pub fn mul_vec(&self, v: &[Int]) -> Vec<Int> {
        assert_eq!(self.cols, v.len());
        (0..self.rows)
            .map(|i| (0..self.cols).map(|j| self.get(i, j) * &v[j]).sum())
            .collect()
    }

    pub fn neg(&self) -> IntMatrix {
        IntMatrix {
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().map(|x| -x).collect(),
        }
    }

    pub fn to_rows(&self) -> Vec<Vec<Int>> {
        (0..self.rows)
            .map(|i| self.data[i * self.cols..(i + 1) * self.cols].to_vec())
            .collect()
    }

    /// Leading principal minors `d_1, …, d_n` by fraction-free (Bareiss)
    /// elimination without pivoting. Stops at the first zero minor.
    pub fn leading_minors(&self) -> Vec<Int> {
        assert_eq!(self.rows, self.cols);
        let n = self.rows;
        let mut a = self.to_rows();
        let mut prev = Int::one();
        let mut minors = Vec::with_capacity(n);
        for k in 0..n {
            let pivot = a[k][k].clone();
            minors.push(pivot.clone());
            if pivot.is_zero() {
                break;
            }
            for i in k + 1..n {
                for j in k + 1..n {
                    let val = (&pivot * &a[i][j] - &a[i][k] * &a[k][j]) / &prev;
                    a[i][j] = val;
                }
                a[i][k] = Int::zero();
            }
            prev = pivot;
        }
        minors
    }

    /// Determinant by Bareiss elimination with row pivoting.
    pub fn determinant(&self) -> Int {
        assert_eq!(self.rows, self.cols);
        let n = self.rows;
        if n == 0 {
            return Int::one();
        }
        let mut a = self.to_rows();
        let mut sign = Int::one();
        let mut prev = Int::one();
        for k in 0..n {
            if a[k][k].is_zero() {
                match (k + 1..n).find(|&i| !a[i][k].is_zero()) {
                    Some(i) => {
                        a.swap(i, k);
                        sign = -sign;
                    }
                    None => return Int::zero(),
                }
            }
            for i in k + 1..n {
                for j in k + 1..n {
                    a[i][j] = (&a[k][k] * &a[i][j] - &a[i][k] * &a[k][j]) / &prev;
                }
                a[i][k] = Int::zero();
            }
            prev = a[k][k].clone();
        }
        sign * &a[n - 1][n - 1]
    }

    pub fn is_symmetric(&self) -> bool {
        self.rows == self.cols
            && (0..self.rows).all(|i| (0..i).all(|j| self.get(i, j) == self.get(j, i)))
    }
}

pub fn rat(x: &Int) -> Rational {
    Rational::from_integer(x.clone())
}

pub fn is_integral(x: &Rational) -> bool {
    x.is_integer()
}

/// Solves `M x = b` exactly, where `M` has `columns.len()` columns given as
/// vectors of length `b.len()`. Returns `None` if the system is inconsistent
/// or its solution is not unique.
pub fn solve_columns(columns: &[Vec<Rational>], b: &[Rational]) -> Option<Vec<Rational>> {
    let n = columns.len();
    let m = b.len();
    assert!(columns.iter().all(|c| c.len() == m));
    // augmented matrix, rows = equations
    let mut a: Vec<Vec<Rational>> = (0..m)
        .map(|i| {
            let mut row: Vec<Rational> = columns.iter().map(|c| c[i].clone()).collect();
            row.push(b[i].clone());
            row
        })
        .collect();
    let mut pivot_row = 0;
    let mut pivots = Vec::with_capacity(n);
    for col in 0..n {
        let r = (pivot_row..m).find(|&r| !a[r][col].is_zero())?;
        a.swap(r, pivot_row);
        let inv = a[pivot_row][col].recip();
        for x in a[pivot_row].iter_mut() {
            *x *= &inv;
        }
        for i in 0..m {
            if i != pivot_row && !a[i][col].is_zero() {
                let f = a[i][col].clone();
                let pivot = a[pivot_row][col..=n].to_vec();
                for (x, y) in a[i][col..=n].iter_mut().zip(&pivot) {
                    *x -= &f * y;
                }
            }
        }
        pivots.push(pivot_row);
        pivot_row += 1;
    }
    // leftover equations must read 0 = 0
    if a[pivot_row..].iter().any(|row| !row[n].is_zero()) {
        return None;
    }
    Some(pivots.iter().map(|&r| a[r][n].clone()).collect())
}

/// Exact solve of a square system given by rows.
pub fn solve_square(rows: &[Vec<Rational>], b: &[Rational]) -> Option<Vec<Rational>> {
    let n = rows.len();
    let columns: Vec<Vec<Rational>> = (0..n).map(|j| rows.iter().map(|r| r[j].clone()).collect()).collect();
    solve_columns(&columns, b)
}

pub fn format_rational(x: &Rational) -> String {
    if x.is_integer() {
        x.numer().to_string()
    } else {
        format!("{}/{}", x.numer(), x.denom())
    }
}

pub fn all_nonnegative(v: &[Int]) -> bool {
    v.iter().all(|x| !x.is_negative())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn r(n: i64, d: i64) -> Rational {
        Rational::new(Int::from(n), Int::from(d))
    }

    #[test]
    fn bareiss_matches_cofactor_expansion() {
        let m = IntMatrix::from_rows(&[vec![2, -1, 0], vec![-1, 2, -1], vec![0, -1, 2]]);
        assert_eq!(m.determinant(), Int::from(4));
        assert_eq!(m.leading_minors(), vec![Int::from(2), Int::from(3), Int::from(4)]);
        let p = IntMatrix::from_rows(&[vec![0, 1], vec![1, 0]]);
        assert_eq!(p.determinant(), Int::from(-1));
    }

    #[test]
    fn overdetermined_consistent_and_inconsistent() {
        let cols = vec![
            vec![r(2, 1), r(2, 1), r(2, 1)],
            vec![r(2, 1), r(4, 1), r(2, 1)],
        ];
        let sol = solve_columns(&cols, &[r(4, 1), r(6, 1), r(4, 1)]).unwrap();
        assert_eq!(sol, vec![r(1, 1), r(1, 1)]);
        assert!(solve_columns(&cols, &[r(4, 1), r(6, 1), r(5, 1)]).is_none());
    }

    #[test]
    fn two_by_two_rational_solution() {
        let cols = vec![vec![r(2, 1), r(3, 1)], vec![r(3, 1), r(6, 1)]];
        let sol = solve_columns(&cols, &[r(1, 1), r(2, 1)]).unwrap();
        assert_eq!(sol, vec![r(0, 1), r(1, 3)]);
        assert_eq!(format_rational(&sol[1]), "1/3");
    }
}
