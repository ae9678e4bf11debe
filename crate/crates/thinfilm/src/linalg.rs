//! Cyclic pentadiagonal linear systems.
//!
//! A periodic five-point Jacobian has nonzeros at `(i, i+d mod n)` for
//! `d in -2..=2`. We split it as `A = B + U W` where `B` is the ordinary
//! (non-wrapping) band and the wrap-around corners live in rows
//! `0, 1, n-2, n-1`. `B` is factored by banded LU with partial pivoting and
//! the rank-4 corner correction is applied through the Woodbury identity.

use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum LinalgError {
    #[error("matrix too small for a cyclic five-point band: n = {0}")]
    TooSmall(usize),
    #[error("singular band factor at row {0}")]
    SingularBand(usize),
    #[error("singular corner capacitance matrix")]
    SingularCapacitance,
}

/// Cyclic matrix stored by diagonals: `band[d + 2][i]` is entry
/// `(i, (i + d) mod n)`.
#[derive(Debug, Clone, PartialEq)]
pub struct CyclicPentadiagonal {
    n: usize,
    band: [Vec<f64>; 5],
}

impl CyclicPentadiagonal {
    pub fn zeros(n: usize) -> Result<Self, LinalgError> {
        if n < 5 {
            return Err(LinalgError::TooSmall(n));
        }
        Ok(CyclicPentadiagonal { n, band: std::array::from_fn(|_| vec![0.0; n]) })
    }

    pub fn size(&self) -> usize {
        self.n
    }

    /// Entry `(row, (row + offset) mod n)`.
    #[inline]
    pub fn get(&self, row: usize, offset: isize) -> f64 {
        self.band[(offset + 2) as usize][row]
    }

    #[inline]
    pub fn set(&mut self, row: usize, offset: isize, value: f64) {
        self.band[(offset + 2) as usize][row] = value;
    }

    #[inline]
    pub fn add(&mut self, row: usize, offset: isize, value: f64) {
        self.band[(offset + 2) as usize][row] += value;
    }

    /// Dense copy, for tests and diagnostics.
    pub fn to_dense(&self) -> Vec<Vec<f64>> {
        let n = self.n;
        let mut out = vec![vec![0.0; n]; n];
        for (i, row) in out.iter_mut().enumerate() {
            for d in -2isize..=2 {
                let j = (i as isize + d).rem_euclid(n as isize) as usize;
                row[j] += self.get(i, d);
            }
        }
        out
    }

    pub fn mul_vec(&self, x: &[f64]) -> Vec<f64> {
        let n = self.n;
        (0..n)
            .map(|i| {
                (-2isize..=2)
                    .map(|d| self.get(i, d) * x[(i as isize + d).rem_euclid(n as isize) as usize])
                    .sum()
            })
            .collect()
    }

    /// Column sums; used to check the conservative structure of Jacobians.
    pub fn column_sums(&self) -> Vec<f64> {
        let n = self.n;
        let mut sums = vec![0.0; n];
        for i in 0..n {
            for d in -2isize..=2 {
                let j = (i as isize + d).rem_euclid(n as isize) as usize;
                sums[j] += self.get(i, d);
            }
        }
        sums
    }

    pub fn factor(&self) -> Result<CyclicFactor, LinalgError> {
        CyclicFactor::new(self)
    }

    pub fn solve(&self, rhs: &[f64]) -> Result<Vec<f64>, LinalgError> {
        Ok(self.factor()?.solve(rhs))
    }
}

/// Banded LU with partial pivoting for two sub- and two super-diagonals.
/// After pivoting the upper factor gains two extra superdiagonals, so each
/// row keeps the window `i..=i+4`.
#[derive(Debug, Clone)]
struct BandLu {
    n: usize,
    upper: Vec<[f64; 5]>,
    lower: Vec<[f64; 2]>,
    pivot: Vec<usize>,
}

impl BandLu {
    fn new(a: &CyclicPentadiagonal) -> Result<Self, LinalgError> {
        let n = a.n;
        // work[i][k] holds column i - 2 + k of row i, k in 0..7
        let mut work = vec![[0.0f64; 7]; n];
        for (i, row) in work.iter_mut().enumerate() {
            for d in -2isize..=2 {
                let j = i as isize + d;
                if j >= 0 && (j as usize) < n {
                    row[(d + 2) as usize] = a.get(i, d);
                }
            }
        }
        let at = |i: usize, col: usize| -> usize { col + 2 - i };
        let mut lower = vec![[0.0; 2]; n];
        let mut pivot = vec![0; n];
        for i in 0..n {
            let last = (i + 2).min(n - 1);
            let mut p = i;
            let mut best = work[i][at(i, i)].abs();
            for r in i + 1..=last {
                let v = work[r][at(r, i)].abs();
                if v > best {
                    best = v;
                    p = r;
                }
            }
            if best == 0.0 || !best.is_finite() {
                return Err(LinalgError::SingularBand(i));
            }
            pivot[i] = p;
            let hi = (i + 4).min(n - 1);
            if p != i {
                for col in i..=hi {
                    let (ci, cp) = (at(i, col), at(p, col));
                    let vi = if ci < 7 { work[i][ci] } else { 0.0 };
                    let vp = if cp < 7 { work[p][cp] } else { 0.0 };
                    if ci < 7 {
                        work[i][ci] = vp;
                    }
                    if cp < 7 {
                        work[p][cp] = vi;
                    } else {
                        debug_assert_eq!(vi, 0.0);
                    }
                }
            }
            let diag = work[i][at(i, i)];
            for (k, r) in (i + 1..=last).enumerate() {
                let factor = work[r][at(r, i)] / diag;
                lower[i][k] = factor;
                if factor != 0.0 {
                    for col in i + 1..=hi {
                        let cr = at(r, col);
                        if cr < 7 {
                            let v = work[i][at(i, col)];
                            work[r][cr] -= factor * v;
                        }
                    }
                }
                work[r][at(r, i)] = 0.0;
            }
        }
        let upper = work
            .iter()
            .enumerate()
            .map(|(i, row)| {
                let mut u = [0.0; 5];
                for (k, slot) in u.iter_mut().enumerate() {
                    if i + k < n {
                        *slot = row[at(i, i + k)];
                    }
                }
                u
            })
            .collect();
        Ok(BandLu { n, upper, lower, pivot })
    }

    fn solve_in_place(&self, x: &mut [f64]) {
        let n = self.n;
        for i in 0..n {
            let p = self.pivot[i];
            if p != i {
                x.swap(i, p);
            }
            let xi = x[i];
            for k in 0..2 {
                if i + 1 + k < n {
                    x[i + 1 + k] -= self.lower[i][k] * xi;
                }
            }
        }
        for i in (0..n).rev() {
            let u = &self.upper[i];
            let mut acc = x[i];
            for k in 1..5 {
                if i + k < n {
                    acc -= u[k] * x[i + k];
                }
            }
            x[i] = acc / u[0];
        }
    }
}

/// Factorization of a [`CyclicPentadiagonal`] matrix, reusable across
/// right-hand sides.
#[derive(Debug, Clone)]
pub struct CyclicFactor {
    lu: BandLu,
    // W: corner entries, as (column, value) lists per corner row
    corners: [Vec<(usize, f64)>; 4],
    // Z = B^-1 U, stored column-major
    z: [Vec<f64>; 4],
    capacitance_lu: [[f64; 4]; 4],
    capacitance_piv: [usize; 4],
}

impl CyclicFactor {
    fn new(a: &CyclicPentadiagonal) -> Result<Self, LinalgError> {
        let n = a.n;
        let lu = BandLu::new(a)?;
        let corner_rows = [0, 1, n - 2, n - 1];
        let corners = [
            vec![(n - 2, a.get(0, -2)), (n - 1, a.get(0, -1))],
            vec![(n - 1, a.get(1, -2))],
            vec![(0, a.get(n - 2, 2))],
            vec![(0, a.get(n - 1, 1)), (1, a.get(n - 1, 2))],
        ];
        let z: [Vec<f64>; 4] = std::array::from_fn(|k| {
            let mut e = vec![0.0; n];
            e[corner_rows[k]] = 1.0;
            lu.solve_in_place(&mut e);
            e
        });
        // C = I + W Z
        let mut cap = [[0.0; 4]; 4];
        for (r, row) in cap.iter_mut().enumerate() {
            for (c, entry) in row.iter_mut().enumerate() {
                let wz: f64 = corners[r].iter().map(|&(j, w)| w * z[c][j]).sum();
                *entry = if r == c { 1.0 } else { 0.0 } + wz;
            }
        }
        let (capacitance_lu, capacitance_piv) = lu4(cap)?;
        Ok(CyclicFactor { lu, corners, z, capacitance_lu, capacitance_piv })
    }

    pub fn solve(&self, rhs: &[f64]) -> Vec<f64> {
        let mut y = rhs.to_vec();
        self.lu.solve_in_place(&mut y);
        let mut wy = [0.0; 4];
        for (k, slot) in wy.iter_mut().enumerate() {
            *slot = self.corners[k].iter().map(|&(j, w)| w * y[j]).sum();
        }
        let t = solve4(&self.capacitance_lu, &self.capacitance_piv, wy);
        for (k, zk) in self.z.iter().enumerate() {
            if t[k] != 0.0 {
                for (yi, zi) in y.iter_mut().zip(zk) {
                    *yi -= zi * t[k];
                }
            }
        }
        y
    }
}

fn lu4(mut a: [[f64; 4]; 4]) -> Result<([[f64; 4]; 4], [usize; 4]), LinalgError> {
    let mut piv = [0usize; 4];
    for k in 0..4 {
        let p = (k..4)
            .max_by(|&i, &j| a[i][k].abs().total_cmp(&a[j][k].abs()))
            .expect("non-empty range");
        if a[p][k] == 0.0 || !a[p][k].is_finite() {
            return Err(LinalgError::SingularCapacitance);
        }
        piv[k] = p;
        a.swap(k, p);
        for i in k + 1..4 {
            a[i][k] /= a[k][k];
            for j in k + 1..4 {
                a[i][j] -= a[i][k] * a[k][j];
            }
        }
    }
    Ok((a, piv))
}

fn solve4(lu: &[[f64; 4]; 4], piv: &[usize; 4], mut b: [f64; 4]) -> [f64; 4] {
    // rows of `lu` were swapped whole, so apply every interchange first
    for (k, &p) in piv.iter().enumerate() {
        b.swap(k, p);
    }
    for k in 0..4 {
        for i in k + 1..4 {
            b[i] -= lu[i][k] * b[k];
        }
    }
    for k in (0..4).rev() {
        for j in k + 1..4 {
            b[k] -= lu[k][j] * b[j];
        }
        b[k] /= lu[k][k];
    }
    b
}

#[cfg(test)]
mod tests {
    use super::*;

    fn fourth_difference(n: usize, c: f64) -> CyclicPentadiagonal {
        let mut a = CyclicPentadiagonal::zeros(n).unwrap();
        for i in 0..n {
            for (d, w) in [(-2, 1.0), (-1, -4.0), (0, 6.0), (1, -4.0), (2, 1.0)] {
                a.set(i, d, c * w);
            }
            a.add(i, 0, 1.0);
        }
        a
    }

    #[test]
    fn identity_plus_biharmonic() {
        let n = 16;
        let a = fourth_difference(n, 250.0);
        let x: Vec<f64> = (0..n).map(|i| (i as f64 * 0.7).sin() + 2.0).collect();
        let b = a.mul_vec(&x);
        let got = a.solve(&b).unwrap();
        for (g, e) in got.iter().zip(&x) {
            assert!((g - e).abs() < 1e-10, "{g} vs {e}");
        }
    }

    #[test]
    fn conservative_columns() {
        // a periodic difference operator plus identity has unit column sums
        let a = fourth_difference(12, 3.0);
        for s in a.column_sums() {
            assert!((s - 1.0).abs() < 1e-14);
        }
    }

    #[test]
    fn pivoting_needed() {
        // zero on the first diagonal entry forces a row swap
        let n = 8;
        let mut a = fourth_difference(n, 1.0);
        a.set(0, 0, 0.0);
        a.set(0, 1, 3.0);
        let x: Vec<f64> = (0..n).map(|i| i as f64 - 3.5).collect();
        let got = a.solve(&a.mul_vec(&x)).unwrap();
        for (g, e) in got.iter().zip(&x) {
            assert!((g - e).abs() < 1e-11);
        }
    }

    #[test]
    fn too_small() {
        assert!(CyclicPentadiagonal::zeros(4).is_err());
    }
}
