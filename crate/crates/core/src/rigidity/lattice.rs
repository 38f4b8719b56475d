//! Integer lattices: Hermite normal form, index, kernels of integer maps.

/// Row-style echelon form over `Z` of the first `pivot_cols` columns.
///
/// Rows may be longer than `pivot_cols`; the extra columns ride along with
/// the row operations (used to track the unimodular transform).
fn echelon(rows: &mut Vec<Vec<i128>>, pivot_cols: usize) -> usize {
    let mut r = 0;
    for col in 0..pivot_cols {
        if r >= rows.len() {
            break;
        }
        loop {
            // smallest nonzero |entry| at or below r becomes the pivot
            let pick = (r..rows.len())
                .filter(|&i| rows[i][col] != 0)
                .min_by_key(|&i| rows[i][col].unsigned_abs());
            let Some(p) = pick else { break };
            rows.swap(r, p);
            let mut done = true;
            for i in r + 1..rows.len() {
                let q = rows[i][col].div_euclid(rows[r][col]);
                if q != 0 {
                    let (head, tail) = rows.split_at_mut(i);
                    for (x, y) in tail[0].iter_mut().zip(&head[r]) {
                        *x -= q * y;
                    }
                }
                if rows[i][col] != 0 {
                    done = false;
                }
            }
            if done {
                break;
            }
        }
        if rows[r][col] != 0 {
            if rows[r][col] < 0 {
                rows[r].iter_mut().for_each(|x| *x = -*x);
            }
            for i in 0..r {
                let q = rows[i][col].div_euclid(rows[r][col]);
                if q != 0 {
                    let pivot = rows[r].clone();
                    for (x, y) in rows[i].iter_mut().zip(&pivot) {
                        *x -= q * y;
                    }
                }
            }
            r += 1;
        }
    }
    r
}

/// A subgroup of `Z^n` stored by a Hermite basis.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Lattice {
    dim: usize,
    basis: Vec<Vec<i128>>,
}

impl Lattice {
    pub fn from_generators(dim: usize, gens: &[Vec<i64>]) -> Lattice {
        let mut rows: Vec<Vec<i128>> = gens
            .iter()
            .map(|g| {
                assert_eq!(g.len(), dim, "generator of wrong length");
                g.iter().map(|&x| x as i128).collect()
            })
            .collect();
        let rank = echelon(&mut rows, dim);
        rows.truncate(rank);
        Lattice { dim, basis: rows }
    }

    pub fn full(dim: usize) -> Lattice {
        let gens: Vec<Vec<i64>> = (0..dim)
            .map(|i| (0..dim).map(|j| i64::from(i == j)).collect())
            .collect();
        Lattice::from_generators(dim, &gens)
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn rank(&self) -> usize {
        self.basis.len()
    }

    pub fn basis(&self) -> Vec<Vec<i64>> {
        self.basis
            .iter()
            .map(|r| r.iter().map(|&x| x as i64).collect())
            .collect()
    }

    /// `[Z^n : L]`, or `None` when `L` has lower rank.
    pub fn index(&self) -> Option<u128> {
        if self.rank() < self.dim {
            return None;
        }
        // Echelon basis of full rank is upper triangular.
        Some(
            self.basis
                .iter()
                .enumerate()
                .map(|(i, r)| r[i].unsigned_abs())
                .product(),
        )
    }

    pub fn contains(&self, v: &[i64]) -> bool {
        let mut gens = self.basis();
        gens.push(v.to_vec());
        Lattice::from_generators(self.dim, &gens) == *self
    }
}

/// Basis of `{ v in Z^n : M v = 0 }` for an integer matrix with `n` columns.
pub fn integer_kernel(matrix: &[Vec<i64>], n: usize) -> Vec<Vec<i64>> {
    let m = matrix.len();
    // Rows of [M^T | I_n]; echelonizing the M^T block leaves the kernel in
    // the identity block of the zero rows.
    let mut rows: Vec<Vec<i128>> = (0..n)
        .map(|j| {
            let mut row: Vec<i128> = matrix.iter().map(|r| r[j] as i128).collect();
            row.extend((0..n).map(|k| i128::from(k == j)));
            row
        })
        .collect();
    let rank = echelon(&mut rows, m);
    rows[rank..]
        .iter()
        .map(|r| r[m..].iter().map(|&x| x as i64).collect())
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn index_of_simple_lattices() {
        assert_eq!(Lattice::full(4).index(), Some(1));
        let l = Lattice::from_generators(2, &[vec![2, 0], vec![0, 3], vec![4, 3]]);
        assert_eq!(l.index(), Some(6));
        let l = Lattice::from_generators(2, &[vec![2, 4], vec![1, 2]]);
        assert_eq!(l.index(), None);
        assert_eq!(l.rank(), 1);
        let l = Lattice::from_generators(2, &[vec![3, 5], vec![2, 3]]);
        assert_eq!(l.index(), Some(1));
        assert!(l.contains(&[7, -9]));
        let l = Lattice::from_generators(2, &[vec![2, 0], vec![0, 2]]);
        assert!(!l.contains(&[1, 0]));
        assert!(l.contains(&[4, -2]));
    }

    #[test]
    fn kernel_of_a_row() {
        let k = integer_kernel(&[vec![1, 0, 0, 0]], 4);
        assert_eq!(k.len(), 3);
        let l = Lattice::from_generators(4, &k);
        assert!(l.contains(&[0, 1, 0, 0]) && l.contains(&[0, 5, -2, 3]));
        assert!(!l.contains(&[1, 0, 0, 0]));
        let k = integer_kernel(&[vec![2, 3]], 2);
        assert_eq!(k.len(), 1);
        assert_eq!(2 * k[0][0] + 3 * k[0][1], 0);
        assert_eq!(k[0][0].abs(), 3);
    }
}
