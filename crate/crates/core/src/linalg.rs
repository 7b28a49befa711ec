//! Gaussian elimination over `F_p`.

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct AffineSolution {
    pub particular: Vec<u32>,
    /// Basis of the kernel.
    pub kernel: Vec<Vec<u32>>,
}

fn inv_mod(a: u32, p: u32) -> u32 {
    let mut r = 1u64;
    let mut b = a as u64 % p as u64;
    let mut e = p - 2;
    while e > 0 {
        if e & 1 == 1 {
            r = r * b % p as u64;
        }
        b = b * b % p as u64;
        e >>= 1;
    }
    r as u32
}

/// Solves `mat * x = rhs` over `F_p`. `mat` is rows x cols and is consumed
/// as scratch space. Returns `None` when inconsistent.
pub fn solve_affine(mat: &mut [Vec<u32>], rhs: &[u32], p: u32) -> Option<AffineSolution> {
    let rows = mat.len();
    let cols = if rows == 0 { 0 } else { mat[0].len() };
    let mut b: Vec<u32> = rhs.iter().map(|&c| c % p).collect();
    let mut pivots = Vec::new();
    let mut r = 0;
    for c in 0..cols {
        let Some(piv) = (r..rows).find(|&i| !mat[i][c].is_multiple_of(p)) else { continue };
        mat.swap(r, piv);
        b.swap(r, piv);
        let inv = inv_mod(mat[r][c], p) as u64;
        for j in 0..cols {
            mat[r][j] = (mat[r][j] as u64 * inv % p as u64) as u32;
        }
        b[r] = (b[r] as u64 * inv % p as u64) as u32;
        for i in 0..rows {
            if i != r && mat[i][c] != 0 {
                let f = mat[i][c] as u64;
                for j in 0..cols {
                    let s = (f * mat[r][j] as u64 % p as u64) as u32;
                    mat[i][j] = (mat[i][j] + p - s) % p;
                }
                let s = (f * b[r] as u64 % p as u64) as u32;
                b[i] = (b[i] + p - s) % p;
            }
        }
        pivots.push(c);
        r += 1;
        if r == rows {
            break;
        }
    }
    if b[r..].iter().any(|&x| x != 0) {
        return None;
    }
    let mut particular = vec![0u32; cols];
    for (i, &c) in pivots.iter().enumerate() {
        particular[c] = b[i];
    }
    let free: Vec<usize> = (0..cols).filter(|c| !pivots.contains(c)).collect();
    let kernel = free
        .iter()
        .map(|&f| {
            let mut v = vec![0u32; cols];
            v[f] = 1;
            for (i, &c) in pivots.iter().enumerate() {
                v[c] = (p - mat[i][f] % p) % p;
            }
            v
        })
        .collect();
    Some(AffineSolution { particular, kernel })
}

/// Rank of a matrix over `F_p`.
pub fn rank(mat: &[Vec<u32>], p: u32) -> usize {
    if mat.is_empty() {
        return 0;
    }
    let mut m = mat.to_vec();
    let rhs = vec![0; m.len()];
    let cols = m[0].len();
    let sol = solve_affine(&mut m, &rhs, p).expect("homogeneous system");
    cols - sol.kernel.len()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn solves_small_system() {
        let mut m = vec![vec![1, 1, 0], vec![0, 1, 1]];
        let s = solve_affine(&mut m, &[1, 2], 3).unwrap();
        assert_eq!(s.kernel.len(), 1);
        let x = &s.particular;
        assert_eq!((x[0] + x[1]) % 3, 1);
        assert_eq!((x[1] + x[2]) % 3, 2);
        let k = &s.kernel[0];
        assert_eq!((k[0] + k[1]) % 3, 0);
        assert_eq!((k[1] + k[2]) % 3, 0);
    }

    #[test]
    fn detects_inconsistency() {
        let mut m = vec![vec![1, 1], vec![1, 1]];
        assert!(solve_affine(&mut m, &[0, 1], 2).is_none());
    }

    #[test]
    fn rank_of_identity() {
        assert_eq!(rank(&[vec![1, 0], vec![0, 1], vec![1, 1]], 2), 2);
    }
}
