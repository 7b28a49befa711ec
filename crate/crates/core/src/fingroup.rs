//! Small finite groups given by a multiplication table, their conjugacy
//! classes, and exact character tables from the class-algebra eigenvectors
//! computed modulo a prime that splits the exponent.

use std::collections::HashMap;
use std::hash::Hash;

use num_bigint::BigInt;
use num_rational::BigRational;

use crate::cyclo::{CycloAcc, CycloNum};
use crate::error::{Error, Result};

#[derive(Clone, Debug)]
pub struct FiniteGroup {
    n: usize,
    table: Vec<u32>,
    inv: Vec<u32>,
    id: usize,
}

#[derive(Clone, Debug)]
pub struct Classes {
    pub class_of: Vec<usize>,
    pub reps: Vec<usize>,
    pub sizes: Vec<usize>,
}

/// Irreducible characters, each a row of values on the classes, in `Q(zeta_N)`.
#[derive(Clone, Debug)]
pub struct CharacterTable {
    pub classes: Classes,
    pub order: u64,
    pub rows: Vec<Vec<CycloNum>>,
}

impl FiniteGroup {
    /// Builds the table from an explicit element list closed under `mul`.
    pub fn from_elements<T: Clone + Eq + Hash>(elems: &[T], mul: impl Fn(&T, &T) -> T) -> Result<FiniteGroup> {
        let n = elems.len();
        let index: HashMap<&T, usize> = elems.iter().enumerate().map(|(i, x)| (x, i)).collect();
        if index.len() != n {
            return Err(Error::Validation("repeated group elements".into()));
        }
        let mut table = vec![0u32; n * n];
        for (i, a) in elems.iter().enumerate() {
            for (j, b) in elems.iter().enumerate() {
                let c = mul(a, b);
                let k = *index.get(&c).ok_or_else(|| Error::Validation("element list is not closed".into()))?;
                table[i * n + j] = k as u32;
            }
        }
        let id = (0..n)
            .find(|&e| (0..n).all(|x| table[e * n + x] as usize == x))
            .ok_or_else(|| Error::Validation("no identity".into()))?;
        let mut inv = vec![0u32; n];
        for a in 0..n {
            inv[a] = (0..n)
                .find(|&b| table[a * n + b] as usize == id)
                .ok_or_else(|| Error::Validation("element without inverse".into()))? as u32;
        }
        Ok(FiniteGroup { n, table, inv, id })
    }

    pub fn order(&self) -> usize {
        self.n
    }

    pub fn identity(&self) -> usize {
        self.id
    }

    pub fn mul(&self, a: usize, b: usize) -> usize {
        self.table[a * self.n + b] as usize
    }

    pub fn inv(&self, a: usize) -> usize {
        self.inv[a] as usize
    }

    pub fn pow(&self, a: usize, k: u64) -> usize {
        let mut r = self.id;
        for _ in 0..k {
            r = self.mul(r, a);
        }
        r
    }

    pub fn element_order(&self, a: usize) -> u64 {
        let mut x = a;
        let mut k = 1;
        while x != self.id {
            x = self.mul(x, a);
            k += 1;
        }
        k
    }

    pub fn exponent(&self) -> u64 {
        (0..self.n).map(|a| self.element_order(a)).fold(1, num_integer::lcm)
    }

    pub fn classes(&self) -> Classes {
        let mut class_of = vec![usize::MAX; self.n];
        let mut reps = Vec::new();
        let mut sizes = Vec::new();
        for x in 0..self.n {
            if class_of[x] != usize::MAX {
                continue;
            }
            let c = reps.len();
            let mut size = 0;
            for g in 0..self.n {
                let y = self.mul(self.mul(g, x), self.inv(g));
                if class_of[y] == usize::MAX {
                    class_of[y] = c;
                    size += 1;
                }
            }
            reps.push(x);
            sizes.push(size);
        }
        Classes { class_of, reps, sizes }
    }

    /// `Ind_H^G f` at every element, for `f` given on the members of `H`.
    pub fn induce(&self, members: &[bool], f: &[CycloNum]) -> Result<Vec<CycloNum>> {
        let h = members.iter().filter(|&&b| b).count();
        let n = f.first().map(|v| v.order()).ok_or_else(|| Error::Validation("empty class function".into()))?;
        let scale = BigRational::new(1.into(), BigInt::from(h));
        Ok((0..self.n)
            .map(|g| {
                let mut acc = CycloNum::zero(n);
                for y in 0..self.n {
                    let c = self.mul(self.mul(y, g), self.inv(y));
                    if members[c] {
                        acc = acc.add(&f[c]);
                    }
                }
                acc.scale(&scale)
            })
            .collect())
    }

    /// Irreducible characters of the group.
    pub fn character_table(&self) -> Result<CharacterTable> {
        let cl = self.classes();
        let r = cl.reps.len();
        let e = self.exponent();
        let n = self.n as u64;
        let p = split_prime(e, 2 * n + 1);
        // a[i][j][k] = #{x in C_i : x^-1 g_k in C_j}
        let mut a = vec![vec![vec![0u64; r]; r]; r];
        for (k, &gk) in cl.reps.iter().enumerate() {
            for x in 0..self.n {
                let y = self.mul(self.inv(x), gk);
                a[cl.class_of[x]][cl.class_of[y]][k] += 1;
            }
        }
        let mut spaces: Vec<Vec<Vec<u64>>> = vec![(0..r).map(|i| unit_vec(r, i)).collect()];
        for ai in &a {
            let mut next = Vec::new();
            for v in spaces {
                if v.len() == 1 {
                    next.push(v);
                    continue;
                }
                next.extend(split_space(ai, &v, p)?);
            }
            spaces = next;
        }
        if spaces.len() != r {
            return Err(Error::Inconsistent(format!("found {} characters for {r} classes", spaces.len())));
        }
        let id_class = cl.class_of[self.id];
        let inv_class: Vec<usize> = cl.reps.iter().map(|&g| cl.class_of[self.inv(g)]).collect();
        let z = primitive_root(p);
        let ze = pow_mod(z, (p - 1) / e, p);
        let mut rows = Vec::new();
        for sp in spaces {
            let v = &sp[0];
            let c0 = inv_mod(v[id_class], p);
            let omega: Vec<u64> = v.iter().map(|&x| x * c0 % p).collect();
            let mut s = 0u64;
            for j in 0..r {
                let term = omega[j] * omega[inv_class[j]] % p * inv_mod(cl.sizes[j] as u64 % p, p) % p;
                s = (s + term) % p;
            }
            let d2 = n % p * inv_mod(s, p) % p;
            let d = (1..=((n as f64).sqrt() as u64 + 1))
                .find(|&d| d * d % p == d2)
                .ok_or_else(|| Error::Inconsistent("no degree found".into()))?;
            let vals: Vec<u64> =
                (0..r).map(|j| omega[j] * d % p * inv_mod(cl.sizes[j] as u64 % p, p) % p).collect();
            let mut row = Vec::with_capacity(r);
            for &g in &cl.reps {
                let o = self.element_order(g);
                let zo = pow_mod(ze, e / o, p);
                let mut acc = CycloAcc::new(e);
                for k in 0..o {
                    // multiplicity of zeta_o^k among the eigenvalues
                    let mut s = 0u64;
                    for l in 0..o {
                        let cls = cl.class_of[self.pow(g, l)];
                        let w = pow_mod(zo, (o - (l * k) % o) % o, p);
                        s = (s + vals[cls] * w) % p;
                    }
                    let mk = s * inv_mod(o % p, p) % p;
                    if mk > d {
                        return Err(Error::Inconsistent(format!("eigenvalue multiplicity {mk} exceeds degree {d}")));
                    }
                    acc.add_root((k * (e / o)) as i64, mk as i128);
                }
                row.push(acc.to_num());
            }
            rows.push(row);
        }
        rows.sort_by_key(|row| row[id_class].to_integer().unwrap_or(0));
        let table = CharacterTable { classes: cl, order: e, rows };
        table.check_orthogonality(n)?;
        Ok(table)
    }
}

impl CharacterTable {
    fn sizes(&self) -> Vec<u64> {
        self.classes.sizes.iter().map(|&s| s as u64).collect()
    }

    fn check_orthogonality(&self, n: u64) -> Result<()> {
        let sizes = self.sizes();
        for (i, a) in self.rows.iter().enumerate() {
            for (j, b) in self.rows.iter().enumerate() {
                let ip = crate::cyclo::inner_product(a, b, &sizes, n);
                if ip.to_integer() != Some((i == j) as i64) {
                    return Err(Error::Inconsistent("character table fails orthogonality".into()));
                }
            }
        }
        Ok(())
    }

    /// Value of row `i` at element `g`.
    pub fn value(&self, i: usize, g: usize) -> &CycloNum {
        &self.rows[i][self.classes.class_of[g]]
    }
}

fn unit_vec(r: usize, i: usize) -> Vec<u64> {
    let mut v = vec![0; r];
    v[i] = 1;
    v
}

fn pow_mod(mut b: u64, mut e: u64, p: u64) -> u64 {
    let mut r = 1;
    b %= p;
    while e > 0 {
        if e & 1 == 1 {
            r = r * b % p;
        }
        b = b * b % p;
        e >>= 1;
    }
    r
}

fn inv_mod(a: u64, p: u64) -> u64 {
    pow_mod(a, p - 2, p)
}

fn is_prime(n: u64) -> bool {
    n >= 2 && (2..).take_while(|d| d * d <= n).all(|d| !n.is_multiple_of(d))
}

/// Least prime `p >= lower` with `p = 1 mod e`.
fn split_prime(e: u64, lower: u64) -> u64 {
    let mut p = (lower / e + 1) * e + 1;
    while !is_prime(p) {
        p += e;
    }
    p
}

fn primitive_root(p: u64) -> u64 {
    let mut factors = Vec::new();
    let mut m = p - 1;
    let mut d = 2;
    while d * d <= m {
        if m.is_multiple_of(d) {
            factors.push(d);
            while m.is_multiple_of(d) {
                m /= d;
            }
        }
        d += 1;
    }
    if m > 1 {
        factors.push(m);
    }
    (2..p).find(|&g| factors.iter().all(|&f| pow_mod(g, (p - 1) / f, p) != 1)).unwrap()
}

/// Kernel basis of a `rows x cols` matrix over `F_p`.
fn kernel(mat: &[Vec<u64>], cols: usize, p: u64) -> Vec<Vec<u64>> {
    let mut m: Vec<Vec<u64>> = mat.to_vec();
    let mut pivots = Vec::new();
    let mut row = 0;
    for c in 0..cols {
        let Some(pr) = (row..m.len()).find(|&i| m[i][c] != 0) else { continue };
        m.swap(row, pr);
        let iv = inv_mod(m[row][c], p);
        for x in m[row].iter_mut() {
            *x = *x * iv % p;
        }
        for i in 0..m.len() {
            if i != row && m[i][c] != 0 {
                let f = m[i][c];
                for k in 0..cols {
                    m[i][k] = (m[i][k] + p - f * m[row][k] % p) % p;
                }
            }
        }
        pivots.push(c);
        row += 1;
    }
    let free: Vec<usize> = (0..cols).filter(|c| !pivots.contains(c)).collect();
    free.iter()
        .map(|&fc| {
            let mut v = vec![0u64; cols];
            v[fc] = 1;
            for (i, &pc) in pivots.iter().enumerate() {
                v[pc] = (p - m[i][fc]) % p;
            }
            v
        })
        .collect()
}

/// Splits the `M`-invariant span of `basis` into eigenspaces of `M` (acting on columns).
fn split_space(mm: &[Vec<u64>], basis: &[Vec<u64>], p: u64) -> Result<Vec<Vec<Vec<u64>>>> {
    let r = mm.len();
    let d = basis.len();
    // images M b for each basis vector b
    let images: Vec<Vec<u64>> = basis
        .iter()
        .map(|b| (0..r).map(|j| (0..r).map(|k| mm[j][k] % p * b[k] % p).sum::<u64>() % p).collect())
        .collect();
    // coordinates of the images: solve sum_l x_l b_l = image
    let coords: Vec<Vec<u64>> = images
        .iter()
        .map(|img| {
            let sys: Vec<Vec<u64>> = (0..r).map(|j| {
                let mut row: Vec<u64> = basis.iter().map(|b| b[j]).collect();
                row.push((p - img[j]) % p);
                row
            }).collect();
            let ker = kernel(&sys, d + 1, p);
            let v = ker
                .iter()
                .find(|v| v[d] != 0)
                .ok_or_else(|| Error::Inconsistent("subspace is not invariant".into()))?;
            let s = inv_mod(v[d], p);
            Ok(v[..d].iter().map(|&x| x * s % p).collect())
        })
        .collect::<Result<_>>()?;
    // a[i][l] = coefficient of b_i in M b_l
    let mut out = Vec::new();
    let mut found = 0;
    for lam in 0..p {
        let shifted: Vec<Vec<u64>> = (0..d)
            .map(|i| (0..d).map(|l| (coords[l][i] + if i == l { p - lam } else { 0 }) % p).collect())
            .collect();
        let ker = kernel(&shifted, d, p);
        if ker.is_empty() {
            continue;
        }
        found += ker.len();
        out.push(
            ker.iter()
                .map(|y| (0..r).map(|j| (0..d).map(|l| y[l] * basis[l][j] % p).sum::<u64>() % p).collect())
                .collect(),
        );
        if found == d {
            break;
        }
    }
    if found != d {
        return Err(Error::Inconsistent("class matrix is not diagonalizable".into()));
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn perm_group(n: usize, gens: &[Vec<usize>]) -> (Vec<Vec<usize>>, FiniteGroup) {
        let compose = |a: &Vec<usize>, b: &Vec<usize>| -> Vec<usize> { (0..n).map(|i| a[b[i]]).collect() };
        let mut elems = vec![(0..n).collect::<Vec<_>>()];
        let mut i = 0;
        while i < elems.len() {
            for g in gens {
                let c = compose(&elems[i], g);
                if !elems.contains(&c) {
                    elems.push(c);
                }
            }
            i += 1;
        }
        let g = FiniteGroup::from_elements(&elems, compose).unwrap();
        (elems, g)
    }

    fn degrees(t: &CharacterTable, g: &FiniteGroup) -> Vec<i64> {
        t.rows.iter().map(|row| row[t.classes.class_of[g.identity()]].to_integer().unwrap()).collect()
    }

    #[test]
    fn symmetric_groups() {
        let (_, s3) = perm_group(3, &[vec![1, 0, 2], vec![1, 2, 0]]);
        let t = s3.character_table().unwrap();
        assert_eq!(degrees(&t, &s3), vec![1, 1, 2]);
        let (_, s4) = perm_group(4, &[vec![1, 0, 2, 3], vec![1, 2, 3, 0]]);
        let t = s4.character_table().unwrap();
        assert_eq!(degrees(&t, &s4), vec![1, 1, 2, 3, 3]);
    }

    #[test]
    fn quaternion_and_cyclic() {
        // Q8 as unit quaternions +-1, +-i, +-j, +-k encoded (sign, axis)
        let elems: Vec<(i8, u8)> = [1i8, -1].iter().flat_map(|&s| (0..4u8).map(move |a| (s, a))).collect();
        let mul = |x: &(i8, u8), y: &(i8, u8)| -> (i8, u8) {
            let (s, a, b) = (x.0 * y.0, x.1, y.1);
            match (a, b) {
                (0, b) => (s, b),
                (a, 0) => (s, a),
                (a, b) if a == b => (-s, 0),
                (a, b) => {
                    let c = 6 - a - b;
                    let cyc = (a % 3) + 1 == b;
                    (if cyc { s } else { -s }, c)
                }
            }
        };
        let g = FiniteGroup::from_elements(&elems, mul).unwrap();
        let t = g.character_table().unwrap();
        assert_eq!(degrees(&t, &g), vec![1, 1, 1, 1, 2]);
        let c5: Vec<u8> = (0..5).collect();
        let g = FiniteGroup::from_elements(&c5, |a, b| (a + b) % 5).unwrap();
        let t = g.character_table().unwrap();
        assert_eq!(t.rows.len(), 5);
        assert!(t.rows.iter().all(|r| r.iter().all(|v| v.mul(&v.conj()) == CycloNum::one(5))));
    }

    #[test]
    fn frobenius_reciprocity() {
        let (elems, s4) = perm_group(4, &[vec![1, 0, 2, 3], vec![1, 2, 3, 0]]);
        let t = s4.character_table().unwrap();
        // H = stabilizer of 3, a copy of S3
        let members: Vec<bool> = elems.iter().map(|p| p[3] == 3).collect();
        let n = t.order;
        let hs: Vec<usize> = (0..s4.order()).filter(|&i| members[i]).collect();
        for row in &t.rows {
            // restriction of each irreducible to H, induced back up
            let f: Vec<CycloNum> = (0..s4.order())
                .map(|g| if members[g] { row[t.classes.class_of[g]].clone() } else { CycloNum::zero(n) })
                .collect();
            let ind = s4.induce(&members, &f).unwrap();
            for other in &t.rows {
                let lhs = (0..s4.order())
                    .map(|g| ind[g].mul(&other[t.classes.class_of[g]].conj()))
                    .fold(CycloNum::zero(n), |a, b| a.add(&b))
                    .to_integer()
                    .unwrap()
                    / s4.order() as i64;
                let rhs = hs
                    .iter()
                    .map(|&g| f[g].mul(&other[t.classes.class_of[g]].conj()))
                    .fold(CycloNum::zero(n), |a, b| a.add(&b))
                    .to_integer()
                    .unwrap()
                    / hs.len() as i64;
                assert_eq!(lhs, rhs);
            }
        }
    }
}
