//! Dense polynomials over the prime field `F_p`, coefficients low to high.

fn trim(mut a: Vec<u32>) -> Vec<u32> {
    while a.len() > 1 && *a.last().unwrap() == 0 {
        a.pop();
    }
    if a.is_empty() {
        a.push(0);
    }
    a
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

fn is_zero(a: &[u32]) -> bool {
    a.iter().all(|&c| c == 0)
}

pub fn rem(a: &[u32], m: &[u32], p: u32) -> Vec<u32> {
    let mut r = trim(a.to_vec());
    let m = trim(m.to_vec());
    let dm = m.len() - 1;
    let inv = inv_mod(m[dm], p);
    while r.len() > dm && !is_zero(&r) {
        let c = (*r.last().unwrap() as u64 * inv as u64 % p as u64) as u32;
        let shift = r.len() - 1 - dm;
        for i in 0..=dm {
            let sub = (c as u64 * m[i] as u64 % p as u64) as u32;
            r[shift + i] = (r[shift + i] + p - sub) % p;
        }
        r = trim(r);
        if r.len() - 1 < dm {
            break;
        }
    }
    r
}

pub fn mulmod(a: &[u32], b: &[u32], m: &[u32], p: u32) -> Vec<u32> {
    let mut prod = vec![0u64; a.len() + b.len() - 1];
    for (i, &x) in a.iter().enumerate() {
        for (j, &y) in b.iter().enumerate() {
            prod[i + j] = (prod[i + j] + x as u64 * y as u64) % p as u64;
        }
    }
    let prod: Vec<u32> = prod.into_iter().map(|c| c as u32).collect();
    rem(&prod, m, p)
}

pub fn gcd(a: &[u32], b: &[u32], p: u32) -> Vec<u32> {
    let mut x = trim(a.to_vec());
    let mut y = trim(b.to_vec());
    while !is_zero(&y) {
        let r = rem(&x, &y, p);
        x = y;
        y = r;
    }
    x
}

fn sub(a: &[u32], b: &[u32], p: u32) -> Vec<u32> {
    let n = a.len().max(b.len());
    let r = (0..n)
        .map(|i| {
            let x = a.get(i).copied().unwrap_or(0);
            let y = b.get(i).copied().unwrap_or(0);
            (x + p - y) % p
        })
        .collect();
    trim(r)
}

/// Rabin's irreducibility test for a monic `f` of degree `n`.
pub fn is_irreducible(f: &[u32], p: u32) -> bool {
    let n = f.len() - 1;
    if n == 0 {
        return false;
    }
    if n == 1 {
        return true;
    }
    let x = vec![0, 1];
    // x^(p^k) mod f for k = 1..n
    let mut pows = Vec::with_capacity(n + 1);
    let mut cur = rem(&x, f, p);
    pows.push(cur.clone());
    for _ in 0..n {
        cur = powmod(&cur, p as u64, f, p);
        pows.push(cur.clone());
    }
    // pows[k] = x^(p^k)
    if sub(&pows[n], &x, p) != vec![0] {
        return false;
    }
    let mut primes = Vec::new();
    let mut m = n;
    let mut d = 2;
    while d * d <= m {
        if m.is_multiple_of(d) {
            primes.push(d);
            while m.is_multiple_of(d) {
                m /= d;
            }
        }
        d += 1;
    }
    if m > 1 {
        primes.push(m);
    }
    for r in primes {
        let g = gcd(f, &sub(&pows[n / r], &x, p), p);
        if g.len() > 1 {
            return false;
        }
    }
    true
}

fn powmod(a: &[u32], mut e: u64, m: &[u32], p: u32) -> Vec<u32> {
    let mut r = vec![1u32];
    let mut b = rem(a, m, p);
    while e > 0 {
        if e & 1 == 1 {
            r = mulmod(&r, &b, m, p);
        }
        b = mulmod(&b, &b, m, p);
        e >>= 1;
    }
    r
}

#[cfg(test)]
mod tests {
    use super::*;

    fn brute_irreducible(f: &[u32], p: u32) -> bool {
        // no monic factor of degree 1..=n/2
        let n = f.len() - 1;
        for d in 1..=n / 2 {
            let total = (p as u64).pow(d as u32);
            for code in 0..total {
                let mut g = Vec::new();
                let mut c = code;
                for _ in 0..d {
                    g.push((c % p as u64) as u32);
                    c /= p as u64;
                }
                g.push(1);
                if is_zero(&rem(f, &g, p)) {
                    return false;
                }
            }
        }
        true
    }

    #[test]
    fn rabin_matches_trial_division() {
        for p in [2u32, 3] {
            for n in 1..=5usize {
                let total = (p as u64).pow(n as u32);
                for code in 0..total {
                    let mut f = Vec::new();
                    let mut c = code;
                    for _ in 0..n {
                        f.push((c % p as u64) as u32);
                        c /= p as u64;
                    }
                    f.push(1);
                    assert_eq!(is_irreducible(&f, p), brute_irreducible(&f, p), "{f:?} mod {p}");
                }
            }
        }
    }
}
