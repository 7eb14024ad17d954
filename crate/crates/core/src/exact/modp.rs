//! Irreducibility certificates by reduction modulo small primes.
//!
//! A monic integer polynomial that stays irreducible modulo some prime `p`
//! is irreducible over the rationals.

fn trim(mut a: Vec<u64>) -> Vec<u64> {
    while a.last() == Some(&0) {
        a.pop();
    }
    a
}

fn inv_mod(a: u64, p: u64) -> u64 {
    let mut r = 1u64;
    let (mut b, mut e) = (a % p, p - 2);
    while e > 0 {
        if e & 1 == 1 {
            r = r * b % p;
        }
        b = b * b % p;
        e >>= 1;
    }
    r
}

fn rem(a: &[u64], m: &[u64], p: u64) -> Vec<u64> {
    let mut r = a.to_vec();
    let dm = m.len() - 1;
    let lead_inv = inv_mod(m[dm], p);
    while r.len() > dm {
        let top = r.pop().unwrap();
        if top == 0 {
            continue;
        }
        let t = top * lead_inv % p;
        let base = r.len() - dm;
        for (i, &c) in m[..dm].iter().enumerate() {
            r[base + i] = (r[base + i] + p - t * c % p) % p;
        }
    }
    trim(r)
}

fn mulmod(a: &[u64], b: &[u64], m: &[u64], p: u64) -> Vec<u64> {
    if a.is_empty() || b.is_empty() {
        return Vec::new();
    }
    let mut out = vec![0u64; a.len() + b.len() - 1];
    for (i, &x) in a.iter().enumerate() {
        for (j, &y) in b.iter().enumerate() {
            out[i + j] = (out[i + j] + x * y) % p;
        }
    }
    rem(&trim(out), m, p)
}

fn gcd(mut a: Vec<u64>, mut b: Vec<u64>, p: u64) -> Vec<u64> {
    while !b.is_empty() {
        let r = rem(&a, &b, p);
        a = b;
        b = r;
    }
    a
}

/// Rabin's test over `F_p` for a polynomial whose leading coefficient is a
/// unit mod `p`.
pub fn irreducible_mod_p(coeffs: &[i64], p: u64) -> bool {
    let f = trim(coeffs.iter().map(|&c| c.rem_euclid(p as i64) as u64).collect());
    let d = f.len().saturating_sub(1);
    if d + 1 != coeffs.len() || d == 0 {
        return false;
    }
    if d == 1 {
        return true;
    }
    // x^(p^i) mod f for i = 1..d
    let mut xp = vec![0, 1];
    let mut powers = Vec::with_capacity(d);
    for _ in 0..d {
        let mut acc = vec![1u64];
        let mut base = xp.clone();
        let mut e = p;
        while e > 0 {
            if e & 1 == 1 {
                acc = mulmod(&acc, &base, &f, p);
            }
            base = mulmod(&base, &base, &f, p);
            e >>= 1;
        }
        xp = acc;
        powers.push(xp.clone());
    }
    // x^(p^d) ≡ x
    if trim(powers[d - 1].clone()) != vec![0, 1] {
        return false;
    }
    for q in (2..=d).filter(|q| d.is_multiple_of(*q) && (2..*q).all(|r| q % r != 0)) {
        let mut g = powers[d / q - 1].clone();
        g.resize(g.len().max(2), 0);
        g[1] = (g[1] + p - 1) % p;
        if gcd(f.clone(), trim(g), p).len() > 1 {
            return false;
        }
    }
    true
}

fn divmod(a: &[u64], b: &[u64], p: u64) -> Vec<u64> {
    let mut r = a.to_vec();
    let db = b.len() - 1;
    let lead_inv = inv_mod(b[db], p);
    let mut q = vec![0u64; r.len().saturating_sub(db)];
    while r.len() > db {
        let top = r.pop().unwrap();
        let k = r.len() - db;
        let t = top * lead_inv % p;
        q[k] = t;
        if t == 0 {
            continue;
        }
        for (i, &c) in b[..db].iter().enumerate() {
            r[k + i] = (r[k + i] + p - t * c % p) % p;
        }
    }
    trim(q)
}

fn powmod_x(p: u64, base: &[u64], f: &[u64]) -> Vec<u64> {
    let mut acc = vec![1u64];
    let mut b = base.to_vec();
    let mut e = p;
    while e > 0 {
        if e & 1 == 1 {
            acc = mulmod(&acc, &b, f, p);
        }
        b = mulmod(&b, &b, f, p);
        e >>= 1;
    }
    acc
}

/// Degrees of the irreducible factors modulo `p`, or `None` when the
/// reduction is not squarefree of full degree.
pub fn factor_degrees_mod_p(coeffs: &[i64], p: u64) -> Option<Vec<usize>> {
    let mut f = trim(coeffs.iter().map(|&c| c.rem_euclid(p as i64) as u64).collect());
    if f.len() != coeffs.len() || f.len() < 2 {
        return None;
    }
    let deriv: Vec<u64> = trim(f.iter().enumerate().skip(1).map(|(i, &c)| (i as u64 % p) * c % p).collect());
    if deriv.is_empty() || gcd(f.clone(), deriv, p).len() > 1 {
        return None;
    }
    let mut degrees = Vec::new();
    let mut h = vec![0u64, 1];
    let mut i = 0;
    while f.len() > 1 {
        i += 1;
        if 2 * i > f.len() - 1 {
            degrees.push(f.len() - 1);
            break;
        }
        h = powmod_x(p, &rem(&h, &f, p), &f);
        let mut hx = h.clone();
        hx.resize(hx.len().max(2), 0);
        hx[1] = (hx[1] + p - 1) % p;
        let g = gcd(f.clone(), trim(hx), p);
        let dg = g.len() - 1;
        if dg > 0 {
            degrees.extend(std::iter::repeat_n(i, dg / i));
            f = divmod(&f, &g, p);
            h = rem(&h, &f, p);
        }
    }
    degrees.sort_unstable();
    Some(degrees)
}

/// Primes whose factorization patterns jointly rule out every proper factor
/// degree, proving irreducibility over the rationals.
pub fn irreducibility_witness(coeffs: &[i64]) -> Option<Vec<u64>> {
    let d = coeffs.len().checked_sub(1)?;
    if d == 0 || coeffs[d] != 1 {
        return None;
    }
    if d == 1 {
        return Some(Vec::new());
    }
    let mut possible: Vec<bool> = (0..=d).map(|k| k > 0 && k < d).collect();
    let mut used = Vec::new();
    for p in (2u64..400).filter(|p| (2..*p).all(|r| p % r != 0)) {
        let Some(degs) = factor_degrees_mod_p(coeffs, p) else { continue };
        let mut sums = vec![false; d + 1];
        sums[0] = true;
        for &g in &degs {
            for k in (g..=d).rev() {
                sums[k] |= sums[k - g];
            }
        }
        let before = possible.iter().filter(|&&b| b).count();
        for k in 0..=d {
            possible[k] &= sums[k];
        }
        if possible.iter().filter(|&&b| b).count() < before {
            used.push(p);
        }
        if possible.iter().all(|&b| !b) {
            return Some(used);
        }
    }
    None
}
