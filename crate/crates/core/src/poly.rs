//! Real polynomial helpers. Coefficients are stored in descending powers,
//! `[a_n, ..., a_1, a_0]`, matching the transfer-function convention.

/// Drops exact leading zeros. The zero polynomial becomes `[0.0]`.
pub fn trim(p: &[f64]) -> Vec<f64> {
    match p.iter().position(|&c| c != 0.0) {
        Some(first) => p[first..].to_vec(),
        None => vec![0.0],
    }
}

pub fn is_zero(p: &[f64]) -> bool {
    p.iter().all(|&c| c == 0.0)
}

/// Degree of a trimmed polynomial (zero polynomial reports 0).
pub fn degree(p: &[f64]) -> usize {
    trim(p).len() - 1
}

/// Horner evaluation.
pub fn eval(p: &[f64], x: f64) -> f64 {
    p.iter().fold(0.0, |acc, &c| acc * x + c)
}

pub fn mul(p: &[f64], q: &[f64]) -> Vec<f64> {
    let mut out = vec![0.0; p.len() + q.len() - 1];
    for (i, &a) in p.iter().enumerate() {
        for (j, &b) in q.iter().enumerate() {
            out[i + j] += a * b;
        }
    }
    out
}

pub fn derivative(p: &[f64]) -> Vec<f64> {
    let n = p.len() - 1;
    if n == 0 {
        return vec![0.0];
    }
    p[..n]
        .iter()
        .enumerate()
        .map(|(i, &c)| c * (n - i) as f64)
        .collect()
}

/// `p(-s)` for a polynomial in `s`.
pub fn reflect(p: &[f64]) -> Vec<f64> {
    let n = p.len() - 1;
    p.iter()
        .enumerate()
        .map(|(i, &c)| if (n - i) % 2 == 1 { -c } else { c })
        .collect()
}

/// Coefficient of `s^k`.
pub fn coeff(p: &[f64], k: usize) -> f64 {
    let n = p.len() - 1;
    if k > n {
        0.0
    } else {
        p[n - k]
    }
}

/// Cauchy bound: every root satisfies `|x| < bound`.
pub fn cauchy_bound(p: &[f64]) -> f64 {
    let p = trim(p);
    let lead = p[0];
    1.0 + p[1..].iter().map(|c| (c / lead).abs()).fold(0.0, f64::max)
}

/// Remainder of `a / b` (b nonzero, trimmed).
fn rem(a: &[f64], b: &[f64]) -> Vec<f64> {
    let mut r = a.to_vec();
    let db = b.len() - 1;
    while r.len() > db && r.len() > 1 {
        let f = r[0] / b[0];
        for (i, &bc) in b.iter().enumerate() {
            r[i] -= f * bc;
        }
        r.remove(0);
    }
    if r.len() > db && db == 0 {
        return vec![0.0];
    }
    r
}

/// Sturm chain of `p`. Remainders negligible relative to the chain's scale
/// are treated as zero, which terminates the chain.
pub fn sturm_chain(p: &[f64]) -> Vec<Vec<f64>> {
    let p0 = trim(p);
    let mut chain = vec![p0.clone()];
    if p0.len() == 1 {
        return chain;
    }
    chain.push(trim(&derivative(&p0)));
    loop {
        let n = chain.len();
        let a = &chain[n - 2];
        let b = &chain[n - 1];
        if b.len() == 1 {
            break;
        }
        let scale = a.iter().map(|c| c.abs()).fold(0.0, f64::max);
        let r: Vec<f64> = rem(a, b).into_iter().map(|c| -c).collect();
        let r: Vec<f64> = r
            .into_iter()
            .map(|c| if c.abs() <= 1e-12 * scale { 0.0 } else { c })
            .collect();
        if is_zero(&r) {
            break;
        }
        chain.push(trim(&r));
    }
    chain
}

fn sign_changes(chain: &[Vec<f64>], x: f64) -> usize {
    let mut count = 0;
    let mut last = 0.0_f64;
    for q in chain {
        let v = eval(q, x);
        if v == 0.0 {
            continue;
        }
        if last != 0.0 && (v > 0.0) != (last > 0.0) {
            count += 1;
        }
        last = v;
    }
    count
}

/// Number of distinct real roots in the half-open interval `(lo, hi]`.
pub fn count_roots(chain: &[Vec<f64>], lo: f64, hi: f64) -> usize {
    sign_changes(chain, lo).saturating_sub(sign_changes(chain, hi))
}

/// Distinct real roots of `p` in `[lo, hi]`, isolated with Sturm counts and
/// refined by bisection down to width `tol`.
pub fn real_roots_in(p: &[f64], lo: f64, hi: f64, tol: f64) -> Vec<f64> {
    let p = trim(p);
    if p.len() == 1 {
        return Vec::new();
    }
    let chain = sturm_chain(&p);
    let mut roots = Vec::new();
    if eval(&p, lo) == 0.0 {
        roots.push(lo);
    }
    let mut stack = vec![(lo, hi)];
    while let Some((a, b)) = stack.pop() {
        let n = count_roots(&chain, a, b);
        if n == 0 {
            continue;
        }
        if b - a <= tol * (1.0 + a.abs().max(b.abs())) {
            roots.push(0.5 * (a + b));
            continue;
        }
        let mid = 0.5 * (a + b);
        if n == 1 {
            let (fa, fb) = (eval(&p, a), eval(&p, b));
            if fb == 0.0 {
                roots.push(b);
                continue;
            }
            if fa != 0.0 && (fa > 0.0) != (fb > 0.0) {
                roots.push(bisect_sign_change(&p, a, b, tol));
                continue;
            }
        }
        stack.push((a, mid));
        stack.push((mid, b));
    }
    roots.sort_by(|a, b| a.total_cmp(b));
    roots.dedup_by(|a, b| (*a - *b).abs() <= tol * (1.0 + a.abs()));
    roots
}

fn bisect_sign_change(p: &[f64], mut a: f64, mut b: f64, tol: f64) -> f64 {
    let mut fa = eval(p, a);
    while b - a > tol * (1.0 + a.abs().max(b.abs())) {
        let mid = 0.5 * (a + b);
        let fm = eval(p, mid);
        if fm == 0.0 {
            return mid;
        }
        if (fm > 0.0) == (fa > 0.0) {
            a = mid;
            fa = fm;
        } else {
            b = mid;
        }
    }
    0.5 * (a + b)
}

/// Descending coefficients rendered in ascending powers, e.g. `24010000 + 2450x`.
pub fn format_ascending(desc: &[f64]) -> String {
    let n = desc.len();
    let terms: Vec<String> = desc
        .iter()
        .rev()
        .enumerate()
        .filter(|&(k, &c)| c != 0.0 || n == 1 || k == 0 && desc.iter().all(|&c| c == 0.0))
        .map(|(k, &c)| match k {
            0 => format!("{c}"),
            1 => format!("{c}x"),
            _ => format!("{c}x^{k}"),
        })
        .collect();
    terms.join(" + ").replace("+ -", "- ")
}
