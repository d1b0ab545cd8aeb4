use std::f64::consts::PI;

#[derive(Debug, Clone, PartialEq)]
pub struct OracleResult<T> {
    pub value: T,
    pub method: &'static str,
    /// Rough count of inner-loop evaluations.
    pub cost: u64,
}

/// Size cap for [`brute_tau`].
pub const BRUTE_MAX_N: usize = 200;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BruteTau {
    pub cov: f64,
    pub corr: f64,
}

fn naive_centred(v: &[f64]) -> Vec<Vec<f64>> {
    let n = v.len();
    let mut c = vec![vec![0.0; n]; n];
    for k in 0..n {
        for l in 0..n {
            if k != l {
                c[k][l] = if v[k] >= v[l] { 1.0 } else { -1.0 };
            }
        }
    }
    let mut rows = vec![0.0; n];
    let mut cols = vec![0.0; n];
    let mut total = 0.0;
    for k in 0..n {
        for l in 0..n {
            rows[k] += c[k][l];
            cols[l] += c[k][l];
            total += c[k][l];
        }
    }
    let m = (n - 1) as f64;
    let grand = total / (n * n - n) as f64;
    let mut out = vec![vec![0.0; n]; n];
    for k in 0..n {
        for l in 0..n {
            if k != l {
                out[k][l] = c[k][l] - rows[k] / m - cols[l] / m + grand;
            }
        }
    }
    out
}

/// Triple-loop evaluation of the covariance and correlation forms.
pub fn brute_tau(x: &[f64], y: &[f64]) -> Result<OracleResult<BruteTau>, String> {
    let n = x.len();
    if n != y.len() {
        return Err(format!("length mismatch {n} vs {}", y.len()));
    }
    if n < 2 {
        return Err("need at least two observations".into());
    }
    if n > BRUTE_MAX_N {
        return Err(format!("n = {n} exceeds the oracle cap {BRUTE_MAX_N}"));
    }
    let a = naive_centred(x);
    let b = naive_centred(y);
    let (mut sab, mut saa, mut sbb) = (0.0, 0.0, 0.0);
    for k in 0..n {
        for l in 0..n {
            if k != l {
                sab += a[k][l] * b[k][l];
                saa += a[k][l] * a[k][l];
                sbb += b[k][l] * b[k][l];
            }
        }
    }
    Ok(OracleResult {
        value: BruteTau {
            cov: sab / (n * (n - 1)) as f64,
            corr: sab / (saa * sbb).sqrt(),
        },
        method: "naive double centring and pair enumeration",
        cost: 3 * (n * n) as u64,
    })
}

/// Central differences of `f` at `theta`. `f` returns `None` outside its domain.
pub fn finite_diff_grad(
    f: impl Fn(&[f64]) -> Option<f64>,
    theta: &[f64],
    h: f64,
) -> Result<Vec<f64>, String> {
    if !(1e-7..=1e-4).contains(&h) {
        return Err(format!("step {h} outside [1e-7, 1e-4]"));
    }
    let mut out = Vec::with_capacity(theta.len());
    let mut t = theta.to_vec();
    for i in 0..theta.len() {
        t[i] = theta[i] + h;
        let up = f(&t).ok_or("infeasible evaluation point")?;
        t[i] = theta[i] - h;
        let down = f(&t).ok_or("infeasible evaluation point")?;
        t[i] = theta[i];
        out.push((up - down) / (2.0 * h));
    }
    Ok(out)
}

/// Central differences of a vector field, row `i` holding `∂g/∂θ_i`.
pub fn finite_diff_jacobian(
    g: impl Fn(&[f64]) -> Option<Vec<f64>>,
    theta: &[f64],
    h: f64,
) -> Result<Vec<Vec<f64>>, String> {
    if !(1e-7..=1e-4).contains(&h) {
        return Err(format!("step {h} outside [1e-7, 1e-4]"));
    }
    let mut out = Vec::with_capacity(theta.len());
    let mut t = theta.to_vec();
    for i in 0..theta.len() {
        t[i] = theta[i] + h;
        let up = g(&t).ok_or("infeasible evaluation point")?;
        t[i] = theta[i] - h;
        let down = g(&t).ok_or("infeasible evaluation point")?;
        t[i] = theta[i];
        out.push(up.iter().zip(&down).map(|(u, d)| (u - d) / (2.0 * h)).collect());
    }
    Ok(out)
}

pub const ENUM_MAX_N: usize = 4;

/// Exact `E[τ̂_cov]` under i.i.d. sampling from `atoms = (x, y, p)`, by
/// enumerating every sample and weighting it by its probability.
pub fn exact_expectation(atoms: &[(f64, f64, f64)], n: usize) -> Result<OracleResult<f64>, String> {
    if n > ENUM_MAX_N {
        return Err(format!("n = {n} exceeds the enumeration cap {ENUM_MAX_N}"));
    }
    let s = atoms.len();
    let total = s.pow(n as u32);
    // Neumaier summation
    let (mut sum, mut comp) = (0.0f64, 0.0f64);
    for code in 0..total {
        let mut rest = code;
        let mut x = Vec::with_capacity(n);
        let mut y = Vec::with_capacity(n);
        let mut p = 1.0;
        for _ in 0..n {
            let (a, b, w) = atoms[rest % s];
            rest /= s;
            x.push(a);
            y.push(b);
            p *= w;
        }
        let term = p * brute_tau(&x, &y)?.value.cov;
        let t = sum + term;
        comp += if sum.abs() >= term.abs() { (sum - t) + term } else { (term - t) + sum };
        sum = t;
    }
    Ok(OracleResult {
        value: sum + comp,
        method: "exhaustive enumeration over the sample space",
        cost: total as u64,
    })
}

fn erf_series(x: f64) -> f64 {
    // Maclaurin series with compensated accumulation
    let x2 = x * x;
    let mut term = x;
    let (mut sum, mut comp) = (0.0f64, 0.0f64);
    for k in 0..200 {
        let add = term / (2 * k + 1) as f64;
        let t = sum + add;
        comp += if sum.abs() >= add.abs() { (sum - t) + add } else { (add - t) + sum };
        sum = t;
        if add.abs() < 1e-18 * sum.abs() {
            break;
        }
        term *= -x2 / (k + 1) as f64;
    }
    2.0 / PI.sqrt() * (sum + comp)
}

fn erfc_continued_fraction(x: f64) -> f64 {
    // modified Lentz evaluation of erfc(x) = exp(-x²)/√π · 1/(x + 1/2/(x + 1/(x + 3/2/(x + ...))))
    let tiny = 1e-300;
    let mut f = x;
    let mut c = x;
    let mut d = 0.0;
    for k in 1..500 {
        let a = k as f64 / 2.0;
        d = x + a * d;
        if d.abs() < tiny {
            d = tiny;
        }
        c = x + a / c;
        if c.abs() < tiny {
            c = tiny;
        }
        d = 1.0 / d;
        let delta = c * d;
        f *= delta;
        if (delta - 1.0).abs() < 1e-16 {
            break;
        }
    }
    (-x * x).exp() / PI.sqrt() / f
}

/// Standard normal CDF from series and continued-fraction expansions of erf.
pub fn normal_cdf(t: f64) -> f64 {
    let x = t / 2f64.sqrt();
    if x.abs() <= 2.0 {
        0.5 * (1.0 + erf_series(x))
    } else if x > 0.0 {
        1.0 - 0.5 * erfc_continued_fraction(x)
    } else {
        0.5 * erfc_continued_fraction(-x)
    }
}

pub fn rel_diff(a: f64, b: f64) -> f64 {
    (a - b).abs() / (1.0 + a.abs().max(b.abs()))
}
