//! Independent numerical-quadrature oracle for the coupling coefficients.
//!
//! The interaction, stripped of drive phases and the overall `-P1`, is
//!
//! ```text
//! G = sqrt(2 pi / 15) (Y_2^2 + Y_2^-2) - sqrt(4 pi / 45) Y_2^0 + 1/3
//! ```
//!
//! (each `Y_2^{+-2}` acting on its own `delta m` sector), and the table
//! coefficient is `c = <l,m| -G |l', m'>`. The matrix elements reduce to
//! integrals of three normalized associated Legendre functions, evaluated
//! here by Gauss-Legendre quadrature — exact for polynomial integrands of
//! the degrees that occur. Nothing below touches the closed forms under
//! test.

/// Gauss-Legendre nodes and weights on [-1, 1].
pub fn gauss_legendre(n: usize) -> (Vec<f64>, Vec<f64>) {
    let mut nodes = vec![0.0; n];
    let mut weights = vec![0.0; n];
    for k in 0..n.div_ceil(2) {
        // Newton from the Chebyshev-like initial guess
        let mut x = (std::f64::consts::PI * (k as f64 + 0.75) / (n as f64 + 0.5)).cos();
        let mut dp = 0.0;
        for _ in 0..100 {
            let (p, d) = legendre_p_and_deriv(n, x);
            dp = d;
            let dx = p / d;
            x -= dx;
            if dx.abs() < 1e-15 {
                break;
            }
        }
        let w = 2.0 / ((1.0 - x * x) * dp * dp);
        nodes[k] = -x;
        nodes[n - 1 - k] = x;
        weights[k] = w;
        weights[n - 1 - k] = w;
    }
    (nodes, weights)
}

fn legendre_p_and_deriv(n: usize, x: f64) -> (f64, f64) {
    let mut p0 = 1.0;
    let mut p1 = x;
    if n == 0 {
        return (1.0, 0.0);
    }
    for k in 2..=n {
        let kf = k as f64;
        let p2 = ((2.0 * kf - 1.0) * x * p1 - (kf - 1.0) * p0) / kf;
        p0 = p1;
        p1 = p2;
    }
    let d = n as f64 * (x * p1 - p0) / (x * x - 1.0);
    (p1, d)
}

/// Normalized associated Legendre `S_l^m(x)` with Condon-Shortley phase,
/// such that `Y_l^m = S_l^m(cos theta) e^{i m phi}` is unit-normalized
/// (`2 pi Int S^2 dx = 1`). Negative `m` via `S_l^{-m} = (-1)^m S_l^m`.
pub fn normalized_plm(l: u32, m: i32, x: f64) -> f64 {
    let m_abs = m.unsigned_abs();
    if m_abs > l {
        return 0.0;
    }
    let sign = if m < 0 && m_abs % 2 == 1 { -1.0 } else { 1.0 };
    // S_m^m
    let mut smm = (1.0 / (4.0 * std::f64::consts::PI)).sqrt();
    let sxx = (1.0 - x * x).max(0.0).sqrt();
    for k in 1..=m_abs {
        let kf = k as f64;
        smm *= -((2.0 * kf + 1.0) / (2.0 * kf)).sqrt() * sxx;
    }
    if l == m_abs {
        return sign * smm;
    }
    // S_{m+1}^m
    let mf = m_abs as f64;
    let mut s_prev = smm;
    let mut s_cur = (2.0 * mf + 3.0).sqrt() * x * smm;
    if l == m_abs + 1 {
        return sign * s_cur;
    }
    for ll in (m_abs + 2)..=l {
        let lf = ll as f64;
        let a = ((4.0 * lf * lf - 1.0) / (lf * lf - mf * mf)).sqrt();
        let b =
            (((lf - 1.0) * (lf - 1.0) - mf * mf) / (4.0 * (lf - 1.0) * (lf - 1.0) - 1.0)).sqrt();
        let s_next = a * (x * s_cur - b * s_prev);
        s_prev = s_cur;
        s_cur = s_next;
    }
    sign * s_cur
}

/// `<l,m| Y_2^M |l',m'>` by quadrature (zero unless `m = M + m'`).
fn gaunt_with_y2(
    l: u32,
    m: i32,
    big_m: i32,
    lp: i64,
    mp: i32,
    nodes: &[f64],
    weights: &[f64],
) -> f64 {
    if lp < 0 || mp.unsigned_abs() > lp as u32 || m != big_m + mp {
        return 0.0;
    }
    let lp = lp as u32;
    let mut acc = 0.0;
    for (&x, &w) in nodes.iter().zip(weights) {
        acc +=
            w * normalized_plm(l, m, x) * normalized_plm(2, big_m, x) * normalized_plm(lp, mp, x);
    }
    2.0 * std::f64::consts::PI * acc
}

/// Quadrature value of the coupling coefficient for
/// `|l,m> -> |l+dl, m+dm>`.
pub fn oracle_coefficient(l: u32, m: i32, dl: i32, dm: i32, nodes: &[f64], weights: &[f64]) -> f64 {
    let lp = l as i64 + dl as i64;
    let mp = m + dm;
    if lp < 0 || (mp.unsigned_abs() as i64) > lp {
        return 0.0;
    }
    match dm {
        0 => {
            let term = (4.0 * std::f64::consts::PI / 45.0).sqrt()
                * gaunt_with_y2(l, m, 0, lp, mp, nodes, weights);
            if dl == 0 {
                term - 1.0 / 3.0
            } else {
                term
            }
        }
        2 => {
            -(2.0 * std::f64::consts::PI / 15.0).sqrt()
                * gaunt_with_y2(l, m, -2, lp, mp, nodes, weights)
        }
        -2 => {
            -(2.0 * std::f64::consts::PI / 15.0).sqrt()
                * gaunt_with_y2(l, m, 2, lp, mp, nodes, weights)
        }
        _ => panic!("dm must be 0 or +-2"),
    }
}

/// Orthonormality self-test of the oracle machinery:
/// `2 pi Int S_l^m S_l'^m dx = delta_{l l'}`.
pub fn orthonormality_defect(l_max: u32, nodes: &[f64], weights: &[f64]) -> f64 {
    let mut worst: f64 = 0.0;
    for l in 0..=l_max {
        for lp in l..=l_max {
            for m in 0..=(l.min(lp) as i32) {
                let mut acc = 0.0;
                for (&x, &w) in nodes.iter().zip(weights) {
                    acc += w * normalized_plm(l, m, x) * normalized_plm(lp, m, x);
                }
                let expect = if l == lp { 1.0 } else { 0.0 };
                worst = worst.max((2.0 * std::f64::consts::PI * acc - expect).abs());
            }
        }
    }
    worst
}
