//! Quadrature rules on the reference triangle and on segments.

/// Gauss–Legendre nodes and weights on `[0, 1]`.
pub fn gauss_legendre(n: usize) -> Vec<(f64, f64)> {
    assert!(n > 0);
    let mut out = Vec::with_capacity(n);
    for i in 0..n {
        // Newton iteration on P_n from the Chebyshev-like initial guess
        let mut x = (std::f64::consts::PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        let mut dp = 0.0;
        for _ in 0..100 {
            let (mut p0, mut p1) = (1.0, x);
            for k in 2..=n {
                let p2 = ((2 * k - 1) as f64 * x * p1 - (k - 1) as f64 * p0) / k as f64;
                p0 = p1;
                p1 = p2;
            }
            let pn = if n == 1 { x } else { p1 };
            let pnm1 = if n == 1 { 1.0 } else { p0 };
            dp = n as f64 * (x * pn - pnm1) / (x * x - 1.0);
            let dx = pn / dp;
            x -= dx;
            if dx.abs() < 1e-16 {
                break;
            }
        }
        let w = 2.0 / ((1.0 - x * x) * dp * dp);
        out.push((0.5 * (1.0 - x), 0.5 * w));
    }
    out.sort_by(|a, b| a.0.total_cmp(&b.0));
    out
}

/// Point of a triangle rule: barycentric coordinates and weight (weights sum
/// to one, so integrals are `area * sum(w * f)`).
#[derive(Debug, Clone, Copy)]
pub struct TriPoint {
    pub bary: [f64; 3],
    pub weight: f64,
}

/// Seven-point rule exact for polynomials of degree five.
pub fn triangle_degree5() -> [TriPoint; 7] {
    let s15 = 15f64.sqrt();
    let a1 = (6.0 - s15) / 21.0;
    let a2 = (6.0 + s15) / 21.0;
    let w1 = (155.0 - s15) / 1200.0;
    let w2 = (155.0 + s15) / 1200.0;
    let p = |a: f64, b: f64, c: f64, weight: f64| TriPoint { bary: [a, b, c], weight };
    [
        p(1.0 / 3.0, 1.0 / 3.0, 1.0 / 3.0, 9.0 / 40.0),
        p(a1, a1, 1.0 - 2.0 * a1, w1),
        p(a1, 1.0 - 2.0 * a1, a1, w1),
        p(1.0 - 2.0 * a1, a1, a1, w1),
        p(a2, a2, 1.0 - 2.0 * a2, w2),
        p(a2, 1.0 - 2.0 * a2, a2, w2),
        p(1.0 - 2.0 * a2, a2, a2, w2),
    ]
}

/// Collapsed (Duffy) product rule with the degenerate side at vertex
/// `apex`. Integrands with a `1/r` factor that vanish like `r` towards an
/// axis vertex become smooth under this map.
pub fn collapsed_rule(n: usize, apex: usize) -> Vec<TriPoint> {
    let gl = gauss_legendre(n);
    let mut pts = Vec::with_capacity(n * n);
    for &(s, ws) in &gl {
        for &(t, wt) in &gl {
            // x = apex + s * ((1 - t) * next + t * prev - apex)
            let mut bary = [0.0; 3];
            bary[apex] = 1.0 - s;
            bary[(apex + 1) % 3] = s * (1.0 - t);
            bary[(apex + 2) % 3] = s * t;
            pts.push(TriPoint { bary, weight: 2.0 * s * ws * wt });
        }
    }
    pts
}

/// Two-point Gauss rule on `[0, 1]`, exact for cubics.
pub fn segment_gauss2() -> [(f64, f64); 2] {
    let d = 0.5 / 3f64.sqrt();
    [(0.5 - d, 0.5), (0.5 + d, 0.5)]
}

/// Three-point Gauss rule on `[0, 1]`, exact for quintics.
pub fn segment_gauss3() -> [(f64, f64); 3] {
    let d = 0.5 * 0.6f64.sqrt();
    [(0.5 - d, 5.0 / 18.0), (0.5, 8.0 / 18.0), (0.5 + d, 5.0 / 18.0)]
}
