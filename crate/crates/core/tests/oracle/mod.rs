//! Reference values computed without the library's own iterative routines.

/// Largest singular value of a matrix with at most three columns, from the
/// largest root of the characteristic polynomial of `M^T M`, found by
/// bisection above the polynomial's largest critical point.
pub fn largest_singular_value(rows: &[Vec<f64>]) -> f64 {
    let k = rows[0].len();
    assert!((1..=3).contains(&k), "oracle handles at most three columns");
    let mut g = [[0.0f64; 3]; 3];
    for i in 0..k {
        for j in 0..k {
            g[i][j] = rows.iter().map(|r| r[i] * r[j]).sum();
        }
    }
    let tr: f64 = (0..k).map(|i| g[i][i]).sum();
    if tr == 0.0 {
        return 0.0;
    }
    // Monic characteristic polynomial det(lambda I - G) and its largest
    // critical point (0 when k = 1).
    let (p, crit): (Box<dyn Fn(f64) -> f64>, f64) = match k {
        1 => (Box::new(move |l| l - g[0][0]), 0.0),
        2 => {
            let det = g[0][0] * g[1][1] - g[0][1] * g[1][0];
            (Box::new(move |l| l * l - tr * l + det), tr / 2.0)
        }
        _ => {
            let minor = |a: usize, b: usize| g[a][a] * g[b][b] - g[a][b] * g[b][a];
            let c2 = minor(0, 1) + minor(0, 2) + minor(1, 2);
            let det = g[0][0] * (g[1][1] * g[2][2] - g[1][2] * g[2][1])
                - g[0][1] * (g[1][0] * g[2][2] - g[1][2] * g[2][0])
                + g[0][2] * (g[1][0] * g[2][1] - g[1][1] * g[2][0]);
            let disc = (4.0 * tr * tr - 12.0 * c2).max(0.0);
            let crit = (2.0 * tr + disc.sqrt()) / 6.0;
            (Box::new(move |l| ((l - tr) * l + c2) * l - det), crit)
        }
    };
    let (mut lo, mut hi) = (crit.max(0.0), tr * 1.01 + 1e-300);
    for _ in 0..400 {
        let mid = 0.5 * (lo + hi);
        if mid == lo || mid == hi {
            break;
        }
        if p(mid) > 0.0 {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    (0.5 * (lo + hi)).sqrt()
}
