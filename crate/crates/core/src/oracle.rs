//! Brute-force reference solver for three-state minimax-KL centers.

use crate::divergences::kl;

/// Brute-force minimizer of `max_v kl(p_v, q)` over the hull of three-state vertices.
pub fn grid_center(vertices: &[Vec<f64>]) -> Vec<f64> {
    let hull = convex_hull_2d(&vertices.iter().map(|v| (v[0], v[1])).collect::<Vec<_>>());
    let f = |x: f64, y: f64| {
        let q = [x, y, 1.0 - x - y];
        if q[2] < 0.0 || !inside(&hull, x, y) {
            return f64::INFINITY;
        }
        vertices.iter().map(|v| kl(v, &q)).fold(0.0, f64::max)
    };
    let mut best = (f64::INFINITY, 0.0, 0.0);
    let coarse = 100;
    for i in 0..=coarse {
        for j in 0..=coarse - i {
            let (x, y) = (i as f64 / coarse as f64, j as f64 / coarse as f64);
            let v = f(x, y);
            if v < best.0 {
                best = (v, x, y);
            }
        }
    }
    if !best.0.is_finite() {
        // hull thinner than the coarse grid: start from the vertex mean
        let n = vertices.len() as f64;
        let x = vertices.iter().map(|v| v[0]).sum::<f64>() / n;
        let y = vertices.iter().map(|v| v[1]).sum::<f64>() / n;
        best = (f(x, y), x, y);
    }
    // local grids, recentred at each scale until the best point stops moving
    for step in [1e-3, 1e-4, 1e-5, 1e-6] {
        loop {
            let (cx, cy) = (best.1, best.2);
            for i in -20..=20 {
                for j in -20..=20 {
                    let (x, y) = (cx + i as f64 * step, cy + j as f64 * step);
                    let v = f(x, y);
                    if v < best.0 {
                        best = (v, x, y);
                    }
                }
            }
            if (best.1, best.2) == (cx, cy) {
                break;
            }
        }
    }
    vec![best.1, best.2, 1.0 - best.1 - best.2]
}

fn cross(o: (f64, f64), a: (f64, f64), b: (f64, f64)) -> f64 {
    (a.0 - o.0) * (b.1 - o.1) - (a.1 - o.1) * (b.0 - o.0)
}

fn convex_hull_2d(points: &[(f64, f64)]) -> Vec<(f64, f64)> {
    let mut pts = points.to_vec();
    pts.sort_by(|a, b| a.partial_cmp(b).unwrap());
    pts.dedup();
    if pts.len() < 3 {
        return pts;
    }
    let mut lower: Vec<(f64, f64)> = Vec::new();
    for &p in &pts {
        while lower.len() >= 2 && cross(lower[lower.len() - 2], lower[lower.len() - 1], p) <= 0.0 {
            lower.pop();
        }
        lower.push(p);
    }
    let mut upper: Vec<(f64, f64)> = Vec::new();
    for &p in pts.iter().rev() {
        while upper.len() >= 2 && cross(upper[upper.len() - 2], upper[upper.len() - 1], p) <= 0.0 {
            upper.pop();
        }
        upper.push(p);
    }
    lower.pop();
    upper.pop();
    lower.extend(upper);
    lower
}

fn inside(hull: &[(f64, f64)], x: f64, y: f64) -> bool {
    if hull.len() < 3 {
        return false;
    }
    (0..hull.len()).all(|i| cross(hull[i], hull[(i + 1) % hull.len()], (x, y)) >= -1e-12)
}
