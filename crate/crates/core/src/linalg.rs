//! Small dense vector helpers and a derivative-free local optimizer.

#[inline]
pub fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

#[inline]
pub fn norm(a: &[f64]) -> f64 {
    dot(a, a).sqrt()
}

#[inline]
pub fn sub(a: &[f64], b: &[f64]) -> Vec<f64> {
    a.iter().zip(b).map(|(x, y)| x - y).collect()
}

#[inline]
pub fn add(a: &[f64], b: &[f64]) -> Vec<f64> {
    a.iter().zip(b).map(|(x, y)| x + y).collect()
}

#[inline]
pub fn scale(a: &[f64], s: f64) -> Vec<f64> {
    a.iter().map(|x| x * s).collect()
}

/// `y += alpha * x`
#[inline]
pub fn axpy(y: &mut [f64], alpha: f64, x: &[f64]) {
    for (yi, xi) in y.iter_mut().zip(x) {
        *yi += alpha * xi;
    }
}

/// Modified Gram–Schmidt. Vectors that become (numerically) dependent are
/// dropped, so the output may be shorter than the input.
pub fn gram_schmidt(vectors: &[Vec<f64>]) -> Vec<Vec<f64>> {
    let mut out: Vec<Vec<f64>> = Vec::with_capacity(vectors.len());
    for v in vectors {
        let mut w = v.clone();
        // two passes for stability
        for _ in 0..2 {
            for e in &out {
                let c = dot(&w, e);
                axpy(&mut w, -c, e);
            }
        }
        let nw = norm(&w);
        let scale_ref = norm(v).max(1e-300);
        if nw > 1e-10 * scale_ref && nw > 1e-300 {
            out.push(w.iter().map(|x| x / nw).collect());
        }
    }
    out
}

/// Coordinates of `v` in an orthonormal frame.
pub fn frame_coords(frame: &[Vec<f64>], v: &[f64]) -> Vec<f64> {
    frame.iter().map(|e| dot(e, v)).collect()
}

/// Orthogonal projection of `v` onto the span of an orthonormal frame.
pub fn project_onto_frame(frame: &[Vec<f64>], v: &[f64]) -> Vec<f64> {
    let mut out = vec![0.0; v.len()];
    for e in frame {
        axpy(&mut out, dot(e, v), e);
    }
    out
}

/// Distance from `x` to the affine span of `points` (empty span: infinity).
pub fn dist_to_affine_span(points: &[&[f64]], x: &[f64]) -> f64 {
    let Some(base) = points.first() else {
        return f64::INFINITY;
    };
    let dirs: Vec<Vec<f64>> = points[1..].iter().map(|p| sub(p, base)).collect();
    let frame = gram_schmidt(&dirs);
    let rel = sub(x, base);
    let proj = project_onto_frame(&frame, &rel);
    norm(&sub(&rel, &proj))
}

/// Outcome of a compass search.
#[derive(Clone, Debug)]
pub struct SearchResult {
    pub x: Vec<f64>,
    pub value: f64,
    pub evaluations: usize,
}

/// Deterministic compass (pattern) search: poll `x ± step·e_i`, move to the
/// best improving poll point, halve the step when nothing improves.
pub fn compass_search<F>(f: F, x0: &[f64], step0: f64, min_step: f64, max_evals: usize) -> SearchResult
where
    F: Fn(&[f64]) -> f64,
{
    let mut x = x0.to_vec();
    let mut fx = f(&x);
    let mut evals = 1;
    let mut step = step0;
    let mut trial = x.clone();
    while step > min_step && evals < max_evals {
        let mut best: Option<(usize, f64, f64)> = None;
        for i in 0..x.len() {
            for sign in [1.0, -1.0] {
                trial.copy_from_slice(&x);
                trial[i] += sign * step;
                let v = f(&trial);
                evals += 1;
                if v < fx && best.is_none_or(|(_, _, bv)| v < bv) {
                    best = Some((i, sign, v));
                }
            }
        }
        match best {
            Some((i, sign, v)) => {
                x[i] += sign * step;
                fx = v;
                // expand a little after a success
                step *= 1.5;
            }
            None => step *= 0.5,
        }
    }
    SearchResult { x, value: fx, evaluations: evals }
}

/// Real root of a strictly increasing cubic `a x³ + b x + c` (`a > 0`, `b ≥ 0`).
pub fn increasing_cubic_root(a: f64, b: f64, c: f64) -> f64 {
    let g = |x: f64| (a * x * x + b) * x + c;
    if c == 0.0 {
        return 0.0;
    }
    // bracket
    // with a > 0 and b ≥ 0 the root obeys a|x|³ ≤ |c| and b|x| ≤ |c|
    let cap = if b > 0.0 { c.abs() / b } else { f64::INFINITY };
    let r = (c.abs() / a).cbrt().min(cap) * (1.0 + 1e-12) + f64::MIN_POSITIVE;
    let (mut lo, mut hi) = if c > 0.0 { (-r, 0.0) } else { (0.0, r) };
    while g(lo) > 0.0 {
        lo *= 2.0;
    }
    while g(hi) < 0.0 {
        hi *= 2.0;
    }
    // Newton safeguarded by bisection
    let mut x = 0.5 * (lo + hi);
    for _ in 0..200 {
        let gx = g(x);
        if gx == 0.0 {
            return x;
        }
        if gx < 0.0 {
            lo = x;
        } else {
            hi = x;
        }
        let d = 3.0 * a * x * x + b;
        let mut nx = x - gx / d;
        if !(nx > lo && nx < hi) {
            nx = 0.5 * (lo + hi);
        }
        if (nx - x).abs() <= 1e-16 * (1.0 + x.abs()) || hi - lo <= 1e-16 * (1.0 + x.abs()) {
            return nx;
        }
        x = nx;
    }
    x
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn gram_schmidt_drops_dependent() {
        let f = gram_schmidt(&[vec![1.0, 1.0, 0.0], vec![2.0, 2.0, 0.0], vec![0.0, 1.0, 0.0]]);
        assert_eq!(f.len(), 2);
        assert!(dot(&f[0], &f[1]).abs() < 1e-14);
    }

    #[test]
    fn span_distance() {
        let a = [0.0, 0.0];
        let b = [1.0, 0.0];
        assert!((dist_to_affine_span(&[&a, &b], &[3.0, 4.0]) - 4.0).abs() < 1e-14);
        assert!((dist_to_affine_span(&[&a], &[3.0, 4.0]) - 5.0).abs() < 1e-14);
    }

    #[test]
    fn compass_finds_quadratic_min() {
        let r = compass_search(|x| (x[0] - 1.0).powi(2) + (x[1] + 2.0).powi(2), &[0.0, 0.0], 1.0, 1e-9, 10_000);
        assert!((r.x[0] - 1.0).abs() < 1e-6 && (r.x[1] + 2.0).abs() < 1e-6);
    }

    #[test]
    fn cubic_roots() {
        for &(a, b, c) in &[(4.0, 0.0, -4.0), (1.0, 3.0, 5.0), (4.0, 100.0, 1e-3), (4.0, 1e-8, 1e6)] {
            let x = increasing_cubic_root(a, b, c);
            let g = a * x * x * x + b * x + c;
            assert!(g.abs() < 1e-9 * (1.0 + c.abs()), "{a} {b} {c}: {x} -> {g}");
        }
    }
}
