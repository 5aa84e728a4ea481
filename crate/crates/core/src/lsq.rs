//! Small dense least-squares solvers: minimum-norm solves and box-constrained
//! least squares by a bounded-variable active-set iteration.

use nalgebra::{DMatrix, DVector};

/// Relative singular-value cutoff for minimum-norm solves.
pub const SV_CUTOFF: f64 = 1e-10;

/// Minimum-norm least-squares solution of `A x ≈ b`, discarding singular
/// values below `SV_CUTOFF · σ_max`.
pub fn min_norm_solve(a: &DMatrix<f64>, b: &DVector<f64>) -> DVector<f64> {
    let (m, n) = a.shape();
    if n == 0 {
        return DVector::zeros(0);
    }
    if m == 0 {
        return DVector::zeros(n);
    }
    let svd = a.clone().svd(true, true);
    let smax = svd.singular_values.max();
    if smax == 0.0 || !smax.is_finite() {
        return DVector::zeros(n);
    }
    svd.solve(b, SV_CUTOFF * smax)
        .expect("both singular vector sets were computed")
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum BoundState {
    Free,
    Lower,
    Upper,
}

#[derive(Clone, Debug, PartialEq)]
pub struct LsqSolution {
    pub x: DVector<f64>,
    /// `‖A x − b‖²`
    pub objective: f64,
    pub state: Vec<BoundState>,
    pub iterations: usize,
    /// Infinity norm of the gradient projected onto the feasible box.
    pub projected_gradient: f64,
    /// False when the iteration limit was hit before the KKT test passed.
    pub converged: bool,
}

/// Gradient of `‖A x − b‖²` projected onto the box: zero at a KKT point.
pub fn projected_gradient(
    a: &DMatrix<f64>,
    b: &DVector<f64>,
    x: &DVector<f64>,
    lo: &DVector<f64>,
    hi: &DVector<f64>,
) -> DVector<f64> {
    let g = 2.0 * a.transpose() * (a * x - b);
    DVector::from_fn(x.len(), |i, _| {
        if x[i] <= lo[i] && x[i] >= hi[i] {
            0.0
        } else if x[i] <= lo[i] {
            g[i].min(0.0)
        } else if x[i] >= hi[i] {
            g[i].max(0.0)
        } else {
            g[i]
        }
    })
}

/// Minimize `‖A x − b‖²` subject to `lo ≤ x ≤ hi`.
///
/// Starts from the clamped minimum-norm unconstrained solution, then
/// alternates a minimum-norm solve over the free variables (with a step back
/// to the box when it leaves it) and release of the bound variable whose
/// gradient most strongly points inward. Among multiple minimizers the free
/// block takes its minimum-norm value.
///
/// # Panics
/// On dimension mismatch or `lo > hi`.
pub fn bounded_least_squares(
    a: &DMatrix<f64>,
    b: &DVector<f64>,
    lo: &DVector<f64>,
    hi: &DVector<f64>,
) -> LsqSolution {
    let (m, n) = a.shape();
    assert_eq!(b.len(), m, "rhs length");
    assert_eq!(lo.len(), n, "lower bound length");
    assert_eq!(hi.len(), n, "upper bound length");
    assert!(
        (0..n).all(|i| lo[i] <= hi[i]),
        "lower bound above upper bound"
    );

    let a_norm = a.norm();

    let mut x = min_norm_solve(a, b);
    let mut state = vec![BoundState::Free; n];
    for i in 0..n {
        if x[i] <= lo[i] {
            x[i] = lo[i];
            state[i] = BoundState::Lower;
        } else if x[i] >= hi[i] {
            x[i] = hi[i];
            state[i] = BoundState::Upper;
        }
    }

    let max_iter = 20 * (n + 1) * (n + 1);
    let mut iterations = 0;
    let mut last_released: Option<usize> = None;
    let mut converged = false;
    while iterations < max_iter {
        iterations += 1;
        // Inner loop: optimize the free block, stepping back into the box.
        loop {
            let free: Vec<usize> = (0..n).filter(|&i| state[i] == BoundState::Free).collect();
            if free.is_empty() {
                break;
            }
            let mut r = b.clone();
            for i in 0..n {
                if state[i] != BoundState::Free {
                    r.axpy(-x[i], &a.column(i), 1.0);
                }
            }
            let af = a.select_columns(free.iter());
            let z = min_norm_solve(&af, &r);
            let mut alpha = 1.0_f64;
            let mut blocked = false;
            for (k, &i) in free.iter().enumerate() {
                let d = z[k] - x[i];
                let t = if z[k] > hi[i] {
                    (hi[i] - x[i]) / d
                } else if z[k] < lo[i] {
                    (lo[i] - x[i]) / d
                } else {
                    continue;
                };
                blocked = true;
                alpha = alpha.min(t.clamp(0.0, 1.0));
            }
            if !blocked {
                for (k, &i) in free.iter().enumerate() {
                    x[i] = z[k];
                }
                break;
            }
            for (k, &i) in free.iter().enumerate() {
                x[i] += alpha * (z[k] - x[i]);
            }
            // Pin every variable that reached (or crossed) a bound.
            for (k, &i) in free.iter().enumerate() {
                let span = (hi[i] - lo[i]).abs().max(1.0);
                if z[k] > hi[i] && x[i] >= hi[i] - 1e-14 * span {
                    x[i] = hi[i];
                    state[i] = BoundState::Upper;
                } else if z[k] < lo[i] && x[i] <= lo[i] + 1e-14 * span {
                    x[i] = lo[i];
                    state[i] = BoundState::Lower;
                }
            }
        }

        // KKT test on the bound variables.
        let g = 2.0 * a.transpose() * (a * &x - b);
        let kkt_tol = 1e-12 * (a_norm * (b.norm() + a_norm * x.norm()) + f64::MIN_POSITIVE);
        let mut worst: Option<(usize, f64)> = None;
        for i in 0..n {
            if lo[i] == hi[i] {
                continue;
            }
            let violation = match state[i] {
                BoundState::Lower => -g[i],
                BoundState::Upper => g[i],
                BoundState::Free => continue,
            };
            if violation > kkt_tol && worst.is_none_or(|(_, v)| violation > v) {
                worst = Some((i, violation));
            }
        }
        match worst {
            None => {
                converged = true;
                break;
            }
            Some((i, _)) => {
                if last_released == Some(i) && iterations > 2 * n + 2 {
                    // Released and immediately re-pinned: numerically at optimum.
                    converged = true;
                    break;
                }
                state[i] = BoundState::Free;
                last_released = Some(i);
            }
        }
    }

    let resid = a * &x - b;
    let pg = projected_gradient(a, b, &x, lo, hi);
    LsqSolution {
        objective: resid.norm_squared(),
        projected_gradient: pg.amax(),
        x,
        state,
        iterations,
        converged,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use proptest::prelude::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn identity_projection() {
        let a = DMatrix::identity(6, 6);
        let b = DVector::from_vec(vec![1.0, -2.0, 3.0, 0.5, 0.0, -0.1]);
        let lo = DVector::from_element(6, -10.0);
        let hi = DVector::from_element(6, 10.0);
        let s = bounded_least_squares(&a, &b, &lo, &hi);
        assert_relative_eq!(s.x, b, epsilon = 1e-14);
        let hi = DVector::from_element(6, 1.0);
        let s = bounded_least_squares(&a, &b, &lo, &hi);
        assert_eq!(s.x[2], 1.0);
        assert_eq!(s.state[2], BoundState::Upper);
        assert_relative_eq!(s.x[1], -2.0, epsilon = 1e-14);
    }

    #[test]
    fn rank_deficient_gives_min_norm() {
        // Two identical columns: any split summing to 2 is optimal.
        let a = DMatrix::from_row_slice(1, 2, &[1.0, 1.0]);
        let b = DVector::from_vec(vec![2.0]);
        let lo = DVector::from_element(2, -5.0);
        let hi = DVector::from_element(2, 5.0);
        let s = bounded_least_squares(&a, &b, &lo, &hi);
        assert_relative_eq!(s.x[0], 1.0, epsilon = 1e-12);
        assert_relative_eq!(s.x[1], 1.0, epsilon = 1e-12);
    }

    #[test]
    fn min_norm_underdetermined() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let a = DMatrix::from_fn(3, 7, |_, _| rng.random_range(-1.0..1.0));
        let b = DVector::from_fn(3, |_, _| rng.random_range(-1.0..1.0));
        let x = min_norm_solve(&a, &b);
        assert!((&a * &x - &b).norm() < 1e-12);
        // x lies in the row space, so it is orthogonal to the null space.
        let svd = a.clone().svd(true, true);
        let vt = svd.v_t.unwrap();
        let proj = vt.transpose() * (&vt * &x);
        assert_relative_eq!(proj, x, epsilon = 1e-12);
    }

    fn random_problem(
        seed: u64,
        m: usize,
        n: usize,
    ) -> (DMatrix<f64>, DVector<f64>, DVector<f64>, DVector<f64>) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let a = DMatrix::from_fn(m, n, |_, _| rng.random_range(-2.0..2.0));
        let b = DVector::from_fn(m, |_, _| rng.random_range(-5.0..5.0));
        let lo = DVector::from_fn(n, |_, _| rng.random_range(-1.5..0.0));
        let hi = DVector::from_fn(n, |i, _| lo[i] + rng.random_range(0.0..2.0));
        (a, b, lo, hi)
    }

    proptest! {
        #[test]
        fn kkt_holds(seed in 0u64..10_000, m in 1usize..9, n in 1usize..8) {
            let (a, b, lo, hi) = random_problem(seed, m, n);
            let s = bounded_least_squares(&a, &b, &lo, &hi);
            let scale = 1.0 + a.norm() * (b.norm() + a.norm() * s.x.norm());
            prop_assert!(s.projected_gradient <= 1e-8 * scale, "pg {} scale {}", s.projected_gradient, scale);
            for i in 0..n {
                prop_assert!(s.x[i] >= lo[i] && s.x[i] <= hi[i]);
            }
        }

        #[test]
        fn scale_equivariant(seed in 0u64..10_000, s in 0.01f64..100.0) {
            let (a, b, lo, hi) = random_problem(seed, 6, 4);
            let x1 = bounded_least_squares(&a, &b, &lo, &hi).x;
            let x2 = bounded_least_squares(&(&a * s), &(&b * s), &lo, &hi).x;
            prop_assert!((x1 - x2).amax() < 1e-8);
        }
    }
}
