//! Kernels built by tilting a reproduction distribution onto the distortion
//! balls.

use crate::model::{AlphaProfile, BallTable, ConditionalKernel};

use super::ProxyError;

/// Row `x` is `py` restricted to `B_d(x)` and renormalized.
pub fn construct_kernel_guaranteed(
    py: &[f64],
    ball: &BallTable,
) -> Result<ConditionalKernel, ProxyError> {
    let masses = ball.ball_masses(py);
    let mut rows = Vec::with_capacity(ball.m());
    for (x, &mass) in masses.iter().enumerate() {
        if mass <= 0.0 {
            return Err(ProxyError::ZeroBallMass(x));
        }
        rows.push(
            py.iter()
                .zip(ball.row(x))
                .map(|(&p, &inside)| if inside { p / mass } else { 0.0 })
                .collect(),
        );
    }
    Ok(ConditionalKernel::from_rows_unchecked(rows))
}

/// Row `x` puts mass `alpha(x)` on the ball and `1 - alpha(x)` on its
/// complement, each split proportionally to `py`.
///
/// A zero weight on a part with zero `py` mass contributes nothing, so
/// `alpha(x) = 1` with an empty-mass complement (or `alpha(x) = 0` with an
/// empty-mass ball) is allowed.
pub fn construct_kernel_cond(
    py: &[f64],
    ball: &BallTable,
    alpha: &AlphaProfile,
) -> Result<ConditionalKernel, ProxyError> {
    let masses = ball.ball_masses(py);
    let mut rows = Vec::with_capacity(ball.m());
    for (x, &inside_mass) in masses.iter().enumerate() {
        let a = alpha.alpha[x];
        let outside_mass = (1.0 - inside_mass).max(0.0);
        let inside_scale = if a > 0.0 {
            if inside_mass <= 0.0 {
                return Err(ProxyError::ZeroBallMass(x));
            }
            a / inside_mass
        } else {
            0.0
        };
        let outside_scale = if a < 1.0 {
            // The complement mass is recomputed directly to avoid cancellation
            // in `1 - inside_mass`.
            let direct: f64 = py
                .iter()
                .zip(ball.row(x))
                .filter(|(_, &inside)| !inside)
                .map(|(&p, _)| p)
                .sum();
            let mass = if direct > 0.0 { direct } else { outside_mass };
            if mass <= 0.0 {
                return Err(ProxyError::ZeroComplementMass(x));
            }
            (1.0 - a) / mass
        } else {
            0.0
        };
        let row: Vec<f64> = py
            .iter()
            .zip(ball.row(x))
            .map(|(&p, &inside)| p * if inside { inside_scale } else { outside_scale })
            .collect();
        rows.push(row);
    }
    Ok(ConditionalKernel::from_rows_unchecked(rows))
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    fn identity_balls(k: usize) -> BallTable {
        BallTable::from_incidence(
            (0..k).map(|i| (0..k).map(|j| i == j).collect()).collect(),
            0.0,
        )
    }

    fn triangle_balls() -> BallTable {
        BallTable::from_incidence(
            (0..3)
                .map(|x| (0..3).map(|y| y == x || y == (x + 1) % 3).collect())
                .collect(),
            1.0,
        )
    }

    #[test]
    fn guaranteed_identity() {
        let k = construct_kernel_guaranteed(&[0.5, 0.5], &identity_balls(2)).unwrap();
        assert_eq!(k.rows(), &[vec![1.0, 0.0], vec![0.0, 1.0]]);
    }

    #[test]
    fn guaranteed_triangle_rows_split_evenly() {
        let k = construct_kernel_guaranteed(&[1.0 / 3.0; 3], &triangle_balls()).unwrap();
        for x in 0..3 {
            assert_abs_diff_eq!(k.row(x)[x], 0.5, epsilon = 1e-15);
            assert_abs_diff_eq!(k.row(x)[(x + 1) % 3], 0.5, epsilon = 1e-15);
            assert_eq!(k.row(x)[(x + 2) % 3], 0.0);
        }
    }

    #[test]
    fn guaranteed_full_ball_copies_py() {
        let ball = BallTable::from_incidence(vec![vec![true, true]], 1.0);
        let k = construct_kernel_guaranteed(&[0.2, 0.8], &ball).unwrap();
        assert_abs_diff_eq!(k.row(0)[0], 0.2, epsilon = 1e-15);
        assert_abs_diff_eq!(k.row(0)[1], 0.8, epsilon = 1e-15);
    }

    #[test]
    fn guaranteed_zero_ball_mass() {
        let err = construct_kernel_guaranteed(&[1.0, 0.0], &identity_balls(2)).unwrap_err();
        assert!(matches!(err, ProxyError::ZeroBallMass(1)));
    }

    #[test]
    fn cond_with_unit_alpha_matches_guaranteed() {
        let py = [0.2, 0.5, 0.3];
        let ball = triangle_balls();
        let a = construct_kernel_cond(&py, &ball, &AlphaProfile::ones(3)).unwrap();
        let g = construct_kernel_guaranteed(&py, &ball).unwrap();
        for (ra, rg) in a.rows().iter().zip(g.rows()) {
            for (u, v) in ra.iter().zip(rg) {
                assert_abs_diff_eq!(u, v, epsilon = 1e-15);
            }
        }
    }

    #[test]
    fn cond_singleton_balls() {
        let alpha = AlphaProfile::from_eps(&[0.1, 0.1]);
        let k = construct_kernel_cond(&[0.5, 0.5], &identity_balls(2), &alpha).unwrap();
        assert_abs_diff_eq!(k.row(0)[0], 0.9, epsilon = 1e-15);
        assert_abs_diff_eq!(k.row(0)[1], 0.1, epsilon = 1e-15);
        assert_abs_diff_eq!(k.row(1)[0], 0.1, epsilon = 1e-15);
        assert_abs_diff_eq!(k.row(1)[1], 0.9, epsilon = 1e-15);
    }

    #[test]
    fn cond_complement_split_follows_py() {
        let ball = BallTable::from_incidence(vec![vec![true, false, false]], 0.0);
        let alpha = AlphaProfile {
            alpha: vec![0.8],
            q: 0.0,
        };
        let k = construct_kernel_cond(&[0.5, 0.25, 0.25], &ball, &alpha).unwrap();
        // 0.8 on the ball; 0.2 split over {y2, y3} in proportion 0.25 : 0.25.
        assert_abs_diff_eq!(k.row(0)[0], 0.8, epsilon = 1e-15);
        assert_abs_diff_eq!(k.row(0)[1], 0.1, epsilon = 1e-15);
        assert_abs_diff_eq!(k.row(0)[2], 0.1, epsilon = 1e-15);
    }

    #[test]
    fn cond_errors() {
        let ball = BallTable::from_incidence(vec![vec![true, false]], 0.0);
        let alpha = AlphaProfile {
            alpha: vec![0.5],
            q: 0.0,
        };
        assert!(matches!(
            construct_kernel_cond(&[1.0, 0.0], &ball, &alpha),
            Err(ProxyError::ZeroComplementMass(0))
        ));
        assert!(matches!(
            construct_kernel_cond(&[0.0, 1.0], &ball, &alpha),
            Err(ProxyError::ZeroBallMass(0))
        ));
        // alpha = 1 with an empty-mass complement resolves to zero outside.
        let k = construct_kernel_cond(&[1.0, 0.0], &ball, &AlphaProfile::ones(1)).unwrap();
        assert_eq!(k.row(0), &[1.0, 0.0]);
    }
}
