//! The rescaled negative-power potential `W(u) = c_γ u^{-γ} χ{u>0}` and the
//! constants derived from `γ`.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::quad;
use crate::scalar::Real;

/// Lower cut of the normalization quadrature; `[0, ε]` is integrated in closed form.
const NORMALIZATION_CUT: f64 = 1e-6;

/// `γ` together with `c_γ = (2-γ)²/16`, `α = 2/(2+γ)` and the amplitude `c*` of
/// the homogeneous profile `c* t^α`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct PotentialParams<T> {
    pub gamma: T,
    pub c_gamma: T,
    pub alpha: T,
    pub c_star: T,
}

impl<T: Real> PotentialParams<T> {
    pub fn new(gamma: T) -> Result<Self> {
        if !(gamma > T::zero() && gamma < T::of(2.0)) {
            return Err(Error::Domain(format!("gamma = {gamma} outside (0, 2)")));
        }
        let two = T::of(2.0);
        let c_gamma = (two - gamma).powi(2) / T::of(16.0);
        let alpha = two / (two + gamma);
        let lead = T::one() + gamma / two;
        let c_star = (lead * lead * c_gamma).powf(T::one() / (gamma + two));
        Ok(Self {
            gamma,
            c_gamma,
            alpha,
            c_star,
        })
    }

    /// Exponent `1 - γ/2` of the phase transform.
    #[inline]
    pub fn beta(&self) -> T {
        T::one() - self.gamma / T::of(2.0)
    }

    /// `W(u)`; zero on the dead set.
    pub fn w(&self, u: T) -> Result<T> {
        if u < T::zero() || u.is_nan() {
            return Err(Error::Domain(format!("W evaluated at u = {u} < 0")));
        }
        Ok(self.w_nonneg(u))
    }

    /// `W(u)` for `u >= 0` without the sign check.
    #[inline]
    pub fn w_nonneg(&self, u: T) -> T {
        if u > T::zero() {
            self.c_gamma * u.powf(-self.gamma)
        } else {
            T::zero()
        }
    }

    /// `W'(u) = -γ c_γ u^{-γ-1}`, only for `u > 0`.
    pub fn w_prime(&self, u: T) -> Result<T> {
        if !(u > T::zero()) {
            return Err(Error::Domain(format!("W' undefined at u = {u}")));
        }
        Ok(self.w_prime_pos(u))
    }

    #[inline]
    pub fn w_prime_pos(&self, u: T) -> T {
        -self.gamma * self.c_gamma * u.powf(-self.gamma - T::one())
    }

    /// `∫₀¹ 2√W(s) ds` by quadrature; equals one for every admissible `γ`.
    pub fn normalization_integral(&self) -> T {
        let cut = T::of(NORMALIZATION_CUT);
        let beta = self.beta();
        let root_c = self.c_gamma.sqrt();
        let two = T::of(2.0);
        // 2√c ∫₀^ε s^{-γ/2} ds
        let head = two * root_c * cut.powf(beta) / beta;
        let integrand = |s: T| two * self.w_nonneg(s).sqrt();
        let tail = quad::log_simpson(&integrand, cut, T::one(), T::of(1e-15));
        head + tail
    }

    /// `u^{1-γ/2}`, which tends to the indicator of `{u > 0}` as `γ → 2`.
    #[inline]
    pub fn phase_transform(&self, u: T) -> T {
        if u > T::zero() {
            u.powf(self.beta())
        } else {
            T::zero()
        }
    }

    /// The factor `c_γ^{1/(γ+2)}` mapping minimizers of the unscaled energy to
    /// minimizers of the rescaled one.
    pub fn e_to_j_scale(&self) -> T {
        self.c_gamma.powf(T::one() / (self.gamma + T::of(2.0)))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn p(g: f64) -> PotentialParams<f64> {
        PotentialParams::new(g).unwrap()
    }

    #[test]
    fn constants_at_gamma_one() {
        let q = p(1.0);
        assert_eq!(q.c_gamma, 1.0 / 16.0);
        assert!((q.alpha - 2.0 / 3.0).abs() < 1e-15);
        // (9/64)^{1/3}, mpmath at 30 digits
        assert!((q.c_star - 0.520020955762976).abs() < 1e-14);
    }

    #[test]
    fn constants_near_two() {
        let q = p(1.999);
        // 2 - 1.999 carries a 1e-13 relative rounding error
        assert!((q.c_gamma / 6.25e-8 - 1.0).abs() < 1e-10);
        assert!((q.alpha - 0.500125031257814).abs() < 1e-14);
    }

    #[test]
    fn rejects_gamma_outside_open_interval() {
        for g in [0.0, 2.0, -1.0, 2.5, f64::NAN] {
            assert!(matches!(PotentialParams::new(g), Err(Error::Domain(_))));
        }
    }

    #[test]
    fn potential_values() {
        let q = p(1.0);
        assert_eq!(q.w(0.0).unwrap(), 0.0);
        assert_eq!(q.w(1.0).unwrap(), 1.0 / 16.0);
        assert!((q.w(0.25).unwrap() - 0.25).abs() < 1e-15);
        assert!(q.w(-1e-3).is_err());
    }

    #[test]
    fn potential_derivative_values() {
        let q = p(1.0);
        assert!((q.w_prime(1.0).unwrap() + 1.0 / 16.0).abs() < 1e-15);
        assert!((q.w_prime(0.5).unwrap() + 0.25).abs() < 1e-15);
        assert!(q.w_prime(0.0).is_err());
        let mut last = q.w_prime(1.0).unwrap();
        for u in [2.0, 10.0, 100.0, 1e4] {
            let v = q.w_prime(u).unwrap();
            assert!(v < 0.0 && v > last);
            last = v;
        }
    }

    #[test]
    fn derivative_matches_centered_difference() {
        for g in [0.3, 1.0, 1.7, 1.95] {
            let q = p(g);
            for u in [0.1, 0.5, 1.0, 2.0] {
                let h = 1e-6 * u;
                let fd = (q.w(u + h).unwrap() - q.w(u - h).unwrap()) / (2.0 * h);
                let an = q.w_prime(u).unwrap();
                assert!(((fd - an) / an).abs() < 1e-6, "g={g} u={u}");
            }
        }
    }

    #[test]
    fn normalization_is_one() {
        for g in [0.1, 0.5, 1.0, 1.5, 1.9, 1.99] {
            let v = p(g).normalization_integral();
            assert!((v - 1.0).abs() < 1e-10, "gamma {g}: {v}");
        }
    }

    #[test]
    fn phase_transform_values() {
        let q = p(1.0);
        assert_eq!(q.phase_transform(0.0), 0.0);
        assert_eq!(q.phase_transform(1.0), 1.0);
        assert!((q.phase_transform(0.25) - 0.5).abs() < 1e-15);
    }

    #[test]
    fn e_to_j_scale_values() {
        assert!((p(1.0).e_to_j_scale() - 0.396850262992050).abs() < 1e-14);
        assert!((p(1.99).e_to_j_scale() - 0.049626000722262).abs() < 1e-13);
        let grid = [1.0, 1.5, 1.9, 1.99];
        for w in grid.windows(2) {
            assert!(p(w[1]).e_to_j_scale() < p(w[0]).e_to_j_scale());
        }
    }

    #[test]
    fn works_in_single_precision() {
        let q = PotentialParams::<f32>::new(1.0).unwrap();
        assert!((q.c_star - 0.520_021).abs() < 1e-5);
        assert!((q.normalization_integral() - 1.0).abs() < 1e-4);
    }

    proptest! {
        #[test]
        fn alpha_gamma_identity(g in 0.001f64..1.999) {
            let q = p(g);
            prop_assert!((q.alpha * (2.0 + g) - 2.0).abs() < 1e-14);
        }

        #[test]
        fn potential_is_convex_and_decreasing(
            g in 0.05f64..1.99,
            a in 0.01f64..5.0,
            d1 in 0.001f64..2.0,
            d2 in 0.001f64..2.0,
        ) {
            let q = p(g);
            let (u1, u2, u3) = (a, a + d1, a + d1 + d2);
            let (w1, w2, w3) = (q.w(u1).unwrap(), q.w(u2).unwrap(), q.w(u3).unwrap());
            prop_assert!(w1 > w2 && w2 > w3);
            let mid = 0.5 * (u1 + u3);
            prop_assert!(q.w(mid).unwrap() <= 0.5 * (w1 + w3) * (1.0 + 1e-12));
        }

        #[test]
        fn phase_transform_monotone_on_unit_interval(g in 0.05f64..1.99, a in 0.0f64..1.0, b in 0.0f64..1.0) {
            let q = p(g);
            let (lo, hi) = if a < b { (a, b) } else { (b, a) };
            let (tl, th) = (q.phase_transform(lo), q.phase_transform(hi));
            prop_assert!(tl <= th);
            prop_assert!((0.0..=1.0).contains(&tl) && (0.0..=1.0).contains(&th));
        }
    }
}
